use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use puw::solver::{AnnealSchedule, SweepOrder};
use puw::synth::{generate, wrap_surface, TerrainSpec};
use puw::{
    anneal, curl, entropy_map, evaluate, greedy_shift_field, hybrid_unwrap, integrate, lsq_unwrap,
    ModelParams, UnwrappedSurface, WrappedImage,
};
use puw::{io, oracle};

use crate::exit::{Context, Failure, CURL_VIOLATIONS};
use crate::{Command, UnwrapArgs};

type Outcome = Result<ExitCode, Failure>;

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Synth {
            spec,
            out_surface,
            out_wrapped,
            out_shifts,
        } => {
            let spec = match spec {
                Some(path) => std::fs::read_to_string(&path)
                    .at(&path)?
                    .parse::<TerrainSpec>()
                    .at(&path)?,
                None => TerrainSpec::default(),
            };
            let surface = generate(&spec)?;
            let (img, shifts) = wrap_surface(&surface)?;
            save(&out_surface, |w| io::write_raster(w, &surface.psi))?;
            save(&out_wrapped, |w| io::write_raster(w, img.phi()))?;
            save(&out_shifts, |w| io::write_shifts(w, &shifts))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Unwrap(args) => unwrap(args),
        Command::Lsq { input, out_surface } => {
            let img = load_image(&input)?;
            let surface = lsq_unwrap(&img)?;
            save(&out_surface, |w| io::write_raster(w, &surface.psi))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Hybrid {
            input,
            shifts,
            out_surface,
        } => {
            let img = load_image(&input)?;
            let shifts = load(&shifts, io::read_shifts)?;
            let surface = hybrid_unwrap(&img, &shifts)?;
            save(&out_surface, |w| io::write_raster(w, &surface.psi))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { truth, estimate } => {
            let truth = UnwrappedSurface::new(load(&truth, io::read_raster)?);
            let estimate = UnwrappedSurface::new(load(&estimate, io::read_raster)?);
            let m = evaluate(&truth, &estimate)?;
            println!("exact_match={}", m.exact_match);
            println!("rmse={}", m.rmse);
            println!("max_abs_deviation={}", m.max_abs_deviation);
            println!("offset={}", m.offset);
            println!("wrapped_rmse={}", m.wrapped_rmse);
            Ok(ExitCode::SUCCESS)
        }
        Command::Entropy {
            beliefs_report,
            out,
        } => {
            let q = load(&beliefs_report, io::read_beliefs)?;
            write_entropy(&out, &q)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { input, sigma, temp } => {
            let img = load_image(&input)?;
            let post = oracle::enumerate(&img, &ModelParams::new(temp, sigma)?)?;
            println!("Z={}", post.partition_value());
            println!("log_Z={}", post.log_partition());
            println!("configurations={}", post.len());
            println!("map_probability={}", post.map_probability());
            let map = post.map_config();
            println!(
                "map_a={}",
                rows_of(map.a().rows().into_iter().map(|r| r.to_vec()))
            );
            println!(
                "map_b={}",
                rows_of(map.b().rows().into_iter().map(|r| r.to_vec()))
            );
            let m = post.edge_marginals();
            for ((i, j), t) in m.alpha().indexed_iter() {
                println!("marginal_a[{i}][{j}]={},{},{}", t[0], t[1], t[2]);
            }
            for ((i, j), t) in m.beta().indexed_iter() {
                println!("marginal_b[{i}][{j}]={},{},{}", t[0], t[1], t[2]);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Greedy { input, out_shifts } => {
            let img = load_image(&input)?;
            let shifts = greedy_shift_field(&img);
            println!("curl_violations={}", curl(&shifts).violation_count);
            if let Some(path) = out_shifts {
                save(&path, |w| io::write_shifts(w, &shifts))?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn unwrap(args: UnwrapArgs) -> Outcome {
    let img = load_image(&args.input)?;
    let mut schedule = AnnealSchedule::geometric(
        args.t_start,
        args.t_end,
        args.t_steps,
        args.sweeps,
        args.tol,
    )?;
    if args.random_order {
        schedule = schedule.with_order(SweepOrder::Shuffled { seed: args.seed });
    }
    let report = anneal(&img, &schedule, args.sigma)?;

    if let Some(path) = &args.report {
        save(path, |w| io::write_report(w, &report.records))?;
    }
    if let Some(path) = &args.out_shifts {
        save(path, |w| io::write_shifts(w, &report.shifts))?;
    }
    if let Some(path) = &args.out_beliefs {
        save(path, |w| io::write_beliefs(w, &report.beliefs))?;
    }
    if let Some(path) = &args.out_entropy {
        write_entropy(path, &report.beliefs)?;
    }

    let violations = report.final_violations();
    println!("temperatures={}", report.records.len());
    println!("converged={}", report.converged);
    println!("curl_violations={violations}");
    if violations > 0 {
        eprintln!(
            "puw: {violations} curl violations remain; no surface written (try `puw hybrid` with the shifts)"
        );
        return Ok(ExitCode::from(CURL_VIOLATIONS));
    }
    let surface = integrate(&img, &report.shifts)?;
    save(&args.out_surface, |w| io::write_raster(w, &surface.psi))?;
    Ok(ExitCode::SUCCESS)
}

fn write_entropy(path: &Path, q: &puw::BeliefField) -> Result<(), Failure> {
    let per_pixel = entropy_map(q).per_pixel();
    let mut scale = (0.0, 0.0);
    save(path, |w| {
        scale = io::write_pgm(w, &per_pixel, true)?;
        Ok(())
    })?;
    eprintln!("entropy scale: white={} black={} nats", scale.0, scale.1);
    Ok(())
}

fn rows_of(rows: impl Iterator<Item = Vec<i8>>) -> String {
    rows.map(|r| r.iter().map(i8::to_string).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join(";")
}

fn load<T>(
    path: &Path,
    read: impl FnOnce(&mut BufReader<File>) -> puw::Result<T>,
) -> Result<T, Failure> {
    let mut r = BufReader::new(File::open(path).at(path)?);
    read(&mut r).at(path)
}

fn load_image(path: &Path) -> Result<WrappedImage, Failure> {
    let raster = load(path, io::read_raster)?;
    WrappedImage::new(raster).at(path)
}

fn save(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> puw::Result<()>,
) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path).at(path)?);
    write(&mut w).at(path)?;
    w.flush().at(path)
}
