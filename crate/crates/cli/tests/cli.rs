use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ndarray::{array, Array2};
use puw::io::{read_raster, read_shifts, write_raster};
use puw::oracle::enumerate;
use puw::synth::TerrainSpec;
use puw::{ModelParams, WrappedImage};
use tempfile::TempDir;

fn puw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_puw"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

struct Dir(TempDir);

impl Dir {
    fn new() -> Self {
        Dir(tempfile::tempdir().unwrap())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_owned()
    }

    fn synth(&self, spec: &TerrainSpec) -> Output {
        std::fs::write(self.path("spec"), spec.to_config()).unwrap();
        puw(&[
            "synth",
            "--spec",
            &self.s("spec"),
            "--out-surface",
            &self.s("truth"),
            "--out-wrapped",
            &self.s("wrapped"),
            "--out-shifts",
            &self.s("shifts"),
        ])
    }

    fn write_raster(&self, name: &str, r: &Array2<f64>) {
        let mut buf = Vec::new();
        write_raster(&mut buf, r).unwrap();
        std::fs::write(self.path(name), buf).unwrap();
    }
}

fn raster(path: &Path) -> Array2<f64> {
    read_raster(&mut std::io::BufReader::new(
        std::fs::File::open(path).unwrap(),
    ))
    .unwrap()
}

#[test]
fn synth_default_writes_three_headers() {
    let d = Dir::new();
    let out = puw(&[
        "synth",
        "--out-surface",
        &d.s("t"),
        "--out-wrapped",
        &d.s("w"),
        "--out-shifts",
        &d.s("s"),
    ]);
    assert_eq!(code(&out), 0);
    assert!(std::fs::read(d.path("t"))
        .unwrap()
        .starts_with(b"PUW1 100 100\n"));
    assert!(std::fs::read(d.path("w"))
        .unwrap()
        .starts_with(b"PUW1 100 100\n"));
    assert!(std::fs::read(d.path("s"))
        .unwrap()
        .starts_with(b"PUWS1 100 100\n"));
}

#[test]
fn synth_rejects_cliffs_and_bad_specs() {
    let d = Dir::new();
    let cliff = TerrainSpec {
        slope_x: 1.7,
        ..TerrainSpec::smooth(10, 10)
    };
    let out = d.synth(&cliff);
    assert_eq!(code(&out), 4);
    assert!(!out.stderr.is_empty());
    std::fs::write(d.path("spec"), "rows = 10\ncols = ten\n").unwrap();
    let out = puw(&[
        "synth",
        "--spec",
        &d.s("spec"),
        "--out-surface",
        &d.s("a"),
        "--out-wrapped",
        &d.s("b"),
        "--out-shifts",
        &d.s("c"),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn eval_of_identical_files() {
    let d = Dir::new();
    assert_eq!(code(&d.synth(&TerrainSpec::smooth(12, 12))), 0);
    let out = puw(&[
        "eval",
        "--truth",
        &d.s("truth"),
        "--estimate",
        &d.s("truth"),
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("exact_match=true\n"));
    assert!(text.contains("rmse=0\n"));
}

#[test]
fn hybrid_with_clean_shifts_matches_unwrap() {
    let d = Dir::new();
    d.synth(&TerrainSpec::smooth(24, 24));
    let out = puw(&[
        "unwrap",
        "--in",
        &d.s("wrapped"),
        "--out-surface",
        &d.s("mf"),
        "--out-shifts",
        &d.s("mfs"),
    ]);
    assert_eq!(code(&out), 0);
    let out = puw(&[
        "hybrid",
        "--in",
        &d.s("wrapped"),
        "--shifts",
        &d.s("mfs"),
        "--out-surface",
        &d.s("hy"),
    ]);
    assert_eq!(code(&out), 0);
    let diff = raster(&d.path("mf")) - raster(&d.path("hy"));
    let m = diff.mean().unwrap();
    assert!(diff.iter().all(|v| (v - m).abs() < 1e-6));
}

#[test]
fn huge_temperature_matches_greedy() {
    let d = Dir::new();
    d.synth(&TerrainSpec::smooth(30, 20));
    let out = puw(&[
        "unwrap",
        "--in",
        &d.s("wrapped"),
        "--t-steps",
        "1",
        "--t-start",
        "1e6",
        "--out-surface",
        &d.s("mf"),
        "--out-shifts",
        &d.s("mfs"),
    ]);
    assert!(matches!(code(&out), 0 | 3));
    assert_eq!(
        code(&puw(&[
            "greedy",
            "--in",
            &d.s("wrapped"),
            "--out-shifts",
            &d.s("gs")
        ])),
        0
    );
    assert_eq!(
        std::fs::read(d.path("mfs")).unwrap(),
        std::fs::read(d.path("gs")).unwrap()
    );
}

#[test]
fn truncated_run_exits_3_with_shifts_and_report() {
    let d = Dir::new();
    d.synth(&TerrainSpec::hard(100, 100, 2));
    let out = puw(&[
        "unwrap",
        "--in",
        &d.s("wrapped"),
        "--t-end",
        "0.2",
        "--t-steps",
        "15",
        "--out-surface",
        &d.s("mf"),
        "--out-shifts",
        &d.s("mfs"),
        "--report",
        &d.s("r.csv"),
        "--out-beliefs",
        &d.s("q"),
        "--out-entropy",
        &d.s("e.pgm"),
    ]);
    assert_eq!(code(&out), 3);
    assert!(!d.path("mf").exists());
    let shifts = read_shifts(&mut std::io::BufReader::new(
        std::fs::File::open(d.path("mfs")).unwrap(),
    ))
    .unwrap();
    assert!(puw::curl(&shifts).violation_count > 0);
    let report = std::fs::read_to_string(d.path("r.csv")).unwrap();
    assert_eq!(report.lines().count(), 16);
    assert!(!report.lines().last().unwrap().ends_with(",0,0"));
    let out = puw(&[
        "entropy",
        "--beliefs-report",
        &d.s("q"),
        "--out",
        &d.s("e2.pgm"),
    ]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("entropy scale"));
    assert_eq!(
        std::fs::read(d.path("e.pgm")).unwrap(),
        std::fs::read(d.path("e2.pgm")).unwrap()
    );
    assert!(std::fs::read(d.path("e.pgm"))
        .unwrap()
        .starts_with(b"P5\n100 100\n255\n"));
}

#[test]
fn runs_are_byte_reproducible() {
    let d = Dir::new();
    d.synth(&TerrainSpec::hard(40, 40, 3));
    for tag in ["a", "b"] {
        let out = puw(&[
            "unwrap",
            "--in",
            &d.s("wrapped"),
            "--random-order",
            "--seed",
            "9",
            "--out-surface",
            &d.s(&format!("{tag}.s")),
            "--out-shifts",
            &d.s(&format!("{tag}.k")),
            "--report",
            &d.s(&format!("{tag}.csv")),
        ]);
        assert!(matches!(code(&out), 0 | 3));
    }
    for ext in ["k", "csv"] {
        assert_eq!(
            std::fs::read(d.path(&format!("a.{ext}"))).unwrap(),
            std::fs::read(d.path(&format!("b.{ext}"))).unwrap()
        );
    }
}

#[test]
fn oracle_reports_the_enumeration() {
    let d = Dir::new();
    let phi = array![[0.2, 0.8], [0.4, 0.6]];
    d.write_raster("tiny", &phi);
    let out = puw(&[
        "oracle",
        "--in",
        &d.s("tiny"),
        "--sigma",
        "0.3",
        "--temp",
        "0.5",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let post = enumerate(
        &WrappedImage::new(phi).unwrap(),
        &ModelParams::new(0.5, 0.3).unwrap(),
    )
    .unwrap();
    assert!(text.contains(&format!("Z={}\n", post.partition_value())));
    assert!(text.contains("configurations=81\n"));
    let m = post.edge_marginals().alpha()[(0, 0)];
    assert!(text.contains(&format!("marginal_a[0][0]={},{},{}\n", m[0], m[1], m[2])));
    let map = post.map_config();
    assert!(text.contains(&format!("map_a={};{}\n", map.a()[(0, 0)], map.a()[(1, 0)])));

    d.write_raster("big", &Array2::zeros((3, 4)));
    assert_eq!(code(&puw(&["oracle", "--in", &d.s("big")])), 4);
}

#[test]
fn exit_codes() {
    let d = Dir::new();
    d.synth(&TerrainSpec::smooth(8, 8));
    let input = d.s("wrapped");
    let unwrap = |extra: &[&str]| {
        let mut args = vec!["unwrap", "--in", &input, "--out-surface", "/dev/null"];
        args.extend_from_slice(extra);
        code(&puw(&args))
    };
    assert_eq!(unwrap(&["--sigma", "0"]), 4);
    assert_eq!(unwrap(&["--t-start", "0.01", "--t-end", "1"]), 4);
    assert_eq!(unwrap(&["--sweeps", "0"]), 4);
    assert_eq!(unwrap(&["--sigma", "abc"]), 4);
    assert_eq!(
        code(&puw(&[
            "lsq",
            "--in",
            &d.s("nope"),
            "--out-surface",
            &d.s("x")
        ])),
        2
    );
    std::fs::write(d.path("bad"), b"PUW1 2 2\nshort").unwrap();
    assert_eq!(
        code(&puw(&[
            "lsq",
            "--in",
            &d.s("bad"),
            "--out-surface",
            &d.s("x")
        ])),
        2
    );
    d.write_raster("oob", &array![[0.0, 1.5], [0.2, 0.3]]);
    assert_eq!(
        code(&puw(&[
            "lsq",
            "--in",
            &d.s("oob"),
            "--out-surface",
            &d.s("x")
        ])),
        2
    );
    assert_eq!(
        code(&puw(&[
            "hybrid",
            "--in",
            &d.s("wrapped"),
            "--shifts",
            &d.s("truth"),
            "--out-surface",
            &d.s("x")
        ])),
        2
    );
    assert_eq!(code(&puw(&["--help"])), 0);
}
