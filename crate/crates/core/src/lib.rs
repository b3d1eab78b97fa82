//! Two-dimensional phase unwrapping by factorized variational inference.
//!
//! Phases are measured modulo a unit wavelength. Unwrapping is posed as
//! inference over the integer shifts between neighbouring pixels in a Markov
//! random field whose prior penalises non-zero curl around every 2x2
//! plaquette. A fully factorized belief over the shifts is fitted by
//! minimizing the variational free energy while the prior temperature is
//! annealed towards zero; the most probable shifts are then integrated into
//! a surface.
//!
//! The crate also ships the pieces needed to check that machinery: exact
//! enumeration on tiny grids ([`oracle`]), the classic least-squares
//! unwrapper and the hybrid that feeds inferred shifts into it ([`lsq`]),
//! synthetic terrain with known ground truth ([`synth`]) and the on-disk
//! formats used by the command-line tool ([`io`]).

pub mod grid;
pub mod io;
pub mod lsq;
pub mod model;
pub mod oracle;
pub mod solver;
pub mod synth;

mod error;

pub use error::{Error, Result};
pub use grid::{
    curl, greedy_shift_field, integrate, local_shift_guess, wrap, CurlMap, GradientField,
    ShiftField, UnwrappedSurface, WrappedImage,
};
pub use lsq::{hybrid_unwrap, lsq_unwrap, wrapped_gradient};
pub use model::{free_energy, joint_energy, BeliefField, ModelParams};
pub use solver::{anneal, entropy_map, extract_map_shifts, AnnealSchedule, SolveReport};
pub use synth::{evaluate, generate, wrap_surface, Metrics, TerrainSpec};
