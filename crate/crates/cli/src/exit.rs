use std::fmt::Display;
use std::path::Path;

pub const CURL_VIOLATIONS: u8 = 3;
pub const IO_OR_FORMAT: u8 = 2;
pub const INVALID_PARAMETERS: u8 = 4;
const OTHER: u8 = 1;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Display) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

fn code_for(e: &puw::Error) -> u8 {
    use puw::Error::*;
    match e {
        Io(_)
        | Format(_)
        | GridTooSmall { .. }
        | PhaseOutOfRange { .. }
        | NonFinite(_)
        | ShapeMismatch(_)
        | InvalidShift(_)
        | InvalidBelief { .. } => IO_OR_FORMAT,
        InvalidParameter(_) | GridTooLarge { .. } | NotSmooth { .. } | DifferenceOutOfRange(_) => {
            INVALID_PARAMETERS
        }
        CurlViolations(_) => CURL_VIOLATIONS,
        _ => OTHER,
    }
}

impl From<puw::Error> for Failure {
    fn from(e: puw::Error) -> Self {
        Self::new(code_for(&e), e)
    }
}

pub trait Context<T> {
    /// Prefix the error with the file it concerns.
    fn at(self, path: &Path) -> Result<T, Failure>;
}

impl<T> Context<T> for puw::Result<T> {
    fn at(self, path: &Path) -> Result<T, Failure> {
        self.map_err(|e| Failure::new(code_for(&e), format!("{}: {e}", path.display())))
    }
}

impl<T> Context<T> for std::io::Result<T> {
    fn at(self, path: &Path) -> Result<T, Failure> {
        self.map_err(|e| Failure::new(IO_OR_FORMAT, format!("{}: {e}", path.display())))
    }
}
