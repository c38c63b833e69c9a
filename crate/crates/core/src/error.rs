use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("x = {x} lies outside the profile interval [-{half_length}, {half_length}]")]
    OutOfDomain { x: f64, half_length: f64 },
    #[error("grid needs at least 8 points per direction, got {n_theta} x {n_x}")]
    GridTooSmall { n_theta: usize, n_x: usize },
    #[error("grid shape {n_theta} x {n_x} does not match {len} samples")]
    GridShape { n_theta: usize, n_x: usize, len: usize },
    #[error("closed-form zero modes exist only for m in {{0, 1}}, got m = {0}")]
    NoClosedForm(u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Sturm count failed: singular pivot persisted after {retries} shift retries")]
    SingularPivot { retries: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
