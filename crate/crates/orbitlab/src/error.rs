//! Error surface shared by every module.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("chart singularity at theta = {theta}")]
    ChartDomain { theta: f64 },
    #[error("point at angular distance {dist} is inside the barrier wall")]
    InfinitePotential { dist: f64 },
    #[error("motion is not librating (circulating or equilibrium)")]
    NotLibrating,
    #[error("circles do not intersect: |R - r| <= d <= R + r violated")]
    NoIntersection,
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("step size floor {floor} reached at t = {t}")]
    StepSizeFloor { t: f64, floor: f64 },
    #[error("root finding failed to converge after {0} iterations")]
    NonConvergence(usize),
}

pub type Result<T> = std::result::Result<T, OrbitError>;
