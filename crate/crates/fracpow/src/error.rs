//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("alpha must lie in (0,1), got {0}")]
    AlphaOutOfRange(f64),

    #[error("matrix is not symmetric: entry ({i},{j}) = {a} has no match within tolerance (transpose value {b})")]
    NotSymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("mass diagonal entry {index} is not strictly positive: {value}")]
    NonPositiveMass { index: usize, value: f64 },

    #[error("invalid spectral bounds: lambda_min = {min}, lambda_max = {max}")]
    InvalidBounds { min: f64, max: f64 },

    #[error("pole {pole} is not strictly negative")]
    NonNegativePole { pole: f64 },

    #[error("coincident poles {a} and {b} (separation below 1e-13)")]
    CoincidentPoles { a: f64, b: f64 },

    #[error("evaluation at a pole: scaled argument {z} hits pole {pole}")]
    PoleEvaluation { z: f64, pole: f64 },

    #[error("complex pole detected: {re} + {im}i")]
    ComplexPole { re: f64, im: f64 },

    #[error("coefficient sign pattern violated: {0}")]
    SignPattern(String),

    #[error("rational function is improper (no finite value at infinity)")]
    ImproperRational,

    #[error("nonpositive coefficient sample at x = {x}: {value}")]
    NonPositiveCoefficient { x: f64, value: f64 },

    #[error("degenerate mesh: nodes {a} and {b} coincide or are out of order")]
    DegenerateMesh { a: f64, b: f64 },

    #[error("solver stalled after {iterations} iterations, relative residual {residual:.3e} (target {target:.3e})")]
    SolverStall {
        iterations: usize,
        residual: f64,
        target: f64,
    },

    #[error("shifted solve requires a nonnegative shift, got {0}")]
    NegativeShift(f64),

    #[error("exponent overflow in quadrature construction: {0}")]
    ExponentOverflow(String),

    #[error("eigenvalue solve failed: {0}")]
    EigenFailure(String),

    #[error("problem too large for a dense solve: N = {n} exceeds {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("pseudo-time shift {delta} exceeds lambda_min {lambda_min}")]
    DeltaTooLarge { delta: f64, lambda_min: f64 },

    #[error("Pade degree {0} unsupported (expected 1..=4)")]
    PadeDegree(usize),

    #[error("state norm exceeded {factor:.1e} x initial at step {step}; scheme is unstable for this step size")]
    BlowUp { step: usize, factor: f64 },

    #[error("series tail bound {bound:.3e} exceeds the requested tolerance {tol:.3e} at J = {j}")]
    TailBound { bound: f64, tol: f64, j: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
