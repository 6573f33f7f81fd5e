use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("box axis {axis} is not commensurate with eps = 2^-{level}: {detail}")]
    NonCommensurateBox {
        axis: usize,
        level: u32,
        detail: String,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("open set is unbounded or leaves the grid box: {0}")]
    InvalidOmega(String),
    #[error("open set contains no lattice node")]
    EmptyDomain,
    #[error("grid functions live on incompatible grids")]
    IncompatibleGrids,
    #[error("grid functions live on different domains")]
    MismatchedDomains,
    #[error("domain is one cell thick along axis {axis} at node {node:?}")]
    ThinDomain {
        axis: usize,
        node: alloc::vec::Vec<i64>,
    },
    #[error("point lies outside the open set: {0}")]
    OutsideDomain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("test field support is not compactly contained in the open set")]
    SupportNotContained,
    #[error("empty test family")]
    EmptyFamily,
    #[error("window under-resolves monad proxy (window {window} <= eps {eps})")]
    WindowTooSmall { window: f64, eps: f64 },
    #[error("nonlinearity has no declared limit at infinity")]
    MissingLimit,
    #[error("not a Young measure at this cell (mass deficit {deficit})")]
    NotYoungMeasure { deficit: f64 },
    #[error("mixture weights are not a probability vector: {0}")]
    BadMixture(String),
    #[error("flux violates the standing hypotheses: {0}")]
    HypothesisViolation(String),
    #[error("initial data is negative at {0:?}")]
    NegativeInitialData(alloc::vec::Vec<f64>),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("time step {dt} exceeds the stability limit {limit}")]
    TimeStepTooLarge { dt: f64, limit: f64 },
    #[error("sup norm {max} exceeded blow-up guard {guard} at t = {t}")]
    BlowUp { t: f64, max: f64, guard: f64 },
    #[error("linear solve did not converge: residual {residual} after {iterations} iterations")]
    SolveDiverged { residual: f64, iterations: usize },
    #[error("nonlinearity g is decreasing near {0}")]
    DecreasingEntropyFunction(f64),
    #[error("test function is not admissible: {0}")]
    BadTestFunction(String),
    #[error("missing extraction for snapshot {0}")]
    MissingExtraction(usize),
}
