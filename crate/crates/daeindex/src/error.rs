use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DaeError {
    #[error("segments leave a gap or overlap near t = {0}")]
    GapOrOverlap(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("smoothness violated at t = {breakpoint}: derivative {order} jumps by {mismatch:.3e}")]
    SmoothnessViolation {
        breakpoint: f64,
        order: usize,
        mismatch: f64,
    },
    #[error("t = {0} lies outside the problem interval")]
    OutOfDomain(f64),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("pre-regularity lost at level {level} (t = {t})")]
    PreRegularityLost { level: usize, t: f64 },
    #[error("no termination within {0} levels")]
    MaxLevelExceeded(usize),
    #[error("rank decision ambiguous: {0}")]
    RankAmbiguous(String),
    #[error("strangeness level {level} has {v} vanishing equations")]
    NonZeroVanishing { level: usize, v: usize },
    #[error("chain level {level}: ker G_i meets earlier null spaces (u = {u})")]
    NonzeroIntersection { level: usize, u: usize },
    #[error("derivative array of order {0} needs more smoothness than declared at this breakpoint")]
    InsufficientSmoothness(usize),
    #[error("[E_[{0}] F_[{0}]] lacks full row rank")]
    SolvabilityViolated(usize),
    #[error("{kind} undefined: {reason}")]
    Undefined { kind: String, reason: String },
    #[error("rank of level {0} is not constant over the probes")]
    NonConstantRank(usize),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("transformation singular or ill-conditioned at t = {0}")]
    SingularTransform(f64),
    #[error("matrix is not strictly block upper triangular")]
    NotStrictlyUpperTriangular,
    #[error("constraints are infeasible (residual {0:.3e})")]
    InfeasibleConstraints(f64),
    #[error("index could not be determined: {0}")]
    IndexUndetermined(String),
    #[error("derivative array lost 1-fullness at t = {0}")]
    OneFullnessLost(f64),
    #[error("step failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },
    #[error("not regular at t = {0}")]
    NotRegularAt(f64),
    #[error("canonical subspaces do not decompose the space (overlap {0})")]
    DecompositionFailure(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, DaeError>;
