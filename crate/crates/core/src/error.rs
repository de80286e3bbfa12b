use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("resolution guard: ball radius {radius} < 2 * spacing {spacing}")]
    ResolutionGuard { radius: f64, spacing: f64 },

    #[error("multiplier symbol `{tag}` non-finite at frequency {k:?}")]
    SymbolNotFinite { tag: String, k: [i64; 2] },

    #[error("resolvent requires lambda >= 1, got {0}")]
    BadLambda(f64),

    #[error("semigroup requires t >= 0, got {0}")]
    NegativeTime(f64),

    #[error("Littlewood-Paley block index {j} outside [-1, {max}]")]
    BlockOutOfRange { j: i32, max: i32 },

    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("renormalization tail estimate {estimate} above tolerance {tol}")]
    TailAboveTolerance { estimate: f64, tol: f64 },

    #[error("eigensolver did not converge: {0}")]
    EigenNoConvergence(String),

    #[error("shift {lambda} is not above the spectrum (top eigenvalue bound {bound})")]
    ShiftInsideSpectrum { lambda: f64, bound: f64 },

    #[error("iterative solver exceeded budget: residual {residual} after {iters} iterations")]
    SolverBudget { residual: f64, iters: usize },

    #[error("invalid scaling regime: {0}")]
    InvalidRegime(String),

    #[error("invalid simulation input: {0}")]
    InvalidSimulation(String),

    #[error("event budget {0} exhausted before horizon")]
    EventBudget(u64),

    #[error("environment hash mismatch: expected {expected:#x}, got {got:#x}")]
    EnvHashMismatch { expected: u64, got: u64 },

    #[error("blow-up guard: sup norm {0} exceeded limit")]
    BlowUp(f64),

    #[error("spectral rank remainder {remainder} above tolerance {tol}")]
    RankRemainder { remainder: f64, tol: f64 },

    #[error("time step {dt} violates stability bound {bound}")]
    UnstableTimeStep { dt: f64, bound: f64 },

    #[error("insufficient replicas: need {need}, got {got}")]
    InsufficientReplicas { need: usize, got: usize },

    #[error("missing field snapshots in simulation path")]
    MissingSnapshots,

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed container: {0}")]
    BadContainer(String),
}
