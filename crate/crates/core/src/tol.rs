//! Numeric policy. Every threshold used by the library and its tests lives here.

/// Largest 1-norm condition number accepted by `solve_linear`.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Slack on the unit circle when checking that the leader is marginally stable.
pub const LEADER_MODULUS_SLACK: f64 = 1e-9;

/// Eigenvalues of `A` with `|λ| >= 1 - UNSTABLE_MODE_SLACK` are tested in the
/// stabilizability and detectability rank conditions.
pub const UNSTABLE_MODE_SLACK: f64 = 1e-9;

/// Default margin for Schur tests.
pub const SCHUR_MARGIN: f64 = 0.0;

/// Residual below which a regulator iterate counts as converged.
pub const REGULATOR_RESIDUAL: f64 = 1e-10;

/// Number of consecutive ticks the regulator residual must stay below
/// [`REGULATOR_RESIDUAL`].
pub const REGULATOR_SUSTAIN_TICKS: usize = 10;

/// Threshold on tracking, estimation and regulator errors for closed-loop
/// convergence.
pub const CONVERGENCE_THRESHOLD: f64 = 1e-6;

/// Maximum residual of the exact regulator solution in both regulator equations.
pub const REGULATOR_EQUATION_RESIDUAL: f64 = 1e-9;

/// Default fraction of the admissible μ3 bound used when none is supplied.
pub const MU3_FRACTION: f64 = 0.5;

/// Width below which the bisection for the certified μ2 interval stops.
pub const BISECTION_WIDTH: f64 = 1e-10;

/// Iteration cap for the discrete Riccati recursion used in gain synthesis.
pub const RICCATI_MAX_ITERATIONS: usize = 100_000;

/// Relative change in the Riccati iterate that counts as converged.
pub const RICCATI_TOLERANCE: f64 = 1e-13;

/// Values below this are clipped before taking logarithms in decay fits.
pub const LOG_FLOOR: f64 = 1e-300;
