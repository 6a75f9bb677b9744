//! Exact matrix-product-state simulation of measurement-based quantum
//! computation on limited-width cluster states.
//!
//! The state of `n` qubits is held in Vidal's Γ/λ form: one three-index
//! tensor per qubit and one vector of Schmidt coefficients per bond of the
//! chain. Single-qubit unitaries are absorbed into one site tensor, and a
//! projective measurement removes the measured qubit from the chain and
//! re-establishes the Schmidt structure on every remaining bond with one
//! rightward and one leftward sweep. No approximate truncation takes place:
//! only numerically-zero Schmidt coefficients (below [`EPS_TRUNC`]) are
//! dropped.
//!
//! Module map:
//!
//! - [`mps`]: the Γ/λ chain and every state-manipulation primitive.
//! - [`cluster`]: grid cluster descriptions, two-site gates and the cluster
//!   builder, plus the Schmidt-number bound checks.
//! - [`pattern`]: adaptive measurement patterns with feed-forward and the two
//!   execution modes.
//! - [`dense`]: a brute-force statevector oracle used to cross-check all of
//!   the above.
//! - [`bench`]: the scaling harness behind the `bench` command.

pub mod bench;
pub mod bits;
pub mod cluster;
pub mod dense;
pub mod dump;
pub mod linalg;
pub mod mps;
pub mod pattern;

pub use num_complex::Complex64 as C64;

pub use cluster::{ClusterError, ClusterSpec, GridCoord};
pub use dense::DenseState;
pub use mps::{ChiProfile, MpsError, MpsState, QubitId};
pub use pattern::{MeasurementPattern, Mode, PatternError, SimulationRecord};

/// Schmidt coefficients at or below this value are treated as exact zeros and
/// removed from the chain together with their Γ slices.
pub const EPS_TRUNC: f64 = 1e-12;

/// Projecting onto an outcome whose probability is at or below this value is
/// an error; sampling never selects such an outcome.
pub const EPS_PROB: f64 = 1e-12;

/// Largest qubit count for which dense (2ⁿ amplitude) conversions are allowed.
pub const DENSE_LIMIT: usize = 22;

/// The seedable generator used for all sampling. ChaCha with 8 rounds; one
/// uniform `f64` is drawn per measurement.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Creates the simulation generator from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}
