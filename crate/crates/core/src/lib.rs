//! Repeated-game mechanisms for master-worker computing with rational workers.
//!
//! - [`payoff`]: the round game and its payoff tables.
//! - [`analysis`]: closed-form feasibility windows, minmax values and expected utilities.
//! - [`mechanism`]: master and worker agents of the repeated-game mechanism, including
//!   the windowed deviation test.
//! - [`baselines`]: the evolutionary-dynamics and repeated one-shot mechanisms.
//! - [`sim`]: seeded round-by-round runs and parallel sweeps.
//! - [`cli`]: configuration and the `analyze`, `simulate` and `sweep` commands.

pub mod analysis;
pub mod baselines;
pub mod binomial;
pub mod cli;
pub mod mechanism;
pub mod payoff;
pub mod sim;

pub use payoff::{MechanismFlavor, MechanismKind, PayoffParams, RoundOutcome};
pub use sim::{run_scenario, run_sweep, MechanismSpec, RunMetrics, Scenario, SweepSpec};
