//! Simulation and theory engine for symbiosis bias: the bias that arises
//! when the recommenders compared in an A/B test learn from data generated
//! by each other.
//!
//! The [`engine`] simulates a recommender marketplace period by period under
//! an experimental [`designs`] choice and measures take-up. The [`theory`]
//! module evaluates the equilibrium potential-outcome model in closed form
//! and by exhaustive enumeration.

pub mod designs;
pub mod engine;
pub mod error;
pub mod params;
pub mod population;
pub mod recommenders;
pub mod rng;
pub mod theory;

pub use designs::{AlgorithmPair, Arm, DesignKind, ExperimentPlan};
pub use engine::log::{InteractionLog, Record};
pub use engine::monte_carlo::{BiasReport, ReplicationRow, TruthEstimate, TruthTable};
pub use engine::stats::Summary;
pub use engine::{Audit, RunResult};
pub use error::{Error, Result};
pub use params::SimParams;
pub use population::PopulationModel;
pub use recommenders::{RecommenderKind, TrainingMatrix};
pub use theory::{BiasVector, ExtendedInstance, TheoryInstance, WeightMatrix};
