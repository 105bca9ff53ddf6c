//! Entropy-maximizing allocation of a capped, divisible resource.
//!
//! A fixed total (emissions permits, a cake, a budget) is split among agents
//! with the Boltzmann weighting
//!
//! ```text
//! P_i = C_i exp(-beta E_i) / sum_k C_k exp(-beta E_k)
//! ```
//!
//! where `C_i` is the agent's size (population, body weight) and `E_i` its
//! allocation potential energy per capita. `beta = 0` gives size-proportional
//! shares; large `beta` concentrates the total on the lowest-energy agents.
//!
//! - [`model`]: domain types and the closed-form allocation.
//! - [`solver`]: beta sweeps, the least-squares reference beta, and
//!   demand-crossing / pairwise-crossover roots.
//! - [`ingest`]: CSV datasets and the bundled eight-country fixture.
//! - [`report`]: table, CSV and JSON rendering used by the CLI.

pub mod error;
pub mod ingest;
pub mod model;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
pub use ingest::{parse_dataset, parse_players, CapMode, Dataset, DatasetRecord};
pub use model::{
    allocate, boltzmann_probabilities, cap_from_reduction, classify_traders, fair_divide,
    potential_energies, Agent, AllocationProblem, AllocationResult, FairShareAgent, PotentialSpec,
    TraderClass,
};
pub use solver::{
    find_demand_crossings, find_pairwise_crossover, find_reference_beta, objective_y, sweep,
    CrossingReport, PairwiseCrossover, ReferenceBetaResult, SweepResult,
};
