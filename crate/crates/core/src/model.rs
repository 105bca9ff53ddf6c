//! Domain types and the closed-form Boltzmann allocation.
//!
//! Quantities follow the emissions example: demands, baselines and caps are
//! in 1000 metric tons, populations in persons. Only the total cap is
//! represented; the unit-permit size and the permit count never appear
//! separately, so allocations are continuous.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One participant in an allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub name: String,
    /// Size of the agent (`C_i`): population for countries, weight for
    /// fair-division players.
    pub population: f64,
    /// Actual use in the target period, 1000 t.
    pub demand: f64,
    /// Prior-period use, 1000 t. Only needed when the cap is derived from a
    /// reduction target.
    pub baseline: Option<f64>,
}

impl Agent {
    pub fn new(name: impl Into<String>, population: f64, demand: f64) -> Self {
        Agent {
            name: name.into(),
            population,
            demand,
            baseline: None,
        }
    }

    pub fn with_baseline(mut self, baseline: f64) -> Self {
        self.baseline = Some(baseline);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Validation("agent name must be nonempty".into()));
        }
        if !(self.population.is_finite() && self.population > 0.0) {
            return Err(Error::Validation(format!(
                "agent `{}`: population must be positive, got {}",
                self.name, self.population
            )));
        }
        if !(self.demand.is_finite() && self.demand >= 0.0) {
            return Err(Error::Validation(format!(
                "agent `{}`: demand must be nonnegative, got {}",
                self.name, self.demand
            )));
        }
        if let Some(b) = self.baseline {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::Validation(format!(
                    "agent `{}`: baseline must be nonnegative, got {}",
                    self.name, b
                )));
            }
        }
        Ok(())
    }
}

/// How the per-capita allocation potential energy `E_i` is obtained.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `E_i = -(demand_i * 1000) / population_i`, i.e. minus the per-capita
    /// demand in metric tons.
    #[default]
    NegativePerCapitaDemand,
    /// Caller-supplied energies keyed by agent name.
    Explicit(BTreeMap<String, f64>),
}

/// Per-agent potential energies in agent order.
pub fn potential_energies(agents: &[Agent], spec: &PotentialSpec) -> Result<Vec<f64>> {
    match spec {
        PotentialSpec::NegativePerCapitaDemand => Ok(agents
            .iter()
            .map(|a| -(a.demand * 1000.0) / a.population)
            .collect()),
        PotentialSpec::Explicit(values) => {
            let energies = agents
                .iter()
                .map(|a| match values.get(&a.name) {
                    Some(&e) if e.is_finite() => Ok(e),
                    Some(&e) => Err(Error::Config(format!(
                        "potential for agent `{}` is not finite: {e}",
                        a.name
                    ))),
                    None => Err(Error::Config(format!(
                        "explicit potential missing for agent `{}`",
                        a.name
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            if values.len() != agents.len() {
                let known: HashSet<&str> = agents.iter().map(|a| a.name.as_str()).collect();
                let extra: Vec<&str> = values
                    .keys()
                    .map(String::as_str)
                    .filter(|k| !known.contains(k))
                    .collect();
                return Err(Error::Config(format!(
                    "explicit potential given for unknown agent(s): {}",
                    extra.join(", ")
                )));
            }
            Ok(energies)
        }
    }
}

/// A validated allocation problem: agents, total cap and potentials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationProblem {
    agents: Vec<Agent>,
    total_permits: f64,
    potential: PotentialSpec,
    #[serde(skip)]
    energies: Vec<f64>,
}

impl AllocationProblem {
    pub fn new(agents: Vec<Agent>, total_permits: f64, potential: PotentialSpec) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::Validation("problem needs at least one agent".into()));
        }
        if !(total_permits.is_finite() && total_permits > 0.0) {
            return Err(Error::Validation(format!(
                "total permits must be positive, got {total_permits}"
            )));
        }
        let mut seen = HashSet::new();
        for a in &agents {
            a.validate()?;
            if !seen.insert(a.name.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate agent name `{}`",
                    a.name
                )));
            }
        }
        let energies = potential_energies(&agents, &potential)?;
        Ok(AllocationProblem {
            agents,
            total_permits,
            potential,
            energies,
        })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn total_permits(&self) -> f64 {
        self.total_permits
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    /// Resolved `E_i`, in agent order.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a.name == name)
    }
}

/// Outcome of one allocation at a fixed `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub beta: f64,
    pub total_permits: f64,
    pub agents: Vec<String>,
    pub demands: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub allocations: Vec<f64>,
    /// `allocation - demand`; positive means surplus.
    pub differences: Vec<f64>,
    /// Permit-weighted potential `sum_i allocation_i * E_i`.
    pub total_energy: f64,
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::Domain(format!(
            "beta must be finite and nonnegative, got {beta}"
        )));
    }
    Ok(())
}

/// Probability that a unit of the cap goes to each agent.
///
/// Weights are formed in log space, `ln C_i - beta (E_i - E_min)`, and
/// shifted by their maximum before exponentiating, so the largest weight is
/// exactly 1 and the normalizer can neither overflow nor underflow. Keeping
/// `ln C_i` inside the exponent also avoids a subnormal `exp` being scaled
/// back up by a large `C_i`. At `beta = 0` the weights are the sizes
/// themselves, giving exact `C_i / sum C`.
pub fn boltzmann_probabilities(problem: &AllocationProblem, beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let weights: Vec<f64> = if beta == 0.0 {
        problem.agents.iter().map(|a| a.population).collect()
    } else {
        let e_min = problem
            .energies
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let log_w: Vec<f64> = problem
            .agents
            .iter()
            .zip(&problem.energies)
            .map(|(a, &e)| a.population.ln() - beta * (e - e_min))
            .collect();
        let shift = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        log_w.iter().map(|x| (x - shift).exp()).collect()
    };
    let total: f64 = weights.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Numeric(format!(
            "normalizer is {total} at beta = {beta}"
        )));
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

pub fn allocate(problem: &AllocationProblem, beta: f64) -> Result<AllocationResult> {
    let probabilities = boltzmann_probabilities(problem, beta)?;
    let cap = problem.total_permits;
    let allocations: Vec<f64> = probabilities.iter().map(|p| cap * p).collect();
    let differences = allocations
        .iter()
        .zip(&problem.agents)
        .map(|(x, a)| x - a.demand)
        .collect();
    let total_energy = allocations
        .iter()
        .zip(&problem.energies)
        .map(|(x, e)| x * e)
        .sum();
    Ok(AllocationResult {
        beta,
        total_permits: cap,
        agents: problem.agents.iter().map(|a| a.name.clone()).collect(),
        demands: problem.agents.iter().map(|a| a.demand).collect(),
        probabilities,
        allocations,
        differences,
        total_energy,
    })
}

/// Round half away from zero to an integer; used for display in 1000 t
/// units.
pub fn round_half_up(x: f64) -> f64 {
    if x >= 0.0 {
        (x + 0.5).floor()
    } else {
        0.0 - ((-x) + 0.5).floor()
    }
}

/// Cap set as a fraction below the summed baselines, rounded half-up to a
/// whole unit.
pub fn cap_from_reduction(agents: &[Agent], reduction_fraction: f64) -> Result<f64> {
    if !(reduction_fraction.is_finite() && (0.0..1.0).contains(&reduction_fraction)) {
        return Err(Error::Domain(format!(
            "reduction fraction must lie in [0, 1), got {reduction_fraction}"
        )));
    }
    let mut total = 0.0;
    for a in agents {
        match a.baseline {
            Some(b) => total += b,
            None => {
                return Err(Error::Config(format!(
                    "agent `{}` has no baseline; cannot derive cap from reduction",
                    a.name
                )))
            }
        }
    }
    Ok(round_half_up((1.0 - reduction_fraction) * total))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraderClass {
    Seller,
    Buyer,
    Balanced,
}

impl TraderClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TraderClass::Seller => "seller",
            TraderClass::Buyer => "buyer",
            TraderClass::Balanced => "balanced",
        }
    }
}

impl std::fmt::Display for TraderClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn classify_traders(result: &AllocationResult) -> Vec<TraderClass> {
    result
        .differences
        .iter()
        .map(|&d| {
            if d > 0.0 {
                TraderClass::Seller
            } else if d < 0.0 {
                TraderClass::Buyer
            } else {
                TraderClass::Balanced
            }
        })
        .collect()
}

/// A player in a fair-division problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairShareAgent {
    pub name: String,
    pub weight: f64,
    pub potential: f64,
}

impl FairShareAgent {
    pub fn new(name: impl Into<String>, weight: f64, potential: f64) -> Self {
        FairShareAgent {
            name: name.into(),
            weight,
            potential,
        }
    }
}

/// Split `total_good` among weighted players. Weight takes the role of
/// population; demands are zero, so `differences` equal the shares.
pub fn fair_divide(
    players: &[FairShareAgent],
    total_good: f64,
    beta: f64,
) -> Result<AllocationResult> {
    let agents = players
        .iter()
        .map(|p| Agent::new(p.name.clone(), p.weight, 0.0))
        .collect();
    let potentials = players
        .iter()
        .map(|p| (p.name.clone(), p.potential))
        .collect();
    let problem = AllocationProblem::new(agents, total_good, PotentialSpec::Explicit(potentials))?;
    allocate(&problem, beta)
}
