//! Strategies and invariant checks shared by the property tests and the
//! acceptance suite.
#![allow(dead_code)]

use boltzmann_alloc::{
    allocate, boltzmann_probabilities, Agent, AllocationProblem, Dataset, DatasetRecord,
    PotentialSpec,
};
use proptest::prelude::*;

/// A randomized allocation problem in raw form.
#[derive(Debug, Clone)]
pub struct Case {
    pub populations: Vec<f64>,
    pub energies: Vec<f64>,
    pub cap: f64,
    pub beta: f64,
}

impl Case {
    pub fn problem(&self) -> AllocationProblem {
        build(&self.populations, &self.energies, self.cap)
    }
}

pub fn build(populations: &[f64], energies: &[f64], cap: f64) -> AllocationProblem {
    let agents: Vec<Agent> = populations
        .iter()
        .enumerate()
        .map(|(i, &c)| Agent::new(format!("a{i}"), c, 0.0))
        .collect();
    let map = agents
        .iter()
        .zip(energies)
        .map(|(a, &e)| (a.name.clone(), e))
        .collect();
    AllocationProblem::new(agents, cap, PotentialSpec::Explicit(map)).unwrap()
}

/// n in [1, 50]; sizes log-uniform over [1, 1e9]; energies on a half-unit
/// lattice in [-20, 20] so ties occur; beta in [0, 100].
pub fn case_strategy() -> impl Strategy<Value = Case> {
    (1usize..=50)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0.0f64..9.0, n),
                prop::collection::vec(-40i32..=40, n),
                1.0f64..1e8,
                0.0f64..=100.0,
            )
        })
        .prop_map(|(log_pops, lattice, cap, beta)| Case {
            populations: log_pops.into_iter().map(|x| 10f64.powf(x)).collect(),
            energies: lattice.into_iter().map(|k| k as f64 * 0.5).collect(),
            cap,
            beta,
        })
}

fn probs(p: &AllocationProblem, beta: f64) -> Vec<f64> {
    boltzmann_probabilities(p, beta).unwrap()
}

pub fn check_normalization(case: &Case) -> Result<(), String> {
    let p = case.problem();
    let r = allocate(&p, case.beta).map_err(|e| e.to_string())?;
    let sp: f64 = r.probabilities.iter().sum();
    if (sp - 1.0).abs() > 1e-12 {
        return Err(format!("sum P = {sp}"));
    }
    if let Some(bad) = r.probabilities.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(format!("probability {bad} outside [0, 1]"));
    }
    let sa: f64 = r.allocations.iter().sum();
    if ((sa - case.cap) / case.cap).abs() > 1e-9 {
        return Err(format!("sum allocations {sa} vs cap {}", case.cap));
    }
    Ok(())
}

pub fn check_gauge(case: &Case, shift: f64) -> Result<(), String> {
    let base = probs(&case.problem(), case.beta);
    let moved: Vec<f64> = case.energies.iter().map(|e| e + shift).collect();
    let shifted = probs(&build(&case.populations, &moved, case.cap), case.beta);
    for (a, b) in base.iter().zip(&shifted) {
        if (a - b).abs() > 1e-12 {
            return Err(format!("E + {shift}: {a} vs {b}"));
        }
    }
    Ok(())
}

pub fn check_scale_duality(case: &Case, scale: f64) -> Result<(), String> {
    let base = probs(&case.problem(), case.beta);
    let scaled_e: Vec<f64> = case.energies.iter().map(|e| e * scale).collect();
    let scaled = probs(
        &build(&case.populations, &scaled_e, case.cap),
        case.beta / scale,
    );
    for (a, b) in base.iter().zip(&scaled) {
        if (a - b).abs() > 1e-12 {
            return Err(format!("E * {scale}, beta / {scale}: {a} vs {b}"));
        }
    }
    Ok(())
}

/// `P_i / P_j = (C_i / C_j) exp(-beta (E_i - E_j))` for every pair where
/// both probabilities are normal floats.
pub fn check_likelihood_ratio(case: &Case) -> Result<(), String> {
    let p = probs(&case.problem(), case.beta);
    let (c, e, beta) = (&case.populations, &case.energies, case.beta);
    for i in 0..p.len() {
        for j in 0..p.len() {
            if !(p[i].is_normal() && p[j].is_normal()) {
                continue;
            }
            let expected = ((c[i] / c[j]).ln() - beta * (e[i] - e[j])).exp();
            if !expected.is_normal() {
                continue;
            }
            let rel = (p[i] / p[j] - expected).abs() / expected;
            if rel > 1e-12 {
                return Err(format!("pair ({i}, {j}): relative error {rel:e}"));
            }
        }
    }
    Ok(())
}

pub fn check_zero_beta(case: &Case) -> Result<(), String> {
    let p = probs(&case.problem(), 0.0);
    let total: f64 = case.populations.iter().sum();
    for (x, c) in p.iter().zip(&case.populations) {
        if *x != c / total {
            return Err(format!("{x} != {c} / {total}"));
        }
    }
    Ok(())
}

/// At a beta large enough that `beta * gap > 50`, the agents with minimal
/// energy hold all but 1e-9 of the mass, split in proportion to size.
pub fn check_large_beta(case: &Case) -> Result<(), String> {
    let e_min = case.energies.iter().copied().fold(f64::INFINITY, f64::min);
    let second = case
        .energies
        .iter()
        .copied()
        .filter(|&e| e > e_min)
        .fold(f64::INFINITY, f64::min);
    if !second.is_finite() {
        return Ok(());
    }
    let beta = 51.0 / (second - e_min);
    let p = probs(&case.problem(), beta);
    let tied: Vec<usize> = (0..p.len())
        .filter(|&i| case.energies[i] == e_min)
        .collect();
    let mass: f64 = tied.iter().map(|&i| p[i]).sum();
    if mass <= 1.0 - 1e-9 {
        return Err(format!("argmin mass {mass} at beta {beta}"));
    }
    let c_tied: f64 = tied.iter().map(|&i| case.populations[i]).sum();
    for &i in &tied {
        let want = case.populations[i] / c_tied;
        let got = p[i] / mass;
        if (want - got).abs() > 1e-9 {
            return Err(format!("tie split for agent {i}: {got} vs {want}"));
        }
    }
    Ok(())
}

/// For `E_i < E_j`, `allocation_i / allocation_j` grows strictly with beta.
pub fn check_monotone_dominance(case: &Case, step: f64) -> Result<(), String> {
    let prob = case.problem();
    let b1 = case.beta;
    let b2 = b1 + step;
    let a1 = allocate(&prob, b1).map_err(|e| e.to_string())?.allocations;
    let a2 = allocate(&prob, b2).map_err(|e| e.to_string())?.allocations;
    let e = &case.energies;
    for i in 0..e.len() {
        for j in 0..e.len() {
            if e[i] >= e[j] {
                continue;
            }
            let vals = [a1[i], a1[j], a2[i], a2[j]];
            if !vals.iter().all(|v| v.is_normal()) {
                continue;
            }
            let (r1, r2) = (a1[i] / a1[j], a2[i] / a2[j]);
            if !(r1.is_finite() && r2.is_finite()) {
                continue;
            }
            if r2 <= r1 {
                return Err(format!(
                    "pair ({i}, {j}): ratio {r1} at {b1} vs {r2} at {b2}"
                ));
            }
        }
    }
    Ok(())
}

/// Datasets with awkward-but-valid names and arbitrary nonnegative values.
pub fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    prop::collection::vec(
        (
            "[A-Za-z][A-Za-z ,.'\"-]{0,12}[A-Za-z]",
            0.0f64..1e12,
            0.0f64..1e12,
            1e-3f64..1e10,
        ),
        1..20,
    )
    .prop_map(|rows| Dataset {
        records: rows
            .into_iter()
            .enumerate()
            .map(|(i, (name, prev, curr, pop))| DatasetRecord {
                country: format!("{name} {i}"),
                emissions_prev: prev,
                emissions_curr: curr,
                population: pop,
            })
            .collect(),
        provenance: "generated".into(),
    })
}

pub fn check_round_trip(ds: &Dataset) -> Result<(), String> {
    let text = ds.to_csv().map_err(|e| e.to_string())?;
    let again = boltzmann_alloc::parse_dataset(text.as_bytes(), "round trip")
        .map_err(|e| format!("{e}\n{text}"))?;
    if again.records != ds.records {
        return Err(format!("records differ after round trip:\n{text}"));
    }
    Ok(())
}
