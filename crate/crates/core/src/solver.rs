//! Analysis in beta-space: grid sweeps, the least-squares reference beta,
//! demand-crossing roots and pairwise dominance crossovers.
//!
//! Every evaluation goes through [`allocate`], so a sweep value at some grid
//! point is bit-identical to a fresh allocation at that beta.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{allocate, check_beta, AllocationProblem};

/// Grid resolution used by the reference-beta and crossing scans.
pub const DEFAULT_SCAN_POINTS: usize = 1000;

/// Default beta search interval for emissions data.
pub const DEFAULT_BRACKET: (f64, f64) = (0.0, 1.0);

const GOLDEN_MAX_ITER: usize = 500;
const BISECT_MAX_ITER: usize = 200;
/// Crossovers found by bisection must match the closed form this closely.
const CLOSED_FORM_AGREEMENT: f64 = 1e-9;

fn check_bracket(bracket: (f64, f64)) -> Result<()> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Domain(format!("bracket ({lo}, {hi}) is not finite")));
    }
    check_beta(lo)?;
    if hi <= lo {
        return Err(Error::Domain(format!(
            "bracket ({lo}, {hi}) is empty; need lo < hi"
        )));
    }
    Ok(())
}

/// `steps` evenly spaced points from `lo` to `hi`, both included.
fn uniform_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::Domain(format!(
            "grid needs at least 2 points, got {steps}"
        )));
    }
    let last = (steps - 1) as f64;
    let mut grid: Vec<f64> = (0..steps)
        .map(|k| lo + (hi - lo) * (k as f64 / last))
        .collect();
    grid[steps - 1] = hi;
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(format!(
            "{steps} points do not resolve the interval ({lo}, {hi})"
        )));
    }
    Ok(grid)
}

/// Least-squares gap `y = sum_i (allocation_i - demand_i)^2`.
pub fn objective_y(problem: &AllocationProblem, beta: f64) -> Result<f64> {
    let r = allocate(problem, beta)?;
    Ok(r.differences.iter().map(|d| d * d).sum())
}

/// Allocation curves over a uniform beta grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub agents: Vec<String>,
    pub total_permits: f64,
    pub betas: Vec<f64>,
    /// `curves[i][k]` is agent `i`'s allocation at `betas[k]`.
    pub curves: Vec<Vec<f64>>,
    /// `y(beta)` at each grid point.
    pub objective: Vec<f64>,
}

pub fn sweep(
    problem: &AllocationProblem,
    beta_min: f64,
    beta_max: f64,
    steps: usize,
) -> Result<SweepResult> {
    check_bracket((beta_min, beta_max))?;
    let betas = uniform_grid(beta_min, beta_max, steps)?;
    let mut curves = vec![Vec::with_capacity(steps); problem.len()];
    let mut objective = Vec::with_capacity(steps);
    for &beta in &betas {
        let r = allocate(problem, beta)?;
        for (curve, x) in curves.iter_mut().zip(&r.allocations) {
            curve.push(*x);
        }
        objective.push(r.differences.iter().map(|d| d * d).sum());
    }
    Ok(SweepResult {
        agents: problem.agents().iter().map(|a| a.name.clone()).collect(),
        total_permits: problem.total_permits(),
        betas,
        curves,
        objective,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBetaResult {
    pub beta_star: f64,
    pub y_min: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub converged: bool,
    /// The minimizer sits within `tol` of a bracket end; widen and retry.
    pub endpoint_minimum: bool,
    /// `y` is constant over the scan grid; every beta minimizes it.
    pub flat_objective: bool,
}

struct GoldenOutcome {
    x: f64,
    fx: f64,
    iterations: usize,
    converged: bool,
}

/// Golden-section search for a minimum of `f` on `[a, b]`, shrinking the
/// interval until its width is at most `tol`.
fn golden_section<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<GoldenOutcome>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut iterations = 0;
    while b - a > tol && iterations < GOLDEN_MAX_ITER {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        iterations += 1;
    }
    let x = 0.5 * (a + b);
    Ok(GoldenOutcome {
        x,
        fx: f(x)?,
        iterations,
        converged: b - a <= tol,
    })
}

/// Beta minimizing the least-squares gap between allocations and demands.
///
/// A coarse scan of [`DEFAULT_SCAN_POINTS`] points picks the best cell, then
/// golden-section search refines inside its two neighbouring cells.
pub fn find_reference_beta(
    problem: &AllocationProblem,
    bracket: (f64, f64),
    tol: f64,
) -> Result<ReferenceBetaResult> {
    find_reference_beta_with_grid(problem, bracket, tol, DEFAULT_SCAN_POINTS)
}

pub fn find_reference_beta_with_grid(
    problem: &AllocationProblem,
    bracket: (f64, f64),
    tol: f64,
    grid_points: usize,
) -> Result<ReferenceBetaResult> {
    check_bracket(bracket)?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let (lo, hi) = bracket;
    let grid = uniform_grid(lo, hi, grid_points)?;
    let ys = grid
        .iter()
        .map(|&b| objective_y(problem, b))
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = ys.iter().position(|y| !y.is_finite()) {
        return Err(Error::Numeric(format!(
            "objective is {} at beta = {}",
            ys[bad], grid[bad]
        )));
    }

    let (mut best_k, mut y_lo, mut y_hi) = (0, ys[0], ys[0]);
    for (k, &y) in ys.iter().enumerate() {
        if y < ys[best_k] {
            best_k = k;
        }
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if y_hi - y_lo <= 1e-12 * y_hi.abs() {
        return Ok(ReferenceBetaResult {
            beta_star: lo,
            y_min: ys[0],
            bracket,
            iterations: 0,
            converged: true,
            endpoint_minimum: false,
            flat_objective: true,
        });
    }

    let a = grid[best_k.saturating_sub(1)];
    let b = grid[(best_k + 1).min(grid.len() - 1)];
    let refined = golden_section(|x| objective_y(problem, x), a, b, tol)?;
    let (beta_star, y_min) = if refined.fx <= ys[best_k] {
        (refined.x, refined.fx)
    } else {
        (grid[best_k], ys[best_k])
    };
    Ok(ReferenceBetaResult {
        beta_star,
        y_min,
        bracket,
        iterations: refined.iterations,
        converged: refined.converged,
        endpoint_minimum: beta_star - lo <= tol || hi - beta_star <= tol,
        flat_objective: false,
    })
}

/// Sign of `d(allocation - demand)/d beta` at a root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Rising,
    Falling,
    /// Touches zero without changing sign.
    Tangent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingRoot {
    pub beta: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCrossings {
    pub agent: String,
    /// Strictly increasing.
    pub roots: Vec<CrossingRoot>,
    /// Allocation equals demand at every scanned beta.
    pub identically_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseCrossover {
    pub agent_a: String,
    pub agent_b: String,
    /// Beta where the two allocations are equal, if it lies in the bracket.
    pub beta: Option<f64>,
    /// `ln(C_a / C_b) / (E_a - E_b)`, wherever it lies.
    pub closed_form: Option<f64>,
    pub bisection: Option<f64>,
    /// Both agents have the same size and energy, so they always receive
    /// the same amount.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub bracket: (f64, f64),
    pub scan_steps: usize,
    pub agents: Vec<AgentCrossings>,
    /// Pairs whose allocations cross inside the bracket (or coincide).
    pub pairwise: Vec<PairwiseCrossover>,
}

/// Bisect `f` on `[a, b]` given `f(a)` and `f(b)` of opposite sign, down to
/// adjacent floating-point values.
fn bisect<F>(f: F, mut a: f64, mut b: f64, fa: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let a_negative = fa < 0.0;
    for _ in 0..BISECT_MAX_ITER {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == a_negative {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

fn sign_at_zero(prev: Option<f64>, next: Option<f64>) -> Direction {
    match (prev.map(|v| v < 0.0), next.map(|v| v > 0.0)) {
        (Some(true), Some(true)) | (None, Some(true)) | (Some(true), None) => Direction::Rising,
        (Some(false), Some(false)) | (None, Some(false)) | (Some(false), None) => {
            Direction::Falling
        }
        _ => Direction::Tangent,
    }
}

fn agent_roots<F>(grid: &[f64], values: &[f64], residual: F) -> Result<Vec<CrossingRoot>>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut roots = Vec::new();
    for k in 0..grid.len() {
        let v = values[k];
        if v == 0.0 {
            let prev = values[..k].iter().rev().copied().find(|&x| x != 0.0);
            let next = values[k + 1..].iter().copied().find(|&x| x != 0.0);
            roots.push(CrossingRoot {
                beta: grid[k],
                direction: sign_at_zero(prev, next),
            });
            continue;
        }
        if let Some(&w) = values.get(k + 1) {
            if w != 0.0 && (v < 0.0) != (w < 0.0) {
                let beta = bisect(&residual, grid[k], grid[k + 1], v)?;
                let direction = if v < 0.0 {
                    Direction::Rising
                } else {
                    Direction::Falling
                };
                roots.push(CrossingRoot { beta, direction });
            }
        }
    }
    Ok(roots)
}

/// Betas at which each agent's allocation equals its demand.
///
/// Sign changes of `allocation_i - demand_i` on a `scan_steps`-point grid are
/// refined by bisection; agents may have zero, one or several roots.
pub fn find_demand_crossings(
    problem: &AllocationProblem,
    bracket: (f64, f64),
    scan_steps: usize,
) -> Result<CrossingReport> {
    check_bracket(bracket)?;
    let grid = uniform_grid(bracket.0, bracket.1, scan_steps)?;
    let scans = grid
        .iter()
        .map(|&b| allocate(problem, b).map(|r| r.differences))
        .collect::<Result<Vec<_>>>()?;

    let mut agents = Vec::with_capacity(problem.len());
    for (i, agent) in problem.agents().iter().enumerate() {
        let values: Vec<f64> = scans.iter().map(|d| d[i]).collect();
        let identically_zero = values.iter().all(|&v| v == 0.0);
        let roots = if identically_zero {
            Vec::new()
        } else {
            agent_roots(&grid, &values, |b| {
                allocate(problem, b).map(|r| r.differences[i])
            })?
        };
        agents.push(AgentCrossings {
            agent: agent.name.clone(),
            roots,
            identically_zero,
        });
    }

    let mut pairwise = Vec::new();
    let names: Vec<&str> = problem.agents().iter().map(|a| a.name.as_str()).collect();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let c = find_pairwise_crossover(problem, a, b, bracket)?;
            if c.beta.is_some() || c.degenerate {
                pairwise.push(c);
            }
        }
    }

    Ok(CrossingReport {
        bracket,
        scan_steps,
        agents,
        pairwise,
    })
}

/// Beta at which agents `a` and `b` receive equal allocations.
///
/// The closed form `ln(C_a / C_b) / (E_a - E_b)` is authoritative; an
/// independent bisection on `allocation_a - allocation_b` must agree with it
/// to within 1e-9 whenever the root lies in `bracket`.
pub fn find_pairwise_crossover(
    problem: &AllocationProblem,
    agent_a: &str,
    agent_b: &str,
    bracket: (f64, f64),
) -> Result<PairwiseCrossover> {
    check_bracket(bracket)?;
    let lookup = |name: &str| {
        problem
            .index_of(name)
            .ok_or_else(|| Error::Config(format!("unknown agent `{name}`")))
    };
    let (ia, ib) = (lookup(agent_a)?, lookup(agent_b)?);
    let (ca, cb) = (
        problem.agents()[ia].population,
        problem.agents()[ib].population,
    );
    let (ea, eb) = (problem.energies()[ia], problem.energies()[ib]);
    let mut out = PairwiseCrossover {
        agent_a: agent_a.to_string(),
        agent_b: agent_b.to_string(),
        beta: None,
        closed_form: None,
        bisection: None,
        degenerate: false,
    };
    if ea == eb {
        // The allocation ratio is C_a / C_b at every beta.
        out.degenerate = ca == cb;
        return Ok(out);
    }

    // `+ 0.0` folds -0.0 into 0.0 when C_a == C_b.
    let closed = (ca / cb).ln() / (ea - eb) + 0.0;
    out.closed_form = Some(closed);

    let (lo, hi) = bracket;
    let h = |beta: f64| allocate(problem, beta).map(|r| r.allocations[ia] - r.allocations[ib]);
    let (h_lo, h_hi) = (h(lo)?, h(hi)?);
    out.bisection = if h_lo == 0.0 {
        Some(lo)
    } else if h_hi == 0.0 {
        Some(hi)
    } else if (h_lo < 0.0) != (h_hi < 0.0) {
        Some(bisect(h, lo, hi, h_lo)?)
    } else {
        // No sign change; the root may still sit on an endpoint up to rounding.
        [lo, hi]
            .into_iter()
            .find(|&end| (end - closed).abs() <= CLOSED_FORM_AGREEMENT)
    };

    if (lo..=hi).contains(&closed) {
        match out.bisection {
            Some(bis) if (bis - closed).abs() <= CLOSED_FORM_AGREEMENT => {
                out.beta = Some(closed);
            }
            other => {
                return Err(Error::Numeric(format!(
                    "crossover {agent_a}/{agent_b}: closed form {closed} vs bisection {other:?}"
                )))
            }
        }
    }
    Ok(out)
}
