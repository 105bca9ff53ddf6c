//! Report rendering for the command-line front end.
//!
//! Table output rounds for reading (probabilities to two decimals, permits to
//! whole 1000 t units). CSV and JSON carry full precision using the shortest
//! float representation that round-trips, so identical runs give identical
//! bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;
use crate::model::{classify_traders, round_half_up, AllocationResult, TraderClass};
use crate::solver::{CrossingReport, Direction, ReferenceBetaResult, SweepResult};

/// Allocation plus trader classes and, when beta was solved for, the fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationReport {
    pub allocation: AllocationResult,
    pub classes: Vec<TraderClass>,
    pub reference_beta: Option<ReferenceBetaResult>,
}

impl AllocationReport {
    pub fn new(allocation: AllocationResult, reference_beta: Option<ReferenceBetaResult>) -> Self {
        let classes = classify_traders(&allocation);
        AllocationReport {
            allocation,
            classes,
            reference_beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum ReportPayload {
    Allocation(AllocationReport),
    Division(AllocationResult),
    Sweep(SweepResult),
    ReferenceBeta(ReferenceBetaResult),
    Crossings(CrossingReport),
}

/// One machine-readable report per CLI run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub command: String,
    /// Resolved parameters, defaults included; sorted by key.
    pub parameters: BTreeMap<String, Value>,
    pub results: ReportPayload,
    pub dataset_provenance: String,
}

impl ReportEnvelope {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> String {
        match &self.results {
            ReportPayload::Allocation(r) => allocation_csv(r),
            ReportPayload::Division(r) => division_csv(r),
            ReportPayload::Sweep(s) => sweep_csv(s),
            ReportPayload::ReferenceBeta(r) => reference_csv(r),
            ReportPayload::Crossings(c) => crossings_csv(c),
        }
    }

    pub fn to_table(&self) -> String {
        match &self.results {
            ReportPayload::Allocation(r) => allocation_table(r),
            ReportPayload::Division(r) => division_table(r),
            ReportPayload::Sweep(s) => sweep_table(s),
            ReportPayload::ReferenceBeta(r) => reference_table(r),
            ReportPayload::Crossings(c) => crossings_table(c),
        }
    }
}

/// `1234567.4` -> `1,234,567` (or with `decimals` fractional digits).
pub fn group_thousands(x: f64, decimals: usize) -> String {
    let scaled = round_half_up(x * 10f64.powi(decimals as i32)) / 10f64.powi(decimals as i32);
    let text = format!("{:.*}", decimals, scaled.abs());
    let (int_part, frac) = match text.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (text.as_str(), None),
    };
    let mut out = String::new();
    if scaled < 0.0 {
        out.push('-');
    }
    for (k, ch) in int_part.chars().enumerate() {
        if k > 0 && (int_part.len() - k) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    if let Some(f) = frac {
        out.push('.');
        out.push_str(f);
    }
    out
}

fn render_rows(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let mut parts = Vec::with_capacity(cells.len());
        for (k, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            // first column left-aligned, numbers right-aligned
            if k == 0 {
                parts.push(format!("{cell:<w$}"));
            } else {
                parts.push(format!("{cell:>w$}"));
            }
        }
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(
        &mut out,
        &header.iter().map(|h| h.to_string()).collect::<Vec<_>>(),
    );
    let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    for row in rows {
        line(&mut out, row);
    }
    out
}

fn allocation_table(r: &AllocationReport) -> String {
    let a = &r.allocation;
    let mut rows: Vec<Vec<String>> = (0..a.agents.len())
        .map(|i| {
            vec![
                a.agents[i].clone(),
                group_thousands(a.demands[i], 0),
                format!("{:.2}", a.probabilities[i]),
                group_thousands(a.allocations[i], 0),
                group_thousands(a.differences[i], 0),
                r.classes[i].to_string(),
            ]
        })
        .collect();
    rows.push(vec![
        "Total".into(),
        group_thousands(a.demands.iter().sum(), 0),
        format!("{:.2}", a.probabilities.iter().sum::<f64>()),
        group_thousands(a.allocations.iter().sum(), 0),
        group_thousands(a.differences.iter().sum(), 0),
        String::new(),
    ]);
    let mut out = String::new();
    if let Some(fit) = &r.reference_beta {
        let _ = writeln!(
            out,
            "reference beta {} (y_min {})",
            fit.beta_star, fit.y_min
        );
    }
    let _ = writeln!(
        out,
        "beta = {}, cap = {}",
        a.beta,
        group_thousands(a.total_permits, 0)
    );
    out.push_str(&render_rows(
        &[
            "Country",
            "Demand",
            "Probability",
            "Allocated",
            "Difference",
            "Class",
        ],
        &rows,
    ));
    out
}

fn allocation_csv(r: &AllocationReport) -> String {
    let a = &r.allocation;
    let mut out = String::from("country,demand,probability,allocation,difference,class\n");
    for i in 0..a.agents.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&a.agents[i]),
            a.demands[i],
            a.probabilities[i],
            a.allocations[i],
            a.differences[i],
            r.classes[i]
        );
    }
    out
}

fn division_table(r: &AllocationResult) -> String {
    let rows: Vec<Vec<String>> = (0..r.agents.len())
        .map(|i| {
            vec![
                r.agents[i].clone(),
                format!("{:.4}", r.probabilities[i]),
                format!("{:.4}", r.allocations[i]),
            ]
        })
        .collect();
    let mut out = format!("beta = {}, total = {}\n", r.beta, r.total_permits);
    out.push_str(&render_rows(&["Player", "Probability", "Share"], &rows));
    out
}

fn division_csv(r: &AllocationResult) -> String {
    let mut out = String::from("player,probability,share\n");
    for i in 0..r.agents.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            csv_field(&r.agents[i]),
            r.probabilities[i],
            r.allocations[i]
        );
    }
    out
}

fn sweep_csv(s: &SweepResult) -> String {
    let mut out = String::from("beta,country,allocation,objective\n");
    for (agent, curve) in s.agents.iter().zip(&s.curves) {
        let name = csv_field(agent);
        for ((beta, x), y) in s.betas.iter().zip(curve).zip(&s.objective) {
            let _ = writeln!(out, "{beta},{name},{x},{y}");
        }
    }
    out
}

fn sweep_table(s: &SweepResult) -> String {
    let mut header = vec!["beta"];
    header.extend(s.agents.iter().map(String::as_str));
    header.push("y");
    let rows: Vec<Vec<String>> = s
        .betas
        .iter()
        .enumerate()
        .map(|(k, beta)| {
            let mut row = vec![format!("{beta:.4}")];
            row.extend(s.curves.iter().map(|c| group_thousands(c[k], 0)));
            row.push(format!("{:.4e}", s.objective[k]));
            row
        })
        .collect();
    render_rows(&header, &rows)
}

fn reference_table(r: &ReferenceBetaResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "beta_star         {:.4}  ({})",
        r.beta_star, r.beta_star
    );
    let _ = writeln!(out, "y_min             {:.6e}", r.y_min);
    let _ = writeln!(out, "bracket           ({}, {})", r.bracket.0, r.bracket.1);
    let _ = writeln!(out, "iterations        {}", r.iterations);
    let _ = writeln!(out, "converged         {}", r.converged);
    let _ = writeln!(out, "endpoint_minimum  {}", r.endpoint_minimum);
    let _ = writeln!(out, "flat_objective    {}", r.flat_objective);
    out
}

fn reference_csv(r: &ReferenceBetaResult) -> String {
    format!(
        "beta_star,y_min,lo,hi,iterations,converged,endpoint_minimum,flat_objective\n\
         {},{},{},{},{},{},{},{}\n",
        r.beta_star,
        r.y_min,
        r.bracket.0,
        r.bracket.1,
        r.iterations,
        r.converged,
        r.endpoint_minimum,
        r.flat_objective
    )
}

fn direction_str(d: Direction) -> &'static str {
    match d {
        Direction::Rising => "rising",
        Direction::Falling => "falling",
        Direction::Tangent => "tangent",
    }
}

fn crossings_table(c: &CrossingReport) -> String {
    let mut rows = Vec::new();
    for a in &c.agents {
        if a.identically_zero {
            rows.push(vec![
                a.agent.clone(),
                "all".into(),
                "identically zero".into(),
            ]);
        } else if a.roots.is_empty() {
            rows.push(vec![a.agent.clone(), "none".into(), String::new()]);
        }
        for root in &a.roots {
            rows.push(vec![
                a.agent.clone(),
                format!("{:.4}", root.beta),
                direction_str(root.direction).into(),
            ]);
        }
    }
    let mut out = format!("demand crossings on ({}, {})\n", c.bracket.0, c.bracket.1);
    out.push_str(&render_rows(&["Country", "beta", "Direction"], &rows));
    if !c.pairwise.is_empty() {
        let rows: Vec<Vec<String>> = c
            .pairwise
            .iter()
            .map(|p| {
                vec![
                    format!("{}/{}", p.agent_a, p.agent_b),
                    p.beta.map_or("all".into(), |b| format!("{b:.4}")),
                ]
            })
            .collect();
        out.push('\n');
        out.push_str(&render_rows(&["Crossover", "beta"], &rows));
    }
    out
}

fn crossings_csv(c: &CrossingReport) -> String {
    let mut out = String::from("kind,subject,beta,direction\n");
    for a in &c.agents {
        let name = csv_field(&a.agent);
        if a.identically_zero {
            let _ = writeln!(out, "demand,{name},,identically_zero");
        } else if a.roots.is_empty() {
            let _ = writeln!(out, "demand,{name},,none");
        }
        for root in &a.roots {
            let _ = writeln!(
                out,
                "demand,{name},{},{}",
                root.beta,
                direction_str(root.direction)
            );
        }
    }
    for p in &c.pairwise {
        let subject = csv_field(&format!("{}/{}", p.agent_a, p.agent_b));
        match p.beta {
            Some(b) => {
                let _ = writeln!(out, "crossover,{subject},{b},");
            }
            None => {
                let _ = writeln!(out, "crossover,{subject},,degenerate");
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thousands() {
        assert_eq!(group_thousands(7_079_729.4, 0), "7,079,729");
        assert_eq!(group_thousands(-27_630.6, 0), "-27,631");
        assert_eq!(group_thousands(999.0, 0), "999");
        assert_eq!(group_thousands(1000.0, 0), "1,000");
        assert_eq!(group_thousands(0.3, 0), "0");
        assert_eq!(group_thousands(12_345.678, 2), "12,345.68");
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("US"), "US");
        assert_eq!(csv_field("Korea, Rep."), "\"Korea, Rep.\"");
        assert_eq!(csv_field("a\"b"), "\"a\"\"b\"");
    }
}
