//! Benchmark matrix: agent kinds × space sizes, summarised by median and
//! interquartile range of steps to target.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::episode::{cell_seed, run_episode, AgentKind, EpisodeSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct CompareMatrix {
    pub agents: Vec<AgentKind>,
    pub dims: Vec<usize>,
    pub seeds_per_cell: u64,
    /// Step budget per dimension.
    pub budget_per_dim: u64,
    pub base_seed: u64,
}

impl Default for CompareMatrix {
    fn default() -> Self {
        Self {
            agents: AgentKind::ALL.to_vec(),
            dims: vec![2, 6, 10, 12],
            seeds_per_cell: 20,
            budget_per_dim: 1000,
            base_seed: 7,
        }
    }
}

impl CompareMatrix {
    pub fn budget(&self, dims: usize) -> u64 {
        self.budget_per_dim * dims as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub agent: AgentKind,
    pub dims: usize,
    pub budget: u64,
    pub runs: usize,
    /// Runs that reached the target within budget.
    pub reached: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl CellSummary {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Linearly interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&q));
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Steps to target for every seed of one cell; unfinished runs count as the
/// budget. Seeds depend only on the cell, never on run order.
pub fn run_cell(matrix: &CompareMatrix, agent: AgentKind, dims: usize) -> Vec<Option<u64>> {
    let budget = matrix.budget(dims);
    (0..matrix.seeds_per_cell)
        .into_par_iter()
        .map(|i| run_episode(&EpisodeSpec::new(agent, dims, budget, cell_seed(matrix.base_seed, dims, i))).steps_to_target)
        .collect()
}

pub fn summarize(agent: AgentKind, dims: usize, budget: u64, steps: &[Option<u64>]) -> CellSummary {
    let mut v: Vec<f64> = steps.iter().map(|s| s.unwrap_or(budget) as f64).collect();
    v.sort_by(f64::total_cmp);
    CellSummary {
        agent,
        dims,
        budget,
        runs: steps.len(),
        reached: steps.iter().filter(|s| s.is_some()).count(),
        median: quantile(&v, 0.5),
        q1: quantile(&v, 0.25),
        q3: quantile(&v, 0.75),
    }
}

pub fn compare(matrix: &CompareMatrix) -> Vec<CellSummary> {
    let mut out = Vec::new();
    for &dims in &matrix.dims {
        for &agent in &matrix.agents {
            let steps = run_cell(matrix, agent, dims);
            out.push(summarize(agent, dims, matrix.budget(dims), &steps));
        }
    }
    out
}

pub fn to_csv(cells: &[CellSummary]) -> String {
    let mut s = String::from("agent,dims,budget,runs,reached,median,q1,q3\n");
    for c in cells {
        writeln!(s, "{},{},{},{},{},{},{},{}", c.agent, c.dims, c.budget, c.runs, c.reached, c.median, c.q1, c.q3).unwrap();
    }
    s
}

pub fn to_text(cells: &[CellSummary]) -> String {
    let mut s = format!("{:<11} {:>4} {:>7} {:>9} {:>9} {:>9}\n", "agent", "n", "budget", "reached", "median", "iqr");
    for c in cells {
        writeln!(
            s,
            "{:<11} {:>4} {:>7} {:>6}/{:<2} {:>9.1} {:>9.1}",
            c.agent.name(),
            c.dims,
            c.budget,
            c.reached,
            c.runs,
            c.median,
            c.iqr()
        )
        .unwrap();
    }
    s
}
