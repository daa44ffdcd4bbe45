//! Projects a session trajectory onto its two leading principal components.

use std::io::{self, Write};
use std::path::Path;

use coexplorer_core::session::{read_log, LogRecord};
use nalgebra::{DMatrix, SymmetricEigen};

#[derive(Debug, thiserror::Error)]
pub enum PcaError {
    #[error("need at least 2 state events, found {0}")]
    TooFewStates(usize),
    #[error("all states are identical")]
    DegenerateTrajectory,
    #[error("state {index} has {got} values, expected {expected}")]
    RaggedStates { index: usize, got: usize, expected: usize },
    #[error("reading log: {0}")]
    Io(#[from] io::Error),
    #[error("parsing log: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedPoint {
    pub t: f64,
    pub pc1: f64,
    pub pc2: f64,
}

/// Every record that carries parameter values, with its time.
pub fn state_events(records: &[LogRecord]) -> Vec<(f64, Vec<f64>)> {
    records.iter().filter_map(|r| Some((r.time, r.values()?))).collect()
}

/// Centers the states, eigen-decomposes their covariance and projects onto
/// the top two components. Each component's first nonzero loading is made
/// positive so the output is deterministic.
pub fn project(states: &[(f64, Vec<f64>)]) -> Result<Vec<ProjectedPoint>, PcaError> {
    if states.len() < 2 {
        return Err(PcaError::TooFewStates(states.len()));
    }
    let n = states[0].1.len();
    for (index, (_, v)) in states.iter().enumerate() {
        if v.len() != n {
            return Err(PcaError::RaggedStates { index, got: v.len(), expected: n });
        }
    }
    if states.iter().all(|(_, v)| v == &states[0].1) {
        return Err(PcaError::DegenerateTrajectory);
    }

    let m = states.len();
    let mut x = DMatrix::from_fn(m, n, |i, j| states[i].1[j]);
    for j in 0..n {
        let mean = x.column(j).mean();
        x.column_mut(j).add_scalar_mut(-mean);
    }
    let cov = x.transpose() * &x / (m as f64 - 1.0);
    let eigen = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let component = |k: usize| -> Option<Vec<f64>> {
        let mut v: Vec<f64> = eigen.eigenvectors.column(*order.get(k)?).iter().copied().collect();
        if v.iter().find(|c| c.abs() > 1e-12).is_some_and(|&c| c < 0.0) {
            v.iter_mut().for_each(|c| *c = -*c);
        }
        Some(v)
    };
    let pc1 = component(0).expect("at least one dimension");
    let pc2 = component(1);

    let dot = |row: usize, v: &[f64]| x.row(row).iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    Ok((0..m)
        .map(|i| ProjectedPoint {
            t: states[i].0,
            pc1: dot(i, &pc1),
            pc2: pc2.as_deref().map_or(0.0, |v| dot(i, v)),
        })
        .collect())
}

pub fn project_trajectory_pca(log: &Path) -> Result<Vec<ProjectedPoint>, PcaError> {
    let text = std::fs::read_to_string(log)?;
    project(&state_events(&read_log(&text)?))
}

pub fn write_csv<W: Write>(points: &[ProjectedPoint], mut out: W) -> io::Result<()> {
    writeln!(out, "t,pc1,pc2")?;
    for p in points {
        writeln!(out, "{},{},{}", p.t, p.pc1, p.pc2)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn timed(states: &[&[f64]]) -> Vec<(f64, Vec<f64>)> {
        states.iter().enumerate().map(|(i, s)| (i as f64 * 0.1, s.to_vec())).collect()
    }

    #[test]
    fn identical_states_are_degenerate() {
        let s = timed(&[&[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5]]);
        assert!(matches!(project(&s), Err(PcaError::DegenerateTrajectory)));
    }

    #[test]
    fn one_state_is_too_few() {
        assert!(matches!(project(&timed(&[&[0.1]])), Err(PcaError::TooFewStates(1))));
    }

    #[test]
    fn one_dimensional_states_have_zero_pc2() {
        let p = project(&timed(&[&[0.0], &[0.5], &[1.0]])).unwrap();
        assert_eq!(p.iter().map(|p| p.pc2).collect::<Vec<_>>(), vec![0.0; 3]);
        assert!((p[2].pc1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = [ProjectedPoint { t: 0.1, pc1: 1.0, pc2: -0.5 }];
        let mut buf = Vec::new();
        write_csv(&p, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,pc1,pc2\n0.1,1,-0.5\n");
    }
}
