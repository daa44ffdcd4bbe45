use std::fs;

use coexplorer_core::config::StartMode;
use coexplorer_core::session::SessionLog;
use coexplorer_core::{Config, Session};
use coexplorer_harness::pca::{project, project_trajectory_pca, write_csv, PcaError};
use proptest::prelude::*;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    // Points a + x u + y v with orthonormal u, v keep their pairwise distances.
    #[test]
    fn planar_data_keeps_pairwise_distances(
        coords in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..20),
        raw_u in prop::collection::vec(-1.0f64..1.0, 4),
        raw_v in prop::collection::vec(-1.0f64..1.0, 4),
        offset in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(norm(&raw_u) > 0.1);
        let u: Vec<f64> = raw_u.iter().map(|x| x / norm(&raw_u)).collect();
        let dot: f64 = raw_v.iter().zip(&u).map(|(a, b)| a * b).sum();
        let w: Vec<f64> = raw_v.iter().zip(&u).map(|(a, b)| a - dot * b).collect();
        prop_assume!(norm(&w) > 0.1);
        let v: Vec<f64> = w.iter().map(|x| x / norm(&w)).collect();

        let states: Vec<(f64, Vec<f64>)> = coords
            .iter()
            .enumerate()
            .map(|(i, (x, y))| (i as f64, (0..4).map(|d| offset[d] + x * u[d] + y * v[d]).collect()))
            .collect();
        let spread = states.iter().map(|s| dist(&s.1, &states[0].1)).fold(0.0, f64::max);
        prop_assume!(spread > 1e-3);
        let points = project(&states).unwrap();
        for i in 0..states.len() {
            for j in i + 1..states.len() {
                let original = dist(&states[i].1, &states[j].1);
                let projected = dist(&[points[i].pc1, points[i].pc2], &[points[j].pc1, points[j].pc2]);
                prop_assert!((original - projected).abs() <= 1e-6 * original.max(1e-3), "{original} vs {projected}");
            }
        }
    }

    #[test]
    fn projection_is_deterministic(
        coords in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..10),
    ) {
        let states: Vec<(f64, Vec<f64>)> = coords.iter().enumerate().map(|(i, (x, y))| (i as f64, vec![*x, *y])).collect();
        prop_assume!(states.iter().any(|s| s.1 != states[0].1));
        let a = project(&states).unwrap();
        let b = project(&states).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn session_log_projects_to_csv() {
    let dir = std::env::temp_dir().join(format!("coexplorer-pca-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let log_path = dir.join("session.log");
    let _ = fs::remove_file(&log_path);

    let config = Config { n: 4, step: 0.05, hidden_units: 8, mode: StartMode::Auto, ..Config::default() };
    let mut session = Session::new(config).unwrap().with_log(SessionLog::open(&log_path).unwrap());
    for _ in 0..40 {
        session.tick().unwrap();
    }
    session.flush_log();
    drop(session);

    let points = project_trajectory_pca(&log_path).unwrap();
    assert_eq!(points.len(), 40);
    assert!(points.windows(2).all(|w| w[1].t > w[0].t));
    let mut csv = Vec::new();
    write_csv(&points, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next(), Some("t,pc1,pc2"));
    assert_eq!(text.lines().count(), 41);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn missing_log_is_an_io_error() {
    let err = project_trajectory_pca(std::path::Path::new("/nonexistent/session.log")).unwrap_err();
    assert!(matches!(err, PcaError::Io(_)));
}
