//! Distributional checks on simulated paths.

use levy_ito::{LevyMeasure, LevyModel, PathSimulator};

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn compound_poisson_counts_and_sizes() {
    let model = LevyModel::pure_jump(LevyMeasure::compound_poisson_normal(2.0, 0.1, 0.2).unwrap(), 0.0).unwrap();
    let sim = PathSimulator::new(&model, 0.0, 1.5).unwrap();
    let paths: Vec<_> = (0..20_000).map(|i| sim.path(0.0, 11, i)).collect();
    let counts: Vec<f64> = paths.iter().map(|p| p.n_jumps() as f64).collect();
    let (m, se) = mean_and_se(&counts);
    assert!((m - 3.0).abs() <= 4.0 * se, "count mean {m} ± {se}");
    let sizes: Vec<f64> = paths.iter().flat_map(|p| p.jump_sizes.clone()).collect();
    let (ms, ses) = mean_and_se(&sizes);
    assert!((ms - 0.1).abs() <= 4.0 * ses, "size mean {ms} ± {ses}");
    let sq: Vec<f64> = sizes.iter().map(|y| (y - 0.1).powi(2)).collect();
    let (v, sev) = mean_and_se(&sq);
    assert!((v - 0.04).abs() <= 4.0 * sev, "size variance {v} ± {sev}");
}

#[test]
fn cgmy_truncated_counts_and_sizes() {
    let model = LevyModel::pure_jump(LevyMeasure::cgmy(1.0, 5.0, 5.0, 0.5).unwrap(), 0.0).unwrap();
    let sim = PathSimulator::new(&model, 1e-2, 1.0).unwrap();
    // λ_δ and E|J| for δ = 0.01 from the closed forms.
    assert!((sim.intensity() - 26.130_189_332_976_352).abs() < 1e-6);
    let paths: Vec<_> = (0..4_000).map(|i| sim.path(0.0, 12, i)).collect();
    let counts: Vec<f64> = paths.iter().map(|p| p.n_jumps() as f64).collect();
    let (m, se) = mean_and_se(&counts);
    assert!((m - sim.intensity()).abs() <= 4.0 * se);
    let sizes: Vec<f64> = paths.iter().flat_map(|p| p.jump_sizes.clone()).collect();
    assert!(sizes.iter().all(|y| y.abs() >= 1e-2));
    let abs: Vec<f64> = sizes.iter().map(|y| y.abs()).collect();
    let (ma, sea) = mean_and_se(&abs);
    assert!((ma - 0.045_613_858_725_510_35).abs() <= 4.0 * sea, "E|J| {ma} ± {sea}");
    let pos: Vec<f64> = sizes.iter().map(|y| (*y > 0.0) as u8 as f64).collect();
    let (mp, sep) = mean_and_se(&pos);
    assert!((mp - 0.5).abs() <= 4.0 * sep);
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let model = LevyModel::pure_jump(LevyMeasure::cgmy(1.0, 5.0, 5.0, 0.5).unwrap(), 0.1).unwrap();
    let sim = PathSimulator::new(&model, 1e-3, 1.0).unwrap();
    assert_eq!(sim.path(0.0, 1, 7), sim.path(0.0, 1, 7));
    assert_ne!(sim.path(0.0, 1, 7).jump_times, sim.path(0.0, 1, 8).jump_times);
    assert_ne!(sim.path(0.0, 1, 7).jump_times, sim.path(0.0, 2, 7).jump_times);
}

#[test]
fn coarsening_thins_by_size() {
    let model = LevyModel::pure_jump(LevyMeasure::cgmy(1.0, 5.0, 5.0, 0.5).unwrap(), 0.0).unwrap();
    let fine = PathSimulator::new(&model, 1e-4, 1.0).unwrap().path(0.0, 3, 0);
    let coarse = fine.coarsen(1e-2);
    assert!(coarse.jump_sizes.iter().all(|y| y.abs() >= 1e-2));
    let kept = fine.jump_sizes.iter().filter(|y| y.abs() >= 1e-2).count();
    assert_eq!(coarse.n_jumps(), kept);
    assert_eq!(coarse.delta, 1e-2);
}

#[test]
fn csv_round_trip() {
    let model = LevyModel::pure_jump(LevyMeasure::compound_poisson_normal(3.0, 0.0, 0.5).unwrap(), -0.2).unwrap();
    let p = PathSimulator::new(&model, 0.0, 2.0).unwrap().path(0.4, 9, 4);
    let back = levy_ito::SamplePath::from_csv(&p.to_csv()).unwrap();
    assert_eq!(back, p);
}
