//! Values frozen from independent computations: closed forms evaluated
//! with 30-digit quadrature, a Merton series and a Fourier (Carr–Madan)
//! price for the pure-jump CGMY call.

use approx::assert_relative_eq;
use levy_ito::mc::{price_barrier_mc_spots, risk_neutral_model, Monitoring};
use levy_ito::{
    interpolate_price, martingale_drift, solve_pide, tail_intensity, truncation_bias_bound, BarrierContract,
    LevyMeasure, PideParams,
};

const SPOTS: [f64; 5] = [80.0, 90.0, 100.0, 110.0, 120.0];

/// Discounted European call, `r = 0.05`, `T = 0.5`, `K = 100`, compound
/// Poisson jumps with rate 2 and `N(0, 0.2²)` sizes (Merton series).
const MERTON: [f64; 5] = [1.87181, 4.03065, 7.51355, 15.47210, 24.21794];

/// Same contract under CGMY(1, 5, 5, 0.5), by Fourier inversion.
const CGMY_FOURIER: [f64; 5] = [3.56374, 6.78025, 11.68304, 18.26657, 26.13808];

fn cgmy() -> LevyMeasure {
    LevyMeasure::cgmy(1.0, 5.0, 5.0, 0.5).unwrap()
}

fn merton() -> LevyMeasure {
    LevyMeasure::compound_poisson_normal(2.0, 0.0, 0.2).unwrap()
}

/// A barrier far enough away to leave the call unaffected.
fn european() -> BarrierContract {
    BarrierContract::new(0.05, 0.5, 100.0, 1e4).unwrap()
}

fn desk() -> BarrierContract {
    BarrierContract::new(0.05, 0.5, 100.0, 130.0).unwrap()
}

fn pide_prices(contract: BarrierContract, measure: LevyMeasure, n: usize) -> Vec<f64> {
    let sol = solve_pide(&PideParams::risk_neutral(contract, measure, 0.0, n, n).unwrap()).unwrap();
    SPOTS
        .iter()
        .map(|&s| interpolate_price(&sol, 0.0, s).unwrap())
        .collect()
}

#[test]
fn cgmy_martingale_drift() {
    assert_relative_eq!(
        martingale_drift(&cgmy()).unwrap(),
        -0.080_278_732_102_768_04,
        max_relative = 1e-12
    );
}

#[test]
fn compound_poisson_martingale_drift() {
    // -λ (e^{σ²/2} - 1)
    let expect = -2.0 * f64::exp_m1(0.02);
    assert_relative_eq!(martingale_drift(&merton()).unwrap(), expect, max_relative = 1e-12);
}

#[test]
fn cgmy_tail_intensity_and_bias_bound() {
    // 2C (2 δ^{-1/2} e^{-5δ} - 2 √(5π) erfc(√(5δ))) at δ = 0.01.
    assert_relative_eq!(
        tail_intensity(&cgmy(), 1e-2).unwrap(),
        26.130_189_332_976_352,
        max_relative = 1e-9
    );
    // 2C ∫_0^δ y^{-1/2} e^{-5y} dy at δ = 1e-4.
    assert_relative_eq!(
        truncation_bias_bound(&cgmy(), 1e-4, 1.0).unwrap(),
        0.039_993_334_333_214_297,
        max_relative = 1e-9
    );
}

#[test]
fn pide_european_matches_merton_series() {
    let coarse = pide_prices(european(), merton(), 400);
    let fine = pide_prices(european(), merton(), 800);
    for k in 0..SPOTS.len() {
        assert!(
            (fine[k] - MERTON[k]).abs() <= 2e-3 * MERTON[k],
            "spot {}: {} vs {}",
            SPOTS[k],
            fine[k],
            MERTON[k]
        );
        assert!((fine[k] - MERTON[k]).abs() < (coarse[k] - MERTON[k]).abs());
    }
}

#[test]
fn pide_european_matches_cgmy_fourier() {
    let coarse = pide_prices(european(), cgmy(), 400);
    let fine = pide_prices(european(), cgmy(), 800);
    for k in 0..SPOTS.len() {
        let want = CGMY_FOURIER[k];
        assert!(
            (fine[k] - want).abs() <= 5e-3 * want,
            "spot {}: {} vs {want}",
            SPOTS[k],
            fine[k]
        );
        assert!((fine[k] - want).abs() < (coarse[k] - want).abs());
    }
}

#[test]
fn mc_european_matches_merton_series() {
    let model = risk_neutral_model(merton(), 0.05).unwrap();
    let est = price_barrier_mc_spots(&model, &european(), &SPOTS, 0.0, 40_000, 0.0, 3, Monitoring::Continuous).unwrap();
    for (e, want) in est.iter().zip(MERTON) {
        assert!(
            (e.mean - want).abs() <= 3.0 * e.std_error,
            "{} ± {} vs {want}",
            e.mean,
            e.std_error
        );
    }
}

#[test]
fn mc_european_matches_cgmy_fourier() {
    let model = risk_neutral_model(cgmy(), 0.05).unwrap();
    let est = price_barrier_mc_spots(
        &model,
        &european(),
        &SPOTS,
        0.0,
        40_000,
        1e-3,
        5,
        Monitoring::Continuous,
    )
    .unwrap();
    for (e, want) in est.iter().zip(CGMY_FOURIER) {
        assert!(
            (e.mean - want).abs() <= 3.0 * e.std_error + e.bias_bound,
            "{} ± {} vs {want}",
            e.mean,
            e.std_error
        );
    }
}

#[test]
fn barrier_pide_refinement_is_geometric() {
    let levels: Vec<Vec<f64>> = [50, 100, 200, 400]
        .iter()
        .map(|&n| pide_prices(desk(), cgmy(), n))
        .collect();
    for k in 0..SPOTS.len() {
        let d: Vec<f64> = levels.windows(2).map(|w| (w[1][k] - w[0][k]).abs()).collect();
        for pair in d.windows(2) {
            assert!(pair[1] <= 0.6 * pair[0], "spot {}: successive changes {d:?}", SPOTS[k]);
        }
    }
}

#[test]
fn barrier_pide_frozen_at_400() {
    let want = [1.119408, 1.997747, 3.027874, 3.676603, 3.193801];
    for (got, want) in pide_prices(desk(), cgmy(), 400).iter().zip(want) {
        assert_relative_eq!(*got, want, max_relative = 1e-5);
    }
}

#[test]
fn barrier_below_european_and_bounded() {
    let barrier = pide_prices(desk(), cgmy(), 200);
    let call = pide_prices(european(), cgmy(), 200);
    let cap = (-0.05f64 * 0.5).exp() * (130.0 - 100.0);
    for k in 0..SPOTS.len() {
        assert!(barrier[k] >= 0.0 && barrier[k] <= call[k] && barrier[k] <= cap);
    }
    for w in call.windows(2) {
        assert!(w[1] > w[0]);
    }
}
