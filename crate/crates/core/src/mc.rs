//! Monte Carlo pricing of the up-and-out call
//!
//! ```text
//! P(t, S) = e^{-r(T-t)} E[H(S_{T ∧ τ_D}) | S_t = S],   H(s) = (s - K)⁺ 1_{s < D}
//! ```
//!
//! under `S = S_t e^{X - X_t}` with `X` a truncated finite-variation Lévy
//! path. Between jumps `ln S` is affine, so the barrier `S ≥ D` is detected
//! exactly: an affine piece reaches `ln D` iff one of its endpoints does.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::levy::{truncation_bias_bound, LevyMeasure, LevyModel, PathSimulator, SamplePath};
use crate::quad::NeumaierSum;

/// Sample mean of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√n`.
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub delta: f64,
    /// Bound on the bias from dropping jumps smaller than `delta`.
    pub bias_bound: f64,
}

impl MCEstimate {
    /// Mean and standard error of `samples`, summed in index order.
    pub fn from_samples(samples: &[f64], seed: u64, delta: f64, bias_bound: f64) -> Self {
        let n = samples.len();
        let mean = samples.iter().copied().collect::<NeumaierSum>().total() / n as f64;
        let var = if n > 1 {
            samples
                .iter()
                .map(|&v| (v - mean) * (v - mean))
                .collect::<NeumaierSum>()
                .total()
                / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            n_paths: n,
            seed,
            delta,
            bias_bound,
        }
    }
}

/// `γ* = -∫ (e^y - 1) ν(dy)`, the drift making `e^{X_t}` a martingale.
///
/// Fails when `∫_{y>1} e^y ν(dy)` diverges (CGMY and variance gamma need
/// `M > 1`).
pub fn martingale_drift(measure: &LevyMeasure) -> Result<f64> {
    for &(size, rate) in measure.atoms() {
        if rate > 0.0 && !size.exp().is_finite() {
            return Err(Error::MartingaleCorrection(format!(
                "atom at {size} has no exponential moment"
            )));
        }
    }
    let est = measure
        .integrate(f64::exp_m1, 0.0, f64::INFINITY, 1.0, 1e-13)
        .map_err(|e| match e {
            Error::MartingaleCorrection(m) => Error::MartingaleCorrection(m),
            other => Error::MartingaleCorrection(other.to_string()),
        })?;
    if !est.value.is_finite() {
        return Err(Error::MartingaleCorrection("exponential moment diverges".into()));
    }
    Ok(-est.value)
}

/// Risk-neutral pure-jump model: log-drift `r + γ*`.
pub fn risk_neutral_model(measure: LevyMeasure, r: f64) -> Result<LevyModel> {
    let gamma = martingale_drift(&measure)? + r;
    LevyModel::pure_jump(measure, gamma)
}

/// Up-and-out call terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierContract {
    pub r: f64,
    pub maturity: f64,
    pub strike: f64,
    pub barrier: f64,
}

impl BarrierContract {
    pub fn new(r: f64, maturity: f64, strike: f64, barrier: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(invalid("r", format!("must be finite and >= 0, got {r}")));
        }
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(invalid("T", format!("must be finite and > 0, got {maturity}")));
        }
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(invalid("K", format!("must be finite and > 0, got {strike}")));
        }
        if !(barrier > strike) {
            return Err(invalid("D", format!("must exceed K = {strike}, got {barrier}")));
        }
        Ok(Self {
            r,
            maturity,
            strike,
            barrier,
        })
    }

    /// `H(s) = (s - K)⁺ 1_{s < D}`.
    pub fn payoff(&self, s: f64) -> f64 {
        if s < self.barrier {
            (s - self.strike).max(0.0)
        } else {
            0.0
        }
    }
}

/// How the barrier is observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monitoring {
    /// Every instant of `[t, T]`.
    Continuous,
    /// Post-jump values and maturity only.
    JumpTimes,
}

/// First time `s ≤ horizon` with `X_s ≥ level`, exact on the piecewise
/// affine path; `None` if the level is never reached.
pub fn first_passage(path: &SamplePath, level: f64, horizon: f64) -> Option<f64> {
    let g = path.gamma;
    let n = path.jumps_through(horizon);
    let mut a = 0.0;
    for k in 0..=n {
        let start = path.level(k) + g * a;
        if start >= level {
            return Some(a);
        }
        let b = if k < n { path.jump_times[k] } else { horizon };
        if g > 0.0 && path.level(k) + g * b >= level {
            return Some(((level - path.level(k)) / g).clamp(a, b));
        }
        a = b;
    }
    None
}

/// Undiscounted payoff on one path of `X` started at `ln(spot)`.
fn path_payoff(path: &SamplePath, c: &BarrierContract, spot: f64, horizon: f64, monitoring: Monitoring) -> f64 {
    let log_d = c.barrier.ln();
    let shift = spot.ln() - path.x0;
    let n = path.jumps_through(horizon);
    match monitoring {
        Monitoring::Continuous => {
            if first_passage(path, log_d - shift, horizon).is_some() {
                return 0.0;
            }
        }
        Monitoring::JumpTimes => {
            if (1..=n).any(|k| path.level(k) + path.gamma * path.jump_times[k - 1] + shift >= log_d) {
                return 0.0;
            }
        }
    }
    let x_t = path.level(n) + path.gamma * horizon + shift;
    c.payoff(x_t.exp())
}

/// Discounted per-path payoffs for each spot, on common paths.
///
/// Row `i` holds path `i`; column `k` holds spot `k`. The paths depend only
/// on `(model, δ, T - t, seed)`, so runs that differ in spot, strike or
/// barrier share their random numbers.
#[allow(clippy::too_many_arguments)]
pub fn barrier_payoffs(
    model: &LevyModel,
    contract: &BarrierContract,
    spots: &[f64],
    t: f64,
    n_paths: usize,
    delta: f64,
    seed: u64,
    monitoring: Monitoring,
) -> Result<Vec<Vec<f64>>> {
    if n_paths == 0 {
        return Err(invalid("n_paths", "must be > 0"));
    }
    if let Some(&s) = spots.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(invalid("spot", format!("must be finite and > 0, got {s}")));
    }
    if !(0.0..contract.maturity).contains(&t) {
        return Err(Error::TimeOutOfRange {
            t,
            horizon: contract.maturity,
        });
    }
    let tau = contract.maturity - t;
    let disc = (-contract.r * tau).exp();
    let sim = PathSimulator::new(model, delta, tau)?;
    let rows = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = sim.path(0.0, seed, i);
            spots
                .iter()
                .map(|&s| {
                    if s >= contract.barrier {
                        0.0
                    } else {
                        disc * path_payoff(&path, contract, s, tau, monitoring)
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows)
}

/// First-order bound on the price bias from dropping jumps below `δ`:
/// `e^{-rτ} D · τ ∫_{|y|<δ} |y| ν(dy)`, since `S < D` on paths that pay.
pub fn price_bias_bound(measure: &LevyMeasure, contract: &BarrierContract, tau: f64, delta: f64) -> Result<f64> {
    Ok((-contract.r * tau).exp() * contract.barrier * truncation_bias_bound(measure, delta, tau)?)
}

/// Monte Carlo prices at several spots on common paths.
#[allow(clippy::too_many_arguments)]
pub fn price_barrier_mc_spots(
    model: &LevyModel,
    contract: &BarrierContract,
    spots: &[f64],
    t: f64,
    n_paths: usize,
    delta: f64,
    seed: u64,
    monitoring: Monitoring,
) -> Result<Vec<MCEstimate>> {
    let rows = barrier_payoffs(model, contract, spots, t, n_paths, delta, seed, monitoring)?;
    let bias = price_bias_bound(&model.measure, contract, contract.maturity - t, delta)?;
    Ok((0..spots.len())
        .map(|k| {
            if spots[k] >= contract.barrier {
                return MCEstimate {
                    mean: 0.0,
                    std_error: 0.0,
                    n_paths,
                    seed,
                    delta,
                    bias_bound: 0.0,
                };
            }
            let column: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            MCEstimate::from_samples(&column, seed, delta, bias)
        })
        .collect())
}

/// Continuously monitored Monte Carlo price at one spot.
#[allow(clippy::too_many_arguments)]
pub fn price_barrier_mc(
    model: &LevyModel,
    contract: &BarrierContract,
    spot: f64,
    t: f64,
    n_paths: usize,
    delta: f64,
    seed: u64,
) -> Result<MCEstimate> {
    let est = price_barrier_mc_spots(
        model,
        contract,
        &[spot],
        t,
        n_paths,
        delta,
        seed,
        Monitoring::Continuous,
    )?;
    Ok(est[0])
}

/// Estimate of `E[e^{X_T}]` with `X_0 = 0`; equals 1 for the martingale drift.
///
/// The bias bound uses the independence of the dropped small jumps `R`
/// from the simulated path: `|E e^X - E e^{X^δ}| ≤ E[e^{X^δ}] (E e^{|R|} - 1)`,
/// and `E e^{|R|} - 1 ≤ expm1(e^δ T ∫_{|y|<δ} |y| ν(dy))`.
pub fn martingale_diagnostic(
    model: &LevyModel,
    horizon: f64,
    n_paths: usize,
    delta: f64,
    seed: u64,
) -> Result<MCEstimate> {
    if n_paths == 0 {
        return Err(invalid("n_paths", "must be > 0"));
    }
    let sim = PathSimulator::new(model, delta, horizon)?;
    let samples: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let p = sim.path(0.0, seed, i);
            (p.level(p.n_jumps()) + p.gamma * horizon).exp()
        })
        .collect();
    let mut est = MCEstimate::from_samples(&samples, seed, delta, 0.0);
    let small = truncation_bias_bound(&model.measure, delta, horizon)?;
    est.bias_bound = est.mean * (delta.exp() * small).exp_m1();
    Ok(est)
}
