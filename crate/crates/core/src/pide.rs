//! Finite-difference solver for the up-and-out call
//!
//! ```text
//! ∂P/∂t + γ ∂P/∂x + σ²/2 ∂²P/∂x² + ∫ ν(dy) [P(x + y) - P(x)] - r P = 0,  x = ln S < ln D
//! P(T, x) = (e^x - K)⁺,   P(t, x) = 0 for x ≥ ln D
//! ```
//!
//! With `γ = r + γ* - σ²/2` this is the compensated barrier equation in the
//! asset variable. The solver marches `U = e^{r(T-t)} P` backward in time on
//! a uniform log-price grid whose nodes include `ln K` and `ln D`.
//!
//! Jumps are split at `δ_p = h` (grid spacing) for infinite-activity
//! measures: jumps below `δ_p` enter as extra drift `∫ y ν` and diffusion
//! `∫ y² ν`, larger jumps through hat-function weights
//! `w_k = ∫ ν(dy) φ(y/h - k)`. Local terms are implicit (tridiagonal
//! solve); the jump term `Σ w_k U_{j+k} - λ U_j`, `λ = ν({|y| ≥ δ_p})`, is
//! explicit on the previous level. The step is monotone and contracts in
//! the max norm when `Δt λ ≤ 1`; its amplification factor
//! `|1 - Δt λ| + Δt Σ w_k` is reported and must not exceed 1.
//!
//! When `σ = 0` and `γ ≤ 0` the path cannot creep up to the barrier; it
//! only jumps across it, so `P(t, D-) > 0 = P(t, D)`. Mass that lands just
//! below `ln D` (small-jump terms at the last interior node, hat weights on
//! the last cell) then sees the left limit, taken as the value at the last
//! interior node, instead of the barrier zero.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::levy::{tail_intensity, LevyMeasure, LevyModel};
use crate::mc::{martingale_drift, BarrierContract};
use crate::quad::{Estimate, GaussLegendre};

/// Default number of standard deviations of `X_T` below `ln K`.
pub const DEFAULT_WIDTH: f64 = 6.0;

/// Inputs of a PIDE solve.
#[derive(Debug, Clone)]
pub struct PideParams {
    pub contract: BarrierContract,
    /// Log-price dynamics; `model.gamma` is the full log drift and
    /// `model.sigma` the diffusion coefficient.
    pub model: LevyModel,
    /// Number of log-price nodes, barrier node included.
    pub n_x: usize,
    /// Number of time steps.
    pub n_t: usize,
    /// Lower end of the log-price grid; default `ln K - 6 √(T (σ² + ∫ y² ν))`.
    pub x_min_log: Option<f64>,
}

impl PideParams {
    /// Risk-neutral parameters: `γ = r + γ* - σ²/2`.
    pub fn risk_neutral(
        contract: BarrierContract,
        measure: LevyMeasure,
        sigma: f64,
        n_x: usize,
        n_t: usize,
    ) -> Result<Self> {
        let gamma = contract.r + martingale_drift(&measure)? - 0.5 * sigma * sigma;
        Ok(Self {
            contract,
            model: LevyModel::new(measure, gamma, sigma)?,
            n_x,
            n_t,
            x_min_log: None,
        })
    }
}

/// Numerical diagnostics of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PideDiagnostics {
    /// Grid spacing in `ln S`.
    pub h: f64,
    pub dt: f64,
    /// Largest per-step max-norm amplification factor of the jump step.
    pub max_growth_factor: f64,
    /// `ν({|y| ≥ δ_p})`.
    pub jump_intensity: f64,
    /// Jump mass whose hat weights fall outside the grid window.
    pub integral_truncation_mass: f64,
    /// `δ_p`: jumps below it are replaced by drift and diffusion.
    pub small_jump_cutoff: f64,
    pub small_jump_drift: f64,
    pub small_jump_variance: f64,
    /// Whether the upwind drift discretisation was used.
    pub upwind: bool,
    /// Whether paths can reach `D` continuously (`σ > 0` or `γ > 0`); if not,
    /// the left limit at the barrier is taken from the last interior node.
    pub barrier_creeping: bool,
    /// `γ - (r + γ* - σ²/2)`; zero for risk-neutral parameters.
    pub drift_mismatch: f64,
    pub strike_on_grid: bool,
    pub barrier_on_grid: bool,
    pub warnings: Vec<String>,
}

/// Price lattice `P(t_i, x_j)`.
#[derive(Debug, Clone)]
pub struct PideSolution {
    pub contract: BarrierContract,
    pub times: Vec<f64>,
    /// Log-price nodes; the last one is `ln D`.
    pub x: Vec<f64>,
    /// Spot at each node; exactly `K` and `D` at the strike and barrier
    /// nodes.
    pub spots: Vec<f64>,
    /// `values[i][j] = P(times[i], x[j])`.
    pub values: Vec<Vec<f64>>,
    pub diagnostics: PideDiagnostics,
}

/// Grid with `ln K` and `ln D` on nodes: `(x_min, h, index of K)`.
fn log_grid(contract: &BarrierContract, n_x: usize, x_min_target: f64) -> (f64, f64, usize) {
    let (lk, ld) = (contract.strike.ln(), contract.barrier.ln());
    let h0 = (ld - x_min_target) / (n_x - 1) as f64;
    let m = (((ld - lk) / h0).round() as usize).clamp(1, n_x - 2);
    let h = (ld - lk) / m as f64;
    (ld - (n_x - 1) as f64 * h, h, n_x - 1 - m)
}

/// Hat-function weights `w_k`, `k = -(n-1) ..= n-1`, stored at `k + n - 1`,
/// and for `k ≥ 1` the part `below[k]` of `w_k` carried by jumps in
/// `[(k-1)h, kh)`, which land strictly below node `k`.
fn jump_weights(measure: &LevyMeasure, h: f64, n: usize, first_cell: usize) -> (Vec<f64>, Vec<f64>) {
    let mut w = vec![0.0; 2 * n - 1];
    let mut below = vec![0.0; n];
    let off = n as i64 - 1;
    let mut add = |k: i64, v: f64, from_below: bool| {
        if k.abs() <= off {
            w[(k + off) as usize] += v;
            if from_below {
                below[k as usize] += v;
            }
        }
    };
    let gl = GaussLegendre::new(20);
    for sgn in [1.0, -1.0] {
        for i in first_cell..n {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            let (mut left, mut right) = (0.0, 0.0);
            for (y, wt) in gl.mapped(a, b) {
                let d = measure.density(sgn * y) * wt;
                let theta = (y - a) / h;
                left += d * (1.0 - theta);
                right += d * theta;
            }
            let k = i as i64 * sgn as i64;
            add(k, left, false);
            add(k + sgn as i64, right, sgn > 0.0);
        }
    }
    for &(size, rate) in measure.atoms() {
        let u = size.abs() / h;
        let i = u.floor();
        if (i as usize) < first_cell {
            continue;
        }
        let theta = u - i;
        let sgn = size.signum() as i64;
        add(i as i64 * sgn, rate * (1.0 - theta), false);
        add((i as i64 + 1) * sgn, rate * theta, sgn > 0);
    }
    (w, below)
}

/// Thomas sweep for a constant tridiagonal matrix whose last row is
/// replaced by `(last.0, last.1)` (sub-diagonal, diagonal). The matrices used
/// here are diagonally dominant, so no pivoting is needed.
fn solve_tridiagonal(lower: f64, diag: f64, upper: f64, last: (f64, f64), rhs: &mut [f64], scratch: &mut [f64]) {
    let n = rhs.len();
    if n == 0 {
        return;
    }
    let d = |i: usize| if i + 1 == n { last.1 } else { diag };
    let l = |i: usize| if i + 1 == n { last.0 } else { lower };
    scratch[0] = upper / d(0);
    rhs[0] /= d(0);
    for i in 1..n {
        let m = d(i) - l(i) * scratch[i - 1];
        scratch[i] = upper / m;
        rhs[i] = (rhs[i] - l(i) * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

/// Solves the barrier PIDE backward from maturity.
pub fn solve_pide(params: &PideParams) -> Result<PideSolution> {
    let c = params.contract;
    let model = &params.model;
    if params.n_x < 4 {
        return Err(invalid("N_x", format!("must be >= 4, got {}", params.n_x)));
    }
    if params.n_t < 1 {
        return Err(invalid("N_t", "must be >= 1"));
    }
    if !(model.sigma >= 0.0 && model.sigma.is_finite()) {
        return Err(invalid(
            "sigma",
            format!("must be finite and >= 0, got {}", model.sigma),
        ));
    }
    let measure = &model.measure;
    let finite = measure.finite_activity() == Some(true);
    let second = measure.integrate(|y| y * y, 0.0, f64::INFINITY, 0.0, 1e-12)?.value;
    let scale = (c.maturity * (model.sigma * model.sigma + second)).sqrt().max(0.05);
    let x_min_target = params.x_min_log.unwrap_or(c.strike.ln() - DEFAULT_WIDTH * scale);
    if !(x_min_target < c.strike.ln()) {
        return Err(invalid("x_min_log", format!("must lie below ln K = {}", c.strike.ln())));
    }
    let n = params.n_x;
    let (x_min, h, j_k) = log_grid(&c, n, x_min_target);
    let x: Vec<f64> = (0..n).map(|j| x_min + j as f64 * h).collect();
    let mut spots: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    spots[j_k] = c.strike;
    spots[n - 1] = c.barrier;

    let (delta_p, first_cell) = if finite { (0.0, 0) } else { (h, 1) };
    let lambda = if finite {
        tail_intensity(measure, 0.0)?
    } else {
        tail_intensity(measure, delta_p)?
    };
    let (b_small, s_small) = if delta_p > 0.0 {
        (
            measure.integrate(|y| y, 0.0, delta_p, 0.0, 1e-14)?.value,
            measure.integrate(|y| y * y, 0.0, delta_p, 0.0, 1e-16)?.value,
        )
    } else {
        (0.0, 0.0)
    };
    let (w, below) = jump_weights(measure, h, n, first_cell);
    let creeping = model.sigma > 0.0 || model.gamma > 0.0;
    let w_total: f64 = w.iter().sum();

    let dt = c.maturity / params.n_t as f64;
    let b = model.gamma + b_small;
    let s2 = model.sigma * model.sigma + s_small;
    let upwind = !(s2 > 0.0 && b.abs() * h <= s2);
    let (lo, up) = if upwind {
        (
            0.5 * s2 / (h * h) + (-b).max(0.0) / h,
            0.5 * s2 / (h * h) + b.max(0.0) / h,
        )
    } else {
        (0.5 * s2 / (h * h) - 0.5 * b / h, 0.5 * s2 / (h * h) + 0.5 * b / h)
    };

    // Max-norm factor of the explicit jump step: weights that stay on the
    // grid plus the diagonal `1 - Δt λ`.
    let off = n - 1;
    let mut prefix = vec![0.0; w.len() + 1];
    for (i, v) in w.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    let mut growth: f64 = 0.0;
    for j in 1..n - 1 {
        let (k_lo, k_hi) = (off + 1 - j, off + n - 2 - j);
        let ghost = if creeping { 0.0 } else { below[n - 1 - j] };
        let on_grid = prefix[k_hi + 1] - prefix[k_lo] + ghost;
        growth = growth.max((1.0 - dt * lambda).abs() + dt * on_grid);
    }
    if growth > 1.0 + 1e-12 {
        return Err(Error::Stability { factor: growth });
    }

    let mut warnings = Vec::new();
    let drift_mismatch = match martingale_drift(measure) {
        Ok(g_star) => model.gamma - (c.r + g_star - 0.5 * model.sigma * model.sigma),
        Err(e) => {
            warnings.push(format!("no martingale drift available: {e}"));
            f64::NAN
        }
    };
    if drift_mismatch.abs() > 1e-8 {
        warnings.push(format!(
            "drift differs from the risk-neutral drift by {drift_mismatch:e}"
        ));
    }
    if lambda - w_total > 1e-6 * lambda.max(1.0) {
        warnings.push(format!("jump mass {:e} leaves the grid window", lambda - w_total));
    }

    let mut u: Vec<f64> = (0..n)
        .map(|j| if j == n - 1 { 0.0 } else { c.payoff(spots[j]) })
        .collect();
    u[0] = 0.0;
    let mut rows = vec![Vec::new(); params.n_t + 1];
    let times: Vec<f64> = (0..=params.n_t)
        .map(|i| if i == params.n_t { c.maturity } else { i as f64 * dt })
        .collect();
    let mut terminal: Vec<f64> = spots.iter().map(|&s| c.payoff(s)).collect();
    terminal[n - 1] = 0.0;
    rows[params.n_t] = terminal;
    let diag = 1.0 + dt * (lo + up);
    // Without creeping the last interior row sees the linear extrapolation
    // `2 U_{N-2} - U_{N-3}` in place of the barrier zero.
    let last = if creeping {
        (-dt * lo, diag)
    } else {
        (-dt * (lo - up), diag - 2.0 * dt * up)
    };
    let mut scratch = vec![0.0; n - 2];
    for step in (0..params.n_t).rev() {
        let prev = &u;
        let mut rhs: Vec<f64> = (1..n - 1)
            .into_par_iter()
            .map(|j| {
                let mut acc = 0.0;
                for (m, &um) in prev.iter().enumerate().take(n - 1).skip(1) {
                    acc += w[m + off - j] * um;
                }
                if !creeping {
                    acc += below[n - 1 - j] * (2.0 * prev[n - 2] - prev[n - 3]).max(0.0);
                }
                prev[j] + dt * (acc - lambda * prev[j])
            })
            .collect();
        solve_tridiagonal(-dt * lo, diag, -dt * up, last, &mut rhs, &mut scratch);
        let mut next = vec![0.0; n];
        next[1..n - 1].copy_from_slice(&rhs);
        u = next;
        let disc = (-c.r * (c.maturity - times[step])).exp();
        let mut row: Vec<f64> = u.iter().map(|v| (disc * v).max(0.0)).collect();
        row[n - 1] = 0.0;
        rows[step] = row;
    }

    Ok(PideSolution {
        contract: c,
        times,
        x,
        spots,
        values: rows,
        diagnostics: PideDiagnostics {
            h,
            dt,
            max_growth_factor: growth,
            jump_intensity: lambda,
            integral_truncation_mass: (lambda - w_total).max(0.0),
            small_jump_cutoff: delta_p,
            small_jump_drift: b_small,
            small_jump_variance: s_small,
            upwind,
            barrier_creeping: creeping,
            drift_mismatch,
            strike_on_grid: true,
            barrier_on_grid: true,
            warnings,
        },
    })
}

/// `(index, weight)` of `v` in the increasing `nodes`, `v` within range;
/// the weight is exactly 0 when `v` hits a node.
fn locate(nodes: &[f64], v: f64) -> (usize, f64) {
    let i = nodes
        .partition_point(|&a| a <= v)
        .saturating_sub(1)
        .min(nodes.len() - 2);
    if nodes[i] == v {
        return (i, 0.0);
    }
    if nodes[i + 1] == v {
        return (i + 1, 0.0);
    }
    (i, (v - nodes[i]) / (nodes[i + 1] - nodes[i]))
}

/// `P(t, S)` by bilinear interpolation in `(t, ln S)`; exactly 0 for `S ≥ D`.
pub fn interpolate_price(sol: &PideSolution, t: f64, spot: f64) -> Result<f64> {
    let horizon = sol.contract.maturity;
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::TimeOutOfRange { t, horizon });
    }
    if spot >= sol.contract.barrier {
        return Ok(0.0);
    }
    if !(spot >= sol.spots[0]) {
        return Err(Error::SpotOutOfRange {
            spot,
            lo: sol.spots[0],
            hi: sol.contract.barrier,
        });
    }
    let (i, a) = locate(&sol.times, t);
    let (j, _) = locate(&sol.spots, spot);
    let b = if sol.spots[j] == spot {
        0.0
    } else {
        (spot.ln() - sol.x[j]) / (sol.x[j + 1] - sol.x[j])
    };
    let at = |i: usize| {
        let row = &sol.values[i];
        if b == 0.0 {
            row[j]
        } else {
            (1.0 - b) * row[j] + b * row[j + 1]
        }
    };
    Ok(if a == 0.0 {
        at(i)
    } else {
        (1.0 - a) * at(i) + a * at(i + 1)
    })
}

/// Cutoffs for [`integral_operator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralCutoffs {
    /// `δ_gen`: jumps below it are omitted (infinite-activity measures).
    pub inner: f64,
    /// `Y_max`.
    pub outer: f64,
    pub tol: f64,
}

impl Default for IntegralCutoffs {
    fn default() -> Self {
        Self {
            inner: 1e-6,
            outer: f64::INFINITY,
            tol: 1e-8,
        }
    }
}

/// Row value at log price `v`, linear between nodes and 0 off the grid
/// (barrier above, deep out of the money below).
fn row_value(x: &[f64], row: &[f64], v: f64) -> f64 {
    let n = x.len();
    if v < x[0] || v > x[n - 1] {
        return 0.0;
    }
    let (i, a) = locate(x, v);
    if a == 0.0 {
        row[i]
    } else {
        (1.0 - a) * row[i] + a * row[i + 1]
    }
}

/// `∫ ν(dy) [P(x_j + y) - P(x_j) - (e^y - 1) ∂P/∂(ln S)(x_j)]` over
/// `inner ≤ |y| ≤ outer` for one lattice row, with the derivative from
/// centred differences. This is the compensated jump term written in the
/// asset variable, `S(e^y - 1) ∂P/∂S = (e^y - 1) ∂P/∂ln S`.
pub fn integral_operator(
    x: &[f64],
    row: &[f64],
    j: usize,
    measure: &LevyMeasure,
    cutoffs: IntegralCutoffs,
) -> Result<Estimate> {
    if x.len() != row.len() || x.len() < 3 {
        return Err(invalid("row", "needs at least 3 nodes matching the grid"));
    }
    if j == 0 || j + 1 >= x.len() {
        return Err(invalid("j", "must be an interior node"));
    }
    let p = row[j];
    let dp = (row[j + 1] - row[j - 1]) / (x[j + 1] - x[j - 1]);
    let inner = if measure.finite_activity() == Some(true) {
        0.0
    } else {
        cutoffs.inner
    };
    let growth = if dp != 0.0 { 1.0 } else { 0.0 };
    let xj = x[j];
    measure.integrate(
        |y| row_value(x, row, xj + y) - p - y.exp_m1() * dp,
        inner,
        cutoffs.outer,
        growth,
        cutoffs.tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contract() -> BarrierContract {
        BarrierContract::new(0.05, 0.5, 100.0, 130.0).unwrap()
    }

    #[test]
    fn strike_and_barrier_are_nodes() {
        let p =
            PideParams::risk_neutral(contract(), LevyMeasure::cgmy(1.0, 5.0, 5.0, 0.5).unwrap(), 0.0, 120, 20).unwrap();
        let s = solve_pide(&p).unwrap();
        assert!(s.spots.contains(&100.0));
        assert_eq!(*s.spots.last().unwrap(), 130.0);
        assert!((s.x.last().unwrap() - 130f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn frozen_dynamics_keep_the_payoff() {
        let m = LevyModel::new(LevyMeasure::zero(), 0.0, 0.0).unwrap();
        let c = BarrierContract::new(0.0, 1.0, 100.0, 130.0).unwrap();
        let s = solve_pide(&PideParams {
            contract: c,
            model: m,
            n_x: 60,
            n_t: 10,
            x_min_log: None,
        })
        .unwrap();
        for row in &s.values {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, c.payoff(s.spots[j]));
            }
        }
    }

    #[test]
    fn tridiagonal_solver_matches_dense_solution() {
        let mut rhs = vec![1.0, 2.0, 3.0, 4.0];
        let mut scratch = vec![0.0; 4];
        solve_tridiagonal(-1.0, 4.0, -2.0, (-1.0, 4.0), &mut rhs, &mut scratch);
        let apply = |v: &[f64], i: usize| {
            4.0 * v[i] - if i > 0 { v[i - 1] } else { 0.0 } - 2.0 * if i + 1 < v.len() { v[i + 1] } else { 0.0 }
        };
        for (i, want) in [1.0, 2.0, 3.0, 4.0].iter().enumerate() {
            assert!((apply(&rhs, i) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn hat_weights_sum_to_intensity() {
        let m = LevyMeasure::compound_poisson_normal(2.0, 0.0, 0.1).unwrap();
        let (w, _) = jump_weights(&m, 0.01, 200, 0);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-10, "{total}");
        let atoms = LevyMeasure::compound_poisson_atoms(vec![(0.025, 1.0), (-0.01, 0.5)]).unwrap();
        let (w, below) = jump_weights(&atoms, 0.01, 10, 0);
        assert!((w[9 + 2] - 0.5).abs() < 1e-12 && (w[9 + 3] - 0.5).abs() < 1e-12);
        assert!((below[3] - 0.5).abs() < 1e-12 && below[2] == 0.0);
        assert_eq!(w[9 - 1], 0.5);
    }

    #[test]
    fn constant_row_has_zero_integral() {
        let x: Vec<f64> = (0..101).map(|i| -1.0 + 0.02 * i as f64).collect();
        let row = vec![3.0; 101];
        let m = LevyMeasure::cgmy(1.0, 5.0, 5.0, 0.5).unwrap();
        let cut = IntegralCutoffs {
            outer: 0.5,
            ..Default::default()
        };
        let est = integral_operator(&x, &row, 50, &m, cut).unwrap();
        assert!(est.value.abs() < 1e-12);
    }

    #[test]
    fn interpolation_hits_nodes_and_barrier() {
        let p = PideParams::risk_neutral(
            contract(),
            LevyMeasure::variance_gamma(1.0, 5.0, 5.0).unwrap(),
            0.0,
            80,
            10,
        )
        .unwrap();
        let s = solve_pide(&p).unwrap();
        assert_eq!(interpolate_price(&s, 0.0, 130.0).unwrap(), 0.0);
        assert_eq!(interpolate_price(&s, 0.5, 100.0).unwrap(), 0.0);
        assert_eq!(interpolate_price(&s, s.times[3], s.spots[40]).unwrap(), s.values[3][40]);
        assert!(matches!(
            interpolate_price(&s, 0.0, 1.0),
            Err(Error::SpotOutOfRange { .. })
        ));
    }
}
