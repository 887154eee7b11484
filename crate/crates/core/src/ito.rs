//! Pathwise assembly of the Itô identity for finite-variation Lévy paths
//!
//! ```text
//! f(t, X_t) = f(0, X_0) + ∫_0^t ∂f/∂s(s, X_s) ds + γ ∫_0^t ∂f/∂x(s, X_s) ds
//!           + Σ_{s ≤ t} [f(s, X_{s-} + ΔX_s) - f(s, X_{s-})]
//! ```
//!
//! Between jumps the path is affine with slope `γ`, so both time integrals
//! are computed segment by segment; segments are further split where the
//! path crosses a breakpoint `{x = c}` of `f` (a linear equation), so the
//! integrand is smooth on every piece.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::levy::{check_assumption_ac, truncation_bias_bound, LevyMeasure, LevyModel, PathSimulator, SamplePath};
use crate::quad::{adaptive_simpson, integrate_from_singularity, DoubleDouble, Estimate, GaussLegendre, NeumaierSum};
use crate::weakfn::{Rect, WeakFunction};

const SIMPSON_DEPTH: u32 = 40;

/// Both sides of the Itô identity at time `t` on one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItoDecomposition {
    pub t: f64,
    pub lhs: f64,
    pub f0: f64,
    pub time_integral: f64,
    pub drift_integral: f64,
    pub jump_sum: f64,
    /// `lhs - (f0 + time_integral + drift_integral + jump_sum)`, signed.
    pub residual: f64,
    pub quad_error_estimate: f64,
    pub n_jumps: usize,
}

/// Inter-jump pieces `[a, b]` on which `X_s = level + γ s`.
struct Segment {
    a: f64,
    b: f64,
    level: f64,
}

fn segments(path: &SamplePath, t: f64) -> Vec<Segment> {
    let n = path.jumps_through(t);
    let mut out = Vec::with_capacity(n + 1);
    let mut a = 0.0;
    for k in 0..=n {
        let b = if k < n { path.jump_times[k] } else { t };
        if b > a {
            out.push(Segment {
                a,
                b,
                level: path.level(k),
            });
        }
        a = b;
    }
    out
}

fn check_in_domain<F: WeakFunction + ?Sized>(f: &F, x: f64) -> Result<()> {
    if f.contains(x) {
        Ok(())
    } else {
        Err(Error::DomainExit { x })
    }
}

/// Split points of a segment: breakpoint crossings of the affine path and
/// time breakpoints. Returned sorted, including the endpoints, together
/// with a flag per point telling whether it is a breakpoint.
fn split_points<F: WeakFunction + ?Sized>(f: &F, seg: &Segment, gamma: f64) -> Vec<(f64, bool)> {
    let mut pts = vec![(seg.a, false), (seg.b, false)];
    if gamma != 0.0 {
        for c in f.x_breakpoints() {
            let s = (c - seg.level) / gamma;
            if s > seg.a && s < seg.b {
                pts.push((s, true));
            } else if s == seg.a {
                pts[0].1 = true;
            } else if s == seg.b {
                pts[1].1 = true;
            }
        }
    } else if f.x_breakpoints().contains(&seg.level) {
        pts[0].1 = true;
        pts[1].1 = true;
    }
    for tau in f.t_breakpoints() {
        if tau > seg.a && tau < seg.b {
            pts.push((tau, true));
        }
    }
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    pts.dedup_by(|x, y| {
        if x.0 == y.0 {
            y.1 |= x.1;
            true
        } else {
            false
        }
    });
    pts
}

/// Integral of `g(s)` over a piece of a segment; falls back to the
/// inversion rule when adaptive Simpson fails next to a breakpoint.
///
/// `tail(s_c, η)` optionally bounds the contribution of `|s - s_c| < η`;
/// without it the dropped piece is bounded by `η · sup`.
#[allow(clippy::too_many_arguments)]
fn integrate_piece<G: Fn(f64) -> f64, T: Fn(f64, f64) -> Option<f64>>(
    g: G,
    a: f64,
    b: f64,
    sing_a: bool,
    sing_b: bool,
    sup: f64,
    tail: T,
    tol: f64,
) -> Result<Estimate> {
    match adaptive_simpson(&g, a, b, tol, SIMPSON_DEPTH) {
        Ok(e) => Ok(e),
        Err(err) if sing_a || sing_b => {
            let m = 0.5 * (a + b);
            // Largest halving of the half-piece whose dropped contribution
            // fits a tenth of the budget, passed as `cut · sup_bound`.
            let drop = |c: f64| -> (f64, f64) {
                let mut eta = 0.5 * (b - a);
                loop {
                    let bound = tail(c, eta).unwrap_or(eta * sup);
                    if bound <= 0.1 * tol || eta < 1e-300 {
                        return (eta, bound / eta);
                    }
                    eta *= 0.5;
                }
            };
            let left = if sing_a {
                let (cut, s) = drop(a);
                integrate_from_singularity(&g, a, m, cut, s, 0.5 * tol)
            } else {
                adaptive_simpson(&g, a, m, 0.5 * tol, SIMPSON_DEPTH)
            };
            let right = if sing_b {
                let (cut, s) = drop(b);
                integrate_from_singularity(&g, b, m, cut, s, 0.5 * tol).map(|e| Estimate::new(-e.value, e.error))
            } else {
                adaptive_simpson(&g, m, b, 0.5 * tol, SIMPSON_DEPTH)
            };
            match (left, right) {
                (Ok(l), Ok(r)) => Ok(l + r),
                _ => Err(err),
            }
        }
        Err(err) => Err(err),
    }
}

/// `Σ_{jumps ≤ t} f(T_i, X_{T_i}) - f(T_i, X_{T_i-})` in double-double.
///
/// The post-jump value is the stored right limit `X_{T_i} = X_{T_i-} + ΔX_i`.
fn jump_sum_dd<F: WeakFunction + ?Sized>(f: &F, path: &SamplePath, t: f64) -> Result<DoubleDouble> {
    let mut acc = DoubleDouble::default();
    for i in 0..path.jumps_through(t) {
        let s = path.jump_times[i];
        let pre = path.level(i) + path.gamma * s;
        let post = path.level(i + 1) + path.gamma * s;
        check_in_domain(f, pre)?;
        check_in_domain(f, post)?;
        acc = acc + DoubleDouble::diff(f.eval(s, post), f.eval(s, pre));
    }
    Ok(acc)
}

/// The jump term of the identity, one summand per jump in `(0, t]`.
pub fn jump_sum<F: WeakFunction + ?Sized>(f: &F, path: &SamplePath, t: f64) -> Result<f64> {
    Ok(jump_sum_dd(f, path, t)?.to_f64())
}

/// Assembles both sides of the Itô identity on `path` at time `t`.
///
/// `quad_tol` is an absolute tolerance shared by all segments in
/// proportion to their length.
pub fn ito_rhs<F: WeakFunction + ?Sized>(f: &F, path: &SamplePath, t: f64, quad_tol: f64) -> Result<ItoDecomposition> {
    if !(0.0..=path.horizon).contains(&t) {
        return Err(Error::TimeOutOfRange {
            t,
            horizon: path.horizon,
        });
    }
    if !(quad_tol > 0.0) {
        return Err(invalid("quad_tol", "must be > 0"));
    }
    let gamma = path.gamma;
    let x0 = path.value(0.0)?;
    let xt = path.value(t)?;
    check_in_domain(f, x0)?;
    check_in_domain(f, xt)?;
    let f0 = f.eval(0.0, x0);
    let lhs = f.eval(t, xt);

    let mut time = NeumaierSum::default();
    let mut drift = NeumaierSum::default();
    let mut quad_err = 0.0;
    let segs = segments(path, t);
    for seg in &segs {
        check_in_domain(f, seg.level + gamma * seg.a)?;
        check_in_domain(f, seg.level + gamma * seg.b)?;
        let pts = split_points(f, seg, gamma);
        for w in pts.windows(2) {
            let ((a, sa), (b, sb)) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let tol = quad_tol * (b - a) / t.max(f64::MIN_POSITIVE);
            let xa = seg.level + gamma * a;
            let xb = seg.level + gamma * b;
            let sup = f.local_bound(Rect::new(a, b, xa.min(xb), xa.max(xb)));
            let level = seg.level;
            let dt = integrate_piece(
                |s| f.dt(s, level + gamma * s),
                a,
                b,
                sa,
                sb,
                sup,
                |_, _| None,
                0.5 * tol,
            )?;
            time.add(dt.value);
            quad_err += dt.error;
            if gamma != 0.0 {
                // `∫ ∂f/∂x(s, X_s) ds` over `|s - s_c| < η` is `1/|γ|` times
                // the spatial integral over `|x - X_{s_c}| < |γ| η`.
                let tail = |sc: f64, eta: f64| {
                    f.x_singular_tail(sc, level + gamma * sc, gamma.abs() * eta, 1.0, 0.0)
                        .map(|v| v / gamma.abs())
                };
                let dx = integrate_piece(
                    |s| f.dx(s, level + gamma * s),
                    a,
                    b,
                    sa,
                    sb,
                    sup,
                    tail,
                    0.5 * tol / gamma.abs(),
                )?;
                drift.add(gamma * dx.value);
                quad_err += gamma.abs() * dx.error;
            }
        }
    }
    let jumps = jump_sum_dd(f, path, t)?;
    let time_integral = time.total();
    let drift_integral = drift.total();
    let residual = (DoubleDouble::diff(lhs, f0) + -jumps)
        .add_f64(-time_integral)
        .add_f64(-drift_integral)
        .to_f64();
    Ok(ItoDecomposition {
        t,
        lhs,
        f0,
        time_integral,
        drift_integral,
        jump_sum: jumps.to_f64(),
        residual,
        quad_error_estimate: quad_err,
        n_jumps: path.jumps_through(t),
    })
}

/// One row of a truncation study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub delta: f64,
    pub n_paths: usize,
    pub mean_abs_residual: f64,
    pub max_abs_residual: f64,
    pub mean_quad_error: f64,
    /// Local Lipschitz bound of `f` over the visited region times
    /// `truncation_bias_bound(δ, t)`.
    pub bias_bound: f64,
}

/// Mean/max |residual| of the Itô identity over `n_paths` paths per
/// truncation level.
///
/// Paths are simulated once at the finest level and thinned to the coarser
/// ones, so every row of the ladder sees the same large jumps.
#[allow(clippy::too_many_arguments)]
pub fn ito_residual_study<F: WeakFunction + ?Sized>(
    f: &F,
    model: &LevyModel,
    x0: f64,
    deltas: &[f64],
    t: f64,
    n_paths: usize,
    seed: u64,
    quad_tol: f64,
) -> Result<Vec<ResidualRow>> {
    if deltas.is_empty() {
        return Err(invalid("delta_ladder", "must not be empty"));
    }
    if n_paths == 0 {
        return Err(invalid("n_paths", "must be > 0"));
    }
    if model.measure.finite_activity() != Some(true) && !check_assumption_ac(model).satisfied {
        return Err(invalid(
            "model",
            "infinite-activity model must satisfy the absolute-continuity assumption",
        ));
    }
    let finest = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let sim = PathSimulator::new(model, finest, t)?;
    let per_path: Vec<Result<Vec<(f64, f64, f64)>>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let fine = sim.path(x0, seed, i);
            deltas
                .iter()
                .map(|&d| {
                    let p = if d == finest { fine.clone() } else { fine.coarsen(d) };
                    let dec = ito_rhs(f, &p, t, quad_tol)?;
                    let (lo, hi) = path_range(&p, t);
                    let lip = f.local_bound(Rect::new(0.0, t, lo, hi));
                    Ok((dec.residual.abs(), dec.quad_error_estimate, lip))
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::with_capacity(deltas.len());
    let per_path = per_path.into_iter().collect::<Result<Vec<_>>>()?;
    for (k, &d) in deltas.iter().enumerate() {
        let mut sum = NeumaierSum::default();
        let mut qsum = NeumaierSum::default();
        let mut max: f64 = 0.0;
        let mut lip: f64 = 0.0;
        for row in &per_path {
            let (r, q, l) = row[k];
            sum.add(r);
            qsum.add(q);
            max = max.max(r);
            lip = lip.max(l);
        }
        rows.push(ResidualRow {
            delta: d,
            n_paths,
            mean_abs_residual: sum.total() / n_paths as f64,
            max_abs_residual: max,
            mean_quad_error: qsum.total() / n_paths as f64,
            bias_bound: lip * truncation_bias_bound(&model.measure, d, t)?,
        });
    }
    Ok(rows)
}

/// Range of `X_s` and `X_{s-}` over `[0, t]`.
fn path_range(p: &SamplePath, t: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for seg in segments(p, t) {
        for s in [seg.a, seg.b] {
            let x = seg.level + p.gamma * s;
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    if lo > hi {
        let x = p.x0;
        return (x, x);
    }
    (lo, hi)
}

/// Options for the generator's jump integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorOptions {
    /// Inner cutoff `δ_gen` for infinite-activity measures.
    pub inner_cutoff: f64,
    /// Outer cutoff of the `ν`-integral (`∞` for the whole support).
    pub outer_cutoff: f64,
    pub quad_tol: f64,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            inner_cutoff: 1e-6,
            outer_cutoff: f64::INFINITY,
            quad_tol: 1e-9,
        }
    }
}

/// `𝒜f(s, x)` split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorValue {
    pub value: f64,
    pub time_part: f64,
    pub drift_part: f64,
    pub integral_part: f64,
    /// Outer cutoff actually used.
    pub integral_truncation: f64,
    /// Bound on the omitted `{|y| < δ_gen}` part.
    pub inner_error: f64,
    /// Omitted `{|y| > outer}` part (computed).
    pub outer_error: f64,
    pub quad_error: f64,
}

fn effective_inner(measure: &LevyMeasure, inner: f64) -> f64 {
    if measure.finite_activity() == Some(true) {
        0.0
    } else {
        inner
    }
}

/// `𝒜f(s, x) = ∂f/∂s + γ ∂f/∂x + ∫ (f(s, x + y) - f(s, x)) ν(dy)`.
pub fn generator_apply<F: WeakFunction + ?Sized>(
    f: &F,
    model: &LevyModel,
    s: f64,
    x: f64,
    opts: GeneratorOptions,
) -> Result<GeneratorValue> {
    model.require_pure_jump()?;
    let m = &model.measure;
    let inner = effective_inner(m, opts.inner_cutoff);
    let fx = f.eval(s, x);
    let jump = |y: f64| f.eval(s, x + y) - fx;
    let integral = m.integrate(jump, inner, opts.outer_cutoff, 0.0, opts.quad_tol)?;
    let outer_error = if opts.outer_cutoff.is_finite() {
        let omitted = m.integrate(
            |y| (f.eval(s, x + y) - fx).abs(),
            opts.outer_cutoff,
            f64::INFINITY,
            0.0,
            opts.quad_tol,
        )?;
        if omitted.value > opts.quad_tol {
            return Err(Error::Cutoff {
                omitted: omitted.value,
                tol: opts.quad_tol,
            });
        }
        omitted.value
    } else {
        0.0
    };
    let inner_error = if inner > 0.0 {
        let lip = f.local_bound(Rect::new(s, s, x - inner, x + inner));
        lip * truncation_bias_bound(m, inner, 1.0)?
    } else {
        0.0
    };
    let time_part = f.dt(s, x);
    let drift_part = model.gamma * f.dx(s, x);
    Ok(GeneratorValue {
        value: time_part + drift_part + integral.value,
        time_part,
        drift_part,
        integral_part: integral.value,
        integral_truncation: opts.outer_cutoff,
        inner_error,
        outer_error,
        quad_error: integral.error,
    })
}

/// Fixed quadrature rule for `∫_{lo ≤ |y| ≤ hi} g(y) ν(dy)`: Gauss–Legendre
/// on geometric panels, with an embedded lower-order rule for an error
/// estimate. Used when the same `ν`-integral is needed at many points.
#[derive(Debug, Clone)]
pub struct MeasureRule {
    high: Vec<(f64, f64)>,
    low: Vec<(f64, f64)>,
    atoms: Vec<(f64, f64)>,
}

impl MeasureRule {
    pub fn new(measure: &LevyMeasure, lo: f64, hi: f64) -> Result<Self> {
        let g16 = GaussLegendre::new(16);
        let g9 = GaussLegendre::new(9);
        let mut high = Vec::new();
        let mut low = Vec::new();
        for positive in [true, false] {
            let bound = measure.side_bound(positive, 0.0)?.min(hi);
            if bound <= lo {
                continue;
            }
            let sgn = if positive { 1.0 } else { -1.0 };
            let floor = if lo > 0.0 { lo } else { bound * 1e-15 };
            let mut edges = vec![bound];
            let mut x = bound;
            while x * 0.5 > floor {
                x *= 0.5;
                edges.push(x);
            }
            edges.push(if lo > 0.0 { lo } else { 0.0 });
            edges.reverse();
            edges.dedup();
            for w in edges.windows(2) {
                for (y, wt) in g16.mapped(w[0], w[1]) {
                    let d = measure.density(sgn * y);
                    if d > 0.0 {
                        high.push((sgn * y, wt * d));
                    }
                }
                for (y, wt) in g9.mapped(w[0], w[1]) {
                    let d = measure.density(sgn * y);
                    if d > 0.0 {
                        low.push((sgn * y, wt * d));
                    }
                }
            }
        }
        let atoms = measure
            .atoms()
            .iter()
            .copied()
            .filter(|a| a.0.abs() >= lo && a.0.abs() <= hi)
            .collect();
        Ok(Self { high, low, atoms })
    }

    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G) -> Estimate {
        let mut hi = NeumaierSum::default();
        let mut lo = NeumaierSum::default();
        for &(y, w) in &self.high {
            hi.add(w * g(y));
        }
        for &(y, w) in &self.low {
            lo.add(w * g(y));
        }
        let mut atoms = NeumaierSum::default();
        for &(y, r) in &self.atoms {
            atoms.add(r * g(y));
        }
        let h = hi.total();
        Estimate::new(h + atoms.total(), (h - lo.total()).abs())
    }
}

/// Special-semimartingale decomposition `f(t, X_t) = f(0, X_0) + M_t + ∫_0^t 𝒜f(s, X_s) ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemimartingaleDecomposition {
    pub lhs: f64,
    pub f0: f64,
    /// `M_t = Σ jumps - ∫_0^t ∫ (f(s, X_{s-} + y) - f(s, X_{s-})) ν(dy) ds`.
    pub martingale: f64,
    /// `∫_0^t 𝒜f(s, X_s) ds`.
    pub compensator: f64,
    pub residual: f64,
    /// Combined quadrature and rounding estimate for the residual.
    pub error_estimate: f64,
    /// Inner cutoff of the compensating measure.
    pub inner_cutoff: f64,
}

/// Computes `M_t` and the decomposition residual on one path.
///
/// The compensator integrates over `{|y| ≥ max(δ_path, δ_gen)}`: the
/// compensator of the simulated (truncated) Poisson random measure. The
/// martingale part and `∫ 𝒜f ds` are integrated separately, so the
/// residual is a genuine consistency check of the regrouping.
pub fn martingale_part<F: WeakFunction + ?Sized>(
    f: &F,
    path: &SamplePath,
    model: &LevyModel,
    t: f64,
    opts: GeneratorOptions,
) -> Result<SemimartingaleDecomposition> {
    let rule = MeasureRule::new(
        &model.measure,
        effective_inner(&model.measure, opts.inner_cutoff).max(path.delta),
        opts.outer_cutoff,
    )?;
    decompose_with_rule(f, path, model, t, &rule, opts.quad_tol)
}

/// As [`martingale_part`] with a prebuilt [`MeasureRule`].
pub fn decompose_with_rule<F: WeakFunction + ?Sized>(
    f: &F,
    path: &SamplePath,
    model: &LevyModel,
    t: f64,
    rule: &MeasureRule,
    quad_tol: f64,
) -> Result<SemimartingaleDecomposition> {
    model.require_pure_jump()?;
    if !(0.0..=path.horizon).contains(&t) {
        return Err(Error::TimeOutOfRange {
            t,
            horizon: path.horizon,
        });
    }
    let gamma = path.gamma;
    let x0 = path.value(0.0)?;
    let xt = path.value(t)?;
    let f0 = f.eval(0.0, x0);
    let lhs = f.eval(t, xt);
    let jumps = jump_sum_dd(f, path, t)?;

    let mut comp_jump = NeumaierSum::default();
    let mut gen_total = NeumaierSum::default();
    let mut err = 0.0;
    let mut scale: f64 = lhs.abs() + f0.abs();
    for seg in segments(path, t) {
        let tol = quad_tol * (seg.b - seg.a) / t.max(f64::MIN_POSITIVE);
        let level = seg.level;
        let nu_part = |s: f64| {
            let x = level + gamma * s;
            let fx = f.eval(s, x);
            rule.integrate(|y| f.eval(s, x + y) - fx)
        };
        let jump_int = adaptive_simpson(|s| nu_part(s).value, seg.a, seg.b, 0.5 * tol, SIMPSON_DEPTH)?;
        let gen = adaptive_simpson(
            |s| {
                let x = level + gamma * s;
                f.dt(s, x) + gamma * f.dx(s, x) + nu_part(s).value
            },
            seg.a,
            seg.b,
            0.5 * tol,
            SIMPSON_DEPTH,
        )?;
        comp_jump.add(jump_int.value);
        gen_total.add(gen.value);
        err += jump_int.error + gen.error;
        scale += jump_int.value.abs() + gen.value.abs();
    }
    let martingale = jumps.add_f64(-comp_jump.total()).to_f64();
    let compensator = gen_total.total();
    let residual = DoubleDouble::diff(lhs, f0)
        .add_f64(-martingale)
        .add_f64(-compensator)
        .to_f64();
    scale += martingale.abs() + jumps.to_f64().abs();
    Ok(SemimartingaleDecomposition {
        lhs,
        f0,
        martingale,
        compensator,
        residual,
        error_estimate: err + 64.0 * f64::EPSILON * scale,
        inner_cutoff: rule_inner(rule),
    })
}

fn rule_inner(rule: &MeasureRule) -> f64 {
    rule.high
        .iter()
        .map(|p| p.0.abs())
        .chain(rule.atoms.iter().map(|a| a.0.abs()))
        .fold(f64::INFINITY, f64::min)
}

/// Target set for occupation times: the closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSet {
    pub lo: f64,
    pub hi: f64,
}

impl TargetSet {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// `[c - r, c + r]`; `r = 0` is the single point `{c}`.
    pub fn ball(centre: f64, radius: f64) -> Self {
        Self {
            lo: centre - radius,
            hi: centre + radius,
        }
    }
}

/// Lebesgue measure of `{s ∈ [0, t] : X_s ∈ set}`, exact on the
/// piecewise-affine path.
pub fn occupation_time(path: &SamplePath, t: f64, set: TargetSet) -> Result<f64> {
    if !(0.0..=path.horizon).contains(&t) {
        return Err(Error::TimeOutOfRange {
            t,
            horizon: path.horizon,
        });
    }
    let gamma = path.gamma;
    let mut total = NeumaierSum::default();
    for seg in segments(path, t) {
        if gamma == 0.0 {
            if seg.level >= set.lo && seg.level <= set.hi {
                total.add(seg.b - seg.a);
            }
            continue;
        }
        let s1 = (set.lo - seg.level) / gamma;
        let s2 = (set.hi - seg.level) / gamma;
        let (from, to) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let len = to.min(seg.b) - from.max(seg.a);
        if len > 0.0 {
            total.add(len);
        }
    }
    Ok(total.total())
}
