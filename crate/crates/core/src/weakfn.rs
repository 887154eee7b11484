//! Continuous, weakly differentiable functions `f(t, x)` on `[0, ∞) × U`.
//!
//! Functions expose classical partial derivatives valid off a finite set of
//! breakpoint lines `{x = c_i}` and `{t = τ_j}`. Mollification with the
//! standard bump kernel `η^ε` is done by Gauss–Legendre quadrature over the
//! ε-ball; for points with `t < ε` the function must first be extended to
//! negative times by even reflection ([`extend_reflect`]).

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::quad::{gauss_kronrod, gauss_kronrod_points, integrate_from_singularity, Estimate, GaussLegendre};

/// Closed rectangle `[t0, t1] × [x0, x1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub x1: f64,
}

impl Rect {
    pub fn new(t0: f64, t1: f64, x0: f64, x1: f64) -> Self {
        Self { t0, t1, x0, x1 }
    }

    fn max_abs_x(&self) -> f64 {
        self.x0.abs().max(self.x1.abs())
    }
}

/// Which partial derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partial {
    T,
    X,
}

/// Number of probe points per axis used by the default `local_bound`.
pub const PROBE_POINTS: usize = 101;
/// Safety factor applied to probed suprema.
pub const PROBE_SAFETY: f64 = 1.05;

/// A continuous function with locally bounded weak derivatives.
pub trait WeakFunction: Send + Sync {
    fn name(&self) -> String;

    /// Open spatial domain `U = (lo, hi)`.
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn eval(&self, t: f64, x: f64) -> f64;

    /// `∂f/∂t`, classical off the breakpoint set.
    fn dt(&self, t: f64, x: f64) -> f64;

    /// `∂f/∂x`, classical off the breakpoint set.
    fn dx(&self, t: f64, x: f64) -> f64;

    fn x_breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn t_breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Bound on `|∫ ∂f/∂x ψ dx|` over the `η`-neighbourhood on one side of
    /// the breakpoint `c`, given `sup|ψ|` and `sup|ψ'|`. `None` falls back
    /// to `η · local_bound · sup|ψ|`. The bound must hold uniformly in `t`.
    fn x_singular_tail(&self, _t: f64, _c: f64, _eta: f64, _psi_sup: f64, _dpsi_sup: f64) -> Option<f64> {
        None
    }

    /// Whether `eval` is meaningful for `t < 0` (set by [`extend_reflect`]).
    fn time_extended(&self) -> bool {
        false
    }

    /// Upper bound for `max(|∂f/∂t|, |∂f/∂x|)` on `rect`.
    ///
    /// The default probes a `101 × 101` grid and inflates the supremum by
    /// 5%; implementations with an analytic bound override it.
    fn local_bound(&self, rect: Rect) -> f64 {
        probe_bound(self, rect)
    }

    fn partial(&self, which: Partial, t: f64, x: f64) -> f64 {
        match which {
            Partial::T => self.dt(t, x),
            Partial::X => self.dx(t, x),
        }
    }

    fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.domain();
        x > lo && x < hi
    }
}

/// Supremum of `max(|∂f/∂t|, |∂f/∂x|)` over a probe grid of `rect`, × 1.05.
pub fn probe_bound<F: WeakFunction + ?Sized>(f: &F, rect: Rect) -> f64 {
    let n = PROBE_POINTS;
    let mut sup: f64 = 0.0;
    for i in 0..n {
        let t = rect.t0 + (rect.t1 - rect.t0) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let x = rect.x0 + (rect.x1 - rect.x0) * j as f64 / (n - 1) as f64;
            if !f.contains(x) {
                continue;
            }
            sup = sup.max(f.dt(t, x).abs()).max(f.dx(t, x).abs());
        }
    }
    sup * PROBE_SAFETY
}

pub type SharedFunction = Arc<dyn WeakFunction>;

/// `x² sin(1/x)` with `f(0) = 0`: continuous, derivative bounded but
/// discontinuous at the origin.
#[derive(Debug, Clone, Copy, Default)]
pub struct XsqSinInv;

impl WeakFunction for XsqSinInv {
    fn name(&self) -> String {
        "xsq_sin_inv".into()
    }
    fn eval(&self, _t: f64, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            x * x * (1.0 / x).sin()
        }
    }
    fn dt(&self, _t: f64, _x: f64) -> f64 {
        0.0
    }
    fn dx(&self, _t: f64, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            2.0 * x * (1.0 / x).sin() - (1.0 / x).cos()
        }
    }
    fn x_breakpoints(&self) -> Vec<f64> {
        vec![0.0]
    }
    fn local_bound(&self, rect: Rect) -> f64 {
        2.0 * rect.max_abs_x() + 1.0
    }
    /// `cos(1/x) = (x² sin(1/x))' - 2x sin(1/x)`, so one integration by
    /// parts against the explicit antiderivative gives an `O(η²)` bound.
    fn x_singular_tail(&self, _t: f64, c: f64, eta: f64, psi_sup: f64, dpsi_sup: f64) -> Option<f64> {
        (c == 0.0).then(|| 3.0 * eta * eta * psi_sup + eta.powi(3) * dpsi_sup / 3.0)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Abs;

impl WeakFunction for Abs {
    fn name(&self) -> String {
        "abs".into()
    }
    fn eval(&self, _t: f64, x: f64) -> f64 {
        x.abs()
    }
    fn dt(&self, _t: f64, _x: f64) -> f64 {
        0.0
    }
    fn dx(&self, _t: f64, x: f64) -> f64 {
        if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
    fn x_breakpoints(&self) -> Vec<f64> {
        vec![0.0]
    }
    fn local_bound(&self, _rect: Rect) -> f64 {
        1.0
    }
}

/// `(x - K)⁺`.
#[derive(Debug, Clone, Copy)]
pub struct CallPayoff {
    pub strike: f64,
}

impl WeakFunction for CallPayoff {
    fn name(&self) -> String {
        format!("call_payoff({})", self.strike)
    }
    fn eval(&self, _t: f64, x: f64) -> f64 {
        (x - self.strike).max(0.0)
    }
    fn dt(&self, _t: f64, _x: f64) -> f64 {
        0.0
    }
    fn dx(&self, _t: f64, x: f64) -> f64 {
        if x > self.strike {
            1.0
        } else {
            0.0
        }
    }
    fn x_breakpoints(&self) -> Vec<f64> {
        vec![self.strike]
    }
    fn local_bound(&self, rect: Rect) -> f64 {
        if rect.x1 > self.strike {
            1.0
        } else {
            0.0
        }
    }
}

/// `(x - K)⁺ 1_{x < D}` on the open domain `U = (-∞, D)`, where it is
/// continuous.
#[derive(Debug, Clone, Copy)]
pub struct BarrierPayoff {
    pub strike: f64,
    pub barrier: f64,
}

impl WeakFunction for BarrierPayoff {
    fn name(&self) -> String {
        format!("barrier_payoff({},{})", self.strike, self.barrier)
    }
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, self.barrier)
    }
    fn eval(&self, _t: f64, x: f64) -> f64 {
        if x < self.barrier {
            (x - self.strike).max(0.0)
        } else {
            0.0
        }
    }
    fn dt(&self, _t: f64, _x: f64) -> f64 {
        0.0
    }
    fn dx(&self, _t: f64, x: f64) -> f64 {
        if x > self.strike && x < self.barrier {
            1.0
        } else {
            0.0
        }
    }
    fn x_breakpoints(&self) -> Vec<f64> {
        vec![self.strike]
    }
    fn local_bound(&self, rect: Rect) -> f64 {
        if rect.x1 > self.strike && rect.x0 < self.barrier {
            1.0
        } else {
            0.0
        }
    }
}

/// `a + b t + c x`.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl WeakFunction for Affine {
    fn name(&self) -> String {
        format!("affine({},{},{})", self.a, self.b, self.c)
    }
    fn eval(&self, t: f64, x: f64) -> f64 {
        self.a + self.b * t + self.c * x
    }
    fn dt(&self, _t: f64, _x: f64) -> f64 {
        self.b
    }
    fn dx(&self, _t: f64, _x: f64) -> f64 {
        self.c
    }
    fn time_extended(&self) -> bool {
        false
    }
    fn local_bound(&self, _rect: Rect) -> f64 {
        self.b.abs().max(self.c.abs())
    }
}

/// `e^{-t} x²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SmoothExp;

impl WeakFunction for SmoothExp {
    fn name(&self) -> String {
        "smooth_exp".into()
    }
    fn eval(&self, t: f64, x: f64) -> f64 {
        (-t).exp() * x * x
    }
    fn dt(&self, t: f64, x: f64) -> f64 {
        -(-t).exp() * x * x
    }
    fn dx(&self, t: f64, x: f64) -> f64 {
        2.0 * (-t).exp() * x
    }
    fn local_bound(&self, rect: Rect) -> f64 {
        let e = (-rect.t0.min(rect.t1)).exp();
        let m = rect.max_abs_x();
        e * (m * m).max(2.0 * m)
    }
}

/// Even reflection in time: `f̃(t, x) = f(|t|, x)`.
///
/// `∂f̃/∂t(t, x) = -∂f/∂t(-t, x)` for `t < 0` and `∂f̃/∂x` is even in `t`.
#[derive(Clone)]
pub struct Reflected {
    inner: SharedFunction,
}

impl WeakFunction for Reflected {
    fn name(&self) -> String {
        format!("reflect({})", self.inner.name())
    }
    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }
    fn eval(&self, t: f64, x: f64) -> f64 {
        self.inner.eval(t.abs(), x)
    }
    fn dt(&self, t: f64, x: f64) -> f64 {
        if t >= 0.0 {
            self.inner.dt(t, x)
        } else {
            -self.inner.dt(-t, x)
        }
    }
    fn dx(&self, t: f64, x: f64) -> f64 {
        self.inner.dx(t.abs(), x)
    }
    fn x_breakpoints(&self) -> Vec<f64> {
        self.inner.x_breakpoints()
    }
    fn t_breakpoints(&self) -> Vec<f64> {
        let mut v = vec![0.0];
        for tau in self.inner.t_breakpoints() {
            v.push(tau);
            v.push(-tau);
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
    fn time_extended(&self) -> bool {
        true
    }
    fn local_bound(&self, rect: Rect) -> f64 {
        let (a, b) = (rect.t0.abs(), rect.t1.abs());
        let (lo, hi) = if rect.t0 < 0.0 && rect.t1 > 0.0 {
            (0.0, a.max(b))
        } else {
            (a.min(b), a.max(b))
        };
        self.inner.local_bound(Rect::new(lo, hi, rect.x0, rect.x1))
    }
    fn x_singular_tail(&self, t: f64, c: f64, eta: f64, psi_sup: f64, dpsi_sup: f64) -> Option<f64> {
        self.inner.x_singular_tail(t.abs(), c, eta, psi_sup, dpsi_sup)
    }
}

/// Extends `f` from `[0, ∞) × U` to `ℝ × U` by even reflection in time.
pub fn extend_reflect(f: SharedFunction) -> Reflected {
    Reflected { inner: f }
}

/// Looks up a bundled function by name: `xsq_sin_inv`, `abs`,
/// `call_payoff(K)`, `barrier_payoff(K,D)`, `affine(a,b,c)`, `smooth_exp`.
pub fn bundled(spec: &str) -> Result<SharedFunction> {
    let spec = spec.trim();
    let (name, args) = match spec.split_once('(') {
        Some((n, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| invalid("function", format!("unbalanced parentheses in `{spec}`")))?;
            let args = inner
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| invalid("function", format!("bad argument `{s}` in `{spec}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            (n.trim(), args)
        }
        None => (spec, Vec::new()),
    };
    let arity = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(invalid(
                "function",
                format!("`{name}` takes {n} argument(s), got {}", args.len()),
            ))
        }
    };
    let f: SharedFunction = match name {
        "xsq_sin_inv" => {
            arity(0)?;
            Arc::new(XsqSinInv)
        }
        "abs" => {
            arity(0)?;
            Arc::new(Abs)
        }
        "smooth_exp" => {
            arity(0)?;
            Arc::new(SmoothExp)
        }
        "call_payoff" => {
            arity(1)?;
            Arc::new(CallPayoff { strike: args[0] })
        }
        "barrier_payoff" => {
            arity(2)?;
            if !(args[1] > args[0]) {
                return Err(invalid("function", "barrier_payoff needs D > K"));
            }
            Arc::new(BarrierPayoff {
                strike: args[0],
                barrier: args[1],
            })
        }
        "affine" => {
            arity(3)?;
            Arc::new(Affine {
                a: args[0],
                b: args[1],
                c: args[2],
            })
        }
        other => return Err(invalid("function", format!("unknown function `{other}`"))),
    };
    Ok(f)
}

/// Un-normalised bump `e^{-1/(1-r²)}` for `r² < 1`, else 0.
fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Default number of Gauss–Legendre nodes per axis on the mollifier ball.
pub const DEFAULT_MOLLIFIER_NODES: usize = 64;

/// Standard mollifier `η^ε(v) = ε^{-d} c e^{-1/(1-|v/ε|²)}` on the ε-ball,
/// with its quadrature rule.
///
/// In `d = 2` the coordinates are `(t, x)`; in `d = 1` mollification acts on
/// `x` at fixed `t`.
#[derive(Debug, Clone)]
pub struct Mollifier {
    epsilon: f64,
    dim: usize,
    norm: f64,
    /// Unit-ball offsets `(v_t, v_x)` and weights `η(v)·w` (summing to ≈ 1).
    offsets: Vec<(f64, f64)>,
    weights: Vec<f64>,
}

/// `c_d` such that `∫_{B_1} c_d e^{-1/(1-|v|²)} dv = 1`.
pub fn mollifier_normalization(dim: usize) -> f64 {
    let mass = match dim {
        1 => {
            2.0 * gauss_kronrod(|r| bump(r * r), 0.0, 1.0, 1e-14)
                .expect("smooth integrand")
                .value
        }
        2 => {
            2.0 * PI
                * gauss_kronrod(|r| r * bump(r * r), 0.0, 1.0, 1e-14)
                    .expect("smooth integrand")
                    .value
        }
        _ => unreachable!("dimension checked by caller"),
    };
    1.0 / mass
}

impl Mollifier {
    pub fn new(epsilon: f64, dim: usize) -> Result<Self> {
        Self::with_nodes(epsilon, dim, DEFAULT_MOLLIFIER_NODES)
    }

    pub fn with_nodes(epsilon: f64, dim: usize, nodes: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid("epsilon", format!("must be finite and > 0, got {epsilon}")));
        }
        if dim != 1 && dim != 2 {
            return Err(invalid("dimension", format!("must be 1 or 2, got {dim}")));
        }
        let norm = mollifier_normalization(dim);
        let rule = GaussLegendre::new(nodes);
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        if dim == 1 {
            for (&u, &w) in rule.nodes().iter().zip(rule.weights()) {
                offsets.push((0.0, u));
                weights.push(w * norm * bump(u * u));
            }
        } else {
            // Radial Gauss–Legendre on [0, 1] times a half-shifted angular
            // trapezoid (exact for trigonometric polynomials).
            let n_theta = nodes;
            let dtheta = 2.0 * PI / n_theta as f64;
            for (rho, w) in rule.mapped(0.0, 1.0) {
                let radial = w * rho * norm * bump(rho * rho) * dtheta;
                for k in 0..n_theta {
                    let theta = (k as f64 + 0.5) * dtheta;
                    offsets.push((rho * theta.sin(), rho * theta.cos()));
                    weights.push(radial);
                }
            }
        }
        Ok(Self {
            epsilon,
            dim,
            norm,
            offsets,
            weights,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Normalisation constant `c_d`.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// Kernel value `η^ε(v)` (for `d = 1` only `v.1` is used).
    pub fn kernel(&self, v: (f64, f64)) -> f64 {
        let e = self.epsilon;
        let r2 = if self.dim == 1 {
            (v.1 / e).powi(2)
        } else {
            (v.0 / e).powi(2) + (v.1 / e).powi(2)
        };
        self.norm * bump(r2) / e.powi(self.dim as i32)
    }

    /// `∫ η^ε` as seen by the quadrature rule.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn check_ball<F: WeakFunction + ?Sized>(&self, f: &F, t: f64, x: f64) -> Result<()> {
        let e = self.epsilon;
        let (lo, hi) = f.domain();
        let time_escape = self.dim == 2 && t - e < 0.0 && !f.time_extended();
        if x - e <= lo || x + e >= hi || time_escape {
            return Err(Error::DomainViolation { t, x, epsilon: e });
        }
        Ok(())
    }

    fn convolve<F, G>(&self, f: &F, t: f64, x: f64, g: G) -> Result<f64>
    where
        F: WeakFunction + ?Sized,
        G: Fn(f64, f64) -> f64,
    {
        self.check_ball(f, t, x)?;
        let e = self.epsilon;
        let xb = f.x_breakpoints();
        let tb = f.t_breakpoints();
        let mut acc = crate::quad::NeumaierSum::default();
        for (&(vt, vx), &w) in self.offsets.iter().zip(&self.weights) {
            let mut s = t - e * vt;
            let mut y = x - e * vx;
            // Nodes exactly on a breakpoint are nudged off it.
            if xb.contains(&y) {
                y += 1e-12 * e;
            }
            if self.dim == 2 && tb.contains(&s) {
                s += 1e-12 * e;
            }
            acc.add(w * g(s, y));
        }
        Ok(acc.total())
    }
}

/// Builds the standard mollifier `η^ε` in dimension `d`.
pub fn mollifier_kernel(epsilon: f64, dim: usize) -> Result<Mollifier> {
    Mollifier::new(epsilon, dim)
}

/// `f^ε(t, x) = (η^ε * f)(t, x)`.
pub fn mollify<F: WeakFunction + ?Sized>(f: &F, m: &Mollifier, t: f64, x: f64) -> Result<f64> {
    m.convolve(f, t, x, |s, y| f.eval(s, y))
}

/// `η^ε * ∂f`, which equals `∂(f^ε)` for weakly differentiable `f`.
pub fn mollify_derivative<F: WeakFunction + ?Sized>(
    f: &F,
    m: &Mollifier,
    t: f64,
    x: f64,
    which: Partial,
) -> Result<f64> {
    if m.dim == 1 && which == Partial::T {
        // In d = 1 the kernel acts on x only, so it commutes with ∂t pointwise.
        return m.convolve(f, t, x, |s, y| f.dt(s, y));
    }
    m.convolve(f, t, x, |s, y| f.partial(which, s, y))
}

/// Result of checking `|∂(f * η^ε)(p)| ≤ sup_{ε-neighbourhood} |∂f|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyBound {
    pub lhs: f64,
    pub rhs: f64,
    /// Quadrature slack added to the right-hand side.
    pub slack: f64,
    pub holds: bool,
}

/// Checks the mollified-derivative bound at `(t, x)` for both partials.
pub fn key_bound_check<F: WeakFunction + ?Sized>(f: &F, m: &Mollifier, t: f64, x: f64) -> Result<KeyBound> {
    let e = m.epsilon;
    let lhs_x = mollify_derivative(f, m, t, x, Partial::X)?.abs();
    let lhs_t = mollify_derivative(f, m, t, x, Partial::T)?.abs();
    let lhs = lhs_x.max(lhs_t);
    let rect = if m.dim == 2 {
        Rect::new(t - e, t + e, x - e, x + e)
    } else {
        Rect::new(t, t, x - e, x + e)
    };
    let rhs = f.local_bound(rect);
    if !rhs.is_finite() {
        return Ok(KeyBound {
            lhs,
            rhs,
            slack: 0.0,
            holds: true,
        });
    }
    let slack = (m.total_mass() - 1.0).abs() * rhs + 1e-12 * rhs.max(1.0);
    Ok(KeyBound {
        lhs,
        rhs,
        slack,
        holds: lhs <= rhs + slack,
    })
}

/// Smooth compactly supported test function
/// `φ(x) = e^{-1/(1-u²)} (1 + tilt·u)`, `u = (x - centre)/radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub centre: f64,
    pub radius: f64,
    pub tilt: f64,
}

impl TestFunction {
    pub fn value(&self, x: f64) -> f64 {
        let u = (x - self.centre) / self.radius;
        bump(u * u) * (1.0 + self.tilt * u)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let u = (x - self.centre) / self.radius;
        let b = bump(u * u);
        if b == 0.0 {
            return 0.0;
        }
        let db = b * (-2.0 * u / (1.0 - u * u).powi(2));
        (db * (1.0 + self.tilt * u) + b * self.tilt) / self.radius
    }

    pub fn support(&self) -> (f64, f64) {
        (self.centre - self.radius, self.centre + self.radius)
    }

    pub fn sup(&self) -> f64 {
        // |bump| ≤ e^{-1} and |1 + tilt·u| ≤ 1 + |tilt|.
        (-1f64).exp() * (1.0 + self.tilt.abs())
    }

    /// Upper bound for `|φ'|`.
    pub fn derivative_sup(&self) -> f64 {
        // With s = 1/(1-u²) ≥ 1: |d bump/du| ≤ 2 s² e^{-s} ≤ 8 e^{-2}.
        (8.0 * (-2f64).exp() * (1.0 + self.tilt.abs()) + (-1f64).exp() * self.tilt.abs()) / self.radius
    }
}

/// Twenty deterministic test functions centred around `anchor` (the
/// interesting point of the function under test).
pub fn bundled_test_functions(anchor: f64) -> Vec<TestFunction> {
    let offsets = [
        -0.9, -0.55, -0.31, -0.17, -0.08, -0.02, 0.0, 0.013, 0.05, 0.11, 0.19, 0.27, 0.4, 0.6, 0.83, -0.45, 0.35,
        -0.05, 0.07, 1.2,
    ];
    let radii = [
        1.0, 0.6, 0.45, 0.3, 0.2, 0.1, 0.5, 0.07, 0.25, 0.15, 0.35, 0.8, 0.5, 0.9, 0.4, 0.3, 0.2, 0.12, 0.06, 1.5,
    ];
    let tilts = [
        0.0, 0.5, -0.3, 0.8, -0.7, 0.2, 0.0, -0.5, 0.4, 0.1, -0.9, 0.6, -0.2, 0.3, 0.0, 0.7, -0.4, 0.9, -0.6, 0.25,
    ];
    (0..20)
        .map(|i| TestFunction {
            centre: anchor + offsets[i],
            radius: radii[i],
            tilt: tilts[i],
        })
        .collect()
}

/// Both sides of the weak-derivative definition in `x` at fixed `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakDerivativeCheck {
    /// `∫ (∂f/∂x) φ dx`.
    pub derivative_side: Estimate,
    /// `-∫ f φ' dx`.
    pub function_side: Estimate,
    pub defect: f64,
}

/// Integration-by-parts check `∫_U (∂f/∂x) φ = -∫_U f φ'` at time `t`.
///
/// The support of `φ` is split at the breakpoints of `f`. Pieces on which
/// the adaptive rule fails (unbounded oscillation at a breakpoint) are
/// integrated in the inverted variable, dropping a neighbourhood of the
/// breakpoint whose contribution is bounded through `local_bound`.
pub fn weak_derivative_check<F: WeakFunction + ?Sized>(
    f: &F,
    phi: &TestFunction,
    t: f64,
    tol: f64,
) -> Result<WeakDerivativeCheck> {
    let (a, b) = phi.support();
    let (lo, hi) = f.domain();
    if a <= lo || b >= hi {
        return Err(invalid("test function", "support must lie inside the domain"));
    }
    let mut points = vec![a];
    let mut bps: Vec<f64> = f.x_breakpoints().into_iter().filter(|c| *c > a && *c < b).collect();
    bps.sort_by(f64::total_cmp);
    points.extend(&bps);
    points.push(b);
    let piece_tol = tol / (4.0 * points.len() as f64);
    let mut deriv = Estimate::default();
    let mut func = Estimate::default();
    for w in points.windows(2) {
        let (p, q) = (w[0], w[1]);
        func += gauss_kronrod(|x| -f.eval(t, x) * phi.derivative(x), p, q, piece_tol)?;
        let g = |x: f64| f.dx(t, x) * phi.value(x);
        match gauss_kronrod_points(g, &[p, q], piece_tol, 2_000) {
            Ok(e) => deriv += e,
            Err(_) => {
                let m = 0.5 * (p + q);
                let sup = f.local_bound(Rect::new(t, t, p, q)) * phi.sup();
                // Neighbourhood of the breakpoint to drop and the bound on
                // its contribution, passed as `cut · sup_bound`.
                let drop = |c: f64| -> (f64, f64) {
                    let budget = 0.1 * piece_tol;
                    let mut eta = 0.5 * (q - p);
                    loop {
                        let tail = f
                            .x_singular_tail(t, c, eta, phi.sup(), phi.derivative_sup())
                            .unwrap_or(eta * sup);
                        if tail <= budget || eta < 1e-300 {
                            return (eta, tail / eta);
                        }
                        eta *= 0.5;
                    }
                };
                let left_sing = bps.contains(&p);
                let right_sing = bps.contains(&q);
                deriv += if left_sing {
                    let (cut, s) = drop(p);
                    integrate_from_singularity(g, p, m, cut, s, 0.5 * piece_tol)?
                } else {
                    gauss_kronrod(g, p, m, 0.5 * piece_tol)?
                };
                deriv += if right_sing {
                    let (cut, s) = drop(q);
                    let e = integrate_from_singularity(g, q, m, cut, s, 0.5 * piece_tol)?;
                    Estimate::new(-e.value, e.error)
                } else {
                    gauss_kronrod(g, m, q, 0.5 * piece_tol)?
                };
            }
        }
    }
    Ok(WeakDerivativeCheck {
        derivative_side: deriv,
        function_side: func,
        defect: deriv.value - func.value,
    })
}

/// Product test function `φ(t, x) = φ_t(t) φ_x(x)` for the two-dimensional
/// check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction2 {
    pub time: TestFunction,
    pub space: TestFunction,
}

/// Two-dimensional integration-by-parts check for `which ∈ {∂t, ∂x}` over
/// `[0, ∞) × U`, using a tensor Gauss–Legendre rule on each cell of the
/// breakpoint grid. Suitable for piecewise smooth (non-oscillatory) `f`.
pub fn weak_derivative_check_2d<F: WeakFunction + ?Sized>(
    f: &F,
    phi: &TestFunction2,
    which: Partial,
    nodes: usize,
) -> Result<f64> {
    let (t_a, t_b) = phi.time.support();
    if t_a < 0.0 {
        return Err(invalid("test function", "time support must lie in [0, ∞)"));
    }
    let (x_a, x_b) = phi.space.support();
    let mut tp = vec![t_a];
    tp.extend(f.t_breakpoints().into_iter().filter(|c| *c > t_a && *c < t_b));
    tp.push(t_b);
    let mut xp = vec![x_a];
    xp.extend(f.x_breakpoints().into_iter().filter(|c| *c > x_a && *c < x_b));
    xp.push(x_b);
    let rule = GaussLegendre::new(nodes);
    let mut lhs = crate::quad::NeumaierSum::default();
    let mut rhs = crate::quad::NeumaierSum::default();
    for tw in tp.windows(2) {
        for (s, ws) in rule.mapped(tw[0], tw[1]) {
            for xw in xp.windows(2) {
                for (y, wy) in rule.mapped(xw[0], xw[1]) {
                    let w = ws * wy;
                    let (phi_v, dphi) = match which {
                        Partial::T => (
                            phi.time.value(s) * phi.space.value(y),
                            phi.time.derivative(s) * phi.space.value(y),
                        ),
                        Partial::X => (
                            phi.time.value(s) * phi.space.value(y),
                            phi.time.value(s) * phi.space.derivative(y),
                        ),
                    };
                    lhs.add(w * f.partial(which, s, y) * phi_v);
                    rhs.add(-w * f.eval(s, y) * dphi);
                }
            }
        }
    }
    Ok(lhs.total() - rhs.total())
}
