//! One-dimensional quadrature used throughout the crate.
//!
//! Three rules live here:
//!
//! * fixed Gauss–Legendre rules (nodes computed by Newton iteration on the
//!   Legendre recurrence), used for tensor grids on the mollifier ball;
//! * adaptive Simpson, used per inter-jump segment of a sample path;
//! * globally adaptive Gauss–Kronrod (G7/K15), used for Lévy-measure
//!   integrals and integration-by-parts checks.
//!
//! [`integrate_from_singularity`] handles integrands that oscillate without
//! bound near one endpoint (e.g. `cos(1/x)` at the origin) by the inversion
//! `x = c ± 1/u`, which turns the accumulation of oscillations into a
//! constant-period decaying tail.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Value of a quadrature together with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate::new(self.value + rhs.value, self.error + rhs.error)
    }
}

impl std::ops::AddAssign for Estimate {
    fn add_assign(&mut self, rhs: Estimate) {
        self.value += rhs.value;
        self.error += rhs.error;
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Self {
        let mut acc = NeumaierSum::default();
        let mut err = 0.0;
        for e in iter {
            acc.add(e.value);
            err += e.error;
        }
        Estimate::new(acc.total(), err)
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess for the i-th root (descending order).
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mut acc = NeumaierSum::default();
        for (x, w) in self.mapped(a, b) {
            acc.add(w * f(x));
        }
        acc.total()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

const SIMPSON_MAX_EVALS: usize = 1 << 18;

/// Adaptive Simpson quadrature with Richardson correction.
///
/// `tol` is an absolute tolerance for the whole interval. The returned error
/// estimate is the sum of the per-panel `|S2 - S1| / 15` terms. Refinement
/// stops after `2^18` evaluations, so unresolvable integrands fail fast.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate::default());
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut worst = (a, b, 0.0);
    let mut budget = SIMPSON_MAX_EVALS;
    let est = simpson_step(&mut f, a, b, fa, fm, fb, whole, tol, max_depth, &mut worst, &mut budget);
    if !(est.error <= tol) || !est.value.is_finite() {
        return Err(Error::Quadrature {
            a: worst.0,
            b: worst.1,
            estimate: est.error,
            tol,
        });
    }
    Ok(est)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    worst: &mut (f64, f64, f64),
    budget: &mut usize,
) -> Estimate {
    *budget = budget.saturating_sub(2);
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let err = delta.abs() / 15.0;
    if err <= tol || depth == 0 || *budget == 0 || m <= a || m >= b {
        if !(err <= tol) && !(err <= worst.2) {
            *worst = (a, b, err);
        }
        return Estimate::new(left + right + delta / 15.0, err);
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, worst, budget)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, worst, budget)
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kron * h;
    let raw = ((kron - gauss) * h).abs();
    // QUADPACK-style scaling of the raw Gauss/Kronrod difference.
    let error = if raw == 0.0 {
        0.0
    } else {
        raw * (200.0 * raw / value.abs().max(f64::MIN_POSITIVE)).powf(1.5).min(1.0)
    };
    let error = error.max(raw * 1e-3).max(50.0 * f64::EPSILON * value.abs());
    Estimate::new(value, error)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

/// Globally adaptive G7/K15 quadrature over `[a, b]` split first at `points`.
///
/// Bisects the panel with the largest error estimate until the summed
/// estimate drops below `tol` (absolute) or `max_panels` is reached. The
/// target never goes below the rounding floor `ROUNDOFF · Σ|panel value|`,
/// so heavy measures with large total mass do not ask for digits that
/// double precision cannot deliver.
pub fn gauss_kronrod_points<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    tol: f64,
    max_panels: usize,
) -> Result<Estimate> {
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(Panel {
                a: w[0],
                b: w[1],
                est: kronrod15(&mut f, w[0], w[1]),
            });
        }
    }
    if heap.is_empty() {
        return Ok(Estimate::default());
    }
    let target = |heap: &BinaryHeap<Panel>| {
        let (err, mag) = heap
            .iter()
            .fold((0.0, 0.0), |(e, m), p| (e + p.est.error, m + p.est.value.abs()));
        (err, tol.max(ROUNDOFF * mag))
    };
    loop {
        let (total_err, tol) = target(&heap);
        if total_err <= tol {
            break;
        }
        if heap.len() >= max_panels {
            let worst = heap.peek().copied().expect("non-empty heap");
            return Err(Error::Quadrature {
                a: worst.a,
                b: worst.b,
                estimate: total_err,
                tol,
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // Panel at floating-point resolution; keep it and stop refining.
            heap.push(worst);
            let (total, tol) = target(&heap);
            if total <= tol {
                break;
            }
            return Err(Error::Quadrature {
                a: worst.a,
                b: worst.b,
                estimate: total,
                tol,
            });
        }
        heap.push(Panel {
            a: worst.a,
            b: m,
            est: kronrod15(&mut f, worst.a, m),
        });
        heap.push(Panel {
            a: m,
            b: worst.b,
            est: kronrod15(&mut f, m, worst.b),
        });
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(panels.into_iter().map(|p| p.est).sum())
}

/// Globally adaptive G7/K15 quadrature over `[a, b]`.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate::default());
    }
    if a > b {
        return gauss_kronrod(f, b, a, tol).map(|e| Estimate::new(-e.value, e.error));
    }
    gauss_kronrod_points(f, &[a, b], tol, 20_000)
}

const MAX_INVERTED_PANELS: f64 = 200_000.0;

/// Integral of `f` over the interval between `c` and `far`, where `f` may
/// oscillate without bound as `x -> c`.
///
/// The piece within `cut` of `c` is dropped; its contribution is bounded by
/// `cut * sup_bound` (a caller-supplied bound on `|f|` near `c`) and added
/// to the error estimate. The remainder is integrated in the inverted
/// variable `u = 1 / |x - c|`.
pub fn integrate_from_singularity<F: FnMut(f64) -> f64>(
    mut f: F,
    c: f64,
    far: f64,
    cut: f64,
    sup_bound: f64,
    tol: f64,
) -> Result<Estimate> {
    let len = (far - c).abs();
    if len == 0.0 {
        return Ok(Estimate::default());
    }
    let sign = (far - c).signum();
    if cut >= len {
        return Ok(Estimate::new(0.0, len * sup_bound));
    }
    let u_lo = 1.0 / len;
    let u_hi = 1.0 / cut;
    // Geometric pre-split keeps the initial panels well scaled across
    // decades; the width cap keeps each panel to a few oscillations, since
    // a Kronrod estimate over many periods can alias to a small error.
    let width = (u_hi / MAX_INVERTED_PANELS).max(1.0);
    let mut points = vec![u_lo];
    let mut u = u_lo;
    while u < u_hi {
        u = (2.0 * u).min(u + width).min(u_hi);
        points.push(u);
    }
    let est = gauss_kronrod_points(
        |u| {
            let x = c + sign / u;
            f(x) / (u * u)
        },
        &points,
        tol,
        4_000_000.max(2 * points.len()),
    )?;
    Ok(Estimate::new(sign * est.value, est.error + cut * sup_bound))
}

/// Neumaier's variant of Kahan compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Unevaluated sum `hi + lo` of two doubles (double-double arithmetic).
///
/// Used where an identity must telescope without rounding drift, e.g. the
/// jump sum `Σ f(X_{s-} + ΔX) - f(X_{s-})` over hundreds of jumps.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

impl DoubleDouble {
    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    /// Exact difference `a - b` as a double-double.
    pub fn diff(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, -b);
        Self { hi, lo }
    }

    pub fn add_f64(self, x: f64) -> Self {
        self + DoubleDouble::from_f64(x)
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl std::ops::Add for DoubleDouble {
    type Output = Self;

    fn add(self, other: DoubleDouble) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = two_sum(s, e);
        Self { hi, lo }
    }
}

impl std::ops::Neg for DoubleDouble {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}
