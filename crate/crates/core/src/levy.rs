//! Finite-variation pure-jump Lévy models and their sample paths.
//!
//! A path is generated from the Poisson random measure representation
//! `X_t = x0 + γ t + Σ_{T_i ≤ t} ΔX_i`, keeping only jumps with `|ΔX| ≥ δ`.
//! Dropped small jumps are not compensated; their pathwise effect is
//! bounded by [`truncation_bias_bound`].

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{invalid, Error, Result};
use crate::quad::{gauss_kronrod, gauss_kronrod_points, Estimate, GaussLegendre};
use crate::rng::path_rng;

/// Default number of nodes per side in the inverse-CDF jump tables.
pub const DEFAULT_TABLE_NODES: usize = 4096;

/// Default relative tolerance used by measure quadratures.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Whether a custom measure has finite total mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activity {
    Finite,
    Infinite,
    Unknown,
}

/// Family tag of a Lévy measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyTag {
    CompoundPoisson,
    CgmyClass,
    VarianceGamma,
    Custom,
}

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Family {
    Zero,
    NormalJumps { lambda: f64, mean: f64, std: f64 },
    Atoms(Vec<(f64, f64)>),
    VarianceGamma { c: f64, g: f64, m: f64 },
    Cgmy { c: f64, g: f64, m: f64, y: f64 },
    Custom { density: DensityFn, activity: Activity },
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Zero => write!(f, "Zero"),
            Family::NormalJumps { lambda, mean, std } => {
                write!(f, "NormalJumps(lambda={lambda}, mean={mean}, std={std})")
            }
            Family::Atoms(a) => write!(f, "Atoms({a:?})"),
            Family::VarianceGamma { c, g, m } => write!(f, "VarianceGamma(C={c}, G={g}, M={m})"),
            Family::Cgmy { c, g, m, y } => write!(f, "Cgmy(C={c}, G={g}, M={m}, Y={y})"),
            Family::Custom { activity, .. } => write!(f, "Custom({activity:?})"),
        }
    }
}

/// Lévy density of the CGMY class, `C e^{-G|x|}/|x|^{1+Y}` for `x < 0` and
/// `C e^{-Mx}/x^{1+Y}` for `x > 0`. `Y = 0` is the variance-gamma density.
pub fn cgmy_density(c: f64, g: f64, m: f64, y: f64) -> impl Fn(f64) -> f64 + Send + Sync + Copy {
    move |x: f64| {
        if x > 0.0 {
            c * (-m * x).exp() / x.powf(1.0 + y)
        } else if x < 0.0 {
            c * (g * x).exp() / (-x).powf(1.0 + y)
        } else {
            0.0
        }
    }
}

/// Lévy measure `ν` on `ℝ \ {0}`: a density part plus optional atoms.
#[derive(Debug, Clone)]
pub struct LevyMeasure {
    family: Family,
    /// Support as `(negative side bound, positive side bound)`, both ≥ 0;
    /// `f64::INFINITY` for unbounded sides.
    support: (f64, f64),
    small_jump_mass: f64,
}

/// Outcome of the finite-variation check.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteVariation {
    pub finite: bool,
    /// Converged (or last) value of `∫_{|x|≤1} |x| ν(dx)`.
    pub mass: f64,
    /// Partial sums over `{10^{-k} ≤ |x| ≤ 1}`, k = 1, 2, ...
    pub partial_sums: Vec<f64>,
}

/// Checks `∫_{|x|≤1} |x| ν(dx) < ∞` for a density by geometric refinement of
/// the inner cutoff `r = 10^{-k}`.
///
/// Each refinement adds the slab `{r/10 ≤ |x| ≤ r}`. The slab masses of the
/// families of interest decay geometrically, so the remaining mass is
/// extrapolated from the last ratio; the check converges once the
/// extrapolated total changes by less than `quad_tol` (relative).
pub fn check_finite_variation<F: Fn(f64) -> f64>(density: F, quad_tol: f64) -> FiniteVariation {
    const MAX_STEPS: usize = 120;
    let slab = |lo: f64, hi: f64| -> f64 {
        // Absolute tolerance relative to a crude 16-point estimate of the slab.
        let crude = GaussLegendre::new(16).integrate(lo, hi, |x| x * (density(x).abs() + density(-x).abs()));
        let size = if crude.is_finite() { crude } else { 0.0 };
        let tol = (1e-3 * quad_tol * size).max(f64::MIN_POSITIVE);
        let pos = gauss_kronrod(|x| x * density(x), lo, hi, tol).map(|e| e.value);
        let neg = gauss_kronrod(|x| x * density(-x), lo, hi, tol).map(|e| e.value);
        match (pos, neg) {
            (Ok(p), Ok(n)) => p + n,
            _ => f64::INFINITY,
        }
    };
    let mut partial = Vec::new();
    let mut sum = slab(0.1, 1.0);
    partial.push(sum);
    let mut prev_inc = f64::NAN;
    let mut prev_total = f64::NAN;
    let mut r = 0.1;
    let mut growing = 0;
    for _ in 0..MAX_STEPS {
        let inc = slab(0.1 * r, r);
        r *= 0.1;
        sum += inc;
        partial.push(sum);
        if !sum.is_finite() {
            break;
        }
        if inc == 0.0 {
            return FiniteVariation {
                finite: true,
                mass: sum,
                partial_sums: partial,
            };
        }
        if prev_inc.is_finite() && prev_inc > 0.0 {
            let q = inc / prev_inc;
            if q >= 1.0 {
                growing += 1;
                if growing >= 3 {
                    break;
                }
                prev_inc = inc;
                continue;
            }
            growing = 0;
            let total = sum + inc * q / (1.0 - q);
            if prev_total.is_finite() && (total - prev_total).abs() <= quad_tol * total.abs() {
                return FiniteVariation {
                    finite: true,
                    mass: total,
                    partial_sums: partial,
                };
            }
            prev_total = total;
        }
        prev_inc = inc;
    }
    FiniteVariation {
        finite: false,
        mass: f64::INFINITY,
        partial_sums: partial,
    }
}

impl LevyMeasure {
    /// The zero measure (pure drift).
    pub fn zero() -> Self {
        Self {
            family: Family::Zero,
            support: (0.0, 0.0),
            small_jump_mass: 0.0,
        }
    }

    /// Compound Poisson with intensity `lambda` and `N(mean, std²)` jumps.
    pub fn compound_poisson_normal(lambda: f64, mean: f64, std: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", "must be finite and >= 0"));
        }
        if !(std > 0.0 && std.is_finite()) {
            return Err(invalid("std", "must be finite and > 0"));
        }
        if !mean.is_finite() {
            return Err(invalid("mean", "must be finite"));
        }
        let mut m = Self {
            family: Family::NormalJumps { lambda, mean, std },
            support: (f64::INFINITY, f64::INFINITY),
            small_jump_mass: 0.0,
        };
        m.small_jump_mass = m.abs_moment_below(1.0)?;
        Ok(m)
    }

    /// Compound Poisson with finitely many jump sizes; `atoms` holds
    /// `(size, rate)` pairs.
    pub fn compound_poisson_atoms(atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(size, rate) in &atoms {
            if !size.is_finite() || size == 0.0 {
                return Err(invalid("atoms", "jump sizes must be finite and nonzero"));
            }
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(invalid("atoms", "rates must be finite and >= 0"));
            }
        }
        let neg = atoms.iter().filter(|a| a.0 < 0.0).map(|a| -a.0).fold(0.0, f64::max);
        let pos = atoms.iter().filter(|a| a.0 > 0.0).map(|a| a.0).fold(0.0, f64::max);
        let small = atoms.iter().filter(|a| a.0.abs() <= 1.0).map(|a| a.0.abs() * a.1).sum();
        Ok(Self {
            family: Family::Atoms(atoms),
            support: (neg, pos),
            small_jump_mass: small,
        })
    }

    /// Variance-gamma Lévy density `C e^{-G|x|}/|x|` (x<0), `C e^{-Mx}/x` (x>0).
    pub fn variance_gamma(c: f64, g: f64, m: f64) -> Result<Self> {
        check_positive("C", c)?;
        check_positive("G", g)?;
        check_positive("M", m)?;
        Self::from_density_family(Family::VarianceGamma { c, g, m })
    }

    /// CGMY-class (tempered stable) measure; finite variation requires `Y < 1`.
    pub fn cgmy(c: f64, g: f64, m: f64, y: f64) -> Result<Self> {
        check_positive("C", c)?;
        check_positive("G", g)?;
        check_positive("M", m)?;
        if !(y < 1.0) || !y.is_finite() {
            return Err(invalid(
                "Y",
                format!("CGMY-class measure needs Y < 1 for finite variation, got {y}"),
            ));
        }
        Self::from_density_family(Family::Cgmy { c, g, m, y })
    }

    /// User-supplied density with support `[-neg_bound, pos_bound]`. Both
    /// bounds must be finite so that tables and quadratures have an end.
    pub fn custom(density: DensityFn, neg_bound: f64, pos_bound: f64, activity: Activity) -> Result<Self> {
        if !(neg_bound >= 0.0 && neg_bound.is_finite()) {
            return Err(invalid("support", "negative bound must be finite and >= 0"));
        }
        if !(pos_bound >= 0.0 && pos_bound.is_finite()) {
            return Err(invalid("support", "positive bound must be finite and >= 0"));
        }
        let mut m = Self {
            family: Family::Custom { density, activity },
            support: (neg_bound, pos_bound),
            small_jump_mass: 0.0,
        };
        m.validate_density()?;
        let fv = m.check_finite_variation(1e-8);
        if !fv.finite {
            return Err(Error::NotFiniteVariation {
                partial_sums: fv.partial_sums,
            });
        }
        m.small_jump_mass = fv.mass;
        Ok(m)
    }

    fn from_density_family(family: Family) -> Result<Self> {
        let mut m = Self {
            family,
            support: (f64::INFINITY, f64::INFINITY),
            small_jump_mass: 0.0,
        };
        m.validate_density()?;
        let fv = m.check_finite_variation(1e-8);
        if !fv.finite {
            return Err(Error::NotFiniteVariation {
                partial_sums: fv.partial_sums,
            });
        }
        m.small_jump_mass = fv.mass;
        Ok(m)
    }

    fn validate_density(&self) -> Result<()> {
        for k in -40..=40 {
            let x = 10f64.powf(k as f64 / 8.0);
            for s in [x, -x] {
                let d = self.density(s);
                if !(d >= 0.0) {
                    return Err(invalid("density", format!("negative or NaN density {d} at {s}")));
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> FamilyTag {
        match self.family {
            Family::Zero | Family::NormalJumps { .. } | Family::Atoms(_) => FamilyTag::CompoundPoisson,
            Family::VarianceGamma { .. } => FamilyTag::VarianceGamma,
            Family::Cgmy { .. } => FamilyTag::CgmyClass,
            Family::Custom { .. } => FamilyTag::Custom,
        }
    }

    /// Short description with parameters, for report headers.
    pub fn describe(&self) -> String {
        format!("{:?}", self.family)
    }

    /// Density of the absolutely continuous part at `x ≠ 0`.
    pub fn density(&self, x: f64) -> f64 {
        if x == 0.0 || x > self.support.1 || -x > self.support.0 {
            return 0.0;
        }
        match &self.family {
            Family::Zero | Family::Atoms(_) => 0.0,
            Family::NormalJumps { lambda, mean, std } => {
                let z = (x - mean) / std;
                lambda * (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
            }
            Family::VarianceGamma { c, g, m } => cgmy_density(*c, *g, *m, 0.0)(x),
            Family::Cgmy { c, g, m, y } => cgmy_density(*c, *g, *m, *y)(x),
            Family::Custom { density, .. } => density(x),
        }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        match &self.family {
            Family::Atoms(a) => a,
            _ => &[],
        }
    }

    /// `Some(true)` when `ν(ℝ) < ∞`, `None` when unknown.
    pub fn finite_activity(&self) -> Option<bool> {
        match &self.family {
            Family::Zero | Family::NormalJumps { .. } | Family::Atoms(_) => Some(true),
            Family::VarianceGamma { .. } => Some(false),
            Family::Cgmy { y, .. } => Some(*y < 0.0),
            Family::Custom { activity, .. } => match activity {
                Activity::Finite => Some(true),
                Activity::Infinite => Some(false),
                Activity::Unknown => None,
            },
        }
    }

    /// `∫_{|x|≤1} |x| ν(dx)`, computed at construction.
    pub fn small_jump_mass(&self) -> f64 {
        self.small_jump_mass
    }

    pub fn check_finite_variation(&self, quad_tol: f64) -> FiniteVariation {
        match &self.family {
            Family::Zero | Family::Atoms(_) => FiniteVariation {
                finite: true,
                mass: self
                    .atoms()
                    .iter()
                    .filter(|a| a.0.abs() <= 1.0)
                    .map(|a| a.0.abs() * a.1)
                    .sum(),
                partial_sums: vec![],
            },
            _ => check_finite_variation(|x| self.density(x), quad_tol),
        }
    }

    /// Bound beyond which the measure (weighted by `e^{growth·|y|}`) has
    /// negligible mass on one side. `positive` selects the side.
    pub(crate) fn side_bound(&self, positive: bool, growth: f64) -> Result<f64> {
        let support = if positive { self.support.1 } else { self.support.0 };
        let b = match &self.family {
            Family::Zero => 0.0,
            Family::Atoms(_) => support,
            Family::Custom { .. } => support,
            Family::NormalJumps { mean, std, .. } => {
                let centre = if positive { *mean } else { -*mean };
                (centre + growth * std * std + 14.0 * std).max(0.0)
            }
            Family::VarianceGamma { g, m, .. } | Family::Cgmy { g, m, .. } => {
                let rate = if positive { *m } else { *g };
                if rate <= growth {
                    return Err(Error::MartingaleCorrection(format!(
                        "tempering rate {rate} does not exceed exponential growth {growth}"
                    )));
                }
                45.0 / (rate - growth)
            }
        };
        Ok(b.min(support))
    }

    /// `∫_{lo ≤ |y| ≤ hi} g(y) ν(dy)` with absolute tolerance `tol`.
    ///
    /// `growth` declares `|g(y)| ≲ e^{growth·|y|}` for the tail cutoff.
    /// Atoms with `lo ≤ |size| ≤ hi` are included exactly.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64, growth: f64, tol: f64) -> Result<Estimate> {
        let mut total = Estimate::default();
        for &(size, rate) in self.atoms() {
            if size.abs() >= lo && size.abs() <= hi {
                total.value += rate * g(size);
            }
        }
        if matches!(self.family, Family::Zero | Family::Atoms(_)) {
            return Ok(total);
        }
        for positive in [true, false] {
            let bound = self.side_bound(positive, growth)?.min(hi);
            if bound <= lo {
                continue;
            }
            let points = geometric_points(lo, bound);
            let sgn = if positive { 1.0 } else { -1.0 };
            let est = gauss_kronrod_points(
                |x| {
                    let y = sgn * x;
                    g(y) * self.density(y)
                },
                &points,
                0.5 * tol,
                200_000,
            )?;
            total += est;
        }
        Ok(total)
    }

    /// `∫_{|x|<δ} |x| ν(dx)`.
    fn abs_moment_below(&self, delta: f64) -> Result<f64> {
        if delta <= 0.0 {
            return Ok(0.0);
        }
        let atoms: f64 = self
            .atoms()
            .iter()
            .filter(|a| a.0.abs() < delta)
            .map(|a| a.0.abs() * a.1)
            .sum();
        if matches!(self.family, Family::Zero | Family::Atoms(_)) {
            return Ok(atoms);
        }
        let mut total = atoms;
        for positive in [true, false] {
            let sgn = if positive { 1.0 } else { -1.0 };
            let bound = self.side_bound(positive, 0.0)?.min(delta);
            if bound <= 0.0 {
                continue;
            }
            let points = geometric_points(0.0, bound);
            let scale = bound * (self.density(sgn * bound) + 1.0);
            total += gauss_kronrod_points(|x| x * self.density(sgn * x), &points, 1e-13 * scale, 200_000)?.value;
        }
        Ok(total)
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

/// Breakpoints from `lo` to `hi`, quartering towards `lo` so that power-law
/// behaviour near the origin is resolved decade by decade.
fn geometric_points(lo: f64, hi: f64) -> Vec<f64> {
    let floor = if lo > 0.0 { lo } else { hi * 1e-15 };
    let mut pts = vec![hi];
    let mut x = hi;
    while x * 0.25 > floor {
        x *= 0.25;
        pts.push(x);
    }
    if lo > 0.0 {
        pts.push(lo);
    } else {
        pts.push(floor);
        pts.push(0.0);
    }
    pts.reverse();
    pts.dedup();
    pts
}

/// Characteristic triplet `(σ², ν, γ)` of a finite-variation Lévy process.
#[derive(Debug, Clone)]
pub struct LevyModel {
    pub measure: LevyMeasure,
    /// Drift in the representation `X_t = γ t + Σ ΔX` (no compensator).
    pub gamma: f64,
    /// Diffusion coefficient; only the PIDE solver accepts `σ > 0`.
    pub sigma: f64,
}

impl LevyModel {
    pub fn new(measure: LevyMeasure, gamma: f64, sigma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(invalid("gamma", "must be finite"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", format!("must be finite and >= 0, got {sigma}")));
        }
        Ok(Self { measure, gamma, sigma })
    }

    pub fn pure_jump(measure: LevyMeasure, gamma: f64) -> Result<Self> {
        Self::new(measure, gamma, 0.0)
    }

    pub(crate) fn require_pure_jump(&self) -> Result<()> {
        if self.sigma != 0.0 {
            return Err(invalid("sigma", "path simulation and Itô verification need sigma = 0"));
        }
        Ok(())
    }
}

/// Why Assumption-style absolute continuity of the marginals holds or fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcReason {
    /// Finite activity: `X_t` has an atom (no jump before t), so the law of
    /// `X_t` is not absolutely continuous.
    FiniteActivityAtom,
    /// Infinite activity with an absolutely continuous Lévy measure; the
    /// marginals are absolutely continuous (Sato, Theorem 27.7).
    InfiniteActivityAcMeasure,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AcVerdict {
    pub satisfied: bool,
    pub reason: AcReason,
}

/// Decides whether every marginal `X_t`, `t > 0`, has a Lebesgue density.
pub fn check_assumption_ac(model: &LevyModel) -> AcVerdict {
    match model.measure.finite_activity() {
        Some(true) => AcVerdict {
            satisfied: false,
            reason: AcReason::FiniteActivityAtom,
        },
        // Every non-atomic family here is given by a density.
        Some(false) if model.measure.atoms().is_empty() => AcVerdict {
            satisfied: true,
            reason: AcReason::InfiniteActivityAcMeasure,
        },
        _ => AcVerdict {
            satisfied: false,
            reason: AcReason::Unknown,
        },
    }
}

/// `λ_δ = ν({|x| ≥ δ})`; for `δ = 0` the total mass of a finite-activity
/// measure.
pub fn tail_intensity(measure: &LevyMeasure, delta: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(invalid("delta", "must be >= 0"));
    }
    if delta == 0.0 && measure.finite_activity() != Some(true) {
        return Err(Error::InfiniteIntensity { delta });
    }
    let scale = 1.0 + measure.density(delta.max(1e-300)).abs() * delta.max(1.0);
    let est = measure.integrate(|_| 1.0, delta, f64::INFINITY, 0.0, 1e-12 * scale)?;
    Ok(est.value.max(0.0))
}

/// `T · ∫_{|x|<δ} |x| ν(dx)`: pathwise bound on the omitted small jumps.
pub fn truncation_bias_bound(measure: &LevyMeasure, delta: f64, horizon: f64) -> Result<f64> {
    Ok(horizon * measure.abs_moment_below(delta)?)
}

#[derive(Debug, Clone)]
struct SideTable {
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
    log_spaced: bool,
}

impl SideTable {
    fn build(measure: &LevyMeasure, positive: bool, delta: f64, n: usize) -> Result<Option<SideTable>> {
        let upper = measure.side_bound(positive, 0.0)?;
        if upper <= delta {
            return Ok(None);
        }
        let sgn = if positive { 1.0 } else { -1.0 };
        let log_spaced = delta > 0.0;
        let nodes: Vec<f64> = (0..=n)
            .map(|i| {
                let f = i as f64 / n as f64;
                if log_spaced {
                    delta * (upper / delta).powf(f)
                } else {
                    upper * f
                }
            })
            .collect();
        let mut cumulative = Vec::with_capacity(n + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for w in nodes.windows(2) {
            let cell = gauss_kronrod(|x| measure.density(sgn * x), w[0], w[1], 1e-14 * (1.0 + acc))?;
            acc += cell.value.max(0.0);
            cumulative.push(acc);
        }
        if acc <= 0.0 {
            return Ok(None);
        }
        Ok(Some(SideTable {
            nodes,
            cumulative,
            log_spaced,
        }))
    }

    fn mass(&self) -> f64 {
        *self.cumulative.last().expect("non-empty table")
    }

    fn invert(&self, u: f64) -> f64 {
        let target = u * self.mass();
        let i = self
            .cumulative
            .partition_point(|&c| c < target)
            .clamp(1, self.nodes.len() - 1);
        let (c0, c1) = (self.cumulative[i - 1], self.cumulative[i]);
        let frac = if c1 > c0 {
            ((target - c0) / (c1 - c0)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        let (x0, x1) = (self.nodes[i - 1], self.nodes[i]);
        if self.log_spaced {
            x0 * (x1 / x0).powf(frac)
        } else {
            x0 + (x1 - x0) * frac
        }
    }
}

/// Sampler for `ν` restricted to `{|x| ≥ δ}` and normalised by `λ_δ`.
///
/// Each side of the density part is tabulated as an inverse CDF on
/// log-spaced nodes (linear nodes when `δ = 0`); atoms are drawn
/// discretely. The side is chosen in proportion to its mass.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    delta: f64,
    positive: Option<SideTable>,
    negative: Option<SideTable>,
    atoms: Vec<(f64, f64)>,
    atom_mass: f64,
}

impl JumpSampler {
    pub fn new(measure: &LevyMeasure, delta: f64) -> Result<Self> {
        Self::with_nodes(measure, delta, DEFAULT_TABLE_NODES)
    }

    pub fn with_nodes(measure: &LevyMeasure, delta: f64, nodes: usize) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(invalid("delta", "must be >= 0"));
        }
        if delta == 0.0 && measure.finite_activity() != Some(true) {
            return Err(Error::InfiniteIntensity { delta });
        }
        let atoms: Vec<(f64, f64)> = measure
            .atoms()
            .iter()
            .copied()
            .filter(|a| a.0.abs() >= delta && a.1 > 0.0)
            .collect();
        let atom_mass = atoms.iter().map(|a| a.1).sum();
        let has_density = !matches!(measure.family, Family::Zero | Family::Atoms(_));
        let (positive, negative) = if has_density {
            (
                SideTable::build(measure, true, delta, nodes)?,
                SideTable::build(measure, false, delta, nodes)?,
            )
        } else {
            (None, None)
        };
        Ok(Self {
            delta,
            positive,
            negative,
            atoms,
            atom_mass,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Tabulated `λ_δ`.
    pub fn intensity(&self) -> f64 {
        self.atom_mass
            + self.positive.as_ref().map_or(0.0, SideTable::mass)
            + self.negative.as_ref().map_or(0.0, SideTable::mass)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = self.intensity();
        debug_assert!(total > 0.0, "sampling from an empty measure");
        let mut pick = rng.random::<f64>() * total;
        if pick < self.atom_mass {
            for &(size, rate) in &self.atoms {
                if pick < rate {
                    return size;
                }
                pick -= rate;
            }
            return self.atoms.last().map_or(0.0, |a| a.0);
        }
        pick -= self.atom_mass;
        let pos_mass = self.positive.as_ref().map_or(0.0, SideTable::mass);
        let u: f64 = rng.random();
        let x = if pick < pos_mass {
            self.positive.as_ref().map(|t| t.invert(u)).unwrap_or(0.0)
        } else {
            -self.negative.as_ref().map(|t| t.invert(u)).unwrap_or(0.0)
        };
        // Keep the |ΔX| ≥ δ contract against rounding at the first node.
        if x.abs() < self.delta {
            self.delta.copysign(x)
        } else {
            x
        }
    }
}

/// Draws one jump from `ν|_{|x|≥δ} / λ_δ`.
pub fn sample_jump_size<R: Rng + ?Sized>(measure: &LevyMeasure, delta: f64, rng: &mut R) -> Result<f64> {
    let sampler = JumpSampler::new(measure, delta)?;
    if sampler.intensity() <= 0.0 {
        return Err(invalid("delta", "no Lévy mass above the truncation level"));
    }
    Ok(sampler.sample(rng))
}

/// One realisation of a truncated finite-variation Lévy path.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub x0: f64,
    pub gamma: f64,
    pub jump_times: Vec<f64>,
    pub jump_sizes: Vec<f64>,
    pub delta: f64,
    pub horizon: f64,
    pub seed: u64,
    pub index: u64,
    /// `levels[i] = x0 + ΔX_1 + ... + ΔX_i`, accumulated left to right.
    levels: Vec<f64>,
}

impl SamplePath {
    pub fn new(
        x0: f64,
        gamma: f64,
        jump_times: Vec<f64>,
        jump_sizes: Vec<f64>,
        delta: f64,
        horizon: f64,
        seed: u64,
    ) -> Result<Self> {
        if jump_times.len() != jump_sizes.len() {
            return Err(invalid("jump_sizes", "length differs from jump_times"));
        }
        if !(horizon > 0.0) {
            return Err(invalid("horizon", "must be > 0"));
        }
        if jump_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("jump_times", "must be strictly increasing"));
        }
        if jump_times.iter().any(|&t| !(0.0..=horizon).contains(&t)) {
            return Err(invalid("jump_times", "must lie in [0, T]"));
        }
        if jump_sizes.iter().any(|&j| !(j.abs() >= delta) || j == 0.0) {
            return Err(invalid("jump_sizes", "every |jump| must be >= delta and nonzero"));
        }
        let mut levels = Vec::with_capacity(jump_sizes.len() + 1);
        let mut level = x0;
        levels.push(level);
        for &j in &jump_sizes {
            level += j;
            levels.push(level);
        }
        Ok(Self {
            x0,
            gamma,
            jump_times,
            jump_sizes,
            delta,
            horizon,
            seed,
            index: 0,
            levels,
        })
    }

    pub fn n_jumps(&self) -> usize {
        self.jump_times.len()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if (0.0..=self.horizon).contains(&t) {
            Ok(())
        } else {
            Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            })
        }
    }

    /// Jump level after the first `n` jumps: `x0 + Σ_{i≤n} ΔX_i`.
    pub fn level(&self, n: usize) -> f64 {
        self.levels[n]
    }

    /// Number of jumps at times `≤ t`.
    pub fn jumps_through(&self, t: f64) -> usize {
        self.jump_times.partition_point(|&s| s <= t)
    }

    /// Number of jumps at times `< t`.
    pub fn jumps_before(&self, t: f64) -> usize {
        self.jump_times.partition_point(|&s| s < t)
    }

    /// Right-continuous value `X_t`.
    pub fn value(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.levels[self.jumps_through(t)] + self.gamma * t)
    }

    /// Left limit `X_{t-}` (equals `X_0` at `t = 0`).
    pub fn value_left(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.levels[self.jumps_before(t)] + self.gamma * t)
    }

    /// Path with all jumps of size `< delta` removed (Poisson thinning by
    /// mark, so the result is a path of the same model truncated at `delta`).
    pub fn coarsen(&self, delta: f64) -> SamplePath {
        let (times, sizes): (Vec<f64>, Vec<f64>) = self
            .jump_times
            .iter()
            .zip(&self.jump_sizes)
            .filter(|(_, j)| j.abs() >= delta)
            .map(|(&t, &j)| (t, j))
            .unzip();
        let mut p = SamplePath::new(
            self.x0,
            self.gamma,
            times,
            sizes,
            delta.max(self.delta),
            self.horizon,
            self.seed,
        )
        .expect("thinning preserves path invariants");
        p.index = self.index;
        p
    }

    /// CSV export: `#`-prefixed metadata then `time,jump_size` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# x0 = {:.16e}\n", self.x0));
        out.push_str(&format!("# gamma = {:.16e}\n", self.gamma));
        out.push_str(&format!("# delta = {:.16e}\n", self.delta));
        out.push_str(&format!("# T = {:.16e}\n", self.horizon));
        out.push_str(&format!("# seed = {}\n", self.seed));
        out.push_str(&format!("# index = {}\n", self.index));
        out.push_str("time,jump_size\n");
        for (t, j) in self.jump_times.iter().zip(&self.jump_sizes) {
            out.push_str(&format!("{t:.16e},{j:.16e}\n"));
        }
        out
    }

    /// Parses the format written by [`SamplePath::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = std::collections::HashMap::new();
        let mut times = Vec::new();
        let mut sizes = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if line.starts_with("time") {
                continue;
            }
            let (t, j) = line
                .split_once(',')
                .ok_or_else(|| invalid("csv", format!("bad row `{line}`")))?;
            times.push(parse_num("time", t)?);
            sizes.push(parse_num("jump_size", j)?);
        }
        let get =
            |k: &'static str| -> Result<&String> { meta.get(k).ok_or_else(|| invalid(k, "missing metadata line")) };
        let seed = get("seed")?
            .parse::<u64>()
            .map_err(|_| invalid("seed", "not an integer"))?;
        let mut p = SamplePath::new(
            parse_num("x0", get("x0")?)?,
            parse_num("gamma", get("gamma")?)?,
            times,
            sizes,
            parse_num("delta", get("delta")?)?,
            parse_num("T", get("T")?)?,
            seed,
        )?;
        if let Some(ix) = meta.get("index") {
            p.index = ix.parse().map_err(|_| invalid("index", "not an integer"))?;
        }
        Ok(p)
    }
}

fn parse_num(name: &'static str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| invalid(name, format!("not a number: `{s}`")))
}

/// Reusable simulator: builds the jump tables once for `(model, δ, T)`.
#[derive(Debug, Clone)]
pub struct PathSimulator {
    gamma: f64,
    horizon: f64,
    delta: f64,
    sampler: Option<JumpSampler>,
    intensity: f64,
}

impl PathSimulator {
    pub fn new(model: &LevyModel, delta: f64, horizon: f64) -> Result<Self> {
        model.require_pure_jump()?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid("T", "must be finite and > 0"));
        }
        if !model.measure.check_finite_variation(1e-6).finite {
            return Err(Error::NotFiniteVariation { partial_sums: vec![] });
        }
        if matches!(model.measure.family, Family::Zero) {
            return Ok(Self {
                gamma: model.gamma,
                horizon,
                delta,
                sampler: None,
                intensity: 0.0,
            });
        }
        let sampler = JumpSampler::new(&model.measure, delta)?;
        let intensity = sampler.intensity();
        if !intensity.is_finite() {
            return Err(Error::InfiniteIntensity { delta });
        }
        Ok(Self {
            gamma: model.gamma,
            horizon,
            delta,
            sampler: Some(sampler),
            intensity,
        })
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Path number `index` of the run keyed by `seed`, started at `x0`.
    pub fn path(&self, x0: f64, seed: u64, index: u64) -> SamplePath {
        let mut rng = path_rng(seed, index);
        let mean = self.intensity * self.horizon;
        let n = if mean > 0.0 {
            Poisson::new(mean).expect("positive Poisson mean").sample(&mut rng) as usize
        } else {
            0
        };
        let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * self.horizon).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let sampler = self.sampler.as_ref();
        let sizes: Vec<f64> = times
            .iter()
            .map(|_| sampler.expect("jumps imply a sampler").sample(&mut rng))
            .collect();
        let mut p = SamplePath::new(x0, self.gamma, times, sizes, self.delta, self.horizon, seed)
            .expect("simulated path satisfies invariants");
        p.index = index;
        p
    }
}

/// Simulates one path on `[0, T]` from `x0 = 0` (stream index 0).
pub fn simulate_path(model: &LevyModel, delta: f64, horizon: f64, seed: u64) -> Result<SamplePath> {
    Ok(PathSimulator::new(model, delta, horizon)?.path(0.0, seed, 0))
}

/// `X_t`, right-continuous.
pub fn path_value(path: &SamplePath, t: f64) -> Result<f64> {
    path.value(t)
}

/// `X_{t-}`.
pub fn path_value_left(path: &SamplePath, t: f64) -> Result<f64> {
    path.value_left(t)
}

/// Model description as read from `key = value` configuration text.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub family: String,
    pub params: Vec<(String, f64)>,
    /// Numeric drift, or `None` for the martingale drift.
    pub gamma: Option<f64>,
    pub sigma: f64,
    pub delta: f64,
}

/// Keys accepted in a model section.
pub const MODEL_KEYS: &[&str] = &[
    "family", "gamma", "sigma", "delta", "lambda", "mean", "std", "jump", "c", "g", "m", "y",
];

impl ModelSpec {
    /// Builds a spec from `key = value` pairs; unknown keys are rejected.
    ///
    /// Families: `zero`, `compound_poisson` (keys `lambda` plus either
    /// `mean`/`std` or a fixed `jump` size), `variance_gamma` (`c`, `g`, `m`),
    /// `cgmy` (`c`, `g`, `m`, `y`). `gamma = martingale` selects `γ*`.
    pub fn from_pairs<'a, I: IntoIterator<Item = (&'a str, &'a str)>>(pairs: I) -> Result<Self> {
        let mut family = None;
        let mut params = Vec::new();
        let mut gamma = Some(0.0);
        let mut sigma = 0.0;
        let mut delta = 0.0;
        for (k, v) in pairs {
            let key = k.trim().to_ascii_lowercase();
            let v = v.trim();
            match key.as_str() {
                "family" => family = Some(v.to_ascii_lowercase()),
                "gamma" => {
                    gamma = if v.eq_ignore_ascii_case("martingale") {
                        None
                    } else {
                        Some(parse_num("gamma", v)?)
                    }
                }
                "sigma" => {
                    sigma = parse_num("sigma", v)?;
                    if !(sigma >= 0.0) {
                        return Err(invalid("sigma", format!("must be >= 0, got {sigma}")));
                    }
                }
                "delta" => {
                    delta = parse_num("delta", v)?;
                    if !(delta >= 0.0) {
                        return Err(invalid("delta", format!("must be >= 0, got {delta}")));
                    }
                }
                "lambda" | "mean" | "std" | "jump" | "c" | "g" | "m" | "y" => {
                    let name: &'static str = MODEL_KEYS.iter().find(|n| **n == key).expect("listed key");
                    params.push((key.clone(), parse_num(name, v)?));
                }
                _ => return Err(invalid("model", format!("unknown key `{k}`"))),
            }
        }
        let family = family.ok_or_else(|| invalid("family", "missing"))?;
        Ok(Self {
            family,
            params,
            gamma,
            sigma,
            delta,
        })
    }

    /// Parses bare `key = value` text (`#` comments allowed).
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line.starts_with('[') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid("model", format!("expected key = value, got `{line}`")))?;
            pairs.push((k, v));
        }
        Self::from_pairs(pairs)
    }

    fn param(&self, name: &'static str) -> Result<f64> {
        self.params
            .iter()
            .rev()
            .find(|(k, _)| k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| invalid(name, format!("required by family `{}`", self.family)))
    }

    pub fn measure(&self) -> Result<LevyMeasure> {
        match self.family.as_str() {
            "zero" | "none" => Ok(LevyMeasure::zero()),
            "compound_poisson" | "cp" => {
                let lambda = self.param("lambda")?;
                if let Ok(j) = self.param("jump") {
                    LevyMeasure::compound_poisson_atoms(vec![(j, lambda)])
                } else {
                    LevyMeasure::compound_poisson_normal(lambda, self.param("mean").unwrap_or(0.0), self.param("std")?)
                }
            }
            "variance_gamma" | "vg" => {
                LevyMeasure::variance_gamma(self.param("c")?, self.param("g")?, self.param("m")?)
            }
            "cgmy" => LevyMeasure::cgmy(self.param("c")?, self.param("g")?, self.param("m")?, self.param("y")?),
            other => Err(invalid("family", format!("unknown family `{other}`"))),
        }
    }

    /// Model with drift `γ`, or `γ* + r_shift` when `gamma = martingale`.
    pub fn model(&self, r_shift: f64) -> Result<LevyModel> {
        let measure = self.measure()?;
        let gamma = match self.gamma {
            Some(g) => g,
            None => crate::mc::martingale_drift(&measure)? + r_shift - 0.5 * self.sigma * self.sigma,
        };
        LevyModel::new(measure, gamma, self.sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> LevyMeasure {
        LevyMeasure::cgmy(1.0, 5.0, 5.0, 0.5).unwrap()
    }

    #[test]
    fn cgmy_with_y_at_least_one_is_rejected() {
        assert!(matches!(
            LevyMeasure::cgmy(1.0, 5.0, 5.0, 1.5),
            Err(Error::InvalidParameter { name: "Y", .. })
        ));
        assert!(LevyMeasure::cgmy(1.0, 5.0, 5.0, 1.0).is_err());
    }

    #[test]
    fn finite_variation_verdicts() {
        let vg = check_finite_variation(cgmy_density(1.0, 3.0, 4.0, 0.0), 1e-8);
        assert!(vg.finite);
        // ∫_0^1 C e^{-Mx} + C e^{-Gx} dx, closed form.
        let exact = (1.0 - (-4f64).exp()) / 4.0 + (1.0 - (-3f64).exp()) / 3.0;
        assert!((vg.mass - exact).abs() < 1e-7 * exact, "{} vs {exact}", vg.mass);

        let diverging = check_finite_variation(cgmy_density(1.0, 5.0, 5.0, 1.5), 1e-8);
        assert!(!diverging.finite);
        assert!(diverging.partial_sums.windows(2).all(|w| w[1] > w[0]));

        let log_div = check_finite_variation(cgmy_density(1.0, 5.0, 5.0, 1.0), 1e-8);
        assert!(!log_div.finite);
    }

    #[test]
    fn tail_intensity_edge_cases() {
        let cp = LevyMeasure::compound_poisson_normal(2.0, 0.0, 0.2).unwrap();
        assert!((tail_intensity(&cp, 0.0).unwrap() - 2.0).abs() < 1e-10);
        assert_eq!(tail_intensity(&desk(), 1e6).unwrap(), 0.0);
        assert!(matches!(
            tail_intensity(&desk(), 0.0),
            Err(Error::InfiniteIntensity { .. })
        ));
        let bounded = LevyMeasure::custom(
            Arc::new(|x: f64| if x.abs() <= 0.5 { 1.0 } else { 0.0 }),
            0.5,
            0.5,
            Activity::Finite,
        )
        .unwrap();
        assert_eq!(tail_intensity(&bounded, 0.6).unwrap(), 0.0);
        assert!(sample_jump_size(&bounded, 0.6, &mut path_rng(1, 0)).is_err());
    }

    #[test]
    fn one_sided_measure_samples_positive_jumps() {
        let m = LevyMeasure::custom(
            Arc::new(|x: f64| if x > 0.0 { (-3.0 * x).exp() / x.powf(1.3) } else { 0.0 }),
            0.0,
            20.0,
            Activity::Infinite,
        )
        .unwrap();
        let s = JumpSampler::new(&m, 0.01).unwrap();
        let mut rng = path_rng(3, 0);
        assert!((0..10_000).all(|_| s.sample(&mut rng) >= 0.01));
    }

    #[test]
    fn pure_drift_path() {
        let model = LevyModel::pure_jump(LevyMeasure::zero(), 1.0).unwrap();
        let p = simulate_path(&model, 0.0, 2.0, 9).unwrap();
        assert_eq!(p.n_jumps(), 0);
        assert_eq!(p.value(2.0).unwrap(), 2.0);
        let model = LevyModel::pure_jump(LevyMeasure::zero(), 2.0).unwrap();
        let p = simulate_path(&model, 0.0, 1.0, 9).unwrap();
        assert_eq!(p.value(0.5).unwrap(), 1.0);
        assert_eq!(p.value(0.0).unwrap(), 0.0);
    }

    #[test]
    fn cadlag_evaluation_at_a_jump() {
        let p = SamplePath::new(1.0, 0.0, vec![0.25, 0.5], vec![0.3, -0.1], 0.0, 1.0, 0).unwrap();
        assert_eq!(p.value(0.25).unwrap(), 1.3);
        assert_eq!(p.value_left(0.25).unwrap(), 1.0);
        assert_eq!(p.value_left(0.3).unwrap(), p.value(0.3).unwrap());
        assert!(matches!(p.value(1.5), Err(Error::TimeOutOfRange { .. })));
        assert!(p.value(-0.1).is_err());
    }

    #[test]
    fn simulation_is_deterministic_and_respects_truncation() {
        let model = LevyModel::pure_jump(desk(), 0.1).unwrap();
        let a = simulate_path(&model, 1e-3, 1.0, 42).unwrap();
        let b = simulate_path(&model, 1e-3, 1.0, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.jump_sizes.iter().all(|j| j.abs() >= 1e-3));
        assert!(a.jump_times.windows(2).all(|w| w[0] < w[1]));
        let c = simulate_path(&model, 1e-3, 1.0, 43).unwrap();
        assert_ne!(a.jump_times, c.jump_times);
    }

    #[test]
    fn sigma_must_vanish_for_simulation() {
        let model = LevyModel::new(desk(), 0.0, 0.2).unwrap();
        assert!(PathSimulator::new(&model, 1e-3, 1.0).is_err());
        assert!(LevyModel::new(desk(), 0.0, -1.0).is_err());
    }

    #[test]
    fn bias_bound_is_linear_in_horizon_and_zero_for_cp() {
        let cp = LevyMeasure::compound_poisson_normal(2.0, 0.0, 0.2).unwrap();
        assert_eq!(truncation_bias_bound(&cp, 0.0, 1.0).unwrap(), 0.0);
        let b1 = truncation_bias_bound(&desk(), 1e-3, 1.0).unwrap();
        let b2 = truncation_bias_bound(&desk(), 1e-3, 2.0).unwrap();
        assert_eq!(b2, 2.0 * b1);
    }

    #[test]
    fn csv_round_trip() {
        let model = LevyModel::pure_jump(desk(), -0.05).unwrap();
        let p = PathSimulator::new(&model, 1e-2, 1.0).unwrap().path(0.25, 5, 2);
        let q = SamplePath::from_csv(&p.to_csv()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn model_spec_parsing() {
        let spec = ModelSpec::parse("family = cgmy\nc = 1\ng = 5\nm = 5\ny = 0.5\ngamma = martingale\ndelta = 1e-4\n")
            .unwrap();
        assert_eq!(spec.gamma, None);
        let model = spec.model(0.0).unwrap();
        assert!((model.gamma + 0.080_278_732_102_768_03).abs() < 1e-9);
        assert!(matches!(
            ModelSpec::parse("family = cgmy\nfoo = 1"),
            Err(Error::InvalidParameter { name: "model", .. })
        ));
        let err = ModelSpec::parse("family = zero\nsigma = -1").unwrap_err();
        assert!(err.to_string().contains("sigma"));
    }
}
