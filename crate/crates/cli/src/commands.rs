//! One function per subcommand. Each returns the primary CSV plus any
//! auxiliary files requested in `[output]`.

use std::sync::Arc;

use rayon::prelude::*;

use levy_ito::mc::{price_barrier_mc_spots, Monitoring};
use levy_ito::weakfn::{bundled, key_bound_check, mollify_derivative, Partial};
use levy_ito::{
    extend_reflect, interpolate_price, ito_residual_study, martingale_part, mollify, solve_pide, BarrierContract,
    GeneratorOptions, LevyModel, MCEstimate, ModelSpec, Mollifier, PathSimulator, PideParams, PideSolution,
    SharedFunction,
};

use crate::config::Config;
use crate::error::CliError;
use crate::output::{num, Csv};

/// Files produced by a run: the primary CSV and `(path, contents)` extras.
pub struct Artifacts {
    pub primary: String,
    pub extra: Vec<(String, String)>,
}

impl Artifacts {
    fn single(csv: Csv) -> Self {
        Self {
            primary: csv.into_string(),
            extra: Vec::new(),
        }
    }
}

fn model_spec(cfg: &Config) -> Result<ModelSpec, CliError> {
    let pairs = cfg.section("model");
    if pairs.is_empty() {
        return Err(CliError::config("missing [model] section"));
    }
    Ok(ModelSpec::from_pairs(
        pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())),
    )?)
}

fn function(cfg: &Config) -> Result<SharedFunction, CliError> {
    Ok(bundled(cfg.require_raw("function", "name")?)?)
}

fn contract(cfg: &Config) -> Result<BarrierContract, CliError> {
    Ok(BarrierContract::new(
        cfg.require_f64("contract", "r")?,
        cfg.require_f64("contract", "T")?,
        cfg.require_f64("contract", "K")?,
        cfg.require_f64("contract", "D")?,
    )?)
}

fn valuation_time(cfg: &Config) -> Result<f64, CliError> {
    Ok(cfg.f64("contract", "t")?.unwrap_or(0.0))
}

fn spots(cfg: &Config) -> Result<Vec<f64>, CliError> {
    cfg.require_list("contract", "spots")
}

fn plot_target(cfg: &Config) -> Option<String> {
    cfg.raw("output", "plot").map(str::to_string)
}

pub fn simulate(cfg: &Config) -> Result<Artifacts, CliError> {
    let spec = model_spec(cfg)?;
    let model = spec.model(0.0)?;
    let seed = cfg.seed()?;
    let horizon = cfg.positive("numerics", "t", Some(1.0))?;
    let x0 = cfg.f64("numerics", "x0")?.unwrap_or(0.0);
    let index = cfg.usize("numerics", "index", Some(0))? as u64;
    let path = PathSimulator::new(&model, spec.delta, horizon)?.path(x0, seed, index);
    let mut csv = Csv::new("simulate", Some(seed), cfg);
    csv.comment(&format!("x0 = {}", num(path.x0)));
    csv.comment(&format!("gamma = {}", num(path.gamma)));
    csv.comment(&format!("delta = {}", num(path.delta)));
    csv.comment(&format!("T = {}", num(path.horizon)));
    csv.comment(&format!("seed = {}", path.seed));
    csv.comment(&format!("index = {}", path.index));
    csv.columns(&["time", "jump_size"]);
    for (t, j) in path.jump_times.iter().zip(&path.jump_sizes) {
        csv.row([num(*t), num(*j)]);
    }
    Ok(Artifacts::single(csv))
}

pub fn verify_ito(cfg: &Config) -> Result<Artifacts, CliError> {
    let model = model_spec(cfg)?.model(0.0)?;
    let f = function(cfg)?;
    let seed = cfg.seed()?;
    let deltas = cfg.require_list("numerics", "deltas")?;
    let n_paths = cfg.usize("numerics", "n_paths", Some(100))?;
    let t = cfg.positive("numerics", "t", Some(1.0))?;
    let x0 = cfg.f64("numerics", "x0")?.unwrap_or(0.0);
    let quad_tol = cfg.positive("numerics", "quad_tol", Some(1e-10))?;
    let rows = ito_residual_study(f.as_ref(), &model, x0, &deltas, t, n_paths, seed, quad_tol)?;
    let mut csv = Csv::new("verify-ito", Some(seed), cfg);
    csv.columns(&[
        "delta",
        "n_paths",
        "mean_abs_residual",
        "max_abs_residual",
        "mean_quad_error",
        "bias_bound",
    ]);
    for r in &rows {
        csv.row([
            num(r.delta),
            r.n_paths.to_string(),
            num(r.mean_abs_residual),
            num(r.max_abs_residual),
            num(r.mean_quad_error),
            num(r.bias_bound),
        ]);
    }
    let mut out = Artifacts::single(csv);
    if let Some(target) = plot_target(cfg) {
        let mut plot = Csv::new("verify-ito", Some(seed), cfg);
        plot.columns(&["curve", "x", "y"]);
        for r in &rows {
            plot.row(["mean_abs_residual".into(), num(r.delta), num(r.mean_abs_residual)]);
        }
        for r in &rows {
            plot.row(["bias_bound".into(), num(r.delta), num(r.bias_bound)]);
        }
        out.extra.push((target, plot.into_string()));
    }
    Ok(out)
}

pub fn decompose(cfg: &Config) -> Result<Artifacts, CliError> {
    let spec = model_spec(cfg)?;
    let model = spec.model(0.0)?;
    let f = function(cfg)?;
    let seed = cfg.seed()?;
    let n_paths = cfg.usize("numerics", "n_paths", Some(1000))?;
    if n_paths == 0 {
        return Err(CliError::config("key `n_paths` must be > 0"));
    }
    let t = cfg.positive("numerics", "t", Some(1.0))?;
    let x0 = cfg.f64("numerics", "x0")?.unwrap_or(0.0);
    let opts = GeneratorOptions {
        inner_cutoff: cfg.positive("numerics", "inner_cutoff", Some(1e-6))?,
        outer_cutoff: match cfg.f64("numerics", "outer_cutoff")? {
            Some(_) => cfg.positive("numerics", "outer_cutoff", None)?,
            None => f64::INFINITY,
        },
        quad_tol: cfg.positive("numerics", "quad_tol", Some(1e-9))?,
    };
    let sim = PathSimulator::new(&model, spec.delta, t)?;
    let results: Vec<_> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| martingale_part(f.as_ref(), &sim.path(x0, seed, i), &model, t, opts))
        .collect::<Result<_, _>>()?;
    let mut csv = Csv::new("decompose", Some(seed), cfg);
    csv.columns(&["path", "lhs", "martingale", "compensator", "residual", "error_estimate"]);
    for (i, d) in results.iter().enumerate() {
        csv.row([
            i.to_string(),
            num(d.lhs),
            num(d.martingale),
            num(d.compensator),
            num(d.residual),
            num(d.error_estimate),
        ]);
    }
    let m: Vec<f64> = results.iter().map(|d| d.martingale).collect();
    let est = MCEstimate::from_samples(&m, seed, spec.delta, 0.0);
    let within = results.iter().filter(|d| d.residual.abs() <= d.error_estimate).count();
    csv.comment(&format!("mean_martingale = {}", num(est.mean)));
    csv.comment(&format!("std_error = {}", num(est.std_error)));
    csv.comment(&format!("residual_within_estimate = {within}/{n_paths}"));
    Ok(Artifacts::single(csv))
}

pub fn mollify_demo(cfg: &Config) -> Result<Artifacts, CliError> {
    let f = function(cfg)?;
    let epsilons = cfg.require_list("numerics", "epsilons")?;
    let points = cfg.require_list("numerics", "points")?;
    let dim = cfg.usize("numerics", "dim", Some(1))?;
    let t = cfg.f64("numerics", "t")?.unwrap_or(0.0);
    // Balls in time need the function on t < 0.
    let g: SharedFunction = if dim == 2 { Arc::new(extend_reflect(f)) } else { f };
    let mut csv = Csv::new("mollify-demo", None, cfg);
    csv.columns(&[
        "epsilon",
        "x",
        "f",
        "f_eps",
        "dfdx",
        "dfdx_eps",
        "key_lhs",
        "key_rhs",
        "key_holds",
    ]);
    for &eps in &epsilons {
        let m = Mollifier::new(eps, dim)?;
        for &x in &points {
            let k = key_bound_check(g.as_ref(), &m, t, x)?;
            csv.row([
                num(eps),
                num(x),
                num(g.eval(t, x)),
                num(mollify(g.as_ref(), &m, t, x)?),
                num(g.dx(t, x)),
                num(mollify_derivative(g.as_ref(), &m, t, x, Partial::X)?),
                num(k.lhs),
                num(k.rhs),
                k.holds.to_string(),
            ]);
        }
    }
    Ok(Artifacts::single(csv))
}

/// Model for pricing: `gamma = martingale` gives `r + γ* - σ²/2`.
fn pricing_model(spec: &ModelSpec, c: &BarrierContract) -> Result<LevyModel, CliError> {
    Ok(spec.model(c.r)?)
}

fn pide_solution(cfg: &Config, spec: &ModelSpec, c: BarrierContract) -> Result<PideSolution, CliError> {
    let params = PideParams {
        contract: c,
        model: pricing_model(spec, &c)?,
        n_x: cfg.usize("numerics", "N_x", Some(400))?,
        n_t: cfg.usize("numerics", "N_t", Some(400))?,
        x_min_log: cfg.f64("numerics", "x_min_log")?,
    };
    Ok(solve_pide(&params)?)
}

fn grid_diag(sol: &PideSolution) -> String {
    let d = &sol.diagnostics;
    format!(
        "h={:.6e};dt={:.6e};growth={:.6e};jump_intensity={:.6e};truncated_mass={:.6e};small_jump_cutoff={:.6e};upwind={}",
        d.h, d.dt, d.max_growth_factor, d.jump_intensity, d.integral_truncation_mass, d.small_jump_cutoff, d.upwind
    )
}

pub fn price_pide(cfg: &Config) -> Result<Artifacts, CliError> {
    let spec = model_spec(cfg)?;
    let c = contract(cfg)?;
    let t = valuation_time(cfg)?;
    let spots = spots(cfg)?;
    let sol = pide_solution(cfg, &spec, c)?;
    let mut csv = Csv::new("price-pide", None, cfg);
    for w in &sol.diagnostics.warnings {
        csv.comment(&format!("warning: {w}"));
    }
    csv.columns(&["spot", "price", "grid_diag"]);
    let diag = grid_diag(&sol);
    for &s in &spots {
        csv.row([num(s), num(interpolate_price(&sol, t, s)?), diag.clone()]);
    }
    let mut out = Artifacts::single(csv);
    if let Some(target) = cfg.raw("output", "lattice") {
        let mut lat = Csv::new("price-pide", None, cfg);
        lat.columns(&["t", "spot", "price"]);
        for (i, row) in sol.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                lat.row([num(sol.times[i]), num(sol.spots[j]), num(*v)]);
            }
        }
        out.extra.push((target.to_string(), lat.into_string()));
    }
    Ok(out)
}

fn monitoring(cfg: &Config) -> Result<Monitoring, CliError> {
    match cfg.raw("numerics", "monitoring").unwrap_or("continuous") {
        "continuous" => Ok(Monitoring::Continuous),
        "jump_times" => Ok(Monitoring::JumpTimes),
        other => Err(CliError::config(format!(
            "key `monitoring` must be `continuous` or `jump_times`, got `{other}`"
        ))),
    }
}

fn mc_estimates(
    cfg: &Config,
    spec: &ModelSpec,
    c: &BarrierContract,
    spots: &[f64],
) -> Result<(u64, Vec<MCEstimate>), CliError> {
    let seed = cfg.seed()?;
    let n_paths = cfg.usize("numerics", "n_paths", Some(100_000))?;
    let model = pricing_model(spec, c)?;
    let t = valuation_time(cfg)?;
    let est = price_barrier_mc_spots(&model, c, spots, t, n_paths, spec.delta, seed, monitoring(cfg)?)?;
    Ok((seed, est))
}

pub fn price_mc(cfg: &Config) -> Result<Artifacts, CliError> {
    let spec = model_spec(cfg)?;
    let c = contract(cfg)?;
    let spots = spots(cfg)?;
    let (seed, est) = mc_estimates(cfg, &spec, &c, &spots)?;
    let mut csv = Csv::new("price-mc", Some(seed), cfg);
    csv.columns(&["spot", "mean", "std_error", "n_paths", "delta", "bias_bound"]);
    for (s, e) in spots.iter().zip(&est) {
        csv.row([
            num(*s),
            num(e.mean),
            num(e.std_error),
            e.n_paths.to_string(),
            num(e.delta),
            num(e.bias_bound),
        ]);
    }
    Ok(Artifacts::single(csv))
}

pub fn compare(cfg: &Config) -> Result<Artifacts, CliError> {
    let spec = model_spec(cfg)?;
    let c = contract(cfg)?;
    let t = valuation_time(cfg)?;
    let spots = spots(cfg)?;
    let sol = pide_solution(cfg, &spec, c)?;
    let (seed, est) = mc_estimates(cfg, &spec, &c, &spots)?;
    let mut csv = Csv::new("compare", Some(seed), cfg);
    csv.comment(&format!("grid_diag = {}", grid_diag(&sol)));
    csv.columns(&[
        "spot",
        "pide_price",
        "mc_mean",
        "mc_std_error",
        "mc_bias_bound",
        "tolerance",
        "pass",
    ]);
    let mut all = true;
    for (s, e) in spots.iter().zip(&est) {
        let p = interpolate_price(&sol, t, *s)?;
        let tol = (0.01 * e.mean.abs()).max(3.0 * e.std_error);
        let pass = (p - e.mean).abs() <= tol;
        all &= pass;
        csv.row([
            num(*s),
            num(p),
            num(e.mean),
            num(e.std_error),
            num(e.bias_bound),
            num(tol),
            pass.to_string(),
        ]);
    }
    csv.comment(&format!("agreement = {}", if all { "pass" } else { "fail" }));
    Ok(Artifacts::single(csv))
}
