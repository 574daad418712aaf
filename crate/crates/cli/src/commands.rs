//! One function per subcommand. Each writes its CSV artifacts and returns a
//! JSON summary for the manifest plus a pass flag.

use fourier_kinetic::bobylev::{cutoff_limit, evolve_family, stability_experiment};
use fourier_kinetic::charfun::{
    classify, dis_distance, knorm, knorm_diff, mnorm_re, mnorm_re_diff, AnalyticCharFn, CharFn, NormValue,
    RadialCharFn,
};
use fourier_kinetic::dsmc::{empirical_charfn, moment_propagation_experiment, simulate, DsmcConfig, MomentRow};
use fourier_kinetic::kernel::AngularKernel;
use fourier_kinetic::moments::moment_from_charfn;
use fourier_kinetic::povzner::povzner_suite;
use fourier_kinetic::verify::{run_criterion, CRITERIA, KNOWN_UNATTAINABLE};
use fourier_kinetic::Error;
use serde_json::{json, Value};

use crate::config::Config;
use crate::output::{Artifacts, Table};
use crate::row;

/// Exit 2 for rejected input, 1 for failed runs.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_)
            | Error::NonCutoff(_)
            | Error::Classification(_)
            | Error::Unsupported(_)
            | Error::InvalidCharFn(_)
            | Error::Parse(_) => Failure::Config(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(format!("cannot write output: {e}"))
    }
}

impl From<crate::config::ConfigError> for Failure {
    fn from(e: crate::config::ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

pub struct Outcome {
    pub passed: bool,
    pub summary: Value,
    pub notes: Vec<String>,
}

impl Outcome {
    fn pass(summary: Value) -> Self {
        Self { passed: true, summary, notes: Vec::new() }
    }
}

pub type Run = Result<Outcome, Failure>;

/// The datum of `[initial]`, checked.
fn initial(cfg: &Config) -> Result<&AnalyticCharFn<f64>, Failure> {
    cfg.initial.validate()?;
    Ok(&cfg.initial)
}

fn radial(cfg: &Config, f: &AnalyticCharFn<f64>) -> Result<RadialCharFn<f64>, Failure> {
    cfg.grid.validate()?;
    Ok(f.to_radial(&cfg.grid, cfg.run.interpolation)?)
}

/// Solver exponents and settings against the kernel.
fn check_solver(cfg: &Config, kernel: &AngularKernel<f64>) -> Result<(), Failure> {
    cfg.grid.validate()?;
    cfg.solver.validate(kernel).map_err(|e| Failure::Config(format!("[solver] {e}")))?;
    Ok(())
}

fn stable_note(f: &AnalyticCharFn<f64>, notes: &mut Vec<String>) {
    if !f.second_moment().is_finite() {
        notes.push(format!("{} has infinite energy; energy invariants are skipped", f.name()));
    }
}

pub fn constants(cfg: &Config, art: &mut Artifacts) -> Run {
    let kernel = cfg.kernel.build()?;
    let exps = &cfg.constants.exponents;
    let mut t = Table::new(&["alpha", "gamma", "lambda", "gamma_residual", "lambda_residual"]);
    let summary = if kernel.is_bounded() {
        let c = kernel.rate_constants(exps)?;
        for r in &c.rows {
            t.push(row![r.alpha, r.gamma.value, r.lambda.value, r.gamma.abs_err, r.lambda.abs_err]);
        }
        json!({ "bounded": true, "gamma2": c.gamma2, "rows": c.rows })
    } else {
        // without cutoff γ_α is infinite, λ_α stays finite above α_0
        for &a in exps {
            let l = kernel.lambda_limit(a)?;
            t.push(row![a, f64::INFINITY, l.value, f64::INFINITY, l.abs_err]);
        }
        json!({ "bounded": false, "singularity_index": kernel.singularity_index()? })
    };
    print!("{}", t.to_csv());
    art.table("constants.csv", &t)?;
    Ok(Outcome::pass(summary))
}

fn norm_row(t: &mut Table, name: &str, exponent: f64, v: &NormValue<f64>) {
    let fin = serde_json::to_value(v.finiteness).ok().and_then(|x| x.as_str().map(String::from)).unwrap_or_default();
    t.push(row![name, exponent, v.value, fin, v.abs_err, v.tail, v.tail_bound, v.local_exponent]);
}

fn norms_of<F: CharFn<f64> + ?Sized>(cfg: &Config, f: &F, t: &mut Table) -> Result<(), Failure> {
    let n = &cfg.norms;
    norm_row(t, "k", n.alpha, &knorm(f, n.alpha)?);
    norm_row(t, "k", n.beta, &knorm(f, n.beta)?);
    norm_row(t, "m", n.alpha, &mnorm_re(f, n.alpha)?);
    norm_row(t, "m", n.beta, &mnorm_re(f, n.beta)?);
    if let Some(other) = &n.other {
        other.validate()?;
        norm_row(t, "k_diff", n.alpha, &knorm_diff(f, other, n.alpha)?);
        norm_row(t, "k_diff", n.beta, &knorm_diff(f, other, n.beta)?);
        norm_row(t, "m_diff", n.alpha, &mnorm_re_diff(f, other, n.alpha)?);
        norm_row(t, "dis", n.alpha, &dis_distance(f, other, n.alpha, n.beta, cfg.solver.epsilon)?);
    }
    Ok(())
}

pub fn norms(cfg: &Config, art: &mut Artifacts) -> Run {
    let mut t = Table::new(&["norm", "exponent", "value", "finiteness", "abs_err", "tail", "tail_bound", "local_exponent"]);
    let source = match &cfg.norms.source_csv {
        Some(p) => {
            let f = RadialCharFn::<f64>::read_csv(p)?;
            norms_of(cfg, &f, &mut t)?;
            f.provenance().to_string()
        }
        None => {
            let f = initial(cfg)?;
            norms_of(cfg, f, &mut t)?;
            f.name()
        }
    };
    print!("{}", t.to_csv());
    art.table("norms.csv", &t)?;
    Ok(Outcome::pass(json!({ "source": source })))
}

pub fn classify_cmd(cfg: &Config, art: &mut Artifacts) -> Run {
    let f = initial(cfg)?;
    let lifted = cfg.classify.lift.map(|n| f.lift(n)).transpose()?;
    let mut verdicts = Vec::new();
    let mut t = Table::new(&["alpha", "lift", "in_k", "in_m_tilde", "inconclusive", "moment_estimate", "error_bound"]);
    for &a in &cfg.classify.alphas {
        let (c, m, scale) = match &lifted {
            // ∫|v|^α⟨v⟩^{2n} dF = ψ(0) · ∫|v|^α dG for the normalised lift G
            Some(l) => (classify(l, a)?, moment_from_charfn(l, a)?, l.psi0),
            None => (classify(f, a)?, moment_from_charfn(f, a)?, 1.0),
        };
        let (value, err) = (scale * m.value, scale * m.error_bound);
        t.push(row![a, cfg.classify.lift.unwrap_or(0), c.in_k_alpha, c.in_m_tilde_alpha, c.inconclusive, value, err]);
        verdicts.push(json!({
            "alpha": a,
            "lift": cfg.classify.lift,
            "in_K": c.in_k_alpha,
            "in_M_tilde": c.in_m_tilde_alpha,
            "inconclusive": c.inconclusive,
            "moment_estimate": value,
            "error_bound": err,
            "symmetrized": m.symmetrized,
        }));
    }
    println!("{}", serde_json::to_string_pretty(&verdicts).expect("verdicts serialize"));
    art.json("classify.json", &verdicts)?;
    art.table("classify.csv", &t)?;
    Ok(Outcome::pass(json!({ "family": f.name(), "verdicts": verdicts })))
}

pub fn evolve(cfg: &Config, art: &mut Artifacts) -> Run {
    let kernel = cfg.kernel.build()?;
    check_solver(cfg, &kernel)?;
    let f = initial(cfg)?;
    let tr = evolve_family(f, &cfg.grid, cfg.run.interpolation, &kernel, &cfg.solver)?;
    let mut d = Table::new(&[
        "t",
        "knorm_beta",
        "growth_bound",
        "mnorm_alpha",
        "second_moment",
        "steps",
        "picard_iterations",
        "last_dt",
    ]);
    for x in &tr.diagnostics {
        d.push(row![x.t, x.knorm_beta, x.growth_bound, x.mnorm_alpha.value, x.second_moment.value, x.steps, x.picard_iterations, x.last_dt]);
    }
    let mut s = Table::new(&["t", "dt", "picard_iterations", "clip", "knorm_beta", "growth_bound"]);
    for x in &tr.steps {
        s.push(row![x.t, x.dt, x.picard_iterations, x.clip, x.knorm_beta, x.growth_bound]);
    }
    art.table("trace.csv", &d)?;
    art.table("steps.csv", &s)?;
    for (i, snap) in tr.snapshots.iter().enumerate() {
        art.charfn(&format!("snapshot_{i:03}"), snap)?;
    }
    // clip events must total below 1e-8 in sup magnitude per run
    let clip_ok = tr.clip_total < 1e-8;
    let growth_ok = tr.growth_margin >= 0.0;
    let mut notes = Vec::new();
    stable_note(f, &mut notes);
    Ok(Outcome {
        passed: clip_ok && growth_ok,
        summary: json!({
            "family": f.name(),
            "times": tr.times,
            "constants": tr.constants,
            "bounds": {
                "growth": { "holds": growth_ok, "margin": tr.growth_margin },
                "clip": { "holds": clip_ok, "total": tr.clip_total, "max": tr.clip_max, "limit": 1e-8 },
            },
        }),
        notes,
    })
}

pub fn stability(cfg: &Config, art: &mut Artifacts) -> Run {
    let kernel = cfg.kernel.build()?;
    check_solver(cfg, &kernel)?;
    let s = &cfg.stability;
    s.perturbed.validate()?;
    let phi0 = radial(cfg, initial(cfg)?)?;
    let psi0 = radial(cfg, &s.perturbed)?;
    let r = stability_experiment(&phi0, &psi0, &kernel, &cfg.solver, &s.options)?;
    let mut t = Table::new(&["t", "alpha_measured", "alpha_bound", "fourier_measured", "fourier_bound"]);
    for x in &r.rows {
        t.push(row![x.t, x.alpha_lhs, x.alpha_rhs, x.fourier_lhs, x.fourier_rhs]);
    }
    art.table("stability.csv", &t)?;
    Ok(Outcome {
        passed: r.alpha_holds && r.fourier_holds,
        summary: json!({
            "lambda_alpha": r.lambda_alpha,
            "lambda_beta": r.lambda_beta,
            "a": r.a,
            "b": r.b,
            "alpha_holds": r.alpha_holds,
            "fourier_holds": r.fourier_holds,
            "alpha_margin": r.alpha_margin,
            "fourier_margin": r.fourier_margin,
            "first_violation": r.first_violation,
        }),
        notes: Vec::new(),
    })
}

pub fn limit(cfg: &Config, art: &mut Artifacts) -> Run {
    let kernel = cfg.kernel.build()?;
    check_solver(cfg, &kernel)?;
    let phi0 = radial(cfg, initial(cfg)?)?;
    let r = cutoff_limit(&phi0, &kernel, &cfg.limit.levels, &cfg.solver)?;
    let mut lv = Table::new(&["n", "gamma2", "lambda_beta", "continuity_constant"]);
    for l in &r.levels {
        lv.push(row![l.n, l.gamma2, l.lambda_beta, l.continuity_constant]);
    }
    let mut pr = Table::new(&["n_low", "n_high", "t", "beta_gap", "sup_gap"]);
    for p in &r.pairs {
        for &(t, g) in &p.beta_gaps {
            pr.push(row![p.n_low, p.n_high, t, g, p.sup_gap]);
        }
    }
    art.table("limit_levels.csv", &lv)?;
    art.table("limit_pairs.csv", &pr)?;
    Ok(Outcome {
        passed: r.monotone,
        summary: json!({ "monotone": r.monotone, "lambda_beta_limit": r.lambda_beta_limit, "pairs": r.pairs }),
        notes: r.warnings.clone(),
    })
}

pub fn povzner_check(cfg: &Config, art: &mut Artifacts) -> Run {
    let kernel = cfg.kernel.build()?;
    let p = &cfg.povzner;
    let r = povzner_suite(&kernel, &p.suite, &p.quadrature)?;
    let spread = r.g_spread();
    let checks: [(&str, f64, f64); 9] = [
        ("momentum_identity", r.momentum_error, p.identity_tol),
        ("energy_identity", r.energy_error, p.identity_tol),
        ("yz_decomposition", r.yz_error, p.identity_tol),
        ("linear_k_vanishes", r.linear_k, p.sign_tol),
        ("minus_h_nonpositive", r.max_minus_h, p.sign_tol),
        ("reconstruction", r.reconstruction, p.quadrature.tolerance),
        ("g_constant_spread", spread, p.spread_limit),
        ("g_constant_max", r.g_constants[0].max(r.g_constants[1]), f64::INFINITY),
        ("wdelta_constant", r.wdelta_constant, f64::INFINITY),
    ];
    let mut t = Table::new(&["check", "worst", "limit", "margin", "passed"]);
    let mut all = true;
    for (name, worst, lim) in checks {
        // finite constants are the claim when no numeric limit applies
        let ok = worst <= lim && worst.is_finite();
        all &= ok;
        t.push(row![name, worst, lim, lim - worst, ok]);
    }
    print!("{}", t.to_csv());
    art.table("povzner.csv", &t)?;
    Ok(Outcome { passed: all, summary: serde_json::to_value(&r).expect("report serializes"), notes: Vec::new() })
}

fn moment_rows(t: &mut Table, rows: &[MomentRow], order: f64) {
    for r in rows {
        t.push(row![r.t, order, r.moment, r.weighted, r.energy, r.bound]);
    }
}

pub fn dsmc(cfg: &Config, art: &mut Artifacts) -> Run {
    let kernel = cfg.kernel.build()?;
    let f = initial(cfg)?;
    let d = &cfg.dsmc;
    let run: DsmcConfig = d.run;
    let mut t = Table::new(&["t", "order", "moment", "weighted", "energy", "bound"]);
    let mut notes = Vec::new();
    let summary;
    let ensemble = if f.second_moment().is_finite() {
        let rep = moment_propagation_experiment(f, &kernel, d.moment_n, d.moment_alpha, d.records, &run)?;
        moment_rows(&mut t, &rep.rows, rep.order);
        summary = json!({
            "family": rep.family,
            "order": rep.order,
            "fitted_c": rep.fitted_c,
            "energy_drift": rep.energy_drift,
            "momentum_drift": rep.momentum_drift,
        });
        // same seed and streams: this reproduces the final ensemble
        simulate(f, &kernel, &run, &[run.horizon], |_, _| Ok(()))?
    } else {
        // heavy tails: only moments of order below the stable index exist
        let q = stable_index(f) * 0.5;
        let records = d.records.max(1);
        let times: Vec<f64> = (1..=records).map(|k| run.horizon * k as f64 / records as f64).collect();
        let times: Vec<f64> = times.iter().map(|t| (t / run.dt).round() * run.dt).collect();
        let mut rows = Vec::new();
        let ens = simulate(f, &kernel, &run, &times, |t, e| {
            rows.push(MomentRow { t, weighted: e.weighted_moment(q), moment: e.moment(q), energy: f64::NAN, bound: f64::NAN });
            Ok(())
        })?;
        moment_rows(&mut t, &rows, q);
        stable_note(f, &mut notes);
        notes.push(format!("moment order lowered to {q} (half the smallest stable index); no growth bound is fitted"));
        summary = json!({ "family": f.name(), "order": q });
        ens
    };
    cfg.grid.validate()?;
    let emp = empirical_charfn(&ensemble, &cfg.grid.radii())?;
    art.table("moments.csv", &t)?;
    art.charfn("empirical", &emp.profile)?;
    let mut summary = summary;
    summary["band"] = json!(emp.band);
    summary["particles"] = json!(ensemble.len());
    summary["steps"] = json!(ensemble.steps());
    Ok(Outcome { passed: true, summary, notes })
}

fn stable_index(f: &AnalyticCharFn<f64>) -> f64 {
    match f {
        AnalyticCharFn::Stable { index, .. } => *index,
        AnalyticCharFn::Mixture { components } => components.iter().map(|c| stable_index(&c.family)).fold(2.0, f64::min),
        _ => 2.0,
    }
}

pub fn verify_all(cfg: &Config, art: &mut Artifacts) -> Run {
    let v = &cfg.verify;
    let ids: Vec<usize> = if v.criteria.is_empty() { (1..=CRITERIA.len()).collect() } else { v.criteria.clone() };
    if let Some(bad) = ids.iter().find(|i| !(1..=CRITERIA.len()).contains(*i)) {
        return Err(Failure::Config(format!("[verify] criterion {bad} does not exist (1..={})", CRITERIA.len())));
    }
    let mut t = Table::new(&["id", "title", "passed", "detail"]);
    let (mut failed, mut tolerated, mut seconds) = (Vec::new(), Vec::new(), Vec::new());
    for &id in &ids {
        let o = run_criterion(id, &v.suite);
        println!("{o}");
        if !o.passed {
            if !v.strict && KNOWN_UNATTAINABLE.contains(&id) {
                tolerated.push(id);
            } else {
                failed.push(id);
            }
        }
        // timings vary run to run and stay out of the CSV
        seconds.push(json!({ "id": id, "seconds": o.seconds }));
        t.push(row![id, o.title, o.passed, o.detail.clone()]);
    }
    art.table("verify.csv", &t)?;
    let mut notes = Vec::new();
    if !tolerated.is_empty() {
        notes.push(format!("criteria {tolerated:?} failed but are known to be unattainable at their stated tolerances"));
    }
    Ok(Outcome {
        passed: failed.is_empty(),
        summary: json!({ "criteria": ids, "failed": failed, "tolerated": tolerated, "strict": v.strict, "seconds": seconds }),
        notes,
    })
}
