use serde::{Deserialize, Serialize};
use serde_json::json;
use subpoisson::bounds::{BoundReport, KernelBounds};
use subpoisson::exact::{
    count_distribution, discretize, discretize_factored, factored_spectrum, ginibre_disk_eigenvalues,
    ginibre_nystrom_eigenvalues, log_exp_moment_sq, spectrum, tail_bracket, Spectrum, EIGENVALUE_FLOOR,
    GINIBRE_ANGLES,
};
use subpoisson::kernels::{Interval, KernelKind, KernelSpec};
use subpoisson::sampler::{mc_exp_moment, negative_association_probe, PairFunctional, Sampler};

use crate::config::{CliError, Command, Format, RunConfig};
use crate::output::{fmt_f64, provenance, write_atomic, write_csv, write_json};

/// Relative drift between order and 2·order above which `exact` warns.
const DRIFT_WARNING: f64 = 1e-8;
const GINIBRE_MAX_RADIAL: usize = 96;

pub fn run(cli: crate::config::Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Bound(a) => cmd_bound(&RunConfig::from_args(a, "0.1:3:30", 64)?),
        Command::Exact(a) => cmd_exact(&RunConfig::from_args(a, "0.1:2:20", 8)?),
        Command::Sample(a) => cmd_sample(&RunConfig::from_args(a, "0.5:0.5:1", 8)?),
        Command::Compare(a) => cmd_compare(&RunConfig::from_args(a, "0.1:2:20", 8)?),
    }
}

fn unsupported(e: subpoisson::Error) -> CliError {
    match e {
        subpoisson::Error::Unsupported(_) | subpoisson::Error::Invalid(_) | subpoisson::Error::Domain { .. } => {
            CliError::Config(e.to_string())
        }
        other => CliError::numerical(other),
    }
}

fn require_scalar_real(cfg: &RunConfig, what: &str) -> Result<(), CliError> {
    if cfg.spec.block_size() != 1 || cfg.spec.kind == KernelKind::Ginibre {
        return Err(CliError::Config(format!("{what} needs a scalar kernel on the real line, got {}", cfg.spec)));
    }
    Ok(())
}

fn lambda_max(cfg: &RunConfig) -> f64 {
    cfg.lambdas.iter().cloned().fold(3.0, f64::max)
}

fn cmd_bound(cfg: &RunConfig) -> Result<(), CliError> {
    let kb = KernelBounds::new(&cfg.spec, &cfg.window).map_err(unsupported)?;
    let bc = kb.b_constant(cfg.nmax.max(8)).map_err(CliError::numerical)?;
    let report: BoundReport = kb.report_with(bc, lambda_max(cfg), cfg.nmax).map_err(CliError::numerical)?;
    let prov = provenance("bound", cfg);
    write_json(&cfg.out.join("bound.json"), &prov, &report)?;
    let rows: Vec<Vec<String>> = report
        .table
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                fmt_f64(r.log_bound),
                fmt_f64(KernelBounds::closed_form_log_bound(report.b, report.sigma, r.n)),
            ]
        })
        .collect();
    write_csv(&cfg.out.join("bound.csv"), &prov, &["n", "log_tail_bound", "closed_form_bound"], &rows)
}

/// Spectrum by the most accurate available route.
fn spectrum_for(spec: &KernelSpec, window: &Interval, order: usize) -> Result<(Spectrum, &'static str), CliError> {
    match spec.kind {
        KernelKind::Sine | KernelKind::Airy => {
            let f = discretize_factored(spec, window, order).map_err(CliError::numerical)?;
            Ok((factored_spectrum(&f).map_err(CliError::numerical)?, "factored"))
        }
        KernelKind::Ginibre => {
            if window.a != 0.0 {
                return Err(CliError::Config("ginibre window must be 0,R (a disk)".into()));
            }
            let vals = ginibre_nystrom_eigenvalues(window.b, order.min(GINIBRE_MAX_RADIAL), GINIBRE_ANGLES)
                .map_err(CliError::numerical)?;
            Ok((Spectrum::from_raw(vals, EIGENVALUE_FLOOR).map_err(CliError::numerical)?, "polar-nystrom"))
        }
        _ => {
            let d = discretize(spec, window, order).map_err(unsupported)?;
            Ok((spectrum(&d).map_err(CliError::numerical)?, "dense"))
        }
    }
}

fn drift(a: &Spectrum, b: &Spectrum) -> f64 {
    a.eigenvalues
        .iter()
        .zip(&b.eigenvalues)
        .filter(|(x, y)| x.max(**y) > a.floor)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[derive(Serialize)]
struct TailRow {
    n: usize,
    lower: f64,
    upper: f64,
}

#[derive(Serialize)]
struct MomentRow {
    lambda: f64,
    log_value: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct ExactOutput {
    route: String,
    eigenvalues: Vec<f64>,
    eigenvalue_sum: f64,
    raw_out_of_range: f64,
    truncation_error_bound: f64,
    pmf: Vec<f64>,
    pmf_sum: f64,
    mean: f64,
    variance: f64,
    tails: Vec<TailRow>,
    exp_moments: Vec<MomentRow>,
    reference_order: usize,
    refinement_drift: f64,
    refinement_warning: bool,
    disk_closed_form: Option<Vec<f64>>,
}

fn cmd_exact(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.spec.block_size() != 1 {
        return Err(CliError::Config(format!("no exact counting law for the Pfaffian kernel {}", cfg.spec)));
    }
    let (s, route) = spectrum_for(&cfg.spec, &cfg.window, cfg.order)?;
    let reference_order = 2 * cfg.order;
    let (s_ref, _) = spectrum_for(&cfg.spec, &cfg.window, reference_order)?;
    let refinement_drift = drift(&s, &s_ref);
    let refinement_warning = refinement_drift > DRIFT_WARNING;
    if refinement_warning {
        eprintln!(
            "warning: eigenvalue drift {refinement_drift:.3e} between orders {} and {reference_order} exceeds {DRIFT_WARNING:e}",
            cfg.order
        );
    }
    let c = count_distribution(&s);
    let tails = (0..=cfg.nmax)
        .map(|n| {
            let (lower, upper) = tail_bracket(&c, n);
            TailRow { n, lower, upper }
        })
        .collect();
    let exp_moments = cfg
        .lambdas
        .iter()
        .map(|&lambda| match log_exp_moment_sq(&c, lambda) {
            Ok(v) => MomentRow { lambda, log_value: Some(v), error: None },
            Err(e) => MomentRow { lambda, log_value: None, error: Some(e.to_string()) },
        })
        .collect();
    let disk_closed_form = if cfg.spec.kind == KernelKind::Ginibre {
        Some(ginibre_disk_eigenvalues(cfg.window.b, cfg.nmax.max(8)).map_err(CliError::numerical)?)
    } else {
        None
    };
    let out = ExactOutput {
        route: route.into(),
        eigenvalue_sum: s.sum(),
        raw_out_of_range: s.raw_out_of_range,
        truncation_error_bound: c.truncation_error_bound,
        pmf_sum: c.pmf.iter().sum(),
        mean: c.mean(),
        variance: c.variance(),
        eigenvalues: s.eigenvalues.iter().copied().filter(|&v| v > s.floor).collect(),
        pmf: c.pmf.clone(),
        tails,
        exp_moments,
        reference_order,
        refinement_drift,
        refinement_warning,
        disk_closed_form,
    };
    let prov = provenance("exact", cfg);
    match cfg.format {
        Format::Json => write_json(&cfg.out.join("exact.json"), &prov, &out),
        Format::Csv => {
            let spec_rows: Vec<_> =
                out.eigenvalues.iter().enumerate().map(|(k, v)| vec![k.to_string(), fmt_f64(*v)]).collect();
            write_csv(&cfg.out.join("exact_spectrum.csv"), &prov, &["k", "eigenvalue"], &spec_rows)?;
            let pmf_rows: Vec<_> = out.pmf.iter().enumerate().map(|(k, p)| vec![k.to_string(), fmt_f64(*p)]).collect();
            write_csv(&cfg.out.join("exact_pmf.csv"), &prov, &["k", "p"], &pmf_rows)?;
            let tail_rows: Vec<_> =
                out.tails.iter().map(|t| vec![t.n.to_string(), fmt_f64(t.lower), fmt_f64(t.upper)]).collect();
            write_csv(&cfg.out.join("exact_tail.csv"), &prov, &["n", "lower", "upper"], &tail_rows)?;
            let m_rows: Vec<_> = out
                .exp_moments
                .iter()
                .map(|m| vec![fmt_f64(m.lambda), m.log_value.map_or("nan".into(), fmt_f64)])
                .collect();
            write_csv(&cfg.out.join("exact_moment.csv"), &prov, &["lambda", "log_exp_moment_sq"], &m_rows)
        }
    }
}

#[derive(Serialize)]
struct CompareTail {
    n: usize,
    exact_tail: f64,
    chained_log_bound: f64,
    closed_form_log_bound: f64,
    dominates: bool,
}

#[derive(Serialize)]
struct CompareMoment {
    lambda: f64,
    log_exact_moment: f64,
    laplace_log_bound: f64,
    /// log of c(e^{4σλ} − 1), the bound on log E.
    log_c_form: f64,
    /// log of c′(e^{σλ} − 1).
    log_fitted_form: f64,
    dominates: bool,
}

fn cmd_compare(cfg: &RunConfig) -> Result<(), CliError> {
    require_scalar_real(cfg, "compare")?;
    let kb = KernelBounds::new(&cfg.spec, &cfg.window).map_err(unsupported)?;
    let (s, _) = spectrum_for(&cfg.spec, &cfg.window, cfg.order)?;
    let c = count_distribution(&s);
    let bc = kb.b_constant_auto().map_err(CliError::numerical)?;
    let sigma = kb.sigma();
    let tails: Vec<CompareTail> = (1..=cfg.nmax)
        .map(|n| {
            let exact_tail = tail_bracket(&c, n).1;
            let chained = kb.tail_log_bound(n);
            let closed = KernelBounds::closed_form_log_bound(bc.b, sigma, n);
            let dominates = exact_tail.ln() <= chained + 1e-12 && chained <= closed + 1e-9;
            CompareTail { n, exact_tail, chained_log_bound: chained, closed_form_log_bound: closed, dominates }
        })
        .collect();
    let cc = kb.c_constant_with(bc.b, lambda_max(cfg)).map_err(CliError::numerical)?;
    let mut moments = Vec::new();
    for &lambda in &cfg.lambdas {
        let log_exact = log_exp_moment_sq(&c, lambda).map_err(CliError::numerical)?;
        let laplace = kb.exp_moment_log_bound_with(bc.b, lambda).map_err(CliError::numerical)?;
        let log_c_form = cc.log_c + (4.0 * sigma * lambda).exp_m1().ln();
        let log_fitted_form = cc.log_c_fitted + (sigma * lambda).exp_m1().ln();
        let dominates = log_exact.ln() <= log_c_form && log_exact <= laplace;
        moments.push(CompareMoment {
            lambda,
            log_exact_moment: log_exact,
            laplace_log_bound: laplace,
            log_c_form,
            log_fitted_form,
            dominates,
        });
    }
    let prov = provenance("compare", cfg);
    let tail_rows: Vec<_> = tails
        .iter()
        .map(|t| {
            vec![
                t.n.to_string(),
                fmt_f64(t.exact_tail),
                fmt_f64(t.chained_log_bound),
                fmt_f64(t.closed_form_log_bound),
                t.dominates.to_string(),
            ]
        })
        .collect();
    write_csv(
        &cfg.out.join("compare_tail.csv"),
        &prov,
        &["n", "exact_tail", "chained_log_bound", "closed_form_log_bound", "dominates"],
        &tail_rows,
    )?;
    let moment_rows: Vec<_> = moments
        .iter()
        .map(|m| {
            vec![
                fmt_f64(m.lambda),
                fmt_f64(m.log_exact_moment),
                fmt_f64(m.laplace_log_bound),
                fmt_f64(m.log_c_form),
                fmt_f64(m.log_fitted_form),
                m.dominates.to_string(),
            ]
        })
        .collect();
    write_csv(
        &cfg.out.join("compare_moment.csv"),
        &prov,
        &["lambda", "log_exact_moment", "laplace_log_bound", "log_c_form", "log_fitted_form", "dominates"],
        &moment_rows,
    )?;
    if cfg.format == Format::Json {
        let body = json!({ "B": bc.b, "log_c": cc.log_c, "log_c_fitted": cc.log_c_fitted, "tails": tails, "moments": moments });
        write_json(&cfg.out.join("compare.json"), &prov, &body)?;
    }
    let failed_n: Vec<usize> = tails.iter().filter(|t| !t.dominates).map(|t| t.n).collect();
    let failed_l: Vec<f64> = moments.iter().filter(|m| !m.dominates).map(|m| m.lambda).collect();
    if !failed_n.is_empty() || !failed_l.is_empty() {
        return Err(CliError::Dominance(format!("tail rows {failed_n:?}, moment rows {failed_l:?}")));
    }
    Ok(())
}

/// Declarative pair functional.
#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum QSpec {
    Zero,
    GaussianBump { half_width: f64 },
    Box { c: f64, a: f64, b: f64 },
    CustomGrid { x: [f64; 2], y: [f64; 2], values: Vec<Vec<f64>> },
}

fn load_q(path: &std::path::Path) -> Result<PairFunctional, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("q spec {}: {e}", path.display())))?;
    let q: QSpec = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("malformed q spec: {e}")))?;
    let cfg_err = |e: subpoisson::Error| CliError::Config(format!("malformed q spec: {e}"));
    match q {
        QSpec::Zero => Ok(PairFunctional::zero()),
        QSpec::GaussianBump { half_width } => PairFunctional::gaussian_bump(half_width).map_err(cfg_err),
        QSpec::Box { c, a, b } => {
            if !c.is_finite() {
                return Err(CliError::Config("malformed q spec: c must be finite".into()));
            }
            PairFunctional::indicator_box(c, a, b).map_err(cfg_err)
        }
        QSpec::CustomGrid { x, y, values } => {
            let wx = Interval::new(x[0], x[1]).map_err(cfg_err)?;
            let wy = Interval::new(y[0], y[1]).map_err(cfg_err)?;
            PairFunctional::custom_grid(wx, wy, values).map_err(cfg_err)
        }
    }
}

/// max log c over the unit cells [k, k+1] ∩ window.
fn cell_log_c(spec: &KernelSpec, window: &Interval) -> Result<f64, CliError> {
    let mut best = f64::NEG_INFINITY;
    let mut k = window.a.floor();
    while k < window.b {
        let (a, b) = (k.max(window.a), (k + 1.0).min(window.b));
        if b - a > 1e-9 {
            let cell = Interval::new(a, b).map_err(CliError::numerical)?;
            let kb = KernelBounds::new(spec, &cell).map_err(unsupported)?;
            best = best.max(kb.c_constant(3.0).map_err(CliError::numerical)?.log_c);
        }
        k += 1.0;
    }
    Ok(best)
}

#[derive(Serialize)]
struct McRow {
    lambda: f64,
    estimate: f64,
    stderr: f64,
    samples: usize,
    seed: u64,
    /// log of c(e^{4σλ‖q‖} − 1).
    log_pair_bound_exponent: f64,
    respected: bool,
}

fn cmd_sample(cfg: &RunConfig) -> Result<(), CliError> {
    require_scalar_real(cfg, "sample")?;
    if cfg.samples < 2 {
        return Err(CliError::Config("need at least 2 samples".into()));
    }
    let q = cfg.q_spec.as_deref().map(load_q).transpose()?;
    let sampler = Sampler::new(&cfg.spec, &cfg.window, cfg.order).map_err(CliError::numerical)?;
    let batch = sampler.sample(cfg.samples, cfg.seed);
    let prov = provenance("sample", cfg);
    let header = json!({ "provenance": prov, "rng": batch.rng, "configurations": batch.configurations.len() });
    write_atomic(&cfg.out.join("samples.jsonl"), &format!("{header}\n{}", batch.to_json_lines()))?;

    let mut failures = Vec::new();
    if let Some(q) = q {
        let sigma = cfg.spec.growth_envelope(&cfg.window).map_err(CliError::numerical)?.order;
        let log_c = cell_log_c(&cfg.spec, &cfg.window)?;
        let (norm, audit) = q.norm_audit();
        let mut rows = Vec::new();
        for &lambda in &cfg.lambdas {
            let m = mc_exp_moment(&batch, &q, lambda).map_err(CliError::numerical)?;
            let log_exponent = log_c + (4.0 * sigma * lambda * norm).exp_m1().ln();
            let upper = m.estimate - 3.0 * m.stderr;
            let respected = upper <= 1.0 || upper.ln().ln() <= log_exponent;
            if !respected {
                failures.push(format!("pair-functional bound at lambda={lambda}"));
            }
            rows.push(McRow {
                lambda,
                estimate: m.estimate,
                stderr: m.stderr,
                samples: m.samples,
                seed: m.seed,
                log_pair_bound_exponent: log_exponent,
                respected,
            });
        }
        let body = json!({ "q": q.name, "norm_1_inf": norm, "norm_1_inf_audit": audit, "log_c": log_c, "results": rows });
        write_json(&cfg.out.join("mc.json"), &prov, &body)?;
    }

    let mid = 0.5 * (cfg.window.a + cfg.window.b);
    let c1 = Interval { a: cfg.window.a, b: mid };
    let c2 = Interval { a: mid + 1e-12 * (1.0 + mid.abs()), b: cfg.window.b };
    let na = negative_association_probe(&batch, &c1, &c2, 3).map_err(CliError::numerical)?;
    let respected = na.lhs <= na.rhs + 3.0 * na.stderr;
    if !respected {
        failures.push("negative association probe".into());
    }
    let body = json!({ "lhs": na.lhs, "rhs": na.rhs, "stderr": na.stderr, "c1": c1, "c2": c2, "cap": 3, "respected": respected });
    write_json(&cfg.out.join("na.json"), &prov, &body)?;
    if !failures.is_empty() {
        return Err(CliError::Dominance(failures.join(", ")));
    }
    Ok(())
}
