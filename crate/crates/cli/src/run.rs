use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use semidirect::composer::InequalityReport;
use semidirect::corpus::{evaluate_at, make, CorpusSpec};
use semidirect::hardy::{
    default_probe_grids, hardy_log_check, hardy_power_check, optimize_log_constant, prop61_check, uniqueness_probe,
    HardyPowerConstants, ProbeFunction,
};
use semidirect::heat::{
    assemble, diag_kernel, fit_decay, theorem51_bound, BoundCurve, Coefficient, HardyG, HeatProblem,
};
use semidirect::spaces::{FactorSpace, ProductSpace};
use semidirect::Error;

use crate::config::{Cli, ConfigError, HardyMode, RunConfig};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io(_) => 2,
            Self::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config: {m}"),
            Self::Numeric(m) => write!(f, "numeric fault: {m}"),
            Self::Io(m) => write!(f, "output: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite { .. } | Error::SolverBreakdown { .. } | Error::NullFunction => {
                Self::Numeric(e.to_string())
            }
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

/// Exit status of a completed run.
pub struct Outcome {
    pub all_pass: bool,
}

struct Sink {
    reports: BufWriter<File>,
    curves: BufWriter<File>,
}

impl Sink {
    fn create(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir)?;
        let reports = BufWriter::new(File::create(dir.join("reports.jsonl"))?);
        let mut curves = BufWriter::new(File::create(dir.join("curves.csv"))?);
        writeln!(curves, "curve,t,value,predicted")?;
        Ok(Self { reports, curves })
    }

    fn record(&mut self, r: &impl Serialize) -> Result<(), Failure> {
        let line = serde_json::to_string(r).map_err(|e| Failure::Numeric(e.to_string()))?;
        writeln!(self.reports, "{line}")?;
        Ok(())
    }

    fn point(&mut self, curve: &str, t: f64, value: f64, predicted: Option<f64>) -> Result<(), Failure> {
        let p = predicted.map(|p| format!("{p:e}")).unwrap_or_default();
        writeln!(self.curves, "{curve},{t:e},{value:e},{p}")?;
        Ok(())
    }

    fn curve(&mut self, c: &BoundCurve) -> Result<(), Failure> {
        for (i, (&t, &v)) in c.t.iter().zip(&c.values).enumerate() {
            self.point(&c.label, t, v, c.predicted.as_ref().map(|p| p[i]))?;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<(), Failure> {
        self.reports.flush()?;
        self.curves.flush()?;
        Ok(())
    }
}

pub fn main(cli: Cli) -> Result<Outcome, Failure> {
    let cfg = RunConfig::resolve(&cli)?;
    if cli.show_config {
        let text = serde_json::to_string_pretty(&cfg).expect("config serializes");
        // A closed pipe (`| head`) is not an error here.
        let _ = writeln!(std::io::stdout(), "{text}");
        return Ok(Outcome { all_pass: true });
    }
    let mut sink = Sink::create(&cfg.out)?;
    let outcome = match cfg.command.as_deref() {
        Some("verify") => verify(&cfg, &mut sink),
        Some("hardy") => hardy(&cfg, &mut sink),
        Some("heat") => heat(&cfg, &mut sink),
        other => unreachable!("resolved command {other:?}"),
    }?;
    sink.finish()?;
    Ok(outcome)
}

/// Per-t minimum of the normalized slack, and the overall summary.
fn summarize(kind: &str, reports: &[InequalityReport], times: &[f64], sink: &mut Sink) -> Result<bool, Failure> {
    let failures: Vec<&InequalityReport> = reports.iter().filter(|r| !r.pass).collect();
    let min_slack = reports.iter().map(|r| r.normalized_slack).fold(f64::INFINITY, f64::min);
    for &t in times {
        let m = reports
            .iter()
            .filter(|r| r.params.last() == Some(&t))
            .map(|r| r.normalized_slack)
            .fold(f64::INFINITY, f64::min);
        if m.is_finite() {
            sink.point(&format!("{kind}_min_normalized_slack"), t, m, None)?;
        }
    }
    for r in &failures {
        eprintln!("FAIL {} {} params={:?} slack={:e} tol={:e}", r.kind, r.label, r.params, r.slack, r.tol);
    }
    println!("{kind}: {} reports, {} failures, min normalized slack {min_slack:e}", reports.len(), failures.len());
    sink.record(&json!({
        "kind": "summary",
        "command": kind,
        "reports": reports.len(),
        "failures": failures.len(),
        "min_normalized_slack": min_slack,
    }))?;
    Ok(failures.is_empty())
}

fn verify(cfg: &RunConfig, sink: &mut Sink) -> Result<Outcome, Failure> {
    let v = &cfg.verify;
    let lsi = v.family.build(v.radius, v.nodes)?.with_rel_tol(cfg.tol);
    let times = cfg.t_values();
    let corpus = v.corpus.as_deref().unwrap_or_default();
    let per_function: Vec<Result<Vec<InequalityReport>, Failure>> = corpus
        .par_iter()
        .map(|spec| {
            let f = make(spec, lsi.space())?;
            let p = lsi.prepare(&f)?;
            times.iter().map(|&t| Ok(evaluate_at(&lsi, &p, t)?)).collect()
        })
        .collect();
    let mut reports = Vec::with_capacity(corpus.len() * times.len());
    for batch in per_function {
        for r in batch? {
            sink.record(&r)?;
            reports.push(r);
        }
    }
    let ok = summarize(&format!("verify {}", v.family.label()), &reports, &times, sink)?;
    Ok(Outcome { all_pass: ok })
}

fn hardy_corpus(cfg: &RunConfig) -> Result<(ProductSpace<f64>, Vec<semidirect::spaces::TestFunction<f64>>), Failure> {
    let h = &cfg.hardy;
    let space = ProductSpace::tensor(vec![FactorSpace::lebesgue(-h.radius, h.radius, h.nodes)?])?;
    let corpus: &[CorpusSpec] = h.corpus.as_deref().unwrap_or_default();
    let fs = corpus.iter().map(|s| make(s, &space)).collect::<Result<Vec<_>, _>>()?;
    Ok((space, fs))
}

fn hardy(cfg: &RunConfig, sink: &mut Sink) -> Result<Outcome, Failure> {
    let h = &cfg.hardy;
    let times = cfg.t_values();
    let (space, fs) = hardy_corpus(cfg)?;
    let mut ok = true;
    let sweep: Vec<Result<Vec<InequalityReport>, Failure>> = fs
        .par_iter()
        .map(|f| {
            times
                .iter()
                .map(|&t| {
                    let r = match h.mode {
                        HardyMode::Log => hardy_log_check(&space, f, t)?,
                        HardyMode::Power => hardy_power_check(&space, f, h.alpha, t)?,
                    };
                    Ok(r.with_rel_tol(cfg.tol))
                })
                .collect()
        })
        .collect();
    let mut reports = Vec::new();
    for batch in sweep {
        for r in batch? {
            sink.record(&r)?;
            reports.push(r);
        }
    }
    match h.mode {
        HardyMode::Log => {
            let c = optimize_log_constant();
            let exact = (2.0 * std::f64::consts::E).sqrt();
            println!(
                "log constant: min u^(-1/2) e^u = {:.15} at u = {:.15} (sqrt(2e) = {exact:.15})",
                c.value, c.u_star
            );
            sink.record(
                &json!({ "kind": "hardy_log_constant", "u_star": c.u_star, "value": c.value, "sqrt_2e": exact }),
            )?;
            for f in &fs {
                for &d in &h.prop61_deltas {
                    let r = prop61_check(f, d, h.nodes)?.with_rel_tol(cfg.tol);
                    sink.record(&r)?;
                    reports.push(r);
                }
            }
        }
        HardyMode::Power => {
            let c = HardyPowerConstants::new(h.alpha)?;
            println!("power constants: alpha = {}, b = {}, c3 = {}", c.alpha, c.b, c.c3);
            sink.record(&json!({ "kind": "hardy_power_constants", "constants": c }))?;
            if let Some(bp) = h.probe_b {
                let (lg, sg) = default_probe_grids();
                let v = uniqueness_probe(h.alpha, bp, &lg, &sg, &ProbeFunction::new(256)?)?;
                match &v.violation {
                    Some(w) => {
                        println!(
                            "uniqueness probe b' = {bp}: violation found on path {:?} at lambda = {:e}, s = {:e} (rhs {:e} < lhs {:e})",
                            w.path, w.lambda, w.s, w.rhs, v.lhs
                        );
                        ok = false;
                    }
                    None => println!("uniqueness probe b' = {bp}: no violation (b = {})", v.b),
                }
                sink.record(&json!({ "kind": "uniqueness_probe", "verdict": v }))?;
            }
        }
    }
    let pass = summarize("hardy", &reports, &times, sink)?;
    Ok(Outcome { all_pass: ok && pass })
}

fn heat(cfg: &RunConfig, sink: &mut Sink) -> Result<Outcome, Failure> {
    let h = &cfg.heat;
    let (nx, ny) = (h.nx.expect("resolved"), h.ny.expect("resolved"));
    let (rx, ry) = (h.rx.expect("resolved"), h.ry.expect("resolved"));
    let coefficient =
        if h.very_degenerate { Coefficient::VeryDegenerate { alpha: h.alpha } } else { Coefficient::Power { m: h.m } };
    let label = coefficient.label();
    let problem = HeatProblem::with_radii(rx, ry, nx, ny, coefficient)?;
    let op = assemble(&problem);
    let points = h.probe_offsets.iter().map(|&o| problem.probe_node(o)).collect::<Result<Vec<_>, _>>()?;
    let times = cfg.t_values();

    let centre = problem.probe_node(0)?;
    let mut points = points;
    if !points.contains(&centre) {
        points.push(centre);
    }
    let centre_at = points.iter().position(|&p| p == centre).expect("present");
    let mut sup = Vec::with_capacity(times.len());
    let mut at_centre = Vec::with_capacity(times.len());
    let mut ok = true;
    for &t in &times {
        let d = diag_kernel(&op, t, &points)?;
        at_centre.push(d.values[centre_at]);
        let gap = d.symmetry_gap();
        let consistent = gap <= 1e-2 && d.converged;
        ok &= consistent;
        sink.record(&json!({
            "kind": "heat_diag",
            "t": t,
            "points": d.points,
            "values": d.values,
            "via_norm": d.via_norm,
            "symmetry_gap": gap,
            "steps": d.steps,
            "converged": d.converged,
        }))?;
        sup.push(d.sup());
    }
    let curve = BoundCurve::new(format!("sup_diag {label}"), times.clone(), sup, "")?;
    let fit = fit_decay(&curve, (times[0], times[times.len() - 1]))?;

    if h.very_degenerate {
        let c = HardyPowerConstants::new(h.alpha)?;
        let g = HardyG::Power { c: c.c3, b: c.b };
        let c0 = 1.0 / (std::f64::consts::PI * std::f64::consts::E.powi(2));
        let bound = theorem51_bound(2.0, c0, &g, &times)?;
        // ‖T_t‖²_{2→∞} bounds h_t(p, p).
        let squared: Vec<f64> = bound.values.iter().map(|v| v * v).collect();
        let curve = curve.with_predicted(squared.clone())?;
        let k = curve.fitted_constant().expect("prediction set");
        let curve = curve.with_predicted(squared.iter().map(|v| v * k).collect())?;
        sink.curve(&curve)?;
        let bound_curve = BoundCurve::new("ultracontractive_bound_squared", times.clone(), squared, "t^-1 exp(2M(t))")?;
        sink.curve(&bound_curve)?;
        println!(
            "heat {label}: fitted exponent {:.4} ± {:.4}; h_t ≤ {k:.4e} · t^-1 exp(2M(t)) on the grid",
            fit.exponent, fit.stderr
        );
        sink.record(&json!({ "kind": "heat_bound", "fit": fit, "fitted_constant": k, "b": c.b, "c3": c.c3 }))?;
    } else {
        let target = -1.0 - h.m / 2.0;
        let predicted: Vec<f64> = times.iter().map(|t| t.powf(target)).collect();
        let curve = curve.with_predicted(predicted)?;
        let k = curve.fitted_constant().expect("prediction set");
        let scaled = curve.predicted.as_ref().expect("set").iter().map(|p| p * k).collect();
        let curve = curve.with_predicted(scaled)?;
        sink.curve(&curve)?;
        let fit_ok = (fit.exponent - target).abs() <= 0.15;
        ok &= fit_ok;
        println!("heat {label}: fitted exponent {:.4} ± {:.4} (target {target})", fit.exponent, fit.stderr);
        sink.record(&json!({ "kind": "heat_fit", "fit": fit, "target": target, "pass": fit_ok }))?;
        if h.m == 0.0 {
            let exact: Vec<f64> = times.iter().map(|t| 1.0 / (4.0 * std::f64::consts::PI * t)).collect();
            let err = at_centre.iter().zip(&exact).map(|(a, e)| (a - e).abs() / e).fold(0.0, f64::max);
            let oracle_ok = err <= 0.02;
            ok &= oracle_ok;
            let oracle = BoundCurve::new("free_kernel_diagonal", times.clone(), at_centre, "1/(4 pi t)")?
                .with_predicted(exact)?;
            sink.curve(&oracle)?;
            println!(
                "heat oracle: max relative error against 1/(4 pi t) = {err:.3e} ({})",
                if oracle_ok { "pass" } else { "FAIL" }
            );
            sink.record(&json!({ "kind": "heat_oracle", "max_rel_error": err, "pass": oracle_ok }))?;
        }
    }
    Ok(Outcome { all_pass: ok })
}
