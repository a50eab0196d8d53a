use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::report::{num, open_output, opt_num, trace_path, write_csv, write_json, Metadata};
use crate::svg::{plot, Panel, Series};
use serde::Serialize;
use std::io::Write;
use yamabe_core::functional::{
    aubin_constant, eh_energy, minimize_quotient, MinimizeOptions, ProductSpace, RestartSummary, TraceRow, TrialSpace,
};
use yamabe_core::product::{FamilySpec, ProductFamily};
use yamabe_core::scan::{
    bracket_maximal_t, classify, critical_parameter, scan, yamabe_necessary_test, Certificate, Classification,
    MaximalTBracket, NecessaryTest, ScanOptions, ScanRecord,
};
use yamabe_core::statics::{static_check, Potential, StaticCandidate, StaticReport};
use yamabe_core::ExecPolicy;

/// Estimates within this fraction of `ℰ(h_t)` count as "no lower energy
/// found" when bracketing the maximal `T`.
pub const BRACKET_REL_TOL: f64 = 1e-4;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    use crate::config::Command;
    match cfg.command {
        Command::Invariants => invariants(cfg),
        Command::Scan => run_scan(cfg),
        Command::Minimize => minimize(cfg),
        Command::StaticCheck => static_potential(cfg),
    }
}

#[derive(Serialize)]
struct Invariants {
    family: FamilySpec,
    n: usize,
    scalar: f64,
    volume: f64,
    eh_energy: f64,
    aubin_constant: f64,
    below_aubin: bool,
    lambda1: f64,
    threshold: f64,
    necessary_test: NecessaryTest,
    classification: Classification,
    critical_t: f64,
    lichnerowicz_bound: f64,
}

fn invariants(cfg: &RunConfig) -> Result<(), CliError> {
    let fam = ProductFamily::sphere_product(cfg.k, cfg.l, cfg.require_t()?)?;
    let energy = eh_energy(&fam);
    let aubin = aubin_constant(fam.n())?;
    let body = Invariants {
        family: fam.to_spec(),
        n: fam.n(),
        scalar: fam.scalar_curvature(),
        volume: fam.volume(),
        eh_energy: energy,
        aubin_constant: aubin,
        below_aubin: energy < aubin,
        lambda1: fam.product_lambda1(),
        threshold: fam.threshold(),
        necessary_test: yamabe_necessary_test(&fam),
        classification: classify(&fam),
        critical_t: critical_parameter(fam.k())?,
        lichnerowicz_bound: fam.lichnerowicz_lower_bound(),
    };
    let meta = Metadata::new(cfg);
    let mut out = open_output(cfg.out.as_deref())?;
    match cfg.format {
        Format::Csv => {
            let rows = vec![
                vec!["n".into(), body.n.to_string()],
                vec!["scalar".into(), num(body.scalar)],
                vec!["volume".into(), num(body.volume)],
                vec!["eh_energy".into(), num(body.eh_energy)],
                vec!["aubin_constant".into(), num(body.aubin_constant)],
                vec!["lambda1".into(), num(body.lambda1)],
                vec!["threshold".into(), num(body.threshold)],
                vec!["classification".into(), body.classification.to_string()],
                vec!["critical_t".into(), num(body.critical_t)],
                vec!["lichnerowicz_bound".into(), num(body.lichnerowicz_bound)],
            ];
            write_csv(&mut out, &meta, &["quantity", "value"], &rows)
        }
        _ => write_json(&mut out, &meta, &body),
    }
}

/// One CSV/JSON row of a scan.
#[derive(Serialize)]
struct ScanRow {
    t: f64,
    s: f64,
    lambda1: f64,
    threshold: f64,
    classification: Classification,
    energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<f64>,
    drop: Option<f64>,
}

impl From<&ScanRecord> for ScanRow {
    fn from(r: &ScanRecord) -> Self {
        ScanRow {
            t: r.t,
            s: r.scalar,
            lambda1: r.lambda1,
            threshold: r.threshold,
            classification: r.classification,
            energy: r.eh_energy,
            estimate: r.minimizer_estimate,
            drop: r.certificate.as_ref().map(|c| c.drop),
        }
    }
}

#[derive(Serialize)]
struct TaggedCertificate<'a> {
    t: f64,
    #[serde(flatten)]
    certificate: &'a Certificate,
}

#[derive(Serialize)]
struct Bracket {
    #[serde(flatten)]
    bracket: MaximalTBracket,
    tol: f64,
    label: &'static str,
}

#[derive(Serialize)]
struct ScanBody<'a> {
    critical_t: f64,
    records: Vec<ScanRow>,
    certificates: Vec<TaggedCertificate<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bracket: Option<Bracket>,
}

fn minimize_options(cfg: &RunConfig) -> MinimizeOptions {
    MinimizeOptions {
        restarts: cfg.restarts,
        seed: cfg.seed,
        tol: cfg.tol,
        exec: ExecPolicy::Parallel,
        ..Default::default()
    }
}

fn run_scan(cfg: &RunConfig) -> Result<(), CliError> {
    let template = ProductFamily::sphere_product(cfg.k, cfg.l, 1.0)?;
    let opts = ScanOptions {
        with_minimizer: cfg.with_minimizer,
        minimizer: minimize_options(cfg),
        l_max: cfg.l_max,
        degree: cfg.degree,
        trial: TrialSpace::Zonal,
        certificates: true,
        exec: ExecPolicy::Parallel,
    };
    let t_max = if cfg.steps == 1 { cfg.t_min } else { cfg.t_max };
    let records = scan(&template, cfg.t_min, t_max, cfg.steps, &opts)?;
    let critical_t = critical_parameter(cfg.k)?;
    let bracket = if cfg.with_minimizer {
        let scale = records.iter().map(|r| r.eh_energy).fold(0.0, f64::max);
        let tol = BRACKET_REL_TOL * scale;
        Some(Bracket { bracket: bracket_maximal_t(&records, tol)?, tol, label: "heuristic" })
    } else {
        None
    };
    let meta = Metadata::new(cfg);
    let mut out = open_output(cfg.out.as_deref())?;
    match cfg.format {
        Format::Csv => {
            let mut header = vec!["t", "s", "lambda1", "threshold", "classification", "energy"];
            if cfg.with_minimizer {
                header.push("estimate");
            }
            header.push("drop");
            let rows: Vec<Vec<String>> = records
                .iter()
                .map(|r| {
                    let mut row = vec![
                        num(r.t),
                        num(r.scalar),
                        num(r.lambda1),
                        num(r.threshold),
                        r.classification.to_string(),
                        num(r.eh_energy),
                    ];
                    if cfg.with_minimizer {
                        row.push(opt_num(r.minimizer_estimate));
                    }
                    row.push(opt_num(r.certificate.as_ref().map(|c| c.drop)));
                    row
                })
                .collect();
            write_csv(&mut out, &meta, &header, &rows)?;
            if let Some(b) = &bracket {
                writeln!(
                    out,
                    "# bracket ({}) = [{}, {}] {:?}",
                    b.label,
                    num(b.bracket.t_low),
                    num(b.bracket.t_high),
                    b.bracket.kind
                )?;
                out.flush()?;
            }
            Ok(())
        }
        Format::Json => {
            let body = ScanBody {
                critical_t,
                records: records.iter().map(ScanRow::from).collect(),
                certificates: records
                    .iter()
                    .filter_map(|r| r.certificate.as_ref().map(|c| TaggedCertificate { t: r.t, certificate: c }))
                    .collect(),
                bracket,
            };
            write_json(&mut out, &meta, &body)
        }
        Format::Svg => {
            let pts = |f: &dyn Fn(&ScanRecord) -> Option<f64>| -> Vec<(f64, f64)> {
                records.iter().filter_map(|r| f(r).map(|v| (r.t, v))).collect()
            };
            let panels = [
                Panel {
                    title: "normalized total scalar curvature",
                    series: vec![
                        Series { label: "E(h_t)", color: "#1f4e9c", points: pts(&|r| Some(r.eh_energy)) },
                        Series {
                            label: "minimizer estimate",
                            color: "#2a9d3a",
                            points: pts(&|r| r.minimizer_estimate),
                        },
                    ],
                },
                Panel {
                    title: "first eigenvalue against s/(n-1)",
                    series: vec![
                        Series { label: "lambda1", color: "#1f4e9c", points: pts(&|r| Some(r.lambda1)) },
                        Series { label: "s/(n-1)", color: "#e07b00", points: pts(&|r| Some(r.threshold)) },
                    ],
                },
            ];
            let t_range = (records[0].t, records[records.len() - 1].t);
            let svg = plot(&panels, t_range, critical_t, &serde_json::to_string(&meta)?);
            out.write_all(svg.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct MinimizeBody<'a> {
    family: FamilySpec,
    estimate: f64,
    energy: f64,
    energy_gap: f64,
    aubin_bound: f64,
    aubin_gap: f64,
    descent_found: bool,
    seed: u64,
    basis_size: usize,
    l_max: u32,
    degree: usize,
    best_restart: usize,
    restarts: &'a [RestartSummary],
    coefficients: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_file: Option<String>,
}

const TRACE_HEADER: [&str; 5] = ["restart", "iter", "quotient", "step", "min_u"];

fn trace_rows(trace: &[TraceRow]) -> Vec<Vec<String>> {
    trace
        .iter()
        .map(|r| vec![r.restart.to_string(), r.iter.to_string(), num(r.quotient), num(r.step), num(r.min_u)])
        .collect()
}

fn minimize(cfg: &RunConfig) -> Result<(), CliError> {
    let fam = ProductFamily::sphere_product(cfg.k, cfg.l, cfg.require_t()?)?;
    let space = ProductSpace::new(fam, cfg.l_max, cfg.degree, TrialSpace::Zonal, ExecPolicy::Parallel)?;
    let res = minimize_quotient(&space, &minimize_options(cfg))?;
    let meta = Metadata::new(cfg);
    let trace_file = cfg.out.as_deref().map(trace_path);
    if let Some(path) = &trace_file {
        let mut w = open_output(Some(path))?;
        write_csv(&mut w, &meta, &TRACE_HEADER, &trace_rows(&res.trace))?;
    }
    let body = MinimizeBody {
        family: fam.to_spec(),
        estimate: res.estimate,
        energy: res.energy,
        energy_gap: res.energy_gap(),
        aubin_bound: res.aubin_bound,
        aubin_gap: res.aubin_gap(),
        descent_found: res.energy_gap() > 0.0,
        seed: cfg.seed,
        basis_size: res.basis_size,
        l_max: cfg.l_max,
        degree: cfg.degree,
        best_restart: res.best_restart,
        restarts: &res.restarts,
        coefficients: res.minimizer.coeffs(),
        trace_file: trace_file.as_ref().and_then(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()),
    };
    let mut out = open_output(cfg.out.as_deref())?;
    match cfg.format {
        Format::Csv => {
            let header = ["estimate", "energy", "energy_gap", "aubin_bound", "aubin_gap", "seed", "basis_size"];
            let row = vec![
                num(body.estimate),
                num(body.energy),
                num(body.energy_gap),
                num(body.aubin_bound),
                num(body.aubin_gap),
                body.seed.to_string(),
                body.basis_size.to_string(),
            ];
            write_csv(&mut out, &meta, &header, &[row])
        }
        _ => write_json(&mut out, &meta, &body),
    }
}

#[derive(Serialize)]
struct StaticBody {
    status: &'static str,
    #[serde(flatten)]
    report: StaticReport,
}

fn static_potential(cfg: &RunConfig) -> Result<(), CliError> {
    let t = match cfg.t {
        Some(t) => t,
        None => critical_parameter(cfg.k)?,
    };
    let fam = ProductFamily::sphere_product(cfg.k, cfg.l, t)?;
    let cand = StaticCandidate::new(fam, Potential::X1)?;
    let report = static_check(&cand)?;
    let status = if report.is_static { "static" } else { "not static" };
    let meta = Metadata::new(cfg);
    let mut out = open_output(cfg.out.as_deref())?;
    write_json(&mut out, &meta, &StaticBody { status, report })
}
