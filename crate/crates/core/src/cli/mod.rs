//! Command-line front end: configuration, dispatch, JSON and CSV reports.
//!
//! Exit codes: 0 pass or certified, 1 fail, 2 precondition violated or
//! inconclusive, 3 configuration or runtime error.

mod config;

pub use config::{parse_config, Command, DeltaSpec, GridConfig, OutputConfig, RunConfig};

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};

use crate::abp::{abp_quantities, estimate_constant, poisson_rhs, AbpReport};
use crate::catalog::{
    catalog_entries, catalog_entry, catalog_params, check_entry, scenario_entries, scenario_entry,
};
use crate::envelope::{
    build_obstacle, convex_envelope_iterative, convex_envelope_lp, default_max_iter,
    nonvoid_witness, Stencil,
};
use crate::error::{Error, Result};
use crate::expr::Function;
use crate::geometry::{sample, GridDomain, ScalarField};
use crate::pipeline::{
    build_v_delta, counterexample_demo, run_extension, ExtensionReport, Scenario,
};
use crate::singular_sets::SingularSet;
use crate::viscosity::{certify_psh, certify_subharmonic, Status};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "plurilab",
    version,
    about = "Grid laboratory for plurisubharmonic extension"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Catalog entry, scenario name, or closed-form expression.
    #[arg(long, allow_hyphen_values = true)]
    pub target: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Inner radius; repeat or separate with commas for a sweep.
    #[arg(long, value_delimiter = ',')]
    pub delta: Vec<f64>,
    #[arg(long)]
    pub ppa: Option<usize>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Result of one command before it is written out.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub result: Value,
    /// One row per chain record.
    pub chain_csv: Option<String>,
    /// One row per ABP report.
    pub abp_csv: Option<String>,
}

#[derive(Serialize)]
struct Report<'a> {
    command: Command,
    inputs: &'a RunConfig,
    exit_code: i32,
    result: &'a Value,
    timing_ms: f64,
}

/// Pretty JSON report; `timing_ms` is the only run-dependent field.
pub fn render_report(config: &RunConfig, outcome: &Outcome, timing_ms: f64) -> Result<String> {
    let report = Report {
        command: config.command,
        inputs: config,
        exit_code: outcome.exit_code,
        result: &outcome.result,
        timing_ms,
    };
    serde_json::to_string_pretty(&report).map_err(|e| Error::Internal(e.to_string()))
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn run_cli(cli: &Cli) -> Result<i32> {
    let config = build_config(cli)?;
    let start = Instant::now();
    let outcome = execute(&config)?;
    let timing_ms = start.elapsed().as_secs_f64() * 1e3;
    let text = render_report(&config, &outcome, timing_ms)?;
    match &config.output.json {
        Some(path) => write_file(Path::new(path), &text)?,
        None => println!("{text}"),
    }
    if let Some(path) = &config.output.csv {
        let path = Path::new(path);
        match (&outcome.chain_csv, &outcome.abp_csv) {
            (Some(chain), abp) => {
                write_file(path, chain)?;
                if let Some(abp) = abp {
                    write_file(&path.with_extension("abp.csv"), abp)?;
                }
            }
            (None, Some(abp)) => write_file(path, abp)?,
            (None, None) => {}
        }
    }
    if config.output.verbosity > 0 {
        eprintln!(
            "{:?}: exit code {} after {timing_ms:.0} ms",
            config.command, outcome.exit_code
        );
    }
    Ok(outcome.exit_code)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

/// Merges the configuration file (if any) with command-line overrides.
pub fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let cfg: RunConfig =
                serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            if cfg.command != cli.command {
                return Err(Error::Config(format!(
                    "command: the file asks for {:?} but the command line says {:?}",
                    cfg.command, cli.command
                )));
            }
            cfg
        }
        None => RunConfig::new(cli.command),
    };
    if let Some(t) = &cli.target {
        cfg.target = Some(t.clone());
    }
    if let Some(n) = cli.n {
        cfg.grid.n = Some(n);
    }
    match cli.delta.as_slice() {
        [] => {}
        [d] => cfg.grid.delta = Some(DeltaSpec::One(*d)),
        ds => cfg.grid.delta = Some(DeltaSpec::Many(ds.to_vec())),
    }
    if let Some(p) = cli.ppa {
        cfg.grid.points_per_axis = Some(p);
    }
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(p) = &cli.out_json {
        cfg.output.json = Some(p.display().to_string());
    }
    if let Some(p) = &cli.out_csv {
        cfg.output.csv = Some(p.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    match config.command {
        Command::Certify => certify(config),
        Command::Envelope => envelope(config),
        Command::Abp => abp(config),
        Command::Extend => extend(config),
        Command::Catalog => catalog(config),
        Command::DemoCounterexample => demo(config),
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Internal(e.to_string()))
}

fn ppa(config: &RunConfig) -> usize {
    config.grid.points_per_axis.unwrap_or(17)
}

fn first_delta(config: &RunConfig) -> Option<f64> {
    config.grid.delta.as_ref().map(|d| d.values()[0])
}

fn combine(statuses: &[Status]) -> i32 {
    if statuses.contains(&Status::Fail) {
        EXIT_FAIL
    } else if statuses.contains(&Status::Inconclusive) {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_PASS
    }
}

fn certify(config: &RunConfig) -> Result<Outcome> {
    let target = config.target.clone().unwrap_or_default();
    let entry = catalog_entry(&target);
    let (function, n, delta, set) = match &entry {
        Some(e) => {
            let n = config.grid.n.unwrap_or(e.default_n).max(e.min_n);
            let set = config
                .set
                .clone()
                .or_else(|| e.expected.psh_off.map(|(shape, _)| shape.build(n)));
            (e.function(), n, first_delta(config).unwrap_or(e.delta), set)
        }
        None => {
            let f = Function::parse(&target)?;
            let n = config.grid.n.unwrap_or(f.min_dimension().max(1));
            (f, n, first_delta(config).unwrap_or(0.5), config.set.clone())
        }
    };
    function.check_dimension(n)?;
    let domain = GridDomain::new(n, config.center(n)?, delta, ppa(config))?;
    let field = sample(&function, &domain)?;
    let params = catalog_params(&domain, config.seed());
    let margin = 2.0 * domain.h();
    let subharmonic = certify_subharmonic(&field, &params)?;
    let psh = certify_psh(&field, &SingularSet::Empty, 0.0, &params)?;
    let psh_off = match &set {
        Some(s) => Some(certify_psh(&field, s, margin, &params)?),
        None => None,
    };
    let mut statuses = vec![subharmonic.status];
    statuses.push(psh_off.as_ref().map_or(psh.status, |v| v.status));
    let result = json!({
        "target": target,
        "function": function.to_string(),
        "n": n,
        "delta": delta,
        "points_per_axis": domain.points_per_axis(),
        "h": domain.h(),
        "margin": margin,
        "set": to_value(&set)?,
        "subharmonic": to_value(&subharmonic)?,
        "psh": to_value(&psh)?,
        "psh_off": to_value(&psh_off)?,
        "expected": to_value(&entry.as_ref().map(|e| &e.expected))?,
    });
    Ok(Outcome {
        exit_code: combine(&statuses),
        result,
        chain_csv: None,
        abp_csv: None,
    })
}

fn resolve_scenario(config: &RunConfig) -> Result<Scenario> {
    let mut scenario = match &config.scenario {
        Some(s) => s.clone(),
        None => {
            let name = config.target.as_deref().unwrap_or_default();
            let n = config.grid.n.unwrap_or(2);
            scenario_entry(name, n)
                .ok_or_else(|| Error::Config(format!("target: unknown scenario {name:?}")))?
                .scenario
        }
    };
    if let Some(set) = &config.set {
        scenario.singular_set = set.clone();
    }
    scenario.validate()?;
    Ok(scenario)
}

fn envelope(config: &RunConfig) -> Result<Outcome> {
    let target = config.target.as_deref().unwrap_or_default();
    let is_scenario =
        config.scenario.is_some() || scenario_entry(target, config.grid.n.unwrap_or(2)).is_some();
    let delta = first_delta(config).unwrap_or(config.params.deltas[0]);
    let (domain, v): (GridDomain, ScalarField) = if is_scenario {
        let s = resolve_scenario(config)?;
        let domain = GridDomain::new(s.n, s.z0.clone(), delta, ppa(config))?;
        let v = build_v_delta(&s, delta, &domain)?;
        (domain, v)
    } else {
        let f = Function::parse(target)?;
        let n = config.grid.n.unwrap_or(f.min_dimension().max(1));
        let domain = GridDomain::new(n, config.center(n)?, delta, ppa(config))?;
        let v = sample(&f, &domain)?;
        (domain, v)
    };
    let obstacle = build_obstacle(&v, &domain)?;
    let tol = config.params.tolerances.envelope;
    let max_iter = config
        .params
        .max_iter
        .unwrap_or_else(|| default_max_iter(&domain));
    let solution = match convex_envelope_iterative(
        &obstacle,
        &Stencil::with_diagonals(domain.real_dim()),
        tol,
        max_iter,
    ) {
        Ok(s) => s,
        Err(e @ Error::Convergence { .. }) => {
            return Ok(Outcome {
                exit_code: EXIT_INCONCLUSIVE,
                result: json!({ "error": e.to_string() }),
                chain_csv: None,
                abp_csv: None,
            })
        }
        Err(e) => return Err(e),
    };
    let center = domain.center_node();
    let ci = obstacle
        .index_of(center)
        .expect("center lies in the inner ball");
    let lp = convex_envelope_lp(&obstacle, center)?;
    let contact = solution.contact_mask.iter().filter(|&&b| b).count();
    let result = json!({
        "n": domain.n(),
        "delta": delta,
        "points_per_axis": domain.points_per_axis(),
        "h": domain.h(),
        "obstacle_nodes": obstacle.len(),
        "iterations": solution.iterations,
        "final_residual": solution.final_residual,
        "contact_tol": solution.contact_tol,
        "contact_count": contact,
        "contact_measure": contact as f64 * domain.cell_volume(),
        "nonvoid_witness": nonvoid_witness(&obstacle).b,
        "gamma_at_center": solution.gamma[ci],
        "lp_at_center": lp,
    });
    Ok(Outcome {
        exit_code: EXIT_PASS,
        result,
        chain_csv: None,
        abp_csv: None,
    })
}

fn abp_rows(reports: &[&AbpReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record([
        "delta",
        "sup_abs",
        "contact_integral",
        "implied_c",
        "lower_bound_ok",
        "contact_count",
    ])
    .map_err(io)?;
    for r in reports {
        w.write_record([
            r.delta.to_string(),
            r.sup_abs.to_string(),
            r.contact_integral.to_string(),
            r.implied_c.map(|c| c.to_string()).unwrap_or_default(),
            r.lower_bound_ok.to_string(),
            r.contact_count.to_string(),
        ])
        .map_err(io)?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

/// Columns: delta, r, T_index, u_gap, gamma_gap, phi_bound, hessian_form_min.
pub fn chain_rows(report: &ExtensionReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record([
        "delta",
        "r",
        "T_index",
        "u_gap",
        "gamma_gap",
        "phi_bound",
        "hessian_form_min",
    ])
    .map_err(io)?;
    for d in &report.deltas {
        let hess = d
            .hessian_form_min
            .map(|v| v.to_string())
            .unwrap_or_default();
        for c in &d.chain {
            w.write_record([
                d.delta.to_string(),
                c.r.to_string(),
                c.t_index.to_string(),
                c.u_gap.to_string(),
                c.gamma_gap.to_string(),
                c.phi_bound.to_string(),
                hess.clone(),
            ])
            .map_err(io)?;
        }
    }
    finish_csv(w)
}

fn abp(config: &RunConfig) -> Result<Outcome> {
    let s = resolve_scenario(config)?;
    let deltas = config
        .grid
        .delta
        .as_ref()
        .map_or_else(|| config.params.deltas.clone(), DeltaSpec::values);
    let tol = config.params.tolerances.envelope;
    let mut reports = Vec::new();
    for &delta in &deltas {
        let domain = GridDomain::new(s.n, s.z0.clone(), delta, ppa(config))?;
        let v = build_v_delta(&s, delta, &domain)?;
        let phi = sample(&s.phi, &domain)?;
        let obstacle = build_obstacle(&v, &domain)?;
        let max_iter = config
            .params
            .max_iter
            .unwrap_or_else(|| default_max_iter(&domain));
        let solution = convex_envelope_iterative(
            &obstacle,
            &Stencil::with_diagonals(domain.real_dim()),
            tol,
            max_iter,
        )?;
        let f = poisson_rhs(&phi, delta, s.n)?;
        reports.push(abp_quantities(&v, &obstacle, &solution, &f, delta)?);
    }
    let constant = estimate_constant(&reports).ok();
    let ok = reports.iter().all(|r| r.lower_bound_ok && !r.contact_empty);
    let csv = abp_rows(&reports.iter().collect::<Vec<_>>())?;
    let result = json!({
        "scenario": s.name,
        "n": s.n,
        "reports": to_value(&reports)?,
        "constant": constant,
    });
    Ok(Outcome {
        exit_code: if ok { EXIT_PASS } else { EXIT_FAIL },
        result,
        chain_csv: None,
        abp_csv: Some(csv),
    })
}

fn extend(config: &RunConfig) -> Result<Outcome> {
    let s = resolve_scenario(config)?;
    let mut params = config.params.clone();
    if let Some(d) = &config.grid.delta {
        params.deltas = d.values();
    }
    if let Some(p) = config.grid.points_per_axis {
        params.points_per_axis = p;
    }
    params.seed = config.seed();
    let report = run_extension(&s, &params)?;
    let abp: Vec<&AbpReport> = report
        .deltas
        .iter()
        .filter_map(|d| d.abp.as_ref())
        .collect();
    let abp_csv = abp_rows(&abp)?;
    Ok(Outcome {
        exit_code: report.conclusion.exit_code(),
        chain_csv: Some(chain_rows(&report)?),
        abp_csv: Some(abp_csv),
        result: to_value(&report)?,
    })
}

fn catalog(config: &RunConfig) -> Result<Outcome> {
    let n = config.grid.n.unwrap_or(2);
    match &config.target {
        None => {
            let entries: Vec<Value> = catalog_entries()
                .iter()
                .map(|e| {
                    json!({
                        "name": e.name,
                        "formula": e.formula,
                        "min_n": e.min_n,
                        "delta": e.delta,
                        "expected": to_value(&e.expected).unwrap_or(Value::Null),
                        "notes": e.notes,
                    })
                })
                .collect();
            let scenarios: Vec<Value> = scenario_entries(n)
                .iter()
                .map(|s| json!({ "name": s.scenario.name, "expected": s.expected, "notes": s.notes }))
                .collect();
            Ok(Outcome {
                exit_code: EXIT_PASS,
                result: json!({ "entries": entries, "scenarios": scenarios }),
                chain_csv: None,
                abp_csv: None,
            })
        }
        Some(name) => {
            let e = catalog_entry(name)
                .ok_or_else(|| Error::Config(format!("target: unknown catalog entry {name:?}")))?;
            let n = config.grid.n.unwrap_or(e.default_n).max(e.min_n);
            let out = check_entry(&e, n, ppa(config), config.seed())?;
            let code = if out.matches { EXIT_PASS } else { EXIT_FAIL };
            Ok(Outcome {
                exit_code: code,
                result: to_value(&out)?,
                chain_csv: None,
                abp_csv: None,
            })
        }
    }
}

fn demo(config: &RunConfig) -> Result<Outcome> {
    let n = config.grid.n.unwrap_or(2);
    let report = counterexample_demo(n, ppa(config), config.seed())?;
    Ok(Outcome {
        exit_code: report.pipeline.conclusion.exit_code(),
        result: to_value(&report)?,
        chain_csv: None,
        abp_csv: None,
    })
}
