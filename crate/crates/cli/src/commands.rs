use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;

use clap::Args;
use serde::Serialize;

use xxqst_core::chain::CouplingProfile;
use xxqst_core::heisenberg::{coefficient_trace, trace_to_csv};
use xxqst_core::optimize::{self, cross_validate, default_box, optimize_in, Range};
use xxqst_core::protocol::{
    branch_averaged_fidelity, run_protocol, run_protocol_branches, verify_end_identities, verify_transfer_condition,
    CorrectionMode, Engine, ProtocolConfig, ProtocolRecord, TransferTriplet,
};

use crate::output::{comment_header, emit, json_document, CliResult, RunConfig};
use crate::parse::{parse_medium, parse_time, resolve_input, resolve_profile};
use crate::{BoxArgs, OutputArgs, ProfileArgs};

#[derive(Debug, Clone, Serialize)]
struct ProfileRecord {
    spec: String,
    n: usize,
    couplings: Vec<f64>,
}

fn profile_record(args: &ProfileArgs, p: &CouplingProfile) -> ProfileRecord {
    let spec = match args.eta {
        Some(eta) => format!("{}:{eta}", args.profile),
        None => args.profile.clone(),
    };
    ProfileRecord { spec, n: p.n_sites(), couplings: p.couplings().to_vec() }
}

fn build_profile(args: &ProfileArgs) -> CliResult<CouplingProfile> {
    Ok(resolve_profile(&args.profile, args.n, args.eta)?)
}

#[derive(Serialize)]
struct CoefficientParams {
    profile: ProfileRecord,
    t_max: f64,
    steps: usize,
}

pub fn coefficients(profile: &ProfileArgs, t_max: f64, steps: usize, out: &OutputArgs) -> CliResult<ExitCode> {
    let p = build_profile(profile)?;
    let trace = coefficient_trace(&p, t_max, steps)?;
    let run = RunConfig {
        command: "coefficients",
        format: "csv",
        params: CoefficientParams { profile: profile_record(profile, &p), t_max, steps },
    };
    let text = comment_header(&run, out)? + &trace_to_csv(&trace);
    emit(out.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Args, Debug, Clone)]
pub struct TransferArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    /// Evolution time; decimals or `pi/4`-style tokens.
    #[arg(long, value_parser = parse_time, default_value = "pi/4")]
    t: f64,
    /// Axial input (`0`, `1`, `+x`, `-x`, `+y`, `-y`) or `mixed`.
    #[arg(long, default_value = "+x")]
    input: String,
    /// Bloch polar angle; overrides --input.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    /// `zero`, `random`, `mixed`, `thermal:B` or `thermal-full:B`.
    #[arg(long, default_value = "zero")]
    medium: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draw one outcome pair instead of reporting all four branches.
    #[arg(long)]
    sample: bool,
    /// `full`, `frame` or `none`.
    #[arg(long, default_value = "full")]
    correction: String,
    /// `ensemble` or `density`.
    #[arg(long, default_value = "ensemble")]
    engine: String,
    #[arg(long, env = "XXQST_ORACLE_CAP", default_value_t = xxqst_core::oracle::DEFAULT_ORACLE_CAP)]
    oracle_cap: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Serialize)]
struct TransferParams {
    profile: ProfileRecord,
    t: f64,
    input_bloch: [f64; 3],
    medium: String,
    seed: u64,
    mode: &'static str,
    correction: String,
    engine: String,
    oracle_cap: usize,
}

#[derive(Serialize)]
struct BranchRecord {
    probability: f64,
    #[serde(flatten)]
    record: ProtocolRecord,
}

#[derive(Serialize)]
struct TransferBody {
    branches: Vec<BranchRecord>,
    average_fidelity: f64,
}

fn usage(msg: String) -> xxqst_core::Error {
    xxqst_core::Error::InvalidArgument(msg)
}

pub fn transfer(args: &TransferArgs) -> CliResult<ExitCode> {
    let p = build_profile(&args.profile)?;
    let input = resolve_input(&args.input, args.theta, args.phi)?;
    let medium = parse_medium(&args.medium)?;
    let correction = match args.correction.as_str() {
        "full" => CorrectionMode::Full,
        "frame" => CorrectionMode::FrameOnly,
        "none" => CorrectionMode::None,
        c => return Err(usage(format!("unknown correction '{c}' (full, frame, none)")).into()),
    };
    let engine = match args.engine.as_str() {
        "ensemble" => Engine::Ensemble,
        "density" => Engine::DensityMatrix,
        e => return Err(usage(format!("unknown engine '{e}' (ensemble, density)")).into()),
    };
    let config = ProtocolConfig::new(p.clone(), input.clone())
        .with_time(args.t)
        .with_medium(medium.clone())
        .with_seed(args.seed)
        .with_cap(args.oracle_cap)
        .with_correction(correction)
        .with_engine(engine);
    let body = if args.sample {
        let r = run_protocol(&config)?;
        let branches = run_protocol_branches(&config)?;
        let probability = branches
            .iter()
            .find(|b| b.result.outcome_pre == r.outcome_pre && b.result.outcome_post == r.outcome_post)
            .map_or(0.0, |b| b.probability);
        TransferBody { average_fidelity: r.fidelity, branches: vec![BranchRecord { probability, record: r.record() }] }
    } else {
        let branches = run_protocol_branches(&config)?;
        TransferBody {
            average_fidelity: branch_averaged_fidelity(&branches),
            branches: branches
                .iter()
                .map(|b| BranchRecord { probability: b.probability, record: b.result.record() })
                .collect(),
        }
    };
    let run = RunConfig {
        command: "transfer",
        format: "json",
        params: TransferParams {
            profile: profile_record(&args.profile, &p),
            t: args.t,
            input_bloch: input.bloch()?,
            medium: medium.describe(),
            seed: args.seed,
            mode: if args.sample { "sampled" } else { "branches" },
            correction: args.correction.clone(),
            engine: args.engine.clone(),
            oracle_cap: args.oracle_cap,
        },
    };
    emit(args.output.out.as_deref(), &json_document(&run, &body, &args.output)?)?;
    Ok(ExitCode::SUCCESS)
}

fn search_box(n: usize, grid: &BoxArgs) -> (Range, Range) {
    let (e, t) = default_box(n);
    (
        Range::new(grid.eta_min.unwrap_or(e.lo), grid.eta_max.unwrap_or(e.hi)),
        Range::new(grid.t_min.unwrap_or(t.lo), grid.t_max.unwrap_or(t.hi)),
    )
}

#[derive(Serialize)]
struct SweepParams {
    n: usize,
    eta_range: Range,
    t_range: Range,
    resolution: usize,
}

pub fn sweep(n: usize, grid: &BoxArgs, best_out: Option<&Path>, out: &OutputArgs) -> CliResult<ExitCode> {
    let (eb, tb) = search_box(n, grid);
    let result = optimize::sweep(n, eb, tb, grid.resolution)?;
    let params = SweepParams { n, eta_range: eb, t_range: tb, resolution: grid.resolution };
    let run = RunConfig { command: "sweep", format: "csv", params };
    let text = comment_header(&run, out)? + &result.to_csv();
    emit(out.out.as_deref(), &text)?;
    if let Some(path) = best_out {
        let run = RunConfig { format: "json", ..run };
        emit(Some(path), &json_document(&run, &result.best_point, out)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct OptimizeParams {
    n: usize,
    eta_range: Range,
    t_range: Range,
    resolution: usize,
    tolerance: f64,
    cross_validate: usize,
    seed: u64,
    oracle_cap: usize,
}

#[derive(Serialize)]
struct OptimizeBody {
    eta: f64,
    t: f64,
    estimate: f64,
    refinement_trace: Vec<optimize::RefineStep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_validation: Option<optimize::CrossValidation>,
}

pub fn optimize(
    n: usize,
    grid: &BoxArgs,
    tolerance: f64,
    samples: usize,
    seed: u64,
    oracle_cap: usize,
    out: &OutputArgs,
) -> CliResult<ExitCode> {
    let box_ = search_box(n, grid);
    let result = optimize_in(n, box_, grid.resolution, tolerance)?;
    let b = result.best_point;
    let cross_validation = if samples > 0 {
        let p = xxqst_core::chain::boundary_profile(n, b.eta)?;
        Some(cross_validate(&p, b.t, samples, seed, oracle_cap)?)
    } else {
        None
    };
    let params = OptimizeParams {
        n,
        eta_range: box_.0,
        t_range: box_.1,
        resolution: grid.resolution,
        tolerance,
        cross_validate: samples,
        seed,
        oracle_cap,
    };
    let body = OptimizeBody {
        eta: b.eta,
        t: b.t,
        estimate: b.estimate,
        refinement_trace: result.refinement_trace,
        cross_validation,
    };
    let run = RunConfig { command: "optimize", format: "json", params };
    emit(out.out.as_deref(), &json_document(&run, &body, out)?)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CheckParams {
    profile: ProfileRecord,
    t: f64,
    sites: Vec<usize>,
}

#[derive(Serialize)]
struct CheckRow {
    check: String,
    deviation: f64,
    passes: bool,
}

#[derive(Serialize)]
struct CheckBody {
    rows: Vec<CheckRow>,
    all_pass: bool,
}

fn identity_rows(p: &CouplingProfile, t: f64, site: usize) -> CliResult<Vec<CheckRow>> {
    Ok(verify_end_identities(p, t, site)?
        .into_iter()
        .map(|r| CheckRow { check: r.label, deviation: r.deviation, passes: r.passes })
        .collect())
}

fn finish_checks(
    command: &'static str,
    params: CheckParams,
    rows: Vec<CheckRow>,
    json: bool,
    out: &OutputArgs,
) -> CliResult<ExitCode> {
    let all_pass = rows.iter().all(|r| r.passes);
    let run = RunConfig { command, format: if json { "json" } else { "text" }, params };
    let body = CheckBody { rows, all_pass };
    let text = if json {
        json_document(&run, &body, out)?
    } else {
        let mut s = comment_header(&run, out)?;
        let width = body.rows.iter().map(|r| r.check.chars().count()).max().unwrap_or(0);
        for r in &body.rows {
            let pad = width - r.check.chars().count();
            let verdict = if r.passes { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{}{}  {verdict}  max deviation {:.3e}", r.check, " ".repeat(pad), r.deviation);
        }
        let _ = writeln!(s, "{}", if body.all_pass { "all checks pass" } else { "some checks FAIL" });
        s
    };
    emit(out.out.as_deref(), &text)?;
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

pub fn verify(profile: &ProfileArgs, t: f64, site: usize, json: bool, out: &OutputArgs) -> CliResult<ExitCode> {
    let p = build_profile(profile)?;
    let n = p.n_sites();
    let mut rows = identity_rows(&p, t, site)?;
    if site == 1 {
        for r in verify_transfer_condition(&p, t, &TransferTriplet::xx_protocol(n), None)? {
            rows.push(CheckRow {
                check: format!("transfer condition {} (j={}, k={})", r.observable, r.j, r.k),
                deviation: r.deviation,
                passes: r.passes,
            });
        }
    }
    let params = CheckParams { profile: profile_record(profile, &p), t, sites: vec![site] };
    finish_checks("verify", params, rows, json, out)
}

pub fn identity(profile: &ProfileArgs, t: f64, json: bool, out: &OutputArgs) -> CliResult<ExitCode> {
    let p = build_profile(profile)?;
    let sites: Vec<usize> = (1..=p.n_sites() / 2).collect();
    let mut rows = Vec::new();
    for &i in &sites {
        rows.extend(identity_rows(&p, t, i)?);
    }
    let params = CheckParams { profile: profile_record(profile, &p), t, sites };
    finish_checks("identity", params, rows, json, out)
}
