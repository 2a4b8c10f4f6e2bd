use std::path::Path;

use ppir_core::audit::{privacy_report, ComparisonReport, RateParams};
use ppir_core::exchange::{run_session, DecodedMessage, ExchangeError, SessionTrace};
use ppir_core::query::{Demands, Preconditions, QueryError};
use ppir_core::scenario::{Mode, Scenario};
use thiserror::Error;

use crate::schema::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_RECOVERY: i32 = 4;

pub const DEFAULT_RUNS: u64 = 1000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Recovery(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Usage(_) => EXIT_PARSE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Recovery(_) => EXIT_RECOVERY,
            CliError::Io(_) | CliError::Internal(_) => EXIT_FAILURE,
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::BadDemand { .. } | QueryError::DemandCount { .. } => CliError::Usage(e.to_string()),
            QueryError::AssumptionViolated(_) | QueryError::PartitionInfeasible { .. } => {
                CliError::Validation(e.to_string())
            }
            QueryError::ExhaustedIndices { .. } => CliError::Recovery(e.to_string()),
        }
    }
}

impl From<ExchangeError> for CliError {
    fn from(e: ExchangeError) -> Self {
        match e {
            ExchangeError::Query(q) => q.into(),
            ExchangeError::Scenario(_) => CliError::Validation(e.to_string()),
            ExchangeError::RecoveryFailed { .. } | ExchangeError::InsufficientKnowns { .. } => {
                CliError::Recovery(e.to_string())
            }
            ExchangeError::Code(_) | ExchangeError::DimensionMismatch { .. } => CliError::Internal(e.to_string()),
        }
    }
}

pub fn read_scenario(path: &Path) -> Result<(ScenarioFile, Scenario), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(load_scenario(&text)?)
}

/// Default mode: single for one user, multi otherwise.
pub fn default_mode(s: &Scenario) -> Mode {
    if s.user_count() == 1 {
        Mode::Single
    } else {
        Mode::Multi
    }
}

/// Demands in file class numbering to internal [`Demands`].
pub fn internal_demands(s: &Scenario, mode: Mode, demands: &[usize]) -> Result<Demands, CliError> {
    let order = ClassOrder::of(s);
    let mapped = demands
        .iter()
        .map(|&v| {
            order.to_internal(v).ok_or_else(|| CliError::Usage(format!("demand {v} is not a class in 1..={}", s.gamma())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    match mode {
        Mode::Single => match mapped.as_slice() {
            [v] => Ok(Demands::Single(*v)),
            _ => Err(CliError::Usage(format!("single mode takes one demand, got {}", mapped.len()))),
        },
        Mode::Multi => Ok(Demands::Multi(mapped)),
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub mode: Option<Mode>,
    pub demands: Vec<usize>,
    pub seed: Option<u64>,
    pub force: bool,
}

pub fn cmd_run(file: &ScenarioFile, s: &Scenario, opts: &RunOptions) -> Result<TraceFile, CliError> {
    let mode = opts.mode.unwrap_or_else(|| default_mode(s));
    let demands = internal_demands(s, mode, &opts.demands)?;
    let seed = opts.seed.unwrap_or(file.seed);
    let pre = if opts.force { Preconditions::Skip } else { Preconditions::Enforce };
    let trace = run_session(s, &demands, seed, pre)?;
    let failed_checks = if opts.force { s.validate(mode).failures().map(|c| c.name.to_string()).collect() } else { vec![] };
    Ok(trace_file(s, mode, &demands, seed, opts.force, failed_checks, &trace))
}

fn message(order: ClassOrder<'_>, m: &DecodedMessage) -> TraceMessage {
    TraceMessage { class: order.to_input(m.class), subclass: m.subclass, message: m.message, symbols: m.symbols.clone() }
}

fn trace_file(
    s: &Scenario,
    mode: Mode,
    demands: &Demands,
    seed: u64,
    forced: bool,
    failed_checks: Vec<String>,
    t: &SessionTrace,
) -> TraceFile {
    let order = ClassOrder::of(s);
    let (n, k) = s.code_shape(mode);
    let view = t.projection();
    TraceFile {
        mode,
        demands: order.demands_to_input(demands),
        seed,
        forced,
        failed_checks,
        code: CodeShape { n, k, explicit: s.explicit_generator().is_some() },
        server_view: TraceView {
            disclosed: view.disclosed,
            queries: view.queries.iter().map(|q| order.query_to_input(q)).collect(),
        },
        answers: t.answers.iter().map(|a| TraceAnswer { j: a.j, parities: a.values() }).collect(),
        users: t
            .outcomes
            .iter()
            .map(|o| TraceUser {
                user: o.user,
                demand: order.to_input(o.demand),
                decoded: o
                    .decoded
                    .iter()
                    .map(|(j, msgs)| TraceDecoded { j: *j, messages: msgs.iter().map(|m| message(order, m)).collect() })
                    .collect(),
                skipped: o.skipped.iter().map(|q| TraceSkipped { j: q.j, reason: q.reason.clone() }).collect(),
                new_message: message(order, o.retrieved.as_ref().expect("run_session guarantees recovery")),
            })
            .collect(),
        download: t.download,
        rate: fraction(&t.rate),
    }
}

fn summary(file: &ScenarioFile, s: &Scenario) -> ScenarioSummary {
    let order = ClassOrder::of(s);
    let mut identifiable: Vec<usize> = s.class_order()[..s.eta()].to_vec();
    identifiable.sort_unstable();
    ScenarioSummary {
        field_order: file.field_order,
        classes: s.gamma(),
        eta: s.eta(),
        identifiable_classes: identifiable,
        users: s.user_count(),
        mu: order.permute(&(1..=s.gamma()).map(|i| s.mu(i)).collect::<Vec<_>>()),
        k: (1..=s.user_count())
            .map(|u| order.permute(&(1..=s.gamma()).map(|i| s.k(u, i)).collect::<Vec<_>>()))
            .collect(),
        k_un: s.k_un(),
        queries: s.query_count(),
    }
}

fn validation(s: &Scenario) -> Vec<ValidationSummary> {
    [Mode::Single, Mode::Multi]
        .into_iter()
        .map(|mode| {
            let r = s.validate(mode);
            ValidationSummary {
                mode,
                passed: r.passed(),
                failed: r
                    .failures()
                    .map(|c| CheckSummary { name: c.name.to_string(), offenders: c.offenders.clone() })
                    .collect(),
            }
        })
        .collect()
}

pub fn cmd_rates(file: &ScenarioFile, s: &Scenario) -> ReportFile {
    let c = ComparisonReport::new(&RateParams::from_scenario(s));
    ReportFile {
        scenario: summary(file, s),
        rates: RateTable {
            r_isi: fraction(&c.r_isi),
            r_usi: c.r_usi.as_ref().map(fraction),
            r_multi: fraction(&c.r_multi),
            r_naive_multi: fraction(&c.r_naive_multi),
        },
        theorems: c.theorems,
        validation: validation(s),
        privacy: None,
    }
}

#[derive(Debug, Clone, Default)]
pub struct AuditOptions {
    pub mode: Option<Mode>,
    pub runs: Option<u64>,
    pub seed: Option<u64>,
}

pub fn cmd_audit(file: &ScenarioFile, s: &Scenario, opts: &AuditOptions) -> ReportFile {
    let mode = opts.mode.unwrap_or_else(|| default_mode(s));
    let runs = opts.runs.unwrap_or(DEFAULT_RUNS);
    let base_seed = opts.seed.unwrap_or(file.seed);
    let order = ClassOrder::of(s);
    let p = privacy_report(s, mode, runs, base_seed);
    let mut census = p.census.clone();
    for f in &mut census.failures {
        for d in &mut f.demands {
            *d = order.to_input(*d);
        }
    }
    let mut report = cmd_rates(file, s);
    report.privacy = Some(PrivacySection {
        mode,
        base_seed,
        pass_rate: census.pass_rate(),
        census,
        tv_method: p.tv_method.clone(),
        tv: p
            .tv
            .iter()
            .map(|e| TvRow {
                a: order.demands_to_input(&e.a),
                b: order.demands_to_input(&e.b),
                value: e.value,
                exact: e.exact.as_ref().map(fraction),
            })
            .collect(),
    });
    report
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Writes to `out`, or stdout when absent.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}
