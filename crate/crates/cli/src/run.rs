use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use cross_tasep::correspondence::{verify_coupling_on_edges, verify_coupling_replicas, CouplingReport, MismatchKind};
use cross_tasep::estimator::{
    expected_distance_exact, lower_bound_check, monte_carlo_distance, stationary_start_expectation,
};
use cross_tasep::plane::{estimate_mu, MuEstimate};
use cross_tasep::rng::replica_rng;
use cross_tasep::strip::{
    cross_distance_axis, estimate_event_a_failure, event_a_pathwise_check, StripEdges, StripGeometry,
};
use cross_tasep::tasep::{
    nu_compare, nu_pair_formula, nu_pair_simulated, stationary_exact, SimulationConfig, TasepRates, EXACT_MAX_K,
};
use thiserror::Error;

use crate::args::{Cli, Command, StationaryMethodArg, StripMethod};
use crate::record::{Cell, ExperimentResult, ExperimentSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid arguments:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Core(#[from] cross_tasep::Error),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(cross_tasep::Error::Capacity(_)) => 3,
            _ => 1,
        }
    }
}

fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn probability(errors: &mut Vec<String>, name: &str, x: f64) {
    if !(0.0..=1.0).contains(&x) {
        errors.push(format!("--{name} = {x} is not in [0, 1]"));
    }
}

fn at_least(errors: &mut Vec<String>, name: &str, x: u64, min: u64) {
    if x < min {
        errors.push(format!("--{name} = {x} must be at least {min}"));
    }
}

/// Every problem with the arguments, not just the first.
pub fn validate(command: &Command) -> Vec<String> {
    let mut e = Vec::new();
    match command {
        Command::StripDistance { k, eps, method, replicas, dump_edges, replay_edges, .. } => {
            at_least(&mut e, "K", *k as u64, 1);
            probability(&mut e, "eps", *eps);
            if replay_edges.is_none() {
                if *method == StripMethod::MonteCarlo {
                    at_least(&mut e, "replicas", *replicas, 2);
                } else if dump_edges.is_some() {
                    e.push("--dump-edges needs --method monte-carlo".into());
                }
            } else if dump_edges.is_some() {
                e.push("--dump-edges and --replay-edges are exclusive".into());
            }
        }
        Command::TasepStationary { k, eps, method, alpha, beta, gamma, burn_in, samples, batch } => {
            at_least(&mut e, "K", *k as u64, 1);
            probability(&mut e, "eps", *eps);
            for (name, r) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
                if let Some(r) = r {
                    probability(&mut e, name, *r);
                    if *method != StationaryMethodArg::Exact {
                        e.push(format!("--{name} only applies to --method exact"));
                    }
                }
            }
            if *method == StationaryMethodArg::Simulation {
                at_least(&mut e, "burn-in", *burn_in, 1);
                at_least(&mut e, "batch", *batch, 1);
                at_least(&mut e, "samples", *samples, 2 * (*batch).max(1));
            }
        }
        Command::NuCompare { eps, k_max } => {
            for x in eps {
                probability(&mut e, "eps", *x);
            }
            at_least(&mut e, "K-max", *k_max as u64, 1);
        }
        Command::VerifyCorrespondence { k, eps, replicas, dump_edges, replay_edges, .. } => {
            at_least(&mut e, "K", *k as u64, 1);
            probability(&mut e, "eps", *eps);
            at_least(&mut e, "replicas", *replicas, 1);
            if dump_edges.is_some() && *replicas != 1 {
                e.push("--dump-edges needs --replicas 1".into());
            }
            if dump_edges.is_some() && replay_edges.is_some() {
                e.push("--dump-edges and --replay-edges are exclusive".into());
            }
        }
        Command::MuEstimate { eps, n, margin, replicas, .. } => {
            probability(&mut e, "eps", *eps);
            at_least(&mut e, "n", *n, 1);
            if let Some(m) = margin {
                if 2 * m < *n {
                    e.push(format!("--margin = {m} is below n/2"));
                }
            }
            at_least(&mut e, "replicas", *replicas, 100);
        }
        Command::EventABound { k, n, eps, samples, pathwise, max_attempts } => {
            at_least(&mut e, "K", *k as u64, 1);
            at_least(&mut e, "n", *n as u64, 1);
            probability(&mut e, "eps", *eps);
            at_least(&mut e, "samples", *samples, 1);
            if pathwise.is_some() {
                at_least(&mut e, "max-attempts", *max_attempts, 1);
            }
        }
        Command::LowerBoundCheck { k, eps, replicas } => {
            at_least(&mut e, "k", *k, 1);
            probability(&mut e, "eps", *eps);
            at_least(&mut e, "replicas", *replicas, 1);
        }
    }
    e
}

fn path_cell(p: &Option<std::path::PathBuf>) -> Cell {
    p.as_ref().map_or(Cell::Null, |p| Cell::text(p.display().to_string()))
}

/// The parameters of a command, keyed by flag name.
pub fn params(command: &Command) -> BTreeMap<String, Cell> {
    let mut p: Vec<(&str, Cell)> = Vec::new();
    match command {
        Command::StripDistance { k, eps, n, method, replicas, dump_edges, replay_edges } => {
            p.extend([
                ("K", (*k).into()),
                ("eps", (*eps).into()),
                ("n", (*n).into()),
                ("method", strip_method_name(*method, replay_edges.is_some()).into()),
                ("replicas", (*replicas).into()),
                ("dump_edges", path_cell(dump_edges)),
                ("replay_edges", path_cell(replay_edges)),
            ]);
        }
        Command::TasepStationary { k, eps, method, alpha, beta, gamma, burn_in, samples, batch } => {
            p.extend([
                ("K", (*k).into()),
                ("eps", (*eps).into()),
                ("method", stationary_method_name(*method).into()),
                ("alpha", (*alpha).into()),
                ("beta", (*beta).into()),
                ("gamma", (*gamma).into()),
                ("burn_in", (*burn_in).into()),
                ("samples", (*samples).into()),
                ("batch", (*batch).into()),
            ]);
        }
        Command::NuCompare { eps, k_max } => {
            let list: Vec<String> = eps.iter().map(|x| format!("{x:?}")).collect();
            p.extend([("eps_list", Cell::text(list.join(";"))), ("K_max", (*k_max).into())]);
        }
        Command::VerifyCorrespondence { k, eps, columns, replicas, dump_edges, replay_edges } => {
            p.extend([
                ("K", (*k).into()),
                ("eps", (*eps).into()),
                ("columns", (*columns).into()),
                ("replicas", (*replicas).into()),
                ("dump_edges", path_cell(dump_edges)),
                ("replay_edges", path_cell(replay_edges)),
            ]);
        }
        Command::MuEstimate { eps, n, margin, replicas, double_window } => {
            p.extend([
                ("eps", (*eps).into()),
                ("n", (*n).into()),
                ("margin", margin.unwrap_or(n.div_ceil(2)).into()),
                ("replicas", (*replicas).into()),
                ("double_window", (*double_window).into()),
            ]);
        }
        Command::EventABound { k, n, eps, samples, pathwise, max_attempts } => {
            p.extend([
                ("K", (*k).into()),
                ("n", (*n).into()),
                ("eps", (*eps).into()),
                ("samples", (*samples).into()),
                ("pathwise", (*pathwise).into()),
                ("max_attempts", (*max_attempts).into()),
            ]);
        }
        Command::LowerBoundCheck { k, eps, replicas } => {
            p.extend([("k", (*k).into()), ("eps", (*eps).into()), ("replicas", (*replicas).into())]);
        }
    }
    p.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn strip_method_name(m: StripMethod, replay: bool) -> &'static str {
    if replay {
        return "replay";
    }
    match m {
        StripMethod::Exact => "exact",
        StripMethod::MonteCarlo => "monte-carlo",
        StripMethod::Stationary => "stationary",
    }
}

fn stationary_method_name(m: StationaryMethodArg) -> &'static str {
    match m {
        StationaryMethodArg::Exact => "exact",
        StationaryMethodArg::Simulation => "simulation",
        StationaryMethodArg::Formula => "formula",
    }
}

struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    passed: bool,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), passed: true }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn read_edges(path: &Path) -> Result<StripEdges, CliError> {
    let text = std::fs::read_to_string(path).map_err(io(format!("cannot read {}", path.display())))?;
    Ok(text.parse()?)
}

fn write_edges(path: &Path, edges: &StripEdges) -> Result<(), CliError> {
    std::fs::write(path, edges.to_string()).map_err(io(format!("cannot write {}", path.display())))
}

/// Validates and runs one command.
pub fn execute(cli: &Cli) -> Result<ExperimentResult, CliError> {
    let errors = validate(&cli.command);
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    let spec = ExperimentSpec {
        command: cli.command.name().to_string(),
        seed: cli.seed,
        params: params(&cli.command),
        format: cli.format,
        output: cli.output.as_ref().map(|p| p.display().to_string()),
    };
    let start = Instant::now();
    let seed = cli.seed;
    let table = match &cli.command {
        Command::StripDistance { k, eps, n, method, replicas, dump_edges, replay_edges } => {
            strip_distance(*k, *eps, *n, *method, *replicas, dump_edges.as_deref(), replay_edges.as_deref(), seed)?
        }
        Command::TasepStationary { k, eps, method, alpha, beta, gamma, burn_in, samples, batch } => {
            let rates = TasepRates::new(alpha.unwrap_or(*eps), beta.unwrap_or(*eps), gamma.unwrap_or(*eps))?;
            tasep_stationary(*k, *eps, *method, rates, *burn_in, *samples, *batch, seed)?
        }
        Command::NuCompare { eps, k_max } => nu_compare_table(eps, *k_max, seed)?,
        Command::VerifyCorrespondence { k, eps, columns, replicas, dump_edges, replay_edges } => {
            verify_correspondence(*k, *eps, *columns, *replicas, dump_edges.as_deref(), replay_edges.as_deref(), seed)?
        }
        Command::MuEstimate { eps, n, margin, replicas, double_window } => {
            mu_estimate(*eps, *n, margin.unwrap_or(n.div_ceil(2)), *replicas, *double_window, seed)?
        }
        Command::EventABound { k, n, eps, samples, pathwise, max_attempts } => {
            event_a_bound(*k, *n, *eps, *samples, *pathwise, *max_attempts, seed)?
        }
        Command::LowerBoundCheck { k, eps, replicas } => {
            let r = lower_bound_check(*k, *eps, seed, *replicas)?;
            let mut t = Table::new(&[
                "k",
                "eps",
                "replicas",
                "equality_violations",
                "domination_violations",
                "monotonicity_violations",
                "plane_finite",
                "first_violation",
                "seed",
            ]);
            t.passed = r.passed();
            t.push(vec![
                r.k.into(),
                r.eps.into(),
                r.replicas.into(),
                r.equality_violations.into(),
                r.domination_violations.into(),
                r.monotonicity_violations.into(),
                r.plane_finite.into(),
                r.first_violation.into(),
                seed.into(),
            ]);
            t
        }
    };
    Ok(ExperimentResult {
        version: env!("CARGO_PKG_VERSION").to_string(),
        spec,
        columns: table.columns,
        rows: table.rows,
        passed: table.passed,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[allow(clippy::too_many_arguments)]
fn strip_distance(
    k: usize,
    eps: f64,
    n: u64,
    method: StripMethod,
    replicas: u64,
    dump: Option<&Path>,
    replay: Option<&Path>,
    seed: u64,
) -> Result<Table, CliError> {
    let (value, stderr) = if let Some(path) = replay {
        let edges = read_edges(path)?;
        if edges.geometry().k() != k {
            return Err(CliError::Validation(vec![format!(
                "--K = {k} but {} holds a strip with K = {}",
                path.display(),
                edges.geometry().k()
            )]));
        }
        if n as usize > edges.last_column() {
            return Err(CliError::Validation(vec![format!(
                "--n = {n} exceeds the {} columns in {}",
                edges.last_column(),
                path.display()
            )]));
        }
        let d = cross_distance_axis(&edges.to_cross().truncated(n as usize))?;
        (d as f64, None)
    } else {
        let est = match method {
            StripMethod::Exact => expected_distance_exact(k, eps, n)?,
            StripMethod::Stationary => stationary_start_expectation(k, eps, n)?,
            StripMethod::MonteCarlo => {
                if let Some(path) = dump {
                    let geom = StripGeometry::cross(k)?;
                    let edges = StripEdges::sample(&mut replica_rng(seed, 0), geom, eps, n as usize)?;
                    write_edges(path, &edges)?;
                }
                monte_carlo_distance(k, eps, n, replicas, seed)?
            }
        };
        (est.value, est.stderr)
    };
    let nu = if k <= EXACT_MAX_K && eps > 0.0 && eps < 1.0 {
        Some(stationary_exact(k, &TasepRates::uniform(eps)?)?.nu_pair)
    } else {
        None
    };
    let slope = nu.map(|nu| 1.0 + 2.0 * eps * nu);
    let lower = slope.map(|s| value - n as f64 * s);
    let upper = slope.map(|s| n as f64 * s + 2.0 * k as f64 - value);
    let mut t =
        Table::new(&["K", "eps", "n", "method", "value", "stderr", "nu_exact", "lower_gap", "upper_gap", "seed"]);
    if method == StripMethod::Exact && replay.is_none() {
        t.passed = lower.is_none_or(|g| g >= -1e-9) && upper.is_none_or(|g| g >= -1e-9);
    }
    t.push(vec![
        k.into(),
        eps.into(),
        n.into(),
        strip_method_name(method, replay.is_some()).into(),
        value.into(),
        Cell::opt_float(stderr),
        Cell::opt_float(nu),
        Cell::opt_float(lower),
        Cell::opt_float(upper),
        seed.into(),
    ]);
    Ok(t)
}

#[allow(clippy::too_many_arguments)]
fn tasep_stationary(
    k: usize,
    eps: f64,
    method: StationaryMethodArg,
    rates: TasepRates,
    burn_in: u64,
    samples: u64,
    batch: u64,
    seed: u64,
) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "K", "eps", "alpha", "beta", "gamma", "method", "nu_pair", "stderr", "residual", "samples", "seed",
    ]);
    let (rates, nu, stderr, residual, used) = match method {
        StationaryMethodArg::Exact => {
            let d = stationary_exact(k, &rates)?;
            (rates, d.nu_pair, None, d.residual, None)
        }
        StationaryMethodArg::Simulation => {
            let config = SimulationConfig { burn_in, samples, batch };
            let d = nu_pair_simulated(k, eps, config, &mut replica_rng(seed, 0))?;
            (d.rates, d.nu_pair, d.stderr, None, d.samples)
        }
        StationaryMethodArg::Formula => (TasepRates::uniform(eps)?, nu_pair_formula(k as u64, eps)?, None, None, None),
    };
    t.push(vec![
        k.into(),
        eps.into(),
        rates.alpha.into(),
        rates.beta.into(),
        rates.gamma.into(),
        stationary_method_name(method).into(),
        nu.into(),
        Cell::opt_float(stderr),
        Cell::opt_float(residual),
        used.into(),
        seed.into(),
    ]);
    Ok(t)
}

fn nu_compare_table(eps: &[f64], k_max: usize, seed: u64) -> Result<Table, CliError> {
    let mut t = Table::new(&["K", "eps", "formula", "exact", "residual", "abs_diff", "status", "seed"]);
    for &e in eps {
        for row in nu_compare(e, k_max)? {
            t.push(vec![
                row.k.into(),
                row.eps.into(),
                row.formula.into(),
                row.exact.into(),
                row.residual.into(),
                row.abs_diff.into(),
                Cell::text(row.status.to_string()),
                seed.into(),
            ]);
        }
    }
    Ok(t)
}

fn kind_name(kind: MismatchKind) -> &'static str {
    match kind {
        MismatchKind::Occupation => "occupation",
        MismatchKind::Distance => "distance",
        MismatchKind::Transition => "transition",
    }
}

fn verify_correspondence(
    k: usize,
    eps: f64,
    columns: u64,
    replicas: u64,
    dump: Option<&Path>,
    replay: Option<&Path>,
    seed: u64,
) -> Result<Table, CliError> {
    let report: CouplingReport = if let Some(path) = replay {
        let edges = read_edges(path)?.to_cross();
        verify_coupling_on_edges(&edges, eps, seed)?
    } else {
        if let Some(path) = dump {
            // Same stream and draw order as replica 0 of the check.
            let edges = StripEdges::sample(&mut replica_rng(seed, 0), StripGeometry::cross(k)?, eps, columns as usize)?;
            write_edges(path, &edges)?;
        }
        verify_coupling_replicas(k, eps, columns, replicas, seed)?
    };
    let mut t = Table::new(&[
        "K",
        "eps",
        "columns",
        "replicas",
        "steps_checked",
        "mismatches",
        "first_mismatch_replica",
        "first_mismatch_column",
        "first_mismatch_row",
        "first_mismatch_kind",
        "first_mismatch_expected",
        "first_mismatch_actual",
        "seed",
    ]);
    t.passed = report.passed();
    let m = report.first_mismatch.as_ref();
    t.push(vec![
        report.k.into(),
        eps.into(),
        columns.into(),
        report.replicas.into(),
        report.steps_checked.into(),
        report.mismatches.into(),
        report.first_mismatch_replica.into(),
        m.map(|m| m.column).into(),
        m.map(|m| m.row).into(),
        m.map(|m| kind_name(m.kind)).into(),
        m.map(|m| m.expected).into(),
        m.map(|m| m.actual).into(),
        seed.into(),
    ]);
    Ok(t)
}

fn mu_row(m: &MuEstimate, shift: Option<f64>) -> Vec<Cell> {
    vec![
        m.eps.into(),
        m.n.into(),
        m.margin.into(),
        m.replicas.into(),
        m.admissible.into(),
        m.admissible_fraction.into(),
        m.mu_hat.into(),
        m.stderr.into(),
        (if m.eps > 0.0 { Some((m.mu_hat - 1.0) / m.eps) } else { None }).into(),
        Cell::opt_float(shift),
        m.seed.into(),
    ]
}

fn mu_estimate(eps: f64, n: u64, margin: u64, replicas: u64, double: bool, seed: u64) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "eps",
        "n",
        "margin",
        "replicas",
        "admissible",
        "admissible_fraction",
        "mu_hat",
        "stderr",
        "slope",
        "shift",
        "seed",
    ]);
    let base = estimate_mu(eps, n, margin, replicas, seed)?;
    t.push(mu_row(&base, None));
    if double {
        let doubled = estimate_mu(eps, n, 2 * margin, replicas, seed)?;
        let shift = (doubled.mu_hat - base.mu_hat).abs();
        t.passed = shift == 0.0 || shift < 2.0 * base.stderr;
        t.push(mu_row(&doubled, Some(shift)));
    }
    Ok(t)
}

fn event_a_bound(
    k: usize,
    n: usize,
    eps: f64,
    samples: u64,
    pathwise: Option<u64>,
    max_attempts: u64,
    seed: u64,
) -> Result<Table, CliError> {
    let est = estimate_event_a_failure(k, n, eps, samples, seed)?;
    let path = pathwise.map(|target| event_a_pathwise_check(k, n, eps, target, max_attempts, seed)).transpose()?;
    let mut t = Table::new(&[
        "K",
        "n",
        "eps",
        "samples",
        "failures",
        "p_hat",
        "stderr",
        "bound",
        "within_4sigma",
        "pathwise_attempts",
        "pathwise_accepted",
        "pathwise_violations",
        "pathwise_max_gap",
        "seed",
    ]);
    t.passed = est.within_bound(4.0) && path.as_ref().is_none_or(|p| p.violations == 0 && Some(p.accepted) >= pathwise);
    t.push(vec![
        k.into(),
        n.into(),
        eps.into(),
        samples.into(),
        est.failures.into(),
        est.p_hat.into(),
        est.stderr.into(),
        est.bound.into(),
        est.within_bound(4.0).into(),
        path.as_ref().map(|p| p.attempts).into(),
        path.as_ref().map(|p| p.accepted).into(),
        path.as_ref().map(|p| p.violations).into(),
        path.as_ref().and_then(|p| p.max_gap).into(),
        seed.into(),
    ]);
    Ok(t)
}
