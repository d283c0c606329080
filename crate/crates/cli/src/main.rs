mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use targetridge::diagnostics::full_report;
use targetridge::estimation::{fit_penalized_two_k, fit_penalized_with};
use targetridge::inference::{bootstrap, AlphaPolicy};
use targetridge::risk::{mse, PlugIn};
use targetridge::selection::{select_k, Criterion};
use targetridge::simulation::{run_simulation, CaseLabel, SimulationConfig};
use targetridge::stability::{stability_analysis, PerturbationDistribution, StabilityOptions};
use targetridge::tracegrid::compute_trace;
use targetridge::{
    compute_alpha, load_dataset, Dataset, Error, KGrid, PenaltyConfig, SigmaConvention,
};

use output::{Cell, Table};

#[derive(Parser, Debug)]
#[command(name = "targetridge", version, about = "Penalized regression toward simple-regression slopes")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// CSV file with a header row; the bundled US credit data when omitted.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Label of the dependent variable.
    #[arg(long, global = true, default_value = "D")]
    dependent: String,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "TARGETRIDGE_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SigmaArg {
    /// Divisor n − p.
    ResidualDf,
    /// Divisor n.
    Observations,
}

impl From<SigmaArg> for SigmaConvention {
    fn from(s: SigmaArg) -> Self {
        match s {
            SigmaArg::ResidualDf => SigmaConvention::ResidualDf,
            SigmaArg::Observations => SigmaConvention::Observations,
        }
    }
}

fn grid_spec<S: Serializer>(g: &KGrid, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(g.spec())
}

fn opt_grid_spec<S: Serializer>(g: &Option<KGrid>, s: S) -> Result<S::Ok, S::Error> {
    match g {
        Some(g) => s.serialize_str(g.spec()),
        None => s.serialize_none(),
    }
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Fit one penalized model.
    Fit(FitArgs),
    /// Coefficients and diagnostics along a grid of k.
    Trace(TraceArgs),
    /// Multicollinearity diagnostics at one k.
    Diagnose(DiagnoseArgs),
    /// Choose k by a threshold or the MSE minimum.
    SelectK(SelectArgs),
    /// Bootstrap intervals for the coefficients and GoF.
    Bootstrap(BootstrapArgs),
    /// Coefficient change under 1% perturbations of the regressors.
    Stability(StabilityArgs),
    /// Monte Carlo comparison of OLS, ridge and penalized MSE.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Serialize)]
#[command(allow_negative_numbers = true)]
struct FitArgs {
    #[arg(long, default_value_t = 0.0, conflicts_with_all = ["k1", "k2"])]
    k: f64,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Weight of the least-squares term (with --k2).
    #[arg(long, requires = "k2")]
    k1: Option<f64>,
    /// Weight of the target term (with --k1).
    #[arg(long, requires = "k1")]
    k2: Option<f64>,
    /// σ² divisor for standard errors and MSE.
    #[arg(long, value_enum, default_value_t = SigmaArg::ResidualDf)]
    sigma: SigmaArg,
}

#[derive(Args, Debug, Serialize)]
#[command(allow_negative_numbers = true)]
struct TraceArgs {
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    #[arg(long, default_value = "0:1:0.01")]
    #[serde(serialize_with = "grid_spec")]
    grid: KGrid,
}

#[derive(Args, Debug, Serialize)]
#[command(allow_negative_numbers = true)]
struct DiagnoseArgs {
    #[arg(long, default_value_t = 0.0)]
    k: f64,
}

#[derive(Args, Debug, Serialize)]
#[command(allow_negative_numbers = true)]
struct SelectArgs {
    /// vif, cn, mse or distance.
    #[arg(long, default_value = "mse")]
    criterion: Criterion,
    /// Bound for the threshold criteria.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    #[arg(long, default_value = "0:1:0.01")]
    #[serde(serialize_with = "grid_spec")]
    grid: KGrid,
}

#[derive(Args, Debug, Serialize)]
#[command(allow_negative_numbers = true)]
struct BootstrapArgs {
    #[arg(long, default_value_t = 0.0)]
    k: f64,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Number of resamples.
    #[arg(long, default_value_t = 10_000)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// fixed or recompute.
    #[arg(long, default_value = "fixed")]
    alpha_policy: AlphaPolicy,
    /// Also write every resampled statistic to this CSV file.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[command(allow_negative_numbers = true)]
struct StabilityArgs {
    #[arg(long, default_value_t = 0.0, conflicts_with = "grid")]
    k: f64,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Evaluate every k of this grid instead of a single k.
    #[arg(long)]
    #[serde(serialize_with = "opt_grid_spec")]
    grid: Option<KGrid>,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// fixed or recompute.
    #[arg(long, default_value = "recompute")]
    alpha_policy: AlphaPolicy,
    /// uniform or normal.
    #[arg(long, default_value = "uniform")]
    distribution: PerturbationDistribution,
    /// Also write every per-iteration percent change to this CSV file.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[command(allow_negative_numbers = true)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1440)]
    replications: usize,
    #[arg(long, default_value_t = 1.0)]
    grid_stop: f64,
    #[arg(long, default_value_t = 0.01)]
    grid_step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// JSON document plus its tabular view.
struct Output {
    result: Value,
    table: Table,
    /// Replaces `table` for `--format csv`.
    csv: Option<Vec<u8>>,
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Write { path: Option<PathBuf>, source: io::Error },
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn kind(&self) -> &'static str {
        match self {
            Failure::Lib(e) => e.kind(),
            Failure::Write { .. } => "io",
            Failure::Usage(_) => "usage",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Write { path: Some(p), source } => format!("cannot write {}: {source}", p.display()),
            Failure::Write { path: None, source } => format!("cannot write output: {source}"),
            Failure::Usage(m) => m.clone(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind() {
            "usage" => 2,
            "io" => 3,
            "input" => 4,
            "degenerate_column" => 5,
            "dimension" => 6,
            "numerical" => 7,
            "parameter" => 8,
            _ => 1,
        }
    }
}

fn write_err(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |source| Failure::Write { path: Some(path.to_path_buf()), source }
}

fn load(common: &Common) -> Result<Dataset, Failure> {
    match &common.data {
        Some(path) => Ok(load_dataset(path, &common.dependent)?),
        None if common.dependent == "D" => Ok(Dataset::us_credit()),
        None => Ok(Dataset::from_csv_str(targetridge::data::US_CREDIT_CSV, &common.dependent)?),
    }
}

fn names_of(data: &Dataset) -> Vec<String> {
    data.names().to_vec()
}

fn run_fit(data: &Dataset, a: &FitArgs) -> Result<Output, Failure> {
    let alpha = compute_alpha(data)?;
    let sigma = SigmaConvention::from(a.sigma);
    let fit = match (a.k1, a.k2) {
        (Some(k1), Some(k2)) => fit_penalized_two_k(data, &alpha, k1, k2, a.h)?,
        _ => fit_penalized_with(data, &alpha, PenaltyConfig::new(a.k, a.h)?, sigma)?,
    };
    let plug = PlugIn::ols(data, sigma)?;
    let risk = mse(data, &alpha, fit.config, plug.beta.view(), plug.sigma2)?;
    let mut table = Table::new(["coefficient", "beta", "se", "alpha"]);
    for (j, name) in data.names().iter().enumerate() {
        table.push(vec![name.as_str().into(), fit.beta[j].into(), fit.se[j].into(), alpha.values()[j].into()]);
    }
    Ok(Output {
        result: json!({
            "names": names_of(data),
            "alpha": alpha,
            "fit": fit,
            "mse": risk,
        }),
        table,
        csv: None,
    })
}

fn run_trace(data: &Dataset, a: &TraceArgs) -> Result<Output, Failure> {
    let alpha = compute_alpha(data)?;
    let trace = compute_trace(data, &alpha, a.h, &a.grid)?;
    let p = data.p();
    let mut headers = vec!["k".to_string()];
    headers.extend((1..=p).map(|j| format!("beta_{j}")));
    headers.extend(["norm2", "gof", "mse", "max_vif", "cn", "alpha_dist"].map(String::from));
    let mut table = Table::new(headers);
    for r in &trace.rows {
        let mut row: Vec<Cell> = vec![r.k.into()];
        row.extend(r.beta.iter().map(|&b| Cell::from(b)));
        row.extend([r.norm2, r.gof, r.mse, r.max_vif, r.cn].map(Cell::from));
        row.push(r.alpha_dist.into());
        table.push(row);
    }
    let mut csv = Vec::new();
    trace.write_csv(&mut csv)?;
    Ok(Output {
        result: serde_json::to_value(&trace).expect("trace serializes"),
        table,
        csv: Some(csv),
    })
}

fn run_diagnose(data: &Dataset, a: &DiagnoseArgs) -> Result<Output, Failure> {
    let rep = full_report(data, a.k)?;
    let mut table = Table::new(["regressor", "cv", "low_cv", "vif", "high_vif"]);
    for (j, name) in rep.regressors.iter().enumerate() {
        table.push(vec![
            name.as_str().into(),
            rep.cv[j].into(),
            rep.verdicts.low_cv[j].into(),
            rep.vif[j].into(),
            rep.verdicts.high_vif[j].into(),
        ]);
    }
    table.push(vec!["CN(k)".into(), Cell::Empty, Cell::Empty, rep.cn.into(), rep.verdicts.cn_above_30.into()]);
    table.push(vec!["det(R)".into(), Cell::Empty, Cell::Empty, rep.corr_det.into(), rep.verdicts.det_below.into()]);
    Ok(Output {
        result: serde_json::to_value(&rep).expect("report serializes"),
        table,
        csv: None,
    })
}

fn run_select(data: &Dataset, a: &SelectArgs) -> Result<Output, Failure> {
    let alpha = compute_alpha(data)?;
    let sel = select_k(data, &alpha, a.h, &a.grid, a.criterion, a.threshold)?;
    let mut table = Table::new(["criterion", "h", "threshold", "k_selected", "attained_value"]);
    table.push(vec![
        sel.criterion.to_string().into(),
        sel.h.into(),
        sel.threshold.into(),
        sel.k_selected.into(),
        sel.attained_value.into(),
    ]);
    Ok(Output {
        result: serde_json::to_value(&sel).expect("selection serializes"),
        table,
        csv: None,
    })
}

fn run_bootstrap(data: &Dataset, a: &BootstrapArgs) -> Result<Output, Failure> {
    let rep = bootstrap(data, a.alpha_policy, PenaltyConfig::new(a.k, a.h)?, a.m, a.seed)?;
    let mut table = Table::new([
        "statistic", "estimate", "theta_bar", "sigma_theta", "normal_lo", "normal_hi", "pct_lo", "pct_hi",
    ]);
    for s in &rep.summaries {
        table.push(vec![
            s.statistic.as_str().into(),
            s.estimate.into(),
            s.theta_bar.into(),
            s.sigma_theta.into(),
            s.interval_normal[0].into(),
            s.interval_normal[1].into(),
            s.interval_percentile[0].into(),
            s.interval_percentile[1].into(),
        ]);
    }
    if let Some(path) = &a.dump {
        let mut dump = Table::new(std::iter::once("resample".to_string()).chain(rep.summaries.iter().map(|s| s.statistic.clone())));
        for r in 0..rep.m {
            let mut row: Vec<Cell> = vec![r.into()];
            row.extend(rep.summaries.iter().map(|s| Cell::from(s.draws[r])));
            dump.push(row);
        }
        write_table_csv(&dump, path)?;
    }
    Ok(Output {
        result: serde_json::to_value(&rep).expect("bootstrap serializes"),
        table,
        csv: None,
    })
}

fn run_stability(data: &Dataset, a: &StabilityArgs) -> Result<Output, Failure> {
    let options = StabilityOptions {
        alpha_policy: a.alpha_policy,
        distribution: a.distribution,
    };
    let ks = match &a.grid {
        Some(g) => g.values().to_vec(),
        None => vec![a.k],
    };
    let reports = ks
        .iter()
        .map(|&k| stability_analysis(data, PenaltyConfig::new(k, a.h)?, a.iters, a.seed, options))
        .collect::<Result<Vec<_>, Error>>()?;
    let mut table = Table::new(["k", "h", "mean", "p025", "p975", "redraws"]);
    for r in &reports {
        table.push(vec![r.k.into(), r.h.into(), r.mean.into(), r.p025.into(), r.p975.into(), r.redraws.into()]);
    }
    if let Some(path) = &a.dump {
        let mut dump = Table::new(["k", "iteration", "percent_change"]);
        for r in &reports {
            for (i, v) in r.percent_changes.iter().enumerate() {
                dump.push(vec![r.k.into(), i.into(), (*v).into()]);
            }
        }
        write_table_csv(&dump, path)?;
    }
    let summaries: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "k": r.k, "h": r.h, "iterations": r.iterations, "seed": r.seed,
                "alpha_policy": r.alpha_policy, "distribution": r.distribution,
                "redraws": r.redraws, "mean": r.mean, "p025": r.p025, "p975": r.p975,
            })
        })
        .collect();
    let result = if a.grid.is_some() { json!({ "points": summaries }) } else { summaries[0].clone() };
    Ok(Output { result, table, csv: None })
}

fn run_simulate(a: &SimulateArgs) -> Result<Output, Failure> {
    let config = SimulationConfig {
        replications: a.replications,
        grid_stop: a.grid_stop,
        grid_step: a.grid_step,
        seed: a.seed,
    };
    let report = run_simulation(&config)?;
    let mut table = Table::new(["case", "count", "fraction", "fraction_resolved"]);
    for label in CaseLabel::ALL {
        let c = report.aggregate.cases.iter().find(|c| c.case == label).expect("every case summarized");
        table.push(vec![label.name().into(), c.count.into(), c.fraction.into(), c.fraction_resolved.into()]);
    }
    let mut records = Table::new([
        "replication", "p", "n", "xi", "sigma", "mse_ols", "mse_ridge_min", "k_ridge", "mse_pen_min", "k_pen",
        "min_cv", "max_vif", "cn", "case",
    ]);
    for r in &report.records {
        records.push(vec![
            r.replication.into(),
            r.p.into(),
            r.n.into(),
            r.xi.into(),
            r.sigma.into(),
            r.mse_ols.into(),
            r.mse_ridge_min.into(),
            r.k_ridge.into(),
            r.mse_pen_min.into(),
            r.k_pen.into(),
            r.min_cv.into(),
            r.max_vif.into(),
            r.cn.into(),
            r.case.name().into(),
        ]);
    }
    let mut csv = Vec::new();
    records.write_csv(&mut csv).map_err(Error::from)?;
    Ok(Output {
        result: serde_json::to_value(&report).expect("simulation serializes"),
        table,
        csv: Some(csv),
    })
}

fn write_table_csv(table: &Table, path: &Path) -> Result<(), Failure> {
    let file = File::create(path).map_err(write_err(path))?;
    table.write_csv(BufWriter::new(file)).map_err(|e| {
        if !e.is_io_error() {
            return Failure::Lib(Error::Csv(e));
        }
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Failure::Write { path: Some(path.to_path_buf()), source },
            _ => unreachable!("checked to be an I/O error"),
        }
    })
}

/// The resolved invocation, embedded in every JSON document.
fn command_spec(cli: &Cli) -> Value {
    let mut spec = serde_json::to_value(&cli.command).expect("command serializes");
    let obj = spec.as_object_mut().expect("tagged enum serializes to an object");
    let data = cli
        .common
        .data
        .as_ref()
        .map_or_else(|| "bundled:us_credit".to_string(), |p| p.display().to_string());
    obj.insert("data".into(), data.into());
    obj.insert("dependent".into(), cli.common.dependent.clone().into());
    obj.insert("format".into(), json!(cli.common.format));
    spec
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let out = match &cli.command {
        Command::Simulate(a) => run_simulate(a)?,
        other => {
            let data = load(&cli.common)?;
            match other {
                Command::Fit(a) => run_fit(&data, a)?,
                Command::Trace(a) => run_trace(&data, a)?,
                Command::Diagnose(a) => run_diagnose(&data, a)?,
                Command::SelectK(a) => run_select(&data, a)?,
                Command::Bootstrap(a) => run_bootstrap(&data, a)?,
                Command::Stability(a) => run_stability(&data, a)?,
                Command::Simulate(_) => unreachable!(),
            }
        }
    };

    let bytes = match cli.common.format {
        Format::Json => {
            let doc = json!({ "command": command_spec(cli), "result": out.result });
            let mut s = serde_json::to_string_pretty(&doc).expect("output serializes");
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => match out.csv {
            Some(csv) => csv,
            None => {
                let mut buf = Vec::new();
                out.table.write_csv(&mut buf).map_err(Error::from)?;
                buf
            }
        },
        Format::Table => out.table.render().into_bytes(),
    };
    match &cli.common.out {
        Some(path) => std::fs::write(path, &bytes).map_err(write_err(path)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(&bytes)
                .and_then(|()| stdout.flush())
                .map_err(|source| Failure::Write { path: None, source })
        }
    }
}

fn report(failure: &Failure) -> ExitCode {
    let body = json!({ "error": { "kind": failure.kind(), "message": failure.message() } });
    eprintln!("{body}");
    ExitCode::from(failure.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                e.exit();
            }
            let message = e.render().to_string();
            let first = message.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return report(&Failure::Usage(first.to_string()));
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}
