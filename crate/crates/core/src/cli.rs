//! Command-line front end: `sample`, `functions`, `run` and `analyze`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{self, format_real, PrecisionTable, StrategyKey};
use crate::benchmarks::Registry;
use crate::design::{self, DesignKind, SearchBox};
use crate::ego::EgoConfig;
use crate::error::{Error, Result};
use crate::runner::{self, ExperimentPlan};

#[derive(Debug, Parser)]
#[command(name = "smbo-lab", version, about = "Initial-design experiments for GP-based sequential model-based optimization")]
pub struct Cli {
    /// Log verbosity: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: log::LevelFilter,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a design in [0,1)^d (or a box) as CSV with header x1..xd.
    Sample(SampleArgs),
    /// Inspect the benchmark registry.
    Functions {
        #[command(subcommand)]
        action: FunctionsAction,
    },
    /// Execute an experiment plan, appending records to a JSON-lines store.
    ///
    /// The plan is a TOML document with the keys functions, dimensions,
    /// budgets, ratios, designs, design_replicates, algo_replicates,
    /// base_seed and parallelism. A manifest is written next to the store as
    /// OUT.manifest.json; rerunning skips jobs already in the store.
    Run(RunArgs),
    /// Compute metrics over a store and write CSV tables (and SVG heatmaps).
    Analyze {
        #[command(subcommand)]
        report: Report,
    },
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// uniform, lhs, halton, sobol (scrambled) or sobol-plain.
    #[arg(long, value_parser = parse_design)]
    pub design: DesignKind,
    /// Number of points.
    #[arg(long)]
    pub n: usize,
    /// Dimension (at most 32).
    #[arg(long)]
    pub d: usize,
    /// Seed for uniform, lhs and sobol.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scale to the cube [LO, HI]^d, e.g. `--box=-5:5`.
    #[arg(long = "box", value_parser = parse_box, allow_hyphen_values = true)]
    pub bounds: Option<(f64, f64)>,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum FunctionsAction {
    /// CSV of id, name, modality and optimum value.
    List,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Plan file (TOML).
    #[arg(long)]
    pub plan: PathBuf,
    /// Results store (JSON lines); created or resumed.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; overrides the plan's value.
    #[arg(long)]
    pub parallelism: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// JSON-lines store written by `run`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Report {
    /// medians.csv: f,d,n,k,design,runs,successes,excluded,median
    Medians(AnalyzeArgs),
    /// vbs.csv: f,d,n,vbs,winners (winners joined by ';')
    Vbs(AnalyzeArgs),
    /// relative.csv: f,d,n,k,design,relative,vbs_floored; relative_heatmap.{csv,svg}
    Relative {
        #[command(flatten)]
        io: AnalyzeArgs,
        /// Colour cap for the heatmap.
        #[arg(long, default_value_t = analysis::DEFAULT_CAP)]
        cap: f64,
    },
    /// counts.csv: k,design,wins; counts_heatmap.{csv,svg}
    Counts(AnalyzeArgs),
    /// summary.csv: f,d,n,k,design,successes,min,q1,median,q3,max
    Summary(AnalyzeArgs),
    /// restart.csv: f,d,n,median,half,quarter,half_favorable,quarter_favorable
    ///
    /// `half` is the 1-sqrt(1/2) percentile at budget n/2 and `quarter` the
    /// 1-(1/2)^(1/4) percentile at n/4.
    Restart {
        #[command(flatten)]
        io: AnalyzeArgs,
        /// Strategy as K:DESIGN, e.g. 0.1:lhs.
        #[arg(long, value_parser = parse_strategy)]
        strategy: StrategyKey,
    },
}

fn parse_design(s: &str) -> std::result::Result<DesignKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_strategy(s: &str) -> std::result::Result<StrategyKey, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_box(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound '{lo}'"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound '{hi}'"))?;
    if !(lo < hi) {
        return Err(format!("lower bound {lo} must be below upper bound {hi}"));
    }
    Ok((lo, hi))
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 runtime error, 2 usage error.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .try_init();
    match execute(&cli.command, &mut std::io::stdout().lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs a parsed command, writing stdout output to `out`.
pub fn execute(command: &Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Sample(a) => sample(a, out),
        Command::Functions { action: FunctionsAction::List } => list_functions(out),
        Command::Run(a) => run(a, out),
        Command::Analyze { report } => analyze(report),
    }
}

fn csv_to(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::Writer::from_writer(out)
}

fn sample(a: &SampleArgs, out: &mut dyn Write) -> Result<()> {
    let dm = design::sample(a.design.with_seed(a.seed), a.n, a.d)?;
    let rows: Vec<Vec<f64>> = match a.bounds {
        Some((lo, hi)) => design::scale_to_box(&dm, &SearchBox::cube(lo, hi, a.d)?)?,
        None => dm.rows().map(<[f64]>::to_vec).collect(),
    };
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record((1..=a.d).map(|j| format!("x{j}")))?;
        for row in &rows {
            w.write_record(row.iter().map(|v| format_real(*v)))?;
        }
        w.flush()?;
    }
    match &a.out {
        Some(path) => std::fs::write(path, &buf).map_err(|e| Error::at_path(path, e)),
        None => out.write_all(&buf).map_err(Error::from),
    }
}

fn list_functions(out: &mut dyn Write) -> Result<()> {
    let mut w = csv_to(out);
    w.write_record(["id", "name", "modality", "optimum_value"])?;
    for e in Registry::new().list_functions() {
        w.write_record([e.id.to_string(), e.name.to_string(), e.modality.to_string(), format_real(e.optimum_value)])?;
    }
    w.flush()?;
    Ok(())
}

fn run(a: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let mut plan = ExperimentPlan::load(&a.plan)?;
    if let Some(p) = a.parallelism {
        plan.parallelism = p;
    }
    let summary = runner::execute(&plan, &Registry::new(), &EgoConfig::default(), &a.out)?;
    writeln!(
        out,
        "{} jobs: {} run, {} already present",
        summary.jobs, summary.executed, summary.skipped
    )?;
    let mut w = csv_to(out);
    w.write_record(["n", "runs", "success", "surrogate_failure", "error", "success_fraction"])?;
    for (n, b) in &summary.by_budget {
        w.write_record([
            n.to_string(),
            b.total.to_string(),
            b.success.to_string(),
            b.surrogate_failure.to_string(),
            b.error.to_string(),
            b.success_fraction().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn load_table(path: &Path) -> Result<PrecisionTable> {
    let table = PrecisionTable::load(path)?;
    if table.is_empty() {
        return Err(Error::NoData(format!("{} contains no records", path.display())));
    }
    Ok(table)
}

fn open_csv(dir: &Path, name: &str) -> Result<csv::Writer<std::fs::File>> {
    let path = dir.join(name);
    let file = std::fs::File::create(&path).map_err(|e| Error::at_path(&path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), format_real)
}

fn optb(v: Option<bool>) -> String {
    v.map_or(String::new(), |b| b.to_string())
}

fn analyze(report: &Report) -> Result<()> {
    let io = match report {
        Report::Medians(io) | Report::Vbs(io) | Report::Counts(io) | Report::Summary(io) => io,
        Report::Relative { io, .. } | Report::Restart { io, .. } => io,
    };
    let table = load_table(&io.input)?;
    let dir = io.out.as_path();
    std::fs::create_dir_all(dir).map_err(|e| Error::at_path(dir, e))?;

    match report {
        Report::Medians(_) => {
            let mut w = open_csv(dir, "medians.csv")?;
            w.write_record(["f", "d", "n", "k", "design", "runs", "successes", "excluded", "median"])?;
            for (p, s, g) in table.groups() {
                let median = table.median_precision(p, s).ok();
                w.write_record([
                    p.f.to_string(),
                    p.d.to_string(),
                    p.n.to_string(),
                    s.k.to_string(),
                    s.design.to_string(),
                    g.runs.to_string(),
                    g.successes().to_string(),
                    g.excluded().to_string(),
                    opt(median),
                ])?;
            }
            w.flush()?;
        }
        Report::Vbs(_) => {
            let rows: Vec<_> = table.problems().filter_map(|p| table.vbs(p).ok().map(|v| (p, v))).collect();
            if rows.is_empty() {
                return Err(Error::NoData(format!(
                    "no problem in {} has a strategy with {} successful runs",
                    io.input.display(),
                    analysis::MIN_SUCCESSES
                )));
            }
            let mut w = open_csv(dir, "vbs.csv")?;
            w.write_record(["f", "d", "n", "vbs", "winners"])?;
            for (p, v) in rows {
                let winners: Vec<String> = v.winners.iter().map(|s| s.to_string()).collect();
                w.write_record([p.f.to_string(), p.d.to_string(), p.n.to_string(), format_real(v.value), winners.join(";")])?;
            }
            w.flush()?;
        }
        Report::Relative { cap, .. } => {
            let mut w = open_csv(dir, "relative.csv")?;
            w.write_record(["f", "d", "n", "k", "design", "relative", "vbs_floored"])?;
            for (p, s, _) in table.groups() {
                if let Ok(r) = table.relative_precision(p, s) {
                    w.write_record([
                        p.f.to_string(),
                        p.d.to_string(),
                        p.n.to_string(),
                        s.k.to_string(),
                        s.design.to_string(),
                        format_real(r.value),
                        r.floored.to_string(),
                    ])?;
                }
            }
            w.flush()?;
            let title = format!("Median relative target precision (capped at {cap})");
            analysis::emit_heatmap(&table.relative_heatmap(), &title, *cap, dir, "relative_heatmap")?;
        }
        Report::Counts(_) => {
            let mut w = open_csv(dir, "counts.csv")?;
            w.write_record(["k", "design", "wins"])?;
            for (s, c) in table.vbs_counts() {
                w.write_record([s.k.to_string(), s.design.to_string(), c.to_string()])?;
            }
            w.flush()?;
            let title = "Problems won per strategy (ties credited to all winners)";
            analysis::emit_heatmap(&table.counts_heatmap(), title, f64::INFINITY, dir, "counts_heatmap")?;
        }
        Report::Summary(_) => {
            let mut w = open_csv(dir, "summary.csv")?;
            w.write_record(["f", "d", "n", "k", "design", "successes", "min", "q1", "median", "q3", "max"])?;
            for p in table.problems() {
                for (s, five) in table.distribution_summary(p) {
                    let g = table.group(p, s)?;
                    w.write_record([
                        p.f.to_string(),
                        p.d.to_string(),
                        p.n.to_string(),
                        s.k.to_string(),
                        s.design.to_string(),
                        g.successes().to_string(),
                        format_real(five.min),
                        format_real(five.q1),
                        format_real(five.median),
                        format_real(five.q3),
                        format_real(five.max),
                    ])?;
                }
            }
            w.flush()?;
        }
        Report::Restart { strategy, .. } => {
            let rows = table.restart_table(*strategy);
            if rows.is_empty() {
                return Err(Error::NoData(format!("strategy {strategy} does not occur in {}", io.input.display())));
            }
            let mut w = open_csv(dir, "restart.csv")?;
            w.write_record(["f", "d", "n", "median", "half", "quarter", "half_favorable", "quarter_favorable"])?;
            for r in rows {
                w.write_record([
                    r.f.to_string(),
                    r.d.to_string(),
                    r.n.to_string(),
                    opt(r.median),
                    opt(r.half),
                    opt(r.quarter),
                    optb(r.half_favorable),
                    optb(r.quarter_favorable),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
