mod grid;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use codescale::io::{ingest, read_law, write_law, Cell, Table};
use codescale::mixture::crossover_dn;
use codescale::{
    asymptotic_limit, derive_arch, dominance_map, eval_slice, fit, numeric_optimal, optimal, optimal_dn_curve,
    plan_gpus, plan_sweep, score, Axis, Bracket, Error, Family, FitConfig, FlopConvention, GpuLimits, LawSet, LayerFit,
    Limit, Objective, ParamBasis, SliceAxis, SweepSpec, Winner, DEFAULT_VOCAB,
};

use crate::grid::Grid;
use crate::output::{Emitter, Format};

#[derive(Parser)]
#[command(
    name = "codescale",
    version,
    about = "Scaling-law fitting and planning for code pretraining"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a law to a run file and write it as a law file.
    Fit(FitArgs),
    /// Predict the loss of one (N, D) pair.
    Predict(PredictArgs),
    /// Per-row relative error of a law against a run file.
    Score(ScoreArgs),
    /// Compute-optimal allocation at one budget.
    Optimal(OptimalArgs),
    /// Compute-optimal allocations over a range of budgets.
    Frontier(FrontierArgs),
    /// Loss as N and D grow without bound.
    Limit(LimitArgs),
    /// Crossovers and dominance between laws at fixed N.
    Compare(CompareArgs),
    /// Plan a log-uniform (N, D) experiment grid.
    Sweep(SweepArgs),
    /// Transformer shape for a target parameter count.
    Arch(ArchArgs),
    /// Split a global batch across devices.
    Gpus(GpusArgs),
    /// Loss over an (N, D) grid.
    Surface(SurfaceArgs),
    /// Loss along a one-dimensional slice of the surface.
    Slice(SliceArgs),
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write output to a file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    HuberLog,
    Mre,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_parser = parse_family)]
    law: Family,
    #[arg(long)]
    input: PathBuf,
    /// Destination law file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::HuberLog)]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    starts: usize,
    #[arg(long, default_value_t = 1e-3)]
    huber_delta: f64,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    n: f64,
    #[arg(long)]
    d: f64,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    NonEmbedding,
    WithEmbedding,
}

#[derive(Args)]
struct ConventionArgs {
    #[arg(long, value_enum, default_value_t = BasisArg::NonEmbedding)]
    basis: BasisArg,
    #[arg(long, default_value_t = 6.0)]
    multiplier: f64,
    /// Vocabulary for the with-embedding basis.
    #[arg(long, default_value_t = DEFAULT_VOCAB)]
    vocab: u64,
    #[arg(long, default_value_t = 1e7)]
    n_min: f64,
    #[arg(long, default_value_t = 1e12)]
    n_max: f64,
    /// Coarse grid points for the numeric search.
    #[arg(long, default_value_t = 400)]
    search_points: usize,
    /// Always use the numeric search, even when a closed form exists.
    #[arg(long)]
    numeric: bool,
}

impl ConventionArgs {
    fn convention(&self) -> FlopConvention {
        FlopConvention {
            multiplier: self.multiplier,
            basis: match self.basis {
                BasisArg::NonEmbedding => ParamBasis::NonEmbedding,
                BasisArg::WithEmbedding => ParamBasis::WithEmbedding { vocab: self.vocab },
            },
        }
    }

    fn bracket(&self) -> Bracket {
        Bracket {
            n_min: self.n_min,
            n_max: self.n_max,
            points: self.search_points,
        }
    }
}

#[derive(Args)]
struct OptimalArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    compute: f64,
    #[command(flatten)]
    conv: ConventionArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FrontierArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    c_min: f64,
    #[arg(long)]
    c_max: f64,
    #[arg(long, default_value_t = 9)]
    points: usize,
    #[command(flatten)]
    conv: ConventionArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct LimitArgs {
    #[arg(long)]
    params: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Two or more law files.
    #[arg(long, num_args = 2.., required = true)]
    params: Vec<PathBuf>,
    /// Labels in the same order as --params (default: file stems).
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    labels: Vec<String>,
    /// Reference label (default: the first law).
    #[arg(long)]
    reference: Option<String>,
    /// Model sizes to compare at.
    #[arg(long, required = true)]
    fixed_n: Grid,
    #[arg(long)]
    dn_min: f64,
    #[arg(long)]
    dn_max: f64,
    /// Cells in the dominance rows.
    #[arg(long, default_value_t = 25)]
    dn_points: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// The nine canonical sizes with their own token ranges (117 points).
    #[arg(long, conflicts_with_all = ["n_values", "d_values", "dn_min", "dn_max"])]
    canonical: bool,
    #[arg(long, required_unless_present = "canonical")]
    n_values: Option<Grid>,
    /// Token grid, `log:MIN:MAX:COUNT` or a list.
    #[arg(long, required_unless_present = "canonical")]
    d_values: Option<Grid>,
    #[arg(long, default_value_t = 0.5)]
    dn_min: f64,
    #[arg(long, default_value_t = 650.0)]
    dn_max: f64,
    #[arg(long)]
    target_total: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ArchArgs {
    #[arg(long)]
    target: f64,
    /// Adjust the layer count of the nearest shape toward the target.
    #[arg(long)]
    rescale: bool,
    #[arg(long, default_value_t = DEFAULT_VOCAB)]
    vocab: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct GpusArgs {
    #[arg(long)]
    gbz: u64,
    #[arg(long)]
    mbz_max: u64,
    #[arg(long, default_value_t = 8)]
    gpu_step: u64,
    #[arg(long)]
    max_gpus: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SurfaceArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    n_grid: Grid,
    #[arg(long)]
    d_grid: Grid,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SliceKind {
    /// Fix N and sweep D/N ratios.
    FixedN,
    /// Fix D and sweep N.
    FixedD,
    /// Fix D/N and sweep N.
    FixedDn,
}

#[derive(Args)]
struct SliceArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long, value_enum)]
    axis: SliceKind,
    #[arg(long)]
    value: f64,
    #[arg(long)]
    grid: Grid,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("usage error");
            eprintln!("{line} (see --help)");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_class() as u8)
        }
    }
}

fn num(v: f64) -> Cell {
    Cell::Num(v)
}

fn run(command: Command) -> codescale::Result<()> {
    match command {
        Command::Fit(a) => {
            let runs = ingest(&a.input)?;
            let mut cfg = FitConfig::new(a.law);
            cfg.objective = match a.objective {
                ObjectiveArg::HuberLog => Objective::HuberLog,
                ObjectiveArg::Mre => Objective::MeanRelativeError,
            };
            cfg.seed = a.seed;
            cfg.n_starts = a.starts;
            cfg.huber_delta = a.huber_delta;
            let report = fit(&runs.records, &cfg)?;
            write_law(&report.law, &a.out)?;
            println!("mre_permille: {}", output::fmt(report.mre_permille));
            println!("objective: {}", output::fmt(report.objective_value));
            if let Some(s) = report.search {
                println!("starts_converged: {}/{}", s.starts_converged, s.n_starts);
                println!("best_start_index: {}", s.best_start_index);
            }
            println!("records: {}", runs.records.len());
            println!("law: {}", a.out.display());
            Ok(())
        }
        Command::Predict(a) => {
            let law = read_law(&a.params)?;
            println!("{}", output::fmt(law.eval(a.n, a.d)?));
            Ok(())
        }
        Command::Score(a) => {
            let law = read_law(&a.params)?;
            let runs = ingest(&a.input)?;
            let report = score(&law, &runs.records)?;
            let mut t = Table::new(["n", "d", "predicted", "actual", "re_permille"]);
            for r in &report.residuals {
                t.push(vec![
                    Cell::Int(r.n),
                    Cell::Int(r.d),
                    num(r.predicted),
                    num(r.actual),
                    num(r.re_permille),
                ])?;
            }
            let footer = vec![("mre_permille".to_string(), output::fmt(report.mre_permille))];
            Emitter::new(a.output.format, a.output.out).table_with_footer(&t, &footer)
        }
        Command::Optimal(a) => {
            let law = read_law(&a.params)?;
            let conv = a.conv.convention();
            let alloc = if a.conv.numeric {
                numeric_optimal(&law.law, a.compute, &conv, &a.conv.bracket())?
            } else {
                optimal(&law.law, a.compute, &conv, &a.conv.bracket())?
            };
            Emitter::new(a.output.format, a.output.out).record(&output::allocation_table(&[alloc])?)
        }
        Command::Frontier(a) => {
            let law = read_law(&a.params)?;
            let grid = codescale::search::log_space(a.c_min, a.c_max, a.points)?;
            let conv = a.conv.convention();
            let curve = if a.conv.numeric {
                grid.iter()
                    .map(|&c| numeric_optimal(&law.law, c, &conv, &a.conv.bracket()))
                    .collect::<codescale::Result<Vec<_>>>()?
            } else {
                optimal_dn_curve(&law.law, &grid, &conv, &a.conv.bracket())?
            };
            Emitter::new(a.output.format, a.output.out).table(&output::allocation_table(&curve)?)
        }
        Command::Limit(a) => {
            let law = read_law(&a.params)?;
            match asymptotic_limit(&law.law)? {
                Limit::Finite(v) => println!("{}", output::fmt(v)),
                Limit::Zero => println!("0"),
                Limit::Divergent => println!("divergent"),
            }
            Ok(())
        }
        Command::Compare(a) => compare(a),
        Command::Sweep(a) => {
            let spec = if a.canonical {
                let mut s = codescale::canonical_sweep();
                if a.target_total.is_some() {
                    s.target_total = a.target_total;
                }
                s
            } else {
                let mut s = SweepSpec::new(
                    Axis::Explicit(a.n_values.expect("required by clap").0),
                    Axis::Explicit(a.d_values.expect("required by clap").0),
                    (a.dn_min, a.dn_max),
                );
                s.target_total = a.target_total;
                s
            };
            let plan = plan_sweep(&spec)?;
            let mut t = Table::new(["n", "d", "dn_ratio"]);
            for p in &plan {
                t.push(vec![Cell::Int(p.n), Cell::Int(p.d), num(p.dn_ratio())])?;
            }
            let footer = vec![("points".to_string(), plan.len().to_string())];
            Emitter::new(a.output.format, a.output.out).table_with_footer(&t, &footer)
        }
        Command::Arch(a) => {
            let fit = if a.rescale {
                LayerFit::Rescale
            } else {
                LayerFit::Nearest
            };
            let arch = derive_arch(a.target, fit, a.vocab)?;
            let mut t = Table::new([
                "d_model",
                "d_ff",
                "n_head",
                "n_layer",
                "n_params",
                "n_with_emb",
                "vocab",
            ]);
            t.push(
                [
                    arch.d_model,
                    arch.d_ff,
                    arch.n_head,
                    arch.n_layer,
                    arch.n_params,
                    arch.n_with_emb,
                    arch.vocab,
                ]
                .into_iter()
                .map(Cell::Int)
                .collect(),
            )?;
            Emitter::new(a.output.format, a.output.out).record(&t)
        }
        Command::Gpus(a) => {
            let lim = GpuLimits {
                mbz_max: a.mbz_max,
                gpu_step: a.gpu_step,
                max_gpus: a.max_gpus,
            };
            let p = plan_gpus(a.gbz, &lim)?;
            let mut t = Table::new(["gbz", "gpus", "mbz", "accum"]);
            t.push(vec![
                Cell::Int(p.gbz),
                Cell::Int(p.gpus),
                Cell::Int(p.mbz),
                Cell::Int(p.accum),
            ])?;
            Emitter::new(a.output.format, a.output.out).record(&t)
        }
        Command::Surface(a) => {
            let law = read_law(&a.params)?;
            let mut t = Table::new(["n", "d", "loss"]);
            for &n in &a.n_grid.0 {
                for &d in &a.d_grid.0 {
                    t.push(vec![num(n), num(d), num(law.eval(n, d)?)])?;
                }
            }
            Emitter::new(a.output.format, a.output.out).table(&t)
        }
        Command::Slice(a) => {
            let law = read_law(&a.params)?;
            let axis = match a.axis {
                SliceKind::FixedN => SliceAxis::FixedN(a.value),
                SliceKind::FixedD => SliceAxis::FixedD(a.value),
                SliceKind::FixedDn => SliceAxis::FixedDn(a.value),
            };
            let points = eval_slice(&law.law, axis, &a.grid.0)?;
            let mut t = Table::new(["x", "n", "d", "loss"]);
            for p in points {
                t.push(vec![num(p.x), num(p.n), num(p.d), num(p.loss)])?;
            }
            Emitter::new(a.output.format, a.output.out).table(&t)
        }
    }
}

fn compare(a: CompareArgs) -> codescale::Result<()> {
    if !a.labels.is_empty() && a.labels.len() != a.params.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} law files",
            a.labels.len(),
            a.params.len()
        )));
    }
    let mut entries = Vec::new();
    for (i, path) in a.params.iter().enumerate() {
        let label = match a.labels.get(i) {
            Some(l) => l.clone(),
            None => path
                .file_stem()
                .map_or_else(|| format!("law{i}"), |s| s.to_string_lossy().into_owned()),
        };
        entries.push((label, read_law(path)?));
    }
    let reference = a.reference.unwrap_or_else(|| entries[0].0.clone());
    let set = LawSet::new(entries, reference)?;
    let dn_grid = codescale::search::log_space(a.dn_min, a.dn_max, a.dn_points)?;
    let report = dominance_map(&set, &a.fixed_n.0, &dn_grid, a.tol)?;

    let mut t = Table::new(["kind", "n", "dn_ratio", "label"]);
    for c in &report.crossovers {
        let label = format!("{}|{}", c.labels.0, c.labels.1);
        t.push(vec!["crossover".into(), num(c.n), num(c.dn), label.into()])?;
    }
    let e = set.entries();
    for &n in &report.n_grid {
        for i in 0..e.len() {
            for j in i + 1..e.len() {
                let scan = crossover_dn(&e[i].1, &e[j].1, n, (a.dn_min, a.dn_max), a.tol)?;
                let label = format!("{}|{}", e[i].0, e[j].0);
                for r in scan.touches {
                    t.push(vec!["touch".into(), num(n), num(r), label.clone().into()])?;
                }
                if scan.identical {
                    t.push(vec![
                        "identical".into(),
                        num(n),
                        Cell::Text(String::new()),
                        label.into(),
                    ])?;
                }
            }
        }
    }
    for (i, row) in report.winners.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            let label = match w {
                Winner::Label(l) => l.clone(),
                Winner::Tie => "tie".to_string(),
            };
            t.push(vec![
                "cell".into(),
                num(report.n_grid[i]),
                num(report.dn_grid[j]),
                label.into(),
            ])?;
        }
    }
    Emitter::new(a.output.format, a.output.out).table(&t)
}
