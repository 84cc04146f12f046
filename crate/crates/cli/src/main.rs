use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cbn_safety::analysis::{run_suite, AnalysisConfig, OutputFormat};
use cbn_safety::fault_tree::{
    birnbaum_fta, fault_tree_to_cbn, load_fault_tree, minimal_cut_sets, parse_fault_tree, rrw_fta, top_event_probability, FaultTree,
};
use cbn_safety::inference::{fit_cpts, forward_sample, marginal, Distribution, Evidence, SampleSet, DEFAULT_LAPLACE_ALPHA, SAMPLER_ALGORITHM};
use cbn_safety::intervention::{
    all_paths, check_path_identifiability, interventional_marginal, mutilate, path_specific_marginal, Intervention, InterventionSet, PathSet,
    Reference,
};
use cbn_safety::metrics::{pairwise_grid, path_metrics, tornado, tornado_csv, tornado_svg, MetricReport};
use cbn_safety::model::{load_network, parse_document, serialize_network, validate, CausalNetwork};
use cbn_safety::reproduce::{self, Group, Models};
use cbn_safety::Error;

const EXIT_MODEL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_ACCEPTANCE: u8 = 3;

/// Causal Bayesian network safety analysis.
#[derive(Parser)]
#[command(name = "cbnsafe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network (or, with --fault-tree, a fault tree) file.
    Validate {
        file: PathBuf,
        #[arg(long)]
        fault_tree: bool,
    },
    /// Posterior, interventional or path-specific distribution of one variable.
    Query(QueryArgs),
    /// Run the full metric suite described by an analysis config.
    Metrics(ReportArgs),
    /// Conditional vs interventional target probability per factor state.
    Tornado(ReportArgs),
    /// Pairwise intervention grid (RCE2) over the configured factors.
    Pairwise(ReportArgs),
    /// Path listing, identifiability and path-specific effects.
    Paths(ReportArgs),
    /// Fault tree operations.
    Ft {
        #[command(subcommand)]
        command: FtCommand,
    },
    /// Draw forward samples as CSV.
    Sample {
        model: PathBuf,
        #[arg(short = 'n', long, default_value_t = 10_000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Estimate CPTs for a network structure from CSV samples.
    Fit {
        /// Network whose structure and states are used; its CPTs are ignored.
        structure: PathBuf,
        data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_LAPLACE_ALPHA)]
        alpha: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Recompute the reference results and compare against tolerances.
    Reproduce {
        /// Restrict to one group of criteria.
        #[arg(long)]
        only: Option<Group>,
        /// Directory with model files to use instead of the bundled ones.
        #[arg(long)]
        models: Option<PathBuf>,
    },
}

#[derive(Args)]
struct QueryArgs {
    model: PathBuf,
    #[arg(short, long)]
    target: String,
    #[arg(short, long = "evidence", value_name = "VAR=STATE")]
    evidence: Vec<String>,
    #[arg(long = "do", value_name = "VAR=STATE")]
    interventions: Vec<String>,
    /// Path set, e.g. "A->B->Y; A->Y"; requires --active and --reference.
    #[arg(long)]
    paths: Option<String>,
    #[arg(long, requires = "paths")]
    active: Option<String>,
    #[arg(long, requires = "paths")]
    reference: Option<String>,
    #[arg(long, value_enum, default_value_t = TextFormat::Text)]
    format: TextFormat,
}

#[derive(Args)]
struct ReportArgs {
    config: PathBuf,
    /// Overrides the format named in the config.
    #[arg(long, value_enum)]
    format: Option<ReportFormat>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FtCommand {
    /// Top event probability.
    Eval { tree: PathBuf },
    /// Minimal cut sets.
    Cutsets { tree: PathBuf },
    /// Birnbaum and RRW importance of every basic event.
    Importance {
        tree: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
    },
    /// Equivalent causal network with deterministic gate CPTs.
    ToCbn {
        tree: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TextFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
    Svg,
}

impl From<OutputFormat> for ReportFormat {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Json => ReportFormat::Json,
            OutputFormat::Csv => ReportFormat::Csv,
            OutputFormat::Svg => ReportFormat::Svg,
        }
    }
}

/// Bad arguments or configuration; exits with the usage code.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let usage_error = err.downcast_ref::<Usage>().is_some() || matches!(err.downcast_ref::<Error>(), Some(Error::Config(_)));
            ExitCode::from(if usage_error { EXIT_USAGE } else { EXIT_MODEL })
        }
    }
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Validate { file, fault_tree } => cmd_validate(&file, fault_tree),
        Command::Query(args) => cmd_query(args).map(|_| ExitCode::SUCCESS),
        Command::Metrics(args) => cmd_metrics(args).map(|_| ExitCode::SUCCESS),
        Command::Tornado(args) => cmd_tornado(args).map(|_| ExitCode::SUCCESS),
        Command::Pairwise(args) => cmd_pairwise(args).map(|_| ExitCode::SUCCESS),
        Command::Paths(args) => cmd_paths(args).map(|_| ExitCode::SUCCESS),
        Command::Ft { command } => cmd_ft(command).map(|_| ExitCode::SUCCESS),
        Command::Sample { model, count, seed, output } => {
            let net = load_network(&model)?;
            let samples = forward_sample(&net, count, seed);
            let mut buf = Vec::new();
            samples.write_csv(&mut buf)?;
            emit(output.as_deref(), &String::from_utf8(buf)?)?;
            eprintln!("{count} samples, seed {seed}, {SAMPLER_ALGORITHM}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit {
            structure,
            data,
            alpha,
            output,
        } => {
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return Err(usage(format!("--alpha must be a non-negative number, got {alpha}")));
            }
            let net = load_network(&structure)?;
            let file = fs::File::open(&data).with_context(|| format!("reading {}", data.display()))?;
            let samples = SampleSet::read_csv(file, &net)?;
            let fitted = fit_cpts(&net, &samples, alpha)?;
            for row in &fitted.unsupported {
                eprintln!("warning: no samples for {} parent row {}; set uniform", row.variable, row.row);
            }
            let mut metadata = std::collections::BTreeMap::new();
            metadata.insert("fitted_from".to_string(), data.display().to_string());
            metadata.insert("laplace_alpha".to_string(), alpha.to_string());
            emit(output.as_deref(), &serialize_network(&fitted.network, metadata))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Reproduce { only, models } => cmd_reproduce(only, models.as_deref()),
    }
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_validate(file: &Path, fault_tree: bool) -> anyhow::Result<ExitCode> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    if fault_tree {
        let tree = parse_fault_tree(&text)?;
        println!(
            "ok: fault tree with {} basic events, {} gates, top `{}`",
            tree.events().len(),
            tree.gates().len(),
            tree.top_name()
        );
        return Ok(ExitCode::SUCCESS);
    }
    let doc = parse_document(&text)?;
    if doc.schema != cbn_safety::model::SCHEMA_VERSION {
        return Err(Error::UnsupportedSchema(doc.schema).into());
    }
    let report = validate(&doc.variables, &doc.cpts);
    if report.is_empty() {
        println!("ok: {} variables", doc.variables.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{report}");
        Ok(ExitCode::from(EXIT_MODEL))
    }
}

fn split_assignment(text: &str) -> anyhow::Result<(&str, &str)> {
    text.split_once('=')
        .map(|(v, s)| (v.trim(), s.trim()))
        .filter(|(v, s)| !v.is_empty() && !s.is_empty())
        .ok_or_else(|| usage(format!("expected VAR=STATE, got `{text}`")))
}

fn print_distribution(dist: &Distribution, format: TextFormat) {
    match format {
        TextFormat::Text => {
            for (s, p) in dist.states.iter().zip(&dist.probabilities) {
                println!("{}={s}\t{p}", dist.variable);
            }
        }
        TextFormat::Json => {
            let probs: serde_json::Map<_, _> = dist.states.iter().cloned().zip(dist.probabilities.iter().map(|&p| json!(p))).collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({ "variable": dist.variable, "probabilities": probs })).expect("json")
            );
        }
    }
}

fn cmd_query(args: QueryArgs) -> anyhow::Result<()> {
    let net = load_network(&args.model)?;
    let mut evidence = Evidence::new();
    for item in &args.evidence {
        let (v, s) = split_assignment(item)?;
        evidence.insert(v, s)?;
    }
    let mut set = InterventionSet::empty();
    for item in &args.interventions {
        let (v, s) = split_assignment(item)?;
        set.push(Intervention::hard(v, s))?;
    }
    let forced = set.iter().find(|i| i.variable == args.target).cloned();
    let dist = if let Some(forced) = forced {
        // P(X | do(X = x)) is the intervention's own distribution.
        if !evidence.is_empty() || args.paths.is_some() {
            return Err(usage(format!(
                "`{}` is intervened on; it cannot also be conditioned or path-split",
                args.target
            )));
        }
        mutilate(&net, &set)?;
        let v = net.index_of(&args.target)?;
        Distribution::new(&net, v, forced.row(&net)?)
    } else if let Some(paths) = &args.paths {
        if !evidence.is_empty() || !set.is_empty() {
            return Err(usage("--paths cannot be combined with --evidence or --do"));
        }
        let (Some(active), Some(reference)) = (&args.active, &args.reference) else {
            return Err(usage("--paths requires --active and --reference"));
        };
        let ps = PathSet::parse(paths).map_err(|e| usage(e.to_string()))?;
        path_specific_marginal(&net, &args.target, &ps, active, &Reference::State(reference.clone()))?
    } else if set.is_empty() {
        marginal(&net, &args.target, &evidence)?
    } else {
        interventional_marginal(&net, &args.target, &set, &evidence)?
    };
    print_distribution(&dist, args.format);
    Ok(())
}

/// Loads and checks an analysis config; every failure here is a usage error.
fn load_config(path: &Path) -> anyhow::Result<(AnalysisConfig, CausalNetwork)> {
    let config = AnalysisConfig::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let net = config.load_model().map_err(|e| usage(format!("model {}: {e}", config.model.display())))?;
    config.check(&net).map_err(|e| usage(e.to_string()))?;
    Ok((config, net))
}

fn report_format(args: &ReportArgs, config: &AnalysisConfig) -> ReportFormat {
    args.format.unwrap_or_else(|| config.format.into())
}

fn write_report(report: &MetricReport, format: ReportFormat, output: Option<&Path>) -> anyhow::Result<()> {
    let text = match format {
        ReportFormat::Json => report.to_json() + "\n",
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Svg => return Err(usage("svg output is only available for tornado")),
    };
    emit(output, &text)?;
    for e in &report.errors {
        eprintln!("warning: {e}");
    }
    Ok(())
}

fn cmd_metrics(args: ReportArgs) -> anyhow::Result<()> {
    let (config, net) = load_config(&args.config)?;
    let format = report_format(&args, &config);
    if format == ReportFormat::Svg {
        return Err(usage("svg output is only available for tornado"));
    }
    let report = run_suite(&net, &config)?;
    write_report(&report, format, args.output.as_deref())
}

fn cmd_tornado(args: ReportArgs) -> anyhow::Result<()> {
    let (config, net) = load_config(&args.config)?;
    let mut subjects = Vec::new();
    for var in config.references.keys() {
        let v = net.index_of(var)?;
        subjects.extend(net.variable(v).states.iter().map(|s| (var.clone(), s.clone())));
    }
    let rows = tornado(&net, &config.target, &subjects)?;
    let text = match report_format(&args, &config) {
        ReportFormat::Json => serde_json::to_string_pretty(&json!({ "target": config.target.to_string(), "rows": rows }))? + "\n",
        ReportFormat::Csv => tornado_csv(&rows),
        ReportFormat::Svg => tornado_svg(&rows, &format!("P({})", config.target)),
    };
    emit(args.output.as_deref(), &text)
}

fn cmd_pairwise(args: ReportArgs) -> anyhow::Result<()> {
    let (config, net) = load_config(&args.config)?;
    let mut report = MetricReport::new(&config.target);
    report.entries = pairwise_grid(&net, &config.target, &config.reference_assignments())?;
    write_report(&report, report_format(&args, &config), args.output.as_deref())
}

fn cmd_paths(args: ReportArgs) -> anyhow::Result<()> {
    let (config, net) = load_config(&args.config)?;
    let format = report_format(&args, &config);
    let mut report = MetricReport::new(&config.target);
    let mut listing = Vec::new();
    for text in &config.path_sets {
        let ps = PathSet::parse(text)?;
        let id = check_path_identifiability(&net, &ps)?;
        let every: Vec<String> = all_paths(&net, &ps.source, &ps.sink)?.iter().map(ToString::to_string).collect();
        listing.push(json!({
            "path_set": ps.to_string(),
            "all_paths": every,
            "identifiable": id.identifiable,
            "diagnostic": id.diagnostic,
        }));
        if !id.identifiable {
            report.errors.push(format!("paths {ps}: {}", id.diagnostic));
            continue;
        }
        let reference = &config.references[&ps.source];
        let v = net.index_of(&ps.source)?;
        for state in net.variable(v).states.iter().filter(|s| *s != reference) {
            let m = path_metrics(&net, &config.target, &ps, state, &Reference::State(reference.clone()))?;
            report.entries.extend([m.ape, m.rpe, m.ape_over_ace]);
        }
    }
    match format {
        ReportFormat::Json => {
            let value = json!({ "target": report.target, "path_sets": listing, "entries": report.entries, "errors": report.errors });
            emit(args.output.as_deref(), &(serde_json::to_string_pretty(&value)? + "\n"))
        }
        _ => write_report(&report, format, args.output.as_deref()),
    }
}

fn load_tree(path: &Path) -> anyhow::Result<FaultTree> {
    Ok(load_fault_tree(path)?)
}

fn cmd_ft(command: FtCommand) -> anyhow::Result<()> {
    match command {
        FtCommand::Eval { tree } => {
            let tree = load_tree(&tree)?;
            println!("P({})\t{}", tree.top_name(), top_event_probability(&tree));
        }
        FtCommand::Cutsets { tree } => {
            for set in minimal_cut_sets(&load_tree(&tree)?) {
                println!("{{{}}}", set.into_iter().collect::<Vec<_>>().join(", "));
            }
        }
        FtCommand::Importance { tree, format } => {
            let tree = load_tree(&tree)?;
            let mut report = MetricReport {
                target: tree.top_name().to_string(),
                ..Default::default()
            };
            for e in tree.events() {
                report.entries.push(birnbaum_fta(&tree, &e.name)?);
                report.entries.push(rrw_fta(&tree, &e.name)?);
            }
            write_report(&report, format, None)?;
        }
        FtCommand::ToCbn { tree, output } => {
            let tree = load_tree(&tree)?;
            let mut metadata = std::collections::BTreeMap::new();
            metadata.insert("converted_from".to_string(), format!("fault tree, top `{}`", tree.top_name()));
            emit(output.as_deref(), &serialize_network(&fault_tree_to_cbn(&tree), metadata))?;
        }
    }
    Ok(())
}

fn cmd_reproduce(only: Option<Group>, models: Option<&Path>) -> anyhow::Result<ExitCode> {
    let models = match models {
        Some(dir) => Models::load(dir).with_context(|| format!("loading models from {}", dir.display()))?,
        None => Models::bundled(),
    };
    let results = reproduce::run(&models, only);
    if results.is_empty() {
        return Err(anyhow!("no criteria selected"));
    }
    let mut failed = 0;
    for r in &results {
        println!("{}", r.summary());
        for c in r.failures() {
            println!("    {c}");
        }
        failed += usize::from(!r.passed());
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ACCEPTANCE)
    })
}
