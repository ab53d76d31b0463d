use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use boolanneal::chimera::{self, apply_embedding, validate_embedding, Embedding};
use boolanneal::harness::{self, emit, EmitFormat, ExperimentConfig, Report};
use boolanneal::ising::{self, CriteriaSpec, IsingModel};
use boolanneal::oracle::{self, CountReport, CriterionQuery, Predicate};
use boolanneal::postprocess::{self, DecodedRecord};
use boolanneal::sampler::{self, SampleSet, Solver};
use boolanneal::{Error, Execution, Schedule, Stage, TruthTable};

#[derive(Parser)]
#[command(name = "boolanneal", version, about = "Design cryptographic Boolean functions with annealing samplers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cryptographic profile of a truth table given in hex.
    Analyze {
        hex: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Exhaustive count or listing for n <= 4.
    Oracle {
        #[arg(long)]
        n: usize,
        /// any, bent, balanced, ci:M, resilient:M, resilient-exact:M, resilient-nl:M:T
        #[arg(long, default_value = "bent")]
        predicate: String,
        #[arg(long)]
        list: bool,
        #[arg(long)]
        json: bool,
    },
    /// Build a logical Ising model.
    Encode(EncodeArgs),
    /// Lower a logical model onto a Chimera embedding.
    Embed(EmbedArgs),
    /// Sample a model file.
    Sample(SampleArgs),
    /// Decode a sample file into truth tables, repairing broken chains.
    Decode(DecodeArgs),
    /// Sample the nonlinearity model and harvest bent functions by hill climbing.
    Search(SearchArgs),
    /// Run a preset or a config file.
    Experiment(ExperimentArgs),
    /// Re-emit a stored report.
    Emit {
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Criterion {
    Nonlinearity,
    Resiliency,
    Combined,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Bipartite,
    Clique,
    Composite,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Exact,
    Sa,
    Sqa,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Exact => Solver::Exact,
            SolverArg::Sa => Solver::Sa,
            SolverArg::Sqa => Solver::Sqa,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RepairArg {
    Majority,
    Expand,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

impl From<FormatArg> for EmitFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => EmitFormat::Csv,
            FormatArg::Json => EmitFormat::Json,
            FormatArg::Both => EmitFormat::Both,
        }
    }
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "nonlinearity")]
    criterion: Criterion,
    /// Nonlinearity coupler strength.
    #[arg(long, default_value_t = 0.05)]
    coupler_strength: f64,
    #[arg(long, default_value_t = 0.125)]
    resiliency_strength: f64,
    #[arg(long, default_value_t = 1)]
    order: usize,
    #[arg(long)]
    no_balancedness: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum)]
    scheme: Scheme,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    chain_strength: f64,
    /// Physical model output.
    #[arg(long)]
    out: PathBuf,
    /// Embedding output; defaults to `embedding.json` next to `--out`.
    #[arg(long)]
    embedding_out: Option<PathBuf>,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long, default_value_t = 1000)]
    reads: usize,
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ScheduleArgs {
    fn schedule(&self) -> Schedule {
        Schedule::default().with_reads(self.reads).with_sweeps(self.sweeps).with_seed(self.seed)
    }
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "sa")]
    solver: SolverArg,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    n: usize,
    /// Embedding of a physical run; omit for logical samples.
    #[arg(long)]
    embedding: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "majority")]
    repair: RepairArg,
    #[arg(long, default_value_t = 16)]
    expand_cap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write decoded records here instead of printing a function summary.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.25)]
    coupler_strength: f64,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Inclusive nonlinearity range `lo:hi` of readouts to refine.
    #[arg(long, value_parser = parse_range)]
    range: Option<(u32, u32)>,
    #[arg(long, default_value_t = 1000)]
    top: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Preset name, e.g. exp-bent-n4-sweep.
    preset: Option<String>,
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reads: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    chain_strength: Option<f64>,
    /// Comma-separated coupler strength sweep.
    #[arg(long)]
    coupler_strength: Option<String>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    #[arg(long, value_enum)]
    repair: Option<RepairArg>,
    #[arg(long, value_parser = parse_range)]
    range: Option<(u32, u32)>,
    #[arg(long)]
    top: Option<usize>,
    /// Persist intermediates and reports here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: u32 = lo.trim().parse().map_err(|_| format!("bad lower bound '{lo}'"))?;
    let hi: u32 = hi.trim().parse().map_err(|_| format!("bad upper bound '{hi}'"))?;
    if lo > hi {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn tagged<T>(stage: Stage, r: boolanneal::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| e.at(stage).into())
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn analyze(hex: &str, n: Option<usize>, json: bool) -> anyhow::Result<()> {
    let tt = tagged(Stage::Config, match n {
        Some(n) => TruthTable::from_hex(n, hex),
        None => TruthTable::parse_hex(hex),
    })?;
    let a = tt.analyze();
    if json {
        print_json(&a)
    } else {
        println!("{a}");
        println!("anf           {}", tt.anf());
        Ok(())
    }
}

fn run_oracle(n: usize, predicate: &str, list: bool, json: bool) -> anyhow::Result<()> {
    let predicate = tagged(Stage::Config, Predicate::parse(predicate))?;
    let query = CriterionQuery::new(n, predicate.clone());
    let result = tagged(Stage::Config, oracle::enumerate(&query, list))?;
    let report = CountReport::new(n, &predicate, result.count, oracle::reported_count(n, &predicate));
    if json {
        let functions: Option<Vec<String>> = result.functions.map(|fs| fs.iter().map(TruthTable::to_hex).collect());
        print_json(&serde_json::json!({ "report": report, "functions": functions }))
    } else {
        println!("{report}");
        for f in result.functions.iter().flatten() {
            println!("{f}");
        }
        Ok(())
    }
}

fn encode(args: &EncodeArgs) -> anyhow::Result<()> {
    let spec = match args.criterion {
        Criterion::Nonlinearity => CriteriaSpec::bent(args.n, args.coupler_strength),
        Criterion::Resiliency => CriteriaSpec {
            n: args.n,
            nonlinearity_strength: 0.0,
            resiliency_order: Some(args.order),
            resiliency_strength: args.resiliency_strength,
            include_balancedness: !args.no_balancedness,
        },
        Criterion::Combined => CriteriaSpec {
            n: args.n,
            nonlinearity_strength: args.coupler_strength,
            resiliency_order: Some(args.order),
            resiliency_strength: args.resiliency_strength,
            include_balancedness: !args.no_balancedness,
        },
    };
    let model = tagged(Stage::Encode, spec.build())?;
    match &args.out {
        Some(path) => {
            tagged(Stage::Persist, model.write_json(create(path)?))?;
            eprintln!("{} spins, {} couplers, hash {}", model.num_spins(), model.couplers().len(), model.content_hash());
        }
        None => tagged(Stage::Persist, model.write_json(io::stdout().lock()))?,
    }
    Ok(())
}

fn read_model(path: &Path) -> anyhow::Result<IsingModel> {
    tagged(Stage::Config, IsingModel::read_json(open(path)?))
}

fn read_embedding(path: &Path) -> anyhow::Result<Embedding> {
    tagged(Stage::Config, Embedding::read_json(open(path)?))
}

fn embed(args: &EmbedArgs) -> anyhow::Result<()> {
    let logical = read_model(&args.model)?;
    let embedding = tagged(Stage::Embed, match args.scheme {
        Scheme::Bipartite => chimera::embed_bipartite(args.n),
        Scheme::Clique => chimera::embed_clique(1 << args.n),
        Scheme::Composite => chimera::embed_composite(args.n),
    })?;
    let report = validate_embedding(&embedding, embedding.graph(), &logical);
    if !report.passed() {
        bail!(Error::Embedding(format!("{:?}", report.violations)).at(Stage::Embed));
    }
    let physical = tagged(Stage::Embed, apply_embedding(&logical, &embedding, args.chain_strength))?;
    let embedding_path = args.embedding_out.clone().unwrap_or_else(|| args.out.with_file_name("embedding.json"));
    tagged(Stage::Persist, embedding.write_json(create(&embedding_path)?))?;
    let reference = embedding_path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    tagged(Stage::Persist, physical.write_json(create(&args.out)?, &reference))?;
    eprintln!(
        "{} chains on {} of {} qubits, {} chain edges",
        embedding.chains().len(),
        embedding.num_qubits_used(),
        embedding.graph().num_qubits(),
        physical.chain_edge_count()
    );
    Ok(())
}

fn sample(args: &SampleArgs) -> anyhow::Result<()> {
    let model = read_model(&args.model)?;
    let schedule = args.schedule.schedule();
    let set = tagged(Stage::Sample, sampler::sample_with(&model, args.solver.into(), &schedule, Execution::Auto))?;
    match &args.out {
        Some(path) => tagged(Stage::Persist, set.write_jsonl(create(path)?))?,
        None => tagged(Stage::Persist, set.write_jsonl(io::stdout().lock()))?,
    }
    Ok(())
}

fn decode(args: &DecodeArgs) -> anyhow::Result<()> {
    let set = tagged(Stage::Config, SampleSet::read_jsonl(open(&args.samples)?))?;
    let mut functions: Vec<(TruthTable, usize)> = Vec::new();
    let mut records = Vec::new();
    match &args.embedding {
        None => {
            for r in tagged(Stage::Decode, postprocess::logical_readouts(&set, args.n))? {
                functions.push((r.function, r.multiplicity));
            }
        }
        Some(path) => {
            let embedding = read_embedding(path)?;
            let decoded = tagged(Stage::Decode, postprocess::decode_sample_set(&set, &embedding, args.seed, Execution::Auto))?;
            for d in &decoded {
                records.push(DecodedRecord::new(d, &set));
                let s = &set.samples[d.origin];
                let assignments = match args.repair {
                    RepairArg::Expand if d.broken_chains > 0 => tagged(
                        Stage::Decode,
                        postprocess::expand_broken_chains(&s.spins, &embedding, args.expand_cap, args.seed, d.origin),
                    )?,
                    _ => vec![d.spins.clone()],
                };
                for spins in assignments {
                    functions.push((tagged(Stage::Decode, ising::decode_function(&spins, args.n))?, s.multiplicity));
                }
            }
        }
    }
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        if records.is_empty() {
            for (f, m) in &functions {
                writeln!(w, "{}", serde_json::json!({ "function": f.to_hex(), "multiplicity": m }))?;
            }
        } else {
            for r in &records {
                writeln!(w, "{}", serde_json::to_string(r)?)?;
            }
        }
        w.flush()?;
    }
    let mut tally = std::collections::BTreeMap::<TruthTable, usize>::new();
    for (f, m) in functions {
        *tally.entry(f).or_default() += m;
    }
    let total: usize = tally.values().sum();
    let bent = tally.iter().filter(|(f, _)| f.walsh().is_bent().unwrap_or(false)).map(|(_, m)| m).sum::<usize>();
    println!("{total} readouts, {} distinct functions, {bent} bent readouts", tally.len());
    for (f, m) in &tally {
        println!("{f} nl={} x{m}", f.nonlinearity());
    }
    Ok(())
}

fn search(args: &SearchArgs) -> anyhow::Result<()> {
    let range = args.range.unwrap_or_else(|| {
        let half = 1u32 << (args.n - 1).min(31);
        (half.saturating_sub(1u32 << (args.n / 2)), half)
    });
    let outcome = tagged(
        Stage::Harvest,
        harness::search(args.n, args.coupler_strength, &args.schedule.schedule(), args.runs, range, args.top, Execution::Auto),
    )?;
    let hexes: Vec<String> = outcome.found.iter().map(TruthTable::to_hex).collect();
    if args.json {
        print_json(&serde_json::json!({
            "initial": outcome.initial.len(),
            "found": outcome.found.len(),
            "functions": hexes,
        }))
    } else {
        println!("bent before harvest: {}, after: {}", outcome.initial.len(), outcome.found.len());
        for h in hexes {
            println!("{h}");
        }
        Ok(())
    }
}

fn experiment(args: &ExperimentArgs) -> anyhow::Result<()> {
    let mut cfg = match (&args.preset, &args.config) {
        (Some(p), None) => tagged(Stage::Config, ExperimentConfig::preset(p))?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            tagged(Stage::Config, ExperimentConfig::parse_kv(&text))?
        }
        _ => bail!(Error::Config("give a preset name or --config".into()).at(Stage::Config)),
    };
    let mut set = |k: &str, v: String| tagged(Stage::Config, cfg.set(k, &v));
    if let Some(v) = args.seed {
        set("seed", v.to_string())?;
    }
    if let Some(v) = args.reads {
        set("reads", v.to_string())?;
    }
    if let Some(v) = args.sweeps {
        set("sweeps", v.to_string())?;
    }
    if let Some(v) = args.repetitions {
        set("repetitions", v.to_string())?;
    }
    if let Some(v) = args.chain_strength {
        set("chain_strength", v.to_string())?;
    }
    if let Some(v) = &args.coupler_strength {
        set("coupler_strengths", v.clone())?;
    }
    if let Some(v) = args.solver {
        set("solver", Solver::from(v).to_string())?;
    }
    if let Some(v) = args.repair {
        set("repair", match v { RepairArg::Majority => "majority", RepairArg::Expand => "expand" }.into())?;
    }
    if let Some((lo, hi)) = args.range {
        set("nl_ranges", format!("{lo}:{hi}"))?;
    }
    if let Some(v) = args.top {
        set("top_k", v.to_string())?;
    }
    if let Some(v) = &args.out {
        set("output_dir", v.display().to_string())?;
    }
    for kv in &args.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got '{kv}'")).at(Stage::Config))?;
        set(k.trim(), v.trim().to_string())?;
    }
    let report = harness::run_experiment(&cfg)?;
    if args.json {
        print!("{}", report.to_json());
    } else {
        print!("{report}");
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analyze { hex, n, json } => analyze(&hex, n, json),
        Command::Oracle { n, predicate, list, json } => run_oracle(n, &predicate, list, json),
        Command::Encode(a) => encode(&a),
        Command::Embed(a) => embed(&a),
        Command::Sample(a) => sample(&a),
        Command::Decode(a) => decode(&a),
        Command::Search(a) => search(&a),
        Command::Experiment(a) => experiment(&a),
        Command::Emit { report, format, out } => {
            let text = fs::read_to_string(&report).with_context(|| format!("cannot read {}", report.display()))?;
            let report = tagged(Stage::Config, Report::from_json(&text))?;
            for path in tagged(Stage::Persist, emit(&report, &out, format.into()))? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.downcast_ref::<Error>().and_then(Error::stage) == Some(Stage::Config);
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("25:27"), Ok((25, 27)));
        assert_eq!(parse_range(" 4 : 6 "), Ok((4, 6)));
        assert!(parse_range("27").is_err());
        assert!(parse_range("6:4").is_err());
        assert!(parse_range("a:4").is_err());
    }

    #[test]
    fn tagged_keeps_stage() {
        let e = tagged::<()>(Stage::Config, Err(Error::Hex("x".into()))).unwrap_err();
        assert_eq!(e.downcast_ref::<Error>().and_then(Error::stage), Some(Stage::Config));
        assert_eq!(e.to_string(), "[config] invalid hex truth table: x");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
