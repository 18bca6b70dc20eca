//! Command-line front end: device selection, policy generation, instance
//! synthesis, input validation, and the solver comparison campaign.
//!
//! Exit codes: 0 success, 2 invalid input, 3 infeasible workflow,
//! 4 search space above the brute-force cap.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use flowsel::bench::{
    default_planted_p, run_benchmark, summary_table, synthesize_instance, to_csv, BenchSpec,
    ModelStructure,
};
use flowsel::solvers::{
    AnnealingConfig, GeneticConfig, HillClimbingConfig, MutationKind, SolverConfig, SolverKind,
    DEFAULT_ANNEALING_STEPS, DEFAULT_BRUTE_FORCE_CAP, DEFAULT_CROSSOVER_RATE,
    DEFAULT_ELITISM_RATE, DEFAULT_GENERATIONS, DEFAULT_MAX_TEMPERATURE, DEFAULT_MIN_TEMPERATURE,
    DEFAULT_MUTATION_RATE, DEFAULT_TOURNAMENT_SIZE,
};
use flowsel::{
    check_feasible, filter_candidates, generate_policy, load_model, load_network, load_workflow,
    run_selection, serialize_policy, verify_least_privilege, Assignment, Error, Network, Result,
    Workflow,
};

#[derive(Parser)]
#[command(
    name = "flowsel",
    version,
    about = "Preference-optimal device selection for device-independent workflows, \
             with least-privilege network policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bind the most preferred capable device to every workflow function.
    Select(SelectArgs),
    /// Select devices (or take a fixed assignment) and write the ACL policy.
    Policy(PolicyArgs),
    /// Run the seeded solver comparison and report quality and cost.
    Bench(BenchArgs),
    /// Write a synthesized instance (registry, workflow, model) to disk.
    Synth(SynthArgs),
    /// Check input documents and their fit without running anything.
    Validate(ValidateArgs),
}

/// Solver tuning shared by every subcommand that searches.
#[derive(Args, Debug, Clone)]
struct TuningArgs {
    /// Refuse exhaustive search above this many assignments.
    #[arg(long, default_value_t = DEFAULT_BRUTE_FORCE_CAP)]
    brute_force_cap: u64,
    /// Independent hill-climbing starts; the best local optimum wins.
    #[arg(long, default_value_t = 1)]
    restarts: u32,
    #[arg(long, default_value_t = DEFAULT_ANNEALING_STEPS)]
    sa_steps: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_TEMPERATURE)]
    sa_max_temperature: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_TEMPERATURE)]
    sa_min_temperature: f64,
    #[arg(long, default_value_t = DEFAULT_GENERATIONS)]
    ga_generations: u32,
    /// Population size; defaults to 200 individuals per workflow function.
    #[arg(long)]
    ga_population: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_CROSSOVER_RATE)]
    ga_crossover_rate: f64,
    #[arg(long, default_value_t = DEFAULT_MUTATION_RATE)]
    ga_mutation_rate: f64,
    #[arg(long, default_value_t = DEFAULT_ELITISM_RATE)]
    ga_elitism_rate: f64,
    #[arg(long, default_value_t = DEFAULT_TOURNAMENT_SIZE)]
    ga_tournament_size: usize,
    /// Mutate each gene independently at rate/|F| instead of resampling one
    /// gene per mutated offspring.
    #[arg(long)]
    ga_per_gene_mutation: bool,
    /// Stop the genetic algorithm after this many generations without
    /// improvement.
    #[arg(long)]
    ga_stall_generations: Option<u32>,
}

impl TuningArgs {
    fn to_config(&self, seed: u64) -> SolverConfig {
        SolverConfig {
            seed,
            brute_force_cap: self.brute_force_cap,
            hill: HillClimbingConfig {
                restarts: self.restarts,
            },
            annealing: AnnealingConfig {
                steps: self.sa_steps,
                max_temperature: self.sa_max_temperature,
                min_temperature: self.sa_min_temperature,
            },
            genetic: GeneticConfig {
                generations: self.ga_generations,
                population: self.ga_population,
                crossover_rate: self.ga_crossover_rate,
                mutation_rate: self.ga_mutation_rate,
                elitism_rate: self.ga_elitism_rate,
                tournament_size: self.ga_tournament_size,
                mutation: if self.ga_per_gene_mutation {
                    MutationKind::PerGene
                } else {
                    MutationKind::PerOffspring
                },
                stall_generations: self.ga_stall_generations,
            },
        }
    }
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    registry: PathBuf,
    #[arg(long)]
    workflow: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "brute_force")]
    solver: SolverKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct PolicyArgs {
    #[arg(long)]
    registry: PathBuf,
    #[arg(long)]
    workflow: PathBuf,
    /// Preference model to optimize over; not needed with --assignment.
    #[arg(long, required_unless_present = "assignment", conflicts_with = "assignment")]
    model: Option<PathBuf>,
    /// Skip selection and use this JSON object mapping functions to devices.
    #[arg(long)]
    assignment: Option<PathBuf>,
    /// Where to write the policy document.
    #[arg(long, default_value = "policy.json")]
    out: PathBuf,
    /// Stamp the header with seconds since the Unix epoch. Off by default so
    /// identical inputs produce byte-identical files.
    #[arg(long)]
    stamp: bool,
    /// Also print the rules as a human-readable table.
    #[arg(long)]
    table: bool,
    #[arg(long, default_value = "brute_force")]
    solver: SolverKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Table,
    Csv,
}

#[derive(Args)]
struct BenchArgs {
    /// Workflow sizes to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = vec![4usize, 5, 6, 7])]
    f_counts: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    runs: u32,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "brute_force,hill_climbing,simulated_annealing,genetic_algorithm"
    )]
    solvers: Vec<SolverKind>,
    /// Base seed; every instance and solver stream derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 7)]
    alternatives: usize,
    /// Planted optimum scores as size=probability pairs, e.g. 4=0.34,7=0.24.
    #[arg(long, value_delimiter = ',', value_parser = parse_planted_p)]
    planted_p: Vec<(usize, f64)>,
    #[arg(long, default_value_t = 2)]
    min_caps: usize,
    #[arg(long, default_value_t = 7)]
    max_caps: usize,
    /// Dependency structure of synthesized models: chain or random-dag.
    #[arg(long, default_value = "chain")]
    model_structure: ModelStructure,
    /// Run cells one at a time for publication-grade wall times.
    #[arg(long)]
    serial: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Also write the full CSV to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of workflow functions.
    #[arg(long)]
    f_count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 7)]
    alternatives: usize,
    /// Planted optimum score; defaults to the benchmark value for this size.
    #[arg(long)]
    planted_p: Option<f64>,
    #[arg(long, default_value_t = 2)]
    min_caps: usize,
    #[arg(long, default_value_t = 7)]
    max_caps: usize,
    /// Dependency structure of the synthesized model: chain or random-dag.
    #[arg(long, default_value = "chain")]
    model_structure: ModelStructure,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
#[group(required = true, multiple = true)]
struct ValidateArgs {
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long)]
    workflow: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
}

fn parse_planted_p(s: &str) -> std::result::Result<(usize, f64), String> {
    let (count, p) = s
        .split_once('=')
        .ok_or_else(|| format!("expected size=probability, got {s:?}"))?;
    let count: usize = count
        .trim()
        .parse()
        .map_err(|e| format!("bad workflow size in {s:?}: {e}"))?;
    let p: f64 = p
        .trim()
        .parse()
        .map_err(|e| format!("bad probability in {s:?}: {e}"))?;
    Ok((count, p))
}

/// Scores are meaningful to the hit tolerance, so display them trimmed to
/// nine decimals rather than full float round-trip precision.
fn format_score(x: f64) -> String {
    let mut s = format!("{x:.9}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Infeasible { .. } => 3,
        Error::SearchSpaceExceeded { .. } => 4,
        _ => 2,
    }
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Select(args) => cmd_select(args),
        Command::Policy(args) => cmd_policy(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Validate(args) => cmd_validate(args),
    };
    if let Err(error) = outcome {
        eprintln!("error: {error}");
        std::process::exit(exit_code(&error));
    }
}

fn cmd_select(args: SelectArgs) -> Result<()> {
    let network = load_network(&args.registry)?;
    let workflow = load_workflow(&args.workflow)?;
    let model = load_model(&args.model)?;
    let config = args.tuning.to_config(args.seed);
    let result = run_selection(&network, &workflow, &model, args.solver, &config)?;
    let bindings: Vec<String> = workflow
        .functions()
        .iter()
        .map(|f| format!("{f}: {}", result.assignment[f]))
        .collect();
    println!("{}; score {}", bindings.join("; "), format_score(result.score));
    eprintln!(
        "{} evaluations in {:.6} s (seed {})",
        result.evaluations,
        result.wall_time.as_secs_f64(),
        result.seed
    );
    Ok(())
}

fn load_assignment(path: &Path) -> Result<Assignment> {
    Ok(serde_json::from_str(&read_file(path)?)?)
}

fn cmd_policy(args: PolicyArgs) -> Result<()> {
    let network = load_network(&args.registry)?;
    let workflow = load_workflow(&args.workflow)?;
    let assignment = match &args.assignment {
        Some(path) => load_assignment(path)?,
        None => {
            let model = load_model(args.model.as_ref().expect("clap enforces the pairing"))?;
            let config = args.tuning.to_config(args.seed);
            run_selection(&network, &workflow, &model, args.solver, &config)?.assignment
        }
    };
    let mut policy = generate_policy(&network, &workflow, &assignment)?;
    if args.stamp {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .expect("system clock before 1970")
            .as_secs();
        policy.header.generated_at = Some(now.to_string());
    }
    write_file(&args.out, &serialize_policy(&policy))?;
    let report = verify_least_privilege(&policy, &network, &workflow, &assignment)?;
    if args.table {
        for rule in &policy.rules {
            println!("{rule}");
        }
        println!("deny *");
    }
    println!(
        "{} allow rules + default deny -> {}; least-privilege {}",
        policy.rules.len(),
        args.out.display(),
        if report.pass() { "PASS" } else { "FAIL" }
    );
    if !report.pass() {
        eprintln!("{report:#?}");
        std::process::exit(1);
    }
    Ok(())
}

fn bench_spec(args: &BenchArgs) -> BenchSpec {
    let mut planted_p: BTreeMap<usize, f64> = args
        .f_counts
        .iter()
        .map(|&f| (f, default_planted_p(f)))
        .collect();
    planted_p.extend(args.planted_p.iter().copied());
    BenchSpec {
        function_counts: args.f_counts.clone(),
        alternatives_per_function: args.alternatives,
        planted_p,
        runs: args.runs,
        capabilities_per_device: (args.min_caps, args.max_caps),
        model_structure: args.model_structure,
        solvers: args.solvers.clone(),
        base_seed: args.seed,
        solver_template: args.tuning.to_config(0),
        parallel: !args.serial,
    }
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let spec = bench_spec(&args);
    let report = run_benchmark(&spec)?;
    for note in &report.skipped {
        eprintln!("skipped: {note}");
    }
    let csv = to_csv(&report.records);
    if let Some(path) = &args.out {
        write_file(path, &csv)?;
        eprintln!("wrote {} records to {}", report.records.len(), path.display());
    }
    match args.format {
        OutputFormat::Csv => print!("{csv}"),
        OutputFormat::Table => print!("{}", summary_table(&report.records)),
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let mut spec = BenchSpec {
        function_counts: vec![args.f_count],
        alternatives_per_function: args.alternatives,
        capabilities_per_device: (args.min_caps, args.max_caps),
        model_structure: args.model_structure,
        runs: 1,
        ..BenchSpec::default()
    };
    if let Some(p) = args.planted_p {
        spec.planted_p.insert(args.f_count, p);
    }
    let inst = synthesize_instance(&spec, args.f_count, args.seed)?;
    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let planted = serde_json::to_string_pretty(&inst.planted).expect("assignment serializes");
    for (name, contents) in [
        ("registry.json", inst.network.to_json_string()),
        ("workflow.json", inst.workflow.to_json_string()),
        ("model.json", inst.model.to_json_string()),
        ("planted_assignment.json", planted),
    ] {
        write_file(&dir.join(name), &(contents + "\n"))?;
    }
    println!(
        "wrote registry.json, workflow.json, model.json, planted_assignment.json to {}; \
         planted score {}",
        dir.display(),
        format_score(inst.planted_score)
    );
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<()> {
    let network: Option<Network> = match &args.registry {
        Some(path) => {
            let network = load_network(path)?;
            println!("registry OK: {} devices", network.devices().len());
            Some(network)
        }
        None => None,
    };
    let workflow: Option<Workflow> = match &args.workflow {
        Some(path) => {
            let workflow = load_workflow(path)?;
            println!(
                "workflow OK: {} functions, {} edges",
                workflow.functions().len(),
                workflow.edges().len()
            );
            Some(workflow)
        }
        None => None,
    };
    let model = match &args.model {
        Some(path) => {
            let model = load_model(path)?;
            println!("model OK: {} nodes", model.nodes.len());
            Some(model)
        }
        None => None,
    };
    if let (Some(network), Some(workflow)) = (&network, &workflow) {
        check_feasible(network, workflow)?;
        println!("fit OK: every function has at least one capable device");
        if let Some(model) = &model {
            let candidates = filter_candidates(network, workflow)?;
            for (function, list) in candidates.iter() {
                let node = model.node(function).ok_or_else(|| {
                    Error::ModelInstanceMismatch(format!("model has no node for {function:?}"))
                })?;
                for device in list {
                    if !node.values.contains(device) {
                        return Err(Error::ModelInstanceMismatch(format!(
                            "candidate {device:?} for {function:?} is not in the model's domain"
                        )));
                    }
                }
            }
            println!("coverage OK: the model scores every candidate assignment");
        }
    }
    Ok(())
}
