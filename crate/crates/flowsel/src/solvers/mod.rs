//! Assignment search: find the device binding a preference model scores
//! highest.
//!
//! Four strategies over the same search space (one gene per workflow
//! function, ranging over that function's candidate devices):
//!
//! * brute force — exact, cost is the full product of candidate counts;
//! * hill climbing — steepest ascent over single-device changes;
//! * simulated annealing — Metropolis acceptance under a geometric
//!   temperature schedule;
//! * genetic — tournament selection, single-point crossover, elitism.
//!
//! All strategies are deterministic functions of `(instance, config, seed)`.
//! Reported `evaluations` count score computations, so the exact strategy
//! can be priced against the heuristics.

mod anneal;
mod brute;
mod eval;
mod genetic;
mod hill;

use std::time::{Duration, Instant};

use crate::device::Network;
use crate::error::{Error, Result};
use crate::preference::{Assignment, PreferenceModel};
use crate::workflow::Workflow;

pub(crate) use eval::{CompiledInstance, Evaluator};

/// Per-function candidate device lists, aligned with a function order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSets {
    functions: Vec<String>,
    lists: Vec<Vec<String>>,
}

impl CandidateSets {
    pub fn new(functions: Vec<String>, lists: Vec<Vec<String>>) -> Result<Self> {
        if functions.len() != lists.len() {
            return Err(Error::InvalidConfig(
                "candidate lists are not aligned with the function list".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for (f, list) in functions.iter().zip(&lists) {
            if f.is_empty() || !seen.insert(f.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "function name {f:?} is empty or repeated"
                )));
            }
            if list.is_empty() {
                return Err(Error::Infeasible {
                    functions: vec![f.clone()],
                });
            }
            let mut devs = std::collections::HashSet::new();
            for d in list {
                if d.is_empty() || !devs.insert(d.as_str()) {
                    return Err(Error::InvalidConfig(format!(
                        "candidate {d:?} for {f:?} is empty or repeated"
                    )));
                }
            }
        }
        Ok(CandidateSets { functions, lists })
    }

    pub fn functions(&self) -> &[String] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn list(&self, position: usize) -> &[String] {
        &self.lists[position]
    }

    pub fn list_for(&self, function: &str) -> Option<&[String]> {
        self.functions
            .iter()
            .position(|f| f == function)
            .map(|i| self.lists[i].as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<String>)> {
        self.functions.iter().zip(self.lists.iter())
    }

    /// Number of complete assignments: the product of candidate counts.
    pub fn space_size(&self) -> u128 {
        self.lists.iter().map(|l| l.len() as u128).product()
    }
}

/// Keeps, per workflow function, the devices capable of it (registry order).
/// Errors list every function left without a candidate.
pub fn filter_candidates(network: &Network, workflow: &Workflow) -> Result<CandidateSets> {
    let mut lists = Vec::with_capacity(workflow.functions().len());
    let mut uncovered = Vec::new();
    for f in workflow.functions() {
        let devices: Vec<String> = network
            .capable_devices(f)
            .into_iter()
            .map(|d| d.id.clone())
            .collect();
        if devices.is_empty() {
            uncovered.push(f.clone());
        }
        lists.push(devices);
    }
    if !uncovered.is_empty() {
        return Err(Error::Infeasible {
            functions: uncovered,
        });
    }
    CandidateSets::new(workflow.functions().to_vec(), lists)
}

/// Which strategy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    BruteForce,
    HillClimbing,
    SimulatedAnnealing,
    GeneticAlgorithm,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::BruteForce,
        SolverKind::HillClimbing,
        SolverKind::SimulatedAnnealing,
        SolverKind::GeneticAlgorithm,
    ];
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SolverKind::BruteForce => "brute_force",
            SolverKind::HillClimbing => "hill_climbing",
            SolverKind::SimulatedAnnealing => "simulated_annealing",
            SolverKind::GeneticAlgorithm => "genetic_algorithm",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "brute_force" | "bf" | "brute" => Ok(SolverKind::BruteForce),
            "hill_climbing" | "hc" | "hill" => Ok(SolverKind::HillClimbing),
            "simulated_annealing" | "sa" | "annealing" => Ok(SolverKind::SimulatedAnnealing),
            "genetic_algorithm" | "ga" | "genetic" => Ok(SolverKind::GeneticAlgorithm),
            other => Err(format!(
                "unknown solver {other:?} (expected brute_force, hill_climbing, simulated_annealing or genetic_algorithm)"
            )),
        }
    }
}

/// Exhaustive search refuses spaces larger than this unless reconfigured.
pub const DEFAULT_BRUTE_FORCE_CAP: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct HillClimbingConfig {
    /// Independent seeded climbs; the best local optimum across them wins.
    pub restarts: u32,
}

impl Default for HillClimbingConfig {
    fn default() -> Self {
        HillClimbingConfig { restarts: 1 }
    }
}

pub const DEFAULT_ANNEALING_STEPS: u64 = 200_000;
pub const DEFAULT_MAX_TEMPERATURE: f64 = 0.2;
pub const DEFAULT_MIN_TEMPERATURE: f64 = 0.0001;

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealingConfig {
    pub steps: u64,
    pub max_temperature: f64,
    pub min_temperature: f64,
}

impl Default for AnnealingConfig {
    fn default() -> Self {
        AnnealingConfig {
            steps: DEFAULT_ANNEALING_STEPS,
            max_temperature: DEFAULT_MAX_TEMPERATURE,
            min_temperature: DEFAULT_MIN_TEMPERATURE,
        }
    }
}

pub const DEFAULT_GENERATIONS: u32 = 1000;
/// Default population is this many individuals per workflow function.
pub const POPULATION_PER_FUNCTION: usize = 200;
pub const DEFAULT_CROSSOVER_RATE: f64 = 0.7;
pub const DEFAULT_MUTATION_RATE: f64 = 0.2;
pub const DEFAULT_ELITISM_RATE: f64 = 0.1;
pub const DEFAULT_TOURNAMENT_SIZE: usize = 3;

/// How the mutation rate is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationKind {
    /// Each offspring mutates with the configured probability; a mutated
    /// offspring has exactly one uniformly chosen gene resampled.
    PerOffspring,
    /// Every gene of every offspring independently resamples with
    /// probability `rate / |F|`.
    PerGene,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneticConfig {
    pub generations: u32,
    /// `None` sizes the population as `|F| * POPULATION_PER_FUNCTION`.
    pub population: Option<usize>,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elitism_rate: f64,
    pub tournament_size: usize,
    pub mutation: MutationKind,
    /// Stop early after this many generations without improvement.
    pub stall_generations: Option<u32>,
}

impl Default for GeneticConfig {
    fn default() -> Self {
        GeneticConfig {
            generations: DEFAULT_GENERATIONS,
            population: None,
            crossover_rate: DEFAULT_CROSSOVER_RATE,
            mutation_rate: DEFAULT_MUTATION_RATE,
            elitism_rate: DEFAULT_ELITISM_RATE,
            tournament_size: DEFAULT_TOURNAMENT_SIZE,
            mutation: MutationKind::PerOffspring,
            stall_generations: None,
        }
    }
}

/// Everything the solvers can be tuned with, plus the run seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub seed: u64,
    pub brute_force_cap: u64,
    pub hill: HillClimbingConfig,
    pub annealing: AnnealingConfig,
    pub genetic: GeneticConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            brute_force_cap: DEFAULT_BRUTE_FORCE_CAP,
            hill: HillClimbingConfig::default(),
            annealing: AnnealingConfig::default(),
            genetic: GeneticConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn seeded(seed: u64) -> Self {
        SolverConfig {
            seed,
            ..SolverConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.brute_force_cap == 0 {
            return bad("brute-force cap must be positive".into());
        }
        if self.hill.restarts == 0 {
            return bad("hill climbing needs at least one start".into());
        }
        let a = &self.annealing;
        if a.steps == 0 {
            return bad("annealing needs at least one step".into());
        }
        if !(a.min_temperature > 0.0 && a.min_temperature <= a.max_temperature) {
            return bad(format!(
                "temperature schedule must satisfy 0 < min <= max, got {} .. {}",
                a.min_temperature, a.max_temperature
            ));
        }
        let g = &self.genetic;
        for (name, rate) in [
            ("crossover", g.crossover_rate),
            ("mutation", g.mutation_rate),
            ("elitism", g.elitism_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) || !rate.is_finite() {
                return bad(format!("{name} rate {rate} is outside [0, 1]"));
            }
        }
        if g.tournament_size == 0 {
            return bad("tournament size must be positive".into());
        }
        if let Some(p) = g.population {
            if p < 2 {
                return bad(format!("population of {p} cannot breed"));
            }
        }
        Ok(())
    }
}

/// Outcome of one solver run. `score` is re-derived from the assignment on
/// construction, so it can never drift from what the model actually says.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub solver: SolverKind,
    pub assignment: Assignment,
    pub score: f64,
    pub evaluations: u64,
    pub wall_time: Duration,
    pub seed: u64,
}

fn finish(
    solver: SolverKind,
    inst: &CompiledInstance,
    genes: &[u16],
    score: f64,
    evaluations: u64,
    started: Instant,
    seed: u64,
) -> SolverResult {
    let check = inst.score_once(genes);
    assert!(
        check == score,
        "{solver} reported {score} for an assignment that scores {check}"
    );
    SolverResult {
        solver,
        assignment: inst.assignment(genes),
        score,
        evaluations,
        wall_time: started.elapsed(),
        seed,
    }
}

/// Exhaustive search. Exact; refuses spaces above `config.brute_force_cap`.
/// Ties break toward the first assignment in lexicographic order (function
/// order, then candidate order).
pub fn solve_brute_force(
    candidates: &CandidateSets,
    model: &PreferenceModel,
    config: &SolverConfig,
) -> Result<SolverResult> {
    config.validate()?;
    let started = Instant::now();
    let inst = CompiledInstance::compile(candidates, model)?;
    let (genes, score, evaluations) = brute::run(&inst, config.brute_force_cap)?;
    Ok(finish(
        SolverKind::BruteForce,
        &inst,
        &genes,
        score,
        evaluations,
        started,
        config.seed,
    ))
}

/// Steepest-ascent hill climbing from seeded random starts. Moves only to a
/// strictly better neighbor (one function changed), so it stops at the first
/// local optimum.
pub fn solve_hill_climbing(
    candidates: &CandidateSets,
    model: &PreferenceModel,
    config: &SolverConfig,
) -> Result<SolverResult> {
    config.validate()?;
    let started = Instant::now();
    let inst = CompiledInstance::compile(candidates, model)?;
    let (genes, score, evaluations) = hill::run(&inst, &config.hill, config.seed, &mut None);
    Ok(finish(
        SolverKind::HillClimbing,
        &inst,
        &genes,
        score,
        evaluations,
        started,
        config.seed,
    ))
}

/// Simulated annealing with single-device proposals and a geometric cooling
/// schedule. Returns the best assignment ever visited; performs exactly
/// `steps + 1` evaluations.
pub fn solve_simulated_annealing(
    candidates: &CandidateSets,
    model: &PreferenceModel,
    config: &SolverConfig,
) -> Result<SolverResult> {
    config.validate()?;
    let started = Instant::now();
    let inst = CompiledInstance::compile(candidates, model)?;
    let (genes, score, evaluations) = anneal::run(&inst, &config.annealing, config.seed, &mut None);
    Ok(finish(
        SolverKind::SimulatedAnnealing,
        &inst,
        &genes,
        score,
        evaluations,
        started,
        config.seed,
    ))
}

/// Generational genetic algorithm: elitism, tournament selection,
/// single-point crossover, and single-gene mutation. Returns the best
/// individual ever seen.
pub fn solve_genetic(
    candidates: &CandidateSets,
    model: &PreferenceModel,
    config: &SolverConfig,
) -> Result<SolverResult> {
    config.validate()?;
    let started = Instant::now();
    let inst = CompiledInstance::compile(candidates, model)?;
    let (genes, score, evaluations) = genetic::run(&inst, &config.genetic, config.seed, None, &mut None);
    Ok(finish(
        SolverKind::GeneticAlgorithm,
        &inst,
        &genes,
        score,
        evaluations,
        started,
        config.seed,
    ))
}

/// End-to-end selection: filter candidates, check the model covers them,
/// run the chosen solver, and hand back the winning assignment.
pub fn run_selection(
    network: &Network,
    workflow: &Workflow,
    model: &PreferenceModel,
    solver: SolverKind,
    config: &SolverConfig,
) -> Result<SolverResult> {
    let candidates = filter_candidates(network, workflow)?;
    let result = match solver {
        SolverKind::BruteForce => solve_brute_force(&candidates, model, config)?,
        SolverKind::HillClimbing => solve_hill_climbing(&candidates, model, config)?,
        SolverKind::SimulatedAnnealing => solve_simulated_annealing(&candidates, model, config)?,
        SolverKind::GeneticAlgorithm => solve_genetic(&candidates, model, config)?,
    };
    for (function, device) in &result.assignment {
        let capable = network
            .device(device)
            .map(|d| d.capabilities.iter().any(|c| c == function))
            .unwrap_or(false);
        assert!(capable, "solver bound {function:?} to incapable {device:?}");
    }
    Ok(result)
}
