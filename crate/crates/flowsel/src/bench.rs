//! Experiment harness: synthesizes planted selection instances and runs the
//! solver comparison across workflow sizes, reporting solution quality and
//! search cost per solver.
//!
//! An instance is synthesized from a seed alone, so every cell of the
//! comparison is reproducible: same spec, same seed, same numbers (wall time
//! aside). All solvers within one cell face the same instance; only their RNG
//! streams differ.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::Ipv4Addr;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::device::{Device, Direction, NetRequirement, Network, TransportProtocol};
use crate::error::{Error, Result};
use crate::preference::{
    chain_structure, plant_preference, random_dag_structure, score, Assignment, PreferenceModel,
};
use crate::solvers::{
    filter_candidates, solve_brute_force, solve_genetic, solve_hill_climbing,
    solve_simulated_annealing, SolverConfig, SolverKind,
};
use crate::workflow::Workflow;

pub const DEFAULT_FUNCTION_COUNTS: [usize; 4] = [4, 5, 6, 7];
pub const DEFAULT_ALTERNATIVES_PER_FUNCTION: usize = 7;
pub const DEFAULT_RUNS: u32 = 30;
pub const DEFAULT_CAPABILITIES_PER_DEVICE: (usize, usize) = (2, 7);

/// A reported best score counts as a hit when it is within this distance of
/// the planted optimum. Planted scores are products of at most a handful of
/// double-precision factors, so anything looser would hide real misses.
pub const HIT_TOLERANCE: f64 = 1e-9;

/// Target joint preference of the planted assignment per workflow size.
/// The benchmark sizes use fixed targets; any other size falls back to a
/// constant 0.75 per-function factor, which keeps the planted device dominant
/// in every row no matter how long the workflow gets.
pub fn default_planted_p(f_count: usize) -> f64 {
    match f_count {
        4 => 0.34,
        5 => 0.42,
        6 => 0.30,
        7 => 0.24,
        n => 0.75f64.powi(n as i32),
    }
}

/// Shape of the synthesized preference model's dependency graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelStructure {
    /// One edge per adjacent function pair, mirroring the workflow chain.
    #[default]
    Chain,
    /// Seeded random DAG; every node draws up to two earlier parents.
    RandomDag,
}

impl std::str::FromStr for ModelStructure {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "chain" => Ok(ModelStructure::Chain),
            "random-dag" => Ok(ModelStructure::RandomDag),
            other => Err(format!("unknown model structure {other:?}, expected chain or random-dag")),
        }
    }
}

/// Everything that defines one benchmark campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub function_counts: Vec<usize>,
    pub alternatives_per_function: usize,
    /// Overrides for the planted optimum's score, keyed by workflow size.
    /// Sizes not listed use `default_planted_p`.
    pub planted_p: BTreeMap<usize, f64>,
    pub runs: u32,
    /// Inclusive range of capabilities packed onto one synthesized device.
    pub capabilities_per_device: (usize, usize),
    /// Dependency structure of each synthesized preference model.
    pub model_structure: ModelStructure,
    pub solvers: Vec<SolverKind>,
    pub base_seed: u64,
    /// Tuning applied to every solver call; its seed field is replaced per
    /// cell and otherwise ignored.
    pub solver_template: SolverConfig,
    /// Run cells concurrently. Wall times are measured inside each cell, but
    /// scheduler noise still leaks in; disable for publication-grade timings.
    pub parallel: bool,
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec {
            function_counts: DEFAULT_FUNCTION_COUNTS.to_vec(),
            alternatives_per_function: DEFAULT_ALTERNATIVES_PER_FUNCTION,
            planted_p: DEFAULT_FUNCTION_COUNTS
                .iter()
                .map(|&f| (f, default_planted_p(f)))
                .collect(),
            runs: DEFAULT_RUNS,
            capabilities_per_device: DEFAULT_CAPABILITIES_PER_DEVICE,
            model_structure: ModelStructure::default(),
            solvers: SolverKind::ALL.to_vec(),
            base_seed: 0,
            solver_template: SolverConfig::default(),
            parallel: true,
        }
    }
}

impl BenchSpec {
    pub fn planted_p_for(&self, f_count: usize) -> f64 {
        self.planted_p
            .get(&f_count)
            .copied()
            .unwrap_or_else(|| default_planted_p(f_count))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidBenchSpec(msg));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.alternatives_per_function < 2 {
            return bad(format!(
                "{} alternatives per function leaves nothing to choose between",
                self.alternatives_per_function
            ));
        }
        if self.function_counts.is_empty() {
            return bad("no workflow sizes requested".into());
        }
        if self.solvers.is_empty() {
            return bad("no solvers requested".into());
        }
        for (i, s) in self.solvers.iter().enumerate() {
            if self.solvers[..i].contains(s) {
                return bad(format!("solver {s} requested twice"));
            }
        }
        let (lo, hi) = self.capabilities_per_device;
        if lo < 1 || hi < lo {
            return bad(format!("capability range {lo}..={hi} is empty"));
        }
        // The packer trims or grows the final part to dodge an undersized
        // remainder; that needs either a floor of 1 or one unit of headroom.
        if lo > 2 || (lo == 2 && hi == 2) {
            return bad(format!(
                "capability range {lo}..={hi} cannot tile every workflow size"
            ));
        }
        for &f_count in &self.function_counts {
            if f_count == 0 {
                return bad("workflow sizes must be at least 1".into());
            }
            let p = self.planted_p_for(f_count);
            if !(p > 0.0 && p < 1.0) {
                return bad(format!("planted score {p} for {f_count} functions is outside (0, 1)"));
            }
            // Planting needs the favored row entry above 1/2 so no
            // remainder share can outgrow it under either split mode.
            if p.powf(1.0 / f_count as f64) <= 0.5 {
                return bad(format!(
                    "planted score {p} is too small to dominate across {f_count} functions"
                ));
            }
        }
        self.solver_template.validate()
    }
}

/// One synthesized selection problem plus the assignment it was built around.
#[derive(Debug, Clone)]
pub struct SynthInstance {
    pub network: Network,
    pub workflow: Workflow,
    pub model: PreferenceModel,
    pub planted: Assignment,
    /// Joint preference of `planted`, recomputed from the finished model.
    pub planted_score: f64,
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a salt into a seed. Used to derive per-instance and per-solver
/// streams from the campaign's base seed.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    splitmix64(seed ^ splitmix64(salt))
}

fn device_address(index: usize) -> Result<Ipv4Addr> {
    if index >= 240 * 250 {
        return Err(Error::InvalidBenchSpec(format!(
            "cannot address synthesized device {index}"
        )));
    }
    Ok(Ipv4Addr::new(10, 0, (index / 240) as u8, (1 + index % 240) as u8))
}

fn external_address(index: usize) -> Ipv4Addr {
    Ipv4Addr::new(52, 0, (index / 240) as u8, (1 + index % 240) as u8)
}

/// Every function listens on its own port, so no two trigger rules of one
/// policy can collapse into each other.
fn trigger_port(position: usize) -> u16 {
    8000 + position as u16
}

/// Splits `total` capability slots into consecutive runs of `lo..=hi`.
fn partition(total: usize, lo: usize, hi: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut parts = Vec::new();
    let mut remaining = total;
    while remaining > 0 {
        let cap = hi.min(remaining);
        let floor = lo.min(remaining);
        let mut size = rng.gen_range(floor..=cap);
        let left = remaining - size;
        if left > 0 && left < lo {
            // A leftover below the floor cannot become a part of its own.
            if size + left <= cap {
                size += left;
            } else {
                size -= lo - left;
            }
        }
        parts.push(size);
        remaining -= size;
    }
    parts
}

/// Builds a network, chain workflow, and planted preference model for
/// `f_count` functions, all from one seed.
///
/// Layout: the candidate pool is built in ranks. Each rank partitions the
/// function list into consecutive runs and creates one device per run, so
/// every function ends up with exactly `alternatives_per_function` capable
/// devices while each device carries between 2 and 7 capabilities (clamped by
/// the workflow size). Each device declares one inbound trigger per
/// capability and, with probability 1/2, an outbound flow to a distinct
/// external endpoint.
///
/// The planted assignment changes rank between neighboring functions.
/// Devices never span ranks, so neighbors always land on distinct devices
/// and every workflow edge costs exactly one trigger rule in the policy.
pub fn synthesize_instance(spec: &BenchSpec, f_count: usize, seed: u64) -> Result<SynthInstance> {
    spec.validate()?;
    if f_count == 0 {
        return Err(Error::InvalidBenchSpec("workflow sizes must be at least 1".into()));
    }
    let functions: Vec<String> = (1..=f_count).map(|i| format!("f{i}")).collect();
    let workflow = Workflow::chain(Some(format!("bench-{f_count}f-{seed:016x}")), functions.clone())?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = spec.capabilities_per_device;
    let ranks = spec.alternatives_per_function;
    let mut devices: Vec<Device> = Vec::new();
    // Per rank, the device index serving each function position.
    let mut device_at: Vec<Vec<usize>> = Vec::with_capacity(ranks);
    let mut endpoints = 0usize;
    for rank in 0..ranks {
        let mut per_function = vec![0usize; f_count];
        let mut start = 0;
        for size in partition(f_count, lo.min(f_count), hi.min(f_count), &mut rng) {
            let index = devices.len();
            let capabilities: Vec<String> = functions[start..start + size].to_vec();
            let mut net_requirements = BTreeMap::new();
            for (offset, capability) in capabilities.iter().enumerate() {
                let mut requirements = vec![NetRequirement {
                    direction: Direction::InboundTrigger,
                    dest_port: trigger_port(start + offset),
                    tp_proto: if rng.gen_bool(0.5) {
                        TransportProtocol::Tcp
                    } else {
                        TransportProtocol::Udp
                    },
                    external_endpoint: None,
                }];
                if rng.gen_bool(0.5) {
                    requirements.push(NetRequirement {
                        direction: Direction::Outbound,
                        dest_port: 443,
                        tp_proto: TransportProtocol::Tcp,
                        external_endpoint: Some(external_address(endpoints)),
                    });
                    endpoints += 1;
                }
                net_requirements.insert(capability.clone(), requirements);
            }
            devices.push(Device {
                id: format!("dev{index:03}"),
                address: device_address(index)?,
                attributes: BTreeMap::from([(
                    "vendor".to_string(),
                    serde_json::Value::String(format!("vendor_{rank}")),
                )]),
                capabilities,
                net_requirements,
            });
            for position in start..start + size {
                per_function[position] = index;
            }
            start += size;
        }
        device_at.push(per_function);
    }
    let network = Network::new(devices)?;

    let mut planted = Assignment::new();
    let mut prev_rank = 0usize;
    for (position, function) in functions.iter().enumerate() {
        let rank = if position == 0 || ranks == 1 {
            rng.gen_range(0..ranks)
        } else {
            let draw = rng.gen_range(0..ranks - 1);
            if draw >= prev_rank {
                draw + 1
            } else {
                draw
            }
        };
        prev_rank = rank;
        let device = &network.devices()[device_at[rank][position]];
        planted.insert(function.clone(), device.id.clone());
    }

    let candidates = filter_candidates(&network, &workflow)?;
    debug_assert!(candidates.iter().all(|(_, list)| list.len() == ranks));
    let p = spec.planted_p_for(f_count);
    let model_seed = rng.gen::<u64>();
    let structure = match spec.model_structure {
        ModelStructure::Chain => chain_structure(&functions),
        ModelStructure::RandomDag => random_dag_structure(&functions, mix_seed(seed, 0xDA6)),
    };
    let model = plant_preference(&candidates, &planted, p, &structure, model_seed)?;
    let planted_score = score(&model, &planted)?;
    Ok(SynthInstance {
        network,
        workflow,
        model,
        planted,
        planted_score,
    })
}

/// One solver call on one synthesized instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub f_count: usize,
    pub solver: SolverKind,
    pub run: u32,
    pub seed: u64,
    pub best_score: f64,
    pub optimal_score: f64,
    pub hit: bool,
    pub evaluations: u64,
    pub wall_time_s: f64,
}

pub const CSV_HEADER: &str =
    "f_count,solver,run,seed,best_score,optimal_score,hit,evaluations,wall_time_s";

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.f_count,
            self.solver,
            self.run,
            self.seed,
            self.best_score,
            self.optimal_score,
            self.hit,
            self.evaluations,
            self.wall_time_s
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    /// Records in campaign order: workflow size, then run, then solver.
    pub records: Vec<BenchRecord>,
    /// Cells that could not run (search space above the brute-force cap).
    pub skipped: Vec<String>,
}

/// Runs the full campaign described by `spec`.
///
/// The instance for a given (size, run) cell is shared by every solver, so
/// their scores are directly comparable; each solver still draws from its own
/// seeded stream. A brute-force cell whose space exceeds the cap is skipped
/// and noted, not treated as a failure.
pub fn run_benchmark(spec: &BenchSpec) -> Result<BenchReport> {
    spec.validate()?;
    let cells: Vec<(usize, u32)> = spec
        .function_counts
        .iter()
        .flat_map(|&f| (0..spec.runs).map(move |r| (f, r)))
        .collect();

    let run_cell = |&(f_count, run): &(usize, u32)| -> Result<(Vec<BenchRecord>, Vec<String>)> {
        let instance_seed = mix_seed(mix_seed(spec.base_seed, f_count as u64), run as u64);
        let inst = synthesize_instance(spec, f_count, instance_seed)?;
        let candidates = filter_candidates(&inst.network, &inst.workflow)?;
        let mut records = Vec::new();
        let mut skipped = Vec::new();
        for &solver in &spec.solvers {
            let mut config = spec.solver_template.clone();
            config.seed = mix_seed(instance_seed, 1 + solver as u64);
            let outcome = match solver {
                SolverKind::BruteForce => solve_brute_force(&candidates, &inst.model, &config),
                SolverKind::HillClimbing => solve_hill_climbing(&candidates, &inst.model, &config),
                SolverKind::SimulatedAnnealing => {
                    solve_simulated_annealing(&candidates, &inst.model, &config)
                }
                SolverKind::GeneticAlgorithm => solve_genetic(&candidates, &inst.model, &config),
            };
            let result = match outcome {
                Ok(result) => result,
                Err(Error::SearchSpaceExceeded { space, cap }) => {
                    skipped.push(format!(
                        "f_count={f_count} run={run} {solver}: space {space} above cap {cap}"
                    ));
                    continue;
                }
                Err(other) => return Err(other),
            };
            let check = score(&inst.model, &result.assignment)?;
            assert!(
                (check - result.score).abs() <= 1e-12,
                "{solver} reported {} but its assignment scores {check}",
                result.score
            );
            records.push(BenchRecord {
                f_count,
                solver,
                run,
                seed: config.seed,
                best_score: result.score,
                optimal_score: inst.planted_score,
                hit: (result.score - inst.planted_score).abs() <= HIT_TOLERANCE,
                evaluations: result.evaluations,
                wall_time_s: result.wall_time.as_secs_f64(),
            });
        }
        Ok((records, skipped))
    };

    let outcomes: Vec<(Vec<BenchRecord>, Vec<String>)> = if spec.parallel {
        cells.par_iter().map(run_cell).collect::<Result<_>>()?
    } else {
        cells.iter().map(run_cell).collect::<Result<_>>()?
    };

    let mut report = BenchReport::default();
    for (records, skipped) in outcomes {
        report.records.extend(records);
        report.skipped.extend(skipped);
    }
    Ok(report)
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for record in records {
        out.push_str(&record.csv_row());
        out.push('\n');
    }
    out
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Renders mean score, hit rate, and wall-time statistics per solver per
/// workflow size, in campaign order.
pub fn summary_table(records: &[BenchRecord]) -> String {
    let mut keys: Vec<(usize, SolverKind)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.f_count, r.solver)) {
            keys.push((r.f_count, r.solver));
        }
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>7}  {:<20} {:>5} {:>9} {:>11} {:>13} {:>12} {:>12}",
        "f_count", "solver", "runs", "hit_rate", "mean_score", "mean_wall_s", "p50_wall_s", "p95_wall_s"
    );
    for (f_count, solver) in keys {
        let cell: Vec<&BenchRecord> = records
            .iter()
            .filter(|r| r.f_count == f_count && r.solver == solver)
            .collect();
        let runs = cell.len();
        let hits = cell.iter().filter(|r| r.hit).count();
        let mean_score = cell.iter().map(|r| r.best_score).sum::<f64>() / runs as f64;
        let mut walls: Vec<f64> = cell.iter().map(|r| r.wall_time_s).collect();
        walls.sort_by(|a, b| a.partial_cmp(b).expect("wall times are finite"));
        let mean_wall = walls.iter().sum::<f64>() / runs as f64;
        let _ = writeln!(
            out,
            "{:>7}  {:<20} {:>5} {:>9.3} {:>11.6} {:>13.6} {:>12.6} {:>12.6}",
            f_count,
            solver.to_string(),
            runs,
            hits as f64 / runs as f64,
            mean_score,
            mean_wall,
            percentile(&walls, 0.50),
            percentile(&walls, 0.95),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{generate_policy, verify_least_privilege, RuleProvenance};

    fn small_spec() -> BenchSpec {
        let mut spec = BenchSpec::default();
        spec.function_counts = vec![2, 3];
        spec.runs = 2;
        spec.solver_template.annealing.steps = 2_000;
        spec.solver_template.genetic.generations = 60;
        spec.solver_template.genetic.population = Some(40);
        spec
    }

    #[test]
    fn mixed_seeds_differ_across_salts_and_bases() {
        let seeds = [
            mix_seed(0, 0),
            mix_seed(0, 1),
            mix_seed(1, 0),
            mix_seed(1, 1),
        ];
        for (i, a) in seeds.iter().enumerate() {
            for b in &seeds[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn synthesized_instances_have_the_promised_shape() {
        let spec = BenchSpec::default();
        for f_count in [1, 2, 4, 7] {
            for seed in 0..5 {
                let inst = synthesize_instance(&spec, f_count, seed).unwrap();
                assert_eq!(inst.workflow.functions().len(), f_count);
                assert_eq!(inst.workflow.edges().len(), f_count.saturating_sub(1));

                let candidates = filter_candidates(&inst.network, &inst.workflow).unwrap();
                for (_, list) in candidates.iter() {
                    assert_eq!(list.len(), DEFAULT_ALTERNATIVES_PER_FUNCTION);
                }
                for device in inst.network.devices() {
                    assert!(device.capabilities.len() >= 2.min(f_count));
                    assert!(device.capabilities.len() <= 7);
                }
                let total_devices = inst.network.devices().len();
                assert!(total_devices >= DEFAULT_ALTERNATIVES_PER_FUNCTION);
                assert!(total_devices <= DEFAULT_ALTERNATIVES_PER_FUNCTION * f_count);

                let p = spec.planted_p_for(f_count);
                assert!((inst.planted_score - p).abs() < 1e-9, "planted score {} for target {p}", inst.planted_score);
            }
        }
    }

    #[test]
    fn neighboring_functions_never_share_a_planted_device() {
        let spec = BenchSpec::default();
        for f_count in 2..=7 {
            for seed in 0..10 {
                let inst = synthesize_instance(&spec, f_count, seed).unwrap();
                for (src, dst) in inst.workflow.edges() {
                    assert_ne!(inst.planted[src], inst.planted[dst], "seed {seed}, {f_count} functions");
                }
            }
        }
    }

    #[test]
    fn brute_force_recovers_the_planted_assignment() {
        let spec = BenchSpec::default();
        for seed in 0..5 {
            let inst = synthesize_instance(&spec, 3, seed).unwrap();
            let candidates = filter_candidates(&inst.network, &inst.workflow).unwrap();
            let result =
                solve_brute_force(&candidates, &inst.model, &SolverConfig::seeded(0)).unwrap();
            assert_eq!(result.assignment, inst.planted);
        }
    }

    #[test]
    fn random_dag_models_keep_the_plant_and_change_the_structure() {
        let mut spec = BenchSpec::default();
        spec.model_structure = ModelStructure::RandomDag;
        let mut saw_non_chain = false;
        for seed in 0..5 {
            let inst = synthesize_instance(&spec, 4, seed).unwrap();
            let candidates = filter_candidates(&inst.network, &inst.workflow).unwrap();
            let result =
                solve_brute_force(&candidates, &inst.model, &SolverConfig::seeded(0)).unwrap();
            assert_eq!(result.assignment, inst.planted);
            assert!((result.score - inst.planted_score).abs() <= HIT_TOLERANCE);
            saw_non_chain |= inst
                .model
                .nodes
                .iter()
                .any(|n| n.parents.len() != usize::from(n.name != "f1"));
        }
        assert!(saw_non_chain, "five seeds never produced a non-chain shape");
    }

    #[test]
    fn planted_policies_verify_and_cost_one_rule_per_edge() {
        let spec = BenchSpec::default();
        for f_count in [4, 7] {
            for seed in 0..5 {
                let inst = synthesize_instance(&spec, f_count, seed).unwrap();
                let policy =
                    generate_policy(&inst.network, &inst.workflow, &inst.planted).unwrap();
                let report =
                    verify_least_privilege(&policy, &inst.network, &inst.workflow, &inst.planted)
                        .unwrap();
                assert!(report.pass(), "{report:?}");
                let trigger_rules = policy
                    .rules
                    .iter()
                    .filter(|r| matches!(r.provenance, RuleProvenance::Trigger { .. }))
                    .count();
                assert_eq!(trigger_rules, inst.workflow.edges().len());
            }
        }
    }

    #[test]
    fn one_seed_means_one_instance() {
        let spec = BenchSpec::default();
        let a = synthesize_instance(&spec, 5, 77).unwrap();
        let b = synthesize_instance(&spec, 5, 77).unwrap();
        assert_eq!(a.network.to_json_string(), b.network.to_json_string());
        assert_eq!(a.workflow.to_json_string(), b.workflow.to_json_string());
        assert_eq!(a.model, b.model);
        assert_eq!(a.planted, b.planted);
        let c = synthesize_instance(&spec, 5, 78).unwrap();
        assert_ne!(a.model, c.model);
    }

    fn strip_wall_time(csv: &str) -> String {
        csv.lines()
            .map(|line| line.rsplit_once(',').expect("csv row").0)
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn campaigns_reproduce_byte_identical_apart_from_wall_time() {
        let spec = small_spec();
        let first = run_benchmark(&spec).unwrap();
        let second = run_benchmark(&spec).unwrap();
        assert!(first.skipped.is_empty());
        assert_eq!(
            strip_wall_time(&to_csv(&first.records)),
            strip_wall_time(&to_csv(&second.records))
        );

        let expected = spec.function_counts.len() * spec.runs as usize * spec.solvers.len();
        assert_eq!(first.records.len(), expected);
        let mut i = 0;
        for &f in &spec.function_counts {
            for run in 0..spec.runs {
                for &solver in &spec.solvers {
                    let r = &first.records[i];
                    assert_eq!((r.f_count, r.run, r.solver), (f, run, solver));
                    i += 1;
                }
            }
        }
    }

    #[test]
    fn solvers_in_one_cell_share_the_instance_but_not_the_seed() {
        let report = run_benchmark(&small_spec()).unwrap();
        let cell: Vec<_> = report
            .records
            .iter()
            .filter(|r| r.f_count == 3 && r.run == 1)
            .collect();
        assert_eq!(cell.len(), 4);
        for r in &cell {
            assert_eq!(r.optimal_score, cell[0].optimal_score);
        }
        for (i, a) in cell.iter().enumerate() {
            for b in &cell[i + 1..] {
                assert_ne!(a.seed, b.seed);
            }
        }
    }

    #[test]
    fn exhaustive_search_always_hits_in_benchmarks() {
        let report = run_benchmark(&small_spec()).unwrap();
        for r in report
            .records
            .iter()
            .filter(|r| r.solver == SolverKind::BruteForce)
        {
            assert!(r.hit, "exhaustive search missed at f_count={}", r.f_count);
            assert!(r.best_score >= r.optimal_score - HIT_TOLERANCE);
        }
    }

    #[test]
    fn oversized_cells_are_skipped_not_failed() {
        let mut spec = small_spec();
        spec.function_counts = vec![4];
        spec.runs = 1;
        spec.solvers = vec![SolverKind::BruteForce, SolverKind::HillClimbing];
        spec.solver_template.brute_force_cap = 10;
        let report = run_benchmark(&spec).unwrap();
        assert_eq!(report.records.len(), 1, "hill climbing still runs");
        assert_eq!(report.records[0].solver, SolverKind::HillClimbing);
        assert_eq!(report.skipped.len(), 1);
        assert!(report.skipped[0].contains("above cap"));
    }

    #[test]
    fn csv_layout_is_stable() {
        assert_eq!(
            CSV_HEADER,
            "f_count,solver,run,seed,best_score,optimal_score,hit,evaluations,wall_time_s"
        );
        let record = BenchRecord {
            f_count: 4,
            solver: SolverKind::SimulatedAnnealing,
            run: 2,
            seed: 9,
            best_score: 0.25,
            optimal_score: 0.34,
            hit: false,
            evaluations: 200_001,
            wall_time_s: 0.5,
        };
        assert_eq!(
            record.csv_row(),
            "4,simulated_annealing,2,9,0.25,0.34,false,200001,0.5"
        );
        let csv = to_csv(&[record]);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn summaries_cover_every_cell_once() {
        let report = run_benchmark(&small_spec()).unwrap();
        let table = summary_table(&report.records);
        // Header plus one row per (size, solver) pair.
        assert_eq!(table.lines().count(), 1 + 2 * 4);
        assert!(table.contains("brute_force"));
        assert!(table.contains("genetic_algorithm"));
    }

    #[test]
    fn nonsense_specs_are_rejected() {
        let mut spec = BenchSpec::default();
        spec.runs = 0;
        assert!(spec.validate().is_err());

        let mut spec = BenchSpec::default();
        spec.alternatives_per_function = 1;
        assert!(spec.validate().is_err());

        let mut spec = BenchSpec::default();
        spec.solvers.clear();
        assert!(spec.validate().is_err());

        let mut spec = BenchSpec::default();
        spec.solvers = vec![SolverKind::BruteForce, SolverKind::BruteForce];
        assert!(spec.validate().is_err());

        let mut spec = BenchSpec::default();
        spec.capabilities_per_device = (2, 2);
        assert!(spec.validate().is_err());

        let mut spec = BenchSpec::default();
        spec.capabilities_per_device = (3, 7);
        assert!(spec.validate().is_err());

        // A planted score this low cannot dominate a four-function chain.
        let mut spec = BenchSpec::default();
        spec.planted_p.insert(4, 0.001);
        assert!(spec.validate().is_err());
    }
}
