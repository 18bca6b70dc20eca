//! Generational genetic algorithm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::solvers::{
    CompiledInstance, Evaluator, GeneticConfig, MutationKind, POPULATION_PER_FUNCTION,
};

#[derive(Clone)]
struct Individual {
    genes: Vec<u16>,
    score: f64,
}

/// Evolves a population of assignments: the top `elitism_rate` fraction is
/// carried over unchanged, the rest is bred by tournament selection,
/// single-point crossover and mutation. Returns the best individual ever
/// evaluated. `initial` overrides the random starting population (used by
/// tests to pin down elitism behavior).
pub(crate) fn run(
    inst: &CompiledInstance,
    config: &GeneticConfig,
    seed: u64,
    initial: Option<Vec<Vec<u16>>>,
    trace: &mut Option<Vec<f64>>,
) -> (Vec<u16>, f64, u64) {
    let n = inst.len();
    let pop_size = config
        .population
        .unwrap_or(n * POPULATION_PER_FUNCTION)
        .max(2);
    let elites = (config.elitism_rate * pop_size as f64).ceil() as usize;
    let elites = elites.min(pop_size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ev = Evaluator::new(inst);

    let seeds: Vec<Vec<u16>> = match initial {
        Some(genes) => {
            assert_eq!(genes.len(), pop_size, "initial population must fill the configured size");
            genes
        }
        None => (0..pop_size)
            .map(|_| (0..n).map(|i| rng.gen_range(0..inst.k(i)) as u16).collect())
            .collect(),
    };
    let mut population: Vec<Individual> = seeds
        .into_iter()
        .map(|genes| {
            let score = ev.eval(&genes);
            Individual { genes, score }
        })
        .collect();
    rank(&mut population);

    let mut best = population[0].clone();
    let mut stall = 0u32;
    if let Some(t) = trace.as_mut() {
        t.push(best.score);
    }

    for _ in 0..config.generations {
        let mut next: Vec<Individual> = population[..elites].to_vec();
        while next.len() < pop_size {
            // The population is sorted best-first, so a tournament winner is
            // simply the smallest drawn index.
            let p1 = tournament(&mut rng, pop_size, config.tournament_size);
            let p2 = tournament(&mut rng, pop_size, config.tournament_size);
            let (c1, c2) = if n >= 2 && rng.gen_bool(config.crossover_rate) {
                let cut = rng.gen_range(1..n);
                let mut a = population[p1].genes.clone();
                let mut b = population[p2].genes.clone();
                for i in cut..n {
                    std::mem::swap(&mut a[i], &mut b[i]);
                }
                (a, b)
            } else {
                (population[p1].genes.clone(), population[p2].genes.clone())
            };
            for mut child in [c1, c2] {
                if next.len() == pop_size {
                    break;
                }
                mutate(&mut child, inst, config, &mut rng);
                let score = ev.eval(&child);
                next.push(Individual {
                    genes: child,
                    score,
                });
            }
        }
        population = next;
        rank(&mut population);

        if population[0].score > best.score {
            best = population[0].clone();
            stall = 0;
        } else {
            stall += 1;
            if config.stall_generations.map(|s| stall >= s).unwrap_or(false) {
                if let Some(t) = trace.as_mut() {
                    t.push(best.score);
                }
                break;
            }
        }
        if let Some(t) = trace.as_mut() {
            t.push(best.score);
        }
    }

    (best.genes, best.score, ev.count())
}

/// Best first; equal scores fall back to gene order so ranking is total.
fn rank(population: &mut [Individual]) {
    population.sort_unstable_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("scores are finite")
            .then_with(|| a.genes.cmp(&b.genes))
    });
}

fn tournament(rng: &mut ChaCha8Rng, pop_size: usize, size: usize) -> usize {
    (0..size).map(|_| rng.gen_range(0..pop_size)).min().unwrap()
}

fn mutate(genes: &mut [u16], inst: &CompiledInstance, config: &GeneticConfig, rng: &mut ChaCha8Rng) {
    match config.mutation {
        MutationKind::PerOffspring => {
            if config.mutation_rate > 0.0 && rng.gen_bool(config.mutation_rate) {
                let i = rng.gen_range(0..genes.len());
                genes[i] = rng.gen_range(0..inst.k(i)) as u16;
            }
        }
        MutationKind::PerGene => {
            let rate = (config.mutation_rate / genes.len() as f64).min(1.0);
            if rate <= 0.0 {
                return;
            }
            for i in 0..genes.len() {
                if rng.gen_bool(rate) {
                    genes[i] = rng.gen_range(0..inst.k(i)) as u16;
                }
            }
        }
    }
}
