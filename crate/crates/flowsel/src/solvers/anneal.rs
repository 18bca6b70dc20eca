//! Simulated annealing over single-device proposals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::solvers::{AnnealingConfig, CompiledInstance, Evaluator};

/// Kirkpatrick-style annealing: propose one random device change per step,
/// always accept improvements, accept a worse proposal with probability
/// `exp(delta / T)` under a geometric schedule from `max_temperature` down
/// to `min_temperature`. The best assignment ever evaluated is returned and
/// exactly `steps + 1` evaluations are performed.
pub(crate) fn run(
    inst: &CompiledInstance,
    config: &AnnealingConfig,
    seed: u64,
    trace: &mut Option<Vec<f64>>,
) -> (Vec<u16>, f64, u64) {
    let n = inst.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ev = Evaluator::new(inst);

    let mut genes: Vec<u16> = (0..n)
        .map(|i| rng.gen_range(0..inst.k(i)) as u16)
        .collect();
    let mut current = ev.eval(&genes);
    let mut best = genes.clone();
    let mut best_score = current;
    if let Some(t) = trace.as_mut() {
        t.push(best_score);
    }

    // Positions where a proposal can actually change something.
    let mutable: Vec<usize> = (0..n).filter(|&i| inst.k(i) > 1).collect();

    let steps = config.steps;
    for step in 0..steps {
        let temperature = schedule(step, steps, config.max_temperature, config.min_temperature);
        if mutable.is_empty() {
            // Degenerate space: the only proposal is the current state.
            let s = ev.eval(&genes);
            debug_assert_eq!(s, current);
        } else {
            let i = mutable[rng.gen_range(0..mutable.len())];
            let old = genes[i];
            // Uniform over the other candidates at position i.
            let draw = rng.gen_range(0..inst.k(i) - 1) as u16;
            genes[i] = if draw >= old { draw + 1 } else { draw };
            let s = ev.eval(&genes);
            let delta = s - current;
            let accept = delta >= 0.0 || rng.gen::<f64>() < (delta / temperature).exp();
            if accept {
                current = s;
                if s > best_score {
                    best_score = s;
                    best.copy_from_slice(&genes);
                }
            } else {
                genes[i] = old;
            }
        }
        if let Some(t) = trace.as_mut() {
            t.push(best_score);
        }
    }

    (best, best_score, ev.count())
}

/// Geometric interpolation: T(0) = max, T(steps - 1) = min.
fn schedule(step: u64, steps: u64, max: f64, min: f64) -> f64 {
    if steps <= 1 {
        return max;
    }
    let progress = step as f64 / (steps - 1) as f64;
    max * (min / max).powf(progress)
}
