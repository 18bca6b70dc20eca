//! Steepest-ascent hill climbing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::solvers::{CompiledInstance, Evaluator, HillClimbingConfig};

/// From each seeded random start, scans the full one-change neighborhood,
/// takes the best strictly improving neighbor, and stops at a local optimum.
/// The best local optimum across starts wins. The trace, when requested,
/// records the best score seen so far after every evaluation.
pub(crate) fn run(
    inst: &CompiledInstance,
    config: &HillClimbingConfig,
    seed: u64,
    trace: &mut Option<Vec<f64>>,
) -> (Vec<u16>, f64, u64) {
    let n = inst.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ev = Evaluator::new(inst);
    let mut seen_best = f64::NEG_INFINITY;
    let mut best: Option<(Vec<u16>, f64)> = None;

    for _ in 0..config.restarts {
        let mut genes: Vec<u16> = (0..n)
            .map(|i| rng.gen_range(0..inst.k(i)) as u16)
            .collect();
        let mut current = ev.eval(&genes);
        seen_best = seen_best.max(current);
        if let Some(t) = trace.as_mut() {
            t.push(seen_best);
        }

        loop {
            // Full neighborhood: every other candidate at every position.
            // Strict comparisons keep the first of equally good neighbors.
            let mut move_to: Option<(usize, u16, f64)> = None;
            for i in 0..n {
                let original = genes[i];
                for g in 0..inst.k(i) as u16 {
                    if g == original {
                        continue;
                    }
                    genes[i] = g;
                    let s = ev.eval(&genes);
                    seen_best = seen_best.max(s);
                    if let Some(t) = trace.as_mut() {
                        t.push(seen_best);
                    }
                    let threshold = move_to.map(|(_, _, ms)| ms).unwrap_or(current);
                    if s > threshold {
                        move_to = Some((i, g, s));
                    }
                }
                genes[i] = original;
            }
            match move_to {
                Some((i, g, s)) => {
                    genes[i] = g;
                    current = s;
                }
                None => break,
            }
        }

        if best.as_ref().map(|(_, s)| current > *s).unwrap_or(true) {
            best = Some((genes, current));
        }
    }

    let (genes, score) = best.expect("at least one restart");
    (genes, score, ev.count())
}
