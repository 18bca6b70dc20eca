//! Exhaustive enumeration in lexicographic order.

use crate::error::{Error, Result};
use crate::solvers::{CompiledInstance, Evaluator};

/// Visits every assignment exactly once (evaluations equal the space size)
/// and keeps the first maximum encountered, which by the enumeration order
/// is the lexicographically smallest one.
pub(crate) fn run(inst: &CompiledInstance, cap: u64) -> Result<(Vec<u16>, f64, u64)> {
    let space = inst.space_size();
    if space > cap as u128 {
        return Err(Error::SearchSpaceExceeded { space, cap });
    }
    let n = inst.len();
    let mut ev = Evaluator::new(inst);
    let mut genes = vec![0u16; n];
    let mut best = genes.clone();
    let mut best_score = ev.eval(&genes);
    while advance(&mut genes, inst) {
        let s = ev.eval(&genes);
        if s > best_score {
            best_score = s;
            best.copy_from_slice(&genes);
        }
    }
    debug_assert_eq!(ev.count() as u128, space);
    Ok((best, best_score, ev.count()))
}

/// Odometer step, rightmost position fastest; false once the space is done.
fn advance(genes: &mut [u16], inst: &CompiledInstance) -> bool {
    for i in (0..genes.len()).rev() {
        genes[i] += 1;
        if (genes[i] as usize) < inst.k(i) {
            return true;
        }
        genes[i] = 0;
    }
    false
}
