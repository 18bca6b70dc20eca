//! User preference models over candidate devices.
//!
//! A model is a Bayesian network with one node per workflow function whose
//! domain is that function's candidate device ids. The preference for a
//! complete assignment is the joint probability
//!
//! ```text
//! score(D) = prod over nodes f of P(f = D[f] | parents(f) = D[parents])
//! ```
//!
//! so scores live in [0, 1] and sum to exactly 1 over the full assignment
//! space. `plant_preference` builds such a model around a chosen assignment
//! so that the chosen devices are the unique maximizer with a known score —
//! the ground truth the benchmark measures solvers against.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::CandidateSets;

/// A complete binding of workflow functions to device ids.
pub type Assignment = BTreeMap<String, String>;

/// CPT row sums may drift from 1 by at most this much.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// One conditional distribution: the probabilities over a node's values
/// given one combination of parent values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptRow {
    pub parent_values: Vec<String>,
    pub probs: Vec<f64>,
}

/// One network node: a workflow function, its candidate device ids, and a
/// conditional probability table over every combination of parent values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelNode {
    pub name: String,
    pub values: Vec<String>,
    #[serde(default)]
    pub parents: Vec<String>,
    pub cpt: Vec<CptRow>,
}

/// A validated preference model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceModel {
    pub nodes: Vec<ModelNode>,
}

impl PreferenceModel {
    pub fn from_json_str(doc: &str) -> Result<Self> {
        let model: PreferenceModel = serde_json::from_str(doc)?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn node(&self, name: &str) -> Option<&ModelNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    /// Checks every structural invariant: unique names and domains, parents
    /// that exist and form a DAG, and complete, normalized CPTs.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidModel("no nodes".into()));
        }
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if node.name.is_empty() {
                return Err(Error::InvalidModel(format!("node #{i} has an empty name")));
            }
            if index.insert(&node.name, i).is_some() {
                return Err(Error::InvalidModel(format!(
                    "duplicate node {:?}",
                    node.name
                )));
            }
        }
        // Parent references and acyclicity.
        let mut adjacency = vec![Vec::new(); self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            let mut seen = std::collections::HashSet::new();
            for parent in &node.parents {
                let Some(&p) = index.get(parent.as_str()) else {
                    return Err(Error::InvalidModel(format!(
                        "node {:?} lists unknown parent {parent:?}",
                        node.name
                    )));
                };
                if p == i {
                    return Err(Error::ModelCycle {
                        cycle: vec![node.name.clone(), node.name.clone()],
                    });
                }
                if !seen.insert(p) {
                    return Err(Error::InvalidModel(format!(
                        "node {:?} lists parent {parent:?} twice",
                        node.name
                    )));
                }
                adjacency[p].push(i);
            }
        }
        if let Some(cycle) = crate::workflow::find_cycle(&adjacency) {
            return Err(Error::ModelCycle {
                cycle: cycle
                    .into_iter()
                    .map(|i| self.nodes[i].name.clone())
                    .collect(),
            });
        }
        for node in &self.nodes {
            self.validate_node_cpt(node, &index)?;
        }
        Ok(())
    }

    fn validate_node_cpt(&self, node: &ModelNode, index: &HashMap<&str, usize>) -> Result<()> {
        let bad = |msg: String| Error::InvalidModel(format!("node {:?}: {msg}", node.name));
        if node.values.is_empty() {
            return Err(bad("empty value domain".into()));
        }
        {
            let mut seen = std::collections::HashSet::new();
            for v in &node.values {
                if v.is_empty() {
                    return Err(bad("empty value".into()));
                }
                if !seen.insert(v.as_str()) {
                    return Err(bad(format!("duplicate value {v:?}")));
                }
            }
        }
        let parent_domains: Vec<&[String]> = node
            .parents
            .iter()
            .map(|p| self.nodes[index[p.as_str()]].values.as_slice())
            .collect();
        let expected_rows: usize = parent_domains.iter().map(|d| d.len()).product();
        if node.cpt.len() != expected_rows {
            return Err(bad(format!(
                "{} CPT rows, expected one per parent combination ({expected_rows})",
                node.cpt.len()
            )));
        }
        let mut seen_rows = std::collections::HashSet::new();
        for row in &node.cpt {
            if row.parent_values.len() != node.parents.len() {
                return Err(bad(format!(
                    "row {:?} does not bind every parent",
                    row.parent_values
                )));
            }
            for (value, domain) in row.parent_values.iter().zip(&parent_domains) {
                if !domain.contains(value) {
                    return Err(bad(format!(
                        "row references {value:?}, not a value of its parent"
                    )));
                }
            }
            if !seen_rows.insert(row.parent_values.clone()) {
                return Err(bad(format!(
                    "duplicate row for parents {:?}",
                    row.parent_values
                )));
            }
            if row.probs.len() != node.values.len() {
                return Err(bad(format!(
                    "row for {:?} has {} probabilities for {} values",
                    row.parent_values,
                    row.probs.len(),
                    node.values.len()
                )));
            }
            let mut sum = 0.0;
            for &p in &row.probs {
                if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                    return Err(bad(format!("probability {p} outside [0, 1]")));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::CptRowSum {
                    node: node.name.clone(),
                    parents: row.parent_values.clone(),
                    sum,
                    tolerance: ROW_SUM_TOLERANCE,
                });
            }
        }
        // Count + uniqueness + domain membership together imply every
        // combination appears exactly once.
        Ok(())
    }
}

/// The preference for a complete assignment: the model's joint probability
/// of that assignment. Multiplicative, so changing one CPT factor changes
/// the score by exactly that factor's ratio.
pub fn score(model: &PreferenceModel, assignment: &Assignment) -> Result<f64> {
    check_coverage(model, assignment)?;
    let mut product = 1.0;
    for node in &model.nodes {
        product *= node_factor(node, assignment)?;
    }
    Ok(product)
}

/// Sum of logarithms of the per-node factors. Equals `score(..).ln()` but
/// stays usable when a product of many small factors would underflow.
/// Returns negative infinity when some factor is exactly zero.
pub fn log_score(model: &PreferenceModel, assignment: &Assignment) -> Result<f64> {
    check_coverage(model, assignment)?;
    let mut sum = 0.0;
    for node in &model.nodes {
        sum += node_factor(node, assignment)?.ln();
    }
    Ok(sum)
}

fn check_coverage(model: &PreferenceModel, assignment: &Assignment) -> Result<()> {
    for node in &model.nodes {
        if !assignment.contains_key(&node.name) {
            return Err(Error::AssignmentMismatch(format!(
                "function {:?} is unbound",
                node.name
            )));
        }
    }
    if assignment.len() != model.nodes.len() {
        let extra = assignment
            .keys()
            .find(|k| model.node(k).is_none())
            .cloned()
            .unwrap_or_default();
        return Err(Error::AssignmentMismatch(format!(
            "assignment binds {extra:?}, which is not a model node"
        )));
    }
    Ok(())
}

fn node_factor(node: &ModelNode, assignment: &Assignment) -> Result<f64> {
    let device = &assignment[&node.name];
    let Some(value_idx) = node.values.iter().position(|v| v == device) else {
        return Err(Error::DeviceNotInDomain {
            function: node.name.clone(),
            device: device.clone(),
        });
    };
    let wanted: Vec<&String> = node.parents.iter().map(|p| &assignment[p]).collect();
    let row = node
        .cpt
        .iter()
        .find(|row| row.parent_values.iter().zip(&wanted).all(|(a, &b)| a == b))
        .expect("validated CPTs cover every parent combination");
    Ok(row.probs[value_idx])
}

/// How the probability mass left over after a row's favored device takes its
/// share is spread across the row's other candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemainderSplit {
    /// Every other candidate gets the same share.
    Uniform,
    /// Seeded random shares, drawn fresh per row.
    Random,
}

// Bounds for the random shares, as weights before scaling. The floor keeps
// every share strictly positive so no candidate is ever impossible.
const SPLIT_WEIGHT_MIN: f64 = 0.05;
const SPLIT_WEIGHT_MAX: f64 = 1.0;

/// A chain structure in function order, matching a linear workflow.
pub fn chain_structure(functions: &[String]) -> Vec<(String, String)> {
    functions
        .windows(2)
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect()
}

/// A seeded random DAG over the functions: each node draws up to two
/// parents from the nodes before it, so edges always point forward and
/// no CPT outgrows the product of two parent domains.
pub fn random_dag_structure(functions: &[String], seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for j in 1..functions.len() {
        let want = rng.gen_range(0..=2usize.min(j));
        let mut pool: Vec<usize> = (0..j).collect();
        for _ in 0..want {
            let pick = rng.gen_range(0..pool.len());
            edges.push((functions[pool.swap_remove(pick)].clone(), functions[j].clone()));
        }
    }
    edges.sort();
    edges
}

/// Builds a random model over the candidate sets in which `preferred` is the
/// unique highest-preference assignment with score exactly `p` (up to
/// rounding).
///
/// Every CPT row gives probability `p^(1/|F|)` to one favored device and
/// splits the rest of its mass per `split`. Rows whose parent values lie on
/// the preferred path favor the preferred device, which makes the preferred
/// assignment score `p`; every other row favors a seeded random decoy. The
/// decoys leave the landscape littered with local optima for greedy search,
/// yet the preferred assignment stays the strict global maximum: whichever
/// function deviates first is scored by an on-path row, where it earns
/// strictly less than `p^(1/|F|)`, and no later factor can exceed
/// `p^(1/|F|)` to make up for it.
pub fn plant_preference(
    candidates: &CandidateSets,
    preferred: &Assignment,
    p: f64,
    structure: &[(String, String)],
    rng_seed: u64,
) -> Result<PreferenceModel> {
    plant_preference_with(candidates, preferred, p, structure, rng_seed, RemainderSplit::Uniform)
}

/// `plant_preference` with an explicit remainder split.
pub fn plant_preference_with(
    candidates: &CandidateSets,
    preferred: &Assignment,
    p: f64,
    structure: &[(String, String)],
    rng_seed: u64,
    split: RemainderSplit,
) -> Result<PreferenceModel> {
    let functions = candidates.functions();
    let n = functions.len();
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidPlant(format!(
            "target preference {p} is outside (0, 1)"
        )));
    }
    if preferred.len() != n || functions.iter().any(|f| !preferred.contains_key(f)) {
        return Err(Error::InvalidPlant(
            "preferred assignment must bind exactly the candidate functions".into(),
        ));
    }
    let per_device = p.powf(1.0 / n as f64);
    let mut preferred_idx = Vec::with_capacity(n);
    for (f, list) in candidates.iter() {
        let k = list.len();
        if k < 2 {
            return Err(Error::InvalidPlant(format!(
                "function {f:?} has {k} candidate(s); planting needs at least 2"
            )));
        }
        let Some(idx) = list.iter().position(|d| d == &preferred[f]) else {
            return Err(Error::InvalidPlant(format!(
                "preferred device {:?} is not a candidate for {f:?}",
                preferred[f]
            )));
        };
        preferred_idx.push(idx);
        // Strict dominance: the preferred entry must exceed every possible
        // non-preferred entry, otherwise the planted optimum is not unique.
        let dominated = match split {
            RemainderSplit::Uniform => (1.0 - per_device) / (k - 1) as f64,
            RemainderSplit::Random => 1.0 - per_device,
        };
        if per_device <= dominated {
            return Err(Error::InvalidPlant(format!(
                "p^(1/{n}) = {per_device:.6} cannot dominate the remaining mass for {f:?} (k = {k})"
            )));
        }
    }

    let position: HashMap<&str, usize> = functions
        .iter()
        .enumerate()
        .map(|(i, f)| (f.as_str(), i))
        .collect();
    let mut parents_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut seen_edges = std::collections::HashSet::new();
    for (src, dst) in structure {
        let (Some(&s), Some(&d)) = (position.get(src.as_str()), position.get(dst.as_str())) else {
            return Err(Error::InvalidPlant(format!(
                "structure edge {src:?} -> {dst:?} references an unknown function"
            )));
        };
        if !seen_edges.insert((s, d)) {
            return Err(Error::InvalidPlant(format!(
                "duplicate structure edge {src:?} -> {dst:?}"
            )));
        }
        parents_of[d].push(s);
    }
    for parents in &mut parents_of {
        parents.sort_unstable();
    }
    let mut adjacency = vec![Vec::new(); n];
    for (child, parents) in parents_of.iter().enumerate() {
        for &parent in parents {
            if parent == child {
                return Err(Error::ModelCycle {
                    cycle: vec![functions[child].clone(), functions[child].clone()],
                });
            }
            adjacency[parent].push(child);
        }
    }
    if let Some(cycle) = crate::workflow::find_cycle(&adjacency) {
        return Err(Error::ModelCycle {
            cycle: cycle.into_iter().map(|i| functions[i].clone()).collect(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut nodes = Vec::with_capacity(n);
    for (i, (f, list)) in candidates.iter().enumerate() {
        let k = list.len();
        let parent_lists: Vec<&[String]> = parents_of[i]
            .iter()
            .map(|&j| candidates.list(j))
            .collect();
        let row_count: usize = parent_lists.iter().map(|l| l.len()).product();
        let mut cpt = Vec::with_capacity(row_count);
        let mut combo = vec![0usize; parent_lists.len()];
        for _ in 0..row_count {
            let parent_values = combo
                .iter()
                .zip(&parent_lists)
                .map(|(&c, l)| l[c].clone())
                .collect();
            // The row on the preferred path must favor the preferred device;
            // any other row favors a seeded decoy. Every row's maximum is
            // `per_device`, so the first step off the preferred path costs a
            // factor strictly below it and can never be bought back, which
            // keeps `preferred` the unique argmax.
            let on_path = combo
                .iter()
                .zip(&parents_of[i])
                .all(|(&c, &j)| c == preferred_idx[j]);
            let favored = if on_path {
                preferred_idx[i]
            } else {
                rng.gen_range(0..k)
            };
            cpt.push(CptRow {
                parent_values,
                probs: planted_row(k, favored, per_device, split, &mut rng),
            });
            // Odometer over parent values, rightmost fastest.
            for d in (0..combo.len()).rev() {
                combo[d] += 1;
                if combo[d] < parent_lists[d].len() {
                    break;
                }
                combo[d] = 0;
            }
        }
        nodes.push(ModelNode {
            name: f.clone(),
            values: list.to_vec(),
            parents: parents_of[i].iter().map(|&j| functions[j].clone()).collect(),
            cpt,
        });
    }
    let model = PreferenceModel { nodes };
    model.validate()?;
    Ok(model)
}

fn planted_row(
    k: usize,
    favored: usize,
    per_device: f64,
    split: RemainderSplit,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let remainder = 1.0 - per_device;
    let mut probs = vec![0.0; k];
    probs[favored] = per_device;
    match split {
        RemainderSplit::Uniform => {
            let share = remainder / (k - 1) as f64;
            for (i, p) in probs.iter_mut().enumerate() {
                if i != favored {
                    *p = share;
                }
            }
        }
        RemainderSplit::Random => {
            let weights: Vec<f64> = (0..k - 1)
                .map(|_| rng.gen_range(SPLIT_WEIGHT_MIN..=SPLIT_WEIGHT_MAX))
                .collect();
            let total: f64 = weights.iter().sum();
            let mut w = weights.into_iter();
            for (i, p) in probs.iter_mut().enumerate() {
                if i != favored {
                    *p = remainder * w.next().unwrap() / total;
                }
            }
        }
    }
    probs
}

/// Reads and validates a model document from disk.
pub fn load_model(path: &Path) -> Result<PreferenceModel> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    PreferenceModel::from_json_str(&text)
}
