//! Index-based scoring used inside solver loops.
//!
//! Solvers work on gene vectors (one candidate index per function). Scoring
//! a gene vector must not allocate or touch strings, so the model is
//! compiled once into flat per-node probability tables addressed by value
//! indices.

use crate::error::{Error, Result};
use crate::preference::{Assignment, PreferenceModel};
use crate::solvers::CandidateSets;

struct CompiledNode {
    /// Probability rows, flattened; `table[row * width + value]`.
    table: Vec<f64>,
    width: usize,
    /// Positions of the parents in function order.
    parents: Vec<usize>,
    /// Row index contribution per parent value index.
    strides: Vec<usize>,
}

/// A preference model bound to candidate sets, ready for tight loops.
pub(crate) struct CompiledInstance {
    functions: Vec<String>,
    candidates: Vec<Vec<String>>,
    /// Candidate index -> value index in the node's domain, per position.
    gene_to_value: Vec<Vec<u32>>,
    nodes: Vec<CompiledNode>,
    k: Vec<usize>,
}

impl CompiledInstance {
    /// Checks that the model has exactly one node per function and that
    /// every candidate device is in that node's domain, then flattens the
    /// tables.
    pub fn compile(candidates: &CandidateSets, model: &PreferenceModel) -> Result<Self> {
        let functions: Vec<String> = candidates.functions().to_vec();
        let n = functions.len();
        if model.nodes.len() != n {
            return Err(Error::ModelInstanceMismatch(format!(
                "model has {} nodes for {} workflow functions",
                model.nodes.len(),
                n
            )));
        }
        let mut node_for: Vec<&crate::preference::ModelNode> = Vec::with_capacity(n);
        for f in &functions {
            let Some(node) = model.node(f) else {
                return Err(Error::ModelInstanceMismatch(format!(
                    "model has no node for function {f:?}"
                )));
            };
            node_for.push(node);
        }
        let position: std::collections::HashMap<&str, usize> = functions
            .iter()
            .enumerate()
            .map(|(i, f)| (f.as_str(), i))
            .collect();

        let mut gene_to_value = Vec::with_capacity(n);
        let mut k = Vec::with_capacity(n);
        for (i, f) in functions.iter().enumerate() {
            let node = node_for[i];
            let list = candidates.list(i);
            let mut map = Vec::with_capacity(list.len());
            for device in list {
                let Some(idx) = node.values.iter().position(|v| v == device) else {
                    return Err(Error::ModelInstanceMismatch(format!(
                        "candidate {device:?} for {f:?} is outside the model's value domain"
                    )));
                };
                map.push(idx as u32);
            }
            gene_to_value.push(map);
            k.push(list.len());
        }

        let mut nodes = Vec::with_capacity(n);
        for node in &node_for {
            let width = node.values.len();
            let mut parents = Vec::with_capacity(node.parents.len());
            for p in &node.parents {
                // The parents are workflow functions too: score() is only
                // defined when node set and function set coincide.
                let Some(&pos) = position.get(p.as_str()) else {
                    return Err(Error::ModelInstanceMismatch(format!(
                        "node {:?} depends on {p:?}, which is not a workflow function",
                        node.name
                    )));
                };
                parents.push(pos);
            }
            let parent_widths: Vec<usize> =
                parents.iter().map(|&p| node_for[p].values.len()).collect();
            // Rightmost parent varies fastest.
            let mut strides = vec![0usize; parents.len()];
            let mut acc = 1usize;
            for j in (0..parents.len()).rev() {
                strides[j] = acc;
                acc *= parent_widths[j];
            }
            let rows = acc;
            let mut table = vec![f64::NAN; rows * width];
            for row in &node.cpt {
                let mut row_idx = 0usize;
                for ((value, &parent_pos), stride) in row
                    .parent_values
                    .iter()
                    .zip(&parents)
                    .zip(&strides)
                {
                    let domain = &node_for[parent_pos].values;
                    let v = domain.iter().position(|x| x == value).unwrap();
                    row_idx += v * stride;
                }
                table[row_idx * width..(row_idx + 1) * width].copy_from_slice(&row.probs);
            }
            debug_assert!(table.iter().all(|p| p.is_finite()));
            nodes.push(CompiledNode {
                table,
                width,
                parents,
                strides,
            });
        }
        Ok(CompiledInstance {
            functions,
            candidates: (0..n).map(|i| candidates.list(i).to_vec()).collect(),
            gene_to_value,
            nodes,
            k,
        })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn k(&self, position: usize) -> usize {
        self.k[position]
    }

    pub fn space_size(&self) -> u128 {
        self.k.iter().map(|&k| k as u128).product()
    }

    /// Joint probability of the assignment encoded by `genes`.
    fn score_genes(&self, genes: &[u16], values: &mut [u32]) -> f64 {
        debug_assert_eq!(genes.len(), self.len());
        for (i, &g) in genes.iter().enumerate() {
            values[i] = self.gene_to_value[i][g as usize];
        }
        let mut product = 1.0;
        for (i, node) in self.nodes.iter().enumerate() {
            let mut row = 0usize;
            for (&p, &stride) in node.parents.iter().zip(&node.strides) {
                row += values[p] as usize * stride;
            }
            product *= node.table[row * node.width + values[i] as usize];
        }
        product
    }

    /// One-off scoring outside any evaluation budget (result checks, tests).
    pub fn score_once(&self, genes: &[u16]) -> f64 {
        let mut values = vec![0u32; self.len()];
        self.score_genes(genes, &mut values)
    }

    /// Decodes genes back into a function -> device id binding.
    pub fn assignment(&self, genes: &[u16]) -> Assignment {
        self.functions
            .iter()
            .enumerate()
            .zip(genes)
            .map(|((i, f), &g)| (f.clone(), self.candidates[i][g as usize].clone()))
            .collect()
    }
}

/// Counts every score computation a solver performs.
pub(crate) struct Evaluator<'a> {
    inst: &'a CompiledInstance,
    values: Vec<u32>,
    count: u64,
}

impl<'a> Evaluator<'a> {
    pub fn new(inst: &'a CompiledInstance) -> Self {
        Evaluator {
            values: vec![0u32; inst.len()],
            inst,
            count: 0,
        }
    }

    #[inline]
    pub fn eval(&mut self, genes: &[u16]) -> f64 {
        self.count += 1;
        self.inst.score_genes(genes, &mut self.values)
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}
