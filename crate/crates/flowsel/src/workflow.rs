//! Workflows: the functions a routine is made of and the trigger edges
//! between them. An edge `a -> b` means completing `a` starts `b`.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::device::Network;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WorkflowDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    functions: Vec<String>,
    edges: Vec<(String, String)>,
}

/// A validated workflow: unique functions, edges between listed functions,
/// and no trigger cycles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workflow {
    id: String,
    functions: Vec<String>,
    edges: Vec<(String, String)>,
    index: HashMap<String, usize>,
}

impl Workflow {
    pub fn new(id: Option<String>, functions: Vec<String>, edges: Vec<(String, String)>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::InvalidWorkflow("no functions".into()));
        }
        let mut index = HashMap::with_capacity(functions.len());
        for (i, f) in functions.iter().enumerate() {
            if f.is_empty() {
                return Err(Error::InvalidWorkflow("empty function name".into()));
            }
            if index.insert(f.clone(), i).is_some() {
                return Err(Error::InvalidWorkflow(format!("duplicate function {f:?}")));
            }
        }
        let mut adjacency = vec![Vec::new(); functions.len()];
        let mut seen_edges = std::collections::HashSet::new();
        for (src, dst) in &edges {
            let (Some(&s), Some(&d)) = (index.get(src), index.get(dst)) else {
                return Err(Error::InvalidWorkflow(format!(
                    "edge {src:?} -> {dst:?} references an unlisted function"
                )));
            };
            if s == d {
                return Err(Error::WorkflowCycle {
                    cycle: vec![src.clone(), dst.clone()],
                });
            }
            if !seen_edges.insert((s, d)) {
                return Err(Error::InvalidWorkflow(format!(
                    "duplicate edge {src:?} -> {dst:?}"
                )));
            }
            adjacency[s].push(d);
        }
        if let Some(cycle) = find_cycle(&adjacency) {
            return Err(Error::WorkflowCycle {
                cycle: cycle.into_iter().map(|i| functions[i].clone()).collect(),
            });
        }
        let id = id.unwrap_or_else(|| derived_id(&functions, &edges));
        Ok(Workflow {
            id,
            functions,
            edges,
            index,
        })
    }

    pub fn from_json_str(doc: &str) -> Result<Self> {
        let doc: WorkflowDoc = serde_json::from_str(doc)?;
        Workflow::new(doc.id, doc.functions, doc.edges)
    }

    pub fn to_json_string(&self) -> String {
        let doc = WorkflowDoc {
            id: Some(self.id.clone()),
            functions: self.functions.clone(),
            edges: self.edges.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("workflow serialization cannot fail")
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn functions(&self) -> &[String] {
        &self.functions
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    pub fn contains(&self, function: &str) -> bool {
        self.index.contains_key(function)
    }

    pub fn position(&self, function: &str) -> Option<usize> {
        self.index.get(function).copied()
    }

    /// A linear chain `f1 -> f2 -> ... -> fn` over the given functions.
    pub fn chain(id: Option<String>, functions: Vec<String>) -> Result<Self> {
        let edges = functions
            .windows(2)
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        Workflow::new(id, functions, edges)
    }
}

/// Checks that every workflow function has at least one capable device.
///
/// Errors list every uncovered function, not just the first.
pub fn check_feasible(network: &Network, workflow: &Workflow) -> Result<()> {
    let uncovered: Vec<String> = workflow
        .functions()
        .iter()
        .filter(|f| network.capable_devices(f).is_empty())
        .cloned()
        .collect();
    if uncovered.is_empty() {
        Ok(())
    } else {
        Err(Error::Infeasible {
            functions: uncovered,
        })
    }
}

/// Depth-first cycle search; returns one closed walk `v .. v` if any exists.
pub(crate) fn find_cycle(adjacency: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    fn visit(
        v: usize,
        adjacency: &[Vec<usize>],
        color: &mut [Color],
        stack: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        color[v] = Color::Gray;
        stack.push(v);
        for &w in &adjacency[v] {
            match color[w] {
                Color::Gray => {
                    let start = stack.iter().position(|&x| x == w).unwrap();
                    let mut cycle: Vec<usize> = stack[start..].to_vec();
                    cycle.push(w);
                    return Some(cycle);
                }
                Color::White => {
                    if let Some(c) = visit(w, adjacency, color, stack) {
                        return Some(c);
                    }
                }
                Color::Black => {}
            }
        }
        stack.pop();
        color[v] = Color::Black;
        None
    }
    let mut color = vec![Color::White; adjacency.len()];
    let mut stack = Vec::new();
    for v in 0..adjacency.len() {
        if color[v] == Color::White {
            if let Some(c) = visit(v, adjacency, &mut color, &mut stack) {
                return Some(c);
            }
        }
    }
    None
}

// Stable content-derived id for documents that do not name themselves (FNV-1a).
fn derived_id(functions: &[String], edges: &[(String, String)]) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    for f in functions {
        eat(f.as_bytes());
        eat(&[0]);
    }
    for (a, b) in edges {
        eat(a.as_bytes());
        eat(&[1]);
        eat(b.as_bytes());
        eat(&[2]);
    }
    format!("wf-{hash:016x}")
}

/// Reads and validates a workflow document from disk.
pub fn load_workflow(path: &Path) -> Result<Workflow> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Workflow::from_json_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::Network;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn loads_the_morning_routine() {
        let wf = Workflow::from_json_str(include_str!("../fixtures/morning_workflow.json")).unwrap();
        assert_eq!(wf.id(), "morning_routine");
        assert_eq!(wf.functions(), ["alarm", "make_coffee"]);
        assert_eq!(wf.edges().len(), 1);
    }

    #[test]
    fn derives_a_stable_id_when_unnamed() {
        let a = Workflow::new(None, vec!["a".into(), "b".into()], vec![("a".into(), "b".into())]).unwrap();
        let b = Workflow::new(None, vec!["a".into(), "b".into()], vec![("a".into(), "b".into())]).unwrap();
        assert_eq!(a.id(), b.id());
        let c = Workflow::new(None, vec!["a".into(), "b".into()], vec![]).unwrap();
        assert_ne!(a.id(), c.id());
    }

    #[test]
    fn rejects_duplicate_functions() {
        let err = Workflow::new(None, vec!["a".into(), "a".into()], vec![]).unwrap_err();
        assert!(matches!(err, Error::InvalidWorkflow(_)));
    }

    #[test]
    fn rejects_edges_to_unlisted_functions() {
        let err = Workflow::new(
            None,
            vec!["a".into()],
            vec![("a".into(), "ghost".into())],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidWorkflow(_)));
    }

    #[test]
    fn rejects_self_loops() {
        let err = Workflow::new(None, vec!["a".into()], vec![("a".into(), "a".into())]).unwrap_err();
        assert!(matches!(err, Error::WorkflowCycle { .. }));
    }

    #[test]
    fn rejects_duplicate_edges() {
        let err = Workflow::new(
            None,
            vec!["a".into(), "b".into()],
            vec![("a".into(), "b".into()), ("a".into(), "b".into())],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidWorkflow(_)));
    }

    #[test]
    fn reports_one_offending_cycle() {
        let err = Workflow::new(
            None,
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![
                ("a".into(), "b".into()),
                ("b".into(), "c".into()),
                ("c".into(), "b".into()),
                ("c".into(), "d".into()),
            ],
        )
        .unwrap_err();
        match err {
            Error::WorkflowCycle { cycle } => {
                assert_eq!(cycle.first(), cycle.last());
                assert!(cycle.contains(&"b".to_string()) && cycle.contains(&"c".to_string()));
                assert!(!cycle.contains(&"a".to_string()));
            }
            other => panic!("expected cycle error, got {other:?}"),
        }
    }

    // Kahn's algorithm as an independent acyclicity oracle.
    fn kahn_is_acyclic(n: usize, edges: &[(usize, usize)]) -> bool {
        let mut indeg = vec![0usize; n];
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
            indeg[b] += 1;
        }
        let mut queue: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop() {
            seen += 1;
            for &w in &adj[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push(w);
                }
            }
        }
        seen == n
    }

    #[test]
    fn cycle_detection_agrees_with_kahn_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let n = rng.gen_range(1..8usize);
            let names: Vec<String> = (0..n).map(|i| format!("f{i}")).collect();
            let mut edges = Vec::new();
            let mut raw = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for _ in 0..rng.gen_range(0..10usize) {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a != b && seen.insert((a, b)) {
                    raw.push((a, b));
                    edges.push((names[a].clone(), names[b].clone()));
                }
            }
            let accepted = Workflow::new(None, names.clone(), edges).is_ok();
            assert_eq!(accepted, kahn_is_acyclic(n, &raw));
        }
    }

    #[test]
    fn feasibility_against_the_fixture_registry() {
        let net = Network::from_json_str(include_str!("../fixtures/smart_home_registry.json")).unwrap();
        let wf = Workflow::from_json_str(include_str!("../fixtures/morning_workflow.json")).unwrap();
        check_feasible(&net, &wf).unwrap();

        let wf2 = Workflow::chain(
            None,
            vec!["alarm".into(), "vacuum".into(), "mop".into()],
        )
        .unwrap();
        match check_feasible(&net, &wf2).unwrap_err() {
            Error::Infeasible { functions } => assert_eq!(functions, ["vacuum", "mop"]),
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }
}
