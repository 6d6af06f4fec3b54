//! Dependency graph over concrete test cases.
//!
//! A node is one test of one primitive instantiated for one extension, base
//! type and register width. Node `b` depends on node `a` when a test of `b`
//! lists `a`'s primitive in `requires` and both share extension, base type and
//! width. Tests whose requirement has no test node of its own are unsafe.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::diag::Diagnostic;
use crate::model::{BaseType, DataModel};
use crate::select::GenerationPlan;

const STAGE: &str = "testgen";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestNode {
    pub category: String,
    pub primitive_name: String,
    pub test_name: String,
    pub extension_name: String,
    pub ctype: BaseType,
    pub size_bits: u32,
    /// Test body template.
    pub implementation: String,
    pub requires: Vec<String>,
    pub is_unsafe: bool,
    /// Required primitives without a test node for this configuration.
    pub untested_requirements: Vec<String>,
}

type NodeKey<'a> = (&'a str, &'a str, &'a str, &'a str, BaseType, u32);

impl TestNode {
    /// Canonical tie-break order among ready nodes.
    pub fn key(&self) -> NodeKey<'_> {
        (
            &self.category,
            &self.primitive_name,
            &self.test_name,
            &self.extension_name,
            self.ctype,
            self.size_bits,
        )
    }

    /// `<category>::<primitive>::<test>/<extension>/<ctype>[/<size>]`
    pub fn case_name(&self, with_size: bool) -> String {
        let mut name = format!(
            "{}::{}::{}/{}/{}",
            self.category, self.primitive_name, self.test_name, self.extension_name, self.ctype
        );
        if with_size {
            name.push_str(&format!("/{}", self.size_bits));
        }
        name
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TestGraph {
    pub nodes: Vec<TestNode>,
    /// (from, to) node indices: `to` depends on `from`.
    pub edges: Vec<(usize, usize)>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TestGraphError {
    #[error("test dependency cycle: {}", .cycle.join(" -> "))]
    Cycle { cycle: Vec<String> },
}

/// One node per (test of a primitive) x (plan entry of that primitive).
/// Primitives in the plan without any test produce a warning.
pub fn collect_tests(plan: &GenerationPlan, model: &DataModel) -> (Vec<TestNode>, Vec<Diagnostic>) {
    let mut nodes = Vec::new();
    let mut diagnostics = Vec::new();
    let mut warned: BTreeSet<(&str, &str)> = BTreeSet::new();
    for entry in &plan.entries {
        let Some(primitive) = entry.primitive_spec(model) else {
            continue;
        };
        if primitive.tests.is_empty() {
            if warned.insert((&entry.category, &entry.primitive)) {
                diagnostics.push(Diagnostic::warn(
                    STAGE,
                    format!("primitive `{}::{}` has no tests", entry.category, entry.primitive),
                ));
            }
            continue;
        }
        for test in &primitive.tests {
            nodes.push(TestNode {
                category: entry.category.clone(),
                primitive_name: entry.primitive.clone(),
                test_name: test.test_name.clone(),
                extension_name: entry.extension.clone(),
                ctype: entry.ctype,
                size_bits: entry.size_bits,
                implementation: test.implementation.clone(),
                requires: test.requires.clone(),
                is_unsafe: false,
                untested_requirements: Vec::new(),
            });
        }
    }
    (nodes, diagnostics)
}

/// Adds edges, marks unsafe nodes and rejects cycles.
pub fn build_dependency_graph(mut nodes: Vec<TestNode>) -> Result<TestGraph, TestGraphError> {
    let mut diagnostics = Vec::new();
    // (extension, ctype, size) -> primitive -> node indices
    let mut index: BTreeMap<(String, BaseType, u32), BTreeMap<String, Vec<usize>>> = BTreeMap::new();
    for (i, n) in nodes.iter().enumerate() {
        index
            .entry((n.extension_name.clone(), n.ctype, n.size_bits))
            .or_default()
            .entry(n.primitive_name.clone())
            .or_default()
            .push(i);
    }

    let mut edges = Vec::new();
    let mut self_refs: BTreeSet<(String, String)> = BTreeSet::new();
    for (b, node) in nodes.iter_mut().enumerate() {
        let group = &index[&(node.extension_name.clone(), node.ctype, node.size_bits)];
        let mut seen = BTreeSet::new();
        let mut missing = Vec::new();
        for req in &node.requires {
            if !seen.insert(req.as_str()) {
                continue;
            }
            if *req == node.primitive_name {
                self_refs.insert((node.primitive_name.clone(), node.test_name.clone()));
                continue;
            }
            match group.get(req) {
                Some(sources) => edges.extend(sources.iter().map(|&a| (a, b))),
                None => missing.push(req.clone()),
            }
        }
        if !missing.is_empty() {
            node.is_unsafe = true;
            node.untested_requirements = missing;
        }
    }
    for (primitive, test) in self_refs {
        diagnostics.push(Diagnostic::warn(
            STAGE,
            format!("test `{primitive}::{test}` lists its own primitive in `requires`; ignored"),
        ));
    }
    edges.sort_unstable();
    edges.dedup();

    let graph = TestGraph {
        nodes,
        edges,
        diagnostics,
    };
    if let Some(cycle) = find_cycle(&graph) {
        return Err(TestGraphError::Cycle {
            cycle: cycle.into_iter().map(|i| graph.nodes[i].case_name(true)).collect(),
        });
    }
    Ok(graph)
}

fn adjacency(graph: &TestGraph) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); graph.nodes.len()];
    for &(a, b) in &graph.edges {
        adj[a].push(b);
    }
    adj
}

/// Returns one cycle as a closed node path (first == last), if any.
fn find_cycle(graph: &TestGraph) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let adj = adjacency(graph);
    let mut mark = vec![Mark::New; graph.nodes.len()];
    for start in 0..graph.nodes.len() {
        if mark[start] != Mark::New {
            continue;
        }
        // Iterative DFS; stack holds (node, next child position).
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        mark[start] = Mark::Active;
        while let Some(&mut (node, ref mut child)) = stack.last_mut() {
            if let Some(&next) = adj[node].get(*child) {
                *child += 1;
                match mark[next] {
                    Mark::New => {
                        mark[next] = Mark::Active;
                        stack.push((next, 0));
                    }
                    Mark::Active => {
                        let from = stack.iter().position(|&(n, _)| n == next).unwrap();
                        let mut cycle: Vec<usize> = stack[from..].iter().map(|&(n, _)| n).collect();
                        cycle.push(next);
                        return Some(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}

/// Topological order; among ready nodes the smallest canonical key goes
/// first. Returns node indices.
pub fn order_indices(graph: &TestGraph) -> Vec<usize> {
    let adj = adjacency(graph);
    let mut indegree = vec![0usize; graph.nodes.len()];
    for &(_, b) in &graph.edges {
        indegree[b] += 1;
    }
    let mut ready: BinaryHeap<Reverse<(NodeKey<'_>, usize)>> = graph
        .nodes
        .iter()
        .enumerate()
        .filter(|(i, _)| indegree[*i] == 0)
        .map(|(i, n)| Reverse((n.key(), i)))
        .collect();
    let mut order = Vec::with_capacity(graph.nodes.len());
    while let Some(Reverse((_, i))) = ready.pop() {
        order.push(i);
        for &b in &adj[i] {
            indegree[b] -= 1;
            if indegree[b] == 0 {
                ready.push(Reverse((graph.nodes[b].key(), b)));
            }
        }
    }
    debug_assert_eq!(order.len(), graph.nodes.len(), "graph must be acyclic");
    order
}

/// Nodes in execution order.
pub fn order_tests(graph: &TestGraph) -> Vec<TestNode> {
    order_indices(graph)
        .into_iter()
        .map(|i| graph.nodes[i].clone())
        .collect()
}
