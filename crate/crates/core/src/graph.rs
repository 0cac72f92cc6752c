//! Directed probabilistic graphs and the whitespace edge-list format.
//!
//! Node ids are dense `u32` values in `[0, n)`. Edges keep their input order,
//! and the edge index doubles as the edge id used by possible worlds.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::fmt_f64;

pub type NodeId = u32;
pub type EdgeId = u32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: NodeId,
    pub target: NodeId,
    pub prob: f64,
}

/// What to do when the same `(src, dst)` pair appears more than once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    #[default]
    Reject,
    /// Keep a single edge carrying the largest probability seen.
    MergeMax,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub duplicates: DuplicatePolicy,
    /// Expand every input line into two directed edges.
    pub undirected: bool,
}

/// Immutable directed graph with CSR in/out adjacency over edge ids.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    out_offsets: Vec<usize>,
    out_ids: Vec<EdgeId>,
    in_offsets: Vec<usize>,
    in_ids: Vec<EdgeId>,
    has_probabilities: bool,
}

impl Graph {
    /// Builds a graph from explicit edges, validating ids and probabilities.
    pub fn from_edges(n: usize, edges: Vec<Edge>) -> Result<Self> {
        Self::build(n, edges, true)
    }

    fn build(n: usize, edges: Vec<Edge>, has_probabilities: bool) -> Result<Self> {
        if n > NodeId::MAX as usize {
            return Err(Error::Invalid(format!("node count {n} exceeds u32 range")));
        }
        for (i, e) in edges.iter().enumerate() {
            if e.source as usize >= n || e.target as usize >= n {
                return Err(Error::Invalid(format!(
                    "edge {i} ({} -> {}) references a node outside [0, {n})",
                    e.source, e.target
                )));
            }
            if e.source == e.target {
                return Err(Error::Invalid(format!("edge {i} is a self-loop on {}", e.source)));
            }
            if !(0.0..=1.0).contains(&e.prob) {
                return Err(Error::Invalid(format!(
                    "edge {i} probability {} outside [0, 1]",
                    e.prob
                )));
            }
        }
        let (out_offsets, out_ids) = csr(n, &edges, |e| e.source);
        let (in_offsets, in_ids) = csr(n, &edges, |e| e.target);
        Ok(Graph {
            n,
            edges,
            out_offsets,
            out_ids,
            in_offsets,
            in_ids,
            has_probabilities,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id as usize]
    }

    /// False when the edge list carried no probability column; every
    /// probability is then the 0 sentinel until one is assigned.
    pub fn has_probabilities(&self) -> bool {
        self.has_probabilities
    }

    pub fn out_edges(&self, v: NodeId) -> &[EdgeId] {
        let v = v as usize;
        &self.out_ids[self.out_offsets[v]..self.out_offsets[v + 1]]
    }

    pub fn in_edges(&self, v: NodeId) -> &[EdgeId] {
        let v = v as usize;
        &self.in_ids[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_edges(v).len()
    }

    pub fn out_degree(&self, v: NodeId) -> usize {
        self.out_edges(v).len()
    }

    /// Weighted-cascade probabilities: `p(u, v) = 1 / d_in(v)`.
    pub fn with_weighted_cascade(&self) -> Graph {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                prob: 1.0 / self.in_degree(e.target) as f64,
                ..*e
            })
            .collect();
        self.with_edges(edges)
    }

    /// Same topology with every probability set to `p`.
    pub fn with_uniform_probability(&self, p: f64) -> Result<Graph> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Invalid(format!("probability {p} outside [0, 1]")));
        }
        let edges = self.edges.iter().map(|e| Edge { prob: p, ..*e }).collect();
        Ok(self.with_edges(edges))
    }

    fn with_edges(&self, edges: Vec<Edge>) -> Graph {
        Graph {
            edges,
            has_probabilities: true,
            ..self.clone()
        }
    }

    /// Parses the `src dst [prob]` edge-list format.
    pub fn load_edge_list<R: BufRead>(reader: R, options: LoadOptions) -> Result<Graph> {
        let mut raw: Vec<(usize, Edge)> = Vec::new();
        let mut with_prob: Option<bool> = None;
        let mut max_id: Option<NodeId> = None;

        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(Error::parse(
                    lineno,
                    format!("expected `src dst [prob]`, found {} fields", fields.len()),
                ));
            }
            let src = parse_node(fields[0], lineno)?;
            let dst = parse_node(fields[1], lineno)?;
            if src == dst {
                return Err(Error::parse(lineno, format!("self-loop on node {src}")));
            }
            let present = fields.len() == 3;
            match with_prob {
                None => with_prob = Some(present),
                Some(p) if p != present => {
                    return Err(Error::parse(
                        lineno,
                        "probability column present on some lines but not others",
                    ))
                }
                _ => {}
            }
            let prob = if present {
                let p: f64 = fields[2]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad probability `{}`", fields[2])))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Invalid(format!(
                        "line {lineno}: probability {p} outside [0, 1]"
                    )));
                }
                p
            } else {
                0.0
            };
            max_id = max_id.max(Some(src.max(dst)));
            raw.push((lineno, Edge { source: src, target: dst, prob }));
            if options.undirected {
                raw.push((lineno, Edge { source: dst, target: src, prob }));
            }
        }

        let mut seen: HashMap<(NodeId, NodeId), usize> = HashMap::with_capacity(raw.len());
        let mut edges: Vec<Edge> = Vec::with_capacity(raw.len());
        for (lineno, e) in raw {
            match seen.get(&(e.source, e.target)) {
                Some(&at) => match options.duplicates {
                    DuplicatePolicy::Reject => {
                        return Err(Error::parse(
                            lineno,
                            format!("duplicate edge {} -> {}", e.source, e.target),
                        ))
                    }
                    DuplicatePolicy::MergeMax => {
                        edges[at].prob = edges[at].prob.max(e.prob);
                    }
                },
                None => {
                    seen.insert((e.source, e.target), edges.len());
                    edges.push(e);
                }
            }
        }

        let n = max_id.map_or(0, |m| m as usize + 1);
        Graph::build(n, edges, with_prob.unwrap_or(true))
    }

    /// Writes the edge list with 17-significant-digit probabilities. The
    /// node count is recorded as a comment so isolated trailing nodes survive
    /// a round trip through [`Graph::load_edge_list_with_header`].
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# nodes {}", self.n)?;
        for e in &self.edges {
            writeln!(out, "{} {} {}", e.source, e.target, fmt_f64(e.prob))?;
        }
        Ok(())
    }

    /// Like [`Graph::load_edge_list`] but honours a leading `# nodes N`
    /// comment, padding the graph with isolated nodes when N exceeds 1 + max id.
    pub fn load_edge_list_with_header<R: BufRead>(reader: R, options: LoadOptions) -> Result<Graph> {
        let text = std::io::read_to_string(reader)?;
        let declared = text.lines().find_map(|l| {
            l.trim()
                .strip_prefix("# nodes ")
                .and_then(|rest| rest.trim().parse::<usize>().ok())
        });
        let g = Graph::load_edge_list(text.as_bytes(), options)?;
        match declared {
            Some(n) if n > g.n => Graph::build(n, g.edges, g.has_probabilities),
            Some(n) if n < g.n => Err(Error::Invalid(format!(
                "header declares {n} nodes but edges reference {}",
                g.n
            ))),
            _ => Ok(g),
        }
    }
}

fn parse_node(field: &str, lineno: usize) -> Result<NodeId> {
    let v: u64 = field
        .parse()
        .map_err(|_| Error::parse(lineno, format!("bad node id `{field}`")))?;
    if v >= NodeId::MAX as u64 {
        return Err(Error::parse(lineno, format!("node id {v} too large")));
    }
    Ok(v as NodeId)
}

fn csr(n: usize, edges: &[Edge], key: impl Fn(&Edge) -> NodeId) -> (Vec<usize>, Vec<EdgeId>) {
    let mut offsets = vec![0usize; n + 1];
    for e in edges {
        offsets[key(e) as usize + 1] += 1;
    }
    for v in 0..n {
        offsets[v + 1] += offsets[v];
    }
    let mut cursor = offsets.clone();
    let mut ids = vec![0 as EdgeId; edges.len()];
    for (id, e) in edges.iter().enumerate() {
        let slot = &mut cursor[key(e) as usize];
        ids[*slot] = id as EdgeId;
        *slot += 1;
    }
    (offsets, ids)
}

/// Compacts arbitrary (possibly sparse) node labels to dense ids in order of
/// first appearance. Returns the rewritten text and the label of each new id.
pub fn remap_edge_list<R: BufRead>(reader: R) -> Result<(String, Vec<String>)> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut out = String::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::parse(idx + 1, "expected `src dst [prob]`"));
        }
        let mut mapped = [0usize; 2];
        for (slot, label) in mapped.iter_mut().zip(&fields[..2]) {
            let next = labels.len();
            *slot = *ids.entry((*label).to_string()).or_insert_with(|| {
                labels.push((*label).to_string());
                next
            });
        }
        out.push_str(&format!("{} {}", mapped[0], mapped[1]));
        if let Some(p) = fields.get(2) {
            out.push(' ');
            out.push_str(p);
        }
        out.push('\n');
    }
    Ok((out, labels))
}
