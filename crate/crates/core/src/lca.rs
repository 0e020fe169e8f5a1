//! Batched lowest common ancestors through heavy paths and subtree covers.
//!
//! In a light-first layout the subtree of `u` occupies the contiguous range
//! `r(u) = [pos(u), pos(u) + s(u) - 1]` and the last child is a heaviest one.
//! Following last children splits the tree into paths; the subtree hanging
//! from the top of each path is one cover subtree. For a query whose answer
//! is neither endpoint, exactly one endpoint sits in a cover subtree rooted at
//! a child `x` of the answer `w` with the other endpoint to the right of
//! `r(x)` inside `r(w)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::sim::{CostReport, SimState};
use crate::tree::RootedTree;
use crate::treefix::{treefix_sum, treefix_topdown};
use crate::virtual_tree::{build_refs_protocol, local_broadcast};

/// Default bound on the number of queries a single vertex takes part in.
pub const DEFAULT_QUERIES_PER_VERTEX: usize = 4;

/// Inclusive range of curve positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    pub a: usize,
    pub b: usize,
}

impl Range {
    pub fn of(pos: usize, size: usize) -> Range {
        Range { a: pos, b: pos + size - 1 }
    }

    pub fn contains(&self, p: usize) -> bool {
        self.a <= p && p <= self.b
    }

    pub fn len(&self) -> usize {
        self.b - self.a + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathDecomposition {
    pub layer: Vec<usize>,
    pub path_root: Vec<usize>,
    /// Whether each vertex starts a new path (the root does, by convention).
    pub starts_path: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverEntry {
    pub root: usize,
    pub range: Range,
    pub layer: usize,
}

/// Path decomposition from sizes already known at every vertex: each vertex
/// learns its parent's range, flags itself when it is not the last child,
/// and a root-path sum of the flags gives the layer.
pub fn path_decomposition(
    sim: &mut SimState,
    t: &RootedTree,
    layout: &Layout,
    sizes: &[usize],
    seed: u64,
) -> Result<(PathDecomposition, CostReport)> {
    let n = t.n();
    let start = sim.report();
    let range: Vec<Range> = (0..n).map(|v| Range::of(layout.pos(v), sizes[v])).collect();
    let (vt, _) = build_refs_protocol(sim, t, layout)?;
    let msgs: Vec<Option<Range>> = range.iter().copied().map(Some).collect();
    let (parent_range, _) = local_broadcast(sim, &vt, layout, &msgs);
    let starts: Vec<i64> = (0..n)
        .map(|v| match parent_range[v] {
            Some(pr) => i64::from(pr.b != range[v].b),
            None => 0,
        })
        .collect();
    let layers = treefix_topdown(sim, t, layout, &starts, seed)?.sums;
    let mut path_root = vec![0; n];
    for v in t.bfs_order() {
        path_root[v] = match t.parent(v) {
            Some(p) if starts[v] == 0 => path_root[p],
            _ => v,
        };
    }
    let decomp = PathDecomposition {
        layer: layers.iter().map(|&l| l as usize).collect(),
        path_root,
        starts_path: (0..n).map(|v| starts[v] == 1 || t.parent(v).is_none()).collect(),
    };
    Ok((decomp, sim.report().since(&start)))
}

/// One entry per path: the subtree under the path's top vertex.
pub fn subtree_cover(decomp: &PathDecomposition, sizes: &[usize], layout: &Layout) -> Vec<CoverEntry> {
    let mut cover: Vec<CoverEntry> = (0..sizes.len())
        .filter(|&v| decomp.starts_path[v])
        .map(|v| CoverEntry { root: v, range: Range::of(layout.pos(v), sizes[v]), layer: decomp.layer[v] })
        .collect();
    cover.sort_by_key(|e| (e.layer, e.range.a));
    cover
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerStats {
    pub layer: usize,
    pub subtrees: usize,
    /// Total length of the ranges broadcast in this layer.
    pub volume: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcaOutcome {
    pub answers: Vec<usize>,
    pub cost: CostReport,
    pub layers: Vec<LayerStats>,
    pub decomposition: PathDecomposition,
    pub sizes: Vec<usize>,
}

/// Answers all `queries` on a light-first `layout`. Each vertex may take part
/// in at most `max_per_vertex` queries.
pub fn batched_lca_with(
    sim: &mut SimState,
    t: &RootedTree,
    layout: &Layout,
    queries: &[(usize, usize)],
    max_per_vertex: usize,
    seed: u64,
) -> Result<LcaOutcome> {
    let n = t.n();
    if layout.n() != n || sim.n() < n {
        return Err(Error::Argument("layout, tree and simulator sizes differ".into()));
    }
    let mut load = vec![0usize; n];
    for &(u, v) in queries {
        if u >= n || v >= n {
            return Err(Error::Argument(format!("query ({u}, {v}) outside {n} vertices")));
        }
        load[u] += 1;
        if v != u {
            load[v] += 1;
        }
    }
    if let Some(v) = (0..n).find(|&v| load[v] > max_per_vertex) {
        return Err(Error::Argument(format!("vertex {v} is in {} queries, limit {max_per_vertex}", load[v])));
    }
    let start = sim.report();

    // Step 1: sizes give ranges; ancestor queries answer themselves.
    let sizes: Vec<usize> =
        treefix_sum(sim, t, layout, &vec![1; n], seed)?.sums.into_iter().map(|s| s as usize).collect();
    let range: Vec<Range> = (0..n).map(|v| Range::of(layout.pos(v), sizes[v])).collect();
    let mut answers: Vec<Option<usize>> = vec![None; queries.len()];
    let mut answered = vec![0u8; queries.len()];
    for (q, &(u, v)) in queries.iter().enumerate() {
        let sides: &[(usize, usize)] = if u == v { &[(u, u)] } else { &[(u, v), (v, u)] };
        for &(me, other) in sides {
            if range[me].contains(layout.pos(other)) {
                answers[q] = Some(me);
                answered[q] += 1;
            }
        }
    }

    // Steps 2 and 3: parent ranges and layers.
    let (decomp, _) = path_decomposition(sim, t, layout, &sizes, seed.wrapping_add(1))?;

    // Step 4: per layer, every cover subtree learns the part of its parent's
    // range to its right; endpoints inside that see the other endpoint there
    // answer with the parent.
    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (q, &(u, v)) in queries.iter().enumerate() {
        by_vertex[u].push(q);
        if v != u {
            by_vertex[v].push(q);
        }
    }
    let max_layer = decomp.layer.iter().copied().max().unwrap_or(0);
    let mut layers = Vec::new();
    for layer in 1..=max_layer {
        let roots: Vec<usize> = (0..n).filter(|&x| decomp.layer[x] == layer && decomp.starts_path[x]).collect();
        let spans: Vec<(usize, usize)> = roots.iter().map(|&x| (range[x].a, range[x].b)).collect();
        sim.broadcast_ranges(&spans)?;
        for &x in &roots {
            let w = t.parent(x).expect("layer above zero");
            let (rx, rw) = (range[x], range[w]);
            for p in rx.a..=rx.b {
                let u = layout.vtx(p);
                for &q in &by_vertex[u] {
                    let (a, b) = queries[q];
                    let other = if a == u { b } else { a };
                    let op = layout.pos(other);
                    if rx.b < op && op <= rw.b {
                        answers[q] = Some(w);
                        answered[q] += 1;
                    }
                }
            }
        }
        layers.push(LayerStats { layer, subtrees: roots.len(), volume: spans.iter().map(|&(a, b)| b - a + 1).sum() });
        sim.all_reduce_barrier();
    }

    if let Some(q) = answered.iter().position(|&c| c != 1) {
        return Err(Error::Consistency(format!("query {q} answered {} times", answered[q])));
    }
    Ok(LcaOutcome {
        answers: answers.into_iter().map(|a| a.expect("answered once")).collect(),
        cost: sim.report().since(&start),
        layers,
        decomposition: decomp,
        sizes,
    })
}

pub fn batched_lca(
    sim: &mut SimState,
    t: &RootedTree,
    layout: &Layout,
    queries: &[(usize, usize)],
    seed: u64,
) -> Result<LcaOutcome> {
    batched_lca_with(sim, t, layout, queries, DEFAULT_QUERIES_PER_VERTEX, seed)
}
