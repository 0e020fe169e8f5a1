//! Linear orders of tree vertices mapped onto a curve.
//!
//! In light-first order every vertex is followed by the subtrees of its
//! children, smallest subtree first. Equal sizes keep the stored child order,
//! so the last child is always a heaviest one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curves::{index_to_coord, manhattan, CurveKind, CurveOrder, GridCoord};
use crate::error::{Error, Result};
use crate::listrank::{list_rank, subtree_sizes_via_tour, tour_list};
use crate::rng::Lcg64;
use crate::sim::{CostReport, SimState};
use crate::tree::{subtree_sizes_bruteforce, RootedTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutKind {
    LightFirst,
    Bfs,
    Dfs,
}

impl LayoutKind {
    pub const ALL: [LayoutKind; 3] = [LayoutKind::LightFirst, LayoutKind::Bfs, LayoutKind::Dfs];

    pub fn name(self) -> &'static str {
        match self {
            LayoutKind::LightFirst => "light-first",
            LayoutKind::Bfs => "bfs",
            LayoutKind::Dfs => "dfs",
        }
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LayoutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LayoutKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown layout {s:?}")))
    }
}

/// Bijection between vertices and the first `n` curve positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub kind: LayoutKind,
    pub curve: CurveKind,
    pub order: CurveOrder,
    pos: Vec<usize>,
    vtx: Vec<usize>,
    coords: Vec<GridCoord>,
}

impl Layout {
    pub fn from_positions(kind: LayoutKind, curve: CurveKind, pos: Vec<usize>) -> Result<Self> {
        let n = pos.len();
        let mut vtx = vec![usize::MAX; n];
        for (v, &p) in pos.iter().enumerate() {
            if p >= n || vtx[p] != usize::MAX {
                return Err(Error::Argument(format!("position {p} of vertex {v} repeated or out of range")));
            }
            vtx[p] = v;
        }
        let order = CurveOrder::for_count(n);
        let coords =
            pos.iter().map(|&p| index_to_coord(curve, order, p as u64).expect("position inside grid")).collect();
        Ok(Layout { kind, curve, order, pos, vtx, coords })
    }

    pub fn n(&self) -> usize {
        self.pos.len()
    }

    pub fn pos(&self, v: usize) -> usize {
        self.pos[v]
    }

    pub fn positions(&self) -> &[usize] {
        &self.pos
    }

    pub fn vtx(&self, p: usize) -> usize {
        self.vtx[p]
    }

    pub fn coord(&self, v: usize) -> GridCoord {
        self.coords[v]
    }

    /// Grid distance between the cells of two vertices.
    pub fn distance(&self, u: usize, v: usize) -> u64 {
        manhattan(self.coords[u], self.coords[v])
    }

    /// One `vertex position row col` line per vertex.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for v in 0..self.n() {
            let c = self.coords[v];
            s.push_str(&format!("{v} {} {} {}\n", self.pos[v], c.row, c.col));
        }
        s
    }
}

/// Copy of `t` with children sorted by subtree size (stable).
pub fn light_first_tree(t: &RootedTree, sizes: &[usize]) -> RootedTree {
    t.reorder_children(|c| sizes[c])
}

/// Light-first positions by direct recursion: preorder of the size-sorted
/// tree.
pub fn light_first_positions(t: &RootedTree) -> Vec<usize> {
    let sizes = subtree_sizes_bruteforce(t);
    let mut pos = vec![0; t.n()];
    for (i, v) in light_first_tree(t, &sizes).preorder().into_iter().enumerate() {
        pos[v] = i;
    }
    pos
}

/// Any of the three layouts computed sequentially.
pub fn build_layout(t: &RootedTree, kind: LayoutKind, curve: CurveKind) -> Layout {
    let order = match kind {
        LayoutKind::LightFirst => {
            return Layout::from_positions(kind, curve, light_first_positions(t)).expect("bijection")
        }
        LayoutKind::Bfs => t.bfs_order(),
        LayoutKind::Dfs => t.preorder(),
    };
    let mut pos = vec![0; t.n()];
    for (i, v) in order.into_iter().enumerate() {
        pos[v] = i;
    }
    Layout::from_positions(kind, curve, pos).expect("bijection")
}

/// Level-order or preorder baseline.
pub fn build_baseline(t: &RootedTree, kind: LayoutKind, curve: CurveKind) -> Result<Layout> {
    if kind == LayoutKind::LightFirst {
        return Err(Error::Argument("light-first is not a baseline".into()));
    }
    Ok(build_layout(t, kind, curve))
}

/// Builds the light-first layout on the simulator, starting from vertex `v`
/// at position `v`. The simulator needs `2n - 1` positions for tour slots.
pub fn build_light_first(sim: &mut SimState, t: &RootedTree, seed: u64) -> Result<(Layout, CostReport)> {
    let n = t.n();
    let slots = 2 * n - 1;
    if sim.n() < slots {
        return Err(Error::Argument(format!("{} positions cannot hold {slots} tour slots", sim.n())));
    }
    let start = sim.report();
    let mut rng = Lcg64::new(seed);

    let sizes = subtree_sizes_via_tour(sim, t, rng.next_u64())?;

    // Sort siblings by size: route every non-root vertex to its rank under
    // (parent, size, stored order), let neighbours in that order compare
    // notes, and route back.
    let root = t.root();
    let mut sorted: Vec<usize> = Vec::with_capacity(n - 1);
    for v in 0..n {
        let mut kids = t.children(v).to_vec();
        kids.sort_by_key(|&c| sizes[c]);
        sorted.extend(kids);
    }
    let mut to_sorted = vec![None; n];
    for (i, &c) in sorted.iter().enumerate() {
        to_sorted[c] = Some(i);
    }
    sim.permute(&to_sorted)?;
    sim.round(|s| {
        for i in 1..sorted.len() {
            s.msg(i - 1, i);
        }
    });
    let mut back = vec![None; n];
    for (i, &c) in sorted.iter().enumerate() {
        back[i] = Some(c);
    }
    sim.permute(&back)?;
    let lf = light_first_tree(t, &sizes);
    sim.round(|s| {
        for v in 0..n {
            if let Some(&c) = lf.children(v).first() {
                s.msg(c, v);
            }
        }
    });
    debug_assert!(sorted.iter().all(|&c| c != root));

    // Second tour over the sorted children; its ranks order the slots.
    let list = tour_list(&lf);
    sim.round(|s| {
        for c in (0..n).filter(|&c| c != root) {
            s.msg(c, n + c - usize::from(c > root));
        }
    });
    let ranks = list_rank(sim, &list, rng.next_u64())?.ranks;
    sim.permute(&ranks.iter().map(|&r| Some(r)).collect::<Vec<_>>())?;

    // First occurrences are the descent slots; compacting them yields the
    // preorder, which is the final placement.
    let mut first = vec![false; slots];
    for v in 0..n {
        first[ranks[v]] = true;
    }
    let (dest, count) = sim.compact(&first)?;
    debug_assert_eq!(count, n);
    let pos: Vec<usize> = (0..n).map(|v| dest[ranks[v]].expect("descent slot flagged")).collect();

    let layout = Layout::from_positions(LayoutKind::LightFirst, sim.placement().kind, pos)?;
    if layout.positions() != light_first_positions(t).as_slice() {
        return Err(Error::Consistency("simulated layout differs from direct construction".into()));
    }
    Ok((layout, sim.report().since(&start)))
}

/// Whether children of every vertex occupy consecutive blocks right after it,
/// in nondecreasing size order.
pub fn verify_light_first(t: &RootedTree, sizes: &[usize], layout: &Layout) -> bool {
    if layout.n() != t.n() || sizes.len() != t.n() {
        return false;
    }
    for v in 0..t.n() {
        let mut kids = t.children(v).to_vec();
        kids.sort_by_key(|&c| layout.pos(c));
        let mut next = layout.pos(v) + 1;
        let mut prev_size = 0;
        for c in kids {
            if layout.pos(c) != next || sizes[c] < prev_size {
                return false;
            }
            next += sizes[c];
            prev_size = sizes[c];
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborStats {
    pub mean: f64,
    pub max: u64,
}

/// Mean and maximum grid distance between parent and child over all edges.
pub fn neighbor_distance_stats(layout: &Layout, t: &RootedTree) -> NeighborStats {
    let mut total = 0u64;
    let mut max = 0u64;
    for v in 0..t.n() {
        if let Some(p) = t.parent(v) {
            let d = layout.distance(p, v);
            total += d;
            max = max.max(d);
        }
    }
    let edges = t.n().saturating_sub(1);
    let mean = if edges == 0 { 0.0 } else { total as f64 / edges as f64 };
    NeighborStats { mean, max }
}

/// Exhaustively checks that `sum_i (delta + i) * sqrt(s_i)` over nondecreasing
/// `s_1 <= .. <= s_delta` summing to `n` is smallest when `s_delta = n`.
pub fn lemma_minimized_check(n: usize, delta: usize) -> bool {
    if delta == 0 {
        return n == 0;
    }
    let cost =
        |s: &[usize]| -> f64 { s.iter().enumerate().map(|(i, &si)| (delta + i + 1) as f64 * (si as f64).sqrt()).sum() };
    let mut target = vec![0; delta];
    target[delta - 1] = n;
    let best = cost(&target);
    let mut ok = true;
    let mut s = Vec::with_capacity(delta);
    fn walk(s: &mut Vec<usize>, left: usize, min: usize, delta: usize, f: &mut dyn FnMut(&[usize])) {
        if s.len() + 1 == delta {
            if left >= min {
                s.push(left);
                f(s);
                s.pop();
            }
            return;
        }
        let slots = delta - s.len();
        for x in min..=left / slots {
            s.push(x);
            walk(s, left - x, x, delta, f);
            s.pop();
        }
    }
    walk(&mut s, n, 0, delta, &mut |c| ok &= cost(c) >= best - 1e-9);
    ok
}

/// `b sqrt(y) <= a sqrt(x) + b sqrt(y - x)` for `b/2 <= a <= b`, `0 <= 2x <= y`.
pub fn split_sqrt_inequality(a: f64, b: f64, x: f64, y: f64) -> bool {
    let lhs = b * y.sqrt();
    let rhs = a * x.sqrt() + b * (y - x).sqrt();
    lhs <= rhs + 1e-9 * lhs.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{figure_tree, gen_tree, TreeKind};

    #[test]
    fn figure_tree_labels_are_light_first() {
        let f = figure_tree();
        assert_eq!(light_first_positions(&f), (0..8).collect::<Vec<_>>());
        let mut s = SimState::new(CurveKind::Hilbert, 15);
        let (l, cost) = build_light_first(&mut s, &f, 1).unwrap();
        assert_eq!(l.positions(), (0..8).collect::<Vec<_>>().as_slice());
        assert!(cost.energy > 0);
        let sizes = subtree_sizes_bruteforce(&f);
        assert!(verify_light_first(&f, &sizes, &l));
    }

    #[test]
    fn single_vertex() {
        let t = gen_tree(TreeKind::Path, 1, 0).unwrap();
        let mut s = SimState::new(CurveKind::ZOrder, 1);
        let (l, _) = build_light_first(&mut s, &t, 0).unwrap();
        assert_eq!(l.pos(0), 0);
    }

    #[test]
    fn perfect_binary_ties_keep_stored_order() {
        let t = gen_tree(TreeKind::PerfectBinary, 7, 0).unwrap();
        assert_eq!(light_first_positions(&t), [0, 1, 4, 2, 3, 5, 6]);
    }

    #[test]
    fn baselines() {
        let p = gen_tree(TreeKind::Path, 3, 0).unwrap();
        for kind in [LayoutKind::Bfs, LayoutKind::Dfs] {
            assert_eq!(build_baseline(&p, kind, CurveKind::Hilbert).unwrap().positions(), [0, 1, 2]);
        }
        let s = gen_tree(TreeKind::Star, 4, 0).unwrap();
        assert_eq!(build_baseline(&s, LayoutKind::Bfs, CurveKind::Hilbert).unwrap().positions(), [0, 1, 2, 3]);
        assert!(build_baseline(&s, LayoutKind::LightFirst, CurveKind::Hilbert).is_err());
    }

    #[test]
    fn verification() {
        let f = figure_tree();
        let sizes = subtree_sizes_bruteforce(&f);
        let id = Layout::from_positions(LayoutKind::LightFirst, CurveKind::Hilbert, (0..8).collect()).unwrap();
        assert!(verify_light_first(&f, &sizes, &id));
        let star = gen_tree(TreeKind::Star, 4, 0).unwrap();
        let star_sizes = subtree_sizes_bruteforce(&star);
        let l = Layout::from_positions(LayoutKind::LightFirst, CurveKind::Hilbert, vec![0, 3, 1, 2]).unwrap();
        assert!(verify_light_first(&star, &star_sizes, &l));
        let p = gen_tree(TreeKind::Path, 3, 0).unwrap();
        let l = Layout::from_positions(LayoutKind::LightFirst, CurveKind::Hilbert, vec![0, 2, 1]).unwrap();
        assert!(!verify_light_first(&p, &subtree_sizes_bruteforce(&p), &l));
        assert!(Layout::from_positions(LayoutKind::Bfs, CurveKind::Hilbert, vec![0, 0]).is_err());
    }

    #[test]
    fn neighbor_stats_and_dump() {
        let p = gen_tree(TreeKind::Path, 2, 0).unwrap();
        let l = Layout::from_positions(LayoutKind::Dfs, CurveKind::Hilbert, vec![0, 1]).unwrap();
        let st = neighbor_distance_stats(&l, &p);
        assert_eq!((st.mean, st.max), (1.0, 1));
        assert_eq!(l.dump(), "0 0 0 0\n1 1 1 0\n");
    }

    #[test]
    fn composition_check_examples() {
        assert!(lemma_minimized_check(1, 2));
        assert!(lemma_minimized_check(6, 2));
        assert!(lemma_minimized_check(24, 4));
        assert!(split_sqrt_inequality(1.0, 1.0, 1.0, 2.0));
    }
}
