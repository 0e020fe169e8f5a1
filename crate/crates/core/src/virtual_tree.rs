//! Degree-bounded relay tree for vertices with many children.
//!
//! Children `c_1..c_d` of a vertex (in position order) are split into
//! segments. A segment `[lo..hi]` is headed by `c_lo`; the rest of it,
//! `c_{lo+1}..c_hi`, hangs below the head as two sub-segments
//! `[lo+1..lo+h]` and `[lo+h+1..hi]` with `h = (hi - lo) / 2`. At the top,
//! `[1..d/2]` and `[d/2+1..d]` hang directly below the parent. Heads of the
//! top segments are the parent's *current* children `C`, sub-segment heads
//! are a head's *appended* children `A`. Every vertex has at most two of each
//! and positions never change.

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::sim::{CostReport, SimState};
use crate::tree::RootedTree;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualTree {
    pub current: Vec<Vec<usize>>,
    pub appended: Vec<Vec<usize>>,
    pub vparent: Vec<Option<usize>>,
    parent: Vec<Option<usize>>,
    /// Vertices grouped by how many appended links separate them from their
    /// original parent's current children (0 for current children).
    relay_depth: Vec<Vec<usize>>,
    /// Vertices grouped by the height of the appended subtree below them.
    relay_height: Vec<Vec<usize>>,
}

/// Children of `v` ordered by position.
pub fn children_by_position(t: &RootedTree, layout: &Layout, v: usize) -> Vec<usize> {
    let mut kids = t.children(v).to_vec();
    kids.sort_by_key(|&c| layout.pos(c));
    kids
}

/// Sub-segments below the head of `[lo..hi]` (1-based, inclusive), as
/// `(lo, hi)` pairs; empty ones are omitted.
fn sub_segments(lo: usize, hi: usize) -> impl Iterator<Item = (usize, usize)> {
    let h = (hi - lo) / 2;
    [(lo + 1, lo + h), (lo + h + 1, hi)].into_iter().filter(|&(a, b)| a <= b)
}

fn top_segments(d: usize) -> impl Iterator<Item = (usize, usize)> {
    let h = d / 2;
    [(1, h), (h + 1, d)].into_iter().filter(|&(a, b)| a <= b)
}

impl VirtualTree {
    fn from_links(parent: Vec<Option<usize>>, current: Vec<Vec<usize>>, appended: Vec<Vec<usize>>) -> Self {
        let n = parent.len();
        let mut vparent = vec![None; n];
        for v in 0..n {
            for &c in current[v].iter().chain(&appended[v]) {
                vparent[c] = Some(v);
            }
        }
        let mut depth = vec![0usize; n];
        let mut relay_depth: Vec<Vec<usize>> = Vec::new();
        let mut frontier: Vec<usize> = current.iter().flatten().copied().collect();
        let mut level = 0;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &x in &frontier {
                depth[x] = level;
                next.extend_from_slice(&appended[x]);
            }
            relay_depth.push(std::mem::take(&mut frontier));
            frontier = next;
            level += 1;
        }
        let mut height = vec![0usize; n];
        for lvl in relay_depth.iter().rev() {
            for &x in lvl {
                height[x] = appended[x].iter().map(|&a| height[a] + 1).max().unwrap_or(0);
            }
        }
        let mut relay_height: Vec<Vec<usize>> = Vec::new();
        for lvl in &relay_depth {
            for &x in lvl {
                if relay_height.len() <= height[x] {
                    relay_height.resize(height[x] + 1, Vec::new());
                }
                relay_height[height[x]].push(x);
            }
        }
        VirtualTree { current, appended, vparent, parent, relay_depth, relay_height }
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    /// Original parent.
    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    /// Number of messages `v` sends in one broadcast.
    pub fn out_degree(&self, v: usize) -> usize {
        self.current[v].len() + self.appended[v].len()
    }

    pub fn max_out_degree(&self) -> usize {
        (0..self.n()).map(|v| self.out_degree(v)).max().unwrap_or(0)
    }

    /// Largest degree in the relay tree, counting the link to the relay parent.
    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|v| self.out_degree(v) + usize::from(self.vparent[v].is_some())).max().unwrap_or(0)
    }

    /// Number of relay levels below current children.
    pub fn relay_levels(&self) -> usize {
        self.relay_depth.len()
    }
}

/// Direct construction from the global child lists.
pub fn transform(t: &RootedTree, layout: &Layout) -> VirtualTree {
    let n = t.n();
    let mut current = vec![Vec::new(); n];
    let mut appended = vec![Vec::new(); n];
    let mut stack = Vec::new();
    for (v, cur) in current.iter_mut().enumerate() {
        let kids = children_by_position(t, layout, v);
        let c = |i: usize| kids[i - 1];
        for (lo, hi) in top_segments(kids.len()) {
            cur.push(c(lo));
            stack.push((lo, hi));
        }
        while let Some((lo, hi)) = stack.pop() {
            for (a, b) in sub_segments(lo, hi) {
                appended[c(lo)].push(c(a));
                stack.push((a, b));
            }
        }
    }
    VirtualTree::from_links(t.parents().to_vec(), current, appended)
}

/// Builds the relay tree by message passing. Each child initially knows only
/// its index among its siblings, the sibling count, and references to its
/// parent and adjacent siblings; each vertex knows its first child. The
/// reference to the second head below a segment head travels up from the end
/// of the first sub-segment, which knows it as its right sibling.
pub fn build_refs_protocol(sim: &mut SimState, t: &RootedTree, layout: &Layout) -> Result<(VirtualTree, CostReport)> {
    let n = t.n();
    let start = sim.report();
    let pos = |v: usize| layout.pos(v);

    // Per-vertex local knowledge.
    let mut index = vec![0usize; n];
    let mut sibs = vec![0usize; n];
    let mut left = vec![None; n];
    let mut right = vec![None; n];
    let mut first_child = vec![None; n];
    for (v, first) in first_child.iter_mut().enumerate() {
        let kids = children_by_position(t, layout, v);
        *first = kids.first().copied();
        for (i, &c) in kids.iter().enumerate() {
            index[c] = i + 1;
            sibs[c] = kids.len();
            left[c] = i.checked_sub(1).map(|j| kids[j]);
            right[c] = kids.get(i + 1).copied();
        }
    }

    // Segments whose head is each vertex, derived from (index, sibling count)
    // alone: `seg_end[x]` is the last index of the segment headed by x.
    let mut seg_end = vec![0usize; n];
    let mut seg_height = vec![0usize; n];
    for v in 0..n {
        let d = t.degree(v);
        let mut ends = vec![0usize; d + 1];
        let mut heights = vec![0usize; d + 1];
        let mut order = Vec::new();
        let mut stack: Vec<(usize, usize)> = top_segments(d).collect();
        while let Some((lo, hi)) = stack.pop() {
            ends[lo] = hi;
            order.push((lo, hi));
            stack.extend(sub_segments(lo, hi));
        }
        for &(lo, hi) in order.iter().rev() {
            heights[lo] = sub_segments(lo, hi).map(|(a, _)| heights[a] + 1).max().unwrap_or(0);
        }
        for c in t.children(v) {
            seg_end[*c] = ends[index[*c]];
            seg_height[*c] = heights[index[*c]];
        }
    }

    // `beyond[x]`: reference to the sibling right after the end of x's
    // segment, learned bottom-up. Singleton segments know it locally.
    let mut beyond: Vec<Option<Option<usize>>> =
        (0..n).map(|x| (t.parent(x).is_some() && seg_end[x] == index[x]).then_some(right[x])).collect();
    let mut appended = vec![Vec::new(); n];
    let max_height = seg_height.iter().copied().max().unwrap_or(0);
    for h in 1..=max_height {
        let heads: Vec<usize> = (0..n).filter(|&x| t.parent(x).is_some() && seg_height[x] == h).collect();
        // The first sub-head is the head's right sibling; it reports the
        // reference to the second sub-head.
        let mut second = vec![None; n];
        sim.round(|s| {
            for &x in &heads {
                let a1 = right[x].expect("segment longer than one");
                let (lo, hi) = (index[x], seg_end[x]);
                if (hi - lo) / 2 >= 1 {
                    s.msg(pos(a1), pos(x));
                    second[x] = beyond[a1].expect("lower segment resolved");
                } else {
                    second[x] = Some(a1);
                }
            }
        });
        sim.round(|s| {
            for &x in &heads {
                s.msg(pos(x), pos(second[x].expect("second head exists")));
            }
        });
        sim.round(|s| {
            for &x in &heads {
                let a2 = second[x].expect("second head exists");
                s.msg(pos(a2), pos(x));
                beyond[x] = Some(beyond[a2].expect("lower segment resolved"));
                let a1 = right[x].expect("segment longer than one");
                if (seg_end[x] - index[x]) / 2 >= 1 {
                    appended[x].push(a1);
                }
                appended[x].push(a2);
            }
        });
    }
    let mut current = vec![Vec::new(); n];
    sim.round(|s| {
        for v in 0..n {
            let Some(c1) = first_child[v] else { continue };
            let d = t.degree(v);
            if d / 2 >= 1 {
                s.msg(pos(c1), pos(v));
                current[v].push(c1);
                current[v].push(beyond[c1].expect("resolved").expect("second top segment exists"));
            } else {
                current[v].push(c1);
            }
        }
    });
    let vt = VirtualTree::from_links(t.parents().to_vec(), current, appended);
    if vt != transform(t, layout) {
        return Err(Error::Consistency("relay tree from messages differs from direct construction".into()));
    }
    Ok((vt, sim.report().since(&start)))
}

/// Every vertex with `Some` message sends it to all of its children. Returns,
/// for every vertex, the message of its original parent.
pub fn local_broadcast<T: Clone>(
    sim: &mut SimState,
    vt: &VirtualTree,
    layout: &Layout,
    msgs: &[Option<T>],
) -> (Vec<Option<T>>, CostReport) {
    let start = sim.report();
    let n = vt.n();
    let mut got: Vec<Option<T>> = vec![None; n];
    for level in &vt.relay_depth {
        sim.round(|s| {
            for &x in level {
                let src = vt.vparent[x].expect("relay parent");
                let m = match vt.parent[x] {
                    Some(p) if p == src => msgs[p].clone(),
                    _ => got[src].clone(),
                };
                if let Some(m) = m {
                    s.msg(layout.pos(src), layout.pos(x));
                    got[x] = Some(m);
                }
            }
        });
    }
    (got, sim.report().since(&start))
}

/// Every vertex with `receivers[v]` gets the left-to-right fold of its
/// children's `values`, or `identity` when it has none.
pub fn local_reduce<T: Clone>(
    sim: &mut SimState,
    vt: &VirtualTree,
    layout: &Layout,
    values: &[T],
    receivers: &[bool],
    identity: T,
    mut op: impl FnMut(&T, &T) -> T,
) -> (Vec<T>, CostReport) {
    let start = sim.report();
    let n = vt.n();
    let mut agg: Vec<Option<T>> = vec![None; n];
    for level in &vt.relay_height {
        sim.round(|s| {
            for &x in level {
                let p = vt.parent[x].expect("children have parents");
                if !receivers[p] {
                    continue;
                }
                let mut acc = values[x].clone();
                for &a in &vt.appended[x] {
                    acc = op(&acc, agg[a].as_ref().expect("lower relay level"));
                }
                s.msg(layout.pos(x), layout.pos(vt.vparent[x].expect("relay parent")));
                agg[x] = Some(acc);
            }
        });
    }
    let out = (0..n)
        .map(|v| {
            let mut acc = identity.clone();
            if receivers[v] {
                for &c in &vt.current[v] {
                    acc = op(&acc, agg[c].as_ref().expect("current child reported"));
                }
            }
            acc
        })
        .collect();
    (out, sim.report().since(&start))
}
