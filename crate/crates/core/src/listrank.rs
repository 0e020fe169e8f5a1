//! Euler tours and randomized list ranking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Lcg64;
use crate::sim::SimState;
use crate::tree::RootedTree;

/// Vertex sequence of the edge-doubling tour, with first and last
/// occurrence of every vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EulerTour {
    pub seq: Vec<usize>,
    pub first: Vec<usize>,
    pub last: Vec<usize>,
}

/// Sequential tour visiting children in stored order.
pub fn euler_tour(t: &RootedTree) -> EulerTour {
    let n = t.n();
    let mut seq = Vec::with_capacity(2 * n - 1);
    let mut first = vec![0; n];
    let mut last = vec![0; n];
    // (vertex, index of next child to visit)
    let mut stack = vec![(t.root(), 0usize)];
    first[t.root()] = 0;
    seq.push(t.root());
    while let Some(&mut (v, ref mut next)) = stack.last_mut() {
        if let Some(&c) = t.children(v).get(*next) {
            *next += 1;
            first[c] = seq.len();
            seq.push(c);
            stack.push((c, 0));
        } else {
            last[v] = seq.len() - 1;
            stack.pop();
            if let Some(&(p, _)) = stack.last() {
                seq.push(p);
            }
        }
    }
    EulerTour { seq, first, last }
}

/// Singly linked list. Element `x` lives at simulator position `pos[x]`;
/// several elements may share a position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkedList {
    pub succ: Vec<Option<usize>>,
    pub pos: Vec<usize>,
}

impl LinkedList {
    /// List whose element `x` sits at position `x`.
    pub fn new(succ: Vec<Option<usize>>) -> Self {
        let pos = (0..succ.len()).collect();
        LinkedList { succ, pos }
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    /// Predecessors, or a structural error if the links do not form a single
    /// chain over all elements.
    pub fn predecessors(&self) -> Result<Vec<Option<usize>>> {
        let n = self.len();
        let mut pred = vec![None; n];
        for (x, s) in self.succ.iter().enumerate() {
            if let Some(s) = *s {
                if s >= n {
                    return Err(Error::Structure(format!("successor {s} of {x} out of range")));
                }
                if pred[s].replace(x).is_some() {
                    return Err(Error::Structure(format!("element {s} has two predecessors")));
                }
            }
        }
        let heads: Vec<usize> = (0..n).filter(|&x| pred[x].is_none()).collect();
        if heads.len() != 1 {
            return Err(Error::Structure(format!("expected one head, found {}", heads.len())));
        }
        let mut seen = 1;
        let mut x = heads[0];
        while let Some(s) = self.succ[x] {
            seen += 1;
            x = s;
        }
        if seen != n {
            return Err(Error::Structure("links contain a cycle".into()));
        }
        Ok(pred)
    }

    /// Sequential ranks.
    pub fn ranks_sequential(&self) -> Result<Vec<usize>> {
        let pred = self.predecessors()?;
        let mut rank = vec![0; self.len()];
        let mut x = pred.iter().position(Option::is_none).expect("validated head");
        let mut r = 0;
        loop {
            rank[x] = r;
            r += 1;
            match self.succ[x] {
                Some(s) => x = s,
                None => break,
            }
        }
        Ok(rank)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationStats {
    pub live: usize,
    pub removed: usize,
    pub messages: u64,
    pub energy: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListRankOutcome {
    pub ranks: Vec<usize>,
    pub iterations: Vec<IterationStats>,
}

/// Size at which the remaining list is ranked by walking it.
pub fn base_case_threshold(n: usize) -> usize {
    let log = usize::BITS - n.saturating_sub(1).leading_zeros();
    (log as usize).max(4)
}

struct Removal {
    iteration: usize,
    element: usize,
    pred: usize,
    offset: usize,
}

/// Ranks every element (distance from the head) by random-mate contraction
/// on the simulator.
pub fn list_rank(sim: &mut SimState, list: &LinkedList, seed: u64) -> Result<ListRankOutcome> {
    let n = list.len();
    if n == 0 {
        return Ok(ListRankOutcome { ranks: Vec::new(), iterations: Vec::new() });
    }
    if let Some(&p) = list.pos.iter().find(|&&p| p >= sim.n()) {
        return Err(Error::Argument(format!("element position {p} outside simulator")));
    }
    let pos = &list.pos;
    let mut pred = list.predecessors()?;
    sim.round(|s| {
        for (x, nx) in list.succ.iter().enumerate() {
            if let Some(nx) = *nx {
                s.msg(pos[x], pos[nx]);
            }
        }
    });
    let mut succ = list.succ.clone();
    let mut weight = vec![1usize; n];
    let mut live: Vec<usize> = (0..n).collect();
    let mut removals: Vec<Removal> = Vec::new();
    let mut stats = Vec::new();
    let threshold = base_case_threshold(n);
    let mut rng = Lcg64::new(seed);
    let mut coin = vec![false; n];
    let mut in_s = vec![false; n];

    while live.len() > threshold {
        let before = sim.report();
        let iteration = stats.len();
        for &x in &live {
            coin[x] = rng.coin();
        }
        // Coins travel to predecessors so every element sees its successor's.
        sim.round(|s| {
            for &x in &live {
                if let Some(p) = pred[x] {
                    s.msg(pos[x], pos[p]);
                }
            }
        });
        for &x in &live {
            in_s[x] = coin[x] && pred[x].is_some() && succ[x].is_some_and(|s| !coin[s]);
        }
        sim.round(|s| {
            for &x in &live {
                if !in_s[x] {
                    continue;
                }
                let p = pred[x].expect("selected elements have a predecessor");
                s.msg(pos[x], pos[p]);
                let nx = succ[x].expect("selected elements have a successor");
                s.msg(pos[x], pos[nx]);
                removals.push(Removal { iteration, element: x, pred: p, offset: weight[p] });
                succ[p] = Some(nx);
                pred[nx] = Some(p);
                weight[p] += weight[x];
            }
        });
        let live_before = live.len();
        live.retain(|&x| !in_s[x]);
        for x in in_s.iter_mut() {
            *x = false;
        }
        let d = sim.report().since(&before);
        stats.push(IterationStats {
            live: live_before,
            removed: live_before - live.len(),
            messages: d.messages,
            energy: d.energy,
        });
    }

    let mut rank = vec![0usize; n];
    let mut x = *live.iter().find(|&&x| pred[x].is_none()).expect("head never leaves");
    while let Some(nx) = succ[x] {
        sim.send(pos[x], pos[nx])?;
        rank[nx] = rank[x] + weight[x];
        x = nx;
    }

    let mut i = removals.len();
    while i > 0 {
        let iteration = removals[i - 1].iteration;
        let mut j = i;
        while j > 0 && removals[j - 1].iteration == iteration {
            j -= 1;
        }
        let batch = &removals[j..i];
        sim.round(|s| {
            for r in batch {
                s.msg(pos[r.element], pos[r.pred]);
            }
        });
        sim.round(|s| {
            for r in batch {
                s.msg(pos[r.pred], pos[r.element]);
                rank[r.element] = rank[r.pred] + r.offset;
            }
        });
        i = j;
    }
    Ok(ListRankOutcome { ranks: rank, iterations: stats })
}

/// Tour slots as a linked list: element `v < n` is the descent into `v`
/// (at position `v`); element `n + j` is the return from the `j`-th non-root
/// vertex to its parent (at position `n + j`).
pub fn tour_list(t: &RootedTree) -> LinkedList {
    let n = t.n();
    let root = t.root();
    let up = |c: usize| n + c - usize::from(c > root);
    let mut succ = vec![None; 2 * n - 1];
    for v in 0..n {
        let kids = t.children(v);
        succ[v] = match kids.first() {
            Some(&c) => Some(c),
            None => (v != root).then(|| up(v)),
        };
        for (i, &c) in kids.iter().enumerate() {
            succ[up(c)] = match kids.get(i + 1) {
                Some(&next) => Some(next),
                None => (v != root).then(|| up(v)),
            };
        }
    }
    LinkedList::new(succ)
}

/// Vertex visited by each tour slot.
pub fn tour_slot_vertex(t: &RootedTree, slot: usize) -> usize {
    let n = t.n();
    if slot < n {
        return slot;
    }
    let j = slot - n;
    let c = if j < t.root() { j } else { j + 1 };
    t.parent(c).expect("non-root")
}

/// Subtree sizes from the ranks of first and last tour occurrences.
pub fn subtree_sizes_via_tour(sim: &mut SimState, t: &RootedTree, seed: u64) -> Result<Vec<usize>> {
    let n = t.n();
    let slots = 2 * n - 1;
    if sim.n() < slots {
        return Err(Error::Argument(format!("{} positions cannot hold {slots} tour slots", sim.n())));
    }
    let list = tour_list(t);
    let root = t.root();
    let up = |c: usize| n + c - usize::from(c > root);
    // Every non-root vertex sets up its return slot.
    sim.round(|s| {
        for c in (0..n).filter(|&c| c != root) {
            s.msg(c, up(c));
        }
    });
    let ranks = list_rank(sim, &list, seed)?.ranks;
    // The descent slot is a vertex's first occurrence; the return from its
    // last child is its last occurrence.
    let mut last_slot: Vec<usize> = (0..n).collect();
    let mut flags = vec![false; slots];
    for v in 0..n {
        flags[v] = true;
        if let Some(&c) = t.children(v).last() {
            last_slot[v] = up(c);
            flags[up(c)] = true;
        }
    }
    let (dest, _) = sim.compact(&flags)?;
    sim.round(|s| {
        for v in 0..n {
            s.msg(dest[v].expect("flagged"), v);
            if last_slot[v] != v {
                s.msg(dest[last_slot[v]].expect("flagged"), v);
            }
        }
    });
    Ok((0..n).map(|v| (ranks[last_slot[v]] - ranks[v]) / 2 + 1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::CurveKind;
    use crate::tree::{figure_tree, gen_tree, TreeKind};

    #[test]
    fn tours() {
        let single = gen_tree(TreeKind::Path, 1, 0).unwrap();
        assert_eq!(euler_tour(&single).seq, [0]);
        let p = gen_tree(TreeKind::Path, 3, 0).unwrap();
        let e = euler_tour(&p);
        assert_eq!(e.seq, [0, 1, 2, 1, 0]);
        assert_eq!((e.first, e.last), (vec![0, 1, 2], vec![4, 3, 2]));
        let f = figure_tree();
        assert_eq!(euler_tour(&f).seq[..7], [0, 1, 2, 1, 3, 1, 0]);
    }

    #[test]
    fn tour_list_matches_tour() {
        let t = gen_tree(TreeKind::RandomAttachment, 40, 5).unwrap();
        let list = tour_list(&t);
        let ranks = list.ranks_sequential().unwrap();
        let mut seq = vec![0; list.len()];
        for (slot, &r) in ranks.iter().enumerate() {
            seq[r] = tour_slot_vertex(&t, slot);
        }
        assert_eq!(seq, euler_tour(&t).seq);
    }

    #[test]
    fn small_chains() {
        let mut s = SimState::new(CurveKind::Hilbert, 8);
        let one = list_rank(&mut s, &LinkedList::new(vec![None]), 1).unwrap();
        assert_eq!(one.ranks, [0]);
        let chain = LinkedList::new(vec![Some(1), Some(2), Some(3), Some(4), None]);
        assert_eq!(list_rank(&mut s, &chain, 1).unwrap().ranks, [0, 1, 2, 3, 4]);
    }

    #[test]
    fn contraction_path_is_exercised() {
        let n = 300;
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = Lcg64::new(11);
        for i in (1..n).rev() {
            order.swap(i, rng.below(i + 1));
        }
        let mut succ = vec![None; n];
        for w in order.windows(2) {
            succ[w[0]] = Some(w[1]);
        }
        let list = LinkedList::new(succ);
        let mut s = SimState::new(CurveKind::ZOrder, n);
        let out = list_rank(&mut s, &list, 3).unwrap();
        assert_eq!(out.ranks, list.ranks_sequential().unwrap());
        assert!(!out.iterations.is_empty());
        assert!(out.iterations.iter().all(|it| it.messages <= 4 * it.live as u64));
    }

    #[test]
    fn malformed_lists() {
        let mut s = SimState::new(CurveKind::Hilbert, 4);
        let cycle = LinkedList::new(vec![Some(1), Some(0), None]);
        assert!(matches!(list_rank(&mut s, &cycle, 0), Err(Error::Structure(_))));
        let fork = LinkedList::new(vec![Some(2), Some(2), None]);
        assert!(matches!(list_rank(&mut s, &fork, 0), Err(Error::Structure(_))));
    }

    #[test]
    fn sizes_from_tour() {
        let p = gen_tree(TreeKind::Path, 3, 0).unwrap();
        let mut s = SimState::new(CurveKind::Hilbert, 5);
        assert_eq!(subtree_sizes_via_tour(&mut s, &p, 0).unwrap(), [3, 2, 1]);
        let f = figure_tree();
        let mut s = SimState::new(CurveKind::Hilbert, 15);
        assert_eq!(subtree_sizes_via_tour(&mut s, &f, 0).unwrap(), [8, 3, 1, 1, 4, 1, 2, 1]);
    }
}
