//! Subtree sums and root-path sums by rake/compress contraction.
//!
//! Contraction merges vertices into supervertices, each named by its topmost
//! vertex (its representative). Every representative keeps the partial sum
//! `P` of the values it has absorbed and a single link `top` to the last
//! operation it performed; the operation before that is parked in the vertex
//! that was absorbed, so the history is a linked stack with O(1) words per
//! vertex. Phases are numbered `2r` (compress) and `2r + 1` (rake) for round
//! `r`, and are undone in descending order.
//!
//! A supervertex with two or more children is always a single vertex, so its
//! children are exactly its active original children and can be reached
//! through the relay tree. A supervertex with one child addresses it
//! directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::rng::Lcg64;
use crate::sim::{CostReport, SimState};
use crate::tree::RootedTree;
use crate::virtual_tree::{build_refs_protocol, local_broadcast, local_reduce, VirtualTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Sum over each subtree.
    BottomUp,
    /// Sum along each root path.
    TopDown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpKind {
    Compress {
        absorbed: usize,
    },
    /// `kept` is the child that stayed; `direct` is the single raked leaf when
    /// the parent addressed it directly.
    Rake {
        kept: Option<usize>,
        direct: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LastOp {
    pub kind: OpKind,
    pub phase: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupervertexState {
    pub val: i64,
    pub p: i64,
    /// Sum over the chain of vertices merged by compression, excluding
    /// raked leaves.
    pub spine: i64,
    pub a: i64,
    pub active: bool,
    pub parent_rep: Option<usize>,
    pub child_count: usize,
    /// The only child, when there is exactly one.
    pub child_ref: Option<usize>,
    pub top: Option<LastOp>,
    /// Operation stack link parked here by the operation that removed this
    /// vertex.
    pub saved: Option<LastOp>,
    /// Phase in which this vertex was removed.
    pub tag: Option<usize>,
}

impl SupervertexState {
    /// Live words, counting a stored operation as two.
    pub fn words(&self) -> usize {
        let op = |o: &Option<LastOp>| o.map_or(0, |_| 2);
        7 + usize::from(self.parent_rep.is_some())
            + usize::from(self.child_ref.is_some())
            + usize::from(self.tag.is_some())
            + op(&self.top)
            + op(&self.saved)
    }
}

/// Observable shape of one vertex: active flag, partial sum, parent
/// representative, child count.
pub type StructureRow = (bool, i64, Option<usize>, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contraction {
    pub states: Vec<SupervertexState>,
}

fn contract_err<T>(msg: String) -> Result<T> {
    Err(Error::Contract(msg))
}

impl Contraction {
    pub fn new(t: &RootedTree, values: &[i64]) -> Result<Self> {
        if values.len() != t.n() {
            return Err(Error::Argument(format!("{} values for {} vertices", values.len(), t.n())));
        }
        let states = (0..t.n())
            .map(|v| SupervertexState {
                val: values[v],
                p: values[v],
                spine: values[v],
                a: 0,
                active: true,
                parent_rep: t.parent(v),
                child_count: t.degree(v),
                child_ref: (t.degree(v) == 1).then(|| t.children(v)[0]),
                top: None,
                saved: None,
                tag: None,
            })
            .collect();
        Ok(Contraction { states })
    }

    pub fn active_sum(&self) -> i64 {
        self.states.iter().filter(|s| s.active).map(|s| s.p).sum()
    }

    pub fn active_count(&self) -> usize {
        self.states.iter().filter(|s| s.active).count()
    }

    pub fn structure(&self) -> Vec<StructureRow> {
        self.states.iter().map(|s| (s.active, s.p, s.parent_rep, s.child_count)).collect()
    }

    /// Merges `v`, the only child of `u`, into `u`; `v` must have exactly one
    /// child.
    pub fn compress(&mut self, u: usize, v: usize, phase: usize) -> Result<()> {
        let (su, sv) = (&self.states[u], &self.states[v]);
        if !su.active || !sv.active || sv.parent_rep != Some(u) {
            return contract_err(format!("{v} is not an active child of active {u}"));
        }
        if su.child_count != 1 {
            return contract_err(format!("{u} has {} children", su.child_count));
        }
        if sv.child_count != 1 {
            return contract_err(format!("{v} has {} children", sv.child_count));
        }
        let w = sv.child_ref.expect("single child is referenced");
        let (pv, qv, top_u) = (sv.p, sv.spine, su.top);
        let sv = &mut self.states[v];
        sv.active = false;
        sv.saved = top_u;
        sv.tag = Some(phase);
        let su = &mut self.states[u];
        su.p += pv;
        su.spine += qv;
        su.child_ref = Some(w);
        su.top = Some(LastOp { kind: OpKind::Compress { absorbed: v }, phase });
        self.states[w].parent_rep = Some(u);
        Ok(())
    }

    /// Absorbs the leaf children `leaves` into `u`, which keeps at most one
    /// other child `kept`.
    pub fn rake(&mut self, u: usize, leaves: &[usize], kept: Option<usize>, phase: usize) -> Result<()> {
        let su = &self.states[u];
        if !su.active {
            return contract_err(format!("{u} is inactive"));
        }
        if leaves.is_empty() {
            return contract_err(format!("empty rake at {u}"));
        }
        let remaining = su.child_count.checked_sub(leaves.len());
        let Some(remaining) = remaining.filter(|&r| r <= 1) else {
            return contract_err(format!("{u} keeps more than one child"));
        };
        for (i, &x) in leaves.iter().enumerate() {
            let sx = &self.states[x];
            if !sx.active || sx.parent_rep != Some(u) || sx.child_count != 0 || leaves[..i].contains(&x) {
                return contract_err(format!("{x} is not a distinct active leaf child of {u}"));
            }
        }
        match kept {
            Some(k) if remaining == 1 => {
                let sk = &self.states[k];
                if !sk.active || sk.parent_rep != Some(u) || leaves.contains(&k) {
                    return contract_err(format!("{k} cannot be the kept child of {u}"));
                }
            }
            None if remaining == 0 => {}
            _ => return contract_err(format!("kept child of {u} does not match {remaining} remaining")),
        }
        let direct = (su.child_count == 1).then(|| leaves[0]);
        let top_u = su.top;
        let mut s = 0;
        for &x in leaves {
            let sx = &mut self.states[x];
            s += sx.p;
            sx.active = false;
            sx.saved = top_u;
            sx.tag = Some(phase);
        }
        let su = &mut self.states[u];
        su.p += s;
        su.child_count = remaining;
        su.child_ref = kept;
        su.top = Some(LastOp { kind: OpKind::Rake { kept, direct }, phase });
        Ok(())
    }

    /// Splits off the vertex absorbed by `u`'s last operation, a compress.
    pub fn undo_compress(&mut self, u: usize, dir: Direction) -> Result<usize> {
        let Some(LastOp { kind: OpKind::Compress { absorbed: v }, .. }) = self.states[u].top else {
            return contract_err(format!("last operation of {u} is not a compress"));
        };
        let (au, qu) = (self.states[u].a, self.states[u].spine);
        let (pv, qv) = (self.states[v].p, self.states[v].spine);
        let sv = &mut self.states[v];
        sv.a = match dir {
            Direction::BottomUp => au,
            Direction::TopDown => au + qu - qv,
        };
        sv.active = true;
        sv.tag = None;
        let saved = sv.saved.take();
        let w = sv.child_ref;
        let su = &mut self.states[u];
        if dir == Direction::BottomUp {
            su.a += pv;
        }
        su.p -= pv;
        su.spine -= qv;
        su.top = saved;
        su.child_ref = Some(v);
        if let Some(w) = w {
            self.states[w].parent_rep = Some(v);
        }
        Ok(v)
    }

    /// Restores the leaves raked by `u`'s last operation, a rake.
    pub fn undo_rake(&mut self, u: usize, leaves: &[usize], dir: Direction) -> Result<()> {
        let Some(LastOp { kind: OpKind::Rake { .. }, phase }) = self.states[u].top else {
            return contract_err(format!("last operation of {u} is not a rake"));
        };
        if leaves.is_empty() || leaves.iter().any(|&x| self.states[x].tag != Some(phase)) {
            return contract_err(format!("leaves do not match the rake of {u} in phase {phase}"));
        }
        let s: i64 = leaves.iter().map(|&x| self.states[x].p).sum();
        let (au, qu) = (self.states[u].a, self.states[u].spine);
        let saved = self.states[leaves[0]].saved;
        for &x in leaves {
            let sx = &mut self.states[x];
            sx.a = match dir {
                Direction::BottomUp => 0,
                Direction::TopDown => au + qu,
            };
            sx.active = true;
            sx.tag = None;
            sx.saved = None;
        }
        let su = &mut self.states[u];
        if dir == Direction::BottomUp {
            su.a += s;
        }
        su.p -= s;
        su.top = saved;
        su.child_count += leaves.len();
        su.child_ref = match su.child_count {
            1 => su.child_ref.or(Some(leaves[0])),
            _ => None,
        };
        Ok(())
    }

    /// Final per-vertex result once everything is undone.
    pub fn results(&self, dir: Direction) -> Vec<i64> {
        self.states
            .iter()
            .map(|s| match dir {
                Direction::BottomUp => s.p + s.a,
                Direction::TopDown => s.val + s.a,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreefixConfig {
    pub direction: Direction,
    /// Insert a global all-reduce barrier after every round and undo phase.
    pub barrier: bool,
    /// Record the shape of the contraction at every phase boundary.
    pub record_structure: bool,
}

impl TreefixConfig {
    pub fn new(direction: Direction) -> Self {
        TreefixConfig { direction, barrier: false, record_structure: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreefixOutcome {
    pub sums: Vec<i64>,
    pub cost: CostReport,
    pub compact_rounds: usize,
    /// Shape before every contraction phase, in phase order.
    pub forward: Vec<Vec<StructureRow>>,
    /// Shape after undoing every phase, in undo order.
    pub backward: Vec<Vec<StructureRow>>,
    /// Sum of active partial sums after every contraction phase.
    pub conservation: Vec<i64>,
}

#[derive(Debug, Clone, Copy)]
struct Down {
    branching: bool,
    coin: bool,
    top: Option<LastOp>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Up {
    leaves: u32,
    nonleaf: u32,
    nonleaf_ref: Option<usize>,
    leaf_sum: i64,
}

fn merge_up(a: &Up, b: &Up) -> Up {
    Up {
        leaves: a.leaves + b.leaves,
        nonleaf: a.nonleaf + b.nonleaf,
        nonleaf_ref: a.nonleaf_ref.or(b.nonleaf_ref),
        leaf_sum: a.leaf_sum + b.leaf_sum,
    }
}

struct Engine<'a> {
    sim: &'a mut SimState,
    t: &'a RootedTree,
    layout: &'a Layout,
    vt: VirtualTree,
    c: Contraction,
    cfg: TreefixConfig,
    forward: Vec<Vec<StructureRow>>,
    backward: Vec<Vec<StructureRow>>,
    conservation: Vec<i64>,
}

impl Engine<'_> {
    fn pos(&self, v: usize) -> usize {
        self.layout.pos(v)
    }

    fn sync(&mut self) {
        if self.cfg.barrier {
            self.sim.all_reduce_barrier();
        }
    }

    fn audit(&mut self) {
        if self.sim.audit_report().is_some() {
            for v in 0..self.t.n() {
                let w = self.c.states[v].words();
                self.sim.audit(self.layout.pos(v), w);
            }
        }
    }

    /// Every sender passes `payload(u)` to its supervertex children, directly
    /// or through the relay tree. Returns what each vertex received.
    fn down<T: Clone>(&mut self, senders: &[usize], payload: impl Fn(&Contraction, usize) -> T) -> Vec<Option<T>> {
        let n = self.t.n();
        let mut got = vec![None; n];
        let mut group = vec![None; n];
        let mut direct = Vec::new();
        for &u in senders {
            let s = &self.c.states[u];
            match s.child_count {
                0 => {}
                1 => direct.push((u, s.child_ref.expect("single child referenced"))),
                _ => group[u] = Some(payload(&self.c, u)),
            }
        }
        self.sim.begin_round();
        for &(u, w) in &direct {
            self.sim.msg(self.pos(u), self.pos(w));
            got[w] = Some(payload(&self.c, u));
        }
        self.sim.end_round();
        if group.iter().any(Option::is_some) {
            let (relayed, _) = local_broadcast(self.sim, &self.vt, self.layout, &group);
            for (x, m) in relayed.into_iter().enumerate() {
                if m.is_some() {
                    got[x] = m;
                }
            }
        }
        got
    }

    /// Every receiver gets the fold of `value(x)` over its supervertex
    /// children.
    fn up<T: Clone>(
        &mut self,
        receivers: &[usize],
        value: impl Fn(&Contraction, usize) -> Option<T>,
        identity: T,
        op: impl FnMut(&T, &T) -> T,
    ) -> Vec<T> {
        let n = self.t.n();
        let mut out = vec![identity.clone(); n];
        let mut mask = vec![false; n];
        let mut direct = Vec::new();
        for &u in receivers {
            let s = &self.c.states[u];
            match s.child_count {
                0 => {}
                1 => direct.push((u, s.child_ref.expect("single child referenced"))),
                _ => mask[u] = true,
            }
        }
        self.sim.begin_round();
        for &(u, w) in &direct {
            self.sim.msg(self.pos(w), self.pos(u));
            out[u] = value(&self.c, w).unwrap_or_else(|| identity.clone());
        }
        self.sim.end_round();
        if mask.iter().any(|&m| m) {
            let values: Vec<T> = (0..n).map(|x| value(&self.c, x).unwrap_or_else(|| identity.clone())).collect();
            let (red, _) = local_reduce(self.sim, &self.vt, self.layout, &values, &mask, identity, op);
            for u in 0..n {
                if mask[u] {
                    out[u] = red[u].clone();
                }
            }
        }
        out
    }

    fn compact_round(&mut self, r: usize, rng: &mut Lcg64) -> Result<()> {
        let n = self.t.n();
        let coin: Vec<bool> = (0..n).map(|v| self.c.states[v].active && rng.coin()).collect();
        let senders: Vec<usize> =
            (0..n).filter(|&u| self.c.states[u].active && self.c.states[u].child_count > 0).collect();

        // Branching flag, coin and last operation travel down.
        let down = self.down(&senders, |c, u| Down {
            branching: c.states[u].child_count >= 2,
            coin: coin[u],
            top: c.states[u].top,
        });
        let mut chosen = Vec::new();
        for v in 0..n {
            let s = &self.c.states[v];
            if !s.active || s.parent_rep.is_none() {
                continue;
            }
            let d = down[v].ok_or_else(|| Error::Consistency(format!("{v} missed its parent's message")))?;
            if !d.branching && s.child_count == 1 && coin[v] && !d.coin {
                chosen.push((v, d.top));
            }
        }

        // Compress: each chosen vertex hands its sum and child to its parent
        // and introduces its child to its new parent.
        self.sim.begin_round();
        for &(v, _) in &chosen {
            let s = &self.c.states[v];
            let (u, w) = (s.parent_rep.expect("non-root"), s.child_ref.expect("one child"));
            self.sim.msg(self.pos(v), self.pos(u));
            self.sim.msg(self.pos(v), self.pos(w));
        }
        self.sim.end_round();
        if self.cfg.record_structure {
            self.forward.push(self.c.structure());
        }
        for &(v, seen_top) in &chosen {
            let u = self.c.states[v].parent_rep.expect("non-root");
            if self.c.states[u].top != seen_top {
                return Err(Error::Consistency(format!("{v} saw a stale operation of {u}")));
            }
            self.c.compress(u, v, 2 * r)?;
        }
        self.conservation.push(self.c.active_sum());
        self.audit();
        self.sync();

        // Refreshed flags, then children report leaf sums and the non-leaf
        // child upward.
        let senders: Vec<usize> =
            (0..n).filter(|&u| self.c.states[u].active && self.c.states[u].child_count > 0).collect();
        self.down(&senders, |c, u| (c.states[u].child_count >= 2, c.states[u].top));
        let reports = self.up(
            &senders,
            |c, x| {
                let s = &c.states[x];
                (s.active && s.parent_rep.is_some()).then(|| {
                    if s.child_count == 0 {
                        Up { leaves: 1, leaf_sum: s.p, ..Up::default() }
                    } else {
                        Up { nonleaf: 1, nonleaf_ref: Some(x), ..Up::default() }
                    }
                })
            },
            Up::default(),
            merge_up,
        );

        // Rake: parents with leaves and at most one other child confirm, and
        // the leaves retire.
        let rakers: Vec<usize> =
            senders.iter().copied().filter(|&u| reports[u].leaves >= 1 && reports[u].nonleaf <= 1).collect();
        if self.cfg.record_structure {
            self.forward.push(self.c.structure());
        }
        let confirm = self.down(&rakers, |c, u| c.states[u].top);
        for &u in &rakers {
            let leaves: Vec<usize> = if self.c.states[u].child_count == 1 {
                vec![self.c.states[u].child_ref.expect("single child")]
            } else {
                self.t
                    .children(u)
                    .iter()
                    .copied()
                    .filter(|&x| {
                        let s = &self.c.states[x];
                        s.active && s.child_count == 0 && confirm[x].is_some()
                    })
                    .collect()
            };
            let rep = &reports[u];
            let got: i64 = leaves.iter().map(|&x| self.c.states[x].p).sum();
            if leaves.len() != rep.leaves as usize || got != rep.leaf_sum {
                return Err(Error::Consistency(format!("rake at {u} disagrees with its report")));
            }
            self.c.rake(u, &leaves, rep.nonleaf_ref, 2 * r + 1)?;
        }
        self.conservation.push(self.c.active_sum());
        self.audit();
        self.sync();
        Ok(())
    }

    fn undo_phase(&mut self, phase: usize) -> Result<()> {
        let n = self.t.n();
        let dir = self.cfg.direction;
        let owners: Vec<usize> = (0..n).filter(|&u| self.c.states[u].top.is_some_and(|op| op.phase == phase)).collect();
        if phase.is_multiple_of(2) {
            // The absorbed vertex gets the owner's sums; the owner gets the
            // absorbed sums and the parked stack link; the grandchild learns
            // its parent again.
            self.sim.begin_round();
            for &u in &owners {
                let Some(LastOp { kind: OpKind::Compress { absorbed: v }, .. }) = self.c.states[u].top else {
                    return Err(Error::Consistency(format!("phase {phase} at {u} is not a compress")));
                };
                self.sim.msg(self.pos(u), self.pos(v));
                self.sim.msg(self.pos(v), self.pos(u));
                if let Some(w) = self.c.states[v].child_ref {
                    self.sim.msg(self.pos(v), self.pos(w));
                }
            }
            self.sim.end_round();
            for &u in &owners {
                self.c.undo_compress(u, dir)?;
            }
        } else {
            let mut direct = Vec::new();
            let mut grouped = Vec::new();
            for &u in &owners {
                match self.c.states[u].top {
                    Some(LastOp { kind: OpKind::Rake { direct: Some(x), .. }, .. }) => direct.push((u, x)),
                    Some(LastOp { kind: OpKind::Rake { direct: None, .. }, .. }) => grouped.push(u),
                    _ => return Err(Error::Consistency(format!("phase {phase} at {u} is not a rake"))),
                }
            }
            // A directly addressed leaf finishes from what its owner sends.
            self.sim.begin_round();
            for &(u, x) in &direct {
                self.sim.msg(self.pos(u), self.pos(x));
                self.sim.msg(self.pos(x), self.pos(u));
            }
            self.sim.end_round();
            // Grouped leaves answer a call with their sums and parked link.
            let mut group_msgs = vec![None; n];
            let mut mask = vec![false; n];
            for &u in &grouped {
                group_msgs[u] = Some(phase);
                mask[u] = true;
            }
            let mut leaves_of: Vec<Vec<usize>> = vec![Vec::new(); n];
            if !grouped.is_empty() {
                let (call, _) = local_broadcast(self.sim, &self.vt, self.layout, &group_msgs);
                let values: Vec<(i64, Option<LastOp>)> = (0..n)
                    .map(|x| {
                        let s = &self.c.states[x];
                        if call[x] == Some(phase) && s.tag == Some(phase) {
                            (s.p, s.saved)
                        } else {
                            (0, None)
                        }
                    })
                    .collect();
                let (sums, _) = local_reduce(self.sim, &self.vt, self.layout, &values, &mask, (0, None), |a, b| {
                    (a.0 + b.0, a.1.or(b.1))
                });
                for &u in &grouped {
                    leaves_of[u] =
                        self.t.children(u).iter().copied().filter(|&x| self.c.states[x].tag == Some(phase)).collect();
                    let s: i64 = leaves_of[u].iter().map(|&x| self.c.states[x].p).sum();
                    if s != sums[u].0 {
                        return Err(Error::Consistency(format!("undo of rake at {u} lost a leaf")));
                    }
                }
                if dir == Direction::TopDown {
                    let msgs: Vec<Option<i64>> =
                        (0..n).map(|u| mask[u].then(|| self.c.states[u].a + self.c.states[u].spine)).collect();
                    local_broadcast(self.sim, &self.vt, self.layout, &msgs);
                }
            }
            for &(u, x) in &direct {
                self.c.undo_rake(u, &[x], dir)?;
            }
            for &u in &grouped {
                self.c.undo_rake(u, &leaves_of[u], dir)?;
            }
        }
        if self.cfg.record_structure {
            self.backward.push(self.c.structure());
        }
        self.sync();
        Ok(())
    }
}

/// Runs contraction and the matching uncontraction on the simulator.
pub fn treefix_with(
    sim: &mut SimState,
    t: &RootedTree,
    layout: &Layout,
    values: &[i64],
    seed: u64,
    cfg: TreefixConfig,
) -> Result<TreefixOutcome> {
    let n = t.n();
    if layout.n() != n || sim.n() < n {
        return Err(Error::Argument("layout, tree and simulator sizes differ".into()));
    }
    let start = sim.report();
    let (vt, _) = build_refs_protocol(sim, t, layout)?;
    let c = Contraction::new(t, values)?;
    let mut rng = Lcg64::new(seed);
    let mut engine =
        Engine { sim, t, layout, vt, c, cfg, forward: Vec::new(), backward: Vec::new(), conservation: Vec::new() };
    let root = t.root();
    let limit = 64 * (usize::BITS - n.leading_zeros()) as usize + 64;
    let mut rounds = 0;
    while engine.c.states[root].child_count > 0 {
        if rounds == limit {
            return Err(Error::Consistency(format!("contraction did not finish in {limit} rounds")));
        }
        engine.compact_round(rounds, &mut rng)?;
        rounds += 1;
    }
    if engine.c.active_count() != 1 {
        return Err(Error::Consistency("contraction left more than the root".into()));
    }
    for phase in (0..2 * rounds).rev() {
        engine.undo_phase(phase)?;
    }
    let sums = engine.c.results(cfg.direction);
    Ok(TreefixOutcome {
        sums,
        cost: engine.sim.report().since(&start),
        compact_rounds: rounds,
        forward: engine.forward,
        backward: engine.backward,
        conservation: engine.conservation,
    })
}

pub fn treefix_sum(
    sim: &mut SimState,
    t: &RootedTree,
    layout: &Layout,
    values: &[i64],
    seed: u64,
) -> Result<TreefixOutcome> {
    treefix_with(sim, t, layout, values, seed, TreefixConfig::new(Direction::BottomUp))
}

pub fn treefix_topdown(
    sim: &mut SimState,
    t: &RootedTree,
    layout: &Layout,
    values: &[i64],
    seed: u64,
) -> Result<TreefixOutcome> {
    treefix_with(sim, t, layout, values, seed, TreefixConfig::new(Direction::TopDown))
}
