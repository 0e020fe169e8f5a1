//! Cost accounting for the spatial computer.
//!
//! Processors sit on the cells of a space-filling curve; position `p` is the
//! `p`-th cell. Every message costs the Manhattan distance between its
//! endpoints (energy) and extends a dependency chain (depth). Local
//! computation is free. Each position carries a logical clock holding the
//! length of the longest message chain it has observed so far; a message
//! leaving `src` is delivered at depth `clock(src) + 1`.
//!
//! Sends issued between [`SimState::begin_round`] and [`SimState::end_round`]
//! read the clocks as they were when the round started, so messages that are
//! logically concurrent never depend on each other.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::curves::{index_to_coord, manhattan, CurveKind, CurveOrder, GridCoord};
use crate::error::{arg, Result};

/// Default per-position word budget for the memory audit.
pub const DEFAULT_WORD_BUDGET: usize = 16;

/// Which curve the processors follow and how many positions are occupied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub kind: CurveKind,
    pub order: CurveOrder,
    pub n: usize,
}

impl Placement {
    /// Minimal placement for `n` positions: the curve is padded to the next
    /// power of four.
    pub fn minimal(kind: CurveKind, n: usize) -> Self {
        Placement { kind, order: CurveOrder::for_count(n), n }
    }
}

/// One delivered message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub src: usize,
    pub dst: usize,
    pub cost: u64,
    pub depth: u64,
}

/// Energy, depth and message counts of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub energy: u64,
    pub depth: u64,
    pub messages: u64,
    pub rounds: u64,
}

impl CostReport {
    /// Energy, message and round counts accrued since `earlier`; depth stays
    /// absolute because it is a maximum, not a sum.
    pub fn since(&self, earlier: &CostReport) -> CostReport {
        CostReport {
            energy: self.energy - earlier.energy,
            depth: self.depth,
            messages: self.messages - earlier.messages,
            rounds: self.rounds - earlier.rounds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimOptions {
    /// Keep every [`TraceEvent`].
    pub trace: bool,
    /// Word budget per position; `None` disables the audit.
    pub memory_budget: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AuditReport {
    pub budget: usize,
    pub peak_words: usize,
    pub violations: u64,
}

#[derive(Debug, Clone)]
pub struct SimState {
    placement: Placement,
    coords: Vec<GridCoord>,
    clock: Vec<u64>,
    energy: u64,
    messages: u64,
    depth: u64,
    rounds: u64,
    events: Option<Vec<TraceEvent>>,
    pending: Option<Vec<(usize, u64)>>,
    audit: Option<AuditReport>,
}

impl SimState {
    pub fn new(kind: CurveKind, n: usize) -> Self {
        Self::with_options(kind, n, SimOptions::default())
    }

    pub fn with_options(kind: CurveKind, n: usize, options: SimOptions) -> Self {
        let placement = Placement::minimal(kind, n);
        let coords = (0..n as u64)
            .map(|p| index_to_coord(kind, placement.order, p).expect("position inside padded grid"))
            .collect();
        SimState {
            placement,
            coords,
            clock: vec![0; n],
            energy: 0,
            messages: 0,
            depth: 0,
            rounds: 0,
            events: options.trace.then(Vec::new),
            pending: None,
            audit: options.memory_budget.map(|budget| AuditReport { budget, ..Default::default() }),
        }
    }

    pub fn n(&self) -> usize {
        self.placement.n
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }

    pub fn coord(&self, pos: usize) -> GridCoord {
        self.coords[pos]
    }

    pub fn distance(&self, a: usize, b: usize) -> u64 {
        manhattan(self.coords[a], self.coords[b])
    }

    pub fn clock(&self, pos: usize) -> u64 {
        self.clock[pos]
    }

    pub fn max_clock(&self) -> u64 {
        self.clock.iter().copied().max().unwrap_or(0)
    }

    pub fn report(&self) -> CostReport {
        CostReport { energy: self.energy, depth: self.depth, messages: self.messages, rounds: self.rounds }
    }

    pub fn events(&self) -> &[TraceEvent] {
        self.events.as_deref().unwrap_or(&[])
    }

    pub fn tracing(&self) -> bool {
        self.events.is_some()
    }

    /// Sends one word from `src` to `dst`.
    pub fn send(&mut self, src: usize, dst: usize) -> Result<()> {
        let n = self.n();
        if src >= n || dst >= n {
            return arg(format!("message {src} -> {dst} outside {n} positions"));
        }
        self.msg(src, dst);
        Ok(())
    }

    /// Infallible send for positions already known to be in range.
    pub(crate) fn msg(&mut self, src: usize, dst: usize) {
        debug_assert!(src < self.n() && dst < self.n());
        let cost = self.distance(src, dst);
        let depth = self.clock[src] + 1;
        self.energy += cost;
        self.messages += 1;
        self.depth = self.depth.max(depth);
        if let Some(ev) = self.events.as_mut() {
            ev.push(TraceEvent { src, dst, cost, depth });
        }
        match self.pending.as_mut() {
            Some(p) => p.push((dst, depth)),
            None => {
                self.clock[dst] = self.clock[dst].max(depth);
                self.rounds += 1;
            }
        }
    }

    /// Starts a round of logically concurrent messages.
    pub fn begin_round(&mut self) {
        debug_assert!(self.pending.is_none(), "nested round");
        self.pending = Some(Vec::new());
    }

    /// Delivers the messages of the current round. Empty rounds are not
    /// counted.
    pub fn end_round(&mut self) {
        let pending = self.pending.take().expect("end_round without begin_round");
        if pending.is_empty() {
            return;
        }
        for (dst, depth) in pending {
            self.clock[dst] = self.clock[dst].max(depth);
        }
        self.rounds += 1;
    }

    /// Runs `f` as one round.
    pub fn round<R>(&mut self, f: impl FnOnce(&mut Self) -> R) -> R {
        self.begin_round();
        let r = f(self);
        self.end_round();
        r
    }

    /// Records that position `pos` currently holds `words` live words.
    pub fn audit(&mut self, pos: usize, words: usize) {
        let _ = pos;
        if let Some(a) = self.audit.as_mut() {
            a.peak_words = a.peak_words.max(words);
            if words > a.budget {
                a.violations += 1;
            }
        }
    }

    pub fn audit_report(&self) -> Option<AuditReport> {
        self.audit
    }

    /// Writes the recorded events as JSON lines (`src`, `dst`, `cost`, `depth`).
    pub fn write_trace<W: Write>(&self, mut w: W) -> io::Result<()> {
        for ev in self.events() {
            serde_json::to_writer(&mut w, ev)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}
