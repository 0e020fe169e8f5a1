use std::io;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::ValueEnum;
use serde::Serialize;
use spatree::curves::CurveKind;
use spatree::layout::{
    build_baseline, build_layout, build_light_first, neighbor_distance_stats, verify_light_first, Layout, LayoutKind,
};
use spatree::lca::batched_lca;
use spatree::listrank::{list_rank, tour_list};
use spatree::rng::Lcg64;
use spatree::sim::{AuditReport, CostReport, SimOptions, SimState, DEFAULT_WORD_BUDGET};
use spatree::tree::{lca_bruteforce, subtree_sizes_bruteforce, topdown_bruteforce, treefix_bruteforce, RootedTree};
use spatree::treefix::{treefix_sum, treefix_topdown};
use spatree::virtual_tree::{local_broadcast, local_reduce, transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Broadcast,
    Reduce,
    Listrank,
    Layout,
    Treefix,
    TreefixTopdown,
    Lca,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Broadcast => "broadcast",
            Algorithm::Reduce => "reduce",
            Algorithm::Listrank => "listrank",
            Algorithm::Layout => "layout",
            Algorithm::Treefix => "treefix",
            Algorithm::TreefixTopdown => "treefix-topdown",
            Algorithm::Lca => "lca",
        }
    }
}

pub struct Experiment {
    pub algorithm: Algorithm,
    pub tree: RootedTree,
    pub curve: CurveKind,
    pub order: LayoutKind,
    pub layout: Option<Layout>,
    pub queries: Option<Vec<(usize, usize)>>,
    pub seed: u64,
    pub audit_memory: bool,
    pub trace: bool,
}

/// One line of the cost report. Field order is the CSV column order.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub algorithm: &'static str,
    pub curve: String,
    pub order: String,
    pub seed: u64,
    pub energy: u64,
    pub depth: u64,
    pub messages: u64,
    pub rounds: u64,
    pub wall_time_ms: f64,
    pub mean_neighbor_distance: f64,
}

pub struct Outcome {
    pub row: ReportRow,
    pub dump: String,
    pub mismatch: Option<String>,
    pub audit: Option<AuditReport>,
    sim: SimState,
}

impl Outcome {
    pub fn write_trace<W: io::Write>(&self, w: W) -> io::Result<()> {
        self.sim.write_trace(w)
    }
}

pub fn to_csv(rows: &[ReportRow]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    Ok(String::from_utf8(w.into_inner().context("flushing CSV")?)?)
}

/// Reads a `vertex position row col` dump. Only the positions are used; the
/// cells follow from the curve.
pub fn parse_layout(text: &str, kind: LayoutKind, curve: CurveKind, n: usize) -> anyhow::Result<Layout> {
    let mut pos = vec![None; n];
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<usize> = line
            .split_whitespace()
            .take(2)
            .map(str::parse)
            .collect::<Result<_, _>>()
            .with_context(|| format!("layout line {}", i + 1))?;
        let [v, p] = fields[..] else { bail!("layout line {} needs a vertex and a position", i + 1) };
        if v >= n || pos[v].replace(p).is_some() {
            bail!("layout line {}: vertex {v} out of range or repeated", i + 1);
        }
    }
    let pos: Vec<usize> = pos
        .into_iter()
        .enumerate()
        .map(|(v, p)| p.with_context(|| format!("layout has no position for vertex {v}")))
        .collect::<anyhow::Result<_>>()?;
    Ok(Layout::from_positions(kind, curve, pos)?)
}

/// Each vertex in at most two queries: `v` paired with a random partner.
pub fn random_queries(n: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = Lcg64::new(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.below(i + 1));
    }
    (0..n).map(|v| (v, perm[v])).collect()
}

fn compare<T: PartialEq + std::fmt::Debug>(what: &str, got: &[T], want: &[T]) -> Option<String> {
    let i = got.iter().zip(want).position(|(g, w)| g != w)?;
    Some(format!("{what} {i}: got {:?}, expected {:?}", got[i], want[i]))
}

pub fn run(exp: &Experiment) -> anyhow::Result<Outcome> {
    let t = &exp.tree;
    let n = t.n();
    let slots = match exp.algorithm {
        Algorithm::Listrank | Algorithm::Layout => 2 * n - 1,
        _ => n,
    };
    let options = SimOptions { trace: exp.trace, memory_budget: exp.audit_memory.then_some(DEFAULT_WORD_BUDGET) };
    let mut sim = SimState::with_options(exp.curve, slots, options);
    let layout = match &exp.layout {
        Some(l) => l.clone(),
        None => build_layout(t, exp.order, exp.curve),
    };
    let values = t.values();
    let start = Instant::now();
    let mut dump = String::new();
    let (cost, mismatch) = match exp.algorithm {
        Algorithm::Broadcast => {
            let vt = transform(t, &layout);
            let msgs: Vec<Option<i64>> = values.iter().copied().map(Some).collect();
            let (got, cost) = local_broadcast(&mut sim, &vt, &layout, &msgs);
            let want: Vec<Option<i64>> = (0..n).map(|v| t.parent(v).map(|p| values[p])).collect();
            for (v, g) in got.iter().enumerate() {
                dump += &match g {
                    Some(x) => format!("{v} {x}\n"),
                    None => format!("{v} -\n"),
                };
            }
            (cost, compare("vertex", &got, &want))
        }
        Algorithm::Reduce => {
            let vt = transform(t, &layout);
            let (got, cost) = local_reduce(&mut sim, &vt, &layout, &values, &vec![true; n], 0, |a, b| a + b);
            let want: Vec<i64> = (0..n).map(|v| t.children(v).iter().map(|&c| values[c]).sum()).collect();
            dump = lines(&got);
            (cost, compare("vertex", &got, &want))
        }
        Algorithm::Listrank => {
            let list = tour_list(t);
            let before = sim.report();
            let out = list_rank(&mut sim, &list, exp.seed)?;
            dump = lines(&out.ranks);
            (sim.report().since(&before), compare("element", &out.ranks, &list.ranks_sequential()?))
        }
        Algorithm::Layout => {
            let (built, cost) = match exp.order {
                LayoutKind::LightFirst => build_light_first(&mut sim, t, exp.seed)?,
                kind => (build_baseline(t, kind, exp.curve)?, CostReport::default()),
            };
            let want = build_layout(t, exp.order, exp.curve);
            dump = built.dump();
            (cost, compare("vertex", built.positions(), want.positions()))
        }
        Algorithm::Treefix => {
            let out = treefix_sum(&mut sim, t, &layout, &values, exp.seed)?;
            dump = lines(&out.sums);
            (out.cost, compare("vertex", &out.sums, &treefix_bruteforce(t, &values)))
        }
        Algorithm::TreefixTopdown => {
            let out = treefix_topdown(&mut sim, t, &layout, &values, exp.seed)?;
            dump = lines(&out.sums);
            (out.cost, compare("vertex", &out.sums, &topdown_bruteforce(t, &values)))
        }
        Algorithm::Lca => {
            if !verify_light_first(t, &subtree_sizes_bruteforce(t), &layout) {
                bail!("lca needs a light-first layout");
            }
            let queries = exp.queries.clone().unwrap_or_else(|| random_queries(n, exp.seed));
            let out = batched_lca(&mut sim, t, &layout, &queries, exp.seed)?;
            let want: Vec<usize> = queries.iter().map(|&(u, v)| lca_bruteforce(t, u, v)).collect();
            for (&(u, v), w) in queries.iter().zip(&out.answers) {
                dump += &format!("{u} {v} {w}\n");
            }
            (out.cost, compare("query", &out.answers, &want))
        }
    };
    let wall_time_ms = (start.elapsed().as_secs_f64() * 1e6).round() / 1e3;
    let row = ReportRow {
        n,
        algorithm: exp.algorithm.name(),
        curve: exp.curve.to_string(),
        order: exp.order.to_string(),
        seed: exp.seed,
        energy: cost.energy,
        depth: cost.depth,
        messages: cost.messages,
        rounds: cost.rounds,
        wall_time_ms,
        mean_neighbor_distance: neighbor_distance_stats(&layout, t).mean,
    };
    Ok(Outcome { row, dump, mismatch, audit: sim.audit_report(), sim })
}

fn lines<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().enumerate().map(|(v, x)| format!("{v} {x}\n")).collect()
}
