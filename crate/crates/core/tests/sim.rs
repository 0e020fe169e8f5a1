mod common;

use proptest::prelude::*;
use spatree::curves::{index_to_coord, manhattan, CurveKind};
use spatree::layout::{build_layout, LayoutKind};
use spatree::sim::{SimOptions, SimState};
use spatree::treefix::treefix_sum;

type Rounds = Vec<Vec<(usize, usize)>>;

fn rounds(n: usize) -> impl Strategy<Value = Rounds> {
    prop::collection::vec(prop::collection::vec((0..n, 0..n), 0..12), 0..12)
}

/// Longest chain in the explicit message graph: a message depends on every
/// message delivered to its source in an earlier round.
fn chain_depths(rounds: &Rounds) -> Vec<u64> {
    let mut delivered: Vec<(usize, usize, u64)> = Vec::new();
    for (r, msgs) in rounds.iter().enumerate() {
        for &(src, dst) in msgs {
            let before = delivered.iter().filter(|&&(rr, d, _)| rr < r && d == src).map(|&(_, _, depth)| depth).max();
            delivered.push((r, dst, before.unwrap_or(0) + 1));
        }
    }
    delivered.iter().map(|&(_, _, d)| d).collect()
}

fn play(sim: &mut SimState, rounds: &Rounds) {
    for msgs in rounds {
        sim.round(|s| {
            for &(a, b) in msgs {
                s.send(a, b).unwrap();
            }
        });
    }
}

proptest! {
    #[test]
    fn depth_is_the_longest_message_chain(kind in prop_oneof![Just(CurveKind::Hilbert), Just(CurveKind::ZOrder)],
                                          rs in rounds(20)) {
        let mut sim = SimState::new(kind, 20);
        play(&mut sim, &rs);
        let depths = chain_depths(&rs);
        prop_assert_eq!(sim.report().depth, depths.iter().copied().max().unwrap_or(0));
        let mut clocks = [0u64; 20];
        let mut i = 0;
        for msgs in &rs {
            for &(_, dst) in msgs {
                clocks[dst] = clocks[dst].max(depths[i]);
                i += 1;
            }
        }
        for (p, &c) in clocks.iter().enumerate() {
            prop_assert_eq!(sim.clock(p), c);
        }
        prop_assert_eq!(sim.report().rounds, rs.iter().filter(|m| !m.is_empty()).count() as u64);
    }

    #[test]
    fn energy_is_the_sum_of_grid_distances(rs in rounds(30)) {
        let mut sim = SimState::new(CurveKind::Hilbert, 30);
        play(&mut sim, &rs);
        let order = sim.placement().order;
        let cell = |p: usize| index_to_coord(CurveKind::Hilbert, order, p as u64).unwrap();
        let want: u64 = rs.iter().flatten().map(|&(a, b)| manhattan(cell(a), cell(b))).sum();
        prop_assert_eq!(sim.report().energy, want);
        prop_assert_eq!(sim.report().messages, rs.iter().map(Vec::len).sum::<usize>() as u64);
    }

    #[test]
    fn energy_adds_up_across_phases(a in rounds(16), b in rounds(16)) {
        let mut whole = SimState::new(CurveKind::ZOrder, 16);
        play(&mut whole, &a);
        let mid = whole.report();
        play(&mut whole, &b);
        let second = whole.report().since(&mid);
        let mut alone = SimState::new(CurveKind::ZOrder, 16);
        play(&mut alone, &b);
        prop_assert_eq!(mid.energy + second.energy, whole.report().energy);
        prop_assert_eq!(second.energy, alone.report().energy);
        prop_assert_eq!(second.messages, alone.report().messages);
    }

    #[test]
    fn barrier_orders_everything_before_it(rs in rounds(25)) {
        let mut sim = SimState::new(CurveKind::Hilbert, 25);
        play(&mut sim, &rs);
        let before = sim.max_clock();
        sim.all_reduce_barrier();
        for p in 0..25 {
            prop_assert!(sim.clock(p) > before);
        }
    }

    #[test]
    fn scan_matches_a_sequential_fold(len in 1usize..70) {
        let mut sim = SimState::new(CurveKind::Hilbert, 70);
        let values: Vec<Vec<usize>> = (0..len).map(|i| vec![i]).collect();
        let got = sim.prefix_sum(&values, |a, b| [a.as_slice(), b.as_slice()].concat()).unwrap();
        for (i, g) in got.iter().enumerate() {
            prop_assert_eq!(g, &(0..=i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn reduce_folds_left_to_right(a in 0usize..40, len in 1usize..40) {
        let mut sim = SimState::new(CurveKind::ZOrder, 80);
        let values: Vec<Vec<usize>> = (a..a + len).map(|i| vec![i]).collect();
        let got = sim.reduce_range(a, a + len - 1, &values, |x, y| [x.as_slice(), y.as_slice()].concat()).unwrap();
        prop_assert_eq!(got, (a..a + len).collect::<Vec<_>>());
        prop_assert!(sim.report().depth <= (usize::BITS - len.leading_zeros()) as u64);
    }

    #[test]
    fn compact_keeps_order(flags in prop::collection::vec(any::<bool>(), 1..60)) {
        let mut sim = SimState::new(CurveKind::Hilbert, 60);
        let (dest, count) = sim.compact(&flags).unwrap();
        prop_assert_eq!(count, flags.iter().filter(|&&f| f).count());
        let placed: Vec<usize> = dest.iter().flatten().copied().collect();
        prop_assert_eq!(placed, (0..count).collect::<Vec<_>>());
    }
}

#[test]
fn runs_are_deterministic() {
    for i in 0..10 {
        let t = common::mixed_tree(i, 300, 5);
        let layout = build_layout(&t, LayoutKind::LightFirst, CurveKind::ZOrder);
        let run = || {
            let mut sim =
                SimState::with_options(CurveKind::ZOrder, t.n(), SimOptions { trace: true, memory_budget: None });
            let out = treefix_sum(&mut sim, &t, &layout, &t.values(), 42).unwrap();
            (out.sums, out.cost, sim.events().to_vec())
        };
        assert_eq!(run(), run());
    }
}

#[test]
fn out_of_range_messages_are_rejected() {
    let mut sim = SimState::new(CurveKind::Hilbert, 4);
    assert!(sim.send(0, 4).is_err());
    assert!(sim.broadcast_range(2, 1).is_err());
    assert!(sim.permute(&[Some(1), Some(1)]).is_err());
    assert!(sim.broadcast_ranges(&[(0, 2), (2, 3)]).is_err());
}
