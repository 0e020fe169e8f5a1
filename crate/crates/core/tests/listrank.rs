mod common;

use proptest::prelude::*;
use spatree::curves::CurveKind;
use spatree::listrank::{euler_tour, list_rank, subtree_sizes_via_tour, tour_list, LinkedList};
use spatree::rng::Lcg64;
use spatree::sim::SimState;
use spatree::tree::subtree_sizes_bruteforce;

/// A single chain visiting `0..n` in a random order.
fn shuffled_chain(n: usize, seed: u64) -> (LinkedList, Vec<usize>) {
    let mut rng = Lcg64::new(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.below(i + 1));
    }
    let mut succ = vec![None; n];
    for w in order.windows(2) {
        succ[w[0]] = Some(w[1]);
    }
    let mut rank = vec![0; n];
    for (r, &x) in order.iter().enumerate() {
        rank[x] = r;
    }
    (LinkedList::new(succ), rank)
}

fn log2_ceil(n: usize) -> usize {
    (usize::BITS - n.saturating_sub(1).leading_zeros()) as usize
}

proptest! {
    #[test]
    fn chains_rank_like_a_walk(n in 1usize..600, seed in any::<u64>()) {
        let (list, rank) = shuffled_chain(n, seed);
        let mut sim = SimState::new(CurveKind::Hilbert, n);
        let out = list_rank(&mut sim, &list, seed.rotate_left(7)).unwrap();
        prop_assert_eq!(&out.ranks, &rank);
        prop_assert_eq!(list.ranks_sequential().unwrap(), rank);
    }

    #[test]
    fn tour_sizes_match_subtree_sizes(i in 0usize..1000, seed in any::<u64>()) {
        let t = common::mixed_tree(i, 300, seed);
        let mut sim = SimState::new(CurveKind::ZOrder, 2 * t.n() - 1);
        prop_assert_eq!(subtree_sizes_via_tour(&mut sim, &t, seed).unwrap(), subtree_sizes_bruteforce(&t));
    }
}

#[test]
fn tour_ranks_follow_the_euler_tour() {
    for i in 0..60 {
        let t = common::mixed_tree(i, 200, 9);
        let tour = euler_tour(&t);
        let list = tour_list(&t);
        assert_eq!(list.len(), 2 * t.n() - 1);
        assert_eq!(tour.seq.len(), 2 * t.n() - 1);
        let mut sim = SimState::new(CurveKind::Hilbert, list.len());
        let ranks = list_rank(&mut sim, &list, i as u64).unwrap().ranks;
        assert_eq!(&ranks[..t.n()], tour.first.as_slice(), "tree {i}");
    }
}

#[test]
fn contraction_shrinks_quickly_and_cheaply() {
    for k in [8u32, 10, 12] {
        let n = 1usize << k;
        for seed in 0..40 {
            let (list, _) = shuffled_chain(n, seed);
            let mut sim = SimState::new(CurveKind::Hilbert, n);
            let out = list_rank(&mut sim, &list, seed).unwrap();
            assert!(out.iterations.len() <= 8 * k as usize, "n={n} seed={seed}: {} iterations", out.iterations.len());
            let side = sim.placement().order.side() as f64;
            for it in &out.iterations {
                assert!(it.messages <= 4 * it.live as u64);
                // every message crosses at most the grid diameter
                assert!(it.energy as f64 <= it.messages as f64 * 2.0 * side);
                assert!(it.removed <= it.live);
            }
            let last = out.iterations.last().map_or(n, |it| it.live - it.removed);
            assert!(last <= log2_ceil(n).max(4));
        }
    }
}

#[test]
fn list_ranking_costs_scale() {
    let mut anchors = Vec::new();
    for k in [8u32, 10, 12, 14] {
        let n = 1usize << k;
        let (list, _) = shuffled_chain(n, 3);
        let mut sim = SimState::new(CurveKind::Hilbert, n);
        list_rank(&mut sim, &list, 5).unwrap();
        let r = sim.report();
        anchors.push((r.energy as f64 / (n as f64).powf(1.5), r.depth as f64 / k as f64));
    }
    let (e0, d0) = anchors[0];
    for &(e, d) in &anchors {
        assert!(e <= 2.0 * e0, "{anchors:?}");
        assert!(d <= 2.0 * d0, "{anchors:?}");
    }
}
