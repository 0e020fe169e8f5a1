mod common;

use proptest::prelude::*;
use spatree::curves::CurveKind;
use spatree::layout::*;
use spatree::rng::Lcg64;
use spatree::sim::SimState;
use spatree::tree::{figure_tree, gen_tree, subtree_sizes_bruteforce, RootedTree, TreeKind};

/// Recursive light-first numbering: a vertex, then its children's blocks
/// from smallest to largest, equal sizes in stored order.
fn light_first_oracle(t: &RootedTree) -> Vec<usize> {
    fn place(t: &RootedTree, sizes: &[usize], v: usize, next: &mut usize, pos: &mut [usize]) {
        pos[v] = *next;
        *next += 1;
        let mut kids = t.children(v).to_vec();
        kids.sort_by_key(|&c| sizes[c]);
        for c in kids {
            place(t, sizes, c, next, pos);
        }
    }
    let sizes = subtree_sizes_bruteforce(t);
    let mut pos = vec![0; t.n()];
    let mut next = 0;
    place(t, &sizes, t.root(), &mut next, &mut pos);
    pos
}

#[test]
fn simulated_pipeline_matches_recursive_numbering() {
    for i in 0..200 {
        let t = common::mixed_tree(i, 512, 17);
        let curve = if i % 2 == 0 { CurveKind::Hilbert } else { CurveKind::ZOrder };
        let mut sim = SimState::new(curve, 2 * t.n() - 1);
        let (layout, cost) = build_light_first(&mut sim, &t, i as u64).unwrap();
        assert_eq!(layout.positions(), light_first_oracle(&t).as_slice(), "tree {i}");
        assert!(verify_light_first(&t, &subtree_sizes_bruteforce(&t), &layout));
        assert_eq!(cost, sim.report());
    }
}

#[test]
fn ranges_nest() {
    for i in 0..100 {
        let t = common::mixed_tree(i, 400, 23);
        let layout = build_layout(&t, LayoutKind::LightFirst, CurveKind::Hilbert);
        let sizes = subtree_sizes_bruteforce(&t);
        let range = |v: usize| (layout.pos(v), layout.pos(v) + sizes[v] - 1);
        for v in 0..t.n() {
            let (a, b) = range(v);
            let mut prev_end = a;
            let mut kids = t.children(v).to_vec();
            kids.sort_by_key(|&c| layout.pos(c));
            for c in kids {
                let (ca, cb) = range(c);
                assert!(a < ca && cb <= b);
                assert_eq!(ca, prev_end + 1, "sibling ranges are adjacent");
                prev_end = cb;
            }
            assert_eq!(prev_end, b);
        }
    }
}

#[test]
fn baselines_are_traversal_orders() {
    let t = gen_tree(TreeKind::RandomAttachment, 300, 4).unwrap();
    let bfs = build_baseline(&t, LayoutKind::Bfs, CurveKind::Hilbert).unwrap();
    let depths = t.depths();
    for p in 1..t.n() {
        assert!(depths[bfs.vtx(p - 1)] <= depths[bfs.vtx(p)]);
    }
    let dfs = build_baseline(&t, LayoutKind::Dfs, CurveKind::ZOrder).unwrap();
    for v in 0..t.n() {
        if let Some(p) = t.parent(v) {
            assert!(dfs.pos(p) < dfs.pos(v));
        }
    }
    assert!(build_baseline(&t, LayoutKind::LightFirst, CurveKind::Hilbert).is_err());
}

#[test]
fn figure_tree_is_already_light_first() {
    let f = figure_tree();
    let mut sim = SimState::new(CurveKind::Hilbert, 15);
    let (layout, _) = build_light_first(&mut sim, &f, 0).unwrap();
    assert_eq!(layout.positions(), &[0, 1, 2, 3, 4, 5, 6, 7]);
}

#[test]
fn construction_energy_grows_like_n_to_three_halves() {
    let c = |k: u32| {
        let n = 1usize << k;
        let t = gen_tree(TreeKind::RandomAttachment, n, 1).unwrap();
        let mut sim = SimState::new(CurveKind::Hilbert, 2 * n - 1);
        let (_, cost) = build_light_first(&mut sim, &t, 2).unwrap();
        cost.energy as f64 / (n as f64).powf(1.5)
    };
    let base = c(10);
    for k in [12, 14] {
        assert!(c(k) <= 2.0 * base);
    }
}

#[test]
fn composition_minimum_holds_exhaustively() {
    for n in 1..=24 {
        for delta in 1..=4 {
            assert!(lemma_minimized_check(n, delta), "n={n} delta={delta}");
        }
    }
}

proptest! {
    #[test]
    fn split_inequality_on_admissible_tuples(b in 0.01f64..100.0, af in 0.5f64..=1.0, y in 0.0f64..1e4, xf in 0.0f64..=0.5) {
        let (a, x) = (af * b, xf * y);
        prop_assert!(split_sqrt_inequality(a, b, x, y));
    }
}

#[test]
fn split_inequality_sampled() {
    let mut rng = Lcg64::new(99);
    let unit = |r: &mut Lcg64| (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    for _ in 0..10_000 {
        let b = 1e-3 + 1e3 * unit(&mut rng);
        let a = b * (0.5 + 0.5 * unit(&mut rng));
        let y = 1e4 * unit(&mut rng);
        let x = 0.5 * y * unit(&mut rng);
        assert!(split_sqrt_inequality(a, b, x, y), "a={a} b={b} x={x} y={y}");
    }
}
