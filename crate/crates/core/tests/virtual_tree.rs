mod common;

use spatree::curves::CurveKind;
use spatree::layout::{build_layout, LayoutKind};
use spatree::sim::SimState;
use spatree::tree::{gen_tree, subtree_sizes_bruteforce, TreeKind};
use spatree::virtual_tree::*;

#[test]
fn protocol_builds_the_direct_relay_tree() {
    for i in 0..100 {
        let t = common::mixed_tree(i, 600, 31);
        let curve = if i % 3 == 0 { CurveKind::ZOrder } else { CurveKind::Hilbert };
        let layout = build_layout(&t, LayoutKind::LightFirst, curve);
        let mut sim = SimState::new(curve, t.n());
        let (vt, cost) = build_refs_protocol(&mut sim, &t, &layout).unwrap();
        assert_eq!(vt, transform(&t, &layout), "tree {i}");
        assert_eq!(cost, sim.report());
    }
}

#[test]
fn relay_degree_is_bounded_and_order_is_kept() {
    for i in 0..100 {
        let t = common::mixed_tree(i, 600, 37);
        let layout = build_layout(&t, LayoutKind::LightFirst, CurveKind::Hilbert);
        let vt = transform(&t, &layout);
        let sizes = subtree_sizes_bruteforce(&t);
        assert!(vt.max_out_degree() <= 4);
        for v in 0..t.n() {
            assert!(vt.current[v].len() <= 2 && vt.appended[v].len() <= 2);
            for pair in [&vt.current[v], &vt.appended[v]] {
                if let [a, b] = pair[..] {
                    assert!(layout.pos(a) < layout.pos(b));
                    assert!(sizes[a] <= sizes[b]);
                }
            }
            // every relay parent is the original parent or an earlier sibling
            if let (Some(r), Some(p)) = (vt.vparent[v], t.parent(v)) {
                assert!(r == p || (t.parent(r) == Some(p) && layout.pos(r) < layout.pos(v)));
            }
        }
    }
}

#[test]
fn broadcast_and_reduce_deliver_parent_and_children_values() {
    for i in 0..100 {
        let t = common::mixed_tree(i, 500, 41);
        let layout = build_layout(&t, LayoutKind::LightFirst, CurveKind::ZOrder);
        let vt = transform(&t, &layout);
        let values = common::random_values(t.n(), i as u64);
        let mut sim = SimState::new(CurveKind::ZOrder, t.n());
        let msgs: Vec<Option<i64>> = values.iter().copied().map(Some).collect();
        let (got, _) = local_broadcast(&mut sim, &vt, &layout, &msgs);
        for (v, g) in got.iter().enumerate() {
            assert_eq!(*g, t.parent(v).map(|p| values[p]));
        }
        let lists: Vec<Vec<usize>> = (0..t.n()).map(|v| vec![v]).collect();
        let receivers = vec![true; t.n()];
        let (folded, _) = local_reduce(&mut sim, &vt, &layout, &lists, &receivers, Vec::new(), |a, b| {
            [a.as_slice(), b.as_slice()].concat()
        });
        for (v, f) in folded.iter().enumerate() {
            assert_eq!(*f, children_by_position(&t, &layout, v));
        }
    }
}

#[test]
fn broadcast_energy_is_linear_on_light_first_layouts() {
    for curve in [CurveKind::Hilbert, CurveKind::ZOrder] {
        let mut prev: Option<u64> = None;
        for k in (8..=16).step_by(2) {
            let n = (1usize << k) - 1;
            let t = gen_tree(TreeKind::PerfectBinary, n, 0).unwrap();
            let layout = build_layout(&t, LayoutKind::LightFirst, curve);
            let vt = transform(&t, &layout);
            let mut sim = SimState::new(curve, n);
            let (_, cost) = local_broadcast(&mut sim, &vt, &layout, &vec![Some(()); n]);
            assert!(cost.energy <= 72 * n as u64);
            if let Some(p) = prev {
                assert!(cost.energy as f64 / p as f64 <= 4.5, "{curve} n={n}");
            }
            prev = Some(cost.energy);
        }
    }
}

#[test]
fn star_broadcast_has_logarithmic_depth() {
    for k in [6u32, 10, 14] {
        let n = 1usize << k;
        let t = gen_tree(TreeKind::Star, n, 0).unwrap();
        let layout = build_layout(&t, LayoutKind::LightFirst, CurveKind::Hilbert);
        let vt = transform(&t, &layout);
        let mut sim = SimState::new(CurveKind::Hilbert, n);
        let (_, cost) = local_broadcast(&mut sim, &vt, &layout, &vec![Some(()); n]);
        assert!(cost.depth <= k as u64 + 1);
    }
}
