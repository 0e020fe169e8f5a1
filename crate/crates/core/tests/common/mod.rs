#![allow(dead_code)]

use spatree::rng::Lcg64;
use spatree::tree::{gen_tree, RootedTree, TreeKind};

/// About `sqrt(n)` hubs, each vertex attached to a random hub: high-degree
/// vertices at several depths.
pub fn hub_tree(n: usize, seed: u64) -> RootedTree {
    let mut rng = Lcg64::new(seed);
    let hubs = ((n as f64).sqrt() as usize).max(1);
    let parent: Vec<Option<usize>> = (0..n).map(|v| (v > 0).then(|| rng.below(v.min(hubs)))).collect();
    RootedTree::from_parents(&parent).unwrap()
}

/// Largest perfect binary tree size not above `n`.
pub fn perfect_size(n: usize) -> usize {
    let mut m = 1;
    while 2 * m < n {
        m = 2 * m + 1;
    }
    m
}

/// Tree number `i` of a mixed family with sizes in `[1, max_n]`.
pub fn mixed_tree(i: usize, max_n: usize, seed: u64) -> RootedTree {
    let mut rng = Lcg64::new(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let n = 1 + rng.below(max_n);
    let kinds = TreeKind::ALL;
    match i % (kinds.len() + 1) {
        k if k == kinds.len() => hub_tree(n, rng.next_u64()),
        k if kinds[k] == TreeKind::PerfectBinary => gen_tree(kinds[k], perfect_size(n), 0).unwrap(),
        k => gen_tree(kinds[k], n, rng.next_u64()).unwrap(),
    }
}

/// Random values in `[-50, 50]`.
pub fn random_values(n: usize, seed: u64) -> Vec<i64> {
    let mut rng = Lcg64::new(seed);
    (0..n).map(|_| rng.below(101) as i64 - 50).collect()
}

/// Random queries with every vertex in at most `per_vertex` of them.
pub fn random_queries(n: usize, count: usize, per_vertex: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = Lcg64::new(seed);
    let mut load = vec![0; n];
    let mut qs = Vec::new();
    for _ in 0..count {
        let (u, v) = (rng.below(n), rng.below(n));
        let need = |x: usize| usize::from(x == u) + usize::from(x == v && v != u);
        if load[u] + need(u) <= per_vertex && load[v] + need(v) <= per_vertex {
            load[u] += 1;
            if v != u {
                load[v] += 1;
            }
            qs.push((u, v));
        }
    }
    qs
}
