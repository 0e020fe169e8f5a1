//! Rooted trees with ordered children, generators, text I/O and sequential
//! reference algorithms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::rng::Lcg64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedTree {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    values: Option<Vec<i64>>,
    root: usize,
}

impl RootedTree {
    /// Builds a tree from a parent array. Children keep the order in which
    /// they appear in the array.
    pub fn from_parents(parent: &[Option<usize>]) -> Result<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(Error::Structure("tree must have at least one vertex".into()));
        }
        let mut children = vec![Vec::new(); n];
        let mut root = None;
        for (v, p) in parent.iter().enumerate() {
            match *p {
                None if root.is_some() => {
                    return Err(Error::Structure(format!("second root at vertex {v}")));
                }
                None => root = Some(v),
                Some(p) if p >= n => {
                    return Err(Error::Structure(format!("parent {p} of {v} out of range")));
                }
                Some(p) => children[p].push(v),
            }
        }
        let root = root.ok_or_else(|| Error::Structure("no root".into()))?;
        let t = RootedTree { parent: parent.to_vec(), children, values: None, root };
        if t.bfs_order().len() != n {
            return Err(Error::Structure("parent links contain a cycle".into()));
        }
        Ok(t)
    }

    pub fn with_values(mut self, values: Vec<i64>) -> Result<Self> {
        if values.len() != self.n() {
            return arg(format!("{} values for {} vertices", values.len(), self.n()));
        }
        self.values = Some(values);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.children[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.children.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_values(&self) -> bool {
        self.values.is_some()
    }

    /// Vertex values; 1 everywhere when none were given.
    pub fn values(&self) -> Vec<i64> {
        self.values.clone().unwrap_or_else(|| vec![1; self.n()])
    }

    /// Level order, children in stored order.
    pub fn bfs_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.n());
        order.push(self.root);
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            order.extend_from_slice(&self.children[v]);
            i += 1;
            if order.len() > self.n() {
                break;
            }
        }
        order
    }

    /// Preorder, children in stored order.
    pub fn preorder(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.n());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(self.children[v].iter().rev());
        }
        order
    }

    /// Depth of every vertex (root 0).
    pub fn depths(&self) -> Vec<usize> {
        let mut d = vec![0; self.n()];
        for v in self.bfs_order() {
            if let Some(p) = self.parent[v] {
                d[v] = d[p] + 1;
            }
        }
        d
    }

    /// Copy of the tree with every child list reordered by `key`.
    pub fn reorder_children<K: Ord>(&self, mut key: impl FnMut(usize) -> K) -> RootedTree {
        let mut t = self.clone();
        for list in &mut t.children {
            list.sort_by_key(|&c| key(c));
        }
        t
    }

    /// Text form: `n`, then parent ids (`-1` for the root), then values if any.
    pub fn to_text(&self) -> String {
        let parents: Vec<String> = self.parent.iter().map(|p| p.map_or("-1".to_string(), |p| p.to_string())).collect();
        let mut s = format!("{}\n{}\n", self.n(), parents.join(" "));
        if let Some(vals) = &self.values {
            let vals: Vec<String> = vals.iter().map(i64::to_string).collect();
            s.push_str(&vals.join(" "));
            s.push('\n');
        }
        s
    }
}

fn parse_line<T: FromStr>(line_no: usize, line: &str) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|tok| tok.parse::<T>().map_err(|_| Error::Parse { line: line_no, msg: format!("bad token {tok:?}") }))
        .collect()
}

impl FromStr for RootedTree {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
        let (l1, first) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let n: usize = first
            .trim()
            .parse()
            .map_err(|_| Error::Parse { line: l1, msg: format!("bad vertex count {:?}", first.trim()) })?;
        let (l2, second) = lines.next().ok_or(Error::Parse { line: l1 + 1, msg: "missing parent line".into() })?;
        let raw: Vec<i64> = parse_line(l2, second)?;
        if raw.len() != n {
            return Err(Error::Parse { line: l2, msg: format!("expected {n} parents, found {}", raw.len()) });
        }
        let mut parent = Vec::with_capacity(n);
        for p in raw {
            parent.push(match p {
                -1 => None,
                p if p >= 0 => Some(p as usize),
                p => return Err(Error::Parse { line: l2, msg: format!("bad parent id {p}") }),
            });
        }
        let mut t = RootedTree::from_parents(&parent)?;
        if let Some((l3, third)) = lines.next() {
            let vals: Vec<i64> = parse_line(l3, third)?;
            if vals.len() != n {
                return Err(Error::Parse { line: l3, msg: format!("expected {n} values, found {}", vals.len()) });
            }
            t = t.with_values(vals)?;
        }
        if let Some((l, _)) = lines.next() {
            return Err(Error::Parse { line: l, msg: "trailing content".into() });
        }
        Ok(t)
    }
}

/// Parses `u v` pairs, one per line.
pub fn parse_queries(text: &str, n: usize) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ids: Vec<usize> = parse_line(i + 1, line)?;
        match ids[..] {
            [u, v] if u < n && v < n => out.push((u, v)),
            [_, _] => return Err(Error::Parse { line: i + 1, msg: format!("vertex out of range for n = {n}") }),
            _ => return Err(Error::Parse { line: i + 1, msg: "expected two vertex ids".into() }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeKind {
    Path,
    PerfectBinary,
    Caterpillar,
    Star,
    RandomAttachment,
    /// Random tree with at most two children per vertex.
    RandomBinary,
}

impl TreeKind {
    pub const ALL: [TreeKind; 6] = [
        TreeKind::Path,
        TreeKind::PerfectBinary,
        TreeKind::Caterpillar,
        TreeKind::Star,
        TreeKind::RandomAttachment,
        TreeKind::RandomBinary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TreeKind::Path => "path",
            TreeKind::PerfectBinary => "perfect-binary",
            TreeKind::Caterpillar => "caterpillar",
            TreeKind::Star => "star",
            TreeKind::RandomAttachment => "random-attachment",
            TreeKind::RandomBinary => "random-binary",
        }
    }
}

impl fmt::Display for TreeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TreeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TreeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown tree kind {s:?}")))
    }
}

pub fn gen_tree(kind: TreeKind, n: usize, seed: u64) -> Result<RootedTree> {
    if n == 0 {
        return arg("tree size must be at least 1");
    }
    let mut rng = Lcg64::new(seed);
    let parent: Vec<Option<usize>> = match kind {
        TreeKind::Path => (0..n).map(|v| v.checked_sub(1)).collect(),
        TreeKind::Star => (0..n).map(|v| (v > 0).then_some(0)).collect(),
        TreeKind::PerfectBinary => {
            if !(n + 1).is_power_of_two() {
                return arg(format!("perfect binary tree needs n = 2^h - 1, got {n}"));
            }
            (0..n).map(|v| v.checked_sub(1).map(|u| u / 2)).collect()
        }
        TreeKind::Caterpillar => {
            let spine = n.div_ceil(2);
            (0..n).map(|v| if v < spine { v.checked_sub(1) } else { Some(v - spine) }).collect()
        }
        TreeKind::RandomAttachment => (0..n).map(|v| (v > 0).then(|| rng.below(v))).collect(),
        TreeKind::RandomBinary => {
            let mut parent = vec![None; n];
            let mut kids = vec![0u8; n];
            let mut open = vec![0usize];
            for (v, slot) in parent.iter_mut().enumerate().skip(1) {
                let i = rng.below(open.len());
                let p = open[i];
                *slot = Some(p);
                kids[p] += 1;
                if kids[p] == 2 {
                    open.swap_remove(i);
                }
                open.push(v);
            }
            parent
        }
    };
    RootedTree::from_parents(&parent)
}

/// Eight-vertex example whose preorder labels are already light-first.
pub fn figure_tree() -> RootedTree {
    let parent = [None, Some(0), Some(1), Some(1), Some(0), Some(4), Some(4), Some(6)];
    RootedTree::from_parents(&parent).expect("valid tree")
}

pub fn subtree_sizes_bruteforce(t: &RootedTree) -> Vec<usize> {
    let mut s = vec![1; t.n()];
    for v in t.bfs_order().into_iter().rev() {
        if let Some(p) = t.parent(v) {
            s[p] += s[v];
        }
    }
    s
}

/// Sum of `values` over each subtree.
pub fn treefix_bruteforce(t: &RootedTree, values: &[i64]) -> Vec<i64> {
    let mut s = values.to_vec();
    for v in t.bfs_order().into_iter().rev() {
        if let Some(p) = t.parent(v) {
            s[p] += s[v];
        }
    }
    s
}

/// Sum of `values` along each root path, both ends included.
pub fn topdown_bruteforce(t: &RootedTree, values: &[i64]) -> Vec<i64> {
    let mut s = values.to_vec();
    for v in t.bfs_order() {
        if let Some(p) = t.parent(v) {
            s[v] += s[p];
        }
    }
    s
}

/// Lowest common ancestor by intersecting ancestor sets.
pub fn lca_bruteforce(t: &RootedTree, u: usize, v: usize) -> usize {
    let mut on_path = vec![false; t.n()];
    let mut x = Some(u);
    while let Some(a) = x {
        on_path[a] = true;
        x = t.parent(a);
    }
    let mut y = v;
    while !on_path[y] {
        y = t.parent(y).expect("root is a common ancestor");
    }
    y
}
