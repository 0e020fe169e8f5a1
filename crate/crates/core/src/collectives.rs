//! Range collectives over contiguous curve positions.
//!
//! All of them share one virtual binary tree: the range `[l, r]` splits at
//! `m = l + ceil(len / 2)` into `[l, m-1]` and `[m, r]`. Broadcast and reduce
//! keep a range at its left end; the scan keeps it at its right end.

use crate::error::{arg, Error, Result};
use crate::sim::SimState;

/// Levels of the split tree over `[a, b]`, top level first. Each entry is
/// `(l, m, r)` for a range with at least two positions.
fn split_levels(a: usize, b: usize) -> Vec<Vec<(usize, usize, usize)>> {
    let mut levels = Vec::new();
    let mut frontier = vec![(a, b)];
    while !frontier.is_empty() {
        let mut level = Vec::new();
        let mut next = Vec::new();
        for (l, r) in frontier {
            if l == r {
                continue;
            }
            let m = l + (r - l + 2) / 2;
            level.push((l, m, r));
            next.push((l, m - 1));
            next.push((m, r));
        }
        if !level.is_empty() {
            levels.push(level);
        }
        frontier = next;
    }
    levels
}

impl SimState {
    fn check_range(&self, a: usize, b: usize) -> Result<()> {
        if a > b || b >= self.n() {
            return arg(format!("range [{a}, {b}] invalid for {} positions", self.n()));
        }
        Ok(())
    }

    /// Sends one word from `a` to every position of `[a, b]`.
    pub fn broadcast_range(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_range(a, b)?;
        for level in split_levels(a, b) {
            self.round(|s| {
                for &(l, m, _) in &level {
                    s.msg(l, m);
                }
            });
        }
        Ok(())
    }

    /// Broadcasts within several disjoint ranges at once, each from its left
    /// end.
    pub fn broadcast_ranges(&mut self, ranges: &[(usize, usize)]) -> Result<()> {
        let mut sorted = ranges.to_vec();
        sorted.sort_unstable();
        for (i, &(a, b)) in sorted.iter().enumerate() {
            self.check_range(a, b)?;
            if i > 0 && sorted[i - 1].1 >= a {
                return arg(format!("ranges overlap at {a}"));
            }
        }
        let per_range: Vec<_> = sorted.iter().map(|&(a, b)| split_levels(a, b)).collect();
        let depth = per_range.iter().map(Vec::len).max().unwrap_or(0);
        for d in 0..depth {
            self.round(|s| {
                for levels in &per_range {
                    for &(l, m, _) in levels.get(d).into_iter().flatten() {
                        s.msg(l, m);
                    }
                }
            });
        }
        Ok(())
    }

    /// Folds `values` (one per position of `[a, b]`) towards `a`, combining
    /// strictly left to right.
    pub fn reduce_range<T: Clone>(
        &mut self,
        a: usize,
        b: usize,
        values: &[T],
        mut op: impl FnMut(&T, &T) -> T,
    ) -> Result<T> {
        self.check_range(a, b)?;
        if values.len() != b - a + 1 {
            return arg(format!("{} values for range of {}", values.len(), b - a + 1));
        }
        let mut acc = values.to_vec();
        for level in split_levels(a, b).into_iter().rev() {
            self.round(|s| {
                for &(l, m, _) in &level {
                    s.msg(m, l);
                    acc[l - a] = op(&acc[l - a], &acc[m - a]);
                }
            });
        }
        Ok(acc.swap_remove(0))
    }

    /// Reduce over all positions followed by a broadcast from position 0.
    /// Afterwards every clock exceeds every clock observed before the call.
    pub fn all_reduce_barrier(&mut self) {
        let n = self.n();
        if n <= 1 {
            return;
        }
        let unit = vec![(); n];
        self.reduce_range(0, n - 1, &unit, |_, _| ()).expect("full range");
        self.broadcast_range(0, n - 1).expect("full range");
    }

    /// Inclusive scan of `values` over positions `0..values.len()`.
    pub fn prefix_sum<T: Clone>(&mut self, values: &[T], mut op: impl FnMut(&T, &T) -> T) -> Result<Vec<T>> {
        let len = values.len();
        if len > self.n() {
            return arg(format!("{len} values for {} positions", self.n()));
        }
        if len == 0 {
            return Ok(Vec::new());
        }
        let levels = split_levels(0, len - 1);
        // Up-sweep: the right end of every range learns the range total.
        let mut total = values.to_vec();
        for level in levels.iter().rev() {
            self.round(|s| {
                for &(_, m, r) in level {
                    s.msg(m - 1, r);
                    total[r] = op(&total[m - 1], &total[r]);
                }
            });
        }
        // Down-sweep: exclusive prefixes flow back down.
        let mut before: Vec<Option<T>> = vec![None; len];
        for level in &levels {
            self.round(|s| {
                for &(_, m, r) in level {
                    s.msg(r, m - 1);
                    s.msg(m - 1, r);
                    let parent = before[r].clone();
                    let left = total[m - 1].clone();
                    before[r] = Some(match &parent {
                        Some(p) => op(p, &left),
                        None => left,
                    });
                    before[m - 1] = parent;
                }
            });
        }
        Ok(before
            .into_iter()
            .zip(values)
            .map(|(p, v)| match p {
                Some(p) => op(&p, v),
                None => v.clone(),
            })
            .collect())
    }

    /// Routes the record at every position `i` with `targets[i] = Some(t)` to
    /// `t` in one round.
    pub fn permute(&mut self, targets: &[Option<usize>]) -> Result<()> {
        let n = self.n();
        if targets.len() > n {
            return arg(format!("{} sources for {n} positions", targets.len()));
        }
        let mut seen = vec![false; n];
        for &t in targets.iter().flatten() {
            if t >= n {
                return arg(format!("target {t} outside {n} positions"));
            }
            if std::mem::replace(&mut seen[t], true) {
                return Err(Error::Argument(format!("duplicate target {t}")));
            }
        }
        self.round(|s| {
            for (src, t) in targets.iter().enumerate() {
                if let Some(t) = *t {
                    if t != src {
                        s.msg(src, t);
                    }
                }
            }
        });
        Ok(())
    }

    /// Moves flagged records to `0..count`, preserving their order. Returns
    /// the destination of each position and the count.
    pub fn compact(&mut self, flags: &[bool]) -> Result<(Vec<Option<usize>>, usize)> {
        let ones: Vec<usize> = flags.iter().map(|&f| usize::from(f)).collect();
        let scan = self.prefix_sum(&ones, |a, b| a + b)?;
        let dest: Vec<Option<usize>> = flags.iter().zip(&scan).map(|(&f, &c)| f.then(|| c - 1)).collect();
        self.permute(&dest)?;
        Ok((dest, scan.last().copied().unwrap_or(0)))
    }
}
