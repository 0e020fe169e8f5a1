//! Hilbert and Z-order space-filling curves on `2^k x 2^k` grids.
//!
//! Orientation: row 0 is the top row. The order-1 Hilbert curve visits
//! `(0,0), (1,0), (1,1), (0,1)` as `(row, col)`; higher orders follow the
//! usual reflect/rotate recursion. Z-order visits quadrants upper-left,
//! upper-right, lower-left, lower-right, so the odd index bits are the row
//! bits and the even index bits are the column bits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};

/// Largest supported curve order (side `2^31`).
pub const MAX_ORDER: u32 = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Hilbert,
    #[serde(rename = "zorder")]
    ZOrder,
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::Hilbert => "hilbert",
            CurveKind::ZOrder => "zorder",
        })
    }
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hilbert" => Ok(CurveKind::Hilbert),
            "zorder" | "z-order" | "z" | "morton" => Ok(CurveKind::ZOrder),
            other => arg(format!("unknown curve kind '{other}'")),
        }
    }
}

/// Curve order `k`: the grid has side `2^k` and `4^k` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CurveOrder(u32);

impl CurveOrder {
    pub fn new(k: u32) -> Result<Self> {
        if k > MAX_ORDER {
            return arg(format!("curve order {k} exceeds {MAX_ORDER}"));
        }
        Ok(CurveOrder(k))
    }

    /// Smallest order whose grid holds at least `n` cells.
    pub fn for_count(n: usize) -> Self {
        let mut k = 0;
        while (1u64 << (2 * k)) < n as u64 {
            k += 1;
        }
        CurveOrder(k)
    }

    pub fn k(self) -> u32 {
        self.0
    }

    pub fn side(self) -> u64 {
        1u64 << self.0
    }

    pub fn cells(self) -> u64 {
        1u64 << (2 * self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct GridCoord {
    pub row: u32,
    pub col: u32,
}

impl GridCoord {
    pub const fn new(row: u32, col: u32) -> Self {
        GridCoord { row, col }
    }
}

impl fmt::Display for GridCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Manhattan distance between two cells: the energy of one message.
pub fn manhattan(a: GridCoord, b: GridCoord) -> u64 {
    (a.row.abs_diff(b.row) + a.col.abs_diff(b.col)) as u64
}

fn check_index(order: CurveOrder, idx: u64) -> Result<()> {
    if idx >= order.cells() {
        return arg(format!("curve index {idx} out of range for order {}", order.k()));
    }
    Ok(())
}

pub fn index_to_coord(kind: CurveKind, order: CurveOrder, idx: u64) -> Result<GridCoord> {
    check_index(order, idx)?;
    Ok(match kind {
        CurveKind::Hilbert => hilbert_d2xy(order.side(), idx),
        CurveKind::ZOrder => zorder_decode(idx),
    })
}

pub fn coord_to_index(kind: CurveKind, order: CurveOrder, c: GridCoord) -> Result<u64> {
    let side = order.side();
    if c.row as u64 >= side || c.col as u64 >= side {
        return arg(format!("coordinate {c} outside a {side}x{side} grid"));
    }
    Ok(match kind {
        CurveKind::Hilbert => hilbert_xy2d(side, c),
        CurveKind::ZOrder => zorder_encode(c),
    })
}

/// Manhattan distance between the `i`-th and `j`-th cells of the curve.
pub fn curve_distance(kind: CurveKind, order: CurveOrder, i: u64, j: u64) -> Result<u64> {
    let a = index_to_coord(kind, order, i)?;
    let b = index_to_coord(kind, order, j)?;
    Ok(manhattan(a, b))
}

// Hilbert in (x, y) = (col, row) coordinates.
fn hilbert_rot(s: u64, x: &mut u64, y: &mut u64, rx: u64, ry: u64) {
    if ry == 0 {
        if rx == 1 {
            *x = s - 1 - *x;
            *y = s - 1 - *y;
        }
        std::mem::swap(x, y);
    }
}

fn hilbert_d2xy(side: u64, d: u64) -> GridCoord {
    let (mut x, mut y) = (0u64, 0u64);
    let mut t = d;
    let mut s = 1u64;
    while s < side {
        let rx = 1 & (t / 2);
        let ry = 1 & (t ^ rx);
        hilbert_rot(s, &mut x, &mut y, rx, ry);
        x += s * rx;
        y += s * ry;
        t /= 4;
        s *= 2;
    }
    GridCoord::new(y as u32, x as u32)
}

fn hilbert_xy2d(side: u64, c: GridCoord) -> u64 {
    let (mut x, mut y) = (c.col as u64, c.row as u64);
    let mut d = 0u64;
    let mut s = side / 2;
    while s > 0 {
        let rx = u64::from(x & s > 0);
        let ry = u64::from(y & s > 0);
        d += s * s * ((3 * rx) ^ ry);
        hilbert_rot(side, &mut x, &mut y, rx, ry);
        s /= 2;
    }
    d
}

fn zorder_decode(idx: u64) -> GridCoord {
    let (mut row, mut col) = (0u32, 0u32);
    for b in 0..32 {
        col |= (((idx >> (2 * b)) & 1) as u32) << b;
        row |= (((idx >> (2 * b + 1)) & 1) as u32) << b;
    }
    GridCoord::new(row, col)
}

fn zorder_encode(c: GridCoord) -> u64 {
    let mut idx = 0u64;
    for b in 0..32 {
        idx |= (((c.col >> b) & 1) as u64) << (2 * b);
        idx |= (((c.row >> b) & 1) as u64) << (2 * b + 1);
    }
    idx
}

/// A Z-order step `t -> t+1` that leaves its aligned 2x2 block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Diagonal {
    /// Curve index of the step's start.
    pub step: u64,
    /// Number of trailing base-4 digits equal to 3 in `step` (at least 1).
    pub level: u32,
    /// Manhattan distance travelled by the step.
    pub manhattan: u64,
}

impl Diagonal {
    /// Length in the bound sense: one less than the Manhattan distance.
    pub fn length(&self) -> u64 {
        self.manhattan - 1
    }
}

/// Classifies the step `t -> t+1`; `None` when the step stays inside an
/// aligned 2x2 block.
pub fn zorder_diagonal_at(t: u64) -> Option<Diagonal> {
    if t & 3 != 3 {
        return None;
    }
    let level = t.trailing_ones() / 2;
    let digit = (t >> (2 * level)) & 3;
    let manhattan = if digit == 1 { 2u64 << level } else { 1u64 << level };
    Some(Diagonal { step: t, level, manhattan })
}

/// Longest diagonal among the steps `i..j`, ties going to the higher level
/// and then to the earlier step.
pub fn zorder_longest_diagonal_step(order: CurveOrder, i: u64, j: u64) -> Result<Option<Diagonal>> {
    check_range(order, i, j)?;
    let mut best: Option<Diagonal> = None;
    for level in 1..=order.k() {
        let block = 1u64 << (2 * level);
        let first = i + (block - 1 - i % block);
        // the digit above the trailing run cycles with period 4
        for q in 0..4 {
            let t = first + q * block;
            if t >= j {
                break;
            }
            let Some(d) = zorder_diagonal_at(t) else { continue };
            if d.level != level {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => {
                    (d.manhattan, d.level, std::cmp::Reverse(d.step))
                        > (b.manhattan, b.level, std::cmp::Reverse(b.step))
                }
            };
            if better {
                best = Some(d);
            }
        }
    }
    Ok(best)
}

fn check_range(order: CurveOrder, i: u64, j: u64) -> Result<()> {
    check_index(order, i)?;
    check_index(order, j)?;
    if i > j {
        return arg(format!("empty step range: {i} > {j}"));
    }
    Ok(())
}

/// `E_d(i, j)`: the Manhattan distance of the longest diagonal crossed
/// between positions `i` and `j`. Steps inside an aligned 2x2 block weigh 1;
/// an empty range weighs 0.
pub fn zorder_longest_diagonal(order: CurveOrder, i: u64, j: u64) -> Result<u64> {
    if i == j {
        check_index(order, i)?;
        return Ok(0);
    }
    Ok(zorder_longest_diagonal_step(order, i, j)?.map_or(1, |d| d.manhattan))
}

/// Upper bound on curve distance for an aligned curve: `8 * sqrt(j - i) + 8`.
pub fn aligned_distance_bound(i: u64, j: u64) -> f64 {
    8.0 * ((j - i) as f64).sqrt() + 8.0
}
