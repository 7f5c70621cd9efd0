use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::snf::{invariant_factors, torsion_of};
use super::{BettiProfile, ChainComplex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Collapses and coreductions first, then elimination.
    Reduce,
    /// Elimination on the full complex.
    SmithOnly,
}

struct Reducer<'a> {
    cc: &'a ChainComplex,
    coboundary: Vec<Vec<(u32, i64)>>,
    alive: Vec<bool>,
    faces: Vec<u32>,
    cofaces: Vec<u32>,
    queue: Vec<u32>,
}

impl<'a> Reducer<'a> {
    fn new(cc: &'a ChainComplex) -> Self {
        let n = cc.len();
        let mut coboundary = vec![Vec::new(); n];
        for i in 0..n {
            for &(f, s) in cc.boundary_of(i) {
                coboundary[f as usize].push((i as u32, s));
            }
        }
        let faces = (0..n).map(|i| cc.boundary_of(i).len() as u32).collect();
        let cofaces = coboundary.iter().map(|c| c.len() as u32).collect();
        Self {
            cc,
            coboundary,
            alive: vec![true; n],
            faces,
            cofaces,
            queue: (0..n as u32).rev().collect(),
        }
    }

    fn kill(&mut self, c: u32) {
        let c = c as usize;
        self.alive[c] = false;
        for &(f, _) in self.cc.boundary_of(c) {
            if self.alive[f as usize] {
                self.cofaces[f as usize] -= 1;
                self.queue.push(f);
            }
        }
        for i in 0..self.coboundary[c].len() {
            let g = self.coboundary[c][i].0;
            if self.alive[g as usize] {
                self.faces[g as usize] -= 1;
                self.queue.push(g);
            }
        }
    }

    /// Runs collapses and coreductions to a fixed point.
    fn drain(&mut self) {
        while let Some(c) = self.queue.pop() {
            let ci = c as usize;
            if !self.alive[ci] {
                continue;
            }
            if self.cofaces[ci] == 1 {
                let &(a, s) = self.coboundary[ci]
                    .iter()
                    .find(|(g, _)| self.alive[*g as usize])
                    .expect("coface count is consistent");
                if s.abs() == 1 {
                    self.kill(a);
                    self.kill(c);
                    continue;
                }
            }
            if self.faces[ci] == 1 {
                let &(b, s) = self
                    .cc
                    .boundary_of(ci)
                    .iter()
                    .find(|(f, _)| self.alive[*f as usize])
                    .expect("face count is consistent");
                if s.abs() == 1 {
                    self.kill(b);
                    self.kill(c);
                }
            }
        }
    }

    /// Removing a vertex splits off a copy of `Z` in degree zero as long as
    /// every surviving edge has augmentation zero.
    fn augmentation_ok(&self) -> bool {
        (0..self.cc.len()).all(|i| {
            if !self.alive[i] || self.cc.dims()[i] != 1 {
                return true;
            }
            let live: Vec<i64> = self
                .cc
                .boundary_of(i)
                .iter()
                .filter(|(f, _)| self.alive[*f as usize])
                .map(|&(_, s)| s)
                .collect();
            live.is_empty() || live.iter().sum::<i64>() == 0
        })
    }

    fn run(&mut self) -> usize {
        let mut critical = 0;
        loop {
            self.drain();
            let Some(v) = (0..self.cc.len())
                .find(|&i| self.alive[i] && self.cc.dims()[i] == 0 && self.cofaces[i] > 0)
            else {
                break;
            };
            if !self.augmentation_ok() {
                break;
            }
            critical += 1;
            self.kill(v as u32);
        }
        critical
    }
}

pub(super) fn homology(cc: &ChainComplex, strategy: Strategy) -> BettiProfile {
    let (alive, critical) = match strategy {
        Strategy::Reduce => {
            let mut r = Reducer::new(cc);
            let critical = r.run();
            (r.alive, critical)
        }
        Strategy::SmithOnly => (vec![true; cc.len()], 0),
    };
    let top = cc.ambient_dim();
    let mut by_dim: Vec<Vec<u32>> = vec![Vec::new(); top + 2];
    for (i, &a) in alive.iter().enumerate() {
        if a {
            by_dim[cc.dims()[i] as usize].push(i as u32);
        }
    }
    // rank and torsion of D_q : C_q -> C_{q-1}
    let mut rank = vec![0usize; top + 2];
    let mut tors: Vec<Vec<u64>> = vec![Vec::new(); top + 2];
    for q in 1..=top {
        let (r, t) = boundary_rank(cc, &alive, &by_dim[q], &by_dim[q - 1]);
        rank[q] = r;
        tors[q - 1] = t;
    }
    let mut out = BettiProfile::zero(top);
    for q in 0..=top {
        let mut b = by_dim[q].len() - rank[q] - rank[q + 1];
        if q == 0 {
            b += critical;
        }
        out.betti[q] = b;
        out.torsion[q] = std::mem::take(&mut tors[q]);
    }
    out
}

/// Rank and torsion part of the boundary map restricted to live cells.
fn boundary_rank(cc: &ChainComplex, alive: &[bool], cols: &[u32], rows: &[u32]) -> (usize, Vec<u64>) {
    if cols.is_empty() || rows.is_empty() {
        return (0, Vec::new());
    }
    let row_of: HashMap<u32, u32> = rows.iter().enumerate().map(|(i, &r)| (r, i as u32)).collect();
    let mut columns: Vec<HashMap<u32, i64>> = cols
        .iter()
        .map(|&c| {
            cc.boundary_of(c as usize)
                .iter()
                .filter(|(f, _)| alive[*f as usize])
                .map(|&(f, s)| (row_of[&f], s))
                .filter(|&(_, s)| s != 0)
                .collect()
        })
        .collect();
    let unit_rank = unit_eliminate(&mut columns, rows.len());
    let live_cols: Vec<&HashMap<u32, i64>> = columns.iter().filter(|c| !c.is_empty()).collect();
    if live_cols.is_empty() {
        return (unit_rank, Vec::new());
    }
    let mut live_rows: Vec<u32> = live_cols.iter().flat_map(|c| c.keys().copied()).collect();
    live_rows.sort_unstable();
    live_rows.dedup();
    let pos: HashMap<u32, usize> = live_rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let mut dense = vec![vec![BigInt::from(0); live_cols.len()]; live_rows.len()];
    for (j, col) in live_cols.iter().enumerate() {
        for (&r, &v) in col.iter() {
            dense[pos[&r]][j] = BigInt::from(v);
        }
    }
    let factors = invariant_factors(dense);
    let torsion = torsion_of(&factors)
        .iter()
        .map(|d| d.to_u64().expect("torsion coefficient fits in u64"))
        .collect();
    (unit_rank + factors.len(), torsion)
}

/// Pivots on `±1` entries with column operations until none is left.
/// Pivot rows and columns are removed. Stops early, leaving the rest to the
/// Smith normal form, if an entry would overflow.
fn unit_eliminate(columns: &mut [HashMap<u32, i64>], nrows: usize) -> usize {
    let mut row_cols: Vec<Vec<u32>> = vec![Vec::new(); nrows];
    for (j, col) in columns.iter().enumerate() {
        for &r in col.keys() {
            row_cols[r as usize].push(j as u32);
        }
    }
    let mut rank = 0;
    let mut progress = true;
    while progress {
        progress = false;
        for p in 0..columns.len() {
            let Some((&r, &s)) = columns[p]
                .iter()
                .filter(|(_, v)| v.abs() == 1)
                .min_by_key(|(r, _)| **r)
            else {
                continue;
            };
            let pivot = std::mem::take(&mut columns[p]);
            let others = std::mem::take(&mut row_cols[r as usize]);
            for &j in &others {
                let j = j as usize;
                if j == p {
                    continue;
                }
                let Some(&v) = columns[j].get(&r) else { continue };
                // col_j -= (v / s) * pivot, with s = ±1
                let f = v * s;
                let mut updates = Vec::with_capacity(pivot.len());
                for (&pr, &pv) in pivot.iter() {
                    let old = columns[j].get(&pr).copied().unwrap_or(0);
                    match f.checked_mul(pv).and_then(|d| old.checked_sub(d)) {
                        Some(nv) => updates.push((pr, old, nv)),
                        None => {
                            columns[p] = pivot;
                            row_cols[r as usize] = others;
                            return rank;
                        }
                    }
                }
                for (pr, old, nv) in updates {
                    if nv == 0 {
                        columns[j].remove(&pr);
                    } else {
                        columns[j].insert(pr, nv);
                        if old == 0 {
                            row_cols[pr as usize].push(j as u32);
                        }
                    }
                }
            }
            rank += 1;
            progress = true;
        }
    }
    rank
}
