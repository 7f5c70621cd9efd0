use std::collections::BTreeSet;

use num_integer::Integer;

use super::ConleyError;

/// Linear (row-major) index of a cell among all `Π k_i` boxes of a grid.
pub type CellId = u32;

/// Decides which boxes of the bounding box belong to the phase space.
pub trait RegionTest: Sync {
    /// `lower`/`upper` are the closed box corners; `index` its multi-index.
    fn intersects(&self, grid: &GridShape, index: &[u32], lower: &[f64], upper: &[f64]) -> bool;
}

/// Every box is active.
pub struct WholeBox;

impl RegionTest for WholeBox {
    fn intersects(&self, _: &GridShape, _: &[u32], _: &[f64], _: &[f64]) -> bool {
        true
    }
}

/// Product of simplices `{z ≥ 0, Σ z ≤ 1}` in reduced coordinates, one block
/// per player. Requires unit bounds on every axis; decided exactly on the
/// integer lattice: a closed box meets a block's simplex iff its lower
/// corner does.
pub struct SimplexProduct {
    pub blocks: Vec<usize>,
}

impl RegionTest for SimplexProduct {
    fn intersects(&self, grid: &GridShape, index: &[u32], _: &[f64], _: &[f64]) -> bool {
        let mut axis = 0;
        for &b in &self.blocks {
            let ks = &grid.k[axis..axis + b];
            let l = ks.iter().fold(1u64, |acc, &k| acc.lcm(&(k as u64)));
            let s: u64 = index[axis..axis + b]
                .iter()
                .zip(ks)
                .map(|(&i, &k)| i as u64 * (l / k as u64))
                .sum();
            if s > l {
                return false;
            }
            axis += b;
        }
        true
    }
}

/// Region given by a predicate on closed boxes.
pub struct BoxPredicate<F>(pub F);

impl<F> RegionTest for BoxPredicate<F>
where
    F: Fn(&[f64], &[f64]) -> bool + Sync,
{
    fn intersects(&self, _: &GridShape, _: &[u32], lower: &[f64], upper: &[f64]) -> bool {
        (self.0)(lower, upper)
    }
}

/// Bounding box and subdivision counts, without the active set.
#[derive(Debug, Clone, PartialEq)]
pub struct GridShape {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub k: Vec<u32>,
}

impl GridShape {
    pub fn dim(&self) -> usize {
        self.k.len()
    }

    pub fn width(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.k[axis] as f64
    }

    pub fn total_cells(&self) -> u64 {
        self.k.iter().map(|&k| k as u64).product()
    }

    pub fn multi_index(&self, cell: CellId) -> Vec<u32> {
        let mut rest = cell;
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = rest % self.k[axis];
            rest /= self.k[axis];
        }
        idx
    }

    pub fn linear_index(&self, idx: &[u32]) -> CellId {
        idx.iter().zip(&self.k).fold(0, |acc, (&i, &k)| acc * k + i)
    }

    pub fn cell_box(&self, cell: CellId) -> (Vec<f64>, Vec<f64>) {
        let idx = self.multi_index(cell);
        self.box_of_index(&idx)
    }

    pub fn box_of_index(&self, idx: &[u32]) -> (Vec<f64>, Vec<f64>) {
        let lo = (0..self.dim())
            .map(|a| self.lower[a] + idx[a] as f64 * self.width(a))
            .collect();
        let hi = (0..self.dim())
            .map(|a| {
                if idx[a] + 1 == self.k[a] {
                    self.upper[a]
                } else {
                    self.lower[a] + (idx[a] + 1) as f64 * self.width(a)
                }
            })
            .collect();
        (lo, hi)
    }

    pub fn center(&self, cell: CellId) -> Vec<f64> {
        let (lo, hi) = self.cell_box(cell);
        lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Per-axis index ranges of the cells covering the closed box
    /// `[lo, hi]`. Cells whose interior meets the box are included; along an
    /// axis where the box is a single value on a grid line both neighbours
    /// are included. `None` if the box leaves the bounding box.
    pub fn covering_ranges(&self, lo: &[f64], hi: &[f64]) -> Option<Vec<(u32, u32)>> {
        let eps = 1e-12;
        let mut ranges = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let w = self.width(a);
            let span = self.upper[a] - self.lower[a];
            if lo[a] < self.lower[a] - eps * span || hi[a] > self.upper[a] + eps * span {
                return None;
            }
            let snap = |v: f64| if (v - v.round()).abs() < 1e-9 { v.round() } else { v };
            let l = snap((lo[a] - self.lower[a]) / w).clamp(0.0, self.k[a] as f64);
            let h = snap((hi[a] - self.lower[a]) / w).clamp(0.0, self.k[a] as f64);
            let kmax = self.k[a] as i64 - 1;
            let (mut i0, mut i1) = (l.floor() as i64, h.ceil() as i64 - 1);
            if i1 < i0 {
                // degenerate extent lying on a grid line
                i0 = (l.round() as i64 - 1).max(0);
                i1 = l.round() as i64;
            }
            ranges.push((i0.clamp(0, kmax) as u32, i1.clamp(0, kmax) as u32));
        }
        Some(ranges)
    }

    /// Cells (active or not) sharing at least a vertex with `cell`, excluding it.
    pub fn vertex_neighbours(&self, cell: CellId) -> Vec<CellId> {
        let idx = self.multi_index(cell);
        let ranges: Vec<(u32, u32)> = idx
            .iter()
            .zip(&self.k)
            .map(|(&i, &k)| (i.saturating_sub(1), (i + 1).min(k - 1)))
            .collect();
        let mut out = Vec::new();
        for_each_in_ranges(&ranges, |m| {
            let c = self.linear_index(m);
            if c != cell {
                out.push(c);
            }
        });
        out
    }
}

/// Calls `f` on every multi-index in the product of inclusive ranges.
pub fn for_each_in_ranges<F: FnMut(&[u32])>(ranges: &[(u32, u32)], mut f: F) {
    if ranges.iter().any(|(a, b)| a > b) {
        return;
    }
    let mut cur: Vec<u32> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&cur);
        let mut axis = ranges.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if cur[axis] < ranges[axis].1 {
                cur[axis] += 1;
                for (a, r) in ranges.iter().enumerate().skip(axis + 1) {
                    cur[a] = r.0;
                }
                break;
            }
        }
    }
}

/// A uniform box decomposition of a bounding box together with the set of
/// cells that belong to the phase space.
#[derive(Debug, Clone)]
pub struct CubicalGrid {
    shape: GridShape,
    active: Vec<CellId>,
    position: Vec<u32>,
}

const INACTIVE: u32 = u32::MAX;

impl CubicalGrid {
    pub fn build(
        bounds: &[(f64, f64)],
        k: &[u32],
        test: &dyn RegionTest,
    ) -> Result<Self, ConleyError> {
        if bounds.len() != k.len() || k.is_empty() {
            return Err(ConleyError::Argument("bounds and subdivisions disagree in dimension".into()));
        }
        if k.iter().any(|&v| v == 0) {
            return Err(ConleyError::Argument("every axis needs k >= 1".into()));
        }
        if bounds.iter().any(|(a, b)| !(a < b)) {
            return Err(ConleyError::Argument("empty bounding interval".into()));
        }
        let shape = GridShape {
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
            k: k.to_vec(),
        };
        if shape.total_cells() > (INACTIVE as u64) {
            return Err(ConleyError::Argument("grid too large".into()));
        }
        let total = shape.total_cells() as u32;
        let active: Vec<CellId> = (0..total)
            .filter(|&c| {
                let idx = shape.multi_index(c);
                let (lo, hi) = shape.box_of_index(&idx);
                test.intersects(&shape, &idx, &lo, &hi)
            })
            .collect();
        Self::from_active(shape, active)
    }

    /// Grid whose active set is given explicitly.
    pub fn from_active(shape: GridShape, mut active: Vec<CellId>) -> Result<Self, ConleyError> {
        if active.is_empty() {
            return Err(ConleyError::EmptyGrid);
        }
        active.sort_unstable();
        active.dedup();
        let mut position = vec![INACTIVE; shape.total_cells() as usize];
        for (p, &c) in active.iter().enumerate() {
            position[c as usize] = p as u32;
        }
        Ok(Self {
            shape,
            active,
            position,
        })
    }

    /// Unit cube `[0,1]^d` with the product-of-simplices active set.
    pub fn simplex_product(blocks: &[usize], k: u32) -> Result<Self, ConleyError> {
        let d: usize = blocks.iter().sum();
        Self::simplex_product_per_axis(blocks, &vec![k; d])
    }

    /// As [`Self::simplex_product`] with `k[a]` cells on axis `a`.
    pub fn simplex_product_per_axis(blocks: &[usize], k: &[u32]) -> Result<Self, ConleyError> {
        let d: usize = blocks.iter().sum();
        if k.len() != d {
            return Err(ConleyError::Argument(format!("expected {d} subdivisions, got {}", k.len())));
        }
        Self::build(
            &vec![(0.0, 1.0); d],
            k,
            &SimplexProduct {
                blocks: blocks.to_vec(),
            },
        )
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn active(&self) -> &[CellId] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn is_active(&self, cell: CellId) -> bool {
        self.position
            .get(cell as usize)
            .is_some_and(|&p| p != INACTIVE)
    }

    /// Position of an active cell in [`Self::active`].
    pub fn node_of(&self, cell: CellId) -> Option<usize> {
        match self.position.get(cell as usize) {
            Some(&p) if p != INACTIVE => Some(p as usize),
            _ => None,
        }
    }

    pub fn cell_box(&self, cell: CellId) -> (Vec<f64>, Vec<f64>) {
        self.shape.cell_box(cell)
    }

    pub fn center(&self, cell: CellId) -> Vec<f64> {
        self.shape.center(cell)
    }

    pub fn multi_index(&self, cell: CellId) -> Vec<u32> {
        self.shape.multi_index(cell)
    }

    pub fn max_width(&self) -> f64 {
        (0..self.dim()).map(|a| self.shape.width(a)).fold(0.0, f64::max)
    }

    /// Active cells whose closed box contains `point`.
    pub fn locate(&self, point: &[f64]) -> Vec<CellId> {
        let Some(r) = self.shape.covering_ranges(point, point) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for_each_in_ranges(&r, |m| {
            let c = self.shape.linear_index(m);
            let (lo, hi) = self.shape.box_of_index(m);
            let inside = point
                .iter()
                .zip(lo.iter().zip(&hi))
                .all(|(p, (a, b))| *p >= a - 1e-12 && *p <= b + 1e-12);
            if inside && self.is_active(c) {
                out.push(c);
            }
        });
        out
    }

    /// Active cells sharing at least a vertex with some cell of `cells`,
    /// including `cells` themselves.
    pub fn collar(&self, cells: &BTreeSet<CellId>) -> BTreeSet<CellId> {
        let mut out = cells.clone();
        for &c in cells {
            out.extend(
                self.shape
                    .vertex_neighbours(c)
                    .into_iter()
                    .filter(|&n| self.is_active(n)),
            );
        }
        out
    }

    /// Total box measure of a cell set.
    pub fn volume(&self, cells: impl IntoIterator<Item = CellId>) -> f64 {
        let unit: f64 = (0..self.dim()).map(|a| self.shape.width(a)).product();
        cells.into_iter().count() as f64 * unit
    }

    /// The grid with every axis subdivided `factor` times, keeping as active
    /// the children of active cells.
    pub fn refine(&self, factor: u32) -> Result<Self, ConleyError> {
        let shape = GridShape {
            lower: self.shape.lower.clone(),
            upper: self.shape.upper.clone(),
            k: self.shape.k.iter().map(|&k| k * factor).collect(),
        };
        let children = self
            .active
            .iter()
            .flat_map(|&c| children_of(&self.shape, &shape, c, factor))
            .collect();
        Self::from_active(shape, children)
    }
}

/// Cells of `fine` (a `factor`-refinement of `coarse`) inside coarse `cell`.
pub fn children_of(coarse: &GridShape, fine: &GridShape, cell: CellId, factor: u32) -> Vec<CellId> {
    let idx = coarse.multi_index(cell);
    let ranges: Vec<(u32, u32)> = idx.iter().map(|&i| (i * factor, i * factor + factor - 1)).collect();
    let mut out = Vec::new();
    for_each_in_ranges(&ranges, |m| out.push(fine.linear_index(m)));
    out
}
