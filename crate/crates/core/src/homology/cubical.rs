use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{ChainComplex, HomologyError};
use crate::conley::{CellId, CubicalGrid};

pub const MAX_DIM: usize = 8;

/// Elementary cube: product over axes of either the point `{c_i}` or the
/// unit interval `[c_i, c_i + 1]` (bit `i` of `extent` set).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    coords: [i32; MAX_DIM],
    extent: u8,
}

impl Cube {
    pub fn new(coords: &[i32], extent: u8) -> Self {
        assert!(coords.len() <= MAX_DIM, "cubes are limited to {MAX_DIM} dimensions");
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Self { coords: c, extent }
    }

    pub fn dim(&self) -> usize {
        self.extent.count_ones() as usize
    }

    pub fn coords(&self, ambient: usize) -> &[i32] {
        &self.coords[..ambient]
    }

    pub fn extent(&self) -> u8 {
        self.extent
    }

    /// Signed codimension-one faces: `Σ_t (−1)^t (upper_t − lower_t)` over
    /// the nondegenerate axes in increasing order.
    pub fn boundary(&self) -> impl Iterator<Item = (Cube, i8)> + '_ {
        (0..MAX_DIM)
            .filter(move |&a| self.extent & (1 << a) != 0)
            .enumerate()
            .flat_map(move |(t, a)| {
                let sign: i8 = if t % 2 == 0 { 1 } else { -1 };
                let mut lower = *self;
                lower.extent &= !(1 << a);
                let mut upper = lower;
                upper.coords[a] += 1;
                [(upper, sign), (lower, -sign)]
            })
    }

    /// All faces of every dimension, including the cube itself.
    fn closure(&self, ambient: usize, out: &mut Vec<Cube>) {
        let axes: Vec<usize> = (0..ambient).filter(|&a| self.extent & (1 << a) != 0).collect();
        let choices = 3usize.pow(axes.len() as u32);
        for mut code in 0..choices {
            let mut c = *self;
            for &a in &axes {
                match code % 3 {
                    0 => {}
                    1 => c.extent &= !(1 << a),
                    _ => {
                        c.extent &= !(1 << a);
                        c.coords[a] += 1;
                    }
                }
                code /= 3;
            }
            out.push(c);
        }
    }
}

/// A finite cubical complex closed under taking faces.
#[derive(Debug, Clone)]
pub struct CubicalComplex {
    ambient: usize,
    /// sorted by (dimension, cube)
    cells: Vec<Cube>,
    index: HashMap<Cube, u32>,
}

#[derive(Serialize, Deserialize)]
struct ComplexFile {
    dim: usize,
    cells: Vec<CellEntry>,
}

#[derive(Serialize, Deserialize)]
struct CellEntry {
    coords: Vec<i32>,
    extent: u8,
}

impl CubicalComplex {
    /// Full complex generated by the given top cubes (all faces added).
    pub fn from_cubes(ambient: usize, cubes: impl IntoIterator<Item = Cube>) -> Self {
        let mut all = Vec::new();
        for c in cubes {
            c.closure(ambient, &mut all);
        }
        all.sort_unstable_by_key(|c| (c.dim(), *c));
        all.dedup();
        Self::from_sorted(ambient, all)
    }

    fn from_sorted(ambient: usize, cells: Vec<Cube>) -> Self {
        let index = cells.iter().enumerate().map(|(i, c)| (*c, i as u32)).collect();
        Self {
            ambient,
            cells,
            index,
        }
    }

    /// Complex on the union of the closed boxes of `cells`.
    pub fn from_grid_cells(grid: &CubicalGrid, cells: impl IntoIterator<Item = CellId>) -> Self {
        let d = grid.dim();
        let full: u8 = ((1u16 << d) - 1) as u8;
        let tops = cells.into_iter().map(|c| {
            let idx: Vec<i32> = grid.multi_index(c).iter().map(|&v| v as i32).collect();
            Cube::new(&idx, full)
        });
        Self::from_cubes(d, tops)
    }

    pub fn empty(ambient: usize) -> Self {
        Self::from_sorted(ambient, Vec::new())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cube] {
        &self.cells
    }

    pub fn contains(&self, c: &Cube) -> bool {
        self.index.contains_key(c)
    }

    pub fn count_by_dim(&self) -> Vec<usize> {
        let mut out = vec![0; self.ambient + 1];
        for c in &self.cells {
            out[c.dim()] += 1;
        }
        out
    }

    pub fn is_subcomplex_of(&self, other: &CubicalComplex) -> bool {
        self.ambient == other.ambient && self.cells.iter().all(|c| other.contains(c))
    }

    /// Chain complex of the pair `(self, sub)`: cells of `sub` are dropped
    /// from every basis and every boundary.
    pub fn relative_chain_complex(&self, sub: Option<&CubicalComplex>) -> ChainComplex {
        let keep: Vec<bool> = self
            .cells
            .iter()
            .map(|c| sub.map_or(true, |s| !s.contains(c)))
            .collect();
        let mut new_index = vec![u32::MAX; self.cells.len()];
        let mut dims = Vec::new();
        for (i, c) in self.cells.iter().enumerate() {
            if keep[i] {
                new_index[i] = dims.len() as u32;
                dims.push(c.dim() as u8);
            }
        }
        let boundary = self
            .cells
            .iter()
            .enumerate()
            .filter(|(i, _)| keep[*i])
            .map(|(_, c)| {
                c.boundary()
                    .filter_map(|(f, s)| {
                        let fi = self.index[&f] as usize;
                        keep[fi].then_some((new_index[fi], s as i64))
                    })
                    .collect()
            })
            .collect();
        ChainComplex::new(self.ambient, dims, boundary)
    }

    /// Checks closure under faces and `∂∘∂ = 0` with exact integer sums.
    pub fn verify(&self) -> Result<(), HomologyError> {
        for c in &self.cells {
            let mut acc: HashMap<Cube, i64> = HashMap::new();
            for (f, s) in c.boundary() {
                if !self.contains(&f) {
                    return Err(HomologyError::NotClosed);
                }
                for (g, t) in f.boundary() {
                    *acc.entry(g).or_default() += (s * t) as i64;
                }
            }
            if acc.values().any(|&v| v != 0) {
                return Err(HomologyError::BoundarySquared);
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let f = ComplexFile {
            dim: self.ambient,
            cells: self
                .cells
                .iter()
                .map(|c| CellEntry {
                    coords: c.coords(self.ambient).to_vec(),
                    extent: c.extent,
                })
                .collect(),
        };
        serde_json::to_string(&f).expect("complex serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, HomologyError> {
        let f: ComplexFile =
            serde_json::from_str(s).map_err(|e| HomologyError::Argument(e.to_string()))?;
        if f.dim > MAX_DIM {
            return Err(HomologyError::Argument(format!("dimension above {MAX_DIM}")));
        }
        let mut seen = HashSet::new();
        let mut cells = Vec::new();
        for e in f.cells {
            if e.coords.len() != f.dim || (e.extent as u32) >> f.dim != 0 {
                return Err(HomologyError::Argument("cell does not match the ambient dimension".into()));
            }
            let c = Cube::new(&e.coords, e.extent);
            if seen.insert(c) {
                cells.push(c);
            }
        }
        cells.sort_unstable_by_key(|c| (c.dim(), *c));
        let cx = Self::from_sorted(f.dim, cells);
        cx.verify()?;
        Ok(cx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_faces() {
        let cx = CubicalComplex::from_cubes(2, [Cube::new(&[0, 0], 0b11)]);
        assert_eq!(cx.count_by_dim(), vec![4, 4, 1]);
        cx.verify().unwrap();
    }

    #[test]
    fn adjacent_squares_share_an_edge() {
        let cx = CubicalComplex::from_cubes(2, [Cube::new(&[0, 0], 0b11), Cube::new(&[1, 0], 0b11)]);
        assert_eq!(cx.count_by_dim(), vec![6, 7, 2]);
    }

    #[test]
    fn boundary_of_boundary_vanishes_in_four_dimensions() {
        let c = Cube::new(&[2, 0, 5, 1], 0b1111);
        let cx = CubicalComplex::from_cubes(4, [c]);
        assert_eq!(cx.count_by_dim(), vec![16, 32, 24, 8, 1]);
        cx.verify().unwrap();
    }

    #[test]
    fn json_round_trip_and_closure_check() {
        let cx = CubicalComplex::from_cubes(2, [Cube::new(&[0, 0], 0b11)]);
        let back = CubicalComplex::from_json(&cx.to_json()).unwrap();
        assert_eq!(back.cells(), cx.cells());
        let open = r#"{"dim":2,"cells":[{"coords":[0,0],"extent":3}]}"#;
        assert!(matches!(CubicalComplex::from_json(open), Err(HomologyError::NotClosed)));
    }
}
