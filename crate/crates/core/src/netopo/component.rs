use rayon::prelude::*;
use serde::Serialize;

use crate::conley::{CellId, CubicalGrid};
use crate::game::BimatrixGame;
use crate::homology::{homology, BettiProfile, CubicalComplex};
use crate::rational::Rational;

use super::classify::{Classifier, ClassificationMode, Verdict};
use super::NeTopologyError;

/// Cells retained around the Nash set after adaptive refinement.
#[derive(Debug, Clone)]
pub struct NashComponents {
    /// Grid whose active cells are the retained ones.
    pub grid: CubicalGrid,
    /// Cells per axis of the final level.
    pub k: u32,
    /// Number of reduced coordinates belonging to player 1.
    pub x_dim: usize,
    /// Retained cells whose status the exact search could not settle.
    pub undecided: Vec<CellId>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentSummary {
    pub k: u32,
    pub cells: usize,
    pub undecided: usize,
    pub clusters: usize,
    pub betti: Vec<usize>,
}

impl NashComponents {
    pub fn cells(&self) -> &[CellId] {
        self.grid.active()
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        self.cells().iter().map(|&c| self.grid.center(c)).collect()
    }

    /// Pairs of retained cells (indices into [`Self::cells`]) sharing at
    /// least a vertex.
    pub fn adjacency(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, &c) in self.cells().iter().enumerate() {
            for nb in self.grid.shape().vertex_neighbours(c) {
                if let Some(b) = self.grid.node_of(nb) {
                    if a < b {
                        out.push((a, b));
                    }
                }
            }
        }
        out
    }

    /// Connected groups of retained cells, as indices into [`Self::cells`].
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let n = self.cells().len();
        let mut adj = vec![Vec::new(); n];
        for (a, b) in self.adjacency() {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![s];
            let mut group = Vec::new();
            while let Some(v) = stack.pop() {
                group.push(v);
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            group.sort_unstable();
            out.push(group);
        }
        out
    }

    pub fn complex(&self) -> CubicalComplex {
        CubicalComplex::from_grid_cells(&self.grid, self.cells().iter().copied())
    }

    pub fn betti(&self) -> BettiProfile {
        homology(&self.complex())
    }

    pub fn summary(&self) -> ComponentSummary {
        ComponentSummary {
            k: self.k,
            cells: self.cells().len(),
            undecided: self.undecided.len(),
            clusters: self.clusters().len(),
            betti: self.betti().betti,
        }
    }

    /// `x1,..,y1,..` rows of cell centres.
    pub fn to_csv(&self) -> String {
        super::centers_csv(&self.grid, self.cells(), self.x_dim)
    }
}

/// Keeps the cells of a `k`-per-axis grid that meet the Nash set (exact
/// classification at ε = 0), then halves the retained cells `depth` times,
/// reclassifying the children at each level.
pub fn nash_component_extract(g: &BimatrixGame, k: u32, depth: u32) -> Result<NashComponents, NeTopologyError> {
    if k < 2 {
        return Err(NeTopologyError::Argument(format!("need k >= 2, got {k}")));
    }
    let zero = Rational::from_integer(0.into());
    let mut grid = CubicalGrid::simplex_product(&[g.rows() - 1, g.cols() - 1], k)?;
    let mut kk = k;
    let mut undecided;
    let mut level = 0;
    loop {
        let idx: Vec<Vec<u32>> = grid.active().iter().map(|&c| grid.multi_index(c)).collect();
        let classifier = Classifier::new(g, &zero, kk, &idx);
        let verdicts: Vec<Verdict> = idx
            .par_iter()
            .map(|i| classifier.classify(i, ClassificationMode::ExactPerCell))
            .collect();
        let kept: Vec<CellId> = grid
            .active()
            .iter()
            .zip(&verdicts)
            .filter(|(_, v)| **v != Verdict::Excluded)
            .map(|(&c, _)| c)
            .collect();
        undecided = grid
            .active()
            .iter()
            .zip(&verdicts)
            .filter(|(_, v)| **v == Verdict::Undecided)
            .map(|(&c, _)| c)
            .collect();
        if kept.is_empty() {
            return Err(NeTopologyError::Argument("no cell meets the Nash set".into()));
        }
        grid = CubicalGrid::from_active(grid.shape().clone(), kept)?;
        if level == depth {
            break;
        }
        grid = grid.refine(2)?;
        kk *= 2;
        level += 1;
    }
    Ok(NashComponents {
        grid,
        k: kk,
        x_dim: g.rows() - 1,
        undecided,
    })
}
