use std::collections::BTreeSet;

use super::morse::invariant_part;
use super::{CellId, ConleyError, MorseGraph, TransitionGraph};
use crate::homology::{relative_homology, BettiProfile, CubicalComplex};

/// Cell sets `L ⊆ N` of a combinatorial index pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPairCells {
    pub n: BTreeSet<CellId>,
    pub l: BTreeSet<CellId>,
}

impl IndexPairCells {
    /// `L` is positively invariant relative to `N`, and every edge leaving
    /// `N` starts in `L`.
    pub fn verify(&self, tg: &TransitionGraph) -> Result<(), ConleyError> {
        if !self.l.is_subset(&self.n) {
            return Err(ConleyError::IndexPair("L is not contained in N".into()));
        }
        for &c in &self.n {
            let v = tg
                .node(c)
                .ok_or_else(|| ConleyError::IndexPair(format!("cell {c} is not active")))?;
            let in_l = self.l.contains(&c);
            let leaves = tg.has_sink_edge(v)
                || tg
                    .successors(v)
                    .iter()
                    .any(|&w| !self.n.contains(&tg.cell(w as usize)));
            if leaves && !in_l {
                return Err(ConleyError::IndexPair(format!("edge leaves N from cell {c} outside L")));
            }
            if in_l {
                for &w in tg.successors(v) {
                    let d = tg.cell(w as usize);
                    if self.n.contains(&d) && !self.l.contains(&d) {
                        return Err(ConleyError::IndexPair(format!("edge {c} -> {d} re-enters N \\ L")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Cubical complexes on the closed boxes of `N` and `L`.
    pub fn complexes(&self, tg: &TransitionGraph) -> (CubicalComplex, CubicalComplex) {
        let grid = tg.grid();
        (
            CubicalComplex::from_grid_cells(grid, self.n.iter().copied()),
            CubicalComplex::from_grid_cells(grid, self.l.iter().copied()),
        )
    }

    /// `H_*(N, L)`.
    pub fn conley_index(&self, tg: &TransitionGraph) -> Result<BettiProfile, ConleyError> {
        let (n, l) = self.complexes(tg);
        n.verify().map_err(|e| ConleyError::IndexPair(e.to_string()))?;
        relative_homology(&n, &l).map_err(|e| ConleyError::IndexPair(e.to_string()))
    }
}

/// Widest collar tried by [`index_pair`], in cells.
pub const MAX_COLLAR: usize = 4;

/// Index pair for an invariant set `S` that is combinatorially isolated by
/// its collar `C` of some width up to [`MAX_COLLAR`]: `Inv(C) ⊆ S` and
/// `F(S) ⊆ C`. The exit set `L` is everything reachable from `S` inside `C`
/// other than `S` itself, and `N = S ∪ L`.
pub fn index_pair(tg: &TransitionGraph, mg: &MorseGraph, s: &BTreeSet<CellId>) -> Result<IndexPairCells, ConleyError> {
    if s.is_empty() {
        return Err(ConleyError::Argument("empty invariant set".into()));
    }
    let mut nodes = Vec::with_capacity(s.len());
    let mut image = BTreeSet::new();
    for &c in s {
        let v = tg.node(c).ok_or_else(|| ConleyError::Argument(format!("cell {c} is not active")))?;
        if tg.has_sink_edge(v) {
            return Err(ConleyError::IndexPair(format!("cell {c} maps out of the domain")));
        }
        nodes.push(v);
        image.extend(tg.successors(v).iter().map(|&w| tg.cell(w as usize)));
    }
    let mut collar = s.clone();
    let mut last = ConleyError::IndexPair("image of S leaves its collar; refine the grid".into());
    for width in 1..=MAX_COLLAR {
        collar = tg.grid().collar(&collar);
        let foreign = collar
            .iter()
            .filter(|c| !s.contains(c))
            .map(|&c| tg.node(c).expect("collar cells are active"))
            .find(|&v| mg.is_recurrent_node(v));
        let stray = match foreign {
            Some(v) => Some(v),
            None => invariant_part(tg, &collar)?
                .difference(s)
                .next()
                .map(|&c| tg.node(c).expect("active")),
        };
        if let Some(v) = stray {
            if width == 1 {
                return Err(ConleyError::Isolation { scc: mg.scc_of_node(v) });
            }
            return Err(last);
        }
        if !image.is_subset(&collar) {
            continue;
        }
        let inside: Vec<bool> = (0..tg.len()).map(|v| collar.contains(&tg.cell(v))).collect();
        let reach = tg.forward_closure(nodes.iter().copied(), |v| inside[v]);
        let n: BTreeSet<CellId> = (0..tg.len()).filter(|&v| reach[v]).map(|v| tg.cell(v)).collect();
        let l: BTreeSet<CellId> = n.difference(s).copied().collect();
        let pair = IndexPairCells { n, l };
        match pair.verify(tg) {
            Ok(()) => return Ok(pair),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Cells of one SCC.
pub fn scc_cells(mg: &MorseGraph, id: usize) -> BTreeSet<CellId> {
    mg.sccs()[id].cells.iter().copied().collect()
}
