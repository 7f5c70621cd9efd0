//! Topology of ε-Nash sets: cell classification on a grid over reduced
//! strategy coordinates, Betti profiles of the resulting cell sets,
//! best-response polytopes and extraction of the Nash set itself.

mod classify;
mod component;
mod polytope;

use std::fmt::Write as _;

use num_traits::Signed;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::conley::{CellId, ConleyError, CubicalGrid};
use crate::game::{BimatrixGame, GameError};
use crate::homology::{homology, BettiProfile, CubicalComplex};
use crate::rational::{self, Rational};

pub use classify::ClassificationMode;
pub use component::{nash_component_extract, ComponentSummary, NashComponents};
pub use polytope::{polytope_decomposition, region_membership, PolytopeRegion};

use classify::{Classifier, Verdict};

#[derive(Debug, Error)]
pub enum NeTopologyError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Grid(#[from] ConleyError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Cells of a `k`-per-axis grid over `(x_1..x_{m-1}, y_1..y_{n-1})` whose
/// closed box meets `NE_ε`.
#[derive(Debug, Clone)]
pub struct EpsNashRegion {
    pub grid: CubicalGrid,
    pub k: u32,
    /// Number of reduced coordinates belonging to player 1.
    pub x_dim: usize,
    pub eps_raw: Rational,
    pub mode: ClassificationMode,
    members: Vec<CellId>,
    /// Members that exact mode kept without a witness or a certificate.
    undecided: Vec<CellId>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionReport {
    pub eps_raw: f64,
    pub eps_normalized: Option<f64>,
    pub k: u32,
    pub mode: ClassificationMode,
    pub member_count: usize,
    pub undecided_count: usize,
    pub betti: Vec<usize>,
    pub warnings: Vec<String>,
}

impl EpsNashRegion {
    pub fn members(&self) -> &[CellId] {
        &self.members
    }

    pub fn undecided(&self) -> &[CellId] {
        &self.undecided
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn is_member(&self, cell: CellId) -> bool {
        self.members.binary_search(&cell).is_ok()
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        self.members.iter().map(|&c| self.grid.center(c)).collect()
    }

    pub fn complex(&self) -> CubicalComplex {
        CubicalComplex::from_grid_cells(&self.grid, self.members.iter().copied())
    }

    pub fn report(&self, eps_normalized: Option<&Rational>, betti: &BettiProfile) -> RegionReport {
        RegionReport {
            eps_raw: rational::to_f64(&self.eps_raw),
            eps_normalized: eps_normalized.map(rational::to_f64),
            k: self.k,
            mode: self.mode,
            member_count: self.members.len(),
            undecided_count: self.undecided.len(),
            betti: betti.betti.clone(),
            warnings: self.warnings.clone(),
        }
    }

    /// `x1,x2,..,y1,..` rows of member-cell centres.
    pub fn to_csv(&self) -> String {
        centers_csv(&self.grid, &self.members, self.x_dim)
    }
}

fn axis_names(dim: usize, m1: usize) -> Vec<String> {
    (0..dim)
        .map(|a| if a < m1 { format!("x{}", a + 1) } else { format!("y{}", a - m1 + 1) })
        .collect()
}

pub(crate) fn centers_csv(grid: &CubicalGrid, cells: &[CellId], x_dim: usize) -> String {
    let mut out = axis_names(grid.dim(), x_dim).join(",");
    out.push('\n');
    for &c in cells {
        let p = grid.center(c);
        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// `ε_raw = (max payoff − min payoff) · e`.
pub fn normalized_to_raw(g: &BimatrixGame, e: &Rational) -> Rational {
    let (lo, hi) = g.payoff_range();
    (hi - lo) * e
}

/// Classifies every active cell of the `k`-per-axis grid over reduced
/// coordinates. In exact mode undecided cells count as members and are
/// listed separately.
pub fn eps_nash_region(
    g: &BimatrixGame,
    eps_raw: &Rational,
    k: u32,
    mode: ClassificationMode,
) -> Result<EpsNashRegion, NeTopologyError> {
    if eps_raw.is_negative() {
        return Err(NeTopologyError::Argument(format!("eps must be nonnegative, got {eps_raw}")));
    }
    if k < 2 {
        return Err(NeTopologyError::Argument(format!("need k >= 2, got {k}")));
    }
    if g.rows() < 2 || g.cols() < 2 {
        return Err(NeTopologyError::Argument("each player needs two strategies".into()));
    }
    let grid = CubicalGrid::simplex_product(&[g.rows() - 1, g.cols() - 1], k)?;
    let idx: Vec<Vec<u32>> = grid.active().iter().map(|&c| grid.multi_index(c)).collect();
    let classifier = Classifier::new(g, eps_raw, k, &idx);
    let verdicts: Vec<Verdict> = idx.par_iter().map(|i| classifier.classify(i, mode)).collect();
    let mut members = Vec::new();
    let mut undecided = Vec::new();
    for (&c, v) in grid.active().iter().zip(&verdicts) {
        match v {
            Verdict::Member => members.push(c),
            Verdict::Undecided => {
                members.push(c);
                undecided.push(c);
            }
            Verdict::Excluded => {}
        }
    }
    let mut warnings = Vec::new();
    if members.is_empty() {
        warnings.push(format!("no member cells at k = {k}; the grid may be too coarse for this mode"));
    }
    if !undecided.is_empty() {
        warnings.push(format!("{} cells undecided and kept as members", undecided.len()));
    }
    Ok(EpsNashRegion {
        grid,
        k,
        x_dim: g.rows() - 1,
        eps_raw: eps_raw.clone(),
        mode,
        members,
        undecided,
        warnings,
    })
}

/// Betti profile of the union of the closed member boxes.
pub fn region_homology(r: &EpsNashRegion) -> Result<BettiProfile, NeTopologyError> {
    if r.members.is_empty() {
        return Err(NeTopologyError::Argument("empty region".into()));
    }
    Ok(homology(&r.complex()))
}

/// Orthogonal projection of member-cell centres onto the hyperplane normal
/// to `direction`, in an orthonormal basis of that hyperplane.
pub fn project_3d(r: &EpsNashRegion, direction: &[f64]) -> Result<Vec<[f64; 3]>, NeTopologyError> {
    project_points(&r.centers(), direction)
}

pub fn project_points(points: &[Vec<f64>], direction: &[f64]) -> Result<Vec<[f64; 3]>, NeTopologyError> {
    if direction.len() != 4 {
        return Err(NeTopologyError::Argument(format!(
            "direction must have 4 entries, got {}",
            direction.len()
        )));
    }
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(NeTopologyError::Argument("direction must be nonzero".into()));
    }
    let basis = complement_basis(&direction.iter().map(|v| v / norm).collect::<Vec<_>>());
    Ok(points
        .iter()
        .map(|p| {
            let c = |b: &[f64]| b.iter().zip(p).map(|(u, v)| u * v).sum::<f64>();
            [c(&basis[0]), c(&basis[1]), c(&basis[2])]
        })
        .collect())
}

/// Gram–Schmidt on the standard basis against a unit vector.
fn complement_basis(unit: &[f64]) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = vec![unit.to_vec()];
    for a in 0..unit.len() {
        let mut v = vec![0.0; unit.len()];
        v[a] = 1.0;
        for b in &kept {
            let d: f64 = b.iter().zip(&v).map(|(p, q)| p * q).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            kept.push(v.iter().map(|x| x / n).collect());
        }
        if kept.len() == unit.len() {
            break;
        }
    }
    kept.split_off(1)
}

pub fn points_csv(points: &[[f64; 3]]) -> String {
    let mut out = String::from("x,y,z\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p[0], p[1], p[2]);
    }
    out
}

/// Bracket `[lo, hi]` on `ε_raw` with a circle-like region at `lo` and
/// `b_1 = 0` at `hi`.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionBracket {
    #[serde(with = "rational::serde_str")]
    pub lo: Rational,
    #[serde(with = "rational::serde_str")]
    pub hi: Rational,
    pub betti_lo: Vec<usize>,
    pub betti_hi: Vec<usize>,
    pub steps: Vec<(f64, Vec<usize>)>,
}

/// Bisection on `ε_raw` for the first value where `b_1` vanishes, down to
/// bracket width `width`.
pub fn bisect_transition(
    g: &BimatrixGame,
    lo: &Rational,
    hi: &Rational,
    k: u32,
    width: &Rational,
) -> Result<TransitionBracket, NeTopologyError> {
    if lo >= hi || !width.is_positive() {
        return Err(NeTopologyError::Argument("need lo < hi and a positive width".into()));
    }
    let betti = |e: &Rational| -> Result<BettiProfile, NeTopologyError> {
        region_homology(&eps_nash_region(g, e, k, ClassificationMode::ExactPerCell)?)
    };
    let mut steps = Vec::new();
    let (mut lo, mut hi) = (lo.clone(), hi.clone());
    let mut b_lo = betti(&lo)?;
    let mut b_hi = betti(&hi)?;
    steps.push((rational::to_f64(&lo), b_lo.betti.clone()));
    steps.push((rational::to_f64(&hi), b_hi.betti.clone()));
    if b_lo.get(1) == 0 || b_hi.get(1) != 0 {
        return Err(NeTopologyError::Argument(format!(
            "no transition in bracket: b1 = {} at lo, {} at hi",
            b_lo.get(1),
            b_hi.get(1)
        )));
    }
    let two = Rational::from_integer(2.into());
    while &hi - &lo > *width {
        let mid = (&lo + &hi) / &two;
        let b = betti(&mid)?;
        steps.push((rational::to_f64(&mid), b.betti.clone()));
        if b.get(1) == 0 {
            hi = mid;
            b_hi = b;
        } else {
            lo = mid;
            b_lo = b;
        }
    }
    Ok(TransitionBracket {
        lo,
        hi,
        betti_lo: b_lo.betti,
        betti_hi: b_hi.betti,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{km_game, matching_pennies, MixedProfile};
    use crate::rational::{int, rat};

    #[test]
    fn km_pure_equilibria_cells_are_members_at_zero() {
        let g = km_game();
        let r = eps_nash_region(&g, &int(0), 8, ClassificationMode::ExactPerCell).unwrap();
        for p in [[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]] {
            let cells = r.grid.locate(&p);
            assert!(!cells.is_empty());
            assert!(cells.iter().all(|&c| r.is_member(c)), "{p:?}");
        }
    }

    #[test]
    fn modes_agree_far_from_the_boundary() {
        let g = matching_pennies();
        let e = rat(1, 2);
        let exact = eps_nash_region(&g, &e, 8, ClassificationMode::ExactPerCell).unwrap();
        let any = eps_nash_region(&g, &e, 8, ClassificationMode::VertexAny).unwrap();
        let center = eps_nash_region(&g, &e, 8, ClassificationMode::CenterSample).unwrap();
        // sampled members are genuine members
        for c in center.members().iter().chain(any.members()) {
            assert!(exact.is_member(*c));
        }
        assert!(exact.undecided().is_empty());
    }

    #[test]
    fn exact_members_match_a_fine_lattice_oracle_for_matching_pennies() {
        // in 2×2 games the region is 2-d; a cell meets NE_ε iff some point
        // of a fine rational lattice in it passes, up to lattice resolution
        let g = matching_pennies();
        let eps = rat(1, 5);
        let k = 6;
        let r = eps_nash_region(&g, &eps, k, ClassificationMode::ExactPerCell).unwrap();
        let steps = 24;
        for &c in r.grid.active() {
            let idx = r.grid.multi_index(c);
            let mut any = false;
            for s in 0..=steps {
                for t in 0..=steps {
                    let x = rat(idx[0] as i64 * steps + s, k as i64 * steps);
                    let y = rat(idx[1] as i64 * steps + t, k as i64 * steps);
                    let p = MixedProfile::new(vec![x.clone(), int(1) - x], vec![y.clone(), int(1) - y]).unwrap();
                    any |= g.is_epsilon_nash(&p, &eps).unwrap();
                }
            }
            if any {
                assert!(r.is_member(c), "cell {idx:?} has an ε-equilibrium");
            }
        }
    }

    #[test]
    fn single_cell_region_is_contractible() {
        let g = km_game();
        let mut r = eps_nash_region(&g, &int(0), 4, ClassificationMode::ExactPerCell).unwrap();
        r.members.truncate(1);
        assert!(region_homology(&r).unwrap().betti_eq(&[1]));
        assert_eq!(project_3d(&r, &[0.0, 0.0, 0.0, 1.0]).unwrap().len(), 1);
    }

    #[test]
    fn projection_along_an_axis_drops_it() {
        let pts = vec![vec![0.1, 0.2, 0.3, 0.4], vec![0.5, 0.6, 0.7, 0.8]];
        let out = project_points(&pts, &[0.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(out, vec![[0.1, 0.2, 0.3], [0.5, 0.6, 0.7]]);
        assert!(project_points(&pts, &[0.0; 4]).is_err());
    }

    #[test]
    fn projection_is_orthogonal_to_direction() {
        let d = [1.0, -2.0, 0.5, 3.0];
        let basis = complement_basis(&{
            let n = d.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
            d.iter().map(|v| v / n).collect::<Vec<_>>()
        });
        assert_eq!(basis.len(), 3);
        for b in &basis {
            let dot: f64 = b.iter().zip(&d).map(|(p, q)| p * q).sum();
            assert!(dot.abs() < 1e-12);
        }
    }

    #[test]
    fn negative_eps_is_rejected() {
        assert!(eps_nash_region(&km_game(), &rat(-1, 10), 4, ClassificationMode::ExactPerCell).is_err());
    }
}
