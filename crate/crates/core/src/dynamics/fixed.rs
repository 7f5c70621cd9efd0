use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::VectorField;
use crate::conley::{CellId, CubicalGrid};

const ACCEPT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub cell: CellId,
    /// Full field coordinates.
    pub state: Vec<f64>,
    pub residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Field velocity in grid coordinates (tangent components dropped by the
/// chart); zero exactly where the full velocity is zero.
fn reduced_velocity(f: &dyn VectorField, u: &[f64]) -> (Vec<f64>, f64) {
    let z = f.domain().from_grid(u);
    let v = f.velocity(&z);
    let full = norm(&v);
    (f.domain().to_grid(&v), full)
}

/// Samples the center and corners of every region cell, refines the best
/// failing sample with Levenberg–Marquardt confined to the cell, and keeps
/// points whose velocity norm is at most `1e-6`. Points closer than `1e-6` to an
/// earlier report are merged.
pub fn find_fixed_points(f: &dyn VectorField, region: &[CellId], grid: &CubicalGrid) -> Vec<FixedPoint> {
    let mut found: Vec<FixedPoint> = region
        .par_iter()
        .flat_map_iter(|&cell| refine_in_cell(f, grid, cell))
        .collect();
    found.sort_by_key(|p| p.cell);
    let mut out: Vec<FixedPoint> = Vec::new();
    for p in found {
        if out.iter().all(|q| norm(&diff(&q.state, &p.state)) > 1e-6) {
            out.push(p);
        }
    }
    out
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Samples that already pass, plus the refinement of the best sample.
fn refine_in_cell(f: &dyn VectorField, grid: &CubicalGrid, cell: CellId) -> Vec<FixedPoint> {
    let (lo, hi) = grid.cell_box(cell);
    let d = lo.len();
    let inside = |u: &[f64]| f.domain().blocks().map_or(true, |b| in_simplices(u, &b));
    let mut samples = vec![grid.center(cell)];
    for mask in 0..(1u32 << d) {
        samples.push((0..d).map(|a| if mask & (1 << a) != 0 { hi[a] } else { lo[a] }).collect());
    }
    let mut out = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in samples.into_iter().filter(|s| inside(s)) {
        let (rv, full) = reduced_velocity(f, &s);
        if full <= ACCEPT {
            out.push(FixedPoint {
                cell,
                state: f.domain().from_grid(&s),
                residual: full,
            });
            continue;
        }
        let r = norm(&rv);
        if best.as_ref().map_or(true, |(_, b)| r < *b) {
            best = Some((s, r));
        }
    }
    let Some((mut u, _)) = best else {
        return out;
    };
    let clamp = |u: &mut Vec<f64>| {
        for a in 0..d {
            u[a] = u[a].clamp(lo[a], hi[a]);
        }
    };
    let mut lambda = 1e-3;
    let (mut r, mut full) = reduced_velocity(f, &u);
    for _ in 0..60 {
        if full <= ACCEPT * 1e-3 {
            break;
        }
        let j = jacobian(f, &u, &r);
        let jt = j.transpose();
        let rv = DVector::from_column_slice(&r);
        let a = &jt * &j + DMatrix::identity(d, d) * lambda;
        let Some(step) = a.lu().solve(&(-(&jt * rv))) else {
            break;
        };
        let mut cand: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        clamp(&mut cand);
        if !inside(&cand) {
            lambda *= 10.0;
            continue;
        }
        let (rc, fc) = reduced_velocity(f, &cand);
        if norm(&rc) < norm(&r) {
            u = cand;
            r = rc;
            full = fc;
            lambda = (lambda / 3.0).max(1e-12);
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    if full <= ACCEPT {
        out.push(FixedPoint {
            cell,
            state: f.domain().from_grid(&u),
            residual: full,
        });
    }
    out
}

fn jacobian(f: &dyn VectorField, u: &[f64], r: &[f64]) -> DMatrix<f64> {
    let d = u.len();
    let mut j = DMatrix::zeros(r.len(), d);
    for a in 0..d {
        let h = 1e-7 * (1.0 + u[a].abs());
        let mut up = u.to_vec();
        up[a] += h;
        let (rp, _) = reduced_velocity(f, &up);
        for i in 0..r.len() {
            j[(i, a)] = (rp[i] - r[i]) / h;
        }
    }
    j
}

fn in_simplices(u: &[f64], blocks: &[usize]) -> bool {
    let mut axis = 0;
    for &b in blocks {
        let s = &u[axis..axis + b];
        if s.iter().any(|&v| v < -1e-12) || s.iter().sum::<f64>() > 1.0 + 1e-12 {
            return false;
        }
        axis += b;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::testfields;
    use crate::dynamics::{replicator_field, star_field, StarDynamics};
    use crate::game::{km_game, matching_pennies, MixedProfile};

    #[test]
    fn replicator_on_km_finds_pure_equilibria() {
        let g = km_game();
        let f = replicator_field(&g);
        let grid = CubicalGrid::simplex_product(&[2, 2], 4).unwrap();
        let pts = find_fixed_points(&f, grid.active(), &grid);
        let near = |t: [f64; 6]| pts.iter().any(|p| norm(&diff(&p.state, &t)) < 1e-6);
        assert!(near([1.0, 0.0, 0.0, 1.0, 0.0, 0.0]));
        assert!(near([0.0, 1.0, 0.0, 0.0, 1.0, 0.0]));
        assert!(pts.iter().all(|p| p.residual <= 1e-6));
    }

    #[test]
    fn star_field_has_only_its_target() {
        let g = matching_pennies();
        let s = StarDynamics::new(g, MixedProfile::uniform(2, 2), 1.0).unwrap();
        let f = star_field(&s);
        let grid = CubicalGrid::simplex_product(&[1, 1], 6).unwrap();
        let pts = find_fixed_points(&f, grid.active(), &grid);
        assert!(!pts.is_empty());
        for p in &pts {
            assert!(norm(&diff(&p.state, &[0.5, 0.5, 0.5, 0.5])) < 1e-3);
        }
    }

    #[test]
    fn uniform_drift_has_none() {
        let f = testfields::uniform_drift(2);
        let grid = testfields::square_grid(1.0, 8).unwrap();
        assert!(find_fixed_points(&f, grid.active(), &grid).is_empty());
    }
}
