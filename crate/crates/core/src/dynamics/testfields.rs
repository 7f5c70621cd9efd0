//! Analytic vector fields with known invariant sets, used to validate the
//! combinatorial machinery.

use super::{Domain, VectorField};
use crate::conley::{BoxPredicate, ConleyError, CubicalGrid, WholeBox};

type Rhs = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A vector field given by a closure.
pub struct FnField {
    name: &'static str,
    domain: Domain,
    rhs: Rhs,
    lipschitz: Option<f64>,
}

impl FnField {
    pub fn new(
        name: &'static str,
        domain: Domain,
        lipschitz: Option<f64>,
        rhs: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name,
            domain,
            rhs: Box::new(rhs),
            lipschitz,
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }
}

impl std::fmt::Debug for FnField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FnField({})", self.name)
    }
}

impl VectorField for FnField {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn eval(&self, z: &[f64], out: &mut [f64]) {
        (self.rhs)(z, out)
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz
    }
}

fn euclid(dim: usize) -> Domain {
    Domain::Euclidean { dim }
}

pub fn zero(dim: usize) -> FnField {
    FnField::new("zero", euclid(dim), Some(0.0), |_, out| out.fill(0.0))
}

/// `ż = −z`; a stable node at the origin.
pub fn linear_decay(dim: usize) -> FnField {
    FnField::new("decay", euclid(dim), Some(1.0), |z, out| {
        for (o, v) in out.iter_mut().zip(z) {
            *o = -v;
        }
    })
}

/// Constant velocity along the first axis.
pub fn uniform_drift(dim: usize) -> FnField {
    FnField::new("drift", euclid(dim), Some(0.0), |_, out| {
        out.fill(0.0);
        out[0] = 1.0;
    })
}

/// `ẋ = x − x³`: sinks at ±1, source at 0.
pub fn double_well() -> FnField {
    FnField::new("double-well", euclid(1), Some(5.75), |z, out| {
        out[0] = z[0] - z[0] * z[0] * z[0];
    })
}

/// Rigid rotation `ẋ = −y, ẏ = x`.
pub fn rotation() -> FnField {
    FnField::new("rotation", euclid(2), Some(1.0), |z, out| {
        out[0] = -z[1];
        out[1] = z[0];
    })
}

/// `ẋ = x, ẏ = −y`.
pub fn saddle() -> FnField {
    FnField::new("saddle", euclid(2), Some(1.0), |z, out| {
        out[0] = z[0];
        out[1] = -z[1];
    })
}

/// `ẋ = x, ẏ = y`.
pub fn repeller() -> FnField {
    FnField::new("repeller", euclid(2), Some(1.0), |z, out| {
        out[0] = z[0];
        out[1] = z[1];
    })
}

/// `ṙ = r(1 − r²), θ̇ = 1`: a stable limit cycle on the unit circle around a
/// repelling focus.
pub fn limit_cycle() -> FnField {
    FnField::new("limit-cycle", euclid(2), None, |z, out| {
        let r2 = z[0] * z[0] + z[1] * z[1];
        out[0] = z[0] - z[1] - z[0] * r2;
        out[1] = z[0] + z[1] - z[1] * r2;
    })
}

/// Radius of the attracting circle of [`km_circle_attractor`], in reduced
/// `(x_1, x_2)` coordinates around the centroid.
pub const KM_CIRCLE_RADIUS: f64 = 0.15;

/// A field on `Δ² × Δ²` whose x-part has an attracting circle around the
/// centroid with a repelling centre, and whose y-part contracts to the
/// centroid. Invariant set: a disc; attractor: the circle; repeller: the
/// centre, with two unstable directions.
pub fn km_circle_attractor() -> FnField {
    let c = 1.0 / 3.0;
    let (rho, kappa, omega, r0) = (KM_CIRCLE_RADIUS, 10.0, 1.0, 0.22);
    FnField::new(
        "km-circle",
        Domain::SimplexProduct { m: 3, n: 3 },
        None,
        move |z, out| {
            let (d1, d2) = (z[0] - c, z[1] - c);
            let r2 = d1 * d1 + d2 * d2;
            let bump = (1.0 - r2 / (r0 * r0)).max(0.0).powi(2);
            let radial = -kappa * 4.0 * (r2 - rho * rho);
            let u1 = radial * d1 - omega * bump * d2;
            let u2 = radial * d2 + omega * bump * d1;
            let w1 = -2.0 * (z[3] - c);
            let w2 = -2.0 * (z[4] - c);
            out.copy_from_slice(&[u1, u2, -u1 - u2, w1, w2, -w1 - w2]);
        },
    )
}

/// `[lo, hi]` with `k` cells.
pub fn interval_grid(lo: f64, hi: f64, k: u32) -> Result<CubicalGrid, ConleyError> {
    CubicalGrid::build(&[(lo, hi)], &[k], &WholeBox)
}

/// `[−a, a]²` with `k` cells per axis.
pub fn square_grid(a: f64, k: u32) -> Result<CubicalGrid, ConleyError> {
    CubicalGrid::build(&[(-a, a), (-a, a)], &[k, k], &WholeBox)
}

/// Cells of `[−r_out, r_out]²` meeting the annulus `r_in ≤ |z| ≤ r_out`.
pub fn annulus_grid(r_in: f64, r_out: f64, k: u32) -> Result<CubicalGrid, ConleyError> {
    let test = BoxPredicate(move |lo: &[f64], hi: &[f64]| {
        let near: f64 = (0..2).map(|a| (0.0f64).clamp(lo[a], hi[a]).powi(2)).sum();
        let far: f64 = (0..2).map(|a| lo[a].abs().max(hi[a].abs()).powi(2)).sum();
        near.sqrt() <= r_out && far.sqrt() >= r_in
    });
    CubicalGrid::build(&[(-r_out, r_out), (-r_out, r_out)], &[k, k], &test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::flow;

    #[test]
    fn limit_cycle_attracts() {
        let f = limit_cycle();
        let z = flow(&f, &[0.1, 0.0], 20.0, 1e-2).unwrap();
        assert!(((z[0] * z[0] + z[1] * z[1]).sqrt() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn km_circle_field_is_tangent_and_attracts_to_the_circle() {
        let f = km_circle_attractor();
        let v = f.velocity(&[0.5, 0.2, 0.3, 0.1, 0.1, 0.8]);
        assert!((v[..3].iter().sum::<f64>()).abs() < 1e-15);
        assert!((v[3..].iter().sum::<f64>()).abs() < 1e-15);
        let z = flow(&f, &[0.4, 0.3, 0.3, 0.9, 0.05, 0.05], 30.0, 1e-2).unwrap();
        let r = ((z[0] - 1.0 / 3.0).powi(2) + (z[1] - 1.0 / 3.0).powi(2)).sqrt();
        assert!((r - KM_CIRCLE_RADIUS).abs() < 1e-6);
        assert!((z[3] - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn km_circle_field_points_inward_on_the_boundary() {
        let f = km_circle_attractor();
        for t in 0..=20 {
            let s = t as f64 / 20.0;
            // edge x3 = 0 has outward normal (1,1) in reduced coordinates
            let v = f.velocity(&[s, 1.0 - s, 0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
            assert!(v[0] + v[1] <= 1e-12);
            // edge x1 = 0
            let v = f.velocity(&[0.0, s, 1.0 - s, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
            assert!(v[0] >= -1e-12);
        }
    }

    #[test]
    fn annulus_grid_excludes_the_hole() {
        let g = annulus_grid(0.5, 1.0, 8).unwrap();
        let centre = g.shape().linear_index(&[3, 3]);
        assert!(!g.is_active(centre));
        assert!(g.len() < 64);
    }
}
