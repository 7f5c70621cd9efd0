//! Vector fields and maps on products of simplices, fixed-step integration
//! and fixed-point localization.

mod fields;
mod fixed;
pub mod testfields;

use thiserror::Error;

pub use fields::{mwu_map, replicator_field, star_field, MwuMap, Replicator, StarDynamics, StarField};
pub use fixed::{find_fixed_points, FixedPoint};

pub const DEFAULT_STEP: f64 = 1e-2;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Phase space of a field, in the field's own coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// `Δ^{m−1} × Δ^{n−1}` in full coordinates `(x_1..x_m, y_1..y_n)`.
    SimplexProduct { m: usize, n: usize },
    Euclidean { dim: usize },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match *self {
            Domain::SimplexProduct { m, n } => m + n,
            Domain::Euclidean { dim } => dim,
        }
    }

    /// Dimension of the coordinates used by cubical grids.
    pub fn grid_dim(&self) -> usize {
        match *self {
            Domain::SimplexProduct { m, n } => m + n - 2,
            Domain::Euclidean { dim } => dim,
        }
    }

    /// Simplex block sizes in grid coordinates.
    pub fn blocks(&self) -> Option<Vec<usize>> {
        match *self {
            Domain::SimplexProduct { m, n } => Some(vec![m - 1, n - 1]),
            Domain::Euclidean { .. } => None,
        }
    }

    /// Grid coordinates drop the last entry of each simplex block.
    pub fn to_grid(&self, z: &[f64]) -> Vec<f64> {
        match *self {
            Domain::SimplexProduct { m, n } => {
                let mut u = z[..m - 1].to_vec();
                u.extend_from_slice(&z[m..m + n - 1]);
                u
            }
            Domain::Euclidean { .. } => z.to_vec(),
        }
    }

    pub fn from_grid(&self, u: &[f64]) -> Vec<f64> {
        match *self {
            Domain::SimplexProduct { m, n } => {
                let mut z = Vec::with_capacity(m + n);
                let (a, b) = u.split_at(m - 1);
                z.extend_from_slice(a);
                z.push(1.0 - a.iter().sum::<f64>());
                z.extend_from_slice(b);
                z.push(1.0 - b.iter().sum::<f64>());
                z
            }
            Domain::Euclidean { .. } => u.to_vec(),
        }
    }

    /// Clips negative coordinates and renormalizes each block. Returns the
    /// sup-norm size of the correction.
    pub fn project(&self, z: &mut [f64]) -> f64 {
        let Domain::SimplexProduct { m, .. } = *self else {
            return 0.0;
        };
        let mut moved = 0.0f64;
        let (x, y) = z.split_at_mut(m);
        for block in [x, y] {
            let before: Vec<f64> = block.to_vec();
            for v in block.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let s: f64 = block.iter().sum();
            if s > 0.0 {
                for v in block.iter_mut() {
                    *v /= s;
                }
            } else {
                let u = 1.0 / block.len() as f64;
                block.iter_mut().for_each(|v| *v = u);
            }
            for (a, b) in block.iter().zip(&before) {
                moved = moved.max((a - b).abs());
            }
        }
        moved
    }

    pub fn csv_header(&self) -> String {
        let names: Vec<String> = match *self {
            Domain::SimplexProduct { m, n } => (1..=m)
                .map(|i| format!("x{i}"))
                .chain((1..=n).map(|j| format!("y{j}")))
                .collect(),
            Domain::Euclidean { dim } => (1..=dim).map(|i| format!("z{i}")).collect(),
        };
        format!("t,{}", names.join(","))
    }
}

/// A deterministic continuous-time vector field.
pub trait VectorField: Send + Sync {
    fn domain(&self) -> &Domain;

    fn eval(&self, z: &[f64], out: &mut [f64]);

    /// Global Lipschitz constant, when one is known.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }

    fn dim(&self) -> usize {
        self.domain().dim()
    }

    fn velocity(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval(z, &mut out);
        out
    }
}

/// A deterministic discrete-time map.
pub trait DiscreteMap: Send + Sync {
    fn domain(&self) -> &Domain;
    fn apply(&self, z: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub step: f64,
    pub method: &'static str,
    /// Largest projection correction applied after a step.
    pub projection: f64,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one state")
    }

    pub fn to_csv(&self, domain: &Domain) -> String {
        let mut out = domain.csv_header();
        out.push('\n');
        for (t, z) in self.times.iter().zip(&self.states) {
            out.push_str(&t.to_string());
            for v in z {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Number of steps for horizon `t` at nominal step `h`; the realized step is
/// `t / steps`.
pub fn step_count(t: f64, h: f64) -> usize {
    let r = t / h;
    if (r - r.round()).abs() < 1e-9 {
        r.round() as usize
    } else {
        r.ceil() as usize
    }
}

fn rk4_step(f: &dyn VectorField, z: &[f64], h: f64, buf: &mut [Vec<f64>; 5]) -> Vec<f64> {
    let d = z.len();
    let [k1, k2, k3, k4, tmp] = buf;
    f.eval(z, k1);
    for i in 0..d {
        tmp[i] = z[i] + 0.5 * h * k1[i];
    }
    f.eval(tmp, k2);
    for i in 0..d {
        tmp[i] = z[i] + 0.5 * h * k2[i];
    }
    f.eval(tmp, k3);
    for i in 0..d {
        tmp[i] = z[i] + h * k3[i];
    }
    f.eval(tmp, k4);
    (0..d)
        .map(|i| z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Classical RK4 with projection onto the domain after every step.
pub fn integrate(f: &dyn VectorField, z0: &[f64], t: f64, h: f64) -> Result<Trajectory, DynamicsError> {
    if !(h > 0.0) || !(t >= 0.0) || !t.is_finite() {
        return Err(DynamicsError::Argument("need h > 0 and finite T >= 0".into()));
    }
    if z0.len() != f.dim() {
        return Err(DynamicsError::Argument("initial state has the wrong dimension".into()));
    }
    let steps = step_count(t, h);
    let hs = if steps == 0 { h } else { t / steps as f64 };
    let mut buf: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; z0.len()]);
    let mut times = vec![0.0];
    let mut states = vec![z0.to_vec()];
    let mut projection = 0.0f64;
    let mut z = z0.to_vec();
    for s in 1..=steps {
        z = rk4_step(f, &z, hs, &mut buf);
        let time = s as f64 * hs;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite { time });
        }
        projection = projection.max(f.domain().project(&mut z));
        times.push(time);
        states.push(z.clone());
    }
    Ok(Trajectory {
        times,
        states,
        step: hs,
        method: "rk4",
        projection,
    })
}

/// Final state only; avoids storing the path.
pub fn flow(f: &dyn VectorField, z0: &[f64], t: f64, h: f64) -> Result<Vec<f64>, DynamicsError> {
    let steps = step_count(t, h);
    let hs = if steps == 0 { h } else { t / steps as f64 };
    let mut buf: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; z0.len()]);
    let mut z = z0.to_vec();
    for s in 1..=steps {
        z = rk4_step(f, &z, hs, &mut buf);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite {
                time: s as f64 * hs,
            });
        }
        f.domain().project(&mut z);
    }
    Ok(z)
}

/// `steps` iterates of a discrete map.
pub fn iterate(map: &dyn DiscreteMap, z0: &[f64], steps: usize) -> Result<Vec<Vec<f64>>, DynamicsError> {
    let mut out = vec![z0.to_vec()];
    let mut z = z0.to_vec();
    for s in 1..=steps {
        z = map.apply(&z);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite { time: s as f64 });
        }
        map.domain().project(&mut z);
        out.push(z.clone());
    }
    Ok(out)
}
