use super::{DiscreteMap, Domain, DynamicsError, VectorField};
use crate::game::{BimatrixGame, GameError, MixedProfile};

/// Payoffs as row-major `f64` matrices, shared by the game fields.
#[derive(Debug, Clone)]
struct FloatGame {
    m: usize,
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl FloatGame {
    fn new(g: &BimatrixGame) -> Self {
        let (a, b) = g.payoffs_f64();
        Self {
            m: g.rows(),
            n: g.cols(),
            a,
            b,
        }
    }

    /// `(M_1 y)_i` and `(M_2ᵀ x)_j`.
    fn payoff_vectors(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let u = (0..m)
            .map(|i| (0..n).map(|j| self.a[i * n + j] * y[j]).sum())
            .collect();
        let v = (0..n)
            .map(|j| (0..m).map(|i| self.b[i * n + j] * x[i]).sum())
            .collect();
        (u, v)
    }

    fn deficit(&self, x: &[f64], y: &[f64]) -> f64 {
        let (u, v) = self.payoff_vectors(x, y);
        let ex: f64 = x.iter().zip(&u).map(|(a, b)| a * b).sum();
        let ey: f64 = y.iter().zip(&v).map(|(a, b)| a * b).sum();
        let bx = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let by = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (bx - ex).max(0.0) + (by - ey).max(0.0)
    }

    fn max_abs(&self) -> f64 {
        self.a.iter().chain(&self.b).fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// `ẋ_i = x_i((M_1 y)_i − xᵀM_1 y)`, `ẏ_j = y_j((M_2ᵀ x)_j − xᵀM_2 y)`.
#[derive(Debug, Clone)]
pub struct Replicator {
    game: FloatGame,
    domain: Domain,
}

pub fn replicator_field(g: &BimatrixGame) -> Replicator {
    Replicator {
        game: FloatGame::new(g),
        domain: Domain::SimplexProduct {
            m: g.rows(),
            n: g.cols(),
        },
    }
}

impl VectorField for Replicator {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn eval(&self, z: &[f64], out: &mut [f64]) {
        let m = self.game.m;
        let (x, y) = z.split_at(m);
        let (u, v) = self.game.payoff_vectors(x, y);
        let ex: f64 = x.iter().zip(&u).map(|(a, b)| a * b).sum();
        let ey: f64 = y.iter().zip(&v).map(|(a, b)| a * b).sum();
        for i in 0..m {
            out[i] = x[i] * (u[i] - ex);
        }
        for j in 0..self.game.n {
            out[m + j] = y[j] * (v[j] - ey);
        }
    }

    /// `4·max|payoff|·(m+n)`: each component is a cubic polynomial whose
    /// partial derivatives on the polytope are bounded by `4·max|payoff|`.
    fn lipschitz_bound(&self) -> Option<f64> {
        Some(4.0 * self.game.max_abs() * (self.game.m + self.game.n) as f64)
    }
}

/// One step of multiplicative weights: `x_i ← x_i·exp(η(M_1 y)_i) / Z`,
/// both players updating simultaneously.
#[derive(Debug, Clone)]
pub struct MwuMap {
    game: FloatGame,
    eta: f64,
    domain: Domain,
}

pub fn mwu_map(g: &BimatrixGame, eta: f64) -> Result<MwuMap, DynamicsError> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(DynamicsError::Argument("eta must be positive".into()));
    }
    Ok(MwuMap {
        game: FloatGame::new(g),
        eta,
        domain: Domain::SimplexProduct {
            m: g.rows(),
            n: g.cols(),
        },
    })
}

impl DiscreteMap for MwuMap {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn apply(&self, z: &[f64]) -> Vec<f64> {
        let m = self.game.m;
        let (x, y) = z.split_at(m);
        let (u, v) = self.game.payoff_vectors(x, y);
        let step = |s: &[f64], p: &[f64]| -> Vec<f64> {
            // shift by the max exponent for stability; cancels in Z
            let top = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = s
                .iter()
                .zip(p)
                .map(|(a, b)| a * (self.eta * (b - top)).exp())
                .collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|v| v / total).collect()
        };
        let mut out = step(x, &u);
        out.extend(step(y, &v));
        out
    }
}

/// Straight-line motion toward a Nash equilibrium at speed `c·D_g`.
#[derive(Debug, Clone)]
pub struct StarDynamics {
    pub game: BimatrixGame,
    pub target: MixedProfile,
    pub c: f64,
}

impl StarDynamics {
    pub fn new(game: BimatrixGame, target: MixedProfile, c: f64) -> Result<Self, GameError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(GameError::Argument("speed constant must be positive".into()));
        }
        if !game.is_nash(&target)? {
            return Err(GameError::Argument("target is not a Nash equilibrium".into()));
        }
        Ok(Self { game, target, c })
    }
}

#[derive(Debug, Clone)]
pub struct StarField {
    game: FloatGame,
    target: Vec<f64>,
    c: f64,
    cutoff: f64,
    r_min: f64,
    domain: Domain,
}

pub fn star_field(s: &StarDynamics) -> StarField {
    StarField {
        game: FloatGame::new(&s.game),
        target: s.target.to_f64(),
        c: s.c,
        cutoff: 1e-12,
        r_min: 1e-2,
        domain: Domain::SimplexProduct {
            m: s.game.rows(),
            n: s.game.cols(),
        },
    }
}

impl StarField {
    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Deficit `D_g` at a state, in `f64`.
    pub fn deficit(&self, z: &[f64]) -> f64 {
        let (x, y) = z.split_at(self.game.m);
        self.game.deficit(x, y)
    }

    /// Radius used by [`VectorField::lipschitz_bound`] for the `1/‖y*−x‖`
    /// factor of the unit direction.
    pub fn with_r_min(mut self, r: f64) -> Self {
        self.r_min = r;
        self
    }
}

impl VectorField for StarField {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn eval(&self, z: &[f64], out: &mut [f64]) {
        let dist = z
            .iter()
            .zip(&self.target)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt();
        if dist <= self.cutoff {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let speed = self.c * self.deficit(z) / dist;
        for (o, (a, b)) in out.iter_mut().zip(z.iter().zip(&self.target)) {
            *o = speed * (b - a);
        }
    }

    /// `c·(L_D + D_max/r_min)` with `L_D = D_max = 4·max|payoff|`.
    fn lipschitz_bound(&self) -> Option<f64> {
        let p = self.game.max_abs();
        let l_d = 4.0 * p;
        let d_max = 4.0 * p;
        Some(self.c * (l_d + d_max / self.r_min))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, iterate};
    use crate::game::{km_game, matching_pennies};
    use crate::rational::{rat, to_f64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<f64> {
        let mut block = |k: usize| {
            let w: Vec<f64> = (0..k).map(|_| -rng.gen::<f64>().ln()).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|v| v / s).collect::<Vec<_>>()
        };
        let mut z = block(m);
        z.extend(block(n));
        z
    }

    #[test]
    fn replicator_vanishes_at_vertices_and_mixed_ne() {
        let f = replicator_field(&km_game());
        for i in 0..3 {
            for j in 0..3 {
                let mut z = vec![0.0; 6];
                z[i] = 1.0;
                z[3 + j] = 1.0;
                assert!(f.velocity(&z).iter().all(|v| *v == 0.0));
            }
        }
        let f = replicator_field(&matching_pennies());
        assert!(f.velocity(&[0.5, 0.5, 0.5, 0.5]).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn replicator_is_tangent() {
        let f = replicator_field(&km_game());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let v = f.velocity(&random_state(&mut rng, 3, 3));
            assert!(v[..3].iter().sum::<f64>().abs() <= 1e-12);
            assert!(v[3..].iter().sum::<f64>().abs() <= 1e-12);
        }
    }

    #[test]
    fn replicator_fixes_support_enumeration_equilibria() {
        let g = matching_pennies();
        let f = replicator_field(&g);
        for p in g.support_enumeration().equilibria {
            assert!(f.velocity(&p.to_f64()).iter().all(|v| v.abs() <= 1e-12));
        }
    }

    #[test]
    fn mwu_normalizes_and_spirals_out_in_matching_pennies() {
        let g = matching_pennies();
        let map = mwu_map(&g, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let z = map.apply(&random_state(&mut rng, 2, 2));
            assert!((z[..2].iter().sum::<f64>() - 1.0).abs() <= 1e-14);
            assert!((z[2..].iter().sum::<f64>() - 1.0).abs() <= 1e-14);
        }
        let z0 = [0.6, 0.4, 0.5, 0.5];
        let dist = |z: &[f64]| z.iter().map(|v| (v - 0.5) * (v - 0.5)).sum::<f64>().sqrt();
        let z1 = map.apply(&z0);
        assert!(dist(&z1) >= dist(&z0));
        assert!(mwu_map(&g, 0.0).is_err());
    }

    #[test]
    fn mwu_moves_toward_dominant_strategy() {
        // row 1 strictly dominant for player 1
        let g = BimatrixGame::from_integers(&[vec![2, 2], vec![0, 0]], &[vec![1, 0], vec![0, 1]]).unwrap();
        let map = mwu_map(&g, 0.5).unwrap();
        let path = iterate(&map, &[0.5, 0.5, 0.3, 0.7], 10).unwrap();
        assert!(path.windows(2).all(|w| w[1][0] > w[0][0]));
        let fixed = map.apply(&[1.0, 0.0, 0.3, 0.7]);
        assert_eq!(fixed[0], 1.0);
    }

    #[test]
    fn star_field_points_at_target() {
        let g = matching_pennies();
        let ne = MixedProfile::uniform(2, 2);
        let s = StarDynamics::new(g.clone(), ne, 1.0).unwrap();
        let f = star_field(&s);
        assert!(f.velocity(&[0.5, 0.5, 0.5, 0.5]).iter().all(|v| *v == 0.0));
        let z = [0.9, 0.1, 0.2, 0.8];
        let v = f.velocity(&z);
        let d: Vec<f64> = z.iter().map(|a| 0.5 - a).collect();
        let cross = v[0] * d[2] - v[2] * d[0];
        assert!(cross.abs() < 1e-12);
        assert!(v.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() > 0.0);
        assert!(StarDynamics::new(g, MixedProfile::pure(2, 2, 0, 0), 1.0).is_err());
    }

    #[test]
    fn star_field_converges_monotonically() {
        let s = StarDynamics::new(matching_pennies(), MixedProfile::uniform(2, 2), 1.0).unwrap();
        let f = star_field(&s);
        let tr = integrate(&f, &[0.9, 0.1, 0.2, 0.8], 50.0, 1e-2).unwrap();
        let dist = |z: &[f64]| z.iter().map(|v| (v - 0.5) * (v - 0.5)).sum::<f64>().sqrt();
        assert!(dist(tr.last()) < 1e-3);
        for w in tr.states.windows(2) {
            assert!(dist(&w[1]) <= dist(&w[0]) + 1e-9);
        }
    }

    #[test]
    fn float_deficit_agrees_with_exact() {
        let g = km_game();
        let p = MixedProfile::new(vec![rat(1, 2), rat(1, 4), rat(1, 4)], vec![rat(1, 3), rat(1, 3), rat(1, 3)])
            .unwrap();
        let s = StarDynamics::new(g.clone(), MixedProfile::pure(3, 3, 0, 0), 1.0).unwrap();
        let f = star_field(&s);
        assert!((f.deficit(&p.to_f64()) - to_f64(&g.deficit(&p).unwrap().total)).abs() < 1e-12);
    }
}
