use std::collections::BTreeSet;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::exact::{feasible_point, HalfSpace};
use crate::game::{region_labels, BimatrixGame, MixedProfile};
use crate::rational::Rational;

use super::NeTopologyError;

/// Profiles where row `i` is a best response for player 1 and column `j`
/// for player 2, as half-spaces in reduced coordinates
/// `(x_1..x_{m-1}, y_1..y_{n-1})`. Labels are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PolytopeRegion {
    pub i: usize,
    pub j: usize,
    #[serde(skip)]
    pub constraints: Vec<HalfSpace>,
}

impl PolytopeRegion {
    pub fn dim(&self) -> usize {
        self.constraints[0].coeffs.len()
    }

    pub fn contains(&self, p: &MixedProfile) -> bool {
        let z = reduced(p);
        self.constraints.iter().all(|h| h.contains(&z))
    }

    /// Whether the region meets the closed box `[lo, hi]` (reduced
    /// coordinates), decided exactly.
    pub fn meets_box(&self, lo: &[Rational], hi: &[Rational]) -> bool {
        let d = self.dim();
        let mut cons = self.constraints.clone();
        for a in 0..d {
            let mut e = vec![Rational::zero(); d];
            e[a] = Rational::one();
            cons.push(HalfSpace::at_least(e.clone(), lo[a].clone()));
            cons.push(HalfSpace::new(e, hi[a].clone()));
        }
        feasible_point(&cons, d).is_some()
    }
}

fn reduced(p: &MixedProfile) -> Vec<Rational> {
    let (x, y) = (p.x(), p.y());
    x[..x.len() - 1].iter().chain(&y[..y.len() - 1]).cloned().collect()
}

/// Simplex constraints of one player embedded at `offset` in a space of
/// dimension `total`.
fn simplex_constraints(d: usize, offset: usize, total: usize) -> Vec<HalfSpace> {
    let mut out = Vec::with_capacity(d + 1);
    for a in 0..d {
        let mut e = vec![Rational::zero(); total];
        e[offset + a] = -Rational::one();
        out.push(HalfSpace::new(e, Rational::zero()));
    }
    let mut s = vec![Rational::zero(); total];
    for v in &mut s[offset..offset + d] {
        *v = Rational::one();
    }
    out.push(HalfSpace::new(s, Rational::one()));
    out
}

/// `Σ_b (c_b) v_b ≤ 0` over full coordinates of one player, rewritten in
/// reduced coordinates at `offset`.
fn reduced_halfspace(c: &[Rational], offset: usize, total: usize) -> HalfSpace {
    let last = c.last().expect("nonempty").clone();
    let mut coeffs = vec![Rational::zero(); total];
    for (b, v) in c[..c.len() - 1].iter().enumerate() {
        coeffs[offset + b] = v - &last;
    }
    HalfSpace::new(coeffs, -last)
}

/// The `m·n` best-response regions.
pub fn polytope_decomposition(g: &BimatrixGame) -> Vec<PolytopeRegion> {
    let (m, n) = (g.rows(), g.cols());
    let total = m - 1 + n - 1;
    let mut base = simplex_constraints(m - 1, 0, total);
    base.extend(simplex_constraints(n - 1, m - 1, total));
    let mut out = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let mut cons = base.clone();
            // (Ay)_{i'} − (Ay)_i ≤ 0
            for r in (0..m).filter(|&r| r != i) {
                let c: Vec<Rational> = (0..n).map(|b| g.payoff1(r, b) - g.payoff1(i, b)).collect();
                cons.push(reduced_halfspace(&c, m - 1, total));
            }
            // (xᵀB)_{j'} − (xᵀB)_j ≤ 0
            for s in (0..n).filter(|&s| s != j) {
                let c: Vec<Rational> = (0..m).map(|a| g.payoff2(a, s) - g.payoff2(a, j)).collect();
                cons.push(reduced_halfspace(&c, 0, total));
            }
            out.push(PolytopeRegion { i, j, constraints: cons });
        }
    }
    out
}

/// All zero-based label pairs `(i, j)` whose region contains `p`.
pub fn region_membership(g: &BimatrixGame, p: &MixedProfile) -> Result<BTreeSet<(usize, usize)>, NeTopologyError> {
    Ok(region_labels(g, p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::km_game;
    use crate::rational::rat;
    use rand::{Rng, SeedableRng};

    fn random_profile(rng: &mut impl Rng, m: usize, n: usize) -> MixedProfile {
        let mut draw = |k: usize| {
            let w: Vec<i64> = (0..k).map(|_| rng.gen_range(0..20)).collect();
            let s: i64 = w.iter().sum::<i64>().max(1);
            if w.iter().all(|&v| v == 0) {
                let mut e = vec![Rational::zero(); k];
                e[0] = Rational::one();
                return e;
            }
            w.iter().map(|&v| rat(v, s)).collect::<Vec<_>>()
        };
        let x = draw(m);
        let y = draw(n);
        MixedProfile::new(x, y).unwrap()
    }

    #[test]
    fn km_pure_profiles() {
        let g = km_game();
        let labels = region_membership(&g, &MixedProfile::pure(3, 3, 0, 0)).unwrap();
        assert_eq!(labels, [(0, 0), (0, 2), (2, 0), (2, 2)].into_iter().collect());
        let labels = region_membership(&g, &MixedProfile::pure(3, 3, 1, 1)).unwrap();
        let rows: BTreeSet<usize> = labels.iter().map(|l| l.0).collect();
        assert_eq!(rows, [0, 1, 2].into_iter().collect());
    }

    #[test]
    fn halfspaces_agree_with_best_responses() {
        let g = km_game();
        let regions = polytope_decomposition(&g);
        assert_eq!(regions.len(), 9);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let p = random_profile(&mut rng, 3, 3);
            let labels = region_membership(&g, &p).unwrap();
            assert!(!labels.is_empty());
            for r in &regions {
                assert_eq!(r.contains(&p), labels.contains(&(r.i, r.j)), "{p} in P{}{}", r.i, r.j);
            }
        }
    }
}
