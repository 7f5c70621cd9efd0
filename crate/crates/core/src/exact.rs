//! Small exact linear-algebra kernels over the rationals: dense solves,
//! Fourier–Motzkin feasibility with a witness, and vertex enumeration of
//! low-dimensional polytopes.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq)]
pub enum LinearSolution {
    Unique(Vec<Rational>),
    /// Consistent with a solution space of positive dimension; `particular`
    /// sets every free variable to zero.
    Underdetermined { particular: Vec<Rational>, nullity: usize },
    Inconsistent,
}

/// Solves `a · z = b` by Gauss–Jordan elimination.
pub fn solve_linear(a: &[Vec<Rational>], b: &[Rational]) -> LinearSolution {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Rational::one() / &m[r][c];
        for v in m[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..=cols {
                    let t = &f * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    if m[r..].iter().any(|row| !row[cols].is_zero()) {
        return LinearSolution::Inconsistent;
    }
    let mut z = vec![Rational::zero(); cols];
    for (i, &c) in pivot_cols.iter().enumerate() {
        z[c] = m[i][cols].clone();
    }
    if pivot_cols.len() == cols {
        LinearSolution::Unique(z)
    } else {
        LinearSolution::Underdetermined {
            particular: z,
            nullity: cols - pivot_cols.len(),
        }
    }
}

/// `coeffs · z <= rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HalfSpace {
    pub coeffs: Vec<Rational>,
    pub rhs: Rational,
}

impl HalfSpace {
    pub fn new(coeffs: Vec<Rational>, rhs: Rational) -> Self {
        Self { coeffs, rhs }
    }

    /// `coeffs · z >= rhs`, stored negated.
    pub fn at_least(coeffs: Vec<Rational>, rhs: Rational) -> Self {
        Self {
            coeffs: coeffs.into_iter().map(|c| -c).collect(),
            rhs: -rhs,
        }
    }

    pub fn slack(&self, z: &[Rational]) -> Rational {
        let lhs = self
            .coeffs
            .iter()
            .zip(z)
            .fold(Rational::zero(), |acc, (c, v)| acc + c * v);
        &self.rhs - lhs
    }

    pub fn contains(&self, z: &[Rational]) -> bool {
        !self.slack(z).is_negative()
    }

    /// Scales so that the last nonzero coefficient has absolute value one;
    /// makes duplicate detection cheap.
    fn normalized(mut self) -> Self {
        if let Some(c) = self.coeffs.iter().rev().find(|c| !c.is_zero()).cloned() {
            let s = c.abs();
            for v in self.coeffs.iter_mut() {
                *v /= &s;
            }
            self.rhs /= &s;
        }
        self
    }
}

/// Finds a point satisfying every half-space, or `None` when the system is
/// infeasible. Fourier–Motzkin elimination; intended for dimension <= 4.
pub fn feasible_point(constraints: &[HalfSpace], dim: usize) -> Option<Vec<Rational>> {
    // stages[k] holds the system in variables 0..dim-k
    let mut stages: Vec<Vec<HalfSpace>> = vec![dedup(constraints.to_vec())];
    for k in (0..dim).rev() {
        let current = stages.last().unwrap();
        let mut next = Vec::new();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for h in current {
            let c = &h.coeffs[k];
            if c.is_positive() {
                pos.push(h);
            } else if c.is_negative() {
                neg.push(h);
            } else {
                next.push(truncate(h, k));
            }
        }
        for p in &pos {
            for n in &neg {
                let a = p.coeffs[k].clone();
                let b = -n.coeffs[k].clone();
                let coeffs: Vec<Rational> = (0..k)
                    .map(|i| &p.coeffs[i] * &b + &n.coeffs[i] * &a)
                    .collect();
                let rhs = &p.rhs * &b + &n.rhs * &a;
                next.push(HalfSpace::new(coeffs, rhs));
            }
        }
        let next = dedup(next);
        // constant constraints: 0 <= rhs
        if next
            .iter()
            .any(|h| h.coeffs.iter().all(Zero::is_zero) && h.rhs.is_negative())
        {
            return None;
        }
        stages.push(next);
    }
    // back substitution: stage dim-k-... holds variables 0..k
    let mut z: Vec<Rational> = Vec::with_capacity(dim);
    for k in 0..dim {
        let system = &stages[dim - 1 - k];
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for h in system {
            let c = &h.coeffs[k];
            if c.is_zero() {
                continue;
            }
            let partial = h.coeffs[..k]
                .iter()
                .zip(&z)
                .fold(Rational::zero(), |acc, (a, v)| acc + a * v);
            let bound = (&h.rhs - partial) / c;
            if c.is_positive() {
                if hi.as_ref().map_or(true, |u| &bound < u) {
                    hi = Some(bound);
                }
            } else if lo.as_ref().map_or(true, |l| &bound > l) {
                lo = Some(bound);
            }
        }
        let v = match (lo, hi) {
            (Some(l), Some(u)) => {
                if l > u {
                    return None;
                }
                (l + u) / Rational::from_integer(2.into())
            }
            (Some(l), None) => l,
            (None, Some(u)) => u,
            (None, None) => Rational::zero(),
        };
        z.push(v);
    }
    debug_assert!(constraints.iter().all(|h| h.contains(&z)));
    Some(z)
}

fn truncate(h: &HalfSpace, k: usize) -> HalfSpace {
    HalfSpace::new(h.coeffs[..k].to_vec(), h.rhs.clone())
}

fn dedup(hs: Vec<HalfSpace>) -> Vec<HalfSpace> {
    let mut out: Vec<HalfSpace> = Vec::with_capacity(hs.len());
    let mut seen = std::collections::HashSet::new();
    for h in hs {
        let h = h.normalized();
        if h.coeffs.iter().all(Zero::is_zero) && !h.rhs.is_negative() {
            continue;
        }
        if seen.insert(h.clone()) {
            out.push(h);
        }
    }
    out
}

/// Vertices of a bounded polytope `{z : h.contains(z) for all h}` by
/// brute-force enumeration of tight subsets.
pub fn polytope_vertices(constraints: &[HalfSpace], dim: usize) -> Vec<Vec<Rational>> {
    let hs = dedup(constraints.to_vec());
    let mut out: Vec<Vec<Rational>> = Vec::new();
    if dim == 0 {
        if hs.is_empty() {
            out.push(Vec::new());
        }
        return out;
    }
    let mut subset: Vec<usize> = (0..dim).collect();
    if hs.len() < dim {
        return out;
    }
    loop {
        let a: Vec<Vec<Rational>> = subset.iter().map(|&i| hs[i].coeffs.clone()).collect();
        let b: Vec<Rational> = subset.iter().map(|&i| hs[i].rhs.clone()).collect();
        if let LinearSolution::Unique(z) = solve_linear(&a, &b) {
            if hs.iter().all(|h| h.contains(&z)) && !out.contains(&z) {
                out.push(z);
            }
        }
        if !next_combination(&mut subset, hs.len()) {
            break;
        }
    }
    out.sort();
    out
}

/// Advances `c` to the next k-subset of `0..n` in lexicographic order.
pub fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
