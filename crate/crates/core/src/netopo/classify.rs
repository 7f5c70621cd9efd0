//! Per-cell decision of ε-Nash membership on a grid over reduced strategy
//! coordinates.

use std::collections::HashMap;

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use num_traits::{Num, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exact::{feasible_point, HalfSpace};
use crate::game::BimatrixGame;
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassificationMode {
    /// Deficit at the centroid of the cell's vertices.
    CenterSample,
    /// Any vertex pair of the cell passes.
    VertexAny,
    /// Rational witnesses and infeasibility certificates per cell.
    ExactPerCell,
}

impl ClassificationMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::CenterSample => "center-sample",
            Self::VertexAny => "vertex-any",
            Self::ExactPerCell => "exact-per-cell",
        }
    }
}

impl std::str::FromStr for ClassificationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "center-sample" => Ok(Self::CenterSample),
            "vertex-any" => Ok(Self::VertexAny),
            "exact-per-cell" | "exact" => Ok(Self::ExactPerCell),
            _ => Err(format!("unknown classification mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Verdict {
    Member,
    Excluded,
    /// Search budget exhausted without a witness or a certificate.
    Undecided,
}

/// Nodes explored per top-level cell before giving up.
const NODE_BUDGET: usize = 128;

/// Vertices of `[lo, hi] ∩ {z ≥ 0, Σz ≤ 1}`, in full simplex coordinates
/// (the extra last entry is `1 − Σz`). Assumes `lo ≥ 0`.
pub(crate) fn box_simplex_vertices(lo: &[Rational], hi: &[Rational]) -> Vec<Vec<Rational>> {
    let d = lo.len();
    let one = Rational::one();
    let mut out: Vec<Vec<Rational>> = Vec::new();
    let mut push = |mut z: Vec<Rational>| {
        let s = rational::sum(&z);
        if s <= one {
            z.push(&one - s);
            if !out.contains(&z) {
                out.push(z);
            }
        }
    };
    for mask in 0..(1usize << d) {
        push((0..d).map(|a| if mask >> a & 1 == 1 { hi[a].clone() } else { lo[a].clone() }).collect());
    }
    for a in 0..d {
        for mask in 0..(1usize << d) {
            if mask >> a & 1 == 1 {
                continue;
            }
            let mut z: Vec<Rational> = (0..d)
                .map(|b| if mask >> b & 1 == 1 { hi[b].clone() } else { lo[b].clone() })
                .collect();
            let others = rational::sum(&z) - &z[a];
            let t = &one - others;
            if t > lo[a] && t < hi[a] {
                z[a] = t;
                push(z);
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
struct Payoffs<T> {
    a: Vec<Vec<T>>,
    b: Vec<Vec<T>>,
}

impl<T: Clone + Num> Payoffs<T> {
    fn rows(&self) -> usize {
        self.a.len()
    }

    fn cols(&self) -> usize {
        self.a[0].len()
    }

    fn ay(&self, y: &[T]) -> Vec<T> {
        self.a
            .iter()
            .map(|row| row.iter().zip(y).fold(T::zero(), |s, (p, v)| s + p.clone() * v.clone()))
            .collect()
    }

    fn xb(&self, x: &[T]) -> Vec<T> {
        (0..self.cols())
            .map(|j| (0..self.rows()).fold(T::zero(), |s, i| s + x[i].clone() * self.b[i][j].clone()))
            .collect()
    }

    /// `g_i = (Ay)_i − xᵀAy` for each row, then `g_j = (xᵀB)_j − xᵀBy`.
    fn gaps(&self, x: &[T], y: &[T]) -> Vec<T> {
        let ay = self.ay(y);
        let xb = self.xb(x);
        let u1 = dot(x, &ay);
        let u2 = dot(&xb, y);
        ay.into_iter()
            .map(|v| v - u1.clone())
            .chain(xb.into_iter().map(|v| v - u2.clone()))
            .collect()
    }

    /// The gaps as affine functions of `y` for fixed `x`: `(constant, coeffs)`.
    fn gaps_in_y(&self, x: &[T]) -> Vec<(T, Vec<T>)> {
        let xa: Vec<T> = (0..self.cols())
            .map(|j| (0..self.rows()).fold(T::zero(), |s, i| s + x[i].clone() * self.a[i][j].clone()))
            .collect();
        let xb = self.xb(x);
        let mut out = Vec::with_capacity(self.rows() + self.cols());
        for row in &self.a {
            out.push((T::zero(), row.iter().zip(&xa).map(|(p, q)| p.clone() - q.clone()).collect()));
        }
        for j in 0..self.cols() {
            out.push((xb[j].clone(), xb.iter().map(|v| T::zero() - v.clone()).collect()));
        }
        out
    }

    /// The gaps as affine functions of `x` for fixed `y`.
    fn gaps_in_x(&self, y: &[T]) -> Vec<(T, Vec<T>)> {
        let ay = self.ay(y);
        let by: Vec<T> = self
            .b
            .iter()
            .map(|row| row.iter().zip(y).fold(T::zero(), |s, (p, v)| s + p.clone() * v.clone()))
            .collect();
        let mut out = Vec::with_capacity(self.rows() + self.cols());
        for i in 0..self.rows() {
            out.push((ay[i].clone(), ay.iter().map(|v| T::zero() - v.clone()).collect()));
        }
        for j in 0..self.cols() {
            out.push((T::zero(), (0..self.rows()).map(|i| self.b[i][j].clone() - by[i].clone()).collect()));
        }
        out
    }
}

fn dot<T: Clone + Num>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (p, q)| s + p.clone() * q.clone())
}

/// Rewrites an affine form on full simplex coordinates in terms of the
/// reduced ones (last coordinate eliminated).
fn reduce_affine<T: Clone + Num>((c0, c): &(T, Vec<T>)) -> (T, Vec<T>) {
    let last = c.last().expect("nonempty").clone();
    (
        c0.clone() + last.clone(),
        c[..c.len() - 1].iter().map(|v| v.clone() - last.clone()).collect(),
    )
}

/// Vertex lists of one side's box in both number types.
#[derive(Debug, Clone)]
struct Side {
    lo: Vec<Rational>,
    hi: Vec<Rational>,
    exact: Vec<Vec<Rational>>,
    float: Vec<Vec<f64>>,
}

impl Side {
    fn new(lo: Vec<Rational>, hi: Vec<Rational>) -> Self {
        let exact = box_simplex_vertices(&lo, &hi);
        let float = exact.iter().map(|v| v.iter().map(rational::to_f64).collect()).collect();
        Self { lo, hi, exact, float }
    }

    fn of_index(idx: &[u32], k: u32) -> Self {
        let kr = Rational::from_integer(k.into());
        let lo = idx.iter().map(|&i| Rational::from_integer(i.into()) / &kr).collect();
        let hi = idx.iter().map(|&i| Rational::from_integer((i + 1).into()) / &kr).collect();
        Self::new(lo, hi)
    }

    fn contains(&self, full: &[Rational]) -> bool {
        self.lo.iter().zip(&self.hi).zip(full).all(|((l, h), v)| l <= v && v <= h)
    }

    fn halves(&self, axis: usize) -> [Side; 2] {
        let mid = (&self.lo[axis] + &self.hi[axis]) / Rational::from_integer(2.into());
        let mut hi_a = self.hi.clone();
        hi_a[axis] = mid.clone();
        let mut lo_b = self.lo.clone();
        lo_b[axis] = mid;
        [Side::new(self.lo.clone(), hi_a), Side::new(lo_b, self.hi.clone())]
    }

    fn width(&self, axis: usize) -> Rational {
        &self.hi[axis] - &self.lo[axis]
    }

    fn box_constraints(&self) -> Vec<HalfSpace> {
        let d = self.lo.len();
        let mut out = Vec::with_capacity(2 * d + 1);
        for a in 0..d {
            let mut e = vec![Rational::zero(); d];
            e[a] = Rational::one();
            out.push(HalfSpace::at_least(e.clone(), self.lo[a].clone()));
            out.push(HalfSpace::new(e, self.hi[a].clone()));
        }
        out.push(HalfSpace::new(vec![Rational::one(); d], Rational::one()));
        out
    }
}

/// Decides membership of grid cells in `NE_ε` for one game and ε.
pub(crate) struct Classifier {
    m: usize,
    eps: Rational,
    eps_f: f64,
    tol: f64,
    exact: Payoffs<Rational>,
    float: Payoffs<f64>,
    seeds: Vec<(Vec<Rational>, Vec<Rational>)>,
    x_sides: HashMap<Vec<u32>, Side>,
    y_sides: HashMap<Vec<u32>, Side>,
}

impl Classifier {
    /// `cells` are multi-indices on a `k`-per-axis grid over the reduced
    /// coordinates `(x_1..x_{m-1}, y_1..y_{n-1})`.
    pub(crate) fn new(g: &BimatrixGame, eps: &Rational, k: u32, cells: &[Vec<u32>]) -> Self {
        let (m, n) = (g.rows(), g.cols());
        let exact = Payoffs {
            a: (0..m).map(|i| (0..n).map(|j| g.payoff1(i, j).clone()).collect()).collect(),
            b: (0..m).map(|i| (0..n).map(|j| g.payoff2(i, j).clone()).collect()).collect(),
        };
        let float = Payoffs {
            a: exact.a.iter().map(|r| r.iter().map(rational::to_f64).collect()).collect(),
            b: exact.b.iter().map(|r| r.iter().map(rational::to_f64).collect()).collect(),
        };
        let scale = rational::to_f64(&g.max_abs_payoff()) + rational::to_f64(eps) + 1.0;
        let seeds = g
            .support_enumeration()
            .equilibria
            .into_iter()
            .map(|p| (p.x().to_vec(), p.y().to_vec()))
            .collect();
        let mut x_sides = HashMap::new();
        let mut y_sides = HashMap::new();
        for idx in cells {
            let (xi, yi) = idx.split_at(m - 1);
            x_sides.entry(xi.to_vec()).or_insert_with(|| Side::of_index(xi, k));
            y_sides.entry(yi.to_vec()).or_insert_with(|| Side::of_index(yi, k));
        }
        Self {
            m,
            eps: eps.clone(),
            eps_f: rational::to_f64(eps),
            // far above the rounding error of the few products involved
            tol: 1e-9 * scale,
            exact,
            float,
            seeds,
            x_sides,
            y_sides,
        }
    }

    pub(crate) fn classify(&self, idx: &[u32], mode: ClassificationMode) -> Verdict {
        let (xi, yi) = idx.split_at(self.m - 1);
        let xs = &self.x_sides[xi];
        let ys = &self.y_sides[yi];
        if xs.exact.is_empty() || ys.exact.is_empty() {
            return Verdict::Excluded;
        }
        let pass = |v: &[f64], w: &[f64]| self.float.gaps(v, w).iter().all(|g| *g <= self.eps_f);
        let verdict = |b: bool| if b { Verdict::Member } else { Verdict::Excluded };
        match mode {
            ClassificationMode::CenterSample => verdict(pass(&centroid(&xs.float), &centroid(&ys.float))),
            ClassificationMode::VertexAny => {
                verdict(xs.float.iter().any(|v| ys.float.iter().any(|w| pass(v, w))))
            }
            ClassificationMode::ExactPerCell => {
                let mut budget = NODE_BUDGET;
                self.decide(xs, ys, &mut budget)
            }
        }
    }

    fn decide(&self, xs: &Side, ys: &Side, budget: &mut usize) -> Verdict {
        *budget = budget.saturating_sub(1);
        if self.seeds.iter().any(|(x, y)| xs.contains(x) && ys.contains(y)) {
            return Verdict::Member;
        }
        let pairs: Vec<(usize, usize)> = (0..xs.float.len())
            .flat_map(|i| (0..ys.float.len()).map(move |j| (i, j)))
            .collect();
        let table: Vec<Vec<f64>> = pairs
            .iter()
            .map(|&(i, j)| {
                self.float
                    .gaps(&xs.float[i], &ys.float[j])
                    .into_iter()
                    .map(|g| g - self.eps_f)
                    .collect()
            })
            .collect();
        let worst = |row: &Vec<f64>| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (best, best_val) = table
            .iter()
            .enumerate()
            .map(|(p, r)| (p, worst(r)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty box");
        if best_val <= self.tol {
            let (i, j) = pairs[best];
            if best_val <= -self.tol || self.exact_pair(&xs.exact[i], &ys.exact[j]) {
                return Verdict::Member;
            }
        }
        let nk = table[0].len();
        for c in 0..nk {
            let lowest = table.iter().map(|r| r[c]).fold(f64::INFINITY, f64::min);
            if lowest > self.tol {
                return Verdict::Excluded;
            }
            if lowest > -self.tol {
                let mut weights = vec![Rational::zero(); nk];
                weights[c] = Rational::one();
                if self.exact_certificate(xs, ys, &weights) {
                    return Verdict::Excluded;
                }
            }
        }
        if let Some(lambda) = lambda_bound(&table) {
            let value = table
                .iter()
                .map(|r| r.iter().zip(&lambda).map(|(a, l)| a * l).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            if value > -self.tol {
                let weights: Vec<Rational> = lambda
                    .iter()
                    .map(|&l| rational::from_f64(l).unwrap_or_else(Rational::zero))
                    .collect();
                if value > self.tol || self.exact_certificate(xs, ys, &weights) {
                    return Verdict::Excluded;
                }
            }
        }
        if self.fixed_vertex_witness(xs, ys) {
            return Verdict::Member;
        }
        if *budget == 0 {
            return Verdict::Undecided;
        }
        // bisect the widest axis
        let dx = xs.lo.len();
        let widths: Vec<Rational> = (0..dx).map(|a| xs.width(a)).chain((0..ys.lo.len()).map(|a| ys.width(a))).collect();
        let axis = (0..widths.len())
            .max_by(|&a, &b| widths[a].cmp(&widths[b]).then(b.cmp(&a)))
            .expect("positive dimension");
        let children: Vec<(Side, Side)> = if axis < dx {
            xs.halves(axis).into_iter().map(|h| (h, ys.clone())).collect()
        } else {
            ys.halves(axis - dx).into_iter().map(|h| (xs.clone(), h)).collect()
        };
        let mut undecided = false;
        for (cx, cy) in children {
            if cx.exact.is_empty() || cy.exact.is_empty() {
                continue;
            }
            match self.decide(&cx, &cy, budget) {
                Verdict::Member => return Verdict::Member,
                Verdict::Undecided => undecided = true,
                Verdict::Excluded => {}
            }
        }
        if undecided {
            Verdict::Undecided
        } else {
            Verdict::Excluded
        }
    }

    fn exact_pair(&self, x: &[Rational], y: &[Rational]) -> bool {
        self.exact.gaps(x, y).iter().all(|g| g <= &self.eps)
    }

    /// `Σ λ_c (g_c − ε) > 0` at every vertex pair. The weighted sum is
    /// affine in each player's strategy separately, so its minimum over the
    /// box is attained at a vertex pair and the cell holds no ε-equilibrium.
    fn exact_certificate(&self, xs: &Side, ys: &Side, weights: &[Rational]) -> bool {
        if weights.iter().all(Zero::is_zero) {
            return false;
        }
        xs.exact.iter().all(|v| {
            ys.exact.iter().all(|w| {
                let s = self
                    .exact
                    .gaps(v, w)
                    .iter()
                    .zip(weights)
                    .fold(Rational::zero(), |acc, (g, l)| acc + (g - &self.eps) * l);
                s.is_positive()
            })
        })
    }

    /// Fixes one player at a vertex of its box and asks whether the other
    /// player's linear system is feasible; screened by a float LP and then
    /// settled by exact elimination.
    fn fixed_vertex_witness(&self, xs: &Side, ys: &Side) -> bool {
        let try_side = |forms_f: Vec<(f64, Vec<f64>)>, forms_q: &dyn Fn() -> Vec<(Rational, Vec<Rational>)>, other: &Side| {
            let reduced: Vec<(f64, Vec<f64>)> = forms_f.iter().map(reduce_affine).collect();
            match min_max_lp(&reduced, other, self.eps_f) {
                Some(t) if t <= self.tol => {
                    let mut cons = other.box_constraints();
                    for (c0, c) in forms_q().iter().map(reduce_affine) {
                        cons.push(HalfSpace::new(c, &self.eps - c0));
                    }
                    feasible_point(&cons, other.lo.len()).is_some()
                }
                _ => false,
            }
        };
        for (vf, vq) in xs.float.iter().zip(&xs.exact) {
            if try_side(self.float.gaps_in_y(vf), &|| self.exact.gaps_in_y(vq), ys) {
                return true;
            }
        }
        for (wf, wq) in ys.float.iter().zip(&ys.exact) {
            if try_side(self.float.gaps_in_x(wf), &|| self.exact.gaps_in_x(wq), xs) {
                return true;
            }
        }
        false
    }
}

fn centroid(vs: &[Vec<f64>]) -> Vec<f64> {
    let mut c = vec![0.0; vs[0].len()];
    for v in vs {
        for (a, b) in c.iter_mut().zip(v) {
            *a += b / vs.len() as f64;
        }
    }
    c
}

/// Best convex weights `λ` maximizing `min_p Σ_c λ_c a[p][c]`.
fn lambda_bound(a: &[Vec<f64>]) -> Option<Vec<f64>> {
    let nk = a[0].len();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let lambda: Vec<Variable> = (0..nk).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let t = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for row in a {
        let mut expr = vec![(t, 1.0)];
        expr.extend(lambda.iter().zip(row).map(|(&l, &v)| (l, -v)));
        lp.add_constraint(expr, ComparisonOp::Le, 0.0);
    }
    lp.add_constraint(lambda.iter().map(|&l| (l, 1.0)), ComparisonOp::Eq, 1.0);
    let sol = lp.solve().ok()?.into_solution().ok()?;
    Some(lambda.iter().map(|&l| sol.var_value(l).max(0.0)).collect())
}

/// `min_z max_c (form_c(z) − ε)` over the box-and-simplex region of `side`,
/// for forms already in reduced coordinates.
fn min_max_lp(forms: &[(f64, Vec<f64>)], side: &Side, eps: f64) -> Option<f64> {
    let d = side.lo.len();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let z: Vec<Variable> = (0..d)
        .map(|a| lp.add_var(0.0, (rational::to_f64(&side.lo[a]), rational::to_f64(&side.hi[a]))))
        .collect();
    let t = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    if d > 0 {
        lp.add_constraint(z.iter().map(|&v| (v, 1.0)), ComparisonOp::Le, 1.0);
    }
    for (c0, c) in forms {
        let mut expr: Vec<(Variable, f64)> = z.iter().zip(c).map(|(&v, &w)| (v, w)).collect();
        expr.push((t, -1.0));
        lp.add_constraint(expr, ComparisonOp::Le, eps - c0);
    }
    let sol = lp.solve().ok()?.into_solution().ok()?;
    Some(sol.objective())
}
