//! Exact two-player normal-form games: utilities, best responses, deficits,
//! (ε-)Nash tests and equilibrium enumeration by supports.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exact::{next_combination, solve_linear, LinearSolution};
use crate::rational::{self, int, parse_rational, Rational};

#[derive(Debug, thiserror::Error)]
pub enum GameError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid mixed profile: {0}")]
    InvalidProfile(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Parse(#[from] rational::ParseRationalError),
    #[error("malformed game file: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GameError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }
}

/// Both payoff matrices are stored `m × n`: `payoff2[i][j]` is what player 2
/// receives when player 1 plays row `i` and player 2 plays column `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BimatrixGame {
    m: usize,
    n: usize,
    payoff1: Vec<Rational>,
    payoff2: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct GameFile {
    m: usize,
    n: usize,
    payoff1: Vec<Vec<String>>,
    payoff2: Vec<Vec<String>>,
}

impl BimatrixGame {
    pub fn new(payoff1: Vec<Vec<Rational>>, payoff2: Vec<Vec<Rational>>) -> Result<Self> {
        let m = payoff1.len();
        let n = payoff1.first().map_or(0, Vec::len);
        if m == 0 || n == 0 {
            return Err(GameError::Dimension("a game needs at least one strategy per player".into()));
        }
        if payoff1.iter().any(|r| r.len() != n) {
            return Err(GameError::Dimension("payoff1 rows have unequal lengths".into()));
        }
        if payoff2.len() != m || payoff2.iter().any(|r| r.len() != n) {
            return Err(GameError::Dimension(format!(
                "payoff2 must be {m}x{n} like payoff1"
            )));
        }
        Ok(Self {
            m,
            n,
            payoff1: payoff1.into_iter().flatten().collect(),
            payoff2: payoff2.into_iter().flatten().collect(),
        })
    }

    pub fn from_integers(payoff1: &[Vec<i64>], payoff2: &[Vec<i64>]) -> Result<Self> {
        let conv = |a: &[Vec<i64>]| a.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect();
        Self::new(conv(payoff1), conv(payoff2))
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn strategies(&self, player: Player) -> usize {
        match player {
            Player::One => self.m,
            Player::Two => self.n,
        }
    }

    pub fn payoff(&self, player: Player, i: usize, j: usize) -> &Rational {
        match player {
            Player::One => &self.payoff1[i * self.n + j],
            Player::Two => &self.payoff2[i * self.n + j],
        }
    }

    pub fn payoff1(&self, i: usize, j: usize) -> &Rational {
        &self.payoff1[i * self.n + j]
    }

    pub fn payoff2(&self, i: usize, j: usize) -> &Rational {
        &self.payoff2[i * self.n + j]
    }

    /// Row-major `f64` copies of both matrices.
    pub fn payoffs_f64(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.payoff1.iter().map(rational::to_f64).collect(),
            self.payoff2.iter().map(rational::to_f64).collect(),
        )
    }

    /// Smallest and largest entry over both matrices.
    pub fn payoff_range(&self) -> (Rational, Rational) {
        let all = self.payoff1.iter().chain(&self.payoff2);
        let lo = all.clone().min().unwrap().clone();
        let hi = all.max().unwrap().clone();
        (lo, hi)
    }

    pub fn max_abs_payoff(&self) -> Rational {
        rational::max_abs(self.payoff1.iter().chain(&self.payoff2))
    }

    pub fn with_constant_added(&self, player: Player, c: &Rational) -> Self {
        let mut g = self.clone();
        let target = match player {
            Player::One => &mut g.payoff1,
            Player::Two => &mut g.payoff2,
        };
        for v in target.iter_mut() {
            *v += c;
        }
        g
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: GameFile = serde_json::from_str(s)?;
        let parse = |a: &[Vec<String>]| -> Result<Vec<Vec<Rational>>> {
            a.iter()
                .map(|r| r.iter().map(|v| parse_rational(v).map_err(GameError::from)).collect())
                .collect()
        };
        let g = Self::new(parse(&f.payoff1)?, parse(&f.payoff2)?)?;
        if g.m != f.m || g.n != f.n {
            return Err(GameError::Dimension(format!(
                "declared {}x{} but matrices are {}x{}",
                f.m, f.n, g.m, g.n
            )));
        }
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        let rows = |v: &[Rational]| -> Vec<Vec<String>> {
            v.chunks(self.n)
                .map(|r| r.iter().map(rational::format_rational).collect())
                .collect()
        };
        let f = GameFile {
            m: self.m,
            n: self.n,
            payoff1: rows(&self.payoff1),
            payoff2: rows(&self.payoff2),
        };
        serde_json::to_string(&f).expect("game serializes")
    }

    fn check_profile(&self, p: &MixedProfile) -> Result<()> {
        if p.x.len() != self.m || p.y.len() != self.n {
            return Err(GameError::Dimension(format!(
                "profile is {}+{} but game is {}x{}",
                p.x.len(),
                p.y.len(),
                self.m,
                self.n
            )));
        }
        Ok(())
    }

    /// `(payoff1 · y)_i` for every row `i`.
    pub fn row_payoffs(&self, y: &[Rational]) -> Vec<Rational> {
        (0..self.m)
            .map(|i| {
                (0..self.n).fold(Rational::zero(), |acc, j| acc + &self.payoff1[i * self.n + j] * &y[j])
            })
            .collect()
    }

    /// `(xᵀ · payoff2)_j` for every column `j`.
    pub fn col_payoffs(&self, x: &[Rational]) -> Vec<Rational> {
        (0..self.n)
            .map(|j| {
                (0..self.m).fold(Rational::zero(), |acc, i| acc + &x[i] * &self.payoff2[i * self.n + j])
            })
            .collect()
    }

    fn pure_payoffs(&self, p: &MixedProfile, player: Player) -> Vec<Rational> {
        match player {
            Player::One => self.row_payoffs(&p.y),
            Player::Two => self.col_payoffs(&p.x),
        }
    }

    pub fn expected_utility(&self, p: &MixedProfile, player: Player) -> Result<Rational> {
        self.check_profile(p)?;
        let (own, pure) = match player {
            Player::One => (&p.x, self.row_payoffs(&p.y)),
            Player::Two => (&p.y, self.col_payoffs(&p.x)),
        };
        Ok(own.iter().zip(&pure).fold(Rational::zero(), |acc, (w, u)| acc + w * u))
    }

    /// Largest utility over the player's pure deviations.
    pub fn best_response_value(&self, p: &MixedProfile, player: Player) -> Result<Rational> {
        self.check_profile(p)?;
        Ok(self.pure_payoffs(p, player).into_iter().max().expect("nonempty"))
    }

    /// Indices of the pure strategies attaining the best-response value.
    pub fn best_responses(&self, p: &MixedProfile, player: Player) -> Result<Vec<usize>> {
        self.check_profile(p)?;
        let pure = self.pure_payoffs(p, player);
        let best = pure.iter().max().expect("nonempty");
        Ok((0..pure.len()).filter(|&i| &pure[i] == best).collect())
    }

    pub fn deficit(&self, p: &MixedProfile) -> Result<DeficitValue> {
        let d1 = self.best_response_value(p, Player::One)? - self.expected_utility(p, Player::One)?;
        let d2 = self.best_response_value(p, Player::Two)? - self.expected_utility(p, Player::Two)?;
        let total = &d1 + &d2;
        Ok(DeficitValue {
            per_player: [d1, d2],
            total,
        })
    }

    pub fn is_epsilon_nash(&self, p: &MixedProfile, eps: &Rational) -> Result<bool> {
        if eps.is_negative() {
            return Err(GameError::Argument(format!("epsilon must be nonnegative, got {eps}")));
        }
        let d = self.deficit(p)?;
        Ok(d.per_player.iter().all(|v| v <= eps))
    }

    pub fn is_nash(&self, p: &MixedProfile) -> Result<bool> {
        self.is_epsilon_nash(p, &Rational::zero())
    }

    /// Whether pure strategy `s` weakly dominates `t` for `player`, decided
    /// on the coefficients of the affine difference over the opponent simplex.
    pub fn weakly_dominates(&self, player: Player, s: usize, t: usize) -> bool {
        // difference is linear in the opponent mixture; over the simplex its
        // minimum is the minimum over pure opponent strategies
        let coeffs: Vec<Rational> = match player {
            Player::One => (0..self.n).map(|j| self.payoff1(s, j) - self.payoff1(t, j)).collect(),
            Player::Two => (0..self.m).map(|i| self.payoff2(i, s) - self.payoff2(i, t)).collect(),
        };
        // reduced form c_last + Σ_{k<last} (c_k − c_last) z_k; nonnegative on
        // the reduced simplex iff nonnegative at its vertices
        let last = coeffs.last().unwrap().clone();
        let constant = last.clone();
        let slopes: Vec<Rational> = coeffs[..coeffs.len() - 1].iter().map(|c| c - &last).collect();
        !constant.is_negative() && slopes.iter().all(|a| !(&constant + a).is_negative())
    }

    /// Enumerates equilibria over all support pairs of equal size.
    pub fn support_enumeration(&self) -> NashReport {
        let mut equilibria: Vec<MixedProfile> = Vec::new();
        let mut supports = Vec::new();
        let mut degenerate = false;
        for k in 1..=self.m.min(self.n) {
            let mut rows: Vec<usize> = (0..k).collect();
            loop {
                let mut cols: Vec<usize> = (0..k).collect();
                loop {
                    match self.solve_support(&rows, &cols) {
                        SupportOutcome::Equilibrium(p) => {
                            if !equilibria.contains(&p) {
                                equilibria.push(p);
                                supports.push((rows.clone(), cols.clone()));
                            }
                        }
                        SupportOutcome::Continuum => degenerate = true,
                        SupportOutcome::None => {}
                    }
                    if !next_combination(&mut cols, self.n) {
                        break;
                    }
                }
                if !next_combination(&mut rows, self.m) {
                    break;
                }
            }
        }
        // in a nondegenerate game no equilibrium strategy has more pure best
        // responses than the opponent's support size
        for p in &equilibria {
            let br1 = self.best_responses(p, Player::One).unwrap().len();
            let br2 = self.best_responses(p, Player::Two).unwrap().len();
            if br1 > p.support(Player::Two).len() || br2 > p.support(Player::One).len() {
                degenerate = true;
            }
        }
        NashReport {
            equilibria,
            supports,
            degenerate_flag: degenerate,
        }
    }

    fn solve_support(&self, rows: &[usize], cols: &[usize]) -> SupportOutcome {
        let k = rows.len();
        // player 2's mixture on `cols` makes every row in `rows` indifferent
        let mut a = Vec::with_capacity(k + 1);
        for &i in rows {
            let mut r: Vec<Rational> = cols.iter().map(|&j| self.payoff1(i, j).clone()).collect();
            r.push(-Rational::one());
            a.push(r);
        }
        let mut sum_row = vec![Rational::one(); k];
        sum_row.push(Rational::zero());
        a.push(sum_row.clone());
        let mut rhs = vec![Rational::zero(); k];
        rhs.push(Rational::one());
        let ysol = solve_linear(&a, &rhs);

        let mut b = Vec::with_capacity(k + 1);
        for &j in cols {
            let mut r: Vec<Rational> = rows.iter().map(|&i| self.payoff2(i, j).clone()).collect();
            r.push(-Rational::one());
            b.push(r);
        }
        b.push(sum_row);
        let xsol = solve_linear(&b, &rhs);

        let assemble = |xs: &[Rational], ys: &[Rational]| -> MixedProfile {
            let mut x = vec![Rational::zero(); self.m];
            let mut y = vec![Rational::zero(); self.n];
            for (t, &i) in rows.iter().enumerate() {
                x[i] = xs[t].clone();
            }
            for (t, &j) in cols.iter().enumerate() {
                y[j] = ys[t].clone();
            }
            MixedProfile { x, y }
        };
        let valid = |v: &[Rational]| v[..k].iter().all(|c| !c.is_negative());
        match (xsol, ysol) {
            (LinearSolution::Unique(xs), LinearSolution::Unique(ys)) => {
                if !valid(&xs) || !valid(&ys) {
                    return SupportOutcome::None;
                }
                let p = assemble(&xs, &ys);
                if self.is_nash(&p).unwrap() {
                    SupportOutcome::Equilibrium(p)
                } else {
                    SupportOutcome::None
                }
            }
            (LinearSolution::Inconsistent, _) | (_, LinearSolution::Inconsistent) => SupportOutcome::None,
            (xs, ys) => {
                let pick = |s: LinearSolution| match s {
                    LinearSolution::Unique(v) => v,
                    LinearSolution::Underdetermined { particular, .. } => particular,
                    LinearSolution::Inconsistent => unreachable!(),
                };
                let (xs, ys) = (pick(xs), pick(ys));
                if valid(&xs) && valid(&ys) && self.is_nash(&assemble(&xs, &ys)).unwrap() {
                    SupportOutcome::Continuum
                } else {
                    SupportOutcome::None
                }
            }
        }
    }

    /// Deterministic perturbation of all `2·m·n` entries whose Euclidean
    /// norm is at most `radius`, exactly.
    pub fn perturb(&self, radius: &Rational, seed: u64) -> Result<Self> {
        if radius.is_negative() {
            return Err(GameError::Argument(format!("radius must be nonnegative, got {radius}")));
        }
        if radius.is_zero() {
            return Ok(self.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..2 * self.m * self.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let target = rational::to_f64(radius);
        let radius_sq = radius * radius;
        let den = 1i64 << 40;
        let mut scale = target / norm;
        loop {
            let deltas: Vec<Rational> = raw
                .iter()
                .map(|v| rational::truncate_to_denominator(&rational::from_f64(v * scale).unwrap(), den))
                .collect();
            let norm_sq = rational::sum(deltas.iter().map(|d| d * d).collect::<Vec<_>>().iter());
            if norm_sq <= radius_sq {
                let mut g = self.clone();
                let (d1, d2) = deltas.split_at(self.m * self.n);
                for (v, d) in g.payoff1.iter_mut().zip(d1) {
                    *v += d;
                }
                for (v, d) in g.payoff2.iter_mut().zip(d2) {
                    *v += d;
                }
                return Ok(g);
            }
            scale *= 1.0 - 1e-9;
        }
    }
}

enum SupportOutcome {
    Equilibrium(MixedProfile),
    Continuum,
    None,
}

/// A point of Δ^{m−1} × Δ^{n−1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MixedProfile {
    #[serde(with = "rational::serde_str::vec")]
    x: Vec<Rational>,
    #[serde(with = "rational::serde_str::vec")]
    y: Vec<Rational>,
}

impl MixedProfile {
    pub fn new(x: Vec<Rational>, y: Vec<Rational>) -> Result<Self> {
        for (name, v) in [("x", &x), ("y", &y)] {
            if v.is_empty() {
                return Err(GameError::InvalidProfile(format!("{name} is empty")));
            }
            if v.iter().any(Signed::is_negative) {
                return Err(GameError::InvalidProfile(format!("{name} has a negative entry")));
            }
            if !rational::sum(v.iter()).is_one() {
                return Err(GameError::InvalidProfile(format!("{name} does not sum to 1")));
            }
        }
        Ok(Self { x, y })
    }

    pub fn pure(m: usize, n: usize, i: usize, j: usize) -> Self {
        let mut x = vec![Rational::zero(); m];
        let mut y = vec![Rational::zero(); n];
        x[i] = Rational::one();
        y[j] = Rational::one();
        Self { x, y }
    }

    pub fn uniform(m: usize, n: usize) -> Self {
        Self {
            x: vec![rational::rat(1, m as i64); m],
            y: vec![rational::rat(1, n as i64); n],
        }
    }

    pub fn x(&self) -> &[Rational] {
        &self.x
    }

    pub fn y(&self) -> &[Rational] {
        &self.y
    }

    pub fn strategy(&self, player: Player) -> &[Rational] {
        match player {
            Player::One => &self.x,
            Player::Two => &self.y,
        }
    }

    pub fn support(&self, player: Player) -> Vec<usize> {
        self.strategy(player)
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    /// Full coordinates `(x_1..x_m, y_1..y_n)` as floats.
    pub fn to_f64(&self) -> Vec<f64> {
        self.x.iter().chain(&self.y).map(rational::to_f64).collect()
    }

    /// Parses `"x1,...,xm;y1,...,yn"`.
    pub fn parse(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(';')
            .ok_or_else(|| GameError::InvalidProfile(format!("expected 'x..;y..', got {s:?}")))?;
        Self::new(rational::parse_rational_vec(a)?, rational::parse_rational_vec(b)?)
    }
}

impl std::fmt::Display for MixedProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &[Rational]| v.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "{};{}", join(&self.x), join(&self.y))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeficitValue {
    #[serde(with = "rational::serde_str::vec")]
    pub per_player: [Rational; 2],
    #[serde(with = "rational::serde_str")]
    pub total: Rational,
}

#[derive(Debug, Clone, Serialize)]
pub struct NashReport {
    pub equilibria: Vec<MixedProfile>,
    pub supports: Vec<(Vec<usize>, Vec<usize>)>,
    pub degenerate_flag: bool,
}

impl NashReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// The 3×3 Kohlberg–Mertens game with a circle of equilibria.
pub fn km_game() -> BimatrixGame {
    BimatrixGame::from_integers(
        &[vec![1, 0, -1], vec![-1, 0, -1], vec![1, 0, -2]],
        &[vec![1, -1, 1], vec![0, 0, 0], vec![-1, -1, -2]],
    )
    .expect("valid constant game")
}

pub fn matching_pennies() -> BimatrixGame {
    BimatrixGame::from_integers(&[vec![1, -1], vec![-1, 1]], &[vec![-1, 1], vec![1, -1]])
        .expect("valid constant game")
}

/// Strategy 1 weakly dominates strategies 2 and 3 for both players of the
/// Kohlberg–Mertens game.
pub fn dominance_check_km() -> bool {
    let g = km_game();
    Player::BOTH
        .iter()
        .all(|&p| g.weakly_dominates(p, 0, 1) && g.weakly_dominates(p, 0, 2))
}

/// Pure-strategy labels `(i, j)` such that `i` is a best response of player
/// 1 and `j` of player 2 at `p`; ties yield several pairs.
pub fn region_labels(g: &BimatrixGame, p: &MixedProfile) -> Result<BTreeSet<(usize, usize)>> {
    let b1 = g.best_responses(p, Player::One)?;
    let b2 = g.best_responses(p, Player::Two)?;
    Ok(b1.iter().flat_map(|&i| b2.iter().map(move |&j| (i, j))).collect())
}
