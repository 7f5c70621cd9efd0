#![allow(dead_code)]

use std::collections::HashMap;

use conley_games::game::{BimatrixGame, MixedProfile, Player};
use conley_games::homology::{homology, relative_homology, Cube, CubicalComplex, Strategy};
use conley_games::netopo::{eps_nash_region, ClassificationMode};
use conley_games::rational::{int, rat, Rational};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rank(mut m: Vec<Vec<Rational>>) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        for i in r + 1..rows {
            if m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] / &m[r][c];
            for j in c..cols {
                let v = &f * &m[r][j];
                m[i][j] -= v;
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Betti numbers of `(n, l)` from dense rational ranks of the boundary maps
/// of the quotient chain complex, built straight from cube faces.
pub fn rank_oracle(n: &CubicalComplex, l: Option<&CubicalComplex>) -> Vec<usize> {
    let d = n.ambient_dim();
    let kept: Vec<Cube> = n.cells().iter().copied().filter(|c| !l.is_some_and(|l| l.contains(c))).collect();
    let mut by_dim: Vec<Vec<Cube>> = vec![Vec::new(); d + 1];
    for c in kept {
        by_dim[c.dim()].push(c);
    }
    let pos: Vec<HashMap<Cube, usize>> = by_dim
        .iter()
        .map(|cs| cs.iter().enumerate().map(|(i, c)| (*c, i)).collect())
        .collect();
    let mut ranks = vec![0; d + 2];
    for q in 1..=d {
        let mut m = vec![vec![Rational::zero(); by_dim[q].len()]; by_dim[q - 1].len()];
        for (j, c) in by_dim[q].iter().enumerate() {
            for (f, s) in c.boundary() {
                if let Some(&i) = pos[q - 1].get(&f) {
                    m[i][j] += int(s as i64);
                }
            }
        }
        ranks[q] = rank(m);
    }
    (0..=d).map(|q| by_dim[q].len() - ranks[q] - ranks[q + 1]).collect()
}

pub fn random_complex(rng: &mut impl Rng, max_cells: usize) -> CubicalComplex {
    loop {
        let d = rng.gen_range(2..=3);
        let tops = rng.gen_range(1..=12);
        let cubes: Vec<Cube> = (0..tops)
            .map(|_| {
                let coords: Vec<i32> = (0..d).map(|_| rng.gen_range(0..4)).collect();
                Cube::new(&coords, rng.gen_range(0..(1u8 << d)))
            })
            .collect();
        let cx = CubicalComplex::from_cubes(d, cubes);
        if cx.len() <= max_cells {
            return cx;
        }
    }
}

pub fn random_subcomplex(rng: &mut impl Rng, cx: &CubicalComplex) -> CubicalComplex {
    let picks: Vec<Cube> = cx.cells().iter().copied().filter(|_| rng.gen_bool(0.15)).collect();
    CubicalComplex::from_cubes(cx.ambient_dim(), picks)
}

pub fn random_game(rng: &mut impl Rng, m: usize, n: usize) -> BimatrixGame {
    let mut mat = || -> Vec<Vec<i64>> { (0..m).map(|_| (0..n).map(|_| rng.gen_range(-6..=6)).collect()).collect() };
    let a = mat();
    let b = mat();
    BimatrixGame::from_integers(&a, &b).unwrap()
}

pub fn in_closed_box(p: &MixedProfile, lo: &[Rational], hi: &[Rational]) -> bool {
    let (x, y) = (p.x(), p.y());
    let z: Vec<&Rational> = x[..x.len() - 1].iter().chain(&y[..y.len() - 1]).collect();
    z.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a <= *v && *v <= b)
}

pub fn random_mixed(rng: &mut impl Rng, k: usize) -> Vec<Rational> {
    let w: Vec<i64> = (0..k).map(|_| rng.gen_range(0..12)).collect();
    let s: i64 = w.iter().sum();
    if s == 0 {
        let mut e = vec![Rational::zero(); k];
        e[rng.gen_range(0..k)] = Rational::one();
        return e;
    }
    w.iter().map(|&v| rat(v, s)).collect()
}


fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Absolute and relative homology of a random complex against the rank
/// oracle, with `∂∘∂ = 0` on both chain complexes.
pub fn check_complex(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = random_complex(&mut rng, 200);
    let expected = rank_oracle(&n, None);
    let chain = n.relative_chain_complex(None);
    chain.verify().map_err(|e| format!("seed {seed}: {e}"))?;
    for strategy in [Strategy::Reduce, Strategy::SmithOnly] {
        let b = chain.homology(strategy);
        ensure(b.betti == expected, || format!("seed {seed} {strategy:?}: {:?} vs {expected:?}", b.betti))?;
        ensure(b.torsion.iter().all(Vec::is_empty), || format!("seed {seed}: torsion {:?}", b.torsion))?;
    }
    ensure(chain.euler_characteristic() == homology(&n).euler_characteristic(), || {
        format!("seed {seed}: euler characteristic")
    })?;
    let empty = CubicalComplex::empty(n.ambient_dim());
    ensure(relative_homology(&n, &empty).ok() == Some(homology(&n)), || format!("seed {seed}: (N, ∅)"))?;
    let l = random_subcomplex(&mut rng, &n);
    n.relative_chain_complex(Some(&l)).verify().map_err(|e| format!("seed {seed}: {e}"))?;
    let b = relative_homology(&n, &l).map_err(|e| format!("seed {seed}: {e}"))?;
    let want = rank_oracle(&n, Some(&l));
    ensure(b.betti == want, || format!("seed {seed} relative: {:?} vs {want:?}", b.betti))
}

/// Support enumeration on `games` random nondegenerate games against the
/// exact grid classification at `ε = 0`; returns the equilibrium counts.
pub fn check_support_vs_grid(games: usize, seed: u64, k: u32) -> Result<Vec<usize>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes = [(2, 2), (2, 3), (3, 2), (3, 3)];
    let mut counts = Vec::new();
    while counts.len() < games {
        let (m, n) = shapes[counts.len() % shapes.len()];
        let g = random_game(&mut rng, m, n);
        let report = g.support_enumeration();
        if report.degenerate_flag {
            continue;
        }
        let json = g.to_json();
        ensure(report.equilibria.len() % 2 == 1, || format!("even count for {json}"))?;
        for p in &report.equilibria {
            ensure(g.is_nash(p).unwrap_or(false), || format!("{p} is not Nash in {json}"))?;
        }
        let r = eps_nash_region(&g, &int(0), k, ClassificationMode::ExactPerCell).map_err(|e| e.to_string())?;
        ensure(r.undecided().is_empty(), || format!("undecided cells for {json}"))?;
        for &c in r.grid.active() {
            let idx = r.grid.multi_index(c);
            let lo: Vec<Rational> = idx.iter().map(|&i| rat(i as i64, k as i64)).collect();
            let hi: Vec<Rational> = idx.iter().map(|&i| rat(i as i64 + 1, k as i64)).collect();
            let holds = report.equilibria.iter().any(|p| in_closed_box(p, &lo, &hi));
            ensure(r.is_member(c) == holds, || format!("cell {idx:?} of {json}"))?;
        }
        counts.push(report.equilibria.len());
    }
    Ok(counts)
}

/// The deficit equals the best pure deviation gain, bounds every mixed
/// deviation gain, and vanishes exactly at equilibria.
pub fn check_deficits(profiles: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..profiles {
        let (m, n) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let g = random_game(&mut rng, m, n);
        let p = MixedProfile::new(random_mixed(&mut rng, m), random_mixed(&mut rng, n)).unwrap();
        let d = g.deficit(&p).unwrap();
        for (pl, size) in [(Player::One, m), (Player::Two, n)] {
            let own = g.expected_utility(&p, pl).unwrap();
            let deviate = |s: Vec<Rational>| {
                let q = match pl {
                    Player::One => MixedProfile::new(s, p.y().to_vec()),
                    Player::Two => MixedProfile::new(p.x().to_vec(), s),
                }
                .unwrap();
                g.expected_utility(&q, pl).unwrap() - &own
            };
            let pure_best = (0..size)
                .map(|i| {
                    let mut e = vec![Rational::zero(); size];
                    e[i] = Rational::one();
                    deviate(e)
                })
                .max()
                .unwrap();
            ensure(pure_best == d.per_player[pl.index()], || format!("case {case}: pure deviation"))?;
            for _ in 0..5 {
                ensure(deviate(random_mixed(&mut rng, size)) <= pure_best, || format!("case {case}: mixed deviation"))?;
            }
        }
        ensure(d.total == &d.per_player[0] + &d.per_player[1], || format!("case {case}: total"))?;
        ensure(d.total >= Rational::zero(), || format!("case {case}: sign"))?;
        ensure(d.total.is_zero() == g.is_nash(&p).unwrap(), || format!("case {case}: zero set"))?;
    }
    Ok(())
}
