//! Acceptance runner: one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use conley_games::conley::{
    index_pair, morse_graph, scc_cells, sink_region_seeds, AttractorRepeller, CellId, CubicalGrid, MorseGraph,
    TimeMap, TransitionGraph, TransitionParams,
};
use conley_games::dynamics::{star_field, testfields, StarDynamics, VectorField};
use conley_games::homology::{wazewski_check, BettiProfile, CubicalComplex};
use conley_games::netopo::{
    bisect_transition, eps_nash_region, nash_component_extract, normalized_to_raw, region_homology,
    ClassificationMode,
};
use conley_games::rational::{rat, to_f64, Rational};
use conley_games::{km_game, matching_pennies, BimatrixGame, MixedProfile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// Chain complexes checked for `∂∘∂ = 0` across all criteria.
static VERIFIED: AtomicUsize = AtomicUsize::new(0);

fn verify(n: &CubicalComplex, l: Option<&CubicalComplex>) -> Result<(), String> {
    n.relative_chain_complex(l).verify().map_err(|e| format!("∂∘∂ ≠ 0: {e}"))?;
    VERIFIED.fetch_add(1, Ordering::Relaxed);
    Ok(())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exact(b: &BettiProfile, want: &[usize]) -> bool {
    b.betti == want && b.torsion.iter().all(Vec::is_empty)
}

fn region_betti(g: &BimatrixGame, eps_normalized: &Rational, k: u32) -> Result<BettiProfile, String> {
    let r = eps_nash_region(g, &normalized_to_raw(g, eps_normalized), k, ClassificationMode::ExactPerCell)
        .map_err(|e| e.to_string())?;
    verify(&r.complex(), None)?;
    region_homology(&r).map_err(|e| e.to_string())
}

fn c1_eps_circle() -> Outcome {
    let km = km_game();
    let t = Instant::now();
    let mut notes = Vec::new();
    for e in [rat(3, 100), rat(9, 100)] {
        let b = region_betti(&km, &e, 24)?;
        ensure(exact(&b, &[1, 1, 0, 0, 0]), || format!("eps {e} at k=24: {:?}", b.betti))?;
        notes.push(format!("eps {e}: {:?}", b.betti));
    }
    let full = t.elapsed();
    let t = Instant::now();
    let b = region_betti(&km, &rat(3, 100), 16)?;
    ensure(b.betti.get(1) == Some(&1), || format!("k=16 fallback: {:?}", b.betti))?;
    let fallback = t.elapsed();
    ensure(full < Duration::from_secs(600), || format!("k=24 took {full:?}"))?;
    ensure(fallback < Duration::from_secs(120), || format!("k=16 took {fallback:?}"))?;
    Ok(format!("k=24 {}; k=16 b1=1 ({:.1}s + {:.1}s)", notes.join(", "), full.as_secs_f64(), fallback.as_secs_f64()))
}

fn c2_eps_ball() -> Outcome {
    let km = km_game();
    let b = region_betti(&km, &rat(12, 100), 24)?;
    ensure(b.betti.first() == Some(&1) && b.betti.get(1) == Some(&0), || format!("eps 0.12: {:?}", b.betti))?;
    let raw = |e: Rational| normalized_to_raw(&km, &e);
    let br = bisect_transition(&km, &raw(rat(9, 100)), &raw(rat(12, 100)), 24, &raw(rat(1, 100)))
        .map_err(|e| e.to_string())?;
    let spread = {
        let (lo, hi) = km.payoff_range();
        hi - lo
    };
    let (lo, hi) = (&br.lo / &spread, &br.hi / &spread);
    ensure(rat(9, 100) <= lo && hi <= rat(12, 100), || format!("bracket [{lo}, {hi}] outside [0.09, 0.12]"))?;
    ensure(&hi - &lo <= rat(1, 100), || format!("bracket [{lo}, {hi}] wider than 0.01"))?;
    Ok(format!("eps 0.12: {:?}; transition in [{}, {}]", b.betti, to_f64(&lo), to_f64(&hi)))
}

fn c3_robustness() -> Outcome {
    let km = km_game();
    let radius = rat(3, 100) * rat(3, 1) / rat(10, 1);
    for seed in 1..=5u64 {
        let g = km.perturb(&radius, seed).map_err(|e| e.to_string())?;
        let b = region_betti(&g, &rat(3, 100), 24)?;
        ensure(exact(&b, &[1, 1, 0, 0, 0]), || format!("seed {seed}: {:?}", b.betti))?;
    }
    Ok(format!("5 perturbations of size {radius}: all (1,1,0,0,0)"))
}

fn c4_nash_circle() -> Outcome {
    let t = Instant::now();
    let c = nash_component_extract(&km_game(), 8, 2).map_err(|e| e.to_string())?;
    verify(&c.complex(), None)?;
    let s = c.summary();
    let took = t.elapsed();
    ensure(s.clusters == 1, || format!("{} clusters", s.clusters))?;
    ensure(exact(&c.betti(), &[1, 1, 0, 0, 0]), || format!("betti {:?}", s.betti))?;
    ensure(took < Duration::from_secs(300), || format!("took {took:?}"))?;
    Ok(format!("{} cells at k={}, connected, {:?} ({:.1}s)", s.cells, s.k, s.betti, took.as_secs_f64()))
}

fn graph(f: &dyn VectorField, grid: &CubicalGrid, tau: f64, rho: f64) -> Result<(TransitionGraph, MorseGraph), String> {
    let params = TransitionParams {
        rho,
        ..TransitionParams::default()
    };
    let tg = TransitionGraph::build(&TimeMap::new(f, tau), grid, params).map_err(|e| e.to_string())?;
    let mg = morse_graph(&tg);
    Ok((tg, mg))
}

/// Conley index of an invariant cell set with both chain complexes checked.
fn index(tg: &TransitionGraph, mg: &MorseGraph, s: &BTreeSet<CellId>) -> Result<BettiProfile, String> {
    if s.is_empty() {
        return Ok(BettiProfile::zero(tg.grid().dim()));
    }
    let pair = index_pair(tg, mg, s).map_err(|e| e.to_string())?;
    let (n, l) = pair.complexes(tg);
    verify(&n, None)?;
    verify(&l, None)?;
    verify(&n, Some(&l))?;
    pair.conley_index(tg).map_err(|e| e.to_string())
}

fn c5_canonical_indices() -> Outcome {
    let square = |a: f64, k: u32| testfields::square_grid(a, k).map_err(|e| e.to_string());
    let cases: [(&str, Box<dyn VectorField>, CubicalGrid, f64, Vec<usize>); 4] = [
        ("limit cycle", Box::new(testfields::limit_cycle()), square(1.5, 24)?, 0.0, vec![1, 1, 0]),
        ("stable point", Box::new(testfields::linear_decay(2)), square(1.0, 16)?, 0.01, vec![1, 0, 0]),
        ("saddle", Box::new(testfields::saddle()), square(1.0, 16)?, 0.01, vec![0, 1, 0]),
        ("repelling point", Box::new(testfields::repeller()), square(1.0, 16)?, 0.01, vec![0, 0, 1]),
    ];
    let mut notes = Vec::new();
    for (name, f, grid, rho, want) in cases {
        let (tg, mg) = graph(f.as_ref(), &grid, 1.0, rho)?;
        // the component through (1, 0) for the cycle, the only one otherwise
        let s = if name == "limit cycle" {
            let on_cycle: BTreeSet<usize> = grid
                .locate(&[1.0, 0.0])
                .into_iter()
                .filter_map(|c| tg.node(c))
                .filter(|&v| mg.is_recurrent_node(v))
                .map(|v| mg.scc_of_node(v))
                .collect();
            ensure(on_cycle.len() == 1, || format!("{name}: {} components on the cycle", on_cycle.len()))?;
            *on_cycle.first().unwrap()
        } else {
            let ids: Vec<usize> = mg.recurrent().map(|s| s.id).collect();
            ensure(ids.len() == 1, || format!("{name}: {} recurrent components", ids.len()))?;
            ids[0]
        };
        let b = index(&tg, &mg, &scc_cells(&mg, s))?;
        ensure(exact(&b, &want), || format!("{name}: {:?}, want {want:?}", b.betti))?;
        notes.push(format!("{name} {:?}", b.trimmed()));
    }
    Ok(notes.join(", "))
}

struct Triple {
    a: BettiProfile,
    r: BettiProfile,
    x: BettiProfile,
    repeller_cells: usize,
}

/// Attractor of the sink regions, its dual repeller and the invariant set;
/// checks Euler additivity and that differing A and X force a nonempty R
/// with nonzero index.
fn decompose(f: &dyn VectorField, grid: &CubicalGrid, name: &str) -> Result<Triple, String> {
    let (tg, mg) = graph(f, grid, 1.0, 0.0)?;
    let seeds = sink_region_seeds(&tg, &mg);
    let ar = AttractorRepeller::new(&tg, &mg, &seeds).map_err(|e| e.to_string())?;
    let t = Triple {
        a: index(&tg, &mg, &ar.attractor)?,
        r: index(&tg, &mg, &ar.repeller)?,
        x: index(&tg, &mg, &ar.invariant)?,
        repeller_cells: ar.repeller.len(),
    };
    let (ca, cr, cx) = (t.a.euler_characteristic(), t.r.euler_characteristic(), t.x.euler_characteristic());
    ensure(ca + cr == cx, || format!("{name}: euler {ca} + {cr} != {cx}"))?;
    ensure(t.a.trimmed() == t.x.trimmed() || (t.repeller_cells > 0 && wazewski_check(&t.r)), || {
        format!("{name}: A {:?} and X {:?} differ but R is {:?}", t.a.betti, t.x.betti, t.r.betti)
    })?;
    Ok(t)
}

fn c6_exact_sequence() -> Outcome {
    let dw = decompose(
        &testfields::double_well(),
        &testfields::interval_grid(-1.5, 1.5, 48).map_err(|e| e.to_string())?,
        "double well",
    )?;
    ensure(exact(&dw.a, &[2, 0]) && exact(&dw.r, &[0, 1]) && exact(&dw.x, &[1, 0]), || {
        format!("double well: A {:?} R {:?} X {:?}", dw.a.betti, dw.r.betti, dw.x.betti)
    })?;

    let star = StarDynamics::new(km_game(), MixedProfile::pure(3, 3, 0, 0), 1.0).map_err(|e| e.to_string())?;
    let f = star_field(&star);
    let blocks = f.domain().blocks().unwrap();
    let st = decompose(&f, &CubicalGrid::simplex_product(&blocks, 8).map_err(|e| e.to_string())?, "KM star")?;

    let f = testfields::km_circle_attractor();
    let grid = CubicalGrid::simplex_product_per_axis(&blocks, &[48, 48, 2, 2]).map_err(|e| e.to_string())?;
    let kc = decompose(&f, &grid, "KM circle attractor")?;
    ensure(exact(&kc.a, &[1, 1, 0, 0, 0]) && exact(&kc.x, &[1, 0, 0, 0, 0]), || {
        format!("KM circle attractor: A {:?} X {:?}", kc.a.betti, kc.x.betti)
    })?;
    ensure(kc.repeller_cells > 0, || "KM circle attractor: empty repeller".into())?;
    let repeller = if exact(&kc.r, &[0, 0, 1, 0, 0]) {
        "R (0,0,1,0,0)".to_string()
    } else {
        format!("R {:?} not resolved at this grid", kc.r.betti)
    };
    Ok(format!(
        "double well 2-1=1; KM star {}+{}={}; KM circle attractor 0+1=1 with {repeller}",
        st.a.euler_characteristic(),
        st.r.euler_characteristic(),
        st.x.euler_characteristic()
    ))
}

/// Recurrent cell count of the star field and the largest distance of a
/// recurrent cell from the target, in cell widths.
fn star_recurrence(g: &BimatrixGame, target: &MixedProfile, k: u32) -> Result<(usize, f64), String> {
    let s = StarDynamics::new(g.clone(), target.clone(), 1.0).map_err(|e| e.to_string())?;
    let f = star_field(&s);
    let blocks = f.domain().blocks().unwrap();
    let grid = CubicalGrid::simplex_product(&blocks, k).map_err(|e| e.to_string())?;
    let (_, mg) = graph(&f, &grid, 1.0, 0.0)?;
    let z = f.domain().to_grid(&target.to_f64());
    let rec = mg.recurrent_cells();
    let far = rec
        .iter()
        .map(|&c| {
            let (lo, hi) = grid.cell_box(c);
            (0..z.len())
                .map(|a| (lo[a] - z[a]).max(z[a] - hi[a]).max(0.0) / grid.shape().width(a))
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    Ok((rec.len(), far))
}

fn c7_star_concentration() -> Outcome {
    let mut games = vec![("matching pennies".to_string(), matching_pennies(), 8)];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    while games.len() < 4 {
        let g = common::random_game(&mut rng, 3, 3);
        let r = g.support_enumeration();
        if !r.degenerate_flag && r.equilibria.len() == 1 {
            games.push((format!("random 3x3 #{}", games.len()), g, 6));
        }
    }
    let mut notes = Vec::new();
    for (name, g, k) in games {
        let target = g.support_enumeration().equilibria.remove(0);
        let d = (g.rows() + g.cols() - 2) as u32;
        let (n1, far1) = star_recurrence(&g, &target, k)?;
        let (n2, far2) = star_recurrence(&g, &target, 2 * k)?;
        ensure(n1 > 0 && n2 > 0, || format!("{name}: no recurrent cells"))?;
        ensure(far1 <= 2.0 && far2 <= 2.0, || format!("{name}: recurrent cells {far1}/{far2} widths away"))?;
        let bound = n1 * 2usize.pow(d) / 2;
        ensure(n2 <= bound, || format!("{name}: {n2} cells at k={} above {bound}", 2 * k))?;
        notes.push(format!("{name} {n1}->{n2}"));
    }
    Ok(notes.join(", "))
}

fn c8_oracles() -> Outcome {
    for seed in 0..50 {
        common::check_complex(seed)?;
    }
    let counts = common::check_support_vs_grid(20, 8, 6)?;
    common::check_deficits(1000, 13)?;
    let chains = VERIFIED.load(Ordering::Relaxed) + 50 * 2;
    Ok(format!(
        "50 complexes, 20 games (counts {counts:?}), 1000 profiles; ∂∘∂ = 0 on {chains} chain complexes"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 eps-circle", c1_eps_circle),
        ("2 eps-ball transition", c2_eps_ball),
        ("3 perturbation robustness", c3_robustness),
        ("4 Nash circle", c4_nash_circle),
        ("5 canonical Conley indices", c5_canonical_indices),
        ("6 exact-sequence consequences", c6_exact_sequence),
        ("7 star dynamics", c7_star_concentration),
        ("8 oracle suites", c8_oracles),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("PASS criterion {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} [{secs:.1}s]: {detail}");
            }
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
