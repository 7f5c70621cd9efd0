use std::path::PathBuf;

use clap::Args;
use conley_games::game::{BimatrixGame, MixedProfile, Player};
use conley_games::rational::{rat, to_f64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::report::{CliError, CliResult, RunReport};
use crate::setup::{load_game, GameArgs};

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Game file; alternative to `--game`.
    #[arg(value_name = "FILE")]
    pub file: Option<PathBuf>,
    #[command(flatten)]
    pub game: GameArgs,
    /// Random profiles drawn for the deficit summary.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Serialize)]
struct Dominance {
    player: usize,
    dominant: usize,
    dominated: usize,
}

#[derive(Serialize)]
struct DeficitSummary {
    samples: usize,
    min: f64,
    mean: f64,
    max: f64,
}

fn random_profile(rng: &mut ChaCha8Rng, m: usize, n: usize) -> MixedProfile {
    const DEN: i64 = 60;
    let mut draw = |k: usize| {
        // uniform composition of DEN into k parts
        let mut cuts: Vec<i64> = (0..k - 1).map(|_| rng.gen_range(0..=DEN)).collect();
        cuts.sort_unstable();
        let mut prev = 0;
        let mut out = Vec::with_capacity(k);
        for c in cuts.into_iter().chain([DEN]) {
            out.push(rat(c - prev, DEN));
            prev = c;
        }
        out
    };
    let x = draw(m);
    let y = draw(n);
    MixedProfile::new(x, y).expect("compositions sum to one")
}

pub fn run(a: &AnalyzeArgs, seed: u64) -> CliResult<RunReport> {
    let mut rep = RunReport::new("analyze-game");
    let g: BimatrixGame = match &a.file {
        Some(p) => {
            rep.param("game", p.display().to_string());
            load_game(p)?
        }
        None => {
            let g = a.game.load()?;
            rep.param("game", a.game.label());
            g
        }
    };
    rep.param("seed", seed);
    rep.param("samples", a.samples);
    rep.output("rows", g.rows());
    rep.output("cols", g.cols());

    let nash = g.support_enumeration();
    for p in &nash.equilibria {
        let d = g.deficit(p).map_err(|e| CliError::Invariant(e.to_string()))?;
        if d.total != rat(0, 1) {
            return Err(CliError::Invariant(format!("enumerated profile {p} has deficit {}", d.total)));
        }
    }
    let count = nash.equilibria.len();
    let eq: Vec<String> = nash.equilibria.iter().map(ToString::to_string).collect();
    rep.output("equilibria", &eq);
    rep.output("equilibrium_count", count);
    rep.output("odd_count", count % 2 == 1);
    rep.output("degenerate_flag", nash.degenerate_flag);
    let one_based = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
    let supports: Vec<_> = nash.supports.iter().map(|(r, c)| (one_based(r), one_based(c))).collect();
    rep.output("supports", supports);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<f64> = (0..a.samples)
        .map(|_| {
            let p = random_profile(&mut rng, g.rows(), g.cols());
            to_f64(&g.deficit(&p).expect("valid profile").total)
        })
        .collect();
    if !vals.is_empty() {
        rep.output(
            "deficit",
            DeficitSummary {
                samples: vals.len(),
                min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            },
        );
    }

    let mut dom = Vec::new();
    for pl in Player::BOTH {
        let k = g.strategies(pl);
        for s in 0..k {
            for t in (0..k).filter(|&t| t != s) {
                if g.weakly_dominates(pl, s, t) {
                    dom.push(Dominance {
                        player: pl.index() + 1,
                        dominant: s + 1,
                        dominated: t + 1,
                    });
                }
            }
        }
    }
    rep.output("weak_dominance", dom);

    if nash.degenerate_flag {
        rep.verdict("degenerate: equilibria are not all isolated");
    } else {
        let parity = if count % 2 == 1 { "odd" } else { "even" };
        rep.verdict(format!("nondegenerate: {count} equilibria ({parity})"));
    }
    Ok(rep)
}
