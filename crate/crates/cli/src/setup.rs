use std::path::PathBuf;

use clap::{Args, ValueEnum};
use conley_games::conley::{CubicalGrid, MapIterate, StepMap, TimeMap, TransitionGraph, TransitionParams};
use conley_games::dynamics::{
    mwu_map, replicator_field, star_field, testfields, DiscreteMap, Domain, StarDynamics, VectorField,
};
use conley_games::game::{km_game, matching_pennies, BimatrixGame, MixedProfile};
use conley_games::rational::parse_rational;
use conley_games::Rational;
use serde::Serialize;

use crate::report::{usage, CliResult, RunReport};

#[derive(Debug, Clone, Args)]
pub struct GameArgs {
    /// Use the Kohlberg–Mertens game.
    #[arg(long)]
    pub km: bool,
    /// Use Matching Pennies.
    #[arg(long, conflicts_with = "km")]
    pub mp: bool,
    /// Game file (JSON with `payoff1`, `payoff2`).
    #[arg(long, value_name = "FILE", conflicts_with_all = ["km", "mp"])]
    pub game: Option<PathBuf>,
}

impl GameArgs {
    pub fn given(&self) -> bool {
        self.km || self.mp || self.game.is_some()
    }

    pub fn load(&self) -> CliResult<BimatrixGame> {
        if self.km {
            return Ok(km_game());
        }
        if self.mp {
            return Ok(matching_pennies());
        }
        match &self.game {
            Some(p) => load_game(p),
            None => Err(usage("no game given; use --km, --mp or --game FILE")),
        }
    }

    pub fn label(&self) -> String {
        if self.km {
            "km".into()
        } else if self.mp {
            "matching-pennies".into()
        } else {
            self.game.as_ref().map_or("none".into(), |p| p.display().to_string())
        }
    }
}

pub fn load_game(path: &PathBuf) -> CliResult<BimatrixGame> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    BimatrixGame::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldName {
    Replicator,
    Mwu,
    Star,
    DoubleWell,
    Saddle,
    Repeller,
    Stable,
    LimitCycle,
    Rotation,
    KmCircle,
}

impl FieldName {
    pub fn needs_game(self) -> bool {
        matches!(self, FieldName::Replicator | FieldName::Mwu | FieldName::Star)
    }
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    #[arg(long, value_enum)]
    pub field: FieldName,
    #[command(flatten)]
    pub game: GameArgs,
    /// Target equilibrium of the star field, as `x1,..;y1,..`; defaults to
    /// the first enumerated equilibrium.
    #[arg(long)]
    pub target: Option<String>,
    /// Speed constant of the star field.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Learning rate of multiplicative weights.
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
}

/// Either a flow or a discrete map, ready for integration or a transition
/// graph.
pub enum Dynamics {
    Flow(Box<dyn VectorField>),
    Map(Box<dyn DiscreteMap>),
}

impl Dynamics {
    pub fn domain(&self) -> &Domain {
        match self {
            Dynamics::Flow(f) => f.domain(),
            Dynamics::Map(m) => m.domain(),
        }
    }
}

pub struct Built {
    pub dynamics: Dynamics,
    pub game: Option<BimatrixGame>,
    pub target: Option<MixedProfile>,
}

pub fn build_field(a: &FieldArgs, rep: &mut RunReport) -> CliResult<Built> {
    rep.param("field", a.field);
    let game = if a.field.needs_game() {
        let g = a.game.load()?;
        rep.param("game", a.game.label());
        Some(g)
    } else {
        if a.game.given() {
            return Err(usage(format!("--field {:?} takes no game", a.field)));
        }
        None
    };
    let mut target = None;
    let dynamics = match a.field {
        FieldName::Replicator => Dynamics::Flow(Box::new(replicator_field(game.as_ref().unwrap()))),
        FieldName::Mwu => {
            rep.param("eta", a.eta);
            Dynamics::Map(Box::new(mwu_map(game.as_ref().unwrap(), a.eta).map_err(usage)?))
        }
        FieldName::Star => {
            let g = game.clone().unwrap();
            let t = match &a.target {
                Some(s) => MixedProfile::parse(s).map_err(usage)?,
                None => g
                    .support_enumeration()
                    .equilibria
                    .into_iter()
                    .next()
                    .ok_or_else(|| usage("game has no equilibrium to target"))?,
            };
            rep.param("target", t.to_string());
            rep.param("c", a.c);
            let s = StarDynamics::new(g, t.clone(), a.c).map_err(usage)?;
            target = Some(t);
            Dynamics::Flow(Box::new(star_field(&s)))
        }
        FieldName::DoubleWell => Dynamics::Flow(Box::new(testfields::double_well())),
        FieldName::Saddle => Dynamics::Flow(Box::new(testfields::saddle())),
        FieldName::Repeller => Dynamics::Flow(Box::new(testfields::repeller())),
        FieldName::Stable => Dynamics::Flow(Box::new(testfields::linear_decay(2))),
        FieldName::LimitCycle => Dynamics::Flow(Box::new(testfields::limit_cycle())),
        FieldName::Rotation => Dynamics::Flow(Box::new(testfields::rotation())),
        FieldName::KmCircle => Dynamics::Flow(Box::new(testfields::km_circle_attractor())),
    };
    Ok(Built { dynamics, game, target })
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Cells per axis.
    #[arg(long, default_value_t = 16)]
    pub k: u32,
    /// Cells per axis, one entry per grid axis; overrides `--k`.
    #[arg(long, value_delimiter = ',')]
    pub k_axes: Option<Vec<u32>>,
    /// Flow time of one transition step (iterates for maps, rounded up).
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Sup-norm inflation of each image box.
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    /// Extra interior samples per cell.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
}

/// Default phase-space box of the Euclidean test fields.
fn euclidean_bounds(field: FieldName) -> Vec<(f64, f64)> {
    match field {
        FieldName::DoubleWell => vec![(-1.5, 1.5)],
        FieldName::LimitCycle => vec![(-1.5, 1.5); 2],
        _ => vec![(-1.0, 1.0); 2],
    }
}

pub fn build_grid(field: FieldName, domain: &Domain, g: &GridArgs, rep: &mut RunReport) -> CliResult<CubicalGrid> {
    let d = domain.grid_dim();
    let ks = match &g.k_axes {
        Some(ks) if ks.len() != d => return Err(usage(format!("--k-axes needs {d} entries, got {}", ks.len()))),
        Some(ks) => ks.clone(),
        None => vec![g.k; d],
    };
    rep.param("k", &ks);
    let grid = match domain.blocks() {
        Some(blocks) => CubicalGrid::simplex_product_per_axis(&blocks, &ks),
        None => {
            let bounds = euclidean_bounds(field);
            rep.param("bounds", &bounds);
            CubicalGrid::build(&bounds, &ks, &conley_games::conley::WholeBox)
        }
    };
    grid.map_err(usage)
}

pub fn transition_graph(
    dynamics: &Dynamics,
    grid: &CubicalGrid,
    g: &GridArgs,
    seed: u64,
    rep: &mut RunReport,
) -> CliResult<TransitionGraph> {
    if !(g.tau > 0.0 && g.tau.is_finite()) || !(g.rho >= 0.0) {
        return Err(usage("need tau > 0 and rho >= 0"));
    }
    rep.param("tau", g.tau);
    rep.param("rho", g.rho);
    rep.param("samples", g.samples);
    let params = TransitionParams {
        rho: g.rho,
        interior_samples: g.samples,
        seed,
    };
    let map: Box<dyn StepMap + '_> = match dynamics {
        Dynamics::Flow(f) => Box::new(TimeMap::new(f.as_ref(), g.tau)),
        Dynamics::Map(m) => Box::new(MapIterate {
            map: m.as_ref(),
            steps: g.tau.ceil().max(1.0) as usize,
        }),
    };
    TransitionGraph::build(map.as_ref(), grid, params).map_err(usage)
}

pub fn parse_rat(s: &str) -> CliResult<Rational> {
    parse_rational(s).map_err(|e| usage(format!("{s:?}: {e}")))
}

/// Accepts full coordinates, grid coordinates, or `x..;y..` for games.
pub fn parse_state(s: &str, domain: &Domain) -> CliResult<Vec<f64>> {
    let nums = |t: &str| -> CliResult<Vec<f64>> {
        t.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                let p = p.trim();
                p.parse::<f64>()
                    .or_else(|_| parse_rat(p).map(|r| conley_games::rational::to_f64(&r)))
                    .map_err(|_| usage(format!("bad number {p:?}")))
            })
            .collect()
    };
    let z = match s.split_once(';') {
        Some((a, b)) => {
            let mut z = nums(a)?;
            z.extend(nums(b)?);
            z
        }
        None => nums(s)?,
    };
    if z.len() == domain.dim() {
        Ok(z)
    } else if z.len() == domain.grid_dim() {
        Ok(domain.from_grid(&z))
    } else {
        Err(usage(format!(
            "state has {} entries; expected {} (or {})",
            z.len(),
            domain.dim(),
            domain.grid_dim()
        )))
    }
}
