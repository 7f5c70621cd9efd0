use clap::{ArgAction, Args};
use conley_games::dynamics::{integrate, iterate, Domain, Trajectory};
use conley_games::game::BimatrixGame;

use crate::report::{usage, CliResult, RunReport};
use crate::setup::{build_field, parse_state, Dynamics, FieldArgs};

#[derive(Debug, Args)]
#[command(disable_help_flag = true)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Initial state: full or grid coordinates, or `x..;y..` for games.
    /// Defaults to the uniform profile on game fields.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Horizon (iterates for maps).
    #[arg(short = 'T', long = "horizon", default_value_t = 10.0)]
    pub t: f64,
    /// Integration step.
    #[arg(short = 'h', long = "step", default_value_t = 1e-2)]
    pub h: f64,
    #[arg(long, action = ArgAction::Help)]
    pub help: Option<bool>,
}

/// Deficit of a state in full coordinates, in `f64`.
fn float_deficit(g: &BimatrixGame, z: &[f64]) -> f64 {
    let (m, n) = (g.rows(), g.cols());
    let (a, b) = g.payoffs_f64();
    let (x, y) = z.split_at(m);
    let u: Vec<f64> = (0..m).map(|i| (0..n).map(|j| a[i * n + j] * y[j]).sum()).collect();
    let v: Vec<f64> = (0..n).map(|j| (0..m).map(|i| b[i * n + j] * x[i]).sum()).collect();
    let ex: f64 = x.iter().zip(&u).map(|(p, q)| p * q).sum();
    let ey: f64 = y.iter().zip(&v).map(|(p, q)| p * q).sum();
    let bx = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let by = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (bx - ex).max(0.0) + (by - ey).max(0.0)
}

fn default_state(domain: &Domain) -> Option<Vec<f64>> {
    match *domain {
        Domain::SimplexProduct { m, n } => {
            let mut z = vec![1.0 / m as f64; m];
            z.extend(vec![1.0 / n as f64; n]);
            Some(z)
        }
        Domain::Euclidean { .. } => None,
    }
}

pub fn run(a: &SimulateArgs) -> CliResult<RunReport> {
    let mut rep = RunReport::new("simulate");
    let built = build_field(&a.field, &mut rep)?;
    let domain = built.dynamics.domain().clone();
    let z0 = match &a.x0 {
        Some(s) => parse_state(s, &domain)?,
        None => default_state(&domain).ok_or_else(|| usage("--x0 is required for this field"))?,
    };
    rep.param("x0", &z0);
    rep.param("T", a.t);
    let tr = match &built.dynamics {
        Dynamics::Flow(f) => {
            rep.param("h", a.h);
            integrate(f.as_ref(), &z0, a.t, a.h).map_err(usage)?
        }
        Dynamics::Map(m) => {
            if !(a.t >= 0.0 && a.t.is_finite()) {
                return Err(usage("need finite T >= 0"));
            }
            let steps = a.t.round() as usize;
            let states = iterate(m.as_ref(), &z0, steps).map_err(usage)?;
            Trajectory {
                times: (0..=steps).map(|s| s as f64).collect(),
                states,
                step: 1.0,
                method: "map",
                projection: 0.0,
            }
        }
    };
    rep.output("rows", tr.states.len());
    rep.output("method", tr.method);
    rep.output("final_state", tr.last());
    rep.output("max_projection", tr.projection);
    if let Some(g) = &built.game {
        let d = float_deficit(g, tr.last());
        rep.output("terminal_deficit", d);
        rep.verdict(format!("terminal deficit {d:.3e}"));
    }
    rep.file("trajectory.csv", tr.to_csv(&domain));
    Ok(rep)
}
