use clap::Args;
use conley_games::game::BimatrixGame;
use conley_games::netopo::{
    bisect_transition, eps_nash_region, nash_component_extract, normalized_to_raw, points_csv, project_3d,
    region_homology, ClassificationMode,
};
use conley_games::rational::{format_rational, to_f64};
use conley_games::Rational;

use crate::report::{betti_verdict, usage, CliError, CliResult, RunReport};
use crate::setup::{parse_rat, GameArgs};

#[derive(Debug, Args)]
pub struct EpsArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// ε as a fraction of the payoff range.
    #[arg(long, conflicts_with = "eps")]
    pub eps_normalized: Option<String>,
    /// ε in payoff units.
    #[arg(long)]
    pub eps: Option<String>,
    /// Cells per axis.
    #[arg(long, default_value_t = 24)]
    pub k: u32,
    #[arg(long, default_value = "exact-per-cell")]
    pub mode: ClassificationMode,
    /// Bisect the circle-to-ball transition between two normalized ε.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub bisect: Option<Vec<String>>,
    /// Target bracket width of `--bisect`, normalized.
    #[arg(long, default_value = "0.01")]
    pub width: String,
    /// Project member-cell centres along this direction (four entries).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub project: Option<Vec<f64>>,
    /// Also extract the Nash cells with this many refinement levels.
    #[arg(long, value_name = "DEPTH")]
    pub extract: Option<u32>,
    /// Perturb every payoff by at most this much (payoff units) first.
    #[arg(long)]
    pub perturb: Option<String>,
}

fn range(g: &BimatrixGame) -> Rational {
    let (lo, hi) = g.payoff_range();
    hi - lo
}

pub fn run(a: &EpsArgs, seed: u64) -> CliResult<RunReport> {
    let mut rep = RunReport::new("eps-ne");
    let mut g = a.game.load()?;
    rep.param("game", a.game.label());
    rep.param("k", a.k);
    rep.param("mode", a.mode);
    if let Some(r) = &a.perturb {
        let radius = parse_rat(r)?;
        g = g.perturb(&radius, seed).map_err(usage)?;
        rep.param("perturb", format_rational(&radius));
        rep.param("seed", seed);
        rep.output("perturbed_game", serde_json::from_str::<serde_json::Value>(&g.to_json()).ok());
    }
    let spread = range(&g);
    if spread == Rational::from_integer(0.into()) && a.eps_normalized.is_some() {
        return Err(usage("constant game: normalized ε is undefined"));
    }

    let eps = match (&a.eps_normalized, &a.eps) {
        (Some(e), _) => {
            let e = parse_rat(e)?;
            rep.param("eps_normalized", format_rational(&e));
            Some((normalized_to_raw(&g, &e), Some(e)))
        }
        (None, Some(e)) => {
            let e = parse_rat(e)?;
            rep.param("eps", format_rational(&e));
            Some((e, None))
        }
        (None, None) => None,
    };
    if eps.is_none() && a.bisect.is_none() && a.extract.is_none() {
        return Err(usage("give --eps-normalized, --eps, --bisect or --extract"));
    }

    if let Some((raw, norm)) = &eps {
        let r = eps_nash_region(&g, raw, a.k, a.mode).map_err(usage)?;
        let cx = r.complex();
        cx.verify().map_err(|e| CliError::Invariant(e.to_string()))?;
        if r.member_count() == 0 {
            rep.output("member_count", 0);
            rep.verdict("empty region");
        } else {
            let b = region_homology(&r).map_err(usage)?;
            rep.output("region", r.report(norm.as_ref(), &b));
            rep.verdict(betti_verdict(&b.betti));
            if !r.undecided().is_empty() {
                rep.verdict(format!("{} undecided cells kept as members", r.undecided().len()));
            }
            rep.file("region.csv", r.to_csv());
            if let Some(dir) = &a.project {
                rep.param("project", dir);
                let pts = project_3d(&r, dir).map_err(usage)?;
                rep.output("projected_points", pts.len());
                rep.file("projection.csv", points_csv(&pts));
            }
        }
    }

    if let Some(b) = &a.bisect {
        let lo = parse_rat(&b[0])?;
        let hi = parse_rat(&b[1])?;
        let width = parse_rat(&a.width)?;
        rep.param("bisect", [format_rational(&lo), format_rational(&hi)]);
        rep.param("width", format_rational(&width));
        let br = bisect_transition(
            &g,
            &normalized_to_raw(&g, &lo),
            &normalized_to_raw(&g, &hi),
            a.k,
            &normalized_to_raw(&g, &width),
        )
        .map_err(usage)?;
        let (nlo, nhi) = (&br.lo / &spread, &br.hi / &spread);
        rep.output("bracket_raw", [format_rational(&br.lo), format_rational(&br.hi)]);
        rep.output("bracket_normalized", [format_rational(&nlo), format_rational(&nhi)]);
        rep.output("bracket_normalized_f64", [to_f64(&nlo), to_f64(&nhi)]);
        rep.output("bisection", &br);
        rep.verdict(format!(
            "circle-to-ball transition in normalized eps [{}, {}]",
            to_f64(&nlo),
            to_f64(&nhi)
        ));
    }

    if let Some(depth) = a.extract {
        rep.param("extract", depth);
        let c = nash_component_extract(&g, a.k, depth).map_err(usage)?;
        let s = c.summary();
        rep.verdict(format!("nash cells: {} cluster(s), {}", s.clusters, betti_verdict(&s.betti)));
        rep.output("nash", s);
        rep.file("nash_cells.csv", c.to_csv());
    }
    Ok(rep)
}
