use std::collections::BTreeSet;

use clap::Args;
use conley_games::conley::{
    index_pair, morse_graph, scc_cells, sink_region_seeds, AttractorRepeller, CellId, ConleyError, CubicalGrid,
    MorseGraph, TransitionGraph,
};
use conley_games::homology::{wazewski_check, BettiProfile};
use conley_games::netopo::nash_component_extract;
use serde::Serialize;

use crate::report::{betti_verdict, usage, CliError, CliResult, RunReport};
use crate::setup::{build_field, build_grid, parse_state, transition_graph, Built, FieldArgs, GridArgs};

#[derive(Debug, Args)]
pub struct MorseArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Also classify the Nash cells of the game at the same resolution and
    /// compare them with the recurrent cells.
    #[arg(long)]
    pub compare_nash: bool,
}

#[derive(Debug, Args)]
pub struct ConleyArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Recurrent component label (1-based, as listed by `morse`).
    #[arg(long, value_name = "I")]
    pub pair_from_scc: Option<usize>,
    /// Use the recurrent component holding this point (grid coordinates).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "pair_from_scc")]
    pub at: Option<String>,
    /// Attractor from the sink regions, its dual repeller and the full
    /// invariant set, with the Euler relation between their indices.
    #[arg(long)]
    pub decompose: bool,
}

#[derive(Serialize)]
struct SccRow {
    label: usize,
    cells: usize,
    center: Vec<f64>,
}

struct Analysis {
    grid: CubicalGrid,
    tg: TransitionGraph,
    mg: MorseGraph,
    built: Built,
    /// Recurrent SCC ids in label order.
    labels: Vec<usize>,
}

impl Analysis {
    fn label_of(&self, scc: usize) -> usize {
        self.labels.iter().position(|&s| s == scc).map_or(0, |p| p + 1)
    }
}

fn analyze(field: &FieldArgs, grid: &GridArgs, seed: u64, rep: &mut RunReport) -> CliResult<Analysis> {
    let built = build_field(field, rep)?;
    let g = build_grid(field.field, built.dynamics.domain(), grid, rep)?;
    rep.param("seed", seed);
    let tg = transition_graph(&built.dynamics, &g, grid, seed, rep)?;
    let mg = morse_graph(&tg);
    let labels = mg.recurrent().map(|s| s.id).collect();
    Ok(Analysis {
        grid: g,
        tg,
        mg,
        built,
        labels,
    })
}

fn mean_center(grid: &CubicalGrid, cells: &[CellId]) -> Vec<f64> {
    let mut c = vec![0.0; grid.dim()];
    for &cell in cells {
        for (a, v) in grid.center(cell).into_iter().enumerate() {
            c[a] += v;
        }
    }
    c.iter().map(|v| v / cells.len().max(1) as f64).collect()
}

fn recurrent_csv(grid: &CubicalGrid, cells: &BTreeSet<CellId>) -> String {
    let d = grid.dim();
    let mut s = (1..=d).map(|a| format!("u{a}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    for &c in cells {
        let row: Vec<String> = grid.center(c).iter().map(f64::to_string).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn run_morse(a: &MorseArgs, seed: u64) -> CliResult<RunReport> {
    let mut rep = RunReport::new("morse");
    let an = analyze(&a.field, &a.grid, seed, &mut rep)?;
    let (tg, mg) = (&an.tg, &an.mg);
    rep.output("cells", tg.len());
    rep.output("edges", tg.edge_count());
    rep.output("sccs", mg.sccs().len());
    let rows: Vec<SccRow> = an
        .labels
        .iter()
        .enumerate()
        .map(|(i, &s)| SccRow {
            label: i + 1,
            cells: mg.sccs()[s].cells.len(),
            center: mean_center(&an.grid, &mg.sccs()[s].cells),
        })
        .collect();
    rep.output("recurrent_sccs", rows);
    let rec = mg.recurrent_cells();
    rep.output("recurrent_cells", rec.len());
    let regions = mg.recurrent_regions(tg);
    let region_labels: Vec<Vec<usize>> = regions
        .iter()
        .map(|r| r.iter().map(|&s| an.label_of(s)).collect())
        .collect();
    rep.output("regions", &region_labels);
    let order: Vec<(usize, usize)> = mg
        .morse_order()
        .into_iter()
        .map(|(x, y)| (an.label_of(x), an.label_of(y)))
        .collect();
    rep.output("morse_order", order);
    let sinks: Vec<usize> = sink_region_seeds(tg, mg).iter().map(|&s| an.label_of(s)).collect();
    rep.output("attractor_components", sinks);

    if let Some(t) = &an.built.target {
        let z = an.built.dynamics.domain().to_grid(&t.to_f64());
        let widths: Vec<f64> = (0..an.grid.dim()).map(|ax| an.grid.shape().width(ax)).collect();
        let far = rec
            .iter()
            .map(|&c| {
                let (lo, hi) = an.grid.cell_box(c);
                (0..z.len())
                    .map(|ax| (lo[ax] - z[ax]).max(z[ax] - hi[ax]).max(0.0) / widths[ax])
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        rep.output("max_recurrent_distance_cells", far);
    }

    if a.compare_nash {
        let g = an
            .built
            .game
            .as_ref()
            .ok_or_else(|| usage("--compare-nash needs a game field"))?;
        let ks = a.grid.k_axes.clone().unwrap_or_default();
        if ks.iter().any(|&v| v != a.grid.k) {
            return Err(usage("--compare-nash needs a uniform --k"));
        }
        let nash = nash_component_extract(g, a.grid.k, 0).map_err(usage)?;
        let nash_cells: BTreeSet<CellId> = nash.cells().iter().copied().collect();
        rep.output("nash_cells", nash_cells.len());
        rep.output("recurrent_outside_nash", rec.difference(&nash_cells).count());
        rep.output("nash_outside_recurrent", nash_cells.difference(&rec).count());
        if rec.is_superset(&nash_cells) && rec.len() > nash_cells.len() {
            rep.verdict("recurrent cells strictly contain the Nash cells");
        }
    }
    rep.verdict(format!("{} recurrent regions", regions.len()));
    rep.file("morse_graph.json", mg.to_json());
    rep.file("transition.csv", tg.to_csv());
    rep.file("recurrent.csv", recurrent_csv(&an.grid, &rec));
    Ok(rep)
}

#[derive(Serialize)]
struct IndexRow {
    label: usize,
    cells: usize,
    n_cells: Option<usize>,
    l_cells: Option<usize>,
    betti: Option<Vec<usize>>,
    wazewski: Option<bool>,
    status: String,
}

/// Index of one invariant cell set; isolation problems are reported as
/// unresolved, a broken complex as an invariant violation.
fn index_of(an: &Analysis, s: &BTreeSet<CellId>) -> CliResult<Result<(BettiProfile, usize, usize), ConleyError>> {
    if s.is_empty() {
        return Ok(Ok((BettiProfile::zero(an.grid.dim()), 0, 0)));
    }
    let pair = match index_pair(&an.tg, &an.mg, s) {
        Ok(p) => p,
        Err(e) => return Ok(Err(e)),
    };
    let (n, l) = pair.complexes(&an.tg);
    for cx in [&n, &l] {
        cx.verify().map_err(|e| CliError::Invariant(e.to_string()))?;
    }
    let b = pair.conley_index(&an.tg).map_err(|e| CliError::Invariant(e.to_string()))?;
    Ok(Ok((b, pair.n.len(), pair.l.len())))
}

fn row(label: usize, cells: usize, r: Result<(BettiProfile, usize, usize), ConleyError>) -> IndexRow {
    match r {
        Ok((b, n, l)) => IndexRow {
            label,
            cells,
            n_cells: Some(n),
            l_cells: Some(l),
            wazewski: Some(wazewski_check(&b)),
            status: betti_verdict(&b.betti),
            betti: Some(b.betti),
        },
        Err(e) => IndexRow {
            label,
            cells,
            n_cells: None,
            l_cells: None,
            betti: None,
            wazewski: None,
            status: format!("not resolved at this grid: {e}"),
        },
    }
}

pub fn run_conley(a: &ConleyArgs, seed: u64) -> CliResult<RunReport> {
    let mut rep = RunReport::new("conley-index");
    let an = analyze(&a.field, &a.grid, seed, &mut rep)?;
    rep.output("cells", an.tg.len());
    rep.output("recurrent_components", an.labels.len());

    let chosen: Vec<usize> = if let Some(i) = a.pair_from_scc {
        rep.param("pair_from_scc", i);
        if i == 0 || i > an.labels.len() {
            return Err(usage(format!("no recurrent component {i}; there are {}", an.labels.len())));
        }
        vec![an.labels[i - 1]]
    } else if let Some(p) = &a.at {
        rep.param("at", p);
        let domain = an.built.dynamics.domain();
        let z = domain.to_grid(&parse_state(p, domain)?);
        let ids: BTreeSet<usize> = an
            .grid
            .locate(&z)
            .into_iter()
            .filter_map(|c| an.tg.node(c))
            .filter(|&v| an.mg.is_recurrent_node(v))
            .map(|v| an.mg.scc_of_node(v))
            .collect();
        if ids.is_empty() {
            return Err(usage(format!("no recurrent component at {p}")));
        }
        ids.into_iter().collect()
    } else if a.decompose {
        Vec::new()
    } else {
        an.labels.clone()
    };

    let mut rows = Vec::new();
    for &s in &chosen {
        let cells = scc_cells(&an.mg, s);
        let r = index_of(&an, &cells)?;
        if let Ok((b, _, _)) = &r {
            rep.verdict(format!("component {}: index {}", an.label_of(s), betti_verdict(&b.betti)));
        }
        rows.push(row(an.label_of(s), cells.len(), r));
    }
    if !rows.is_empty() {
        rep.output("indices", rows);
    }

    if a.decompose {
        let seeds = sink_region_seeds(&an.tg, &an.mg);
        let ar = AttractorRepeller::new(&an.tg, &an.mg, &seeds).map_err(usage)?;
        let ia = index_of(&an, &ar.attractor)?;
        let ir = index_of(&an, &ar.repeller)?;
        let ix = index_of(&an, &ar.invariant)?;
        let betti = |r: &Result<(BettiProfile, usize, usize), ConleyError>| r.as_ref().ok().map(|t| t.0.clone());
        let (ba, br, bx) = (betti(&ia), betti(&ir), betti(&ix));
        rep.output("attractor", row(0, ar.attractor.len(), ia));
        rep.output("repeller", row(0, ar.repeller.len(), ir));
        rep.output("invariant_set", row(0, ar.invariant.len(), ix));
        match (ba, br, bx) {
            (Some(ba), Some(br), Some(bx)) => {
                let (ca, cr, cx) = (ba.euler_characteristic(), br.euler_characteristic(), bx.euler_characteristic());
                rep.output("euler", [ca, cr, cx]);
                if ca + cr != cx {
                    return Err(CliError::Invariant(format!("euler(A) + euler(R) = {ca} + {cr} != euler(X) = {cx}")));
                }
                if ba.trimmed() != bx.trimmed() && ar.repeller.is_empty() {
                    return Err(CliError::Invariant("attractor and invariant-set indices differ but the repeller is empty".into()));
                }
                rep.verdict(format!("euler additivity holds: {ca} + {cr} = {cx}"));
            }
            _ => rep.verdict("euler additivity not checked: an index is not resolved at this grid"),
        }
    }
    Ok(rep)
}
