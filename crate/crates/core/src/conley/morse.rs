use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::transition::closure;
use super::{CellId, ConleyError, TransitionGraph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Scc {
    pub id: usize,
    pub cells: Vec<CellId>,
    pub recurrent: bool,
    #[serde(skip)]
    pub nodes: Vec<usize>,
}

/// SCC condensation of a transition graph.
#[derive(Debug, Clone)]
pub struct MorseGraph {
    sccs: Vec<Scc>,
    scc_of: Vec<usize>,
    /// Condensation edges between distinct SCCs.
    edges: BTreeSet<(usize, usize)>,
}

/// Iterative Tarjan; components are returned in no particular order.
pub(crate) fn tarjan(adj: &[Vec<u32>], allowed: impl Fn(usize) -> bool) -> Vec<Vec<usize>> {
    const NONE: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![NONE; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != NONE || !allowed(root) {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i] as usize;
                *i += 1;
                if !allowed(w) {
                    continue;
                }
                if index[w] == NONE {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}

impl MorseGraph {
    pub fn new(tg: &TransitionGraph) -> Self {
        let adj: Vec<Vec<u32>> = (0..tg.len()).map(|a| tg.successors(a).to_vec()).collect();
        let mut comps = tarjan(&adj, |_| true);
        // nodes follow cell order, so the first node is the minimal cell
        comps.sort_by_key(|c| c[0]);
        let mut scc_of = vec![0; tg.len()];
        for (id, c) in comps.iter().enumerate() {
            for &v in c {
                scc_of[v] = id;
            }
        }
        let sccs: Vec<Scc> = comps
            .into_iter()
            .enumerate()
            .map(|(id, nodes)| {
                let recurrent = nodes.len() > 1 || tg.has_edge(nodes[0], nodes[0]);
                Scc {
                    id,
                    cells: nodes.iter().map(|&v| tg.cell(v)).collect(),
                    recurrent,
                    nodes,
                }
            })
            .collect();
        let mut edges = BTreeSet::new();
        for a in 0..tg.len() {
            for &b in tg.successors(a) {
                let (sa, sb) = (scc_of[a], scc_of[b as usize]);
                if sa != sb {
                    edges.insert((sa, sb));
                }
            }
        }
        Self { sccs, scc_of, edges }
    }

    pub fn sccs(&self) -> &[Scc] {
        &self.sccs
    }

    pub fn scc_of_node(&self, node: usize) -> usize {
        self.scc_of[node]
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn recurrent(&self) -> impl Iterator<Item = &Scc> {
        self.sccs.iter().filter(|s| s.recurrent)
    }

    pub fn recurrent_count(&self) -> usize {
        self.recurrent().count()
    }

    pub fn recurrent_cells(&self) -> BTreeSet<CellId> {
        self.recurrent().flat_map(|s| s.cells.iter().copied()).collect()
    }

    pub fn is_recurrent_node(&self, node: usize) -> bool {
        self.sccs[self.scc_of[node]].recurrent
    }

    fn scc_adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.sccs.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b as u32);
        }
        adj
    }

    /// SCCs reachable from any of `from` in the condensation, as a mask
    /// over SCC ids.
    pub fn reach_set(&self, from: &[usize]) -> Vec<bool> {
        closure(&self.scc_adjacency(), from.iter().copied(), |_| true)
    }

    /// `a` reaches `b` in the condensation (reflexive).
    pub fn reaches(&self, a: usize, b: usize) -> bool {
        closure(&self.scc_adjacency(), [a], |_| true)[b]
    }

    /// Pairs `(a, b)` of distinct recurrent SCCs with `a` above `b`, i.e. a
    /// path from `a` to `b`.
    pub fn morse_order(&self) -> Vec<(usize, usize)> {
        let adj = self.scc_adjacency();
        let mut out = Vec::new();
        for a in self.recurrent() {
            let reach = closure(&adj, [a.id], |_| true);
            for b in self.recurrent() {
                if a.id != b.id && reach[b.id] {
                    out.push((a.id, b.id));
                }
            }
        }
        out
    }

    /// Recurrent SCCs grouped into connected pieces of the grid (cells
    /// sharing a vertex). Each region lists SCC ids.
    pub fn recurrent_regions(&self, tg: &TransitionGraph) -> Vec<Vec<usize>> {
        let grid = tg.grid();
        let cells = self.recurrent_cells();
        let mut owner: HashMap<CellId, usize> = HashMap::new();
        for s in self.recurrent() {
            for &c in &s.cells {
                owner.insert(c, s.id);
            }
        }
        let mut seen: BTreeSet<CellId> = BTreeSet::new();
        let mut regions = Vec::new();
        for &c in &cells {
            if seen.contains(&c) {
                continue;
            }
            let mut ids = BTreeSet::new();
            let mut stack = vec![c];
            seen.insert(c);
            while let Some(x) = stack.pop() {
                ids.insert(owner[&x]);
                for nb in grid.shape().vertex_neighbours(x) {
                    if cells.contains(&nb) && seen.insert(nb) {
                        stack.push(nb);
                    }
                }
            }
            regions.push(ids.into_iter().collect());
        }
        regions
    }

    /// `{sccs:[{id, cells, recurrent}], edges:[[i,j],...]}`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            sccs: &'a [Scc],
            edges: Vec<[usize; 2]>,
        }
        serde_json::to_string(&Out {
            sccs: &self.sccs,
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
        })
        .expect("morse graph serializes")
    }
}

pub fn morse_graph(tg: &TransitionGraph) -> MorseGraph {
    MorseGraph::new(tg)
}

fn nodes_of(tg: &TransitionGraph, cells: &BTreeSet<CellId>) -> Result<Vec<usize>, ConleyError> {
    cells
        .iter()
        .map(|&c| {
            tg.node(c)
                .ok_or_else(|| ConleyError::Argument(format!("cell {c} is not active")))
        })
        .collect()
}

pub(super) fn to_cells(tg: &TransitionGraph, mask: &[bool]) -> BTreeSet<CellId> {
    mask.iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(v, _)| tg.cell(v))
        .collect()
}

/// Forward closure of a recurrent SCC.
pub fn attractor_cells(mg: &MorseGraph, tg: &TransitionGraph, seed_scc: usize) -> Result<BTreeSet<CellId>, ConleyError> {
    let scc = mg
        .sccs()
        .get(seed_scc)
        .ok_or_else(|| ConleyError::Argument(format!("no SCC {seed_scc}")))?;
    if !scc.recurrent {
        return Err(ConleyError::Argument(format!("SCC {seed_scc} is not recurrent")));
    }
    Ok(to_cells(tg, &tg.forward_closure(scc.nodes.iter().copied(), |_| true)))
}

/// Cells of `set` lying on a path that stays in `set` forever in both
/// directions: reachable within `set` from a cycle in `set` and reaching a
/// cycle in `set`.
pub fn invariant_part(tg: &TransitionGraph, set: &BTreeSet<CellId>) -> Result<BTreeSet<CellId>, ConleyError> {
    let nodes = nodes_of(tg, set)?;
    let mut inside = vec![false; tg.len()];
    for &v in &nodes {
        inside[v] = true;
    }
    let adj: Vec<Vec<u32>> = (0..tg.len()).map(|a| tg.successors(a).to_vec()).collect();
    let cyclic: Vec<usize> = tarjan(&adj, |v| inside[v])
        .into_iter()
        .filter(|c| c.len() > 1 || tg.has_edge(c[0], c[0]))
        .flatten()
        .collect();
    let fwd = closure(&adj, cyclic.iter().copied(), |v| inside[v]);
    let back = closure(&tg.reverse(), cyclic.iter().copied(), |v| inside[v]);
    let both: Vec<bool> = fwd.iter().zip(&back).map(|(a, b)| *a && *b).collect();
    Ok(to_cells(tg, &both))
}

/// The part of the graph's invariant set disjoint from a forward-closed
/// attractor neighbourhood `a`: `Inv(cells \ a)`.
pub fn dual_repeller_cells(tg: &TransitionGraph, a: &BTreeSet<CellId>) -> Result<BTreeSet<CellId>, ConleyError> {
    let nodes = nodes_of(tg, a)?;
    let mut in_a = vec![false; tg.len()];
    for &v in &nodes {
        in_a[v] = true;
    }
    for &v in &nodes {
        if let Some(&w) = tg.successors(v).iter().find(|&&w| !in_a[w as usize]) {
            return Err(ConleyError::Argument(format!(
                "set is not forward closed: {} -> {}",
                tg.cell(v),
                tg.cell(w as usize)
            )));
        }
    }
    let rest: BTreeSet<CellId> = (0..tg.len()).filter(|&v| !in_a[v]).map(|v| tg.cell(v)).collect();
    invariant_part(tg, &rest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conley::{CubicalGrid, TimeMap, TransitionParams, WholeBox};
    use crate::dynamics::{testfields, VectorField};

    fn graph(f: &dyn VectorField, grid: &CubicalGrid, tau: f64, rho: f64) -> TransitionGraph {
        TransitionGraph::build(&TimeMap::new(f, tau), grid, TransitionParams { rho, ..Default::default() }).unwrap()
    }

    #[test]
    fn tarjan_on_small_graph() {
        let adj = vec![vec![1], vec![2], vec![0, 3], vec![], vec![4]];
        let mut comps = tarjan(&adj, |_| true);
        comps.sort();
        assert_eq!(comps, vec![vec![0, 1, 2], vec![3], vec![4]]);
    }

    #[test]
    fn zero_field_every_cell_recurrent() {
        let f = testfields::zero(2);
        let grid = testfields::square_grid(1.0, 5).unwrap();
        let tg = graph(&f, &grid, 0.5, 0.0);
        let mg = morse_graph(&tg);
        assert_eq!(mg.recurrent_count(), 25);
        assert!(mg.edges().is_empty());
        let a = attractor_cells(&mg, &tg, 7).unwrap();
        assert_eq!(a.len(), 1);
        let r = dual_repeller_cells(&tg, &a).unwrap();
        assert_eq!(r.len(), 24);
        assert!(r.is_disjoint(&a));
    }

    #[test]
    fn decay_has_one_recurrent_component() {
        let f = testfields::linear_decay(1);
        let grid = testfields::interval_grid(-1.0, 1.0, 16).unwrap();
        let tg = graph(&f, &grid, 1.0, 1e-3);
        let mg = morse_graph(&tg);
        let rec: Vec<&Scc> = mg.recurrent().collect();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec[0].cells, vec![7, 8]);
    }

    #[test]
    fn double_well_has_three_regions_with_saddle_on_top() {
        let f = testfields::double_well();
        let grid = testfields::interval_grid(-1.5, 1.5, 64).unwrap();
        let tg = graph(&f, &grid, 0.5, 1e-3);
        let mg = morse_graph(&tg);
        let mut regions = mg.recurrent_regions(&tg);
        assert_eq!(regions.len(), 3);
        let centre = |r: &Vec<usize>| grid.center(mg.sccs()[r[0]].cells[0])[0];
        regions.sort_by(|a, b| centre(a).partial_cmp(&centre(b)).unwrap());
        assert!(centre(&regions[0]) < -0.8 && centre(&regions[2]) > 0.8);
        assert!(centre(&regions[1]).abs() < 0.1);
        let above = |a: &Vec<usize>, b: &Vec<usize>| a.iter().any(|&x| b.iter().any(|&y| mg.reaches(x, y)));
        let (left, mid, right) = (&regions[0], &regions[1], &regions[2]);
        assert!(above(mid, left) && above(mid, right));
        assert!(!above(left, mid) && !above(right, mid) && !above(left, right) && !above(right, left));

        let a = attractor_cells(&mg, &tg, right[0]).unwrap();
        let r = dual_repeller_cells(&tg, &a).unwrap();
        assert!(r.is_disjoint(&a));
        for region in [&regions[0], &regions[1]] {
            for &id in region {
                assert!(mg.sccs()[id].cells.iter().all(|c| r.contains(c)));
            }
        }
        // no edge from the attractor into the repeller
        for &c in &a {
            for &s in tg.successors(tg.node(c).unwrap()) {
                assert!(!r.contains(&tg.cell(s as usize)));
            }
        }
    }

    #[test]
    fn rotation_annulus_is_recurrent() {
        let f = testfields::rotation();
        let grid = testfields::annulus_grid(0.5, 1.0, 16).unwrap();
        let tg = graph(&f, &grid, 0.3, 0.01);
        let mg = morse_graph(&tg);
        let rec = mg.recurrent_cells();
        // cells cut by the outer circle may map outside the annulus
        let inner: Vec<CellId> = grid
            .active()
            .iter()
            .copied()
            .filter(|&c| {
                let (lo, hi) = grid.cell_box(c);
                let far = (0..2).map(|a| lo[a].abs().max(hi[a].abs()).powi(2)).sum::<f64>().sqrt();
                let near = (0..2).map(|a| 0.0f64.clamp(lo[a], hi[a]).powi(2)).sum::<f64>().sqrt();
                far <= 1.0 && near >= 0.5
            })
            .collect();
        assert!(!inner.is_empty());
        assert!(inner.iter().all(|c| rec.contains(c)));
    }

    #[test]
    fn non_closed_attractor_is_rejected() {
        let grid = CubicalGrid::build(&[(0.0, 1.0)], &[3], &WholeBox).unwrap();
        let tg = TransitionGraph::from_edges(&grid, vec![vec![1], vec![2], vec![2]]).unwrap();
        let a: BTreeSet<CellId> = [1].into_iter().collect();
        assert!(dual_repeller_cells(&tg, &a).is_err());
        let mg = morse_graph(&tg);
        assert_eq!(mg.recurrent_count(), 1);
        assert!(attractor_cells(&mg, &tg, 0).is_err());
        assert!(mg.to_json().contains("\"recurrent\":true"));
    }
}
