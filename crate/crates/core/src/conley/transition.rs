use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{for_each_in_ranges, CellId, ConleyError, CubicalGrid};
use crate::dynamics::{flow, DiscreteMap, Domain, VectorField, DEFAULT_STEP};

/// Something that moves points for one transition step, in field
/// coordinates.
pub trait StepMap: Sync {
    fn domain(&self) -> &Domain;
    /// `None` when the image cannot be computed.
    fn image(&self, z: &[f64]) -> Option<Vec<f64>>;
}

/// Time-`tau` map of a vector field, integrated with RK4 at step `h`.
pub struct TimeMap<'a> {
    pub field: &'a dyn VectorField,
    pub tau: f64,
    pub h: f64,
}

impl<'a> TimeMap<'a> {
    pub fn new(field: &'a dyn VectorField, tau: f64) -> Self {
        Self {
            field,
            tau,
            h: DEFAULT_STEP,
        }
    }
}

impl StepMap for TimeMap<'_> {
    fn domain(&self) -> &Domain {
        self.field.domain()
    }

    fn image(&self, z: &[f64]) -> Option<Vec<f64>> {
        flow(self.field, z, self.tau, self.h).ok()
    }
}

/// `steps` iterates of a discrete map.
pub struct MapIterate<'a> {
    pub map: &'a dyn DiscreteMap,
    pub steps: usize,
}

impl StepMap for MapIterate<'_> {
    fn domain(&self) -> &Domain {
        self.map.domain()
    }

    fn image(&self, z: &[f64]) -> Option<Vec<f64>> {
        let mut z = z.to_vec();
        for _ in 0..self.steps {
            z = self.map.apply(&z);
            if z.iter().any(|v| !v.is_finite()) {
                return None;
            }
            self.map.domain().project(&mut z);
        }
        Some(z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionParams {
    /// Sup-norm inflation of each image box.
    pub rho: f64,
    /// Latin-hypercube interior samples per cell, on top of the corners and
    /// the centre.
    pub interior_samples: usize,
    pub seed: u64,
}

impl Default for TransitionParams {
    fn default() -> Self {
        Self {
            rho: 0.0,
            interior_samples: 0,
            seed: 0,
        }
    }
}

/// Inflation radius that makes the outer approximation sound for a field
/// with Lipschitz constant `lipschitz` when samples are at most `spacing`
/// apart in the sup norm: nearby points separate by at most `e^{Lτ}`.
pub fn sound_inflation(lipschitz: f64, tau: f64, spacing: f64) -> f64 {
    spacing * (lipschitz * tau).exp()
}

/// Outer approximation of a step map on the active cells of a grid.
/// Nodes are positions in `grid.active()`.
#[derive(Debug, Clone)]
pub struct TransitionGraph {
    grid: CubicalGrid,
    successors: Vec<Vec<u32>>,
    to_sink: Vec<bool>,
    params: TransitionParams,
}

fn sample_points(lo: &[f64], hi: &[f64], extra: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let d = lo.len();
    let mut pts = Vec::with_capacity((1 << d) + 1 + extra);
    pts.push(lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect());
    for mask in 0..(1u32 << d) {
        pts.push((0..d).map(|a| if mask & (1 << a) != 0 { hi[a] } else { lo[a] }).collect());
    }
    if extra > 0 {
        let strata: Vec<Vec<usize>> = (0..d)
            .map(|_| {
                let mut s: Vec<usize> = (0..extra).collect();
                s.shuffle(rng);
                s
            })
            .collect();
        for i in 0..extra {
            pts.push(
                (0..d)
                    .map(|a| {
                        let t = (strata[a][i] as f64 + rng.gen::<f64>()) / extra as f64;
                        lo[a] + t * (hi[a] - lo[a])
                    })
                    .collect(),
            );
        }
    }
    pts
}

impl TransitionGraph {
    pub fn build(
        map: &dyn StepMap,
        grid: &CubicalGrid,
        params: TransitionParams,
    ) -> Result<Self, ConleyError> {
        let domain = map.domain();
        if domain.grid_dim() != grid.dim() {
            return Err(ConleyError::Argument(format!(
                "field has {} grid coordinates, grid has {}",
                domain.grid_dim(),
                grid.dim()
            )));
        }
        if !(params.rho >= 0.0) {
            return Err(ConleyError::Argument("rho must be nonnegative".into()));
        }
        let shape = grid.shape();
        let d = grid.dim();
        let results: Vec<(Vec<u32>, bool)> = grid
            .active()
            .par_iter()
            .map(|&cell| {
                let (lo, hi) = grid.cell_box(cell);
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ (cell as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let mut img_lo = vec![f64::INFINITY; d];
                let mut img_hi = vec![f64::NEG_INFINITY; d];
                let mut sink = false;
                for p in sample_points(&lo, &hi, params.interior_samples, &mut rng) {
                    let mut z = domain.from_grid(&p);
                    domain.project(&mut z);
                    let Some(w) = map.image(&z) else {
                        sink = true;
                        continue;
                    };
                    let u = domain.to_grid(&w);
                    let outside = (0..d).any(|a| {
                        let tol = 1e-9 * (shape.upper[a] - shape.lower[a]);
                        !(u[a] >= shape.lower[a] - tol && u[a] <= shape.upper[a] + tol)
                    });
                    if outside {
                        sink = true;
                        continue;
                    }
                    for a in 0..d {
                        img_lo[a] = img_lo[a].min(u[a]);
                        img_hi[a] = img_hi[a].max(u[a]);
                    }
                }
                let mut succ = Vec::new();
                if img_lo[0].is_finite() {
                    for a in 0..d {
                        img_lo[a] = (img_lo[a] - params.rho).max(shape.lower[a]);
                        img_hi[a] = (img_hi[a] + params.rho).min(shape.upper[a]);
                    }
                    let ranges = shape
                        .covering_ranges(&img_lo, &img_hi)
                        .expect("clipped box lies in the bounding box");
                    let mut any = false;
                    for_each_in_ranges(&ranges, |m| {
                        any = true;
                        if let Some(node) = grid.node_of(shape.linear_index(m)) {
                            succ.push(node as u32);
                        }
                    });
                    if any && succ.is_empty() {
                        sink = true;
                    }
                }
                succ.sort_unstable();
                (succ, sink)
            })
            .collect();
        let (successors, to_sink) = results.into_iter().unzip();
        Ok(Self {
            grid: grid.clone(),
            successors,
            to_sink,
            params,
        })
    }

    /// Graph from explicit successor lists, mainly for tests.
    pub fn from_edges(grid: &CubicalGrid, successors: Vec<Vec<u32>>) -> Result<Self, ConleyError> {
        if successors.len() != grid.len() || successors.iter().flatten().any(|&s| s as usize >= grid.len()) {
            return Err(ConleyError::Argument("successor lists do not match the grid".into()));
        }
        let n = successors.len();
        let successors = successors
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            successors,
            to_sink: vec![false; n],
            params: TransitionParams::default(),
        })
    }

    pub fn grid(&self) -> &CubicalGrid {
        &self.grid
    }

    pub fn params(&self) -> &TransitionParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.successors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.successors.is_empty()
    }

    pub fn cell(&self, node: usize) -> CellId {
        self.grid.active()[node]
    }

    pub fn node(&self, cell: CellId) -> Option<usize> {
        self.grid.node_of(cell)
    }

    pub fn successors(&self, node: usize) -> &[u32] {
        &self.successors[node]
    }

    pub fn has_sink_edge(&self, node: usize) -> bool {
        self.to_sink[node]
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum::<usize>() + self.to_sink.iter().filter(|&&s| s).count()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.successors[a].binary_search(&(b as u32)).is_ok()
    }

    /// Predecessor lists.
    pub fn reverse(&self) -> Vec<Vec<u32>> {
        let mut pred = vec![Vec::new(); self.len()];
        for (a, succ) in self.successors.iter().enumerate() {
            for &b in succ {
                pred[b as usize].push(a as u32);
            }
        }
        pred
    }

    /// Nodes reachable from `start` by paths of length ≥ 0, restricted to
    /// nodes where `allowed` holds.
    pub fn forward_closure(&self, start: impl IntoIterator<Item = usize>, allowed: impl Fn(usize) -> bool) -> Vec<bool> {
        closure(&self.successors, start, allowed)
    }

    /// Edge list CSV `src,dst` by cell id; sink edges use `sink`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("src,dst\n");
        for (a, succ) in self.successors.iter().enumerate() {
            let ca = self.cell(a);
            for &b in succ {
                out.push_str(&format!("{ca},{}\n", self.cell(b as usize)));
            }
            if self.to_sink[a] {
                out.push_str(&format!("{ca},sink\n"));
            }
        }
        out
    }
}

pub(crate) fn closure(
    adj: &[Vec<u32>],
    start: impl IntoIterator<Item = usize>,
    allowed: impl Fn(usize) -> bool,
) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack: Vec<usize> = Vec::new();
    for s in start {
        if allowed(s) && !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    while let Some(a) = stack.pop() {
        for &b in &adj[a] {
            let b = b as usize;
            if !seen[b] && allowed(b) {
                seen[b] = true;
                stack.push(b);
            }
        }
    }
    seen
}

/// True iff at every resolution some cell containing `x` reaches some cell
/// containing `y` by a path with at least one edge. Points are in grid
/// coordinates. Agreement at every supplied resolution is evidence for a
/// chain at all scales, not a proof.
pub fn epsilon_tau_chain_exists(family: &[TransitionGraph], x: &[f64], y: &[f64]) -> bool {
    family.iter().all(|tg| {
        let xs: Vec<usize> = tg.grid.locate(x).into_iter().filter_map(|c| tg.node(c)).collect();
        let ys: Vec<usize> = tg.grid.locate(y).into_iter().filter_map(|c| tg.node(c)).collect();
        let first: Vec<usize> = xs.iter().flat_map(|&a| tg.successors(a).iter().map(|&b| b as usize)).collect();
        let reach = tg.forward_closure(first, |_| true);
        ys.iter().any(|&b| reach[b])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::testfields;

    fn graph(f: &dyn VectorField, grid: &CubicalGrid, tau: f64, rho: f64) -> TransitionGraph {
        TransitionGraph::build(&TimeMap::new(f, tau), grid, TransitionParams { rho, ..Default::default() }).unwrap()
    }

    #[test]
    fn zero_field_gives_only_self_loops() {
        let f = testfields::zero(2);
        let grid = testfields::square_grid(1.0, 6).unwrap();
        let tg = graph(&f, &grid, 0.5, 0.0);
        for a in 0..tg.len() {
            assert_eq!(tg.successors(a), &[a as u32]);
        }
    }

    #[test]
    fn decay_images_match_exact_map() {
        let f = testfields::linear_decay(1);
        let grid = testfields::interval_grid(-1.0, 1.0, 16).unwrap();
        let tg = graph(&f, &grid, 1.0, 1e-6);
        let s = (-1.0f64).exp();
        for a in 0..tg.len() {
            let (lo, hi) = grid.cell_box(tg.cell(a));
            let ranges = grid.shape().covering_ranges(&[lo[0] * s - 1e-6], &[hi[0] * s + 1e-6]).unwrap();
            let expected: Vec<u32> = (ranges[0].0..=ranges[0].1).collect();
            assert_eq!(tg.successors(a), expected.as_slice(), "cell {a}");
        }
    }

    #[test]
    fn leaving_the_box_goes_to_the_sink() {
        let f = testfields::uniform_drift(1);
        let grid = testfields::interval_grid(0.0, 1.0, 4).unwrap();
        let tg = graph(&f, &grid, 0.5, 0.0);
        assert!(tg.has_sink_edge(3));
        assert!(!tg.has_sink_edge(0));
        assert!(tg.to_csv().contains("3,sink"));
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = testfields::rotation();
        let grid = testfields::annulus_grid(0.5, 1.0, 12).unwrap();
        let p = TransitionParams {
            rho: 0.01,
            interior_samples: 4,
            seed: 9,
        };
        let a = TransitionGraph::build(&TimeMap::new(&f, 0.3), &grid, p.clone()).unwrap();
        let b = TransitionGraph::build(&TimeMap::new(&f, 0.3), &grid, p).unwrap();
        assert_eq!(a.successors, b.successors);
        assert_eq!(a.to_sink, b.to_sink);
    }

    #[test]
    fn chains_follow_the_flow() {
        let f = testfields::linear_decay(1);
        let family: Vec<TransitionGraph> = [8, 16, 32]
            .iter()
            .map(|&k| graph(&f, &testfields::interval_grid(-1.0, 1.0, k).unwrap(), 1.0, 1e-6))
            .collect();
        assert!(epsilon_tau_chain_exists(&family, &[0.9], &[0.01]));
        assert!(!epsilon_tau_chain_exists(&family, &[0.01], &[0.9]));
        assert!(epsilon_tau_chain_exists(&family, &[0.001], &[0.001]));
        let r = testfields::rotation();
        let fam: Vec<TransitionGraph> = [12, 24]
            .iter()
            .map(|&k| graph(&r, &testfields::annulus_grid(0.5, 1.0, k).unwrap(), 0.3, 0.01))
            .collect();
        assert!(epsilon_tau_chain_exists(&fam, &[0.75, 0.0], &[-0.75, 0.0]));
        assert!(epsilon_tau_chain_exists(&fam, &[-0.75, 0.0], &[0.75, 0.0]));
    }

    #[test]
    fn sound_inflation_grows_with_time() {
        assert_eq!(sound_inflation(0.0, 1.0, 0.1), 0.1);
        assert!(sound_inflation(1.0, 1.0, 0.1) > 0.27);
    }
}
