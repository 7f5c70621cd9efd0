use std::collections::BTreeSet;

use serde::Serialize;

use super::morse::{invariant_part, to_cells};
use super::{dual_repeller_cells, index_pair, CellId, ConleyError, MorseGraph, TransitionGraph};
use crate::homology::BettiProfile;

/// Attractor `A`, dual repeller `R` and the full invariant set `X` of a
/// transition graph, all as invariant cell sets.
#[derive(Debug, Clone)]
pub struct AttractorRepeller {
    pub attractor: BTreeSet<CellId>,
    pub repeller: BTreeSet<CellId>,
    pub invariant: BTreeSet<CellId>,
}

/// Conley indices of the three sets. An index that could not be isolated
/// at this resolution is kept as its error.
#[derive(Debug)]
pub struct IndexTriple {
    pub attractor: Result<BettiProfile, ConleyError>,
    pub repeller: Result<BettiProfile, ConleyError>,
    pub invariant: Result<BettiProfile, ConleyError>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EulerCheck {
    pub chi_attractor: i64,
    pub chi_repeller: i64,
    pub chi_invariant: i64,
    pub additive: bool,
    /// `false` only when the attractor and invariant-set profiles differ
    /// while the repeller is empty.
    pub repeller_consistent: bool,
}

impl AttractorRepeller {
    /// `A = Inv(forward closure of the seed SCCs)`, `R = Inv(cells \ closure)`,
    /// `X = Inv(all cells)`.
    pub fn new(tg: &TransitionGraph, mg: &MorseGraph, seeds: &[usize]) -> Result<Self, ConleyError> {
        let mut start = Vec::new();
        for &s in seeds {
            let scc = mg
                .sccs()
                .get(s)
                .ok_or_else(|| ConleyError::Argument(format!("no SCC {s}")))?;
            if !scc.recurrent {
                return Err(ConleyError::Argument(format!("SCC {s} is not recurrent")));
            }
            start.extend(scc.nodes.iter().copied());
        }
        if start.is_empty() {
            return Err(ConleyError::Argument("no seed SCCs".into()));
        }
        let closure = to_cells(tg, &tg.forward_closure(start, |_| true));
        let all: BTreeSet<CellId> = tg.grid().active().iter().copied().collect();
        Ok(Self {
            attractor: invariant_part(tg, &closure)?,
            repeller: dual_repeller_cells(tg, &closure)?,
            invariant: invariant_part(tg, &all)?,
        })
    }

    pub fn indices(&self, tg: &TransitionGraph, mg: &MorseGraph) -> IndexTriple {
        IndexTriple {
            attractor: conley_index_of(tg, mg, &self.attractor),
            repeller: conley_index_of(tg, mg, &self.repeller),
            invariant: conley_index_of(tg, mg, &self.invariant),
        }
    }
}

impl IndexTriple {
    /// `None` when one of the indices is unavailable.
    pub fn euler_check(&self, repeller_empty: bool) -> Option<EulerCheck> {
        let (a, r, x) = match (&self.attractor, &self.repeller, &self.invariant) {
            (Ok(a), Ok(r), Ok(x)) => (a, r, x),
            _ => return None,
        };
        let (ca, cr, cx) = (a.euler_characteristic(), r.euler_characteristic(), x.euler_characteristic());
        Some(EulerCheck {
            chi_attractor: ca,
            chi_repeller: cr,
            chi_invariant: cx,
            additive: ca + cr == cx,
            repeller_consistent: a.trimmed() == x.trimmed() || !repeller_empty,
        })
    }
}

/// SCC ids of the recurrent regions that reach no recurrent SCC outside
/// themselves; the natural seeds of the minimal attractor.
pub fn sink_region_seeds(tg: &TransitionGraph, mg: &MorseGraph) -> Vec<usize> {
    let mut out = Vec::new();
    for region in mg.recurrent_regions(tg) {
        let reach = mg.reach_set(&region);
        let escapes = mg.recurrent().any(|s| reach[s.id] && !region.contains(&s.id));
        if !escapes {
            out.extend(region);
        }
    }
    out.sort_unstable();
    out
}

/// Conley index of an invariant cell set; the empty set has the zero index.
pub fn conley_index_of(tg: &TransitionGraph, mg: &MorseGraph, s: &BTreeSet<CellId>) -> Result<BettiProfile, ConleyError> {
    if s.is_empty() {
        return Ok(BettiProfile::zero(tg.grid().dim()));
    }
    index_pair(tg, mg, s)?.conley_index(tg)
}
