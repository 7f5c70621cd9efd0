//! Combinatorial Conley theory on cubical grids: outer approximations of a
//! time-τ map, Morse graphs, attractor–repeller splits and index pairs.

mod attractor;
mod grid;
mod index_pair;
mod morse;
mod transition;

use thiserror::Error;

pub use attractor::{conley_index_of, sink_region_seeds, AttractorRepeller, EulerCheck, IndexTriple};
pub use grid::{
    children_of, for_each_in_ranges, BoxPredicate, CellId, CubicalGrid, GridShape, RegionTest,
    SimplexProduct, WholeBox,
};
pub use index_pair::{index_pair, scc_cells, IndexPairCells};
pub use morse::{attractor_cells, dual_repeller_cells, invariant_part, morse_graph, MorseGraph, Scc};
pub use transition::{
    epsilon_tau_chain_exists, sound_inflation, MapIterate, StepMap, TimeMap, TransitionGraph,
    TransitionParams,
};

#[derive(Debug, Error)]
pub enum ConleyError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("no active cells")]
    EmptyGrid,
    #[error("isolation failure: recurrent component {scc} lies in the collar")]
    Isolation { scc: usize },
    #[error("index pair check failed: {0}")]
    IndexPair(String),
}
