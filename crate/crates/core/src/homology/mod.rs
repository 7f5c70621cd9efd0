//! Integer homology of cubical complexes and cubical pairs.
//!
//! Homology is computed in two phases. Free-face collapses and
//! coreductions shrink the complex without changing its homology and
//! without fill-in; whatever survives is handed to sparse unit-pivot
//! elimination and finally a dense Smith normal form.

mod cubical;
mod reduce;
pub mod snf;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cubical::{Cube, CubicalComplex, MAX_DIM};
pub use reduce::Strategy;

#[derive(Debug, Error)]
pub enum HomologyError {
    #[error("complex is not closed under faces")]
    NotClosed,
    #[error("boundary of boundary is nonzero")]
    BoundarySquared,
    #[error("second complex is not a subcomplex of the first")]
    NotSubcomplex,
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Free chain complex with one generator per cell; `boundary[i]` lists
/// `(face, coefficient)` pairs.
#[derive(Debug, Clone)]
pub struct ChainComplex {
    ambient: usize,
    dims: Vec<u8>,
    boundary: Vec<Vec<(u32, i64)>>,
}

impl ChainComplex {
    pub fn new(ambient: usize, dims: Vec<u8>, boundary: Vec<Vec<(u32, i64)>>) -> Self {
        assert_eq!(dims.len(), boundary.len());
        Self {
            ambient,
            dims,
            boundary,
        }
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dims(&self) -> &[u8] {
        &self.dims
    }

    pub fn boundary_of(&self, i: usize) -> &[(u32, i64)] {
        &self.boundary[i]
    }

    /// `∂∘∂ = 0` and faces one dimension down.
    pub fn verify(&self) -> Result<(), HomologyError> {
        let mut acc: HashMap<u32, i64> = HashMap::new();
        for (i, bd) in self.boundary.iter().enumerate() {
            acc.clear();
            for &(f, s) in bd {
                if self.dims[f as usize] + 1 != self.dims[i] {
                    return Err(HomologyError::Argument(format!(
                        "cell {i} has a face of the wrong dimension"
                    )));
                }
                for &(g, t) in &self.boundary[f as usize] {
                    *acc.entry(g).or_default() += s * t;
                }
            }
            if acc.values().any(|&v| v != 0) {
                return Err(HomologyError::BoundarySquared);
            }
        }
        Ok(())
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.dims
            .iter()
            .map(|&d| if d % 2 == 0 { 1 } else { -1 })
            .sum()
    }

    pub fn homology(&self, strategy: Strategy) -> BettiProfile {
        reduce::homology(self, strategy)
    }
}

/// Betti numbers and torsion coefficients, indexed by dimension
/// `0..=ambient_dim`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiProfile {
    pub betti: Vec<usize>,
    pub torsion: Vec<Vec<u64>>,
}

impl BettiProfile {
    pub fn zero(ambient: usize) -> Self {
        Self {
            betti: vec![0; ambient + 1],
            torsion: vec![Vec::new(); ambient + 1],
        }
    }

    pub fn get(&self, q: usize) -> usize {
        self.betti.get(q).copied().unwrap_or(0)
    }

    /// Betti numbers without trailing zeros.
    pub fn trimmed(&self) -> &[usize] {
        let end = self.betti.iter().rposition(|&b| b != 0).map_or(0, |p| p + 1);
        &self.betti[..end]
    }

    /// Compares Betti numbers up to trailing zeros.
    pub fn betti_eq(&self, expected: &[usize]) -> bool {
        let end = expected.iter().rposition(|&b| b != 0).map_or(0, |p| p + 1);
        self.trimmed() == &expected[..end]
    }

    pub fn is_trivial(&self) -> bool {
        self.betti.iter().all(|&b| b == 0) && self.torsion.iter().all(Vec::is_empty)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.betti
            .iter()
            .enumerate()
            .map(|(q, &b)| if q % 2 == 0 { b as i64 } else { -(b as i64) })
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("profile serializes")
    }
}

impl std::fmt::Display for BettiProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.betti.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(","))?;
        for (q, t) in self.torsion.iter().enumerate() {
            for d in t {
                write!(f, " + Z/{d} in degree {q}")?;
            }
        }
        Ok(())
    }
}

pub fn homology(cx: &CubicalComplex) -> BettiProfile {
    cx.relative_chain_complex(None).homology(Strategy::Reduce)
}

/// `H_*(n, l)`; `l` must be a subcomplex of `n`.
pub fn relative_homology(n: &CubicalComplex, l: &CubicalComplex) -> Result<BettiProfile, HomologyError> {
    if !l.is_subcomplex_of(n) {
        return Err(HomologyError::NotSubcomplex);
    }
    Ok(n.relative_chain_complex(Some(l)).homology(Strategy::Reduce))
}

/// Homology of the augmented complex; `b_0` drops by one.
pub fn reduced_homology(cx: &CubicalComplex) -> Result<BettiProfile, HomologyError> {
    if cx.is_empty() {
        return Err(HomologyError::Argument("reduced homology of an empty complex".into()));
    }
    let mut h = homology(cx);
    h.betti[0] -= 1;
    Ok(h)
}

pub fn euler_characteristic(b: &BettiProfile) -> i64 {
    b.euler_characteristic()
}

/// True when the profile is nonzero, which certifies a nonempty isolated
/// invariant set.
pub fn wazewski_check(b: &BettiProfile) -> bool {
    !b.is_trivial()
}
