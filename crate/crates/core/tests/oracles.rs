mod common;

use conley_games::conley::{CubicalGrid, WholeBox};
use conley_games::homology::{homology, CubicalComplex};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn homology_matches_rational_rank(seed in any::<u64>()) {
        let r = common::check_complex(seed);
        prop_assert!(r.is_ok(), "{}", r.unwrap_err());
    }
}

#[test]
fn support_enumeration_matches_exact_grid_classification() {
    let counts = common::check_support_vs_grid(20, 8, 6).unwrap();
    assert!(counts.iter().any(|&c| c > 1));
}

#[test]
fn deficit_is_the_best_mixed_deviation_gain() {
    common::check_deficits(1000, 13).unwrap();
}

#[test]
fn circle_homology_is_invariant_under_subdivision() {
    for k in [4u32, 8, 16] {
        // square annulus outside the central [-1/2, 1/2]²
        let ring = |lo: &[f64], hi: &[f64]| (0..2).any(|a| lo[a] >= 0.5 || hi[a] <= -0.5);
        let grid = CubicalGrid::build(&[(-1.0, 1.0), (-1.0, 1.0)], &[k, k], &WholeBox).unwrap();
        let cells: Vec<_> = grid
            .active()
            .iter()
            .copied()
            .filter(|&c| {
                let (lo, hi) = grid.cell_box(c);
                ring(&lo, &hi)
            })
            .collect();
        let cx = CubicalComplex::from_grid_cells(&grid, cells);
        assert!(cx.relative_chain_complex(None).verify().is_ok());
        assert!(homology(&cx).betti_eq(&[1, 1]), "k = {k}");
    }
}
