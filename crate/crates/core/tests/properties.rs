mod common;

use conley_games::game::{MixedProfile, Player};
use conley_games::netopo::{eps_nash_region, ClassificationMode};
use conley_games::rational::{rat, Rational};
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(seed: u64) -> (ChaCha8Rng, usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
    (rng, m, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deficit_is_nonnegative_and_vanishes_exactly_at_nash(seed in any::<u64>()) {
        let (mut rng, m, n) = setup(seed);
        let g = common::random_game(&mut rng, m, n);
        let p = MixedProfile::new(common::random_mixed(&mut rng, m), common::random_mixed(&mut rng, n)).unwrap();
        let d = g.deficit(&p).unwrap();
        prop_assert!(d.total >= Rational::zero());
        prop_assert_eq!(d.total.is_zero(), g.is_epsilon_nash(&p, &Rational::zero()).unwrap());
    }

    #[test]
    fn epsilon_nash_is_monotone_in_epsilon(seed in any::<u64>(), a in 0i64..40, b in 0i64..40) {
        let (mut rng, m, n) = setup(seed);
        let g = common::random_game(&mut rng, m, n);
        let p = MixedProfile::new(common::random_mixed(&mut rng, m), common::random_mixed(&mut rng, n)).unwrap();
        let (lo, hi) = (rat(a.min(b), 4), rat(a.max(b), 4));
        if g.is_epsilon_nash(&p, &lo).unwrap() {
            prop_assert!(g.is_epsilon_nash(&p, &hi).unwrap());
        }
    }

    #[test]
    fn constant_shift_keeps_best_responses(seed in any::<u64>(), c in -20i64..20) {
        let (mut rng, m, n) = setup(seed);
        let g = common::random_game(&mut rng, m, n);
        let p = MixedProfile::new(common::random_mixed(&mut rng, m), common::random_mixed(&mut rng, n)).unwrap();
        let shift = rat(c, 3);
        for pl in Player::BOTH {
            let h = g.with_constant_added(pl, &shift);
            for q in Player::BOTH {
                prop_assert_eq!(h.best_responses(&p, q).unwrap(), g.best_responses(&p, q).unwrap());
            }
            prop_assert_eq!(&h.deficit(&p).unwrap().per_player, &g.deficit(&p).unwrap().per_player);
            prop_assert_eq!(h.best_response_value(&p, pl).unwrap(), g.best_response_value(&p, pl).unwrap() + &shift);
            prop_assert_eq!(h.expected_utility(&p, pl).unwrap(), g.expected_utility(&p, pl).unwrap() + &shift);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn member_cells_grow_with_epsilon(seed in any::<u64>(), a in 0i64..12, b in 0i64..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_game(&mut rng, 2, 3);
        let (lo, hi) = (rat(a.min(b), 4), rat(a.max(b), 4));
        let small = eps_nash_region(&g, &lo, 4, ClassificationMode::ExactPerCell).unwrap();
        let large = eps_nash_region(&g, &hi, 4, ClassificationMode::ExactPerCell).unwrap();
        for &c in small.members() {
            prop_assert!(large.is_member(c));
        }
    }
}
