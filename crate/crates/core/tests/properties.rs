use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use steerqkd::keyrates::{
    binary_entropy, eve_info_from_f3, rate_on_werner_line, RateVariant, SQRT3,
};
use steerqkd::noise::{lossy_povm, BinaryPovm};
use steerqkd::quantum::{Axis, Observable};
use steerqkd::sampling::{random_density, random_dichotomic};
use steerqkd::steering::{
    bell_diagonal_correlators, correlation_matrix, symmetrize, symmetrize_to_bell_diagonal, BellDiagonalState,
};
use steerqkd::thresholds::grid;

fn simplex() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(0.0f64..1.0).prop_filter_map("non-zero weights", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-6).then(|| w.map(|x| x / s))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn binary_entropy_is_symmetric_and_bounded(x in 0.0f64..=1.0) {
        let h = binary_entropy(x).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert!((h - binary_entropy(1.0 - x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn eve_information_decreases_with_violation(a in 0.0f64..SQRT3, b in 0.0f64..SQRT3) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (e_lo, e_hi) = (eve_info_from_f3(lo).unwrap(), eve_info_from_f3(hi).unwrap());
        prop_assert!(e_hi <= e_lo + 1e-15);
        prop_assert!((0.0..=1.0).contains(&e_hi));
    }

    #[test]
    fn security_models_are_ordered(q in 0.0f64..=0.5) {
        let r = |v| rate_on_werner_line(v, q).unwrap().rate;
        let (dd, one, di) = (r(RateVariant::DeviceDependent), r(RateVariant::OneSidedDi), r(RateVariant::DiChsh));
        prop_assert!(dd >= one - 1e-12 && one >= di - 1e-12, "q={q}: {dd} {one} {di}");
    }

    #[test]
    fn bell_weights_round_trip_through_correlators(lam in simplex()) {
        let s = BellDiagonalState::new(lam).unwrap();
        let back = BellDiagonalState::from_correlators(bell_diagonal_correlators(&s)).unwrap();
        for (a, b) in s.lam().iter().zip(back.lam()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_singular_values_are_at_most_one(seed in any::<u64>()) {
        let rho = random_density(4, &mut ChaCha8Rng::seed_from_u64(seed));
        let t = correlation_matrix(&rho).unwrap();
        prop_assert!(t.singular_values().iter().all(|&s| s <= 1.0 + 1e-9));
    }

    #[test]
    fn symmetrization_keeps_matched_correlators(seed in any::<u64>()) {
        let rho = random_density(4, &mut ChaCha8Rng::seed_from_u64(seed));
        let before = correlation_matrix(&rho).unwrap().diagonal();
        let after = correlation_matrix(&symmetrize(&rho).unwrap()).unwrap().diagonal();
        for (a, b) in before.iter().zip(after) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let red = symmetrize_to_bell_diagonal(&rho).unwrap();
        prop_assert!(red.state.is_canonical());
        prop_assert!(red.residual <= 1e-9);
    }

    #[test]
    fn lossy_measurements_stay_valid(seed in any::<u64>(), eta in 0.0f64..=1.0) {
        let obs = random_dichotomic(2, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(lossy_povm(&BinaryPovm::projective(&obs), eta).is_ok());
        prop_assert!(lossy_povm(&BinaryPovm::projective(&Observable::pauli(Axis::Z)), eta).is_ok());
    }

    #[test]
    fn grids_are_inclusive(start in 0.0f64..1.0, steps in 1usize..500, step in 1e-4f64..1e-2) {
        let stop = start + steps as f64 * step;
        let g = grid(start, stop, step).unwrap();
        prop_assert_eq!(g.len(), steps + 1);
        prop_assert!((g[steps] - stop).abs() < 1e-9);
    }
}
