use std::collections::HashSet;

use proptest::prelude::*;

use parabose::dynamics::{make_propagator, TimeSeries};
use parabose::frames::{build_h_lab, ModelParams, Sign};
use parabose::hilbert::{coherent_state, StateVector, C64, GROUND};
use parabose::partition::{basis_state, BasisMap, SubspaceLabel};
use parabose::states::{gp_coherent_numeric, husimi_q, parity_populations, CoherentParams};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lab_evolution_is_unitary(omega0 in -1.0f64..1.0, g in 0.0f64..0.5, t in 0.0f64..40.0) {
        let p = ModelParams::new(omega0, 1.0, g).unwrap();
        let prop = make_propagator(&build_h_lab(&p, 6, 6).unwrap()).unwrap();
        let psi = StateVector::composite_fock(1, 2, GROUND, 6, 6).unwrap();
        let out = prop.evolve(&psi, t).unwrap();
        prop_assert!((out.norm_sqr().sqrt() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sector_bases_never_collide(j_max in 0usize..8, k_max in 0usize..60, minus in any::<bool>()) {
        let sign = if minus { Sign::Minus } else { Sign::Plus };
        let mut seen = HashSet::new();
        for j in 0..=j_max {
            for k in 0..=k_max {
                prop_assert!(seen.insert(basis_state(SubspaceLabel::new(sign, j), k)));
            }
        }
    }

    #[test]
    fn basis_maps_round_trip(j in 0usize..10, kmax in 0usize..50, minus in any::<bool>()) {
        let label = SubspaceLabel::new(if minus { Sign::Minus } else { Sign::Plus }, j);
        let map = BasisMap::new(label, kmax);
        prop_assert_eq!(map.to_string().parse::<BasisMap>().unwrap(), map);
    }

    #[test]
    fn coherent_states_are_normalized(gt in 0.0f64..3.0, n in 0usize..4) {
        let params = CoherentParams::new(n, gt).unwrap();
        let psi = gp_coherent_numeric(params, params.min_dim().max(64)).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        let (even, odd) = parity_populations(&psi);
        prop_assert!((even + odd - 1.0).abs() < 1e-12);
    }

    #[test]
    fn husimi_is_nonnegative_and_peaks_at_alpha(re in -1.5f64..1.5, im in -1.5f64..1.5) {
        let rho = coherent_state(C64::new(re, im), 40).unwrap().to_density();
        let grid = husimi_q(&rho, 3.0, 61).unwrap();
        prop_assert!(grid.values().iter().all(|&q| q >= 0.0));
        let (x, y) = grid.peak();
        let step = grid.step();
        prop_assert!((x - re).abs() <= step && (y - im).abs() <= step);
    }

    #[test]
    fn series_csv_round_trips(values in proptest::collection::vec(-1e6f64..1e6, 2..20)) {
        let times: Vec<f64> = (0..values.len()).map(|i| i as f64 * 0.1).collect();
        let mut series = TimeSeries::new(times).unwrap();
        series.push_column("x", values).unwrap();
        let mut buf = Vec::new();
        series.write_csv(&mut buf).unwrap();
        prop_assert_eq!(TimeSeries::read_csv(buf.as_slice()).unwrap(), series);
    }
}
