use ndarray::Array1;

use parabose::dynamics::{evolve_series, leakage_observables, make_propagator};
use parabose::frames::{
    build_eta, build_eta_fg_composite, build_h_cc, build_h_lab, build_h_pm, build_u_fg, FrameTag,
    ModelParams, Sign,
};
use parabose::hilbert::{eigh_hermitian, expectation, Operator, Space, StateVector, GROUND};
use parabose::partition::{fg_basis_vector, SubspaceLabel};
use parabose::states::{husimi_q, lab_reduced_first_mode};

fn lowest(op: &Operator, count: usize) -> Vec<f64> {
    let (vals, _) = eigh_hermitian(op.mat()).unwrap();
    vals.iter().take(count).copied().collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn low_spectra_agree_across_frames() {
    let p = ModelParams::new(0.35, 1.0, 0.3).unwrap();
    let lab_small = lowest(&build_h_lab(&p, 14, 14).unwrap(), 10);
    let lab = lowest(&build_h_lab(&p, 18, 18).unwrap(), 10);
    assert!(
        max_diff(&lab_small, &lab) < 1e-10,
        "lab spectrum not converged"
    );
    let cc = lowest(&build_h_cc(&p, 18, 18).unwrap(), 10);
    assert!(max_diff(&lab, &cc) < 1e-10);

    let p0 = ModelParams::new(0.0, 1.0, 0.3).unwrap();
    let lab0 = lowest(&build_h_lab(&p0, 18, 18).unwrap(), 10);
    let mut blocks: Vec<f64> = [Sign::Plus, Sign::Minus]
        .iter()
        .flat_map(|&s| lowest(&build_h_pm(s, &p0, 18, 18).unwrap(), 10))
        .collect();
    blocks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!(max_diff(&lab0, &blocks[..10]) < 1e-10);
}

#[test]
fn fulton_gouterman_map_is_unitary() {
    let u = build_u_fg(7, 5).unwrap();
    assert!(u.unitarity_residual() < 1e-14);
}

#[test]
fn conserved_quantities_stay_constant_in_time() {
    let p = ModelParams::new(0.35, 1.0, 0.3).unwrap();
    let d = 16;
    let space = Space::Composite(d, d);
    let psi0 = StateVector::composite_fock(1, 0, GROUND, d, d).unwrap();
    let times: Vec<f64> = (0..40).map(|i| 0.5 * i as f64).collect();

    let eta_lab = build_eta(FrameTag::Lab, d, d).unwrap().single().unwrap();
    let mut obs = vec![("eta".to_string(), eta_lab)];
    obs.extend(leakage_observables(space, 2).unwrap());
    let prop = make_propagator(&build_h_lab(&p, d, d).unwrap()).unwrap();
    let series = evolve_series(&prop, &psi0, &times, &obs).unwrap();
    let eta = series.column("eta").unwrap();
    assert!(eta.iter().all(|v| (v - eta[0]).abs() < 1e-10));

    let eta_cc = build_eta(FrameTag::CC, d, d).unwrap().single().unwrap();
    let prop = make_propagator(&build_h_cc(&p, d, d).unwrap()).unwrap();
    let series = evolve_series(&prop, &psi0, &times, &[("eta".to_string(), eta_cc)]).unwrap();
    let eta = series.column("eta").unwrap();
    assert!(eta.iter().all(|v| (v - eta[0]).abs() < 1e-10));

    let (plus, _) = build_eta(FrameTag::FG, d, d).unwrap().pair().unwrap();
    let prop = make_propagator(&build_h_pm(Sign::Plus, &p, d, d).unwrap()).unwrap();
    let mut amps = Array1::zeros(d * d);
    amps[3] = parabose::C64::new(0.6, 0.0);
    amps[d + 2] = parabose::C64::new(0.0, 0.8);
    let field = StateVector::new(amps, Space::TwoMode(d, d)).unwrap();
    let before = expectation(&plus, &field).unwrap().re;
    let after = expectation(&plus, &prop.evolve(&field, 7.0).unwrap())
        .unwrap()
        .re;
    assert!((before - after).abs() < 1e-10);
}

#[test]
fn fg_degeneracy_is_off_by_one_for_invariant_minus_bases() {
    let d = 24;
    let eta = build_eta_fg_composite(d, d).unwrap();
    for n in 0..=2 {
        for k in 0..=6 {
            let plus = fg_basis_vector(SubspaceLabel::plus(2 * n), k, d, d).unwrap();
            let minus = fg_basis_vector(SubspaceLabel::minus(2 * n + 1), k, d, d).unwrap();
            let a = expectation(&eta, &plus).unwrap().re;
            let b = expectation(&eta, &minus).unwrap().re;
            assert_eq!(a, -2.0 * n as f64);
            assert_eq!(b - a, -1.0);
        }
    }
}

#[test]
fn parallel_sampling_is_bit_identical_to_serial() {
    let p = ModelParams::new(0.0, 1.0, 0.1).unwrap();
    let d = 8;
    let prop = make_propagator(&build_h_lab(&p, d, d).unwrap()).unwrap();
    let psi0 = StateVector::composite_fock(0, 0, GROUND, d, d).unwrap();
    let obs = vec![(
        "sz".to_string(),
        parabose::frames::composite_sigma_z(d, d).unwrap(),
    )];
    let times: Vec<f64> = (0..64).map(|i| 0.37 * i as f64).collect();
    let pool = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
    };
    let parallel = pool(4).install(|| evolve_series(&prop, &psi0, &times, &obs).unwrap());
    let serial = pool(1).install(|| evolve_series(&prop, &psi0, &times, &obs).unwrap());
    assert_eq!(parallel, serial);
    for (i, &t) in times.iter().enumerate().step_by(9) {
        let single = evolve_series(&prop, &psi0, &[t], &obs).unwrap();
        assert_eq!(
            single.column("sz").unwrap()[0].to_bits(),
            serial.column("sz").unwrap()[i].to_bits()
        );
    }

    let rho = lab_reduced_first_mode(1.0, 16).unwrap();
    let a = pool(4).install(|| husimi_q(&rho, 3.0, 31).unwrap());
    let b = pool(1).install(|| husimi_q(&rho, 3.0, 31).unwrap());
    assert_eq!(a, b);
}
