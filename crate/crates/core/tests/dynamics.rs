use cqed_core::hilbert::{expectation, DensityMatrix, LatticeSpace, SiteSpace};
use cqed_core::jc_site::{jc_hamiltonian, polariton_energy, Branch, JcParams};
use cqed_core::lindblad::{
    build_liouvillian, driven_cavity_amplitude, evolve, g2_zero, steady_state_null_space, DissipationRates, DriveSpec,
};
use cqed_core::meanfield::{
    mf_energy, minimize_order_parameter, mott_window, GrandCanonicalParams, MinimizeOptions,
};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn site_liouvillian(
    p: &JcParams,
    n_max: usize,
    rates: &DissipationRates,
    xi: f64,
    omega_d: f64,
) -> (cqed_core::lindblad::Liouvillian, LatticeSpace) {
    let space = LatticeSpace::uniform(1, n_max).unwrap();
    let h = jc_hamiltonian(p, &space.sites()[0], true);
    let drive = DriveSpec { xi, omega_d, driven_sites: vec![0] };
    (build_liouvillian(&h, rates, Some(&drive), &space).unwrap(), space)
}

#[test]
fn weak_resonant_drive_blockades_the_second_photon() {
    let p = JcParams::new(50.0, 50.0, 1.0).unwrap();
    let rates = DissipationRates::uniform(0.01, 0.0, 0.01);
    let (l, space) = site_liouvillian(&p, 5, &rates, 0.001, polariton_energy(&p, 1, Branch::Minus));
    let ss = steady_state_null_space(&l).unwrap();
    assert!(g2_zero(&ss.rho, 0, &space).unwrap() < 0.05);
}

#[test]
fn undriven_qubit_decays_exponentially() {
    // |0,e⟩ with g = 0 decays at γ₁
    let p = JcParams::new(5.0, 6.0, 0.0).unwrap();
    let rates = DissipationRates::uniform(0.2, 0.0, 0.1);
    let (l, space) = site_liouvillian(&p, 2, &rates, 0.0, 5.0);
    let sp = space.sites()[0].clone();
    let rho0 = DensityMatrix::basis(l.dim(), sp.index(0, true));
    let traj = evolve(&l, &rho0, 5.0, &Default::default(), 5).unwrap();
    let sm = space.qubit_lower(0).unwrap();
    let pe = &sm.adjoint() * &sm;
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let got = expectation(&pe, rho).unwrap().re;
        assert!((got - (-0.2 * t).exp()).abs() < 1e-8, "t = {t}: {got}");
    }
}

#[test]
fn mott_windows_tile_the_chemical_potential_axis() {
    let p = JcParams::new(50.0, 49.5, 1.0).unwrap();
    for n in 1..6 {
        assert!((mott_window(&p, n).mu_hi - mott_window(&p, n + 1).mu_lo).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steady_state_is_a_physical_state(
        delta in -1.0f64..1.0, g in 0.0f64..1.0, xi in 0.0f64..0.2, detune in -1.5f64..1.5,
        g1 in 0.01f64..0.2, gphi in 0.0f64..0.1, gk in 0.01f64..0.2,
    ) {
        let p = JcParams::new(10.0, 10.0 - delta, g).unwrap();
        let rates = DissipationRates::uniform(g1, gphi, gk);
        let (l, _) = site_liouvillian(&p, 4, &rates, xi, 10.0 + detune);
        let ss = steady_state_null_space(&l).unwrap();
        prop_assert!(ss.health.is_valid(), "{:?}", ss.health);
        prop_assert!(ss.relative_residual < 1e-10);
    }

    #[test]
    fn evolution_preserves_trace_and_positivity(
        g in 0.0f64..1.0, xi in 0.0f64..0.3, detune in -1.0f64..1.0, g1 in 0.0f64..0.3, gk in 0.0f64..0.3, start in 0usize..8,
    ) {
        let p = JcParams::new(3.0, 3.0, g).unwrap();
        let rates = DissipationRates::uniform(g1, 0.05, gk);
        let (l, _) = site_liouvillian(&p, 3, &rates, xi, 3.0 + detune);
        let traj = evolve(&l, &DensityMatrix::basis(l.dim(), start), 4.0, &Default::default(), 4).unwrap();
        prop_assert!(traj.max_trace_drift < 1e-8);
        prop_assert!(traj.min_eigenvalue > -1e-8);
        for s in &traj.states {
            prop_assert!(s.health().hermiticity_error < 1e-10);
        }
    }

    #[test]
    fn uncoupled_cavity_is_a_coherent_state(xi in 0.001f64..0.02, detune in -0.3f64..0.3, kappa in 0.1f64..0.5) {
        let p = JcParams::new(4.0, 9.0, 0.0).unwrap();
        let rates = DissipationRates::uniform(0.1, 0.0, kappa);
        let (l, space) = site_liouvillian(&p, 10, &rates, xi, 4.0 - detune);
        let ss = steady_state_null_space(&l).unwrap();
        let a = expectation(&space.photon_lower(0).unwrap(), &ss.rho).unwrap();
        let want = driven_cavity_amplitude(xi, detune, kappa);
        prop_assert!((a - want).norm() < 1e-9);
        let alpha = -C64::new(xi, 0.0) / C64::new(detune, -0.5 * kappa);
        prop_assert!((want - alpha).norm() < 1e-15);
    }

    #[test]
    fn minimum_never_exceeds_the_unordered_energy(mu_off in -1.5f64..0.0, zj in 0.0f64..0.5, delta in -1.0f64..1.0) {
        let site = JcParams::new(50.0, 50.0 - delta, 1.0).unwrap();
        let p = GrandCanonicalParams { site, mu: 50.0 + mu_off, zj };
        let space = SiteSpace::new(8).unwrap();
        if let Ok(gs) = minimize_order_parameter(&p, &space, &MinimizeOptions::for_cutoff(8)) {
            prop_assert!(gs.energy <= mf_energy(&p, 0.0, &space) + 1e-12);
            prop_assert!(gs.n_polariton >= -1e-12);
        }
    }

    #[test]
    fn zero_hopping_fills_the_mott_window(n in 1usize..4, frac in 0.05f64..0.95, delta in -1.0f64..1.0) {
        let site = JcParams::new(50.0, 50.0 - delta, 1.0).unwrap();
        let w = mott_window(&site, n);
        let p = GrandCanonicalParams { site, mu: w.mu_lo + frac * w.width(), zj: 0.0 };
        let space = SiteSpace::new(8).unwrap();
        let gs = minimize_order_parameter(&p, &space, &MinimizeOptions::for_cutoff(8)).unwrap();
        prop_assert!((gs.n_polariton - n as f64).abs() < 1e-9);
        prop_assert!(gs.order.psi.norm() < 1e-6);
    }
}
