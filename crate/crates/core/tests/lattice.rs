use approx::assert_relative_eq;
use cqed_core::hilbert::{LatticeSpace, SiteSpace};
use cqed_core::jc_site::{dressed_state, hubbard_u, jc_hamiltonian, linewidth, polariton_energy, Branch, JcParams};
use cqed_core::jchm_lattice::{
    build_jchm, full_spectrum, max_excitations, nonlinearity_leading_order, parse_lattice, sector_spectrum, Boundary,
    LatticeParams,
};
use cqed_core::linalg::{hermitian_eigenvalues, symmetric_eigenvalues};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn manifold_block(p: &JcParams, n: usize) -> DMatrix<f64> {
    let c = (n as f64).sqrt() * p.g;
    DMatrix::from_row_slice(2, 2, &[n as f64 * p.omega_r, c, c, (n - 1) as f64 * p.omega_r + p.omega_q])
}

#[test]
fn resonant_dimer_single_excitation_lines() {
    // one excitation on two resonant sites: ω ± g ± J
    let site = JcParams::new(5.0, 5.0, 0.3).unwrap();
    let lattice = LatticeParams::chain(2, site, 0.1, Boundary::Open).unwrap();
    let space = LatticeSpace::uniform(2, 2).unwrap();
    let got = sector_spectrum(&lattice, &space, 1).unwrap();
    let mut want = Vec::new();
    for k in [-1.0f64, 1.0] {
        // photon-symmetric combinations split by J, then hybridize with the qubit
        let w = 5.0 + k * 0.1;
        let d = 0.5 * (w - 5.0);
        let r = (0.09 + d * d).sqrt();
        want.push(0.5 * (w + 5.0) - r);
        want.push(0.5 * (w + 5.0) + r);
    }
    want.sort_by(f64::total_cmp);
    for (a, b) in got.iter().zip(&want) {
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }
}

#[test]
fn lattice_text_round_trip() {
    let site = JcParams::new(5.0, 4.9, 0.2).unwrap();
    let lattice = LatticeParams::chain(3, site, 0.05, Boundary::Periodic).unwrap();
    let back = parse_lattice(&lattice.to_text()).unwrap();
    assert_eq!(back, lattice);
}

#[test]
fn leading_order_nonlinearity_decreases_with_sites() {
    let u: Vec<f64> = (1..8).map(|n| nonlinearity_leading_order(1.0, n)).collect();
    assert!(u.windows(2).all(|w| w[1] < w[0]));
    assert_relative_eq!(u[0], 2.0 - 2f64.sqrt(), epsilon = 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polariton_energies_diagonalize_each_manifold(w in 5.0f64..20.0, delta in -3.0f64..3.0, g in 0.01f64..2.0, n in 1usize..6) {
        let p = JcParams::new(w, w - delta, g).unwrap();
        let e = symmetric_eigenvalues(&manifold_block(&p, n));
        prop_assert!((polariton_energy(&p, n, Branch::Minus) - e[0]).abs() <= 1e-10 * e[0].abs());
        prop_assert!((polariton_energy(&p, n, Branch::Plus) - e[1]).abs() <= 1e-10 * e[1].abs());
    }

    #[test]
    fn dressed_states_are_eigenvectors(w in 5.0f64..20.0, delta in -3.0f64..3.0, g in 0.01f64..2.0, n in 1usize..5) {
        let p = JcParams::new(w, w - delta, g).unwrap();
        let space = SiteSpace::new(5).unwrap();
        let h = jc_hamiltonian(&p, &space, true);
        for branch in [Branch::Minus, Branch::Plus] {
            let v = dressed_state(&p, n, branch, &space).unwrap();
            let hv = h.mul_vec(&v).unwrap();
            let resid = (&hv - &v * num_complex::Complex64::new(polariton_energy(&p, n, branch), 0.0)).norm();
            prop_assert!(resid <= 1e-10 * w * n as f64);
            prop_assert!((v.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn detuning_sign_swaps_branches_in_u(delta in 0.1f64..5.0, g in 0.1f64..1.0) {
        // δ → −δ exchanges the roles of the two branches
        let a = JcParams::new(50.0, 50.0 - delta, g).unwrap();
        let b = JcParams::new(50.0, 50.0 + delta, g).unwrap();
        prop_assert!((hubbard_u(&a, Branch::Minus) + hubbard_u(&b, Branch::Plus)).abs() <= 1e-9);
    }

    #[test]
    fn linewidth_is_linear_in_rates(g1 in 0.0f64..1.0, gp in 0.0f64..1.0, gk in 0.0f64..1.0) {
        let total = linewidth(g1, gp, gk).unwrap();
        let parts = linewidth(g1, 0.0, 0.0).unwrap() + linewidth(0.0, gp, 0.0).unwrap() + linewidth(0.0, 0.0, gk).unwrap();
        prop_assert!((total - parts).abs() <= 1e-14);
    }

    #[test]
    fn sectors_partition_the_full_spectrum(j in -0.3f64..0.3, delta in -0.5f64..0.5) {
        let site = JcParams::new(3.0, 3.0 - delta, 0.4).unwrap();
        let lattice = LatticeParams::chain(2, site, j, Boundary::Open).unwrap();
        let space = LatticeSpace::uniform(2, 2).unwrap();
        let full = full_spectrum(&lattice, &space).unwrap();
        let mut joined: Vec<f64> =
            (0..=max_excitations(&space)).flat_map(|n| sector_spectrum(&lattice, &space, n).unwrap()).collect();
        joined.sort_by(f64::total_cmp);
        prop_assert_eq!(full.len(), joined.len());
        for (a, b) in full.iter().zip(&joined) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn relabeling_sites_keeps_the_spectrum(j in 0.01f64..0.3, w2 in 2.5f64..3.5, rot in 0usize..3) {
        let a = JcParams::new(3.0, 3.0, 0.4).unwrap();
        let b = JcParams::new(w2, 3.1, 0.2).unwrap();
        let lattice = LatticeParams::chain(3, a, j, Boundary::Open).unwrap();
        let mut sites = lattice.sites().to_vec();
        sites[1] = b;
        let lattice = LatticeParams::new(sites, lattice.edges().to_vec(), true).unwrap();
        let perm: Vec<usize> = (0..3).map(|s| (s + rot) % 3).collect();
        let space = LatticeSpace::uniform(3, 1).unwrap();
        let e0 = hermitian_eigenvalues(&build_jchm(&lattice, &space).unwrap().to_dense());
        let e1 = hermitian_eigenvalues(&build_jchm(&lattice.relabeled(&perm).unwrap(), &space).unwrap().to_dense());
        for (x, y) in e0.iter().zip(&e1) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }
}
