//! Algebraic invariants as property tests.

use entprobe_core::dimer::*;
use entprobe_core::probe::{chi_spinor, effective_axis, spin_echo_sigma, spin_matrix_element_axis};
use entprobe_core::response::{pw_response, structure_factor, Regime, Transition};
use entprobe_core::spin_algebra::*;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn angles() -> impl Strategy<Value = Angles> {
    (0.0..std::f64::consts::PI, -4.0..4.0f64).prop_map(|(t, p)| Angles::new(t, p))
}

fn axis() -> impl Strategy<Value = Axis> { prop_oneof![Just(Axis::X), Just(Axis::Y), Just(Axis::Z)] }

fn unit_vec() -> impl Strategy<Value = Vec3> { (0.0..std::f64::consts::PI, -4.0..4.0f64).prop_map(|(t, p)| Vec3::from_spherical(t, p)) }

fn coeffs() -> impl Strategy<Value = CVec3> {
    prop::array::uniform6(-1.0..1.0f64)
        .prop_filter("nonzero", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|a| {
            let c = CVec3::new(C64::new(a[0], a[1]), C64::new(a[2], a[3]), C64::new(a[4], a[5]));
            c.scale_re(1.0 / c.norm_sqr().sqrt())
        })
}

fn spinor() -> impl Strategy<Value = Spinor2> {
    prop::array::uniform4(-1.0..1.0f64).prop_map(|a| Spinor2::new(C64::new(a[0], a[1]), C64::new(a[2], a[3])))
}

proptest! {
    #[test]
    fn sigma_element_is_hermitian(a in spinor(), b in spinor()) {
        let ab = sigma_element(a, b);
        let ba = sigma_element(b, a);
        prop_assert!(ab.max_abs_diff(ba.conj()) < 1e-14);
    }

    #[test]
    fn rotations_compose(a in angles(), b in angles(), g in angles()) {
        let r = rotation_matrix(g, b) * rotation_matrix(b, a);
        prop_assert!(r.max_abs_diff(&rotation_matrix(g, a)) < 1e-12);
        prop_assert!(rotation_matrix(b, a).is_unitary(1e-12));
    }

    #[test]
    fn rotation_maps_basis(a in angles(), b in angles(), nu in 0usize..2) {
        let r = rotation_matrix(b, a).0;
        let lhs = basis_spinor(b, nu);
        let rhs = basis_spinor(a, 0).scale(r[nu][0]) + basis_spinor(a, 1).scale(r[nu][1]);
        prop_assert!((lhs.up - rhs.up).norm() < 1e-12 && (lhs.down - rhs.down).norm() < 1e-12);
    }

    #[test]
    fn basis_spinors_are_polarized_along_axis(a in angles()) {
        let up = basis_spinor(a, 0);
        let dn = basis_spinor(a, 1);
        prop_assert!((pauli_expectation(up, up).unwrap().re() - a.unit()).norm() < 1e-12);
        prop_assert!((pauli_expectation(dn, dn).unwrap().re() + a.unit()).norm() < 1e-12);
        prop_assert!(up.inner(dn).norm() < 1e-14);
    }

    #[test]
    fn chi_expectation_is_effective_axis(t1 in -10.0..10.0f64, t2 in -10.0..10.0f64, alpha in axis()) {
        let (x1, x2) = (chi_spinor(t1, alpha), chi_spinor(t2, alpha));
        prop_assert!((pauli_expectation(x1, x1).unwrap().re() - effective_axis(alpha, t1)).norm() < 1e-12);
        prop_assert!((x1.inner(x2) - C64::new((0.5 * (t1 - t2)).cos(), 0.0)).norm() < 1e-12);
        prop_assert!(spin_matrix_element_axis(t1, t2, alpha).max_abs_diff(sigma_element(x1, x2)) < 1e-12);
    }

    #[test]
    fn spin_echo_operators_are_pauli_like(phi in -4.0..4.0f64, alpha in axis()) {
        let s = spin_echo_sigma(phi, alpha);
        for m in &s {
            prop_assert!(m.is_hermitian(1e-12));
            prop_assert!((*m * *m).max_abs_diff(&Mat2c::identity()) < 1e-12);
        }
        let i = C64::new(0.0, 1.0);
        prop_assert!((s[0] * s[1]).max_abs_diff(&s[2].scale(i)) < 1e-12);
    }

    #[test]
    fn purity_bounded_and_phase_invariant(c in coeffs(), g in -4.0..4.0f64) {
        let p = purity(c).unwrap();
        prop_assert!((-1e-14..=1.0 + 1e-12).contains(&p));
        let q = purity(c.scale(C64::from_polar(1.0, g))).unwrap();
        prop_assert!((p - q).abs() < 1e-12);
        prop_assert!((purity(canonicalize_phase(c)).unwrap() - p).abs() < 1e-12);
    }

    #[test]
    fn purity_equals_site_spin_expectations(c in coeffs()) {
        let lam = triplet_state(c).unwrap();
        let mut s = 0.0;
        for j in 0..2 {
            for a in Axis::ALL {
                let e = (lam.adjoint() * site_spin(j, a) * lam)[0];
                s += e.re * e.re;
            }
        }
        prop_assert!((2.0 * s - purity(c).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn real_coefficients_are_maximally_entangled(v in unit_vec(), g in -4.0..4.0f64) {
        let c = v.to_complex().scale(C64::from_polar(1.0, g));
        prop_assert!(purity(c).unwrap() < 1e-24);
    }

    #[test]
    fn thermal_weights_normalized(j in -2.0..2.0f64, t in 0.01..1000.0f64) {
        let (ps, pt) = thermal_weights(j, t).unwrap();
        prop_assert!((ps + 3.0 * pt - 1.0).abs() < 1e-14);
        prop_assert!(ps >= 0.0 && pt >= 0.0);
    }

    #[test]
    fn thermal_weights_match_gibbs_trace(j in -1.0..1.0f64, t in 1.0..100.0f64) {
        // diagonal of exp(−H/k_BT) in the eigenbasis, from the 4×4 Hamiltonian
        let h = heisenberg_hamiltonian(j);
        let e = |v: &State4| (v.adjoint() * h * v)[0].re;
        let ws = (-e(&singlet()) / (K_B * t)).exp();
        let wt = (-e(&triplet_basis(Axis::Z)) / (K_B * t)).exp();
        let (ps, pt) = thermal_weights(j, t).unwrap();
        prop_assert!((ps - ws / (ws + 3.0 * wt)).abs() < 1e-13);
        prop_assert!((pt - wt / (ws + 3.0 * wt)).abs() < 1e-13);
    }

    #[test]
    fn plane_wave_response_is_non_negative(
        k in unit_vec(), d in unit_vec(), c in coeffs(), th in -7.0..7.0f64, alpha in axis(), dd in 0.5..10.0f64
    ) {
        for tr in Transition::ALL {
            let regime = if tr == Transition::SingletToTriplet { Regime::ThermalTpos } else { Regime::PureT0 };
            let s = pw_response(k.scale(2.0), d.scale(dd), tr, regime, Some(c), th, alpha).unwrap();
            prop_assert!(s >= -1e-12);
        }
    }

    #[test]
    fn structure_factor_symmetric_under_pair_exchange(a in unit_vec(), b in unit_vec(), d in unit_vec()) {
        for tr in Transition::ALL {
            let f = structure_factor(a.scale(2.0), b.scale(1.5), d.scale(3.0), tr);
            let g = structure_factor(b.scale(1.5), a.scale(2.0), d.scale(3.0), tr);
            prop_assert!((f - g).abs() < 1e-13);
        }
    }
}

#[test]
fn eigensystem_is_orthonormal_and_exact() {
    let j = 0.37;
    let h = heisenberg_hamiltonian(j);
    let sys = dimer_eigensystem(j);
    for (i, (_, v, e)) in sys.iter().enumerate() {
        assert!((h * v - v * C64::new(*e, 0.0)).norm() < 1e-14);
        for (k, (_, w, _)) in sys.iter().enumerate() {
            let o = (v.adjoint() * w)[0];
            let want = if i == k { 1.0 } else { 0.0 };
            assert!((o - want).norm() < 1e-14);
        }
    }
}

#[test]
fn triplets_follow_from_site_spin_on_singlet() {
    for a in Axis::ALL {
        for j in 0..2 {
            let sign = if j == 0 { 2.0 } else { -2.0 };
            let v = site_spin(j, a) * singlet() * C64::new(sign, 0.0);
            assert!((v - triplet_basis(a)).norm() < 1e-14);
        }
    }
}
