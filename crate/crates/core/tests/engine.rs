//! Wave-packet engine: kernel equivalence, normalization, limits, grids.

mod common;

use common::*;
use entprobe_core::dimer::{thermal_weights, TargetKind, TargetState};
use entprobe_core::engine::*;
use entprobe_core::probe::{gaussian_amplitude, time_integrated_flux, FluxConvention, ProbeConfig, NEUTRON_E_U};
use entprobe_core::quadrature::{gauss_legendre, QuadratureSpec};
use entprobe_core::response::{pw_response, Channel, Regime, Transition};
use entprobe_core::spin_algebra::{Axis, CVec3, Vec3};
use entprobe_core::Error;
use gauss_quad::hermite::GaussHermite;
use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

fn probe(delta: f64, xi: Vec3) -> ProbeConfig {
    ProbeConfig { k0: Vec3::new(0.0, 0.0, 1.5), delta, xi, phi: 0.0, alpha: Axis::X }
}

fn coarse_only() -> QuadratureSpec {
    QuadratureSpec { radial_nodes: 4, polar_nodes: 4, azimuthal_nodes: 6, rel_tol: 1e9, ..Default::default() }
}

fn upup() -> CVec3 {
    CVec3::new(C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, -FRAC_1_SQRT_2), C64::new(0.0, 0.0))
}

fn triplet(c: CVec3, d: Vec3) -> TargetState { TargetState { d, j: 0.25, kind: TargetKind::Triplet { c } } }

#[test]
fn kernels_agree_on_identical_nodes() {
    let mut r = rng(31);
    let p = ProbeConfig { k0: Vec3::new(0.2, -0.1, 1.5), delta: 20.0, xi: Vec3::new(0.0, 3.0, 1.0), phi: 0.4, alpha: Axis::Y };
    let dir = Vec3::from_spherical(1.1, 2.0);
    for (ch, mut target) in table_rows(&mut r) {
        target.d = Vec3::new(0.5, 4.0, -1.0);
        let run = |kernel| {
            let o = EngineOptions { quadrature: coarse_only(), flux: FluxConvention::Calibrated, kernel };
            dcs_direction(&p, &target, dir, ch, &o).unwrap().value
        };
        let (a, c, o) = (run(Kernel::Amplitude), run(Kernel::ClosedForm), run(Kernel::Oracle));
        assert!((a - c).abs() < 1e-11 * a.abs() && (a - o).abs() < 1e-11 * a.abs(), "{ch}: {a} {c} {o}");
    }
}

#[test]
fn polarization_kernels_agree() {
    let mut r = rng(32);
    let p = ProbeConfig { k0: Vec3::new(0.0, 0.0, 1.5), delta: 20.0, xi: Vec3::new(0.0, 4.0, 0.0), phi: 0.2, alpha: Axis::X };
    let dir = Vec3::from_spherical(0.9, 1.3);
    for (ch, mut target) in table_rows(&mut r) {
        target.d = Vec3::new(0.0, 4.0, 0.0);
        for echo in [None, Some(0.7)] {
            let run = |kernel| {
                let o = EngineOptions { quadrature: coarse_only(), flux: FluxConvention::Calibrated, kernel };
                polarization_direction(&p, &target, dir, &[ch], &o, echo).unwrap()
            };
            let (a, o) = (run(Kernel::Amplitude), run(Kernel::Oracle));
            assert!((a.vector - o.vector).norm() < 1e-10, "{ch}: {:?} vs {:?}", a.vector, o.vector);
            assert!(a.vector.norm() <= 1.0 + 1e-9);
        }
    }
}

#[test]
fn packet_amplitude_is_normalized() {
    let gh = GaussHermite::new(20).unwrap();
    let p = probe(7.0, Vec3::zero());
    let s = 2f64.sqrt() / p.delta;
    let nodes = gh.as_node_weight_pairs().to_vec();
    let mut total = 0.0f64;
    for &(x, wx) in &nodes {
        for &(y, wy) in &nodes {
            for &(z, wz) in &nodes {
                let q = Vec3::new(x, y, z);
                let g = gaussian_amplitude(p.k0 + q.scale(s), &p);
                total += wx * wy * wz * g * g * q.norm_sqr().exp() * s.powi(3);
            }
        }
    }
    assert!((total - 1.0).abs() < 1e-12, "{total}");
}

/// Time-integrated current through the packet's waist plane, on axis, from
/// the analytic free evolution of the Gaussian packet.
fn on_axis_fluence(k0: f64, delta: f64) -> f64 {
    let a = delta * delta / 4.0;
    let v = 2.0 * NEUTRON_E_U * k0;
    let norm1 = (2.0 / (PI * delta * delta)).sqrt();
    // |ψ_x(0,t)|² |ψ_y(0,t)|² |ψ_z(0,t)|² with A = a + i E_U t
    let integrand = |t: f64| {
        let big_a = C64::new(a, NEUTRON_E_U * t);
        let u = -v * t;
        let transverse = norm1 * a / big_a.norm();
        let psi_z = C64::new(a, 0.0) / big_a;
        let dens_z = norm1 * psi_z.norm() * (-(u * u / (4.0 * big_a)).re * 2.0).exp();
        let current = 2.0 * NEUTRON_E_U * (k0 - (C64::new(u, 0.0) / (2.0 * big_a)).im);
        transverse * transverse * dens_z * current
    };
    let span = 12.0 * delta / v;
    gauss_legendre(400, -span, span).unwrap().iter().map(|&(t, w)| w * integrand(t)).sum()
}

#[test]
fn calibrated_flux_is_the_on_axis_fluence() {
    for (k0, delta) in [(1.5, 200.0), (3.0, 500.0)] {
        let p = ProbeConfig { k0: Vec3::new(0.0, 0.0, k0), ..probe(delta, Vec3::zero()) };
        let fluence = on_axis_fluence(k0, delta);
        let cal = time_integrated_flux(&p, FluxConvention::Calibrated);
        assert!((fluence / cal - 1.0).abs() < 1e-3, "{fluence} vs {cal}");
        assert!((time_integrated_flux(&p, FluxConvention::Averaged) * 2.0 - cal).abs() < 1e-15);
    }
}

#[test]
fn thermal_rows_are_population_weighted_sums_of_pure_triplets() {
    let p = probe(10.0, Vec3::new(0.0, 12.0, 0.0));
    let d = Vec3::new(0.0, 10.0, 0.0);
    let o = EngineOptions::default();
    let dir = Vec3::from_spherical(1.3, 0.6);
    let thermal = TargetState { d, j: 0.25, kind: TargetKind::Thermal { t: 10.0 } };
    let (_, pt) = thermal_weights(0.25, 10.0).unwrap();
    for tr in [Transition::TripletToSinglet, Transition::TripletToTriplet] {
        let th = dcs_direction(&p, &thermal, dir, Channel::new(tr, Regime::ThermalTpos), &o).unwrap().value;
        let pure: f64 = Axis::ALL
            .iter()
            .map(|&a| {
                let c = a.unit().to_complex();
                dcs_direction(&p, &triplet(c, d), dir, Channel::new(tr, Regime::PureT0), &o).unwrap().value
            })
            .sum();
        assert!((th - pt * pure).abs() < 1e-12 * th, "{tr:?}: {th} vs {}", pt * pure);
    }
    let (parts, total) = dcs_total(&p, &thermal, dir, &o).unwrap();
    assert_eq!(parts.len(), 3);
    assert!((parts.iter().map(|(_, e)| e.value).sum::<f64>() - total).abs() < 1e-15 * total);
}

#[test]
fn separation_beyond_entanglement_length_attenuates() {
    let (xi, delta) = (80.0, 20.0);
    let p = probe(delta, Vec3::new(0.0, xi, 0.0));
    let o = EngineOptions { flux: FluxConvention::Reference { width: xi }, ..Default::default() };
    let ch = Channel::new(Transition::TripletToSinglet, Regime::ThermalTpos);
    let dir = Vec3::from_spherical(1.2, 0.7);
    let at = |d: f64| {
        let t = TargetState { d: Vec3::new(0.0, d, 0.0), j: 0.25, kind: TargetKind::Thermal { t: 10.0 } };
        dcs_direction(&p, &t, dir, ch, &o).unwrap().value
    };
    let ratio = at(xi) / at(xi + 5.0 * delta);
    assert!(ratio > 10.0, "ratio {ratio}");
}

#[test]
fn maximal_entanglement_is_insensitive_to_entanglement_length() {
    let c = Vec3::new(0.3, -0.5, 0.8).normalized().unwrap().to_complex();
    let target = triplet(c, Vec3::new(0.0, 9.0, 0.0));
    let o = EngineOptions::default();
    let ch = Channel::new(Transition::TripletToSinglet, Regime::PureT0);
    let dir = Vec3::from_spherical(1.4, 0.9);
    let tilt = Vec3::new(0.0, 1.0, 1.0).normalized().unwrap();
    let vals: Vec<f64> = [0.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|&x| dcs_direction(&probe(1000.0, tilt.scale(x)), &target, dir, ch, &o).unwrap().value)
        .collect();
    let (lo, hi) = vals.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi - lo < 1e-3 * hi, "{vals:?}");
}

#[test]
fn entangled_target_dcs_tracks_transverse_coefficient_weight() {
    // Δ < ξ ≈ |d⊥|: real c follows 1 − |κ̃0·c|², a product state does not
    let p = probe(20.0, Vec3::new(0.0, 80.0, 0.0));
    let d = Vec3::new(0.0, 80.0, 0.0);
    let o = EngineOptions { flux: FluxConvention::Reference { width: 80.0 }, ..Default::default() };
    let ch = Channel::new(Transition::TripletToSinglet, Regime::PureT0);
    let Shell::Open(kp) = energy_shell(1.5, 0.25, Transition::TripletToSinglet) else { panic!("closed") };
    let spread = |c: CVec3| {
        let ratios: Vec<f64> = (0..12)
            .map(|i| {
                let dir = Vec3::from_spherical(0.5 + 0.5 * (i % 6) as f64, if i < 6 { 0.0 } else { PI / 2.0 });
                let kt = (p.k0 - dir.scale(kp)).normalized().unwrap();
                let v = dcs_direction(&p, &triplet(c, d), dir, ch, &o).unwrap().value;
                v / (1.0 - c.dot_real(kt).norm_sqr())
            })
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        (hi - lo) / hi
    };
    let real = spread(Vec3::ex().to_complex());
    let product = spread(upup());
    assert!(real < 0.03, "real c spread {real}");
    assert!(product > 0.5, "product state spread {product}, real {real}");
}

#[test]
fn figure4_map_symmetry() {
    // d ∥ ŷ: S^pw(κ_y, Θ) = S^pw(−κ_y, −Θ) for |↑↑⟩ → singlet
    let d = Vec3::new(0.0, 9.0, 0.0);
    for i in 0..20 {
        let (ky, kz, th) = (-3.0 + 0.31 * i as f64, 1.0 - 0.07 * i as f64, 0.4 * i as f64);
        let s = |ky: f64, th: f64| {
            pw_response(Vec3::new(0.0, ky, kz), d, Transition::TripletToSinglet, Regime::PureT0, Some(upup()), th, Axis::X).unwrap()
        };
        assert!((s(ky, th) - s(-ky, -th)).abs() < 1e-13);
    }
}

#[test]
fn shell_closure_and_forward_cone() {
    let p = ProbeConfig { k0: Vec3::new(0.0, 0.0, 0.2), ..probe(200.0, Vec3::zero()) };
    let target = TargetState { d: Vec3::ey(), j: -0.25, kind: TargetKind::Singlet };
    let ch = Channel::new(Transition::SingletToTriplet, Regime::PureT0);
    let e = dcs_direction(&p, &target, Vec3::ex(), ch, &EngineOptions::default()).unwrap();
    assert!(e.closed && e.value == 0.0);
    assert_eq!(pw_limit_dcs(&p, &target, Vec3::ex(), ch).unwrap(), 0.0);
    let err = dcs_direction(&p, &target, Vec3::new(0.0, 0.01, 1.0), ch, &EngineOptions::default());
    assert!(matches!(err, Err(Error::ForwardCone { .. })));
}

#[test]
fn unresolved_quadrature_reports_both_estimates() {
    let p = probe(20.0, Vec3::new(0.0, 80.0, 0.0));
    let q = QuadratureSpec { radial_nodes: 8, polar_nodes: 8, azimuthal_nodes: 8, ..Default::default() };
    let o = EngineOptions { quadrature: q, ..Default::default() };
    let r = dcs_direction(&p, &triplet(upup(), Vec3::new(0.0, 80.0, 0.0)), Vec3::from_spherical(1.0, 1.0), Channel::new(Transition::TripletToSinglet, Regime::PureT0), &o);
    match r {
        Err(Error::Convergence { coarse, fine }) => assert!(coarse != fine),
        other => panic!("expected a convergence failure, got {other:?}"),
    }
}

#[test]
fn grid_matches_direction_calls_and_is_thread_independent() {
    let p = probe(10.0, Vec3::new(0.0, 10.0, 0.0));
    let target = TargetState { d: Vec3::new(0.0, 10.0, 0.0), j: 0.25, kind: TargetKind::Thermal { t: 10.0 } };
    let chans: Vec<Channel> = target.channels().unwrap().into_iter().map(|(c, _)| c).collect();
    let q = QuadratureSpec { radial_nodes: 16, polar_nodes: 12, azimuthal_nodes: 16, ..Default::default() };
    let o = EngineOptions { quadrature: q, ..Default::default() };
    let spec = GridSpec::new(2, 2);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| dcs_grid(&p, &target, &chans, &spec, &o, Some(PolarizationRequest { echo_phi: None })).unwrap())
    };
    let (g1, g3) = (run(1), run(3));
    assert_eq!(format!("{g1:?}"), format!("{g3:?}"));
    for node in &g1.nodes {
        let dir = Vec3::from_spherical(node.theta, node.phi);
        for (ch, v) in chans.iter().zip(&node.dcs) {
            match dcs_direction(&p, &target, dir, *ch, &o) {
                Ok(e) => assert_eq!(v.unwrap().to_bits(), e.value.to_bits()),
                Err(Error::Convergence { fine, .. }) => assert_eq!(v.unwrap().to_bits(), fine.to_bits()),
                Err(e) => panic!("{e}"),
            }
        }
        if let Some(pv) = node.polarization {
            assert!(pv.norm() <= 1.0 + 1e-6);
        }
    }
}

#[test]
fn grid_flags_forward_nodes_without_aborting() {
    let p = probe(10.0, Vec3::zero());
    let target = TargetState { d: Vec3::ey(), j: 0.25, kind: TargetKind::Singlet };
    let spec = GridSpec { n_theta: 2, n_phi: 1, cos_theta_min: 0.9999, cos_theta_max: 1.0 };
    let q = QuadratureSpec { radial_nodes: 8, polar_nodes: 8, azimuthal_nodes: 8, rel_tol: 1e9, ..Default::default() };
    let o = EngineOptions { quadrature: q, ..Default::default() };
    let g = dcs_grid(&p, &target, &[Channel::new(Transition::SingletToTriplet, Regime::PureT0)], &spec, &o, None).unwrap();
    assert!(g.nodes.iter().all(|n| n.status == NodeStatus::ForwardCone && n.total.is_none()));
}

#[test]
fn echo_phase_zero_reproduces_plain_polarization() {
    let p = probe(10.0, Vec3::new(0.0, 10.0, 0.0));
    let t = triplet(upup(), Vec3::new(0.0, 8.0, 0.0));
    let q = QuadratureSpec { radial_nodes: 16, polar_nodes: 12, azimuthal_nodes: 16, rel_tol: 1e9, ..Default::default() };
    let o = EngineOptions { quadrature: q, ..Default::default() };
    let ch = [Channel::new(Transition::TripletToSinglet, Regime::PureT0)];
    let dir = Vec3::from_spherical(1.0, 0.4);
    let plain = polarization_direction(&p, &t, dir, &ch, &o, None).unwrap();
    let echo0 = polarization_direction(&p, &t, dir, &ch, &o, Some(0.0)).unwrap();
    let echo = polarization_direction(&p, &t, dir, &ch, &o, Some(0.9)).unwrap();
    assert!((plain.vector - echo0.vector).norm() < 1e-14);
    assert!((plain.vector - echo.vector).norm() > 1e-3);
    assert!((echo.vector.norm() - plain.vector.norm()).abs() < 1e-12);
}
