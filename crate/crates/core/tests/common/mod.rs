//! Shared generators for the integration suites.
#![allow(dead_code)]

use entprobe_core::dimer::{TargetKind, TargetState};
use entprobe_core::response::{Channel, Regime, ScatteringPair, Transition};
use entprobe_core::spin_algebra::{CVec3, Vec3};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng { ChaCha8Rng::seed_from_u64(seed) }

pub fn unit(r: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v.scale(1.0 / n);
        }
    }
}

/// Uniformly random unit complex coefficient vector.
pub fn coefficients(r: &mut impl Rng) -> CVec3 {
    let z = |r: &mut ChaCha8Rng| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
    let mut rr = ChaCha8Rng::seed_from_u64(r.gen());
    let c = CVec3::new(z(&mut rr), z(&mut rr), z(&mut rr));
    c.scale_re(1.0 / c.norm_sqr().sqrt())
}

/// Real unit c times a random global phase (maximally entangled).
pub fn real_coefficients(r: &mut impl Rng) -> CVec3 {
    let phase = C64::from_polar(1.0, r.gen_range(0.0..std::f64::consts::TAU));
    unit(r).to_complex().scale(phase)
}

/// c = (u − i v)/√2 with orthonormal real u, v: a product state, purity 1.
pub fn product_coefficients(r: &mut impl Rng) -> CVec3 {
    let u = unit(r);
    let v = u.cross(unit(r)).normalized().unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CVec3::new(
        C64::new(u.x * s, -v.x * s),
        C64::new(u.y * s, -v.y * s),
        C64::new(u.z * s, -v.z * s),
    )
}

/// An on-shell pair |k1| = |k2| with an arbitrary outgoing vector.
pub fn pair(r: &mut impl Rng) -> ScatteringPair {
    let k = r.gen_range(0.5..3.0);
    let kp = r.gen_range(0.3..3.0);
    ScatteringPair::new(unit(r).scale(k), unit(r).scale(k), unit(r).scale(kp))
}

pub fn dimer_vector(r: &mut impl Rng) -> Vec3 { unit(r).scale(r.gen_range(1.0..10.0)) }

/// Every Table row with a target that populates it.
pub fn table_rows(r: &mut impl Rng) -> Vec<(Channel, TargetState)> {
    let d = dimer_vector(r);
    let c = coefficients(r);
    let pure_t = TargetState { d, j: 0.25, kind: TargetKind::Triplet { c } };
    let pure_s = TargetState { d, j: 0.25, kind: TargetKind::Singlet };
    let thermal = TargetState { d, j: 0.25, kind: TargetKind::Thermal { t: 10.0 } };
    use Regime::*;
    use Transition::*;
    vec![
        (Channel::new(SingletToTriplet, PureT0), pure_s),
        (Channel::new(TripletToSinglet, PureT0), pure_t),
        (Channel::new(TripletToTriplet, PureT0), pure_t),
        (Channel::new(SingletToTriplet, ThermalTpos), thermal),
        (Channel::new(TripletToSinglet, ThermalTpos), thermal),
        (Channel::new(TripletToTriplet, ThermalTpos), thermal),
    ]
}

pub fn rel_err(a: C64, b: C64) -> f64 { (a - b).norm() / b.norm() }
