//! Closed-form magnetic response of the dimer to the entangled probe.
//!
//! For an on-shell pair (|k1| = |k2|) the response of one channel factorizes
//! into a structure factor F, fixed by the dimer geometry, and an entanglement
//! factor h = A cos((Θ1−Θ2)/2) + i B·⟨χ1|σ|χ2⟩ built from the coefficients A, B.
//! F·h equals four times the spin trace ⟨χ1 λ|V†(κ1) P V(κ2)|χ2 λ⟩ with
//! V = σ·Q⊥ and ŝ = σ/2; the cross-section kernel is F·h/4.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dimer::{TargetKind, TargetState};
use crate::error::{Error, Result};
use crate::probe::{effective_axis, spin_matrix_element_axis};
use crate::spin_algebra::{cross_c, Axis, CVec3, Vec3};

/// Relative tolerance on |k1| = |k2|.
pub const ON_SHELL_TOL: f64 = 1e-9;

/// Which dimer manifolds are connected.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transition {
    #[serde(rename = "st")]
    SingletToTriplet,
    #[serde(rename = "ts")]
    TripletToSinglet,
    #[serde(rename = "tt")]
    TripletToTriplet,
}

impl Transition {
    pub const ALL: [Transition; 3] =
        [Transition::SingletToTriplet, Transition::TripletToSinglet, Transition::TripletToTriplet];

    /// ζ in ℏω = −4Jζ.
    pub fn zeta(self) -> i32 {
        match self {
            Transition::SingletToTriplet => 1,
            Transition::TripletToSinglet => -1,
            Transition::TripletToTriplet => 0,
        }
    }

    /// δ_{ττ′}
    pub fn is_diagonal(self) -> bool { self == Transition::TripletToTriplet }

    pub fn label(self) -> &'static str {
        match self {
            Transition::SingletToTriplet => "st",
            Transition::TripletToSinglet => "ts",
            Transition::TripletToTriplet => "tt",
        }
    }
}

/// Which set of coefficients applies: a pure state with coefficient vector c,
/// or the thermal mixture (the latter identical at T = 0 and T > 0).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    PureT0,
    ThermalT0,
    ThermalTpos,
}

impl Regime {
    pub fn is_thermal(self) -> bool { self != Regime::PureT0 }

    pub fn label(self) -> &'static str {
        match self {
            Regime::PureT0 => "pure-t0",
            Regime::ThermalT0 => "thermal-t0",
            Regime::ThermalTpos => "thermal-tpos",
        }
    }
}

/// A transition together with its coefficient regime.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Channel {
    pub transition: Transition,
    pub regime: Regime,
}

impl Channel {
    pub const fn new(transition: Transition, regime: Regime) -> Self { Self { transition, regime } }

    pub fn zeta(self) -> i32 { self.transition.zeta() }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.transition.label(), self.regime.label())
    }
}

/// The factors composing one channel's response for one (κ1, κ2) pair.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ResponseParts {
    pub a: C64,
    pub b: CVec3,
    pub f: f64,
    pub h: C64,
}

impl ResponseParts {
    pub fn value(&self) -> C64 { self.h * self.f }
}

/// Incoming wavevectors of the pair and the common outgoing wavevector.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ScatteringPair {
    pub k1: Vec3,
    pub k2: Vec3,
    pub k_out: Vec3,
}

impl ScatteringPair {
    pub fn new(k1: Vec3, k2: Vec3, k_out: Vec3) -> Self { Self { k1, k2, k_out } }

    pub fn kappa1(&self) -> Vec3 { self.k1 - self.k_out }

    pub fn kappa2(&self) -> Vec3 { self.k2 - self.k_out }

    pub fn check_on_shell(&self) -> Result<()> {
        let (a, b) = (self.k1.norm(), self.k2.norm());
        if (a - b).abs() > ON_SHELL_TOL * a.max(b) {
            return Err(Error::OffShell { k1: a, k2: b });
        }
        Ok(())
    }
}

fn cv(v: Vec3) -> CVec3 { v.to_complex() }

fn a_st(a: Vec3, b: Vec3) -> C64 {
    let ab = a.dot(b);
    (1.0 + ab * ab).into()
}

fn b_st(a: Vec3, b: Vec3) -> CVec3 { cv(a.cross(b).scale(a.dot(b))) }

fn a_ts(c: CVec3, a: Vec3, b: Vec3) -> C64 {
    let cs = c.conj();
    1.0 + cs.dot_real(a) * c.dot_real(b) * a.dot(b)
        - c.dot_real(a) * cs.dot_real(a)
        - c.dot_real(b) * cs.dot_real(b)
}

fn b_ts(c: CVec3, a: Vec3, b: Vec3) -> CVec3 {
    let cs = c.conj();
    cross_c(cs, c)
        + cv(a.cross(b)).scale(cs.dot_real(a) * c.dot_real(b))
        + cross_c(c, cv(a)).scale(cs.dot_real(a))
        - cross_c(cs, cv(b)).scale(c.dot_real(b))
}

/// Coefficients (A, B) of one Table row; `kt1`, `kt2` are unit momentum
/// transfers. `c` is needed only for pure triplet initial states.
pub fn table1(channel: Channel, kt1: Vec3, kt2: Vec3, c: Option<CVec3>) -> Result<(C64, CVec3)> {
    use Transition::*;
    let need_c = || c.ok_or_else(|| Error::MissingCoefficients { channel: channel.to_string() });
    Ok(match (channel.transition, channel.regime.is_thermal()) {
        (SingletToTriplet, _) => (a_st(kt1, kt2), b_st(kt1, kt2)),
        (TripletToSinglet, false) => {
            let c = need_c()?;
            (a_ts(c, kt1, kt2), b_ts(c, kt1, kt2))
        }
        (TripletToTriplet, false) => {
            let c = need_c()?;
            (a_st(kt1, kt2) - a_ts(c, kt1, kt2).conj(), b_st(kt1, kt2) - b_ts(c, kt1, kt2).conj())
        }
        (TripletToSinglet, true) => (a_st(kt1, kt2), b_st(kt1, kt2)),
        (TripletToTriplet, true) => (a_st(kt1, kt2) * 2.0, b_st(kt1, kt2).scale_re(2.0)),
    })
}

/// F = 2cos((κ1−κ2)·d/2) ∓ 2cos((κ1+κ2)·d/2), with + for t→t.
pub fn structure_factor(kappa1: Vec3, kappa2: Vec3, d: Vec3, transition: Transition) -> f64 {
    let sign = if transition.is_diagonal() { -1.0 } else { 1.0 };
    2.0 * (0.5 * (kappa1 - kappa2).dot(d)).cos() - sign * 2.0 * (0.5 * (kappa1 + kappa2).dot(d)).cos()
}

/// h = A cos((Θ1−Θ2)/2) + i B·⟨χ1|σ|χ2⟩ for the x quantization axis.
pub fn h_factor(a: C64, b: CVec3, theta1: f64, theta2: f64) -> C64 {
    h_factor_axis(a, b, theta1, theta2, Axis::X)
}

/// h for an arbitrary quantization axis; ⟨χ1|χ2⟩ = cos((Θ1−Θ2)/2) for all axes.
pub fn h_factor_axis(a: C64, b: CVec3, theta1: f64, theta2: f64, alpha: Axis) -> C64 {
    let s = spin_matrix_element_axis(theta1, theta2, alpha);
    a * (0.5 * (theta1 - theta2)).cos() + C64::i() * b.dot(s)
}

fn unit_transfer(kappa: Vec3) -> Result<Vec3> { kappa.normalized().ok_or(Error::ZeroMomentumTransfer) }

fn coefficients_for(target: &TargetState, channel: Channel) -> Result<Option<CVec3>> {
    // reject channels the target cannot populate before touching the table
    target.channel_states(channel)?;
    Ok(match target.kind {
        TargetKind::Triplet { c } => Some(c),
        _ => None,
    })
}

/// All factors of one channel's response for an on-shell pair.
pub fn response_parts(
    channel: Channel,
    pair: &ScatteringPair,
    theta1: f64,
    theta2: f64,
    alpha: Axis,
    target: &TargetState,
) -> Result<ResponseParts> {
    pair.check_on_shell()?;
    let (k1, k2) = (pair.kappa1(), pair.kappa2());
    let (kt1, kt2) = (unit_transfer(k1)?, unit_transfer(k2)?);
    let c = coefficients_for(target, channel)?;
    let (a, b) = table1(channel, kt1, kt2, c)?;
    let f = structure_factor(k1, k2, target.d, channel.transition);
    let h = h_factor_axis(a, b, theta1, theta2, alpha);
    Ok(ResponseParts { a, b, f, h })
}

/// F·h with the energy delta stripped. Population weights are not applied.
pub fn response_term(
    channel: Channel,
    pair: &ScatteringPair,
    theta1: f64,
    theta2: f64,
    alpha: Axis,
    target: &TargetState,
) -> Result<C64> {
    Ok(response_parts(channel, pair, theta1, theta2, alpha, target)?.value())
}

/// Plane-wave coefficients (Ã, B̃) at unit transfer `kt`.
pub fn pw_coefficients(transition: Transition, regime: Regime, c: Option<CVec3>, kt: Vec3) -> Result<(f64, CVec3)> {
    use Transition::*;
    if regime.is_thermal() || transition == SingletToTriplet {
        let a = match transition {
            TripletToTriplet if regime.is_thermal() => 4.0,
            _ => 2.0,
        };
        return Ok((a, CVec3::zero()));
    }
    let c = c.ok_or_else(|| Error::MissingCoefficients {
        channel: Channel::new(transition, regime).to_string(),
    })?;
    let kc = c.dot_real(kt).norm_sqr();
    let b = cv(kt).scale(cross_c(c.conj(), c).dot_real(kt));
    let a = if transition.is_diagonal() { 1.0 + kc } else { 1.0 - kc };
    Ok((a, b))
}

/// S^pw = sin²((κ·d + πδ)/2) [Ã + i B̃·χ̂_α(Θ)] (energy delta stripped).
pub fn pw_response(
    kappa: Vec3,
    d: Vec3,
    transition: Transition,
    regime: Regime,
    c: Option<CVec3>,
    theta: f64,
    alpha: Axis,
) -> Result<f64> {
    let kt = unit_transfer(kappa)?;
    let (a, b) = pw_coefficients(transition, regime, c, kt)?;
    let shift = if transition.is_diagonal() { std::f64::consts::PI } else { 0.0 };
    let s2 = (0.5 * (kappa.dot(d) + shift)).sin().powi(2);
    let bracket = a + C64::i() * b.dot_real(effective_axis(alpha, theta));
    Ok(s2 * bracket.re)
}

/// Scattered polarization P′ in the plane-wave limit.
pub fn pw_polarization(
    transition: Transition,
    regime: Regime,
    c: Option<CVec3>,
    ktilde: Vec3,
    theta: f64,
    alpha: Axis,
) -> Result<Vec3> {
    let kt = unit_transfer(ktilde)?;
    let chi = effective_axis(alpha, theta);
    let (a, b) = pw_coefficients(transition, regime, c, kt)?;
    let h_st = kt.scale(-2.0 * chi.dot(kt));
    let h = if transition == Transition::SingletToTriplet {
        h_st
    } else if regime.is_thermal() {
        // mixture over the three triplets: t→s repeats h_st, t→t doubles it
        if transition.is_diagonal() { h_st.scale(2.0) } else { h_st }
    } else {
        let c = c.expect("pure coefficients checked above");
        let cp = c - cv(kt).scale(c.dot_real(kt));
        let sign = if transition.is_diagonal() { -1.0 } else { 1.0 };
        let inner = cp.scale(cp.conj().dot_real(chi) * 2.0) - cv(chi).scale_re(cp.norm_sqr());
        let mut h = inner.re().scale(sign) + (b.scale(-C64::i())).re();
        if transition.is_diagonal() {
            h += h_st;
        }
        h
    };
    let den = a + (C64::i() * b.dot_real(chi)).re;
    if den.abs() < 1e-14 {
        return Err(Error::PolarizationUndefined { denominator: den });
    }
    Ok(h.scale(1.0 / den))
}

/// ⟨χ^sc_1|χ^sc_0⟩ = i e^{iκ0·d} (c⊥*×c⊥)·⟨χ^α_1|σ|χ^α_0⟩ for the path spinors
/// scattered by the two sites; vanishes for real (maximally entangled) c.
pub fn erasure_overlap(c: CVec3, kappa0: Vec3, d: Vec3, alpha: Axis) -> Result<C64> {
    let kt = unit_transfer(kappa0)?;
    let cp = c - cv(kt).scale(c.dot_real(kt));
    let s10 = crate::spin_algebra::sigma_element(
        crate::probe::axis_spinor(alpha, 1),
        crate::probe::axis_spinor(alpha, 0),
    );
    let phase = C64::from_polar(1.0, kappa0.dot(d));
    Ok(C64::i() * phase * cross_c(cp.conj(), cp).dot(s10))
}
