//! Heisenberg spin dimer: eigenstates, purity and thermal populations.
//!
//! Product basis order is |↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩ (z basis, site 0 first).

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::response::{Channel, Regime, Transition};
use crate::spin_algebra::{cross_c, Axis, CVec3, Vec3, UNIT_TOL};

/// Boltzmann constant, meV/K.
pub const K_B: f64 = 0.086_173_332_62;

pub type State4 = Vector4<C64>;
pub type Op4 = Matrix4<C64>;

/// Initial state of the dimer.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TargetKind {
    /// Gibbs state at temperature `t` (kelvin).
    Thermal { t: f64 },
    Singlet,
    /// Σ_α c_α |λ_α⟩
    Triplet { c: CVec3 },
}

/// Dimer vector, exchange constant and initial state.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    /// Dimer vector d, Å; sites sit at ±d/2.
    pub d: Vec3,
    /// Exchange J, meV.
    pub j: f64,
    pub kind: TargetKind,
}

impl TargetState {
    pub fn validate(&self) -> Result<()> {
        if !(self.d.is_finite() && self.d.norm() > 0.0) {
            return Err(Error::InvalidParameter("dimer vector d must be finite and nonzero".into()));
        }
        if !self.j.is_finite() {
            return Err(Error::InvalidParameter("exchange J must be finite".into()));
        }
        match self.kind {
            TargetKind::Thermal { t } => {
                if !(t.is_finite() && t >= 0.0) {
                    return Err(Error::InvalidTemperature(t));
                }
            }
            TargetKind::Triplet { c } => check_unit(c)?,
            TargetKind::Singlet => {}
        }
        Ok(())
    }

    pub fn kind_label(&self) -> &'static str {
        match self.kind {
            TargetKind::Thermal { .. } => "thermal",
            TargetKind::Singlet => "singlet",
            TargetKind::Triplet { .. } => "triplet",
        }
    }

    /// The channels this target populates, with their population weights.
    pub fn channels(&self) -> Result<Vec<(Channel, f64)>> {
        use Transition::*;
        Ok(match self.kind {
            TargetKind::Thermal { t } => {
                let (ps, pt) = thermal_weights(self.j, t)?;
                let regime = if t == 0.0 { Regime::ThermalT0 } else { Regime::ThermalTpos };
                vec![
                    (Channel::new(SingletToTriplet, regime), ps),
                    (Channel::new(TripletToSinglet, regime), pt),
                    (Channel::new(TripletToTriplet, regime), pt),
                ]
            }
            TargetKind::Singlet => vec![(Channel::new(SingletToTriplet, Regime::PureT0), 1.0)],
            TargetKind::Triplet { .. } => vec![
                (Channel::new(TripletToSinglet, Regime::PureT0), 1.0),
                (Channel::new(TripletToTriplet, Regime::PureT0), 1.0),
            ],
        })
    }

    /// Weighted initial states and final manifold for one channel.
    ///
    /// Thermal weights multiply each initial state, so summing squared
    /// amplitudes over the list gives the channel's contribution to the
    /// mixture directly.
    pub fn channel_states(&self, channel: Channel) -> Result<ChannelStates> {
        let populated = |ok: bool| {
            if ok { Ok(()) } else { Err(Error::ChannelNotPopulated { channel: channel.to_string() }) }
        };
        let regime_ok = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::RegimeMismatch {
                    regime: channel.regime.label().into(),
                    target: self.kind_label().into(),
                })
            }
        };
        let triplets = || Axis::ALL.iter().map(|&a| triplet_basis(a)).collect::<Vec<_>>();
        let finals = match channel.transition {
            Transition::SingletToTriplet => triplets(),
            Transition::TripletToSinglet => vec![singlet()],
            Transition::TripletToTriplet => triplets(),
        };
        let initial = match self.kind {
            TargetKind::Thermal { t } => {
                regime_ok(channel.regime != Regime::PureT0)?;
                let (ps, pt) = thermal_weights(self.j, t)?;
                match channel.transition {
                    Transition::SingletToTriplet => vec![(ps, singlet())],
                    _ => Axis::ALL.iter().map(|&a| (pt, triplet_basis(a))).collect(),
                }
            }
            TargetKind::Singlet => {
                regime_ok(channel.regime == Regime::PureT0)?;
                populated(channel.transition == Transition::SingletToTriplet)?;
                vec![(1.0, singlet())]
            }
            TargetKind::Triplet { c } => {
                regime_ok(channel.regime == Regime::PureT0)?;
                populated(channel.transition != Transition::SingletToTriplet)?;
                vec![(1.0, triplet_state(c)?)]
            }
        };
        Ok(ChannelStates { initial, finals })
    }
}

/// Initial states (with population weights) and final manifold of a channel.
#[derive(Clone, Debug)]
pub struct ChannelStates {
    pub initial: Vec<(f64, State4)>,
    pub finals: Vec<State4>,
}

impl ChannelStates {
    /// Projector onto the final manifold.
    pub fn final_projector(&self) -> Op4 {
        self.finals.iter().fold(Op4::zeros(), |acc, f| acc + f * f.adjoint())
    }
}

fn check_unit(c: CVec3) -> Result<()> {
    let n = c.norm_sqr();
    if !c.is_finite() || (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitCoefficients { norm_sqr: n });
    }
    Ok(())
}

fn c(re: f64, im: f64) -> C64 { C64::new(re, im) }

/// |λ_s⟩ = (|↑↓⟩ − |↓↑⟩)/√2
pub fn singlet() -> State4 {
    let r = FRAC_1_SQRT_2;
    State4::new(c(0.0, 0.0), c(r, 0.0), c(-r, 0.0), c(0.0, 0.0))
}

/// |λ_x⟩, |λ_y⟩, |λ_z⟩ as listed for the dimer.
pub fn triplet_basis(a: Axis) -> State4 {
    let r = FRAC_1_SQRT_2;
    match a {
        Axis::X => State4::new(c(-r, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(r, 0.0)),
        Axis::Y => State4::new(c(0.0, r), c(0.0, 0.0), c(0.0, 0.0), c(0.0, r)),
        Axis::Z => State4::new(c(0.0, 0.0), c(r, 0.0), c(r, 0.0), c(0.0, 0.0)),
    }
}

/// |λ_t⟩ = Σ_α c_α |λ_α⟩ for unit-norm c.
pub fn triplet_state(cv: CVec3) -> Result<State4> {
    check_unit(cv)?;
    Ok(Axis::ALL
        .iter()
        .zip(cv.to_array())
        .fold(State4::zeros(), |acc, (&a, ca)| acc + triplet_basis(a) * ca))
}

fn pauli2(a: Axis) -> Matrix2<C64> {
    match a {
        Axis::X => Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)),
        Axis::Y => Matrix2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)),
        Axis::Z => Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)),
    }
}

/// ŝ^α_j = σ^α/2 acting on site `site`.
pub fn site_spin(site: usize, a: Axis) -> Op4 {
    let s = pauli2(a) * c(0.5, 0.0);
    let id = Matrix2::<C64>::identity();
    let k = if site == 0 { s.kronecker(&id) } else { id.kronecker(&s) };
    Op4::from_iterator(k.iter().copied())
}

/// Ĥ = −4J ŝ0·ŝ1
pub fn heisenberg_hamiltonian(j: f64) -> Op4 {
    Axis::ALL
        .iter()
        .fold(Op4::zeros(), |acc, &a| acc + site_spin(0, a) * site_spin(1, a))
        * c(-4.0 * j, 0.0)
}

/// Label of a dimer eigenstate.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DimerLevel {
    Singlet,
    Triplet(Axis),
}

/// Eigenstates with energies: singlet at 3J, triplets at −J.
pub fn dimer_eigensystem(j: f64) -> [(DimerLevel, State4, f64); 4] {
    [
        (DimerLevel::Singlet, singlet(), 3.0 * j),
        (DimerLevel::Triplet(Axis::X), triplet_basis(Axis::X), -j),
        (DimerLevel::Triplet(Axis::Y), triplet_basis(Axis::Y), -j),
        (DimerLevel::Triplet(Axis::Z), triplet_basis(Axis::Z), -j),
    ]
}

/// P = |c*×c|², 0 for maximally entangled (real c), 1 for product states.
pub fn purity(cv: CVec3) -> Result<f64> {
    check_unit(cv)?;
    Ok(cross_c(cv.conj(), cv).norm_sqr())
}

/// Rotates the first nonzero component of c onto the positive real axis.
pub fn canonicalize_phase(cv: CVec3) -> CVec3 {
    match cv.to_array().into_iter().find(|z| z.norm() > 1e-15) {
        Some(z) => cv.scale(z.conj() / z.norm()),
        None => cv,
    }
}

/// (p_s, p_t) with p_s + 3p_t = 1.
///
/// T = 0 is the Boltzmann limit: the ground manifold shares the weight
/// (p_t = 1/3 for J > 0, p_s = 1 for J < 0, all 1/4 for J = 0).
pub fn thermal_weights(j: f64, t: f64) -> Result<(f64, f64)> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidTemperature(t));
    }
    if t == 0.0 {
        return Ok(if j > 0.0 {
            (0.0, 1.0 / 3.0)
        } else if j < 0.0 {
            (1.0, 0.0)
        } else {
            (0.25, 0.25)
        });
    }
    // log-weights relative to the larger one
    let x = j / (K_B * t);
    let (ls, lt) = (-3.0 * x, x);
    let m = ls.max(lt);
    let (ws, wt) = ((ls - m).exp(), (lt - m).exp());
    let z = ws + 3.0 * wt;
    Ok((ws / z, wt / z))
}
