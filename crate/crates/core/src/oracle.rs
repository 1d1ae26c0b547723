//! Brute-force reference: explicit operators on neutron spin ⊗ dimer (8-dim).
//!
//! Nothing here uses the closed forms; the operators are assembled from Pauli
//! matrices and Kronecker products, and every quantity is a dense contraction.
//! Slow and obviously correct.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::dimer::TargetState;
use crate::error::{Error, Result};
use crate::probe::{chi_spinor, spin_echo_sigma};
use crate::response::{Channel, ScatteringPair};
use crate::spin_algebra::{Axis, CVec3, Mat2c, Spinor2, Vec3};

/// Dense complex operator of dimension 2, 4 or 8.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorNd(pub DMatrix<C64>);

impl OperatorNd {
    pub fn dim(&self) -> usize { self.0.nrows() }

    pub fn zeros(dim: usize) -> Self { Self(DMatrix::zeros(dim, dim)) }

    pub fn identity(dim: usize) -> Self { Self(DMatrix::identity(dim, dim)) }

    pub fn adjoint(&self) -> Self { Self(self.0.adjoint()) }

    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Self(&self.0 * &other.0)
    }

    pub fn kron(&self, other: &Self) -> Self { Self(self.0.kronecker(&other.0)) }

    pub fn add(&self, other: &Self) -> Self { Self(&self.0 + &other.0) }

    pub fn scale(&self, a: C64) -> Self { Self(&self.0 * a) }

    pub fn is_hermitian(&self, tol: f64) -> bool { (&self.0 - self.0.adjoint()).iter().all(|z| z.norm() <= tol) }

    pub fn from_mat2(m: &Mat2c) -> Self {
        Self(DMatrix::from_fn(2, 2, |r, c| m.0[r][c]))
    }
}

fn c(re: f64, im: f64) -> C64 { C64::new(re, im) }

/// σ^α as a dense 2×2 operator, written out independently of `spin_algebra`.
pub fn pauli_nd(a: Axis) -> OperatorNd {
    let m = match a {
        Axis::X => [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        Axis::Y => [c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        Axis::Z => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
    };
    OperatorNd(DMatrix::from_row_slice(2, 2, &m))
}

/// ŝ^α_j on the 4-dim dimer space.
pub fn dimer_spin(site: usize, a: Axis) -> OperatorNd {
    let s = pauli_nd(a).scale(c(0.5, 0.0));
    let id = OperatorNd::identity(2);
    if site == 0 { s.kron(&id) } else { id.kron(&s) }
}

/// Singlet vector in the product basis, built from its definition.
pub fn singlet_nd() -> DVector<C64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_vec(vec![c(0.0, 0.0), c(r, 0.0), c(-r, 0.0), c(0.0, 0.0)])
}

/// λ_α = 2 ŝ^α_0 λ_s
pub fn triplet_nd(a: Axis) -> DVector<C64> { &dimer_spin(0, a).0 * singlet_nd() * c(2.0, 0.0) }

fn embed_neutron(a: Axis) -> OperatorNd { pauli_nd(a).kron(&OperatorNd::identity(4)) }

fn embed_dimer(op: &OperatorNd) -> OperatorNd { OperatorNd::identity(2).kron(op) }

/// σ·Q⊥^j(κ) on neutron ⊗ dimer, with Q⊥^j = e^{iκ·r_j}(ŝ_j − κ̃(κ̃·ŝ_j)),
/// r_j = (−1)^j d/2. The orbital term of Q⊥ is not available for motionless
/// spins; asking for it is an error.
pub fn q_perp_operator(kappa: Vec3, d: Vec3, site: usize, include_momentum: bool) -> Result<OperatorNd> {
    if include_momentum {
        return Err(Error::MomentumTermUnsupported);
    }
    let kt = kappa.normalized().ok_or(Error::ZeroMomentumTransfer)?.to_array();
    let r = if site == 0 { d.scale(0.5) } else { d.scale(-0.5) };
    let phase = C64::from_polar(1.0, kappa.dot(r));
    let mut out = OperatorNd::zeros(8);
    for a in Axis::ALL {
        // (P ŝ_j)^a = Σ_b (δ_ab − κ̃_a κ̃_b) ŝ^b_j
        let mut q = OperatorNd::zeros(4);
        for b in Axis::ALL {
            let p = if a == b { 1.0 } else { 0.0 } - kt[a.index()] * kt[b.index()];
            q = q.add(&dimer_spin(site, b).scale(c(p, 0.0)));
        }
        out = out.add(&pauli_nd(a).kron(&q).scale(phase));
    }
    Ok(out)
}

/// V(κ) = σ·Q⊥(κ) summed over both sites.
pub fn interaction(kappa: Vec3, d: Vec3) -> Result<OperatorNd> {
    Ok(q_perp_operator(kappa, d, 0, false)?.add(&q_perp_operator(kappa, d, 1, false)?))
}

fn spinor_nd(s: Spinor2) -> DVector<C64> { DVector::from_vec(vec![s.up, s.down]) }

fn product(chi: &DVector<C64>, lam: &DVector<C64>) -> DVector<C64> { chi.kronecker(lam) }

/// Oracle states for a target/channel: each initial state paired with the
/// weight the closed-form row carries (1 per state, population not applied).
struct OracleStates {
    initial: Vec<DVector<C64>>,
    finals: Vec<DVector<C64>>,
}

fn oracle_states(target: &TargetState, channel: Channel) -> Result<Option<OracleStates>> {
    use crate::dimer::TargetKind;
    use crate::response::Transition::*;
    let triplets = || Axis::ALL.iter().map(|&a| triplet_nd(a)).collect::<Vec<_>>();
    let finals = match channel.transition {
        SingletToTriplet | TripletToTriplet => triplets(),
        TripletToSinglet => vec![singlet_nd()],
    };
    let initial = match (target.kind, channel.transition) {
        (TargetKind::Thermal { .. }, SingletToTriplet) | (TargetKind::Singlet, SingletToTriplet) => {
            vec![singlet_nd()]
        }
        (TargetKind::Thermal { .. }, _) => triplets(),
        (TargetKind::Triplet { c: cv }, TripletToSinglet | TripletToTriplet) => {
            let v = Axis::ALL
                .iter()
                .zip(cv.to_array())
                .fold(DVector::zeros(4), |acc, (&a, ca)| acc + triplet_nd(a) * ca);
            vec![v]
        }
        _ => return Ok(None),
    };
    if channel.regime.is_thermal() != matches!(target.kind, TargetKind::Thermal { .. }) {
        return Err(Error::RegimeMismatch {
            regime: channel.regime.label().into(),
            target: target.kind_label().into(),
        });
    }
    Ok(Some(OracleStates { initial, finals }))
}

/// Result of an oracle contraction; `populated` is false when the target has
/// no weight in the requested channel (the value is then zero).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct OracleValue {
    pub value: C64,
    pub populated: bool,
}

fn contract(
    pair: &ScatteringPair,
    theta1: f64,
    theta2: f64,
    alpha: Axis,
    target: &TargetState,
    channel: Channel,
    middle: &OperatorNd,
) -> Result<Option<C64>> {
    pair.check_on_shell()?;
    let Some(states) = oracle_states(target, channel)? else { return Ok(None) };
    let v1 = interaction(pair.kappa1(), target.d)?;
    let v2 = interaction(pair.kappa2(), target.d)?;
    let proj = states
        .finals
        .iter()
        .fold(OperatorNd::zeros(4), |acc, f| acc.add(&OperatorNd(f * f.adjoint())));
    let kernel = v1.adjoint().compose(&embed_dimer(&proj)).compose(middle).compose(&v2);
    let (x1, x2) = (spinor_nd(chi_spinor(theta1, alpha)), spinor_nd(chi_spinor(theta2, alpha)));
    let mut total = c(0.0, 0.0);
    for lam in &states.initial {
        let bra = product(&x1, lam);
        let ket = product(&x2, lam);
        total += (bra.adjoint() * &kernel.0 * ket)[0];
    }
    Ok(Some(total))
}

/// Σ_{λ′∈channel} ⟨χ1 λ|V†(κ1) P_{λ′} V(κ2)|χ2 λ⟩, summed over the initial
/// states of the channel's row (thermal rows sum the three triplets).
pub fn oracle_response(
    pair: &ScatteringPair,
    theta1: f64,
    theta2: f64,
    alpha: Axis,
    target: &TargetState,
    channel: Channel,
) -> Result<OracleValue> {
    let id = OperatorNd::identity(8);
    Ok(match contract(pair, theta1, theta2, alpha, target, channel, &id)? {
        Some(value) => OracleValue { value, populated: true },
        None => OracleValue { value: c(0.0, 0.0), populated: false },
    })
}

/// Numerator (kernel σ·Q⊥† σ σ·Q⊥, or σ_se in the middle) and denominator of P′.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PolarizationTerms {
    pub numerator: CVec3,
    pub denominator: C64,
}

impl PolarizationTerms {
    /// P′ for a diagonal pair (κ1 = κ2, Θ1 = Θ2), where both parts are real.
    pub fn ratio(&self) -> Result<Vec3> {
        let den = self.denominator.re;
        if den.abs() < 1e-300 || !den.is_finite() {
            return Err(Error::PolarizationUndefined { denominator: den });
        }
        Ok(self.numerator.re().scale(1.0 / den))
    }
}

pub fn oracle_polarization(
    pair: &ScatteringPair,
    theta1: f64,
    theta2: f64,
    alpha: Axis,
    target: &TargetState,
    channel: Channel,
    echo_phi: Option<f64>,
) -> Result<PolarizationTerms> {
    let sig: [OperatorNd; 3] = match echo_phi {
        None => Axis::ALL.map(embed_neutron),
        Some(phi) => spin_echo_sigma(phi, alpha)
            .map(|m| OperatorNd::from_mat2(&m).kron(&OperatorNd::identity(4))),
    };
    let mut num = [c(0.0, 0.0); 3];
    for (n, s) in num.iter_mut().zip(sig.iter()) {
        *n = contract(pair, theta1, theta2, alpha, target, channel, s)?
            .ok_or_else(|| Error::ChannelNotPopulated { channel: channel.to_string() })?;
    }
    let den = contract(pair, theta1, theta2, alpha, target, channel, &OperatorNd::identity(8))?
        .ok_or_else(|| Error::ChannelNotPopulated { channel: channel.to_string() })?;
    Ok(PolarizationTerms { numerator: CVec3::from_array(num), denominator: den })
}

/// Full Gibbs-weighted trace over every final state:
/// Σ_λ p_λ ⟨χ1 λ|V†(κ1) V(κ2)|χ2 λ⟩.
pub fn oracle_thermal_total(
    pair: &ScatteringPair,
    theta1: f64,
    theta2: f64,
    alpha: Axis,
    target: &TargetState,
    p_s: f64,
    p_t: f64,
) -> Result<C64> {
    pair.check_on_shell()?;
    let v1 = interaction(pair.kappa1(), target.d)?;
    let v2 = interaction(pair.kappa2(), target.d)?;
    let kernel = v1.adjoint().compose(&v2);
    let (x1, x2) = (spinor_nd(chi_spinor(theta1, alpha)), spinor_nd(chi_spinor(theta2, alpha)));
    let mut states = vec![(p_s, singlet_nd())];
    states.extend(Axis::ALL.iter().map(|&a| (p_t, triplet_nd(a))));
    Ok(states
        .iter()
        .map(|(p, lam)| (product(&x1, lam).adjoint() * &kernel.0 * product(&x2, lam))[0] * *p)
        .sum())
}

/// Path spinor scattered by site j alone, projected on the singlet:
/// (⟨λ_s| ⊗ 1) σ·Q⊥^j(κ0) |χ^α_j⟩|λ_t⟩.
pub fn scattered_path_spinor(c_t: CVec3, kappa0: Vec3, d: Vec3, site: usize, alpha: Axis) -> Result<DVector<C64>> {
    let lam = Axis::ALL
        .iter()
        .zip(c_t.to_array())
        .fold(DVector::zeros(4), |acc, (&a, ca)| acc + triplet_nd(a) * ca);
    let chi = spinor_nd(crate::probe::axis_spinor(alpha, site));
    let out = &q_perp_operator(kappa0, d, site, false)?.0 * product(&chi, &lam);
    let s = singlet_nd();
    Ok(DVector::from_fn(2, |n, _| (0..4).map(|m| s[m].conj() * out[4 * n + m]).sum()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transverse_projection_along_z() {
        // κ̃ = ẑ removes every ŝ^z coupling
        let op = q_perp_operator(Vec3::new(0.0, 0.0, 2.0), Vec3::zero(), 0, false).unwrap();
        let sz = embed_neutron(Axis::Z).compose(&embed_dimer(&dimer_spin(0, Axis::Z)));
        let overlap: C64 = op.0.iter().zip(sz.0.iter()).map(|(a, b)| a.conj() * b).sum();
        assert!(overlap.norm() < 1e-15);
    }

    #[test]
    fn momentum_term_is_rejected() {
        assert_eq!(
            q_perp_operator(Vec3::ez(), Vec3::ey(), 1, true),
            Err(Error::MomentumTermUnsupported)
        );
        assert_eq!(q_perp_operator(Vec3::zero(), Vec3::ey(), 0, false), Err(Error::ZeroMomentumTransfer));
    }

    #[test]
    fn site_swap_at_zero_separation() {
        let k = Vec3::new(0.3, -0.7, 1.1);
        let a = q_perp_operator(k, Vec3::zero(), 0, false).unwrap();
        let b = q_perp_operator(k, Vec3::zero(), 1, false).unwrap();
        // swap of the two dimer sites as a permutation of the product basis
        let mut swap = OperatorNd::zeros(4);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap.0[(i, j)] = c(1.0, 0.0);
        }
        let sw = embed_dimer(&swap);
        let b_swapped = sw.compose(&b).compose(&sw);
        assert!((&a.0 - &b_swapped.0).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn operators_are_hermitian_sums() {
        let k = Vec3::new(0.2, 0.5, -0.9);
        let v = interaction(k, Vec3::zero()).unwrap();
        assert!(v.is_hermitian(1e-15));
    }
}
