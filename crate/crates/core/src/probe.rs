//! The spin–path entangled probe: phases, spinors, effective axes, Gaussian
//! envelope, time-integrated flux and the spin-echo operator.
//!
//! Lengths are in Å, wavevectors in Å⁻¹ and energies in meV.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin_algebra::{rotation_matrix, sigma_element, Axis, CVec3, Mat2c, Spinor2, Vec3};

/// ℏ²/2m for the neutron, meV·Å².
pub const NEUTRON_E_U: f64 = 2.0721;

/// Mean momentum, packet width, entanglement vector, entangler phase and
/// quantization axis.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Mean wavevector, Å⁻¹.
    pub k0: Vec3,
    /// Transverse spatial width Δ, Å.
    pub delta: f64,
    /// Entanglement vector ξ, Å. Zero means un-entangled.
    pub xi: Vec3,
    /// Entangler phase φ, rad.
    pub phi: f64,
    /// Spin-quantization axis.
    pub alpha: Axis,
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k0.is_finite() && self.k0.norm() > 0.0) {
            return Err(Error::InvalidParameter("probe k0 must be finite and nonzero".into()));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidParameter("probe width Δ must be positive".into()));
        }
        if !(self.xi.is_finite() && self.phi.is_finite()) {
            return Err(Error::InvalidParameter("probe ξ and φ must be finite".into()));
        }
        Ok(())
    }

    /// Packet momentum width σ_k = √2/Δ.
    pub fn momentum_width(&self) -> f64 { std::f64::consts::SQRT_2 / self.delta }

    /// Θ at the mean momentum.
    pub fn theta0(&self) -> f64 { theta_phase(self.k0, self) }

    pub fn with_xi(mut self, xi: Vec3) -> Self {
        self.xi = xi;
        self
    }
}

/// Θ_k = k·ξ + 2φ
pub fn theta_phase(k: Vec3, cfg: &ProbeConfig) -> f64 { k.dot(cfg.xi) + 2.0 * cfg.phi }

/// χ^α_ν in the z basis.
///
/// Rows of the rotation from z to α give the spinors up to a phase; the down
/// state of x and y is flipped so that χ^x_1 = (1,−1)/√2 and χ^y_1 = (1,−i)/√2,
/// which is the convention under which the closed-form effective axes hold.
pub fn axis_spinor(alpha: Axis, nu: usize) -> Spinor2 {
    let r = rotation_matrix(alpha.angles(), Axis::Z.angles());
    let row = Spinor2::new(r.0[nu][0], r.0[nu][1]);
    let eta = if nu == 1 && alpha != Axis::Z { -1.0 } else { 1.0 };
    row.scale(eta.into())
}

/// χ_Θ = (e^{−iΘ/2} χ^α_0 + e^{iΘ/2} χ^α_1)/√2
pub fn chi_spinor(theta: f64, alpha: Axis) -> Spinor2 {
    let e = C64::from_polar(FRAC_1_SQRT_2, -0.5 * theta);
    axis_spinor(alpha, 0).scale(e) + axis_spinor(alpha, 1).scale(e.conj())
}

/// Effective polarization axis χ̂_α(Θ).
pub fn effective_axis(alpha: Axis, theta: f64) -> Vec3 {
    let (s, c) = theta.sin_cos();
    match alpha {
        Axis::X => Vec3::new(0.0, -s, c),
        Axis::Y => Vec3::new(s, 0.0, c),
        Axis::Z => Vec3::new(c, s, 0.0),
    }
}

/// ρ^α_{k1,k2} = |χ_{Θ2}⟩⟨χ_{Θ1}|
pub fn rho_pair(theta1: f64, theta2: f64, alpha: Axis) -> Mat2c {
    Mat2c::outer(chi_spinor(theta2, alpha), chi_spinor(theta1, alpha))
}

/// ⟨χ_{Θ1}|σ|χ_{Θ2}⟩ for α = x, in closed form.
pub fn spin_matrix_element(theta1: f64, theta2: f64) -> CVec3 {
    let half_diff = 0.5 * (theta1 - theta2);
    let half_sum = 0.5 * (theta1 + theta2);
    CVec3::new(
        C64::new(0.0, half_diff.sin()),
        (-half_sum.sin()).into(),
        half_sum.cos().into(),
    )
}

/// ⟨χ_{Θ1}|σ|χ_{Θ2}⟩ for any axis.
pub fn spin_matrix_element_axis(theta1: f64, theta2: f64, alpha: Axis) -> CVec3 {
    match alpha {
        Axis::X => spin_matrix_element(theta1, theta2),
        _ => sigma_element(chi_spinor(theta1, alpha), chi_spinor(theta2, alpha)),
    }
}

/// g(k) = (Δ/√2π)^{3/2} exp(−Δ²|k−k0|²/4), normalized in L².
pub fn gaussian_amplitude(k: Vec3, cfg: &ProbeConfig) -> f64 {
    let d = cfg.delta;
    (d / (2.0 * PI).sqrt()).powf(1.5) * (-0.25 * d * d * (k - cfg.k0).norm_sqr()).exp()
}

/// How the time-integrated flux I of a packet is reduced to one number.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FluxConvention {
    /// Intensity-weighted transverse average of the time-integrated flux of a
    /// single path packet: 1/(πΔ²).
    Averaged,
    /// On-axis time-integrated flux 2/(πΔ²); the wide-packet limit of the
    /// cross-section then coincides with the plane-wave constant.
    #[default]
    Calibrated,
    /// On-axis flux of a reference packet of fixed width, 2/(π w²),
    /// independent of Δ. Used when comparing packets of different widths.
    Reference { width: f64 },
}

/// Time-integrated flux I in Å⁻², i.e. probability per unit transverse area.
///
/// The velocity cancels against the passage time, so I is the transverse
/// column density of the packet. Both path packets carry half the weight and
/// are normalized separately, which makes I independent of ξ.
pub fn time_integrated_flux(cfg: &ProbeConfig, convention: FluxConvention) -> f64 {
    let d2 = cfg.delta * cfg.delta;
    match convention {
        FluxConvention::Averaged => 1.0 / (PI * d2),
        FluxConvention::Calibrated => 2.0 / (PI * d2),
        FluxConvention::Reference { width } => 2.0 / (PI * width * width),
    }
}

/// U_φ = Σ_ν e^{i(−1)^ν φ} |χ^α_ν⟩⟨χ^α_ν|
pub fn spin_echo_unitary(phi: f64, alpha: Axis) -> Mat2c {
    let e = C64::from_polar(1.0, phi);
    let (c0, c1) = (axis_spinor(alpha, 0), axis_spinor(alpha, 1));
    Mat2c::outer(c0, c0).scale(e) + Mat2c::outer(c1, c1).scale(e.conj())
}

/// σ_se = U_φ† σ U_φ, componentwise.
pub fn spin_echo_sigma(phi: f64, alpha: Axis) -> [Mat2c; 3] {
    let u = spin_echo_unitary(phi, alpha);
    let ud = u.adjoint();
    crate::spin_algebra::pauli().map(|s| ud * s * u)
}
