//! Quadrature rules over the incoming momentum distribution: Gauss–Legendre
//! in |k| and cos θ, periodic trapezoid in φ, on a cap around the beam axis.

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin_algebra::Vec3;

/// Node counts, truncation and refinement policy.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes in |k|.
    pub radial_nodes: usize,
    /// Gauss–Legendre nodes in cos θ over the cap.
    pub polar_nodes: usize,
    /// Trapezoid nodes in φ.
    pub azimuthal_nodes: usize,
    /// Half-width of the integration domain in units of σ_k = √2/Δ.
    pub truncation: f64,
    /// Node-count multiplier of the refined estimate.
    pub refinement: usize,
    /// Relative tolerance between coarse and refined estimates.
    pub rel_tol: f64,
    /// Absolute tolerance between coarse and refined estimates.
    pub abs_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            radial_nodes: 64,
            polar_nodes: 32,
            azimuthal_nodes: 64,
            truncation: 6.0,
            refinement: 2,
            rel_tol: 1e-3,
            abs_tol: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.radial_nodes < 4 || self.polar_nodes < 4 || self.azimuthal_nodes < 4 {
            return Err(Error::InvalidParameter("quadrature node counts must be at least 4".into()));
        }
        if !(self.truncation >= 3.0 && self.truncation.is_finite()) {
            return Err(Error::InvalidParameter("quadrature truncation must be at least 3 σ_k".into()));
        }
        if self.refinement < 2 {
            return Err(Error::InvalidParameter("quadrature refinement factor must be at least 2".into()));
        }
        if !(self.rel_tol >= 0.0 && self.abs_tol >= 0.0) {
            return Err(Error::InvalidParameter("quadrature tolerances must be non-negative".into()));
        }
        Ok(())
    }

    /// Every node count multiplied by the refinement factor.
    pub fn refined(&self) -> Self {
        let r = self.refinement;
        Self {
            radial_nodes: self.radial_nodes * r,
            polar_nodes: self.polar_nodes * r,
            azimuthal_nodes: self.azimuthal_nodes * r,
            ..*self
        }
    }

    /// Whether two estimates agree within tolerance.
    pub fn agrees(&self, coarse: f64, fine: f64) -> bool {
        (fine - coarse).abs() <= self.rel_tol * fine.abs() + self.abs_tol
    }
}

/// (node, weight) pairs of the n-point Gauss–Legendre rule on [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
    let rule = GaussLegendre::new(n).map_err(|e| Error::Quadrature(e.to_string()))?;
    let (half, mid) = (0.5 * (b - a), 0.5 * (b + a));
    let mut nodes: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect();
    nodes.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(nodes)
}

/// Orthonormal frame (e1, e2, n) with n along `axis`; the identity for ẑ.
pub fn frame(axis: Vec3) -> Option<[Vec3; 3]> {
    let n = axis.normalized()?;
    if n == Vec3::ez() {
        return Some([Vec3::ex(), Vec3::ey(), Vec3::ez()]);
    }
    let helper = if n.x.abs() < 0.9 { Vec3::ex() } else { Vec3::ey() };
    let e1 = (helper - n.scale(n.dot(helper))).normalized()?;
    let e2 = n.cross(e1);
    Some([e1, e2, n])
}

/// Unit directions with solid-angle weights on the cap of half-angle `cap`
/// around `axis`. Weights sum to 2π(1 − cos cap).
#[derive(Clone, Debug)]
pub struct CapRule {
    pub dirs: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl CapRule {
    pub fn new(axis: Vec3, cap: f64, polar: usize, azimuthal: usize) -> Result<Self> {
        let [e1, e2, n] = frame(axis).ok_or_else(|| Error::InvalidParameter("zero cap axis".into()))?;
        let u_min = cap.min(std::f64::consts::PI).cos();
        let us = gauss_legendre(polar, u_min, 1.0)?;
        let dphi = 2.0 * std::f64::consts::PI / azimuthal as f64;
        let mut dirs = Vec::with_capacity(polar * azimuthal);
        let mut weights = Vec::with_capacity(polar * azimuthal);
        for &(u, wu) in &us {
            let s = (1.0 - u * u).max(0.0).sqrt();
            for m in 0..azimuthal {
                let (sp, cp) = (dphi * m as f64).sin_cos();
                dirs.push(e1.scale(s * cp) + e2.scale(s * sp) + n.scale(u));
                weights.push(wu * dphi);
            }
        }
        Ok(Self { dirs, weights })
    }

    pub fn len(&self) -> usize { self.dirs.len() }

    pub fn is_empty(&self) -> bool { self.dirs.is_empty() }
}

/// Neumaier-compensated running sum.
#[derive(Copy, Clone, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self { Self::default() }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 { self.sum + self.comp }
}

/// Compensated sum for complex values.
#[derive(Copy, Clone, Debug, Default)]
pub struct CompensatedSumC {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl CompensatedSumC {
    pub fn add(&mut self, z: C64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> C64 { C64::new(self.re.value(), self.im.value()) }
}
