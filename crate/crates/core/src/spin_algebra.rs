//! Real/complex 3-vectors, two-component spinors and 2×2 complex matrices.
//!
//! Pauli matrices live in the standard z basis. Spinors quantized along other
//! axes are obtained with [`rotation_matrix`] rather than by writing down new
//! matrices.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for unit-norm preconditions.
pub const UNIT_TOL: f64 = 1e-12;

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Real 3-vector.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self { Self { x, y, z } }

    pub const fn zero() -> Self { Self::new(0.0, 0.0, 0.0) }

    pub const fn ex() -> Self { Self::new(1.0, 0.0, 0.0) }

    pub const fn ey() -> Self { Self::new(0.0, 1.0, 0.0) }

    pub const fn ez() -> Self { Self::new(0.0, 0.0, 1.0) }

    pub fn from_array(a: [f64; 3]) -> Self { Self::new(a[0], a[1], a[2]) }

    pub fn to_array(self) -> [f64; 3] { [self.x, self.y, self.z] }

    /// Unit vector with polar angle `theta` and azimuth `phi`.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::new(st * cp, st * sp, ct)
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_sqr(self) -> f64 { self.dot(self) }

    pub fn norm(self) -> f64 { self.norm_sqr().sqrt() }

    pub fn scale(self, a: f64) -> Self { Self::new(a * self.x, a * self.y, a * self.z) }

    /// `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_complex(self) -> CVec3 {
        CVec3::new(self.x.into(), self.y.into(), self.z.into())
    }

    /// Angle between two nonzero vectors, robust near 0 and π.
    pub fn angle_to(self, other: Self) -> f64 {
        self.cross(other).norm().atan2(self.dot(other))
    }
}

impl Add for Vec3 {
    type Output = Self;
    fn add(self, o: Self) -> Self { Self::new(self.x + o.x, self.y + o.y, self.z + o.z) }
}

impl Sub for Vec3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self { Self::new(self.x - o.x, self.y - o.y, self.z - o.z) }
}

impl Neg for Vec3 {
    type Output = Self;
    fn neg(self) -> Self { Self::new(-self.x, -self.y, -self.z) }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 { v.scale(self) }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Self) { *self = *self + o; }
}

/// Complex 3-vector. `dot` is bilinear (no conjugation); conjugate explicitly.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CVec3 {
    pub x: C64,
    pub y: C64,
    pub z: C64,
}

impl CVec3 {
    pub const fn new(x: C64, y: C64, z: C64) -> Self { Self { x, y, z } }

    pub const fn zero() -> Self { Self::new(ZERO, ZERO, ZERO) }

    pub fn from_array(a: [C64; 3]) -> Self { Self::new(a[0], a[1], a[2]) }

    pub fn to_array(self) -> [C64; 3] { [self.x, self.y, self.z] }

    pub fn conj(self) -> Self { Self::new(self.x.conj(), self.y.conj(), self.z.conj()) }

    pub fn dot(self, o: Self) -> C64 { self.x * o.x + self.y * o.y + self.z * o.z }

    pub fn dot_real(self, v: Vec3) -> C64 { self.x * v.x + self.y * v.y + self.z * v.z }

    pub fn cross(self, o: Self) -> Self { cross_c(self, o) }

    pub fn norm_sqr(self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()
    }

    pub fn scale(self, a: C64) -> Self { Self::new(a * self.x, a * self.y, a * self.z) }

    pub fn scale_re(self, a: f64) -> Self { Self::new(self.x * a, self.y * a, self.z * a) }

    pub fn re(self) -> Vec3 { Vec3::new(self.x.re, self.y.re, self.z.re) }

    pub fn im(self) -> Vec3 { Vec3::new(self.x.im, self.y.im, self.z.im) }

    pub fn is_finite(self) -> bool {
        self.to_array().iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest componentwise modulus of `self - o`.
    pub fn max_abs_diff(self, o: Self) -> f64 {
        let d = self - o;
        d.x.norm().max(d.y.norm()).max(d.z.norm())
    }
}

impl Add for CVec3 {
    type Output = Self;
    fn add(self, o: Self) -> Self { Self::new(self.x + o.x, self.y + o.y, self.z + o.z) }
}

impl Sub for CVec3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self { Self::new(self.x - o.x, self.y - o.y, self.z - o.z) }
}

impl Neg for CVec3 {
    type Output = Self;
    fn neg(self) -> Self { Self::new(-self.x, -self.y, -self.z) }
}

/// Componentwise complex cross product `u × v` (no conjugation).
pub fn cross_c(u: CVec3, v: CVec3) -> CVec3 {
    CVec3::new(
        u.y * v.z - u.z * v.y,
        u.z * v.x - u.x * v.z,
        u.x * v.y - u.y * v.x,
    )
}

/// Two-component spinor; amplitudes refer to the z basis unless stated otherwise.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spinor2 {
    pub up: C64,
    pub down: C64,
}

impl Spinor2 {
    pub const fn new(up: C64, down: C64) -> Self { Self { up, down } }

    pub fn norm_sqr(self) -> f64 { self.up.norm_sqr() + self.down.norm_sqr() }

    /// ⟨self|other⟩
    pub fn inner(self, other: Self) -> C64 {
        self.up.conj() * other.up + self.down.conj() * other.down
    }

    pub fn scale(self, a: C64) -> Self { Self::new(a * self.up, a * self.down) }

    pub fn component(self, sigma: usize) -> C64 {
        if sigma == 0 { self.up } else { self.down }
    }

    fn check_unit(self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnitSpinor { norm_sqr: n });
        }
        Ok(())
    }
}

impl Add for Spinor2 {
    type Output = Self;
    fn add(self, o: Self) -> Self { Self::new(self.up + o.up, self.down + o.down) }
}

/// 2×2 complex matrix, row-major.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Mat2c(pub [[C64; 2]; 2]);

impl Mat2c {
    pub const fn identity() -> Self { Self([[ONE, ZERO], [ZERO, ONE]]) }

    pub const fn zero() -> Self { Self([[ZERO; 2]; 2]) }

    pub const fn sigma_x() -> Self { Self([[ZERO, ONE], [ONE, ZERO]]) }

    pub const fn sigma_y() -> Self { Self([[ZERO, C64::new(0.0, -1.0)], [I, ZERO]]) }

    pub const fn sigma_z() -> Self { Self([[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]]) }

    /// |a⟩⟨b|
    pub fn outer(a: Spinor2, b: Spinor2) -> Self {
        Self([
            [a.up * b.up.conj(), a.up * b.down.conj()],
            [a.down * b.up.conj(), a.down * b.down.conj()],
        ])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> C64 { self.0[0][0] + self.0[1][1] }

    pub fn scale(&self, a: C64) -> Self {
        let m = &self.0;
        Self([[a * m[0][0], a * m[0][1]], [a * m[1][0], a * m[1][1]]])
    }

    pub fn apply(&self, s: Spinor2) -> Spinor2 {
        let m = &self.0;
        Spinor2::new(m[0][0] * s.up + m[0][1] * s.down, m[1][0] * s.up + m[1][1] * s.down)
    }

    /// ⟨a|M|b⟩
    pub fn sandwich(&self, a: Spinor2, b: Spinor2) -> C64 { a.inner(self.apply(b)) }

    /// Largest entrywise modulus of `self - o`.
    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                d = d.max((self.0[r][c] - o.0[r][c]).norm());
            }
        }
        d
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (*self * self.adjoint()).max_abs_diff(&Self::identity()) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool { self.max_abs_diff(&self.adjoint()) <= tol }
}

impl Mul for Mat2c {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (&self.0, &o.0);
        let mut out = [[ZERO; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Self(out)
    }
}

impl Add for Mat2c {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut out = self.0;
        for r in 0..2 {
            for c in 0..2 {
                out[r][c] += o.0[r][c];
            }
        }
        Self(out)
    }
}

impl Sub for Mat2c {
    type Output = Self;
    fn sub(self, o: Self) -> Self { self + o.scale(-ONE) }
}

/// (σ^x, σ^y, σ^z) in the z basis.
pub const fn pauli() -> [Mat2c; 3] { [Mat2c::sigma_x(), Mat2c::sigma_y(), Mat2c::sigma_z()] }

/// ⟨a|σ|b⟩ without the unit-norm check.
pub fn sigma_element(a: Spinor2, b: Spinor2) -> CVec3 {
    // σx, σy, σz contracted by hand
    let (au, ad) = (a.up.conj(), a.down.conj());
    CVec3::new(
        au * b.down + ad * b.up,
        -I * au * b.down + I * ad * b.up,
        au * b.up - ad * b.down,
    )
}

/// ⟨a|σ|b⟩ for unit spinors.
pub fn pauli_expectation(a: Spinor2, b: Spinor2) -> Result<CVec3> {
    a.check_unit()?;
    b.check_unit()?;
    Ok(sigma_element(a, b))
}

/// Polar/azimuthal angles of a quantization axis.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub theta: f64,
    pub phi: f64,
}

impl Angles {
    pub const fn new(theta: f64, phi: f64) -> Self { Self { theta, phi } }

    pub fn unit(self) -> Vec3 { Vec3::from_spherical(self.theta, self.phi) }
}

/// Cartesian quantization axis label.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn angles(self) -> Angles {
        use std::f64::consts::FRAC_PI_2;
        match self {
            Axis::X => Angles::new(FRAC_PI_2, 0.0),
            Axis::Y => Angles::new(FRAC_PI_2, FRAC_PI_2),
            Axis::Z => Angles::new(0.0, 0.0),
        }
    }

    pub fn unit(self) -> Vec3 {
        match self {
            Axis::X => Vec3::ex(),
            Axis::Y => Vec3::ey(),
            Axis::Z => Vec3::ez(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// Up (`nu = 0`) or down (`nu = 1`) spinor along the axis `a`:
/// χ_0 = (c, e^{iφ} s), χ_1 = (−s, e^{iφ} c) with half-angle c, s.
pub fn basis_spinor(a: Angles, nu: usize) -> Spinor2 {
    let (s, c) = (0.5 * a.theta).sin_cos();
    let e = C64::from_polar(1.0, a.phi);
    if nu == 0 {
        Spinor2::new(c.into(), e * s)
    } else {
        Spinor2::new((-s).into(), e * c)
    }
}

/// R^β with χ^β_ν = Σ_μ R^β_{νμ} χ^α_μ.
pub fn rotation_matrix(beta: Angles, alpha: Angles) -> Mat2c {
    let (sp, cp) = (0.5 * beta.theta).sin_cos();
    let (s, c) = (0.5 * alpha.theta).sin_cos();
    let e = C64::from_polar(1.0, beta.phi - alpha.phi);
    Mat2c([
        [cp * c + e * (sp * s), -cp * s + e * (sp * c)],
        [-sp * c + e * (cp * s), sp * s + e * (cp * c)],
    ])
}
