//! Two-fermion particle-entangled probes: antisymmetric basis functions,
//! detector out-states, and potential matrix elements on a periodic toy box.
//!
//! Spin labels σ ∈ {0, 1} index spinor components; χ^α_ν(σ) is component σ of
//! the spinor along axis α. Plane waves are box-normalized, 1/L³ per pair.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probe::NEUTRON_E_U;
use crate::spin_algebra::{basis_spinor, rotation_matrix, Angles, Spinor2, Vec3};

/// Largest lattice side supported by the dense oracles.
pub const MAX_LATTICE: usize = 8;

/// Tolerance below which two momenta count as equal.
const SAME_K_TOL: f64 = 1e-12;

/// x_A = (r_A, σ_A), x_B = (r_B, σ_B).
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoFermionPoint {
    pub r_a: Vec3,
    pub r_b: Vec3,
    pub sigma_a: u8,
    pub sigma_b: u8,
}

impl TwoFermionPoint {
    pub fn new(r_a: Vec3, r_b: Vec3, sigma_a: u8, sigma_b: u8) -> Self { Self { r_a, r_b, sigma_a, sigma_b } }

    /// x_A ↔ x_B.
    pub fn exchanged(&self) -> Self { Self::new(self.r_b, self.r_a, self.sigma_b, self.sigma_a) }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisTag {
    A,
    B,
    C(u8),
}

/// One basis function a^ξ, b^ξ or c^ν with momenta (k_A, k_B) and reference axis α.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisKind {
    pub tag: BasisTag,
    pub k_a: Vec3,
    pub k_b: Vec3,
    pub xi: Vec3,
    pub alpha: Angles,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BasisValue {
    pub value: C64,
    /// b or c requested at k_A = k_B, where the function vanishes identically.
    pub degenerate: bool,
}

fn same_k(a: Vec3, b: Vec3) -> bool { (a - b).norm() <= SAME_K_TOL * (1.0 + a.norm().max(b.norm())) }

fn spin_label(s: u8) -> Result<usize> {
    match s {
        0 | 1 => Ok(s as usize),
        _ => Err(Error::InvalidParameter(format!("spin label must be 0 or 1, got {s}"))),
    }
}

fn check_box(l: f64) -> Result<()> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidParameter("box length must be positive".into()));
    }
    Ok(())
}

/// D^± over the four (σ_A, σ_B) spin configurations, index 2σ_A + σ_B.
pub fn d_pm(k_a: Vec3, k_b: Vec3, xi: Vec3, alpha: Angles, plus: bool) -> [C64; 4] {
    let q = 0.5 * (k_a - k_b).dot(xi);
    let (em, ep) = (C64::from_polar(1.0, -q), C64::from_polar(1.0, q));
    let (x0, x1) = (basis_spinor(alpha, 0), basis_spinor(alpha, 1));
    let sign = if plus { 1.0 } else { -1.0 };
    let mut out = [C64::new(0.0, 0.0); 4];
    for sa in 0..2 {
        for sb in 0..2 {
            out[2 * sa + sb] = em * x0.component(sa) * x1.component(sb) + ep * x1.component(sa) * x0.component(sb) * sign;
        }
    }
    out
}

fn plane(k_a: Vec3, k_b: Vec3, p: &TwoFermionPoint) -> C64 { C64::from_polar(1.0, k_a.dot(p.r_a) + k_b.dot(p.r_b)) }

/// Evaluates a^ξ, b^ξ or c^ν at `p` in a box of side `box_l`.
pub fn basis_eval(kind: &BasisKind, p: &TwoFermionPoint, box_l: f64) -> Result<BasisValue> {
    check_box(box_l)?;
    let (sa, sb) = (spin_label(p.sigma_a)?, spin_label(p.sigma_b)?);
    let same = same_k(kind.k_a, kind.k_b);
    let l3 = box_l.powi(3);
    let (ka, kb) = (kind.k_a, kind.k_b);
    let value = match kind.tag {
        BasisTag::A => {
            let d = d_pm(ka, kb, kind.xi, kind.alpha, false);
            let ds = d_pm(kb, ka, kind.xi, kind.alpha, false);
            let norm = 1.0 / (2.0 * l3 * if same { 2f64.sqrt() } else { 1.0 });
            (plane(ka, kb, p) * d[2 * sa + sb] + plane(kb, ka, p) * ds[2 * sa + sb]) * norm
        }
        BasisTag::B | BasisTag::C(_) if same => return Ok(BasisValue { value: C64::new(0.0, 0.0), degenerate: true }),
        BasisTag::B => {
            let d = d_pm(ka, kb, kind.xi, kind.alpha, true);
            let ds = d_pm(kb, ka, kind.xi, kind.alpha, true);
            (plane(ka, kb, p) * d[2 * sa + sb] - plane(kb, ka, p) * ds[2 * sa + sb]) / (2.0 * l3)
        }
        BasisTag::C(nu) => {
            let x = basis_spinor(kind.alpha, spin_label(nu)?);
            let s = x.component(sa) * x.component(sb);
            (plane(ka, kb, p) - plane(kb, ka, p)) * s / (2f64.sqrt() * l3)
        }
    };
    Ok(BasisValue { value, degenerate: false })
}

/// Two spin-resolving detectors: particle with k′_A seen along β in state ν,
/// particle with k′_B seen along γ in state ν′.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorState {
    pub k_a: Vec3,
    pub k_b: Vec3,
    pub beta: Angles,
    pub gamma: Angles,
    pub nu: u8,
    pub nu_p: u8,
}

/// Ψ_out evaluated directly from its definition.
pub fn out_state_eval(out: &DetectorState, p: &TwoFermionPoint, box_l: f64) -> Result<C64> {
    check_box(box_l)?;
    let (sa, sb) = (spin_label(p.sigma_a)?, spin_label(p.sigma_b)?);
    let xb = basis_spinor(out.beta, spin_label(out.nu)?);
    let xg = basis_spinor(out.gamma, spin_label(out.nu_p)?);
    let direct = plane(out.k_a, out.k_b, p) * xb.component(sa) * xg.component(sb);
    let swapped = plane(out.k_b, out.k_a, p) * xg.component(sa) * xb.component(sb);
    Ok((direct - swapped) / (2f64.sqrt() * box_l.powi(3)))
}

/// Ψ_out expanded over the ξ = 0 basis {a⁰, b⁰, c⁰, c¹} along α.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutDecomposition {
    pub a: C64,
    pub b: C64,
    pub c: [C64; 2],
    pub k_a: Vec3,
    pub k_b: Vec3,
    pub alpha: Angles,
}

impl OutDecomposition {
    /// Reconstructs Ψ_out at `p` from the coefficients.
    pub fn eval(&self, p: &TwoFermionPoint, box_l: f64) -> Result<C64> {
        let basis = |tag| BasisKind { tag, k_a: self.k_a, k_b: self.k_b, xi: Vec3::zero(), alpha: self.alpha };
        let mut v = self.a * basis_eval(&basis(BasisTag::A), p, box_l)?.value;
        v += self.b * basis_eval(&basis(BasisTag::B), p, box_l)?.value;
        for (mu, c) in self.c.iter().enumerate() {
            v += c * basis_eval(&basis(BasisTag::C(mu as u8)), p, box_l)?.value;
        }
        Ok(v)
    }
}

/// Coefficients R^β_{νμ}R^γ_{ν′μ} (c^μ) and (R^β_{ν0}R^γ_{ν′1} ∓ R^β_{ν1}R^γ_{ν′0})/√2 (a, b).
pub fn out_state_decompose(out: &DetectorState, alpha: Angles) -> Result<OutDecomposition> {
    if same_k(out.k_a, out.k_b) {
        return Err(Error::DegenerateBasis);
    }
    let (nu, nup) = (spin_label(out.nu)?, spin_label(out.nu_p)?);
    let rb = rotation_matrix(out.beta, alpha).0;
    let rg = rotation_matrix(out.gamma, alpha).0;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (p, m) = (rb[nu][0] * rg[nup][1], rb[nu][1] * rg[nup][0]);
    Ok(OutDecomposition {
        a: (p - m) * s,
        b: (p + m) * s,
        c: [rb[nu][0] * rg[nup][0], rb[nu][1] * rg[nup][1]],
        k_a: out.k_a,
        k_b: out.k_b,
        alpha,
    })
}

/// Periodic cubic lattice r = (i, j, l)·L/N, i, j, l ∈ 0..N.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyLattice {
    pub n: usize,
    pub box_l: f64,
}

impl ToyLattice {
    pub fn validate(&self) -> Result<()> {
        if self.n > MAX_LATTICE {
            return Err(Error::LatticeTooLarge(self.n));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter("lattice needs at least 2 points per axis".into()));
        }
        check_box(self.box_l)
    }

    pub fn spacing(&self) -> f64 { self.box_l / self.n as f64 }

    /// Lattice-commensurate momentum 2πm/L.
    pub fn momentum(&self, m: [i32; 3]) -> Vec3 {
        let f = 2.0 * std::f64::consts::PI / self.box_l;
        Vec3::new(f * m[0] as f64, f * m[1] as f64, f * m[2] as f64)
    }

    /// All single-particle sites, x-major.
    pub fn sites(&self) -> Vec<Vec3> {
        let h = self.spacing();
        let n = self.n;
        (0..n * n * n)
            .map(|i| Vec3::new((i / (n * n)) as f64 * h, ((i / n) % n) as f64 * h, (i % n) as f64 * h))
            .collect()
    }
}

/// The particle-entangled in-state ½ Σ_{k_A,k_B} g̃(k_A) g̃(k_B) a^ξ_{k_A k_B}
/// over a finite mode set (ordered pairs, diagonal included).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntangledInState {
    pub alpha: Angles,
    pub xi: Vec3,
    /// (k, g̃(k)) pairs.
    pub modes: Vec<(Vec3, C64)>,
}

impl EntangledInState {
    pub fn eval(&self, p: &TwoFermionPoint, box_l: f64) -> Result<C64> {
        let mut v = C64::new(0.0, 0.0);
        for &(ka, ga) in &self.modes {
            for &(kb, gb) in &self.modes {
                let kind = BasisKind { tag: BasisTag::A, k_a: ka, k_b: kb, xi: self.xi, alpha: self.alpha };
                v += ga * gb * basis_eval(&kind, p, box_l)?.value;
            }
        }
        Ok(v * 0.5)
    }
}

/// V tabulated over all lattice pairs, index iA·N³ + iB.
struct Tabulated {
    sites: Vec<Vec3>,
    values: Vec<C64>,
    weight: f64,
}

fn tabulate<F>(potential: &F, lattice: &ToyLattice) -> Result<Tabulated>
where
    F: Fn(Vec3, Vec3) -> C64 + Sync,
{
    lattice.validate()?;
    let sites = lattice.sites();
    let m = sites.len();
    let values: Vec<C64> = (0..m * m).into_par_iter().map(|i| potential(sites[i / m], sites[i % m])).collect();
    let (mut dev, mut scale) = (0.0f64, 0.0f64);
    for ia in 0..m {
        for ib in 0..m {
            dev = dev.max((values[ia * m + ib] - values[ib * m + ia]).norm());
            scale = scale.max(values[ia * m + ib].norm());
        }
    }
    if dev > 1e-12 * scale.max(1.0) {
        return Err(Error::AsymmetricPotential { deviation: dev });
    }
    Ok(Tabulated { sites, values, weight: lattice.spacing().powi(6) })
}

impl Tabulated {
    /// Σ h⁶ V(r_A, r_B) e^{i(p_A·r_A + p_B·r_B)}.
    fn fourier(&self, p_a: Vec3, p_b: Vec3) -> C64 {
        let m = self.sites.len();
        let eb: Vec<C64> = self.sites.iter().map(|r| C64::from_polar(1.0, p_b.dot(*r))).collect();
        let rows: Vec<C64> = (0..m)
            .into_par_iter()
            .map(|ia| {
                let row = &self.values[ia * m..(ia + 1) * m];
                let s: C64 = row.iter().zip(&eb).map(|(v, e)| v * e).sum();
                s * C64::from_polar(1.0, p_a.dot(self.sites[ia]))
            })
            .collect();
        rows.iter().sum::<C64>() * self.weight
    }
}

/// ⟨Ψ_out|V|Ψ_in⟩ assembled term by term: for every ordered mode pair, the
/// four phase/spinor terms plus their k_A ↔ k_B image, each a lattice Fourier
/// component of the spin-independent pair potential V(r_A, r_B).
pub fn two_body_matrix_element<F>(
    potential: F,
    input: &EntangledInState,
    out: &DetectorState,
    lattice: &ToyLattice,
) -> Result<C64>
where
    F: Fn(Vec3, Vec3) -> C64 + Sync,
{
    let tab = tabulate(&potential, lattice)?;
    let (nu, nup) = (spin_label(out.nu)?, spin_label(out.nu_p)?);
    let xb = basis_spinor(out.beta, nu);
    let xg = basis_spinor(out.gamma, nup);
    let x = [basis_spinor(input.alpha, 0), basis_spinor(input.alpha, 1)];
    // χ^β†_ν χ^α_μ and χ^γ†_ν′ χ^α_μ
    let bm = [xb.inner(x[0]), xb.inner(x[1])];
    let gm = [xg.inner(x[0]), xg.inner(x[1])];
    let (kao, kbo) = (out.k_a, out.k_b);

    let bracket = |ka: Vec3, kb: Vec3| -> C64 {
        let q = 0.5 * (ka - kb).dot(input.xi);
        let (em, ep) = (C64::from_polar(1.0, -q), C64::from_polar(1.0, q));
        let direct = tab.fourier(ka - kao, kb - kbo);
        let crossed = tab.fourier(ka - kbo, kb - kao);
        direct * em * bm[0] * gm[1] + crossed * ep * gm[1] * bm[0] - crossed * em * gm[0] * bm[1]
            - direct * ep * bm[1] * gm[0]
    };

    let mut total = C64::new(0.0, 0.0);
    for &(ka, ga) in &input.modes {
        for &(kb, gb) in &input.modes {
            let w = ga * gb / if same_k(ka, kb) { 2.0 } else { 2f64.sqrt() };
            total += w * (bracket(ka, kb) + bracket(kb, ka));
        }
    }
    Ok(total / (4.0 * lattice.box_l.powi(6)))
}

/// Brute-force Σ_{r_A, r_B, σ_A, σ_B} h⁶ Ψ_out* V Ψ_in on the lattice.
pub fn lattice_matrix_element<F>(
    potential: F,
    input: &EntangledInState,
    out: &DetectorState,
    lattice: &ToyLattice,
) -> Result<C64>
where
    F: Fn(Vec3, Vec3) -> C64 + Sync,
{
    let tab = tabulate(&potential, lattice)?;
    let m = tab.sites.len();
    let l = lattice.box_l;
    let rows: Vec<Result<C64>> = (0..m)
        .into_par_iter()
        .map(|ia| {
            let mut s = C64::new(0.0, 0.0);
            for ib in 0..m {
                let v = tab.values[ia * m + ib];
                for sa in 0..2 {
                    for sb in 0..2 {
                        let p = TwoFermionPoint::new(tab.sites[ia], tab.sites[ib], sa, sb);
                        s += out_state_eval(out, &p, l)?.conj() * v * input.eval(&p, l)?;
                    }
                }
            }
            Ok(s)
        })
        .collect();
    let mut total = C64::new(0.0, 0.0);
    for r in rows {
        total += r?;
    }
    Ok(total * tab.weight)
}

/// Single-particle bracket ⟨k′, χ′|v|k, χ⟩ with 1/L^{3/2} plane waves.
pub fn single_particle_bracket<F>(
    v: &F,
    k_out: Vec3,
    spin_out: Spinor2,
    k_in: Vec3,
    spin_in: Spinor2,
    lattice: &ToyLattice,
) -> Result<C64>
where
    F: Fn(Vec3) -> C64,
{
    lattice.validate()?;
    let h3 = lattice.spacing().powi(3);
    let s: C64 = lattice.sites().iter().map(|&r| v(r) * C64::from_polar(1.0, (k_in - k_out).dot(r))).sum();
    Ok(s * h3 / lattice.box_l.powi(3) * spin_out.inner(spin_in))
}

/// ⟨Ψ_out|v⊗v|Ψ_in⟩ for a product potential, built only from single-particle
/// brackets.
pub fn product_potential_matrix_element<F>(
    v: F,
    input: &EntangledInState,
    out: &DetectorState,
    lattice: &ToyLattice,
) -> Result<C64>
where
    F: Fn(Vec3) -> C64,
{
    lattice.validate()?;
    let xb = basis_spinor(out.beta, spin_label(out.nu)?);
    let xg = basis_spinor(out.gamma, spin_label(out.nu_p)?);
    let x = [basis_spinor(input.alpha, 0), basis_spinor(input.alpha, 1)];
    let br = |ko: Vec3, so: Spinor2, ki: Vec3, si: Spinor2| single_particle_bracket(&v, ko, so, ki, si, lattice);
    let bracket = |ka: Vec3, kb: Vec3| -> Result<C64> {
        let q = 0.5 * (ka - kb).dot(input.xi);
        let (em, ep) = (C64::from_polar(1.0, -q), C64::from_polar(1.0, q));
        Ok(em * br(out.k_a, xb, ka, x[0])? * br(out.k_b, xg, kb, x[1])?
            + ep * br(out.k_b, xg, ka, x[1])? * br(out.k_a, xb, kb, x[0])?
            - em * br(out.k_b, xg, ka, x[0])? * br(out.k_a, xb, kb, x[1])?
            - ep * br(out.k_a, xb, ka, x[1])? * br(out.k_b, xg, kb, x[0])?)
    };
    let mut total = C64::new(0.0, 0.0);
    for &(ka, ga) in &input.modes {
        for &(kb, gb) in &input.modes {
            let w = ga * gb / if same_k(ka, kb) { 2.0 } else { 2f64.sqrt() };
            total += w * (bracket(ka, kb)? + bracket(kb, ka)?);
        }
    }
    Ok(total * 0.25)
}

/// C̃ = m² k′_A k′_B / (16 (2π)⁴ ℏ² (I_A + I_B)) with ℏ = 1 and
/// m = 1/(2 E_U) in meV⁻¹ Å⁻².
pub fn c_tilde(k_a_out: f64, k_b_out: f64, flux_a: f64, flux_b: f64) -> Result<f64> {
    let flux = flux_a + flux_b;
    if !(flux > 0.0 && flux.is_finite()) {
        return Err(Error::InvalidParameter("combined flux must be positive".into()));
    }
    let m = 1.0 / (2.0 * NEUTRON_E_U);
    Ok(m * m * k_a_out * k_b_out / (16.0 * (2.0 * std::f64::consts::PI).powi(4) * flux))
}

/// C̃ Σ_{ν,ν′} |⟨Ψ_out^{νν′}|V|Ψ_in⟩|² for fixed detector momenta and axes.
/// The energy deltas are not modelled; this is the structural integrand only.
pub fn coincidence_integrand<F>(
    potential: F,
    input: &EntangledInState,
    detectors: (Vec3, Vec3, Angles, Angles),
    fluxes: (f64, f64),
    lattice: &ToyLattice,
) -> Result<f64>
where
    F: Fn(Vec3, Vec3) -> C64 + Sync,
{
    let (k_a, k_b, beta, gamma) = detectors;
    let mut sum = 0.0;
    for nu in 0..2 {
        for nu_p in 0..2 {
            let out = DetectorState { k_a, k_b, beta, gamma, nu, nu_p };
            sum += two_body_matrix_element(&potential, input, &out, lattice)?.norm_sqr();
        }
    }
    Ok(c_tilde(k_a.norm(), k_b.norm(), fluxes.0, fluxes.1)? * sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_rotation_coefficients() {
        let alpha = Angles { theta: 0.7, phi: -0.4 };
        let out = DetectorState {
            k_a: Vec3::ex(),
            k_b: Vec3::ey(),
            beta: alpha,
            gamma: alpha,
            nu: 0,
            nu_p: 1,
        };
        let d = out_state_decompose(&out, alpha).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d.a - s).norm() < 1e-15 && (d.b - s).norm() < 1e-15);
        assert!(d.c.iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn degenerate_basis() {
        let k = Vec3::new(0.1, 0.2, 0.3);
        let kind = BasisKind { tag: BasisTag::B, k_a: k, k_b: k, xi: Vec3::ez(), alpha: Angles { theta: 0.0, phi: 0.0 } };
        let p = TwoFermionPoint::new(Vec3::ex(), Vec3::ey(), 0, 1);
        let v = basis_eval(&kind, &p, 2.0).unwrap();
        assert!(v.degenerate && v.value == C64::new(0.0, 0.0));
        let out = DetectorState { k_a: k, k_b: k, beta: kind.alpha, gamma: kind.alpha, nu: 0, nu_p: 0 };
        assert_eq!(out_state_decompose(&out, kind.alpha), Err(Error::DegenerateBasis));
    }

    #[test]
    fn lattice_limits() {
        assert_eq!(ToyLattice { n: 9, box_l: 1.0 }.validate(), Err(Error::LatticeTooLarge(9)));
        assert!(ToyLattice { n: 4, box_l: 1.0 }.validate().is_ok());
    }
}
