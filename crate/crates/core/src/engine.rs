//! Wave-packet differential cross-section and scattered polarization.
//!
//! The momentum-magnitude delta (k1 = k2) and the energy delta are consumed
//! analytically: for every radial node k1 the outgoing magnitude k′ sits on the
//! channel's energy shell, leaving two solid-angle integrals over the incoming
//! packet. Reported values are dσ/dΩ in units of r0²:
//!
//!   dσ/dΩ = 1/(4π² I) ∫dk1 k1³ k′ ∫dΩ1 ∫dΩ2 g(k1) g(k2) S(κ1, κ2)/4
//!
//! where S is F·h summed over the channel. The default kernel factorizes the
//! double angular integral as a squared amplitude, which is exact and O(N).

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dimer::{site_spin, State4, TargetState};
use crate::error::{Error, Result};
use crate::oracle::{oracle_polarization, oracle_response};
use crate::probe::{
    chi_spinor, effective_axis, gaussian_amplitude, spin_echo_sigma, theta_phase, time_integrated_flux,
    FluxConvention, ProbeConfig, NEUTRON_E_U,
};
use crate::quadrature::{gauss_legendre, CapRule, CompensatedSum, CompensatedSumC, QuadratureSpec};
use crate::response::{pw_response, response_term, Channel, ScatteringPair, Transition};
use crate::spin_algebra::{pauli, Axis, Mat2c, Spinor2, Vec3};

/// r0² (classical electron radius squared) in barns.
pub const R0_SQUARED_BARN: f64 = 0.079_407_877;

/// Directions closer than this many σ_k/k0 to the beam are refused.
pub const FORWARD_EXCLUSION: f64 = 8.0;

/// How the double angular integral is evaluated.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// Squared amplitude of the packet-averaged scattering operator.
    #[default]
    Amplitude,
    /// Pairwise closed-form F·h/4 (O(N²); for cross-checks).
    ClosedForm,
    /// Pairwise dense operator contraction (O(N²); for cross-checks).
    Oracle,
}

/// Quadrature, flux normalization and kernel choice.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EngineOptions {
    pub quadrature: QuadratureSpec,
    pub flux: FluxConvention,
    pub kernel: Kernel,
}

/// Outgoing magnitude on the energy shell of a channel.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Shell {
    Open(f64),
    Closed,
}

/// k′² = k1² + 4Jζ/E_U with E_U = ℏ²/2m, i.e. k′² = k1² + 8mJζ/ℏ².
pub fn energy_shell(k_in: f64, j: f64, transition: Transition) -> Shell {
    let k2 = k_in * k_in + 4.0 * j * transition.zeta() as f64 / NEUTRON_E_U;
    if k2 > 0.0 { Shell::Open(k2.sqrt()) } else { Shell::Closed }
}

/// Converged cross-section of one channel in one direction.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcsEstimate {
    /// Refined estimate (reported value), r0²/sr.
    pub value: f64,
    /// Estimate at the base node counts.
    pub coarse: f64,
    /// True when the energy shell is closed over the whole packet.
    pub closed: bool,
}

/// Converged polarization of one or more channels in one direction.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizationEstimate {
    pub vector: Vec3,
    pub dcs: f64,
}

#[derive(Copy, Clone, Debug, Default)]
struct Integrated {
    dcs: f64,
    pol: Vec3,
}

/// Population weight the closed-form rows of `channel` carry for `target`.
pub fn channel_weight(target: &TargetState, channel: Channel) -> Result<f64> {
    target.channel_states(channel)?;
    Ok(target
        .channels()?
        .into_iter()
        .find(|(c, _)| c.transition == channel.transition)
        .map(|(_, w)| w)
        .unwrap_or(0.0))
}

fn check_direction(probe: &ProbeConfig, khat_out: Vec3) -> Result<Vec3> {
    let k = khat_out
        .normalized()
        .ok_or_else(|| Error::InvalidParameter("outgoing direction must be nonzero".into()))?;
    let limit = FORWARD_EXCLUSION * probe.momentum_width() / probe.k0.norm();
    let angle = k.angle_to(probe.k0);
    if angle < limit {
        return Err(Error::ForwardCone { angle, limit });
    }
    Ok(k)
}

/// Weighted initial states with the final projector already applied to
/// every ŝ^b_j λ.
struct PreparedState {
    weight: f64,
    // u[j][b][m] = (P_final ŝ^b_j λ)_m
    u: [[[C64; 4]; 3]; 2],
}

fn prepare(target: &TargetState, channel: Channel) -> Result<Vec<PreparedState>> {
    let states = target.channel_states(channel)?;
    let p = states.final_projector();
    Ok(states
        .initial
        .iter()
        .map(|(w, lam)| {
            let mut u = [[[C64::new(0.0, 0.0); 4]; 3]; 2];
            for (j, uj) in u.iter_mut().enumerate() {
                for b in Axis::ALL {
                    let v: State4 = p * (site_spin(j, b) * lam);
                    for m in 0..4 {
                        uj[b.index()][m] = v[m];
                    }
                }
            }
            PreparedState { weight: *w, u }
        })
        .collect())
}

/// σ^a χ for a = x, y, z.
fn sigma_chi(chi: Spinor2) -> [Spinor2; 3] {
    let i = C64::i();
    [
        Spinor2::new(chi.down, chi.up),
        Spinor2::new(-i * chi.down, i * chi.up),
        Spinor2::new(chi.up, -chi.down),
    ]
}

struct RadialDomain {
    lo: f64,
    hi: f64,
}

fn radial_domain(probe: &ProbeConfig, target: &TargetState, channel: Channel, trunc: f64) -> Option<RadialDomain> {
    let (k0, s) = (probe.k0.norm(), probe.momentum_width());
    let mut lo = (k0 - trunc * s).max(1e-9 * k0);
    let hi = k0 + trunc * s;
    let thr = -4.0 * target.j * channel.zeta() as f64 / NEUTRON_E_U;
    if thr > 0.0 {
        lo = lo.max(thr.sqrt() * (1.0 + 1e-12));
    }
    (hi > lo).then_some(RadialDomain { lo, hi })
}

/// Incoming node data at one radial node: wavevectors, w·g and Θ.
struct AngularNodes {
    k: Vec<Vec3>,
    wg: Vec<f64>,
    theta: Vec<f64>,
}

fn angular_nodes(probe: &ProbeConfig, cap: &CapRule, k1: f64) -> AngularNodes {
    let mut out = AngularNodes {
        k: Vec::with_capacity(cap.len()),
        wg: Vec::with_capacity(cap.len()),
        theta: Vec::with_capacity(cap.len()),
    };
    for (n, w) in cap.dirs.iter().zip(&cap.weights) {
        let kv = n.scale(k1);
        out.k.push(kv);
        out.wg.push(w * gaussian_amplitude(kv, probe));
        out.theta.push(theta_phase(kv, probe));
    }
    out
}

/// Σ_λ p_λ ‖A_λ‖² and Σ_λ p_λ A_λ† σ A_λ at one radial node.
fn amplitude_node(
    probe: &ProbeConfig,
    target: &TargetState,
    prepared: &[PreparedState],
    nodes: &AngularNodes,
    k_out: Vec3,
    pol_ops: Option<&[Mat2c; 3]>,
) -> Result<Integrated> {
    let half_d = target.d.scale(0.5);
    let mut acc = vec![[[CompensatedSumC::default(); 4]; 2]; prepared.len()];
    for ((kv, &wg), &th) in nodes.k.iter().zip(&nodes.wg).zip(&nodes.theta) {
        let kappa = *kv - k_out;
        let kt = kappa.normalized().ok_or(Error::ZeroMomentumTransfer)?.to_array();
        let ph = kappa.dot(half_d);
        let e = [C64::from_polar(1.0, ph), C64::from_polar(1.0, -ph)];
        let sc = sigma_chi(chi_spinor(th, probe.alpha));
        for (st, a_lam) in prepared.iter().zip(acc.iter_mut()) {
            // Q^a λ = Σ_j e_j (u_j^a − κ̃_a κ̃·u_j)
            let mut q = [[C64::new(0.0, 0.0); 4]; 3];
            for (j, uj) in st.u.iter().enumerate() {
                for m in 0..4 {
                    let t = uj[0][m] * kt[0] + uj[1][m] * kt[1] + uj[2][m] * kt[2];
                    for a in 0..3 {
                        q[a][m] += e[j] * (uj[a][m] - t * kt[a]);
                    }
                }
            }
            for m in 0..4 {
                let mut up = C64::new(0.0, 0.0);
                let mut dn = C64::new(0.0, 0.0);
                for a in 0..3 {
                    up += sc[a].up * q[a][m];
                    dn += sc[a].down * q[a][m];
                }
                a_lam[0][m].add(up * wg);
                a_lam[1][m].add(dn * wg);
            }
        }
    }
    let mut dcs = 0.0;
    let mut pol = Vec3::zero();
    for (st, a_lam) in prepared.iter().zip(&acc) {
        let mut norm = 0.0;
        let mut p = [0.0; 3];
        for m in 0..4 {
            let s = Spinor2::new(a_lam[0][m].value(), a_lam[1][m].value());
            norm += s.norm_sqr();
            if let Some(ops) = pol_ops {
                for (pa, op) in p.iter_mut().zip(ops) {
                    *pa += op.sandwich(s, s).re;
                }
            }
        }
        dcs += st.weight * norm;
        pol += Vec3::from_array(p).scale(st.weight);
    }
    Ok(Integrated { dcs, pol })
}

/// Pairwise evaluation with the closed form or the oracle.
#[allow(clippy::too_many_arguments)]
fn pairwise_node(
    probe: &ProbeConfig,
    target: &TargetState,
    channel: Channel,
    weight: f64,
    nodes: &AngularNodes,
    k_out: Vec3,
    kernel: Kernel,
    echo: Option<Option<f64>>,
) -> Result<Integrated> {
    let mut dcs = CompensatedSumC::default();
    let mut pol = [CompensatedSumC::default(); 3];
    let n = nodes.k.len();
    for i in 0..n {
        for j in 0..n {
            let w = nodes.wg[i] * nodes.wg[j];
            let pair = ScatteringPair::new(nodes.k[i], nodes.k[j], k_out);
            let (t1, t2) = (nodes.theta[i], nodes.theta[j]);
            match (kernel, echo) {
                (Kernel::ClosedForm, None) => {
                    dcs.add(response_term(channel, &pair, t1, t2, probe.alpha, target)? * (0.25 * w));
                }
                (Kernel::Oracle, None) => {
                    dcs.add(oracle_response(&pair, t1, t2, probe.alpha, target, channel)?.value * w);
                }
                (Kernel::Oracle, Some(phi)) => {
                    let t = oracle_polarization(&pair, t1, t2, probe.alpha, target, channel, phi)?;
                    dcs.add(t.denominator * w);
                    for (p, z) in pol.iter_mut().zip(t.numerator.to_array()) {
                        p.add(z * w);
                    }
                }
                _ => {
                    return Err(Error::InvalidParameter(
                        "polarization requires the amplitude or oracle kernel".into(),
                    ))
                }
            }
        }
    }
    Ok(Integrated {
        dcs: weight * dcs.value().re,
        pol: Vec3::new(pol[0].value().re, pol[1].value().re, pol[2].value().re).scale(weight),
    })
}

/// One quadrature pass at fixed node counts. `echo` is `Some(phi)` when the
/// polarization numerator is wanted (`phi` = spin-echo phase, if any).
fn integrate(
    probe: &ProbeConfig,
    target: &TargetState,
    khat: Vec3,
    channel: Channel,
    opts: &EngineOptions,
    quad: &QuadratureSpec,
    echo: Option<Option<f64>>,
) -> Result<Option<Integrated>> {
    let Some(dom) = radial_domain(probe, target, channel, quad.truncation) else { return Ok(None) };
    let k0 = probe.k0.norm();
    let cap_angle = (quad.truncation * probe.momentum_width() / k0).min(std::f64::consts::PI);
    let cap = CapRule::new(probe.k0, cap_angle, quad.polar_nodes, quad.azimuthal_nodes)?;
    let radial = gauss_legendre(quad.radial_nodes, dom.lo, dom.hi)?;
    let prepared = prepare(target, channel)?;
    let weight = channel_weight(target, channel)?;
    let pol_ops: Option<[Mat2c; 3]> = echo.map(|phi| match phi {
        Some(p) => spin_echo_sigma(p, probe.alpha),
        None => pauli(),
    });

    // sequential within a direction; grids parallelize over directions
    let per_node = radial.iter().map(|&(k1, wk)| -> Result<Option<(f64, Integrated)>> {
            let Shell::Open(kp) = energy_shell(k1, target.j, channel.transition) else { return Ok(None) };
            let nodes = angular_nodes(probe, &cap, k1);
            let k_out = khat.scale(kp);
            let r = match opts.kernel {
                Kernel::Amplitude => amplitude_node(probe, target, &prepared, &nodes, k_out, pol_ops.as_ref())?,
                kernel => pairwise_node(probe, target, channel, weight, &nodes, k_out, kernel, echo)?,
            };
            Ok(Some((wk * k1.powi(3) * kp, r)))
    });

    let mut dcs = CompensatedSum::new();
    let mut pol = [CompensatedSum::new(); 3];
    for r in per_node {
        if let Some((w, node)) = r? {
            dcs.add(w * node.dcs);
            for (p, v) in pol.iter_mut().zip(node.pol.to_array()) {
                p.add(w * v);
            }
        }
    }
    let norm = 1.0 / (4.0 * std::f64::consts::PI.powi(2) * time_integrated_flux(probe, opts.flux));
    Ok(Some(Integrated {
        dcs: norm * dcs.value(),
        pol: Vec3::new(pol[0].value(), pol[1].value(), pol[2].value()).scale(norm),
    }))
}

fn validate_inputs(probe: &ProbeConfig, target: &TargetState, opts: &EngineOptions) -> Result<()> {
    probe.validate()?;
    target.validate()?;
    opts.quadrature.validate()
}

/// Converged dσ/dΩ (r0² units) of one channel, including its population weight.
pub fn dcs_direction(
    probe: &ProbeConfig,
    target: &TargetState,
    khat_out: Vec3,
    channel: Channel,
    opts: &EngineOptions,
) -> Result<DcsEstimate> {
    validate_inputs(probe, target, opts)?;
    let khat = check_direction(probe, khat_out)?;
    let q = opts.quadrature;
    let Some(coarse) = integrate(probe, target, khat, channel, opts, &q, None)? else {
        return Ok(DcsEstimate { value: 0.0, coarse: 0.0, closed: true });
    };
    let fine = integrate(probe, target, khat, channel, opts, &q.refined(), None)?.unwrap_or_default();
    if !q.agrees(coarse.dcs, fine.dcs) {
        return Err(Error::Convergence { coarse: coarse.dcs, fine: fine.dcs });
    }
    Ok(DcsEstimate { value: fine.dcs, coarse: coarse.dcs, closed: false })
}

/// Sum over every channel the target populates.
pub fn dcs_total(
    probe: &ProbeConfig,
    target: &TargetState,
    khat_out: Vec3,
    opts: &EngineOptions,
) -> Result<(Vec<(Channel, DcsEstimate)>, f64)> {
    let mut parts = Vec::new();
    let mut total = 0.0;
    for (ch, _) in target.channels()? {
        let e = dcs_direction(probe, target, khat_out, ch, opts)?;
        total += e.value;
        parts.push((ch, e));
    }
    Ok((parts, total))
}

/// Scattered polarization P′ summed over `channels`; `echo_phi` replaces σ by
/// the spin-echo operator σ_se(φ).
pub fn polarization_direction(
    probe: &ProbeConfig,
    target: &TargetState,
    khat_out: Vec3,
    channels: &[Channel],
    opts: &EngineOptions,
    echo_phi: Option<f64>,
) -> Result<PolarizationEstimate> {
    validate_inputs(probe, target, opts)?;
    let khat = check_direction(probe, khat_out)?;
    let q = opts.quadrature;
    let run = |quad: &QuadratureSpec| -> Result<Integrated> {
        let mut tot = Integrated::default();
        for &ch in channels {
            if let Some(r) = integrate(probe, target, khat, ch, opts, quad, Some(echo_phi))? {
                tot.dcs += r.dcs;
                tot.pol += r.pol;
            }
        }
        Ok(tot)
    };
    let coarse = run(&q)?;
    let fine = run(&q.refined())?;
    let scale = q.rel_tol * fine.dcs.abs() + q.abs_tol;
    if (fine.dcs - coarse.dcs).abs() > scale || (fine.pol - coarse.pol).norm() > scale {
        return Err(Error::Convergence { coarse: coarse.dcs, fine: fine.dcs });
    }
    if !(fine.dcs > 0.0) {
        return Err(Error::PolarizationUndefined { denominator: fine.dcs });
    }
    Ok(PolarizationEstimate { vector: fine.pol.scale(1.0 / fine.dcs), dcs: fine.dcs })
}

/// Plane-wave cross-section (r0² units) of one channel including its
/// population weight: p (k′/k0) S^pw(κ0) at Θ0 = k0·ξ + 2φ.
pub fn pw_limit_dcs(probe: &ProbeConfig, target: &TargetState, khat_out: Vec3, channel: Channel) -> Result<f64> {
    let k0 = probe.k0.norm();
    let Shell::Open(kp) = energy_shell(k0, target.j, channel.transition) else { return Ok(0.0) };
    let khat = khat_out
        .normalized()
        .ok_or_else(|| Error::InvalidParameter("outgoing direction must be nonzero".into()))?;
    let kappa = probe.k0 - khat.scale(kp);
    let weight = channel_weight(target, channel)?;
    let c = match target.kind {
        crate::dimer::TargetKind::Triplet { c } => Some(c),
        _ => None,
    };
    let s = pw_response(kappa, target.d, channel.transition, channel.regime, c, probe.theta0(), probe.alpha)?;
    Ok(weight * kp / k0 * s)
}

/// The incident effective polarization axis at the mean momentum.
pub fn incident_axis(probe: &ProbeConfig) -> Vec3 { effective_axis(probe.alpha, probe.theta0()) }

/// (n_θ, n_φ) grid uniform in cos θ (cell midpoints) and φ.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_theta: usize,
    pub n_phi: usize,
    #[serde(default = "neg_one")]
    pub cos_theta_min: f64,
    #[serde(default = "one")]
    pub cos_theta_max: f64,
}

fn neg_one() -> f64 { -1.0 }

fn one() -> f64 { 1.0 }

impl GridSpec {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        Self { n_theta, n_phi, cos_theta_min: -1.0, cos_theta_max: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_theta == 0 || self.n_phi == 0 {
            return Err(Error::InvalidParameter("grid must have at least one node per axis".into()));
        }
        let ok = (-1.0..=1.0).contains(&self.cos_theta_min)
            && (-1.0..=1.0).contains(&self.cos_theta_max)
            && self.cos_theta_min < self.cos_theta_max;
        if !ok {
            return Err(Error::InvalidParameter("grid cos θ range must lie within [-1, 1]".into()));
        }
        Ok(())
    }

    /// (θ, φ) nodes, θ-major.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let du = (self.cos_theta_max - self.cos_theta_min) / self.n_theta as f64;
        let dphi = 2.0 * std::f64::consts::PI / self.n_phi as f64;
        (0..self.n_theta)
            .flat_map(|i| {
                let th = (self.cos_theta_max - (i as f64 + 0.5) * du).acos();
                (0..self.n_phi).map(move |m| (th, dphi * m as f64))
            })
            .collect()
    }
}

/// Why a grid node carries no (or a provisional) value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum NodeStatus {
    Ok,
    /// Every requested channel is energetically closed.
    Closed,
    ForwardCone,
    /// Values hold the refined estimate.
    Convergence { channel: String, coarse: f64, fine: f64 },
    PolarizationUndefined,
    Failed { message: String },
}

impl NodeStatus {
    pub fn label(&self) -> &'static str {
        match self {
            NodeStatus::Ok => "ok",
            NodeStatus::Closed => "closed",
            NodeStatus::ForwardCone => "forward-cone",
            NodeStatus::Convergence { .. } => "convergence",
            NodeStatus::PolarizationUndefined => "polarization-undefined",
            NodeStatus::Failed { .. } => "failed",
        }
    }
}

/// One grid direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridNode {
    pub theta: f64,
    pub phi: f64,
    /// Per requested channel, in request order.
    pub dcs: Vec<Option<f64>>,
    pub total: Option<f64>,
    pub polarization: Option<Vec3>,
    pub status: NodeStatus,
}

/// Everything needed to reproduce a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub probe: ProbeConfig,
    pub target: TargetState,
    pub options: EngineOptions,
    pub grid: GridSpec,
    pub channels: Vec<Channel>,
    pub echo_phi: Option<f64>,
    pub polarization: bool,
}

/// Cross-section (and optional polarization) over a (θ, φ) grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcsGrid {
    pub nodes: Vec<GridNode>,
    pub provenance: Provenance,
}

impl DcsGrid {
    pub fn flagged(&self) -> impl Iterator<Item = &GridNode> {
        self.nodes.iter().filter(|n| n.status != NodeStatus::Ok)
    }

    /// Largest total over nodes with a usable value.
    pub fn max_total(&self) -> Option<f64> {
        self.usable_totals().reduce(f64::max)
    }

    /// (max − min)/mean of the totals over usable nodes.
    pub fn relative_variation(&self) -> Option<f64> {
        let v: Vec<f64> = self.usable_totals().collect();
        if v.is_empty() {
            return None;
        }
        let max = v.iter().copied().fold(f64::MIN, f64::max);
        let min = v.iter().copied().fold(f64::MAX, f64::min);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        Some((max - min) / mean)
    }

    fn usable_totals(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes
            .iter()
            .filter(|n| matches!(n.status, NodeStatus::Ok | NodeStatus::Closed))
            .filter_map(|n| n.total)
    }
}

/// Optional polarization request for [`dcs_grid`].
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PolarizationRequest {
    pub echo_phi: Option<f64>,
}

fn grid_node(
    probe: &ProbeConfig,
    target: &TargetState,
    channels: &[Channel],
    opts: &EngineOptions,
    pol: Option<PolarizationRequest>,
    (theta, phi): (f64, f64),
) -> GridNode {
    let khat = Vec3::from_spherical(theta, phi);
    let mut node = GridNode { theta, phi, dcs: vec![None; channels.len()], total: None, polarization: None, status: NodeStatus::Ok };
    if let Err(Error::ForwardCone { .. }) = check_direction(probe, khat) {
        node.status = NodeStatus::ForwardCone;
        return node;
    }
    let mut total = 0.0;
    let mut all_closed = true;
    for (slot, &ch) in node.dcs.iter_mut().zip(channels) {
        match dcs_direction(probe, target, khat, ch, opts) {
            Ok(e) => {
                all_closed &= e.closed;
                total += e.value;
                *slot = Some(e.value);
            }
            Err(Error::Convergence { coarse, fine }) => {
                all_closed = false;
                total += fine;
                *slot = Some(fine);
                if node.status == NodeStatus::Ok {
                    node.status = NodeStatus::Convergence { channel: ch.to_string(), coarse, fine };
                }
            }
            Err(e) => {
                node.status = NodeStatus::Failed { message: e.to_string() };
                return node;
            }
        }
    }
    node.total = Some(total);
    if all_closed && node.status == NodeStatus::Ok {
        node.status = NodeStatus::Closed;
    }
    if let Some(req) = pol {
        match polarization_direction(probe, target, khat, channels, opts, req.echo_phi) {
            Ok(p) => node.polarization = Some(p.vector),
            Err(Error::PolarizationUndefined { .. }) => {
                if node.status == NodeStatus::Ok {
                    node.status = NodeStatus::PolarizationUndefined;
                }
            }
            Err(Error::Convergence { coarse, fine }) => {
                if node.status == NodeStatus::Ok {
                    node.status = NodeStatus::Convergence { channel: "polarization".into(), coarse, fine };
                }
            }
            Err(e) => node.status = NodeStatus::Failed { message: e.to_string() },
        }
    }
    node
}

/// Evaluates every grid direction; per-node failures are flagged, never fatal.
/// Node order, and therefore output, is independent of the thread count.
pub fn dcs_grid(
    probe: &ProbeConfig,
    target: &TargetState,
    channels: &[Channel],
    grid: &GridSpec,
    opts: &EngineOptions,
    polarization: Option<PolarizationRequest>,
) -> Result<DcsGrid> {
    validate_inputs(probe, target, opts)?;
    grid.validate()?;
    if channels.is_empty() {
        return Err(Error::InvalidParameter("at least one channel is required".into()));
    }
    for &ch in channels {
        target.channel_states(ch)?;
    }
    let nodes: Vec<GridNode> = grid
        .nodes()
        .into_par_iter()
        .map(|tp| grid_node(probe, target, channels, opts, polarization, tp))
        .collect();
    Ok(DcsGrid {
        nodes,
        provenance: Provenance {
            probe: *probe,
            target: *target,
            options: *opts,
            grid: *grid,
            channels: channels.to_vec(),
            echo_phi: polarization.and_then(|p| p.echo_phi),
            polarization: polarization.is_some(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_examples() {
        assert_eq!(energy_shell(1.3, 0.25, Transition::TripletToTriplet), Shell::Open(1.3));
        let Shell::Open(k) = energy_shell(std::f64::consts::PI, 0.25, Transition::TripletToSinglet) else { panic!() };
        let expect = std::f64::consts::PI.powi(2) - 4.0 * 0.25 / NEUTRON_E_U;
        assert!((k * k - expect).abs() < 1e-14);
        // J < 0 makes s→t endothermic
        assert_eq!(energy_shell(0.1, -0.25, Transition::SingletToTriplet), Shell::Closed);
    }

    #[test]
    fn grid_nodes_are_midpoints() {
        let g = GridSpec::new(2, 3);
        let n = g.nodes();
        assert_eq!(n.len(), 6);
        assert!((n[0].0 - 0.5f64.acos()).abs() < 1e-15);
        assert!((n[5].0 - (-0.5f64).acos()).abs() < 1e-15);
        assert!((n[4].1 - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-15);
    }
}
