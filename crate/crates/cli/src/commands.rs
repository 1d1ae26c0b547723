//! Command execution.

use entprobe_core::dimer::{TargetKind, TargetState};
use entprobe_core::engine::{
    dcs_direction, dcs_grid, energy_shell, pw_limit_dcs, EngineOptions, GridSpec, NodeStatus, PolarizationRequest, Shell,
    FORWARD_EXCLUSION,
};
use entprobe_core::multiparticle::*;
use entprobe_core::oracle::oracle_response;
use entprobe_core::probe::{FluxConvention, ProbeConfig};
use entprobe_core::response::{pw_polarization, response_term, Channel, Regime, ScatteringPair, Transition};
use entprobe_core::spin_algebra::{Angles, Axis, CVec3, Vec3};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::f64::consts::PI;
use std::path::Path;

use crate::config::{Command, ConfigError, Resolved, RunConfig};
use crate::output::{self, slot, Row};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] entprobe_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

/// How a completed run went.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Finished, but some nodes carry convergence shortfalls or failures.
    Warnings,
    /// A check command found a deviation beyond its tolerance.
    CheckFailed,
}

pub fn run(cfg: &RunConfig, command: Command, out_dir: &Path) -> Result<Outcome, RunError> {
    if let Some(c) = cfg.command {
        if c != command {
            return Err(ConfigError::Invalid {
                path: "command".into(),
                message: format!("document is for `{}`, invoked as `{}`", c.label(), command.label()),
            }
            .into());
        }
    }
    match command {
        Command::PwResponse | Command::DcsGrid | Command::Polarization => grid_command(cfg, command, out_dir),
        Command::OracleCheck => Ok(oracle_check(cfg.checks.seeds)?),
        Command::FluxCalib => flux_calib(cfg),
        Command::TwoFermionCheck => Ok(two_fermion_check(cfg)?),
    }
}

fn grid_command(cfg: &RunConfig, command: Command, out_dir: &Path) -> Result<Outcome, RunError> {
    let res = cfg.resolve(command)?;
    let stem = cfg.output.clone().unwrap_or_else(|| command.label().to_string());
    let with_pol = command == Command::Polarization || cfg.polarization.is_some();
    let echo_phi = cfg.polarization.and_then(|p| p.echo_phi).map(|q| q.value);
    let points = cfg.phase_average.map_or(1, |p| p.points);
    let canonical: serde_json::Value = serde_json::from_str(&cfg.to_canonical_json()).expect("canonical JSON");
    let mut outcome = Outcome::Success;
    for (i, &delta) in res.deltas.iter().enumerate() {
        let probe = ProbeConfig { delta, ..res.probe };
        let phis: Vec<f64> = (0..points).map(|k| probe.phi + PI * k as f64 / points as f64).collect();
        let mut samples = Vec::with_capacity(points);
        for &phi in &phis {
            let p = ProbeConfig { phi, ..probe };
            samples.push(if command == Command::PwResponse {
                pw_rows(&p, &res, &cfg.grid, with_pol)
            } else {
                let pol = with_pol.then_some(PolarizationRequest { echo_phi });
                let g = dcs_grid(&p, &res.target, &res.channels, &cfg.grid, &res.options, pol)?;
                g.nodes.iter().map(|n| Row::from_node(n, &res.channels)).collect()
            });
        }
        let rows = average(samples);
        if rows.iter().any(Row::is_warning) {
            outcome = Outcome::Warnings;
        }
        let name = if res.deltas.len() > 1 { format!("{stem}-delta{i}") } else { stem.clone() };
        let run = json!({
            "delta": delta,
            "probe": probe,
            "target": res.target,
            "channels": res.channels,
            "options": res.options,
            "grid": cfg.grid,
            "polarization": with_pol,
            "echo_phi": echo_phi,
            "phase_average_phis": if points > 1 { Some(phis) } else { None },
        });
        let csv = output::csv(&rows);
        let side = output::sidecar(command.label(), canonical.clone(), run, &rows);
        let (c, _) = output::write_pair(out_dir, &name, &csv, &side)?;
        let warn = rows.iter().filter(|r| r.is_warning()).count();
        println!("wrote {} ({} nodes, {} with warnings)", c.display(), rows.len(), warn);
    }
    Ok(outcome)
}

/// Plane-wave limit over the grid; polarization is the DCS-weighted mean over channels.
fn pw_rows(p: &ProbeConfig, res: &Resolved, grid: &GridSpec, with_pol: bool) -> Vec<Row> {
    let c = match res.target.kind {
        TargetKind::Triplet { c } => Some(c),
        _ => None,
    };
    grid.nodes()
        .into_iter()
        .map(|(theta, phi)| {
            let dir = Vec3::from_spherical(theta, phi);
            let mut row = Row { theta, phi, dcs: [None; 3], total: None, polarization: None, status: NodeStatus::Ok };
            let mut total = 0.0;
            let mut pol = Vec3::zero();
            for &ch in &res.channels {
                let value = match pw_limit_dcs(p, &res.target, dir, ch) {
                    Ok(v) => v,
                    Err(e) => {
                        row.status = NodeStatus::Failed { message: e.to_string() };
                        return row;
                    }
                };
                row.dcs[slot(ch.transition)] = Some(value);
                total += value;
                if with_pol && value > 0.0 {
                    let Shell::Open(kp) = energy_shell(p.k0.norm(), res.target.j, ch.transition) else { continue };
                    match pw_polarization(ch.transition, ch.regime, c, p.k0 - dir.scale(kp), p.theta0(), p.alpha) {
                        Ok(v) => pol += v.scale(value),
                        Err(e) => {
                            row.status = NodeStatus::Failed { message: e.to_string() };
                            return row;
                        }
                    }
                }
            }
            row.total = Some(total);
            if with_pol {
                if total > 0.0 {
                    row.polarization = Some(pol.scale(1.0 / total));
                } else {
                    row.status = NodeStatus::PolarizationUndefined;
                }
            }
            row
        })
        .collect()
}

/// Mean over entangler phases; polarization is weighted by the total DCS.
/// A single sample passes through untouched.
fn average(mut samples: Vec<Vec<Row>>) -> Vec<Row> {
    if samples.len() == 1 {
        return samples.pop().unwrap_or_default();
    }
    let n = samples.len() as f64;
    (0..samples[0].len())
        .map(|i| {
            let nodes: Vec<&Row> = samples.iter().map(|s| &s[i]).collect();
            let first = nodes[0];
            let status = nodes.iter().map(|r| r.status.clone()).find(|s| *s != NodeStatus::Ok).unwrap_or(NodeStatus::Ok);
            let mean = |get: &dyn Fn(&Row) -> Option<f64>| -> Option<f64> {
                nodes.iter().map(|r| get(r)).sum::<Option<f64>>().map(|s| s / n)
            };
            let dcs = [0, 1, 2].map(|k| mean(&|r: &Row| r.dcs[k]));
            let total = mean(&|r: &Row| r.total);
            let polarization = nodes
                .iter()
                .map(|r| Some(r.polarization?.scale(r.total?)))
                .try_fold(Vec3::zero(), |acc, v| Some(acc + v?))
                .and_then(|v| total.filter(|t| *t > 0.0).map(|t| v.scale(1.0 / (t * n))));
            Row { theta: first.theta, phi: first.phi, dcs, total, polarization, status }
        })
        .collect()
}

fn unit(r: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v.scale(1.0 / n);
        }
    }
}

fn coefficients(r: &mut ChaCha8Rng) -> CVec3 {
    let mut z = || C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
    let c = CVec3::new(z(), z(), z());
    c.scale_re(1.0 / c.norm_sqr().sqrt())
}

/// Worst |closed − oracle|/|oracle| over every table row for `seeds` seeds.
pub fn oracle_deviation(seeds: u64) -> entprobe_core::Result<f64> {
    use Regime::*;
    use Transition::*;
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let d = unit(&mut r).scale(r.gen_range(1.0..10.0));
        let c = coefficients(&mut r);
        let rows = [
            (Channel::new(SingletToTriplet, PureT0), TargetKind::Singlet),
            (Channel::new(TripletToSinglet, PureT0), TargetKind::Triplet { c }),
            (Channel::new(TripletToTriplet, PureT0), TargetKind::Triplet { c }),
            (Channel::new(SingletToTriplet, ThermalTpos), TargetKind::Thermal { t: 10.0 }),
            (Channel::new(TripletToSinglet, ThermalTpos), TargetKind::Thermal { t: 10.0 }),
            (Channel::new(TripletToTriplet, ThermalTpos), TargetKind::Thermal { t: 10.0 }),
        ];
        for (ch, kind) in rows {
            let target = TargetState { d, j: 0.25, kind };
            let k = r.gen_range(0.5..3.0);
            let pair = ScatteringPair::new(unit(&mut r).scale(k), unit(&mut r).scale(k), unit(&mut r).scale(r.gen_range(0.3..3.0)));
            let (t1, t2) = (r.gen_range(-7.0..7.0), r.gen_range(-7.0..7.0));
            let alpha = Axis::ALL[r.gen_range(0..3)];
            let closed = response_term(ch, &pair, t1, t2, alpha, &target)?;
            // the closed forms carry F·h = 4 × the single-operator contraction
            let oracle = oracle_response(&pair, t1, t2, alpha, &target, ch)?.value * 4.0;
            worst = worst.max((closed - oracle).norm() / oracle.norm());
        }
    }
    Ok(worst)
}

fn oracle_check(seeds: u64) -> entprobe_core::Result<Outcome> {
    let worst = oracle_deviation(seeds)?;
    let pass = worst < 1e-10;
    println!("oracle-check: {seeds} seeds × 6 rows, max relative deviation {worst:.3e} ({})", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { Outcome::Success } else { Outcome::CheckFailed })
}

fn flux_calib(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let base = cfg.probe.as_ref().map(|p| (Vec3::from_array(p.k0.value), p.phi.value, p.alpha));
    let (k0, phi, alpha) = base.unwrap_or((Vec3::new(0.0, 0.0, 1.5), 0.0, Axis::X));
    let probe = ProbeConfig { k0, delta: 1000.0, xi: Vec3::zero(), phi, alpha };
    probe.validate()?;
    let target = match cfg.target {
        Some(_) => cfg.resolve(Command::FluxCalib)?.target,
        None => TargetState { d: Vec3::new(0.0, 3.0, 0.0), j: 0.25, kind: TargetKind::Thermal { t: 10.0 } },
    };
    let opts = EngineOptions { flux: FluxConvention::Calibrated, ..cfg.options() };
    let cone = FORWARD_EXCLUSION * probe.momentum_width() / k0.norm();
    let (mut lo, mut hi, mut sum, mut n, mut skipped) = (f64::MAX, f64::MIN, 0.0, 0usize, 0usize);
    for (theta, az) in GridSpec::new(4, 4).nodes() {
        let dir = Vec3::from_spherical(theta, az);
        if dir.angle_to(k0) < 2.0 * cone {
            skipped += 1;
            continue;
        }
        for (ch, _) in target.channels()? {
            let Shell::Open(kp) = energy_shell(k0.norm(), target.j, ch.transition) else { continue };
            // the relative comparison is ill-posed next to a two-site fringe node
            let shift = if ch.transition == Transition::TripletToTriplet { PI } else { 0.0 };
            if (0.5 * ((k0 - dir.scale(kp)).dot(target.d) + shift)).sin().powi(2) < 0.05 {
                skipped += 1;
                continue;
            }
            let engine = dcs_direction(&probe, &target, dir, ch, &opts)?.value;
            let pw = pw_limit_dcs(&probe, &target, dir, ch)?;
            let ratio = engine / pw;
            println!("  θ={theta:.4} φ={az:.4} {ch}: engine/pw = {ratio:.6}");
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            sum += ratio;
            n += 1;
        }
    }
    if n == 0 {
        println!("flux-calib: no usable directions");
        return Ok(Outcome::CheckFailed);
    }
    let pass = lo >= 0.99 && hi <= 1.01;
    println!(
        "flux-calib: ξ=0, Δ=1000 Å, calibration ratio engine/pw mean {:.6}, range [{lo:.6}, {hi:.6}] over {n} comparisons ({skipped} skipped) ({})",
        sum / n as f64,
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(if pass { Outcome::Success } else { Outcome::CheckFailed })
}

fn two_fermion_check(cfg: &RunConfig) -> entprobe_core::Result<Outcome> {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let lat = ToyLattice { n: cfg.checks.lattice_n, box_l: cfg.checks.lattice_l };
    lat.validate()?;
    let l = lat.box_l;
    let ang = |r: &mut ChaCha8Rng| Angles::new(r.gen_range(0.0..PI), r.gen_range(-PI..PI));
    let point = |r: &mut ChaCha8Rng| {
        let mut v = || Vec3::new(r.gen_range(0.0..l), r.gen_range(0.0..l), r.gen_range(0.0..l));
        let (a, b) = (v(), v());
        TwoFermionPoint::new(a, b, r.gen_range(0..2), r.gen_range(0..2))
    };
    let mut anti = 0.0f64;
    for _ in 0..1000 {
        let (ka, kb, xi, al) = (unit(&mut r).scale(1.4), unit(&mut r).scale(0.7), unit(&mut r).scale(2.0), ang(&mut r));
        let p = point(&mut r);
        for tag in [BasisTag::A, BasisTag::B, BasisTag::C(0), BasisTag::C(1)] {
            let kind = BasisKind { tag, k_a: ka, k_b: kb, xi, alpha: al };
            anti = anti.max((basis_eval(&kind, &p, l)?.value + basis_eval(&kind, &p.exchanged(), l)?.value).norm());
        }
    }
    let mut recon = 0.0f64;
    for _ in 0..100 {
        let out = DetectorState { k_a: unit(&mut r), k_b: unit(&mut r).scale(2.0), beta: ang(&mut r), gamma: ang(&mut r), nu: r.gen_range(0..2), nu_p: r.gen_range(0..2) };
        let dec = out_state_decompose(&out, ang(&mut r))?;
        let p = point(&mut r);
        recon = recon.max((dec.eval(&p, l)? - out_state_eval(&out, &p, l)?).norm());
    }
    let v = move |a: Vec3, b: Vec3| {
        let w = |x: f64| x - l * (x / l).round();
        C64::new((-(w(a.x - b.x).powi(2) + w(a.y - b.y).powi(2) + w(a.z - b.z).powi(2)) / 0.8).exp(), 0.0)
    };
    let input = EntangledInState {
        alpha: ang(&mut r),
        xi: Vec3::new(0.3, -0.7, 1.1),
        modes: vec![(lat.momentum([1, 0, 0]), C64::new(0.8, 0.1)), (lat.momentum([0, -1, 1]), C64::new(-0.3, 0.5))],
    };
    let out = DetectorState { k_a: lat.momentum([1, 1, 0]), k_b: Vec3::new(0.2, -0.9, 0.4), beta: ang(&mut r), gamma: ang(&mut r), nu: 0, nu_p: 1 };
    let fast = two_body_matrix_element(v, &input, &out, &lat)?;
    let slow = lattice_matrix_element(v, &input, &out, &lat)?;
    let lattice = (fast - slow).norm() / slow.norm().max(1.0);
    let pass = anti < 1e-14 && recon < 1e-12 && lattice < 1e-10;
    println!(
        "two-fermion-check: antisymmetry {anti:.2e}, reconstruction {recon:.2e}, matrix element vs {}³×{}³ lattice {lattice:.2e} ({})",
        lat.n,
        lat.n,
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(if pass { Outcome::Success } else { Outcome::CheckFailed })
}
