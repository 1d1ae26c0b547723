//! Run configuration: schema, preset merging, validation into engine types.

use entprobe_core::dimer::{TargetKind, TargetState};
use entprobe_core::engine::{EngineOptions, GridSpec, Kernel};
use entprobe_core::probe::{FluxConvention, ProbeConfig};
use entprobe_core::quadrature::QuadratureSpec;
use entprobe_core::response::{Channel, Transition};
use entprobe_core::spin_algebra::{Axis, CVec3, Vec3};
use entprobe_core::Error as CoreError;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::presets;
use crate::units::{Angle, Energy, Length, Quantity, Temperature, Vector, Wavevector};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("configuration is not valid JSON: {0}")]
    Syntax(String),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("unknown preset `{name}` (known: {known})")]
    UnknownPreset { name: String, known: String },
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path: path.into(), message: message.into() }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    PwResponse,
    DcsGrid,
    Polarization,
    OracleCheck,
    FluxCalib,
    TwoFermionCheck,
}

impl Command {
    pub fn label(self) -> &'static str {
        match self {
            Command::PwResponse => "pw-response",
            Command::DcsGrid => "dcs-grid",
            Command::Polarization => "polarization",
            Command::OracleCheck => "oracle-check",
            Command::FluxCalib => "flux-calib",
            Command::TwoFermionCheck => "two-fermion-check",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeBlock {
    pub k0: Vector<Wavevector>,
    pub delta: Quantity<Length>,
    #[serde(default = "zero_vector")]
    pub xi: Vector<Length>,
    #[serde(default = "zero_angle")]
    pub phi: Quantity<Angle>,
    #[serde(default = "default_axis")]
    pub alpha: Axis,
}

fn zero_vector() -> Vector<Length> { Vector::new([0.0; 3]) }
fn zero_angle() -> Quantity<Angle> { Quantity::new(0.0) }
fn default_axis() -> Axis { Axis::X }

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindTag {
    Thermal,
    Singlet,
    Triplet,
}

/// One coefficient: a real number or `[re, im]`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Real(f64),
    Complex([f64; 2]),
}

impl Coefficient {
    fn value(self) -> C64 {
        match self {
            Coefficient::Real(x) => C64::new(x, 0.0),
            Coefficient::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetBlock {
    pub d: Vector<Length>,
    pub j: Quantity<Energy>,
    pub kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<Quantity<Temperature>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<[Coefficient; 3]>,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FluxBlock {
    Averaged,
    #[default]
    Calibrated,
    Reference { width: Quantity<Length> },
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarizationBlock {
    /// Spin-echo phase; absent means the plain σ kernel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub echo_phi: Option<Quantity<Angle>>,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseAverage {
    /// Number of entangler phases φ_i = φ + iπ/n.
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub delta: Vec<Quantity<Length>>,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Checks {
    /// Seeds for `oracle-check`.
    pub seeds: u64,
    /// Toy lattice for `two-fermion-check`.
    pub lattice_n: usize,
    pub lattice_l: f64,
}

impl Default for Checks {
    fn default() -> Self { Self { seeds: 100, lattice_n: 4, lattice_l: 3.0 } }
}

fn default_grid() -> GridSpec { GridSpec::new(16, 16) }

/// The complete, canonical configuration document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetBlock>,
    /// Transitions to evaluate; default: all the target populates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<Transition>>,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub flux: FluxBlock,
    #[serde(default)]
    pub kernel: Kernel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarization: Option<PolarizationBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_average: Option<PhaseAverage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    /// File stem of the emitted CSV/JSON pair; default: the command name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default)]
    pub checks: Checks,
}

/// Recursively overlays `top` on `base`; objects merge, everything else replaces.
pub fn deep_merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, t) => *slot = t,
    }
}

/// Parses a JSON document, expanding a preset named in the document or by
/// `preset_override`. Document keys override preset keys.
pub fn parse_config(text: &str, preset_override: Option<&str>) -> Result<RunConfig, ConfigError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    if !doc.is_object() {
        return Err(invalid("<root>", "configuration must be a JSON object"));
    }
    let name = match preset_override {
        Some(p) => Some(p.to_string()),
        None => doc.get("preset").and_then(Value::as_str).map(str::to_string),
    };
    let merged = match &name {
        Some(n) => {
            let mut base = presets::preset(n).ok_or_else(|| ConfigError::UnknownPreset {
                name: n.clone(),
                known: presets::NAMES.join(", "),
            })?;
            deep_merge(&mut base, doc);
            base["preset"] = Value::String(n.clone());
            base
        }
        None => doc,
    };
    let cfg: RunConfig = serde_path_to_error::deserialize(merged).map_err(|e| {
        let path = e.path().to_string();
        invalid(if path == "." { "<root>" } else { &path }, e.into_inner().to_string())
    })?;
    cfg.check_static()?;
    Ok(cfg)
}

/// Engine inputs resolved from a configuration.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub probe: ProbeConfig,
    pub target: TargetState,
    pub channels: Vec<Channel>,
    pub options: EngineOptions,
    pub deltas: Vec<f64>,
}

fn core_message(e: CoreError) -> String { e.to_string() }

impl RunConfig {
    /// Canonical JSON: internal units, defaults filled, stable key order.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    fn check_static(&self) -> Result<(), ConfigError> {
        self.grid.validate().map_err(|e| invalid("grid", core_message(e)))?;
        self.quadrature.validate().map_err(|e| invalid("quadrature", core_message(e)))?;
        if let Some(pa) = self.phase_average {
            if pa.points == 0 {
                return Err(invalid("phase_average.points", "must be at least 1"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.delta.is_empty() {
                return Err(invalid("sweep.delta", "must list at least one width"));
            }
        }
        if let FluxBlock::Reference { width } = self.flux {
            if !(width.value > 0.0 && width.value.is_finite()) {
                return Err(invalid("flux.width", "must be positive"));
            }
        }
        if !(2..=entprobe_core::multiparticle::MAX_LATTICE).contains(&self.checks.lattice_n) {
            return Err(invalid("checks.lattice_n", format!("must lie in 2..={}", entprobe_core::multiparticle::MAX_LATTICE)));
        }
        if let Some(t) = &self.target {
            target_state(t)?;
        }
        if let Some(p) = &self.probe {
            probe_config(p, p.delta.value)?;
        }
        Ok(())
    }

    pub fn flux(&self) -> FluxConvention {
        match self.flux {
            FluxBlock::Averaged => FluxConvention::Averaged,
            FluxBlock::Calibrated => FluxConvention::Calibrated,
            FluxBlock::Reference { width } => FluxConvention::Reference { width: width.value },
        }
    }

    pub fn options(&self) -> EngineOptions {
        EngineOptions { quadrature: self.quadrature, flux: self.flux(), kernel: self.kernel }
    }

    /// Probe, target and channels, required by the grid commands.
    pub fn resolve(&self, command: Command) -> Result<Resolved, ConfigError> {
        let need = |what: &str| invalid(what, format!("required by `{}`", command.label()));
        let pb = self.probe.as_ref().ok_or_else(|| need("probe"))?;
        let tb = self.target.as_ref().ok_or_else(|| need("target"))?;
        let probe = probe_config(pb, pb.delta.value)?;
        let target = target_state(tb)?;
        let populated = target.channels().map_err(|e| invalid("target", core_message(e)))?;
        let channels = match &self.channels {
            None => populated.iter().map(|(c, _)| *c).collect(),
            Some(list) => {
                let mut out = Vec::new();
                for (i, tr) in list.iter().enumerate() {
                    let ch = populated.iter().find(|(c, _)| c.transition == *tr).ok_or_else(|| {
                        invalid(&format!("channels[{i}]"), format!("transition `{}` is not populated by a {} target", tr.label(), target.kind_label()))
                    })?;
                    if out.contains(&ch.0) {
                        return Err(invalid(&format!("channels[{i}]"), "listed twice"));
                    }
                    out.push(ch.0);
                }
                out
            }
        };
        if command == Command::PwResponse && self.polarization.and_then(|p| p.echo_phi).is_some() {
            return Err(invalid("polarization.echo_phi", "the spin echo is only available for engine commands"));
        }
        let deltas = match &self.sweep {
            Some(s) => {
                for (i, d) in s.delta.iter().enumerate() {
                    probe_config(pb, d.value).map_err(|e| match e {
                        ConfigError::Invalid { message, .. } => invalid(&format!("sweep.delta[{i}]"), message),
                        other => other,
                    })?;
                }
                s.delta.iter().map(|d| d.value).collect()
            }
            None => vec![probe.delta],
        };
        Ok(Resolved { probe, target, channels, options: self.options(), deltas })
    }
}

fn probe_config(p: &ProbeBlock, delta: f64) -> Result<ProbeConfig, ConfigError> {
    let cfg = ProbeConfig {
        k0: Vec3::from_array(p.k0.value),
        delta,
        xi: Vec3::from_array(p.xi.value),
        phi: p.phi.value,
        alpha: p.alpha,
    };
    cfg.validate().map_err(|e| invalid("probe", core_message(e)))?;
    Ok(cfg)
}

fn target_state(t: &TargetBlock) -> Result<TargetState, ConfigError> {
    let kind = match t.kind {
        KindTag::Thermal => {
            if t.c.is_some() {
                return Err(invalid("target.c", "only a triplet target takes coefficients"));
            }
            let temp = t.temperature.ok_or_else(|| invalid("target.temperature", "required for a thermal target"))?;
            TargetKind::Thermal { t: temp.value }
        }
        KindTag::Singlet | KindTag::Triplet if t.temperature.is_some() => {
            return Err(invalid("target.temperature", "only a thermal target takes a temperature"));
        }
        KindTag::Singlet => {
            if t.c.is_some() {
                return Err(invalid("target.c", "only a triplet target takes coefficients"));
            }
            TargetKind::Singlet
        }
        KindTag::Triplet => {
            let c = t.c.ok_or_else(|| invalid("target.c", "required for a triplet target"))?;
            TargetKind::Triplet { c: CVec3::new(c[0].value(), c[1].value(), c[2].value()) }
        }
    };
    let state = TargetState { d: Vec3::from_array(t.d.value), j: t.j.value, kind };
    state.validate().map_err(|e| {
        let path = match e {
            CoreError::NonUnitCoefficients { .. } => "target.c",
            CoreError::InvalidTemperature(_) => "target.temperature",
            _ => "target",
        };
        invalid(path, core_message(e))
    })?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "probe": {"k0": [0, 0, 1.5], "delta": 20},
        "target": {"d": [0, 80, 0], "j": 0.25, "kind": "singlet"}
    }"#;

    #[test]
    fn minimal_document_takes_defaults() {
        let cfg = parse_config(MINIMAL, None).unwrap();
        assert_eq!(cfg.quadrature, QuadratureSpec::default());
        assert_eq!(cfg.grid, GridSpec::new(16, 16));
        assert_eq!(cfg.flux, FluxBlock::Calibrated);
        let r = cfg.resolve(Command::DcsGrid).unwrap();
        assert_eq!(r.channels.len(), 1);
        assert_eq!(r.deltas, vec![20.0]);
    }

    #[test]
    fn canonical_form_round_trips() {
        let cfg = parse_config(r#"{"preset": "fig5-thermal-ts"}"#, None).unwrap();
        let once = cfg.to_canonical_json();
        let twice = parse_config(&once, None).unwrap().to_canonical_json();
        assert_eq!(once, twice);
    }

    #[test]
    fn errors_name_the_offending_key() {
        let bad_c = r#"{"probe": {"k0": [0, 0, 1.5], "delta": 20},
            "target": {"d": [0, 1, 0], "j": 0.25, "kind": "triplet", "c": [1, 0, 0.0001]}}"#;
        let e = parse_config(bad_c, None).unwrap_err().to_string();
        assert!(e.starts_with("target.c:"), "{e}");
        let unknown = r#"{"probe": {"k0": [0, 0, 1.5], "delta": 20, "width": 3}}"#;
        let e = parse_config(unknown, None).unwrap_err().to_string();
        assert!(e.starts_with("probe.width:") && e.contains("unknown field"), "{e}");
        let unit = r#"{"probe": {"k0": [0, 0, 1.5], "delta": {"value": 2, "unit": "meV"}}}"#;
        let e = parse_config(unit, None).unwrap_err().to_string();
        assert!(e.starts_with("probe.delta:") && e.contains("length"), "{e}");
        let missing = r#"{"probe": {"delta": 20}}"#;
        let e = parse_config(missing, None).unwrap_err().to_string();
        assert!(e.contains("k0"), "{e}");
    }

    #[test]
    fn fig5_preset_expands() {
        let cfg = parse_config("{}", Some("fig5-thermal-ts")).unwrap();
        let r = cfg.resolve(Command::DcsGrid).unwrap();
        assert!((r.probe.k0 - Vec3::new(0.0, 0.0, 1.5)).norm() < 1e-12);
        assert_eq!(r.target.d.normalized().unwrap(), Vec3::ey());
        assert_eq!(r.probe.xi.normalized().unwrap(), Vec3::ey());
        assert_eq!(r.probe.phi, 0.0);
        assert_eq!(r.deltas, vec![20.0, 80.0, 320.0]);
        // document keys override the preset
        let cfg = parse_config(r#"{"target": {"temperature": 4}}"#, Some("fig5-thermal-ts")).unwrap();
        assert_eq!(cfg.target.unwrap().temperature.unwrap().value, 4.0);
    }
}
