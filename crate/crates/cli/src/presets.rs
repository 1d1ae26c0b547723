//! Named parameter sets for the published figure scenarios. Presets are
//! partial documents; a user document is deep-merged over them.

use serde_json::{json, Value};

pub const NAMES: &[&str] = &["fig4-pw-map", "fig4-pw-map-y", "fig5-thermal-ts", "fig6-pure-ts"];

/// |↑↑⟩_z → singlet in the plane-wave limit, k = π Å⁻¹, d = 9 Å ∥ ŷ.
fn fig4(xi_z: f64, stem: &str) -> Value {
    json!({
        "command": "pw-response",
        "probe": {"k0": [0.0, 0.0, std::f64::consts::PI], "delta": 1000.0, "xi": [0.0, 0.0, xi_z], "phi": 0.0, "alpha": "x"},
        "target": {"d": [0.0, 9.0, 0.0], "j": 0.25, "kind": "triplet",
                   "c": [std::f64::consts::FRAC_1_SQRT_2, [0.0, -std::f64::consts::FRAC_1_SQRT_2], 0.0]},
        "channels": ["ts"],
        "grid": {"n_theta": 64, "n_phi": 64},
        "output": stem
    })
}

/// Entangled probe with |d⊥| ≈ ξ = 80 Å, dimer and ξ along ŷ, k0 = 1.5×10⁴ µm⁻¹.
fn entangled_base() -> Value {
    json!({
        "command": "dcs-grid",
        "probe": {"k0": {"value": [0.0, 0.0, 1.5e4], "unit": "1/µm"}, "delta": 20.0,
                  "xi": [0.0, 80.0, 0.0], "phi": 0.0, "alpha": "x"},
        "channels": ["ts"],
        "grid": {"n_theta": 12, "n_phi": 12},
        "flux": {"mode": "reference", "width": 80.0}
    })
}

pub fn preset(name: &str) -> Option<Value> {
    Some(match name {
        "fig4-pw-map" => fig4(0.0, "fig4-pw-map"),
        // k·ξ = 3π/2 puts the effective polarization along +ŷ
        "fig4-pw-map-y" => fig4(1.5, "fig4-pw-map-y"),
        "fig5-thermal-ts" => {
            let mut v = entangled_base();
            crate::config::deep_merge(
                &mut v,
                json!({
                    "target": {"d": [0.0, 80.0, 0.0], "j": 0.25, "kind": "thermal", "temperature": 10.0},
                    "sweep": {"delta": [20.0, 80.0, 320.0]},
                    "output": "fig5-thermal-ts"
                }),
            );
            v
        }
        "fig6-pure-ts" => {
            let mut v = entangled_base();
            crate::config::deep_merge(
                &mut v,
                json!({
                    "target": {"d": [0.0, 80.0, 0.0], "j": 0.25, "kind": "triplet", "c": [1.0, 0.0, 0.0]},
                    "output": "fig6-pure-ts"
                }),
            );
            v
        }
        _ => return None,
    })
}
