//! Browser demo bindings: small, allocation-light wrappers around the core
//! learners for a single static page. Three operations are exposed:
//! a surrogate-loss surface, an online decision field on a synthetic ring
//! stream, and a per-round regret curve with its logarithmic bound.
//!
//! The logic lives in plain functions returning `Result<_, String>` so it is
//! testable on the native target; `JsValue` cannot be constructed off
//! wasm32, so the `#[wasm_bindgen]` exports are thin wrappers.

use wasm_bindgen::prelude::*;

use oauc_core::kernel::{EvictionRule, Kernel, KernelConfig, KernelModel};
use oauc_core::linalg::Vector;
use oauc_core::linear::{regret_curve, LinearConfig, StepSchedule};
use oauc_core::surrogate::{psi_m, psi_s, LossKind};
use oauc_core::synth::{gaussian_pair_stream, ring_stream};

fn stringify(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Samples the surrogate loss on an `n x n` grid over
/// `mu in [mu_min, mu_max]`, `sigma in (0, sigma_max]`, row-major with `mu`
/// varying fastest. `kind` is "square" or "hinge".
pub fn loss_surface_impl(
    kind: &str,
    mu_min: f64,
    mu_max: f64,
    sigma_max: f64,
    n: usize,
) -> Result<Vec<f64>, String> {
    if n < 2 || !(mu_max > mu_min) || !(sigma_max > 0.0) {
        return Err("need n >= 2, mu_max > mu_min, sigma_max > 0".into());
    }
    let mut out = Vec::with_capacity(n * n);
    for si in 0..n {
        let sigma = sigma_max * (si + 1) as f64 / n as f64;
        for mi in 0..n {
            let mu = mu_min + (mu_max - mu_min) * mi as f64 / (n - 1) as f64;
            let v = match kind {
                "square" => psi_s(mu, sigma * sigma).map_err(stringify)?,
                "hinge" => psi_m(mu, sigma * sigma).map_err(stringify)?.loss,
                _ => return Err("kind must be \"square\" or \"hinge\"".into()),
            };
            out.push(v);
        }
    }
    Ok(out)
}

/// Trains the kernelized hinge-based learner on a concentric-ring stream and
/// returns the decision function sampled on a `grid x grid` lattice over
/// `[-1, 1]^2` (row-major), for canvas heatmap rendering.
pub fn ring_decision_field_impl(
    rounds: usize,
    noise: f64,
    seed: u64,
    lambda: f64,
    width: f64,
    grid: usize,
) -> Result<Vec<f64>, String> {
    if rounds == 0 || grid < 2 {
        return Err("need rounds >= 1 and grid >= 2".into());
    }
    let stream = ring_stream(rounds, noise, seed);
    let mut model = KernelModel::new(KernelConfig {
        kernel: Kernel::Gaussian { width_sigma: width },
        loss_kind: LossKind::HingeSecondOrder,
        lambda,
        schedule: StepSchedule::InverseLambdaT { lambda },
        pos_budget: 100,
        neg_budget: 100,
        eviction_rule: EvictionRule::ResidualOptimal,
    })
    .map_err(stringify)?;
    for inst in &stream {
        model.kernel_step(inst).map_err(stringify)?;
    }
    let mut out = Vec::with_capacity(grid * grid);
    for yi in 0..grid {
        let y = -1.0 + 2.0 * yi as f64 / (grid - 1) as f64;
        for xi in 0..grid {
            let x = -1.0 + 2.0 * xi as f64 / (grid - 1) as f64;
            let p = Vector::new(vec![x, y]).map_err(stringify)?;
            out.push(model.f_eval(&p).map_err(stringify)?);
        }
    }
    Ok(out)
}

/// Runs the linear hinge-based learner on a Gaussian two-class stream and
/// returns JSON `{"rounds": [...], "regret": [...], "bound": [...]}` where
/// `bound[t] = 18 (1 + ln t) / lambda`.
pub fn linear_regret_json_impl(
    rounds: usize,
    lambda: f64,
    seed: u64,
) -> Result<String, String> {
    if rounds == 0 {
        return Err("need rounds >= 1".into());
    }
    let stream = gaussian_pair_stream(rounds, 4, 0.5, 0.3, seed);
    let config = LinearConfig {
        loss_kind: LossKind::HingeSecondOrder,
        lambda,
        schedule: StepSchedule::InverseLambdaT { lambda },
        zero_history_updates: false,
    };
    let curve = regret_curve(&stream, &config).map_err(stringify)?;
    let rounds_v: Vec<usize> = curve.iter().map(|p| p.round).collect();
    let regret: Vec<f64> = curve.iter().map(|p| p.regret()).collect();
    let bound: Vec<f64> =
        curve.iter().map(|p| 18.0 * (1.0 + (p.round as f64).ln()) / lambda).collect();
    serde_json::to_string(&serde_json::json!({
        "rounds": rounds_v,
        "regret": regret,
        "bound": bound,
    }))
    .map_err(stringify)
}

#[wasm_bindgen]
pub fn loss_surface(
    kind: &str,
    mu_min: f64,
    mu_max: f64,
    sigma_max: f64,
    n: usize,
) -> Result<Vec<f64>, JsValue> {
    loss_surface_impl(kind, mu_min, mu_max, sigma_max, n)
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn ring_decision_field(
    rounds: usize,
    noise: f64,
    seed: u64,
    lambda: f64,
    width: f64,
    grid: usize,
) -> Result<Vec<f64>, JsValue> {
    ring_decision_field_impl(rounds, noise, seed, lambda, width, grid)
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn linear_regret_json(rounds: usize, lambda: f64, seed: u64) -> Result<String, JsValue> {
    linear_regret_json_impl(rounds, lambda, seed).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_shapes_and_values() {
        let s = loss_surface_impl("square", -1.0, 1.0, 2.0, 8).unwrap();
        assert_eq!(s.len(), 64);
        let h = loss_surface_impl("hinge", -1.0, 1.0, 2.0, 8).unwrap();
        assert_eq!(h.len(), 64);
        for v in s.iter().chain(&h) {
            assert!(v.is_finite() && *v >= 0.0);
        }
        assert!(loss_surface_impl("nope", 0.0, 1.0, 1.0, 4).is_err());
        assert!(loss_surface_impl("hinge", 1.0, 0.0, 1.0, 4).is_err());
    }

    #[test]
    fn decision_field_separates_rings() {
        let field = ring_decision_field_impl(600, 0.05, 7, 1.0, 0.5, 21).unwrap();
        assert_eq!(field.len(), 21 * 21);
        // center of the lattice lies inside the positive inner ring
        let center = field[10 * 21 + 10];
        let corner = field[0];
        assert!(center > corner, "center {center} vs corner {corner}");
    }

    #[test]
    fn regret_json_parses() {
        let s = linear_regret_json_impl(120, 1.0, 3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        let regret = v["regret"].as_array().unwrap();
        let bound = v["bound"].as_array().unwrap();
        assert_eq!(regret.len(), bound.len());
        assert!(!regret.is_empty());
        for (r, b) in regret.iter().zip(bound) {
            assert!(r.as_f64().unwrap() <= b.as_f64().unwrap() + 1e-9);
        }
    }
}
