//! wasm-bindgen entry points for the static demo page in `www/`.

use std::cell::RefCell;

use patlcheck::builder::{build_model as build, export_dot, BuildConfig, DotOptions};
use patlcheck::formula::parse;
use patlcheck::model::{json, Icgs};
use patlcheck::patl::{check_patl, CheckConfig};
use patlcheck::semantics::Mode;
use patlcheck::simgen::{generate, Ensemble, SimConfig};
use patlcheck::trajectory::{enu_offset, Trajectory};
use serde::Serialize;
use wasm_bindgen::prelude::*;

thread_local! {
    static ENSEMBLE: RefCell<Option<Ensemble>> = const { RefCell::new(None) };
    static MODEL: RefCell<Option<Icgs>> = const { RefCell::new(None) };
}

#[derive(Serialize)]
struct Curve {
    /// `(t, altitude, horizontal offset from the reference)`, one point per 0.1 s.
    points: Vec<[f64; 3]>,
    disengage_time: Option<f64>,
}

#[derive(Serialize)]
struct SimSummary {
    reference: Curve,
    trajectories: Vec<Curve>,
}

#[derive(Serialize)]
struct BuildSummary {
    states: usize,
    classes: usize,
    repairs: Vec<String>,
    dot: String,
    model: String,
}

fn curve(t: &Trajectory, reference: &Trajectory, stride: usize) -> Curve {
    let points = t
        .samples
        .iter()
        .zip(&reference.samples)
        .step_by(stride.max(1))
        .map(|(s, r)| {
            let d = enu_offset(r, s);
            [s.t, s.alt, d[0].hypot(d[1])]
        })
        .collect();
    Curve {
        points,
        disengage_time: t.disengage_time,
    }
}

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Runs the simulator with a JSON `SimConfig` and keeps the ensemble for
/// `build_model`. Returns plot-ready curves as JSON.
#[wasm_bindgen]
pub fn simulate_ensemble(config_json: &str) -> Result<String, JsError> {
    let cfg = SimConfig::from_json(config_json).map_err(err)?;
    let ens = generate(&cfg).map_err(err)?;
    let stride = (0.1 / cfg.step).round() as usize;
    let summary = SimSummary {
        reference: curve(&ens.reference, &ens.reference, stride),
        trajectories: ens
            .trajectories
            .iter()
            .map(|t| curve(t, &ens.reference, stride))
            .collect(),
    };
    ENSEMBLE.with(|e| *e.borrow_mut() = Some(ens));
    serde_json::to_string(&summary).map_err(err)
}

/// Builds a model from the last simulated ensemble with a JSON `BuildConfig`.
#[wasm_bindgen]
pub fn build_model(config_json: &str) -> Result<String, JsError> {
    let cfg = BuildConfig::from_json(config_json).map_err(err)?;
    let built = ENSEMBLE.with(|e| {
        let e = e.borrow();
        let ens = e
            .as_ref()
            .ok_or_else(|| JsError::new("simulate an ensemble first"))?;
        build(&ens.trajectories, &ens.reference, &cfg).map_err(err)
    })?;
    let model = built.model;
    let summary = BuildSummary {
        states: model.n_states(),
        classes: model.classes(0).len(),
        repairs: built.repairs.iter().map(|r| r.to_string()).collect(),
        dot: export_dot(&model, &DotOptions::for_model(&model)),
        model: json::to_json(&model),
    };
    MODEL.with(|m| *m.borrow_mut() = Some(model));
    serde_json::to_string(&summary).map_err(err)
}

/// Checks a formula on the last built model. `mode` is "objective" or
/// "subjective". Returns the verification result as JSON.
#[wasm_bindgen]
pub fn check_formula(formula: &str, mode: &str, max_strategies: u32) -> Result<String, JsError> {
    let f = parse(formula).map_err(err)?;
    let mode: Mode = mode.parse().map_err(|e: String| JsError::new(&e))?;
    let cfg = CheckConfig {
        max_strategies: Some(max_strategies.into()),
        parallel: false,
        ..CheckConfig::default()
    };
    MODEL.with(|m| {
        let m = m.borrow();
        let model = m
            .as_ref()
            .ok_or_else(|| JsError::new("build a model first"))?;
        let r = check_patl(model, &f, mode, &cfg).map_err(err)?;
        serde_json::to_string(&r).map_err(err)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipeline_round_trip() {
        let sim =
            simulate_ensemble(r#"{"n_trajectories": 5, "step": 0.01, "mission_duration": 8}"#)
                .unwrap_or_else(|_| panic!("simulate"));
        let v: serde_json::Value = serde_json::from_str(&sim).unwrap();
        assert_eq!(v["trajectories"].as_array().unwrap().len(), 5);
        let built =
            build_model(r#"{"k": 1.0, "variant": "B"}"#).unwrap_or_else(|_| panic!("build"));
        let b: serde_json::Value = serde_json::from_str(&built).unwrap();
        assert!(b["states"].as_u64().unwrap() >= 9);
        assert!(b["dot"].as_str().unwrap().starts_with("digraph"));
        let res = check_formula("<<Rocket>>^{>=0} F Finish", "objective", 1000)
            .unwrap_or_else(|_| panic!("check"));
        assert!(res.contains("\"truth\":\"true\""));
    }
}
