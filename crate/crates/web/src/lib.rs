//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string; the `*_json` functions hold the logic
//! and run natively as well.

use nbds_core::simulate::{compare_traces, integrate_netlist, integrate_reference, SimConfig, Trace, Waveform};
use nbds_core::synth::{compute_bias, export_dot, synthesize, CapacitorPolicy, DeviceParams, SumSpec};
use nbds_core::system::{builtin, to_electrical, DynamicalSystem, UnitMap};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Points per plotted series.
const MAX_POINTS: usize = 2000;

fn model(name: &str) -> Result<DynamicalSystem, String> {
    builtin(name).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Series<'a> {
    states: &'a [String],
    /// Milliseconds.
    times: Vec<f64>,
    /// Microamperes, `values[state][sample]`.
    values: Vec<Vec<f64>>,
    events: usize,
}

fn series(t: &Trace) -> Series<'_> {
    Series {
        states: &t.states,
        times: t.times.iter().map(|v| v * 1e3).collect(),
        values: t
            .values
            .iter()
            .map(|s| s.iter().map(|v| v * 1e6).collect())
            .collect(),
        events: t.events.len(),
    }
}

#[derive(Serialize)]
struct SimResult<'a> {
    reference: Series<'a>,
    netlist: Series<'a>,
    rel_rmse: f64,
    period_ms: Option<f64>,
}

/// Reference and netlist traces of a built-in model. `i_ext_ua` drives the
/// model's input, if it has one.
pub fn simulate_json(name: &str, i_ext_ua: f64, t_end_ms: f64, dt_us: f64) -> Result<String, String> {
    let units = UnitMap::default();
    let e = to_electrical(&model(name)?, &units);
    let netlist = synthesize(&e, &DeviceParams::default(), &units).map_err(|e| e.to_string())?;
    let dt = dt_us * 1e-6;
    let t_end = t_end_ms * 1e-3;
    let steps = (t_end / dt).max(1.0) as usize;
    let mut cfg = SimConfig::new(dt, t_end).with_stride(steps.div_ceil(MAX_POINTS).max(1));
    for input in &e.inputs {
        cfg = cfg.with_drive(&input.name, Waveform::Constant(i_ext_ua * 1e-6));
    }
    let r = integrate_reference(&e, &cfg).map_err(|e| e.to_string())?;
    let n = integrate_netlist(&netlist, &cfg).map_err(|e| e.to_string())?;
    let report = compare_traces(&r, &n).map_err(|e| e.to_string())?;
    let out = SimResult {
        reference: series(&r),
        netlist: series(&n),
        rel_rmse: report.rel_rmse,
        period_ms: report.period_ref.map(|p| p * 1e3),
    };
    Ok(serde_json::to_string(&out).expect("result serializes"))
}

#[derive(Serialize)]
struct SynthResult {
    census: String,
    dot: String,
    blocks: Vec<String>,
}

/// Census line, DOT text and a block listing for a built-in model.
pub fn synthesize_json(name: &str) -> Result<String, String> {
    let units = UnitMap::default();
    let e = to_electrical(&model(name)?, &units);
    let n = synthesize(&e, &DeviceParams::default(), &units).map_err(|e| e.to_string())?;
    let out = SynthResult {
        census: n.census.to_string(),
        dot: export_dot(&n),
        blocks: n
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let reads: Vec<&str> = b.reads().iter().map(|id| n.nets[id.0].name.as_str()).collect();
                let drives: Vec<&str> = b.drives().iter().map(|id| n.nets[id.0].name.as_str()).collect();
                format!(
                    "{i:>3} {:<9} {} -> {}",
                    b.kind().label(),
                    reads.join(", "),
                    drives.join(", ")
                )
            })
            .collect(),
    };
    Ok(serde_json::to_string(&out).expect("result serializes"))
}

#[derive(Serialize)]
struct BiasResult {
    c_pf: f64,
    i_dc_ua: f64,
    ratio: f64,
    beta: f64,
}

/// Capacitor and bias current for a core with time constant `tau_ms`.
pub fn bias_json(tau_ms: f64, k_n: f64, k_p: f64, i_dc_ua: f64) -> Result<String, String> {
    let device = DeviceParams {
        k_n,
        k_p,
        s: SumSpec::Auto,
        capacitor_policy: CapacitorPolicy::FixedIdc(i_dc_ua * 1e-6),
    };
    device.validate().map_err(|e| e.to_string())?;
    let b = compute_bias(tau_ms, &UnitMap::default(), &device, 0).map_err(|e| e.to_string())?;
    let out = BiasResult {
        c_pf: b.c * 1e12,
        i_dc_ua: b.i_dc * 1e6,
        ratio: b.c / b.i_dc,
        beta: device.beta(),
    };
    Ok(serde_json::to_string(&out).expect("result serializes"))
}

#[wasm_bindgen]
pub fn simulate(name: &str, i_ext_ua: f64, t_end_ms: f64, dt_us: f64) -> Result<String, JsValue> {
    simulate_json(name, i_ext_ua, t_end_ms, dt_us).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn synthesize_model(name: &str) -> Result<String, JsValue> {
    synthesize_json(name).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bias(tau_ms: f64, k_n: f64, k_p: f64, i_dc_ua: f64) -> Result<String, JsValue> {
    bias_json(tau_ms, k_n, k_p, i_dc_ua).map_err(|e| JsValue::from_str(&e))
}
