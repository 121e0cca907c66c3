//! Fixed-step integration of reference equations and synthesized netlists.

mod compare;
mod config;
mod io;
mod netlist;
mod reference;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compare::{compare_traces, estimate_period, CompareReport};
pub use config::{SimConfig, Waveform};
pub use io::{read_csv, write_csv};
pub use netlist::{
    integrate_netlist, integrate_netlist_with_probe, recover_branch_currents, NbdsState,
};
pub use reference::integrate_reference;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation configuration: {0}")]
    Config(String),
    #[error("drive given for unknown input `{0}`")]
    UnknownInput(String),
    #[error("I_out = {i_out:e} A is outside ±S² = ±{limit:e} A")]
    RangeViolation { i_out: f64, limit: f64 },
    #[error("state became non-finite at t = {time:e} s")]
    NonFiniteState { time: f64, partial: Box<Trace> },
    #[error("traces are not on the same grid: {0}")]
    GridMismatch(String),
    #[error("netlist cannot be simulated: {0}")]
    Netlist(String),
    #[error("trace file: {0}")]
    TraceFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    RangeViolation,
    DenominatorFloor,
    NonFiniteState,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::RangeViolation => "RangeViolation",
            EventKind::DenominatorFloor => "DenominatorFloor",
            EventKind::NonFiniteState => "NonFiniteState",
        })
    }
}

impl std::str::FromStr for EventKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "RangeViolation" => Ok(EventKind::RangeViolation),
            "DenominatorFloor" => Ok(EventKind::DenominatorFloor),
            "NonFiniteState" => Ok(EventKind::NonFiniteState),
            other => Err(SimError::TraceFormat(format!("unknown event kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub detail: String,
}

/// Sampled state currents on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trace {
    pub states: Vec<String>,
    /// Seconds.
    pub times: Vec<f64>,
    /// `values[state][sample]`, amperes.
    pub values: Vec<Vec<f64>>,
    pub events: Vec<Event>,
}

impl Trace {
    fn new(states: Vec<String>) -> Self {
        let n = states.len();
        Trace {
            states,
            times: Vec::new(),
            values: vec![Vec::new(); n],
            events: Vec::new(),
        }
    }

    fn record(&mut self, t: f64, x: &[f64]) {
        self.times.push(t);
        for (series, v) in self.values.iter_mut().zip(x) {
            series.push(*v);
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.state_index(name).map(|i| self.values[i].as_slice())
    }

    /// Samples from `fraction` of the way through onward; events are kept.
    pub fn tail(&self, fraction: f64) -> Trace {
        let start = ((self.len() as f64) * fraction.clamp(0.0, 1.0)) as usize;
        let start = start.min(self.len());
        Trace {
            states: self.states.clone(),
            times: self.times[start..].to_vec(),
            values: self.values.iter().map(|v| v[start..].to_vec()).collect(),
            events: self.events.clone(),
        }
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

/// One classical Runge–Kutta step of `ẋ = f(t, x)`.
pub(crate) fn rk4_step<F>(f: &mut F, t: f64, dt: f64, x: &mut [f64], k: &mut [Vec<f64>; 5])
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = x.len();
    let [k1, k2, k3, k4, tmp] = k;
    f(t, x, k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    f(t + 0.5 * dt, tmp, k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    f(t + 0.5 * dt, tmp, k3);
    for i in 0..n {
        tmp[i] = x[i] + dt * k3[i];
    }
    f(t + dt, tmp, k4);
    for i in 0..n {
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

pub(crate) fn rk4_scratch(n: usize) -> [Vec<f64>; 5] {
    std::array::from_fn(|_| vec![0.0; n])
}
