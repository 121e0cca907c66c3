//! Compilation of electrical-domain systems into NBDS block netlists.

mod build;
mod check;
pub mod dataflow;
mod device;
mod dot;
mod netlist;

use thiserror::Error;

pub use build::synthesize;
pub use check::{validate_netlist, NetlistDiagnostic, BIAS_RATIO_TOLERANCE};
pub use dataflow::{Dataflow, DENOMINATOR_FLOOR};
pub use device::{
    bias_for_circuit_tau, compute_bias, CapacitorPolicy, DeviceParams, NbdsBias, SumSpec,
    MIN_BIAS_CURRENT, MIN_CAPACITANCE,
};
pub use dot::export_dot;
pub use netlist::{
    export_json, import_json, Block, BlockKind, Census, DeviceSummary, Net, NetId, Netlist,
    Polarity, NETLIST_SCHEMA,
};

use crate::expr::Diagnostic;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("state `{state}` is not synthesizable: {}", join(diagnostics))]
    Unsynthesizable {
        state: String,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("no S given for dimension {0}")]
    MissingS(usize),
    #[error("dimension {dim}: C = {c:e} F, I_dc = {i_dc:e} A is below the modeling floor")]
    NonPhysicalBias { dim: usize, c: f64, i_dc: f64 },
    #[error("invalid device parameters: {0}")]
    InvalidDevice(String),
    #[error("netlist schema error: {0}")]
    Schema(String),
    #[error("netlist is inconsistent: {}", join(.0))]
    Netlist(Vec<NetlistDiagnostic>),
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
