use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::system::UnitMap;

/// Smallest capacitance the behavioral model accepts.
pub const MIN_CAPACITANCE: f64 = 1e-15;
/// Smallest bias current the behavioral model accepts.
pub const MIN_BIAS_CURRENT: f64 = 1e-12;

/// Which of `C` and `I_dc` is held fixed; the other follows from `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CapacitorPolicy {
    #[serde(rename = "fixed_I_dc")]
    FixedIdc(f64),
    #[serde(rename = "fixed_C")]
    FixedC(f64),
}

/// Conserved branch-current sums `S = √I_A + √I_B`, one per dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum SumSpec {
    /// `S = 2·√(10·I_dc)`, i.e. `I_A0 = I_B0 = 10·I_dc`.
    Auto,
    PerDim(Vec<f64>),
}

impl Serialize for SumSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SumSpec::Auto => s.serialize_str("auto"),
            SumSpec::PerDim(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for SumSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            List(Vec<f64>),
        }
        match Raw::deserialize(d)? {
            Raw::Word(w) if w == "auto" => Ok(SumSpec::Auto),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "expected \"auto\" or a list of numbers, found \"{w}\""
            ))),
            Raw::List(v) => Ok(SumSpec::PerDim(v)),
        }
    }
}

/// Process and initialization parameters shared by every NBDS core.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    /// NMOS transconductance factor `½·μn·Cox·(W/L)n` in A/V².
    pub k_n: f64,
    /// PMOS transconductance factor in A/V².
    pub k_p: f64,
    #[serde(rename = "S", default = "auto")]
    pub s: SumSpec,
    #[serde(rename = "policy")]
    pub capacitor_policy: CapacitorPolicy,
}

fn auto() -> SumSpec {
    SumSpec::Auto
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams {
            k_n: 1e-4,
            k_p: 1e-4,
            s: SumSpec::Auto,
            capacitor_policy: CapacitorPolicy::FixedIdc(1e-6),
        }
    }
}

impl DeviceParams {
    /// `β = √(k_n/k_p)`.
    pub fn beta(&self) -> f64 {
        (self.k_n / self.k_p).sqrt()
    }

    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let d: DeviceParams =
            serde_json::from_str(text).map_err(|e| SynthError::InvalidDevice(e.to_string()))?;
        d.validate()?;
        Ok(d)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("device serializes")
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |what: &str| Err(SynthError::InvalidDevice(what.to_string()));
        if !(self.k_n > 0.0 && self.k_n.is_finite()) {
            return bad("k_n must be positive and finite");
        }
        if !(self.k_p > 0.0 && self.k_p.is_finite()) {
            return bad("k_p must be positive and finite");
        }
        match self.capacitor_policy {
            CapacitorPolicy::FixedIdc(v) | CapacitorPolicy::FixedC(v)
                if !(v > 0.0 && v.is_finite()) =>
            {
                return bad("policy value must be positive and finite")
            }
            _ => {}
        }
        if let SumSpec::PerDim(list) = &self.s {
            if list.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return bad("every S must be positive and finite");
            }
        }
        Ok(())
    }

    /// `S` for dimension `dim` given its bias current.
    pub fn sum_for(&self, dim: usize, i_dc: f64) -> Result<f64, SynthError> {
        match &self.s {
            SumSpec::Auto => Ok(2.0 * (10.0 * i_dc).sqrt()),
            SumSpec::PerDim(list) => list.get(dim).copied().ok_or(SynthError::MissingS(dim)),
        }
    }
}

/// Capacitor and bias current of one NBDS core.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbdsBias {
    /// Farads.
    pub c: f64,
    /// Amperes.
    pub i_dc: f64,
    /// Seconds.
    pub tau_circuit: f64,
}

impl NbdsBias {
    /// `C/I_dc` required for time constant `tau_circuit`.
    pub fn required_ratio(tau_circuit: f64, k_n: f64, beta: f64) -> f64 {
        2.0 * tau_circuit * k_n.sqrt() / (2.0 + beta)
    }
}

/// Bias for a state whose time constant is `tau_model` model time units.
pub fn compute_bias(
    tau_model: f64,
    units: &UnitMap,
    device: &DeviceParams,
    dim: usize,
) -> Result<NbdsBias, SynthError> {
    bias_for_circuit_tau(tau_model * units.time_scale, device, dim)
}

/// Bias for a time constant already expressed in circuit seconds.
pub fn bias_for_circuit_tau(
    tau_circuit: f64,
    device: &DeviceParams,
    dim: usize,
) -> Result<NbdsBias, SynthError> {
    if !(tau_circuit > 0.0 && tau_circuit.is_finite()) {
        return Err(SynthError::InvalidDevice(format!(
            "time constant of dimension {dim} must be positive"
        )));
    }
    let ratio = NbdsBias::required_ratio(tau_circuit, device.k_n, device.beta());
    let (c, i_dc) = match device.capacitor_policy {
        CapacitorPolicy::FixedIdc(i_dc) => (ratio * i_dc, i_dc),
        CapacitorPolicy::FixedC(c) => (c, c / ratio),
    };
    if c < MIN_CAPACITANCE || i_dc < MIN_BIAS_CURRENT {
        return Err(SynthError::NonPhysicalBias { dim, c, i_dc });
    }
    Ok(NbdsBias {
        c,
        i_dc,
        tau_circuit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn one_millisecond_core() {
        let device = DeviceParams::default();
        let units = UnitMap::default();
        let b = compute_bias(1.0, &units, &device, 0).unwrap();
        // 2 · 1e-3 · 0.01 / 3 seconds·√(A)/V per ampere of bias.
        let ratio = 2.0 * 1e-3 * 0.01 / 3.0;
        assert!(rel(b.c / b.i_dc, ratio) < 1e-12);
        assert!(rel(b.c, 6.666_666_666_666_667e-12) < 1e-12);
        assert_eq!(b.i_dc, 1e-6);
        assert_eq!(b.tau_circuit, 1e-3);
    }

    #[test]
    fn symmetric_devices_give_unit_beta() {
        let device = DeviceParams {
            k_n: 3e-5,
            k_p: 3e-5,
            ..Default::default()
        };
        assert_eq!(device.beta(), 1.0);
        let b = bias_for_circuit_tau(2e-3, &device, 0).unwrap();
        assert!(rel(b.c / b.i_dc, 2.0 * 2e-3 * 3e-5f64.sqrt() / 3.0) < 1e-12);
    }

    #[test]
    fn shared_capacitor_scales_bias_inversely_with_tau() {
        let device = DeviceParams {
            capacitor_policy: CapacitorPolicy::FixedC(10e-12),
            ..Default::default()
        };
        let units = UnitMap::default();
        let v = compute_bias(1.0, &units, &device, 0).unwrap();
        let w = compute_bias(1.0 / 0.18, &units, &device, 1).unwrap();
        assert_eq!(v.c, w.c);
        assert!(rel(w.i_dc / v.i_dc, 0.18) < 1e-12);
    }

    #[test]
    fn below_modeling_floor() {
        let device = DeviceParams {
            capacitor_policy: CapacitorPolicy::FixedIdc(1e-13),
            ..Default::default()
        };
        assert!(matches!(
            bias_for_circuit_tau(1e-3, &device, 2),
            Err(SynthError::NonPhysicalBias { dim: 2, .. })
        ));
        let device = DeviceParams {
            capacitor_policy: CapacitorPolicy::FixedIdc(1e-9),
            ..Default::default()
        };
        // C = 6.7e-19 F
        assert!(matches!(
            bias_for_circuit_tau(1e-6, &device, 0),
            Err(SynthError::NonPhysicalBias { .. })
        ));
    }

    #[test]
    fn device_file() {
        let d = DeviceParams::from_json(
            r#"{"k_n": 2e-4, "k_p": 5e-5, "S": [0.002, 0.003], "policy": {"fixed_C": 1e-11}}"#,
        )
        .unwrap();
        assert_eq!(d.beta(), 2.0);
        assert_eq!(d.s, SumSpec::PerDim(vec![0.002, 0.003]));
        assert_eq!(d.capacitor_policy, CapacitorPolicy::FixedC(1e-11));
        assert_eq!(d.sum_for(1, 1e-6).unwrap(), 0.003);
        assert!(matches!(d.sum_for(2, 1e-6), Err(SynthError::MissingS(2))));
        assert_eq!(DeviceParams::from_json(&d.to_json()).unwrap(), d);

        let auto = DeviceParams::from_json(
            r#"{"k_n": 1e-4, "k_p": 1e-4, "S": "auto", "policy": {"fixed_I_dc": 1e-6}}"#,
        )
        .unwrap();
        assert_eq!(auto, DeviceParams::default());
        assert!((auto.sum_for(0, 1e-6).unwrap().powi(2) - 40e-6).abs() < 1e-18);

        assert!(DeviceParams::from_json(r#"{"k_n": -1, "k_p": 1, "policy": {"fixed_C": 1}}"#).is_err());
        assert!(DeviceParams::from_json(r#"{"k_n": 1, "k_p": 1, "S": "manual", "policy": {"fixed_C": 1}}"#).is_err());
    }
}
