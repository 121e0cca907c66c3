//! The synapse, FitzHugh–Nagumo neuron and astrocyte calcium models.

use std::collections::BTreeMap;

use super::{DynamicalSystem, Input, ModelError, StateEquation, UnitMap};
use crate::expr::parse_expr;

pub const BUILTIN_NAMES: [&str; 3] = ["synapse", "fhn", "astrocyte"];

/// A built-in model in model units with canonical time constants.
pub fn builtin(name: &str) -> Result<DynamicalSystem, ModelError> {
    match name {
        "synapse" => Ok(synapse()),
        "fhn" => FhnParams::default().system(),
        "astrocyte" => AstrocyteParams::default().system(),
        other => Err(ModelError::UnknownModel(other.into())),
    }
}

fn state(name: &str, tau: f64, rhs: &str, init: f64) -> StateEquation {
    StateEquation {
        name: name.into(),
        tau,
        rhs: parse_expr(rhs).expect("built-in rhs parses"),
        initial_value: init,
    }
}

/// First-order low-pass synapse `τ·ṡ = −s + I_ext`.
fn synapse() -> DynamicalSystem {
    DynamicalSystem::new(
        "synapse",
        vec![state("s", 1.0, "-s + I_ext", 0.0)],
        vec![Input {
            name: "I_ext".into(),
            default: 1.0,
        }],
        BTreeMap::new(),
    )
    .expect("synapse is valid")
}

/// FitzHugh–Nagumo constants: `ẇ = a·(v + offset − w_gain·w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhnParams {
    pub a_recovery: f64,
    pub offset: f64,
    pub w_gain: f64,
    /// Default external drive in model units.
    pub i_ext: f64,
}

impl Default for FhnParams {
    fn default() -> Self {
        FhnParams {
            a_recovery: 0.18,
            offset: 0.7,
            w_gain: 0.8,
            i_ext: 0.5,
        }
    }
}

/// Scale currents of the electrical FHN equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhnScaleCurrents {
    pub i_x: f64,
    pub i_b: f64,
    pub i_c: f64,
    pub i_d: f64,
}

impl FhnParams {
    pub fn system(&self) -> Result<DynamicalSystem, ModelError> {
        if !(self.a_recovery > 0.0 && self.a_recovery.is_finite()) {
            return Err(ModelError::InvalidValue {
                name: "a_recovery".into(),
                reason: "must be positive".into(),
            });
        }
        let w_rhs = format!(
            "{}*(v + {} - {}*w)",
            self.a_recovery, self.offset, self.w_gain
        );
        let sys = DynamicalSystem::new(
            "fhn",
            vec![
                state("v", 1.0, "v - v^3/3 - w + I_ext", 0.0),
                state("w", 1.0, &w_rhs, 0.0),
            ],
            vec![Input {
                name: "I_ext".into(),
                default: self.i_ext,
            }],
            BTreeMap::new(),
        )?;
        Ok(sys.canonicalized())
    }

    /// `I_x` normalizes products, `I_b·I_x` divides the cubic term, `I_c` and
    /// `I_d` carry the offset and the recovery gain.
    pub fn scale_currents(&self, units: &UnitMap) -> FhnScaleCurrents {
        let u = units.current_per_unit;
        FhnScaleCurrents {
            i_x: u,
            i_b: 3.0 * u,
            i_c: self.offset * u,
            i_d: self.w_gain * u,
        }
    }
}

/// Two-pool calcium model with Hill exponents `m = n = p = 1`.
///
/// The numeric defaults were obtained by sweeping `K2` and
/// `beta_stim` around the classic Goldbeter set until the reference
/// integrator showed a sustained oscillation (period ≈ 0.99 model time
/// units). They are a tuned operating point, not measured data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AstrocyteParams {
    pub z0: f64,
    pub z1: f64,
    pub beta_stim: f64,
    pub v_m2: f64,
    pub v_m3: f64,
    pub k2: f64,
    pub kr: f64,
    pub ka: f64,
    pub k_f: f64,
    pub k: f64,
    pub x0: f64,
    pub y0: f64,
}

impl Default for AstrocyteParams {
    fn default() -> Self {
        AstrocyteParams {
            z0: 1.0,
            z1: 7.3,
            beta_stim: 0.3,
            v_m2: 65.0,
            v_m3: 500.0,
            k2: 0.1,
            kr: 2.0,
            ka: 0.9,
            k_f: 1.0,
            k: 10.0,
            x0: 0.1,
            y0: 1.0,
        }
    }
}

impl AstrocyteParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("z0", self.z0),
            ("z1", self.z1),
            ("V_M2", self.v_m2),
            ("V_M3", self.v_m3),
            ("K2", self.k2),
            ("KR", self.kr),
            ("KA", self.ka),
            ("k_f", self.k_f),
            ("k", self.k),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::InvalidValue {
                    name: name.into(),
                    reason: "must be positive".into(),
                });
            }
        }
        if !(0.0..=1.0).contains(&self.beta_stim) {
            return Err(ModelError::InvalidValue {
                name: "beta_stim".into(),
                reason: "must lie in [0, 1]".into(),
            });
        }
        Ok(())
    }

    pub fn system(&self) -> Result<DynamicalSystem, ModelError> {
        self.validate()?;
        let z2 = "V_M2*X/(K2 + X)";
        let z3 = "V_M3*Y/(KR + Y)*X/(KA + X)";
        let params: BTreeMap<String, f64> = [
            ("z0", self.z0),
            ("z1", self.z1),
            ("beta_stim", self.beta_stim),
            ("V_M2", self.v_m2),
            ("V_M3", self.v_m3),
            ("K2", self.k2),
            ("KR", self.kr),
            ("KA", self.ka),
            ("k_f", self.k_f),
            ("k", self.k),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        DynamicalSystem::new(
            "astrocyte",
            vec![
                state(
                    "X",
                    1.0,
                    &format!("z0 + z1*beta_stim - {z2} + {z3} + k_f*Y - k*X"),
                    self.x0,
                ),
                state("Y", 1.0, &format!("{z2} - {z3} - k_f*Y"), self.y0),
            ],
            Vec::new(),
            params,
        )
    }
}
