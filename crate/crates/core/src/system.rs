//! Dynamical systems in canonical form `τ_N·ẋ_N = F_N(x, u)`.

mod builtin;
mod electrical;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::expr::{is_valid_symbol, parse_expr, Expr, ParseError};

pub use builtin::{builtin, AstrocyteParams, FhnParams, FhnScaleCurrents, BUILTIN_NAMES};
pub use electrical::to_electrical;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("cannot parse rhs of `{state}`: {source}")]
    Parse { state: String, source: ParseError },
    #[error("unknown symbol `{symbol}` in equation for `{equation}`")]
    UnknownSymbol { symbol: String, equation: String },
    #[error("time constant of `{0}` must be positive and finite")]
    NonPositiveTau(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("no parameter named `{0}`")]
    UnknownParameter(String),
    #[error("invalid value for `{name}`: {reason}")]
    InvalidValue { name: String, reason: String },
}

/// Maps model units onto circuit currents and time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitMap {
    /// Amperes per model unit.
    pub current_per_unit: f64,
    /// Circuit seconds per model time unit.
    pub time_scale: f64,
}

impl Default for UnitMap {
    fn default() -> Self {
        UnitMap {
            current_per_unit: 1e-6,
            time_scale: 1e-3,
        }
    }
}

impl UnitMap {
    pub fn identity() -> Self {
        UnitMap {
            current_per_unit: 1.0,
            time_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("current_per_unit", self.current_per_unit),
            ("time_scale", self.time_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::InvalidValue {
                    name: name.into(),
                    reason: "must be positive and finite".into(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateEquation {
    pub name: String,
    pub tau: f64,
    pub rhs: Expr,
    pub initial_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Input {
    pub name: String,
    /// Drive used when a simulation does not specify one.
    pub default: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolKind {
    State(usize),
    Input(usize),
    Parameter(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalSystem {
    pub name: String,
    pub states: Vec<StateEquation>,
    pub inputs: Vec<Input>,
    pub parameters: BTreeMap<String, f64>,
}

impl DynamicalSystem {
    /// Build and validate a system. Time constants are taken as given; see
    /// [`DynamicalSystem::canonicalized`].
    pub fn new(
        name: impl Into<String>,
        states: Vec<StateEquation>,
        inputs: Vec<Input>,
        parameters: BTreeMap<String, f64>,
    ) -> Result<Self, ModelError> {
        let sys = DynamicalSystem {
            name: name.into(),
            states,
            inputs,
            parameters,
        };
        sys.validate()?;
        Ok(sys)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.states.is_empty() {
            return Err(ModelError::Schema("system has no states".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let names = self
            .states
            .iter()
            .map(|s| &s.name)
            .chain(self.inputs.iter().map(|i| &i.name))
            .chain(self.parameters.keys());
        for n in names {
            if !is_valid_symbol(n) {
                return Err(ModelError::Schema(format!("invalid symbol name `{n}`")));
            }
            if !seen.insert(n.as_str()) {
                return Err(ModelError::Schema(format!("symbol `{n}` declared twice")));
            }
        }
        for (name, v) in &self.parameters {
            if !v.is_finite() {
                return Err(ModelError::InvalidValue {
                    name: name.clone(),
                    reason: "parameter must be finite".into(),
                });
            }
        }
        for st in &self.states {
            if !(st.tau.is_finite() && st.tau > 0.0) {
                return Err(ModelError::NonPositiveTau(st.name.clone()));
            }
            if !st.initial_value.is_finite() {
                return Err(ModelError::InvalidValue {
                    name: st.name.clone(),
                    reason: "initial value must be finite".into(),
                });
            }
            for sym in st.rhs.symbols() {
                if self.kind_of(&sym).is_none() {
                    return Err(ModelError::UnknownSymbol {
                        symbol: sym,
                        equation: st.name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn kind_of(&self, symbol: &str) -> Option<SymbolKind> {
        if let Some(i) = self.states.iter().position(|s| s.name == symbol) {
            return Some(SymbolKind::State(i));
        }
        if let Some(i) = self.inputs.iter().position(|s| s.name == symbol) {
            return Some(SymbolKind::Input(i));
        }
        self.parameters.get(symbol).map(|v| SymbolKind::Parameter(*v))
    }

    pub fn is_signal(&self, symbol: &str) -> bool {
        matches!(
            self.kind_of(symbol),
            Some(SymbolKind::State(_) | SymbolKind::Input(_))
        )
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    pub fn with_parameter(mut self, name: &str, value: f64) -> Result<Self, ModelError> {
        match self.parameters.get_mut(name) {
            Some(v) => *v = value,
            None => return Err(ModelError::UnknownParameter(name.into())),
        }
        self.validate()?;
        Ok(self)
    }

    pub fn with_initial(mut self, state: &str, value: f64) -> Result<Self, ModelError> {
        let i = self
            .state_index(state)
            .ok_or_else(|| ModelError::UnknownParameter(state.into()))?;
        self.states[i].initial_value = value;
        self.validate()?;
        Ok(self)
    }

    pub fn with_input_default(mut self, input: &str, value: f64) -> Result<Self, ModelError> {
        let i = self
            .inputs
            .iter()
            .position(|s| s.name == input)
            .ok_or_else(|| ModelError::UnknownParameter(input.into()))?;
        self.inputs[i].default = value;
        Ok(self)
    }

    /// Absorb a leading positive constant factor of each RHS into its time
    /// constant: `τ·ẋ = c·g` becomes `(τ/c)·ẋ = g`.
    pub fn canonicalized(&self) -> Self {
        let mut out = self.clone();
        for st in &mut out.states {
            if let Expr::Mul(factors) = &st.rhs {
                if let Expr::Constant(c) = factors[0] {
                    if c > 0.0 && c.is_finite() {
                        st.tau /= c;
                        st.rhs = Expr::product(factors[1..].to_vec());
                    }
                }
            }
        }
        out
    }

    /// Serialize to the model-file format.
    pub fn to_document(&self) -> String {
        let doc = ModelDoc {
            name: self.name.clone(),
            description: None,
            states: self
                .states
                .iter()
                .map(|s| StateDoc {
                    name: s.name.clone(),
                    tau: s.tau,
                    rhs: s.rhs.to_string(),
                    init: s.initial_value,
                })
                .collect(),
            inputs: self
                .inputs
                .iter()
                .map(|i| InputDoc::Full {
                    name: i.name.clone(),
                    default: i.default,
                })
                .collect(),
            params: self.parameters.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("model document serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    states: Vec<StateDoc>,
    #[serde(default)]
    inputs: Vec<InputDoc>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateDoc {
    name: String,
    tau: f64,
    rhs: String,
    #[serde(default)]
    init: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum InputDoc {
    Name(String),
    Full {
        name: String,
        #[serde(default)]
        default: f64,
    },
}

/// Parse and validate a JSON model document, canonicalizing time constants.
pub fn load_system(document: &str) -> Result<DynamicalSystem, ModelError> {
    let doc: ModelDoc =
        serde_json::from_str(document).map_err(|e| ModelError::Schema(e.to_string()))?;
    let mut states = Vec::with_capacity(doc.states.len());
    for s in doc.states {
        let rhs = parse_expr(&s.rhs).map_err(|source| ModelError::Parse {
            state: s.name.clone(),
            source,
        })?;
        if !(s.tau.is_finite() && s.tau > 0.0) {
            return Err(ModelError::NonPositiveTau(s.name));
        }
        states.push(StateEquation {
            name: s.name,
            tau: s.tau,
            rhs,
            initial_value: s.init,
        });
    }
    let inputs = doc
        .inputs
        .into_iter()
        .map(|i| match i {
            InputDoc::Name(name) => Input { name, default: 0.0 },
            InputDoc::Full { name, default } => Input { name, default },
        })
        .collect();
    Ok(DynamicalSystem::new(doc.name, states, inputs, doc.params)?.canonicalized())
}
