use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SimError;

/// An input current as a function of time, in amperes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    Constant(f64),
    /// Zero before `t0`, `level` from `t0` on.
    Step { t0: f64, level: f64 },
    /// Linear interpolation through `(t, value)` points, held flat outside.
    Piecewise(Vec<(f64, f64)>),
}

impl Waveform {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Waveform::Constant(v) => *v,
            Waveform::Step { t0, level } => {
                if t >= *t0 {
                    *level
                } else {
                    0.0
                }
            }
            Waveform::Piecewise(points) => {
                let Some(first) = points.first() else {
                    return 0.0;
                };
                if t <= first.0 {
                    return first.1;
                }
                for w in points.windows(2) {
                    let ((t0, v0), (t1, v1)) = (w[0], w[1]);
                    if t <= t1 {
                        if t1 == t0 {
                            return v1;
                        }
                        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
                    }
                }
                points.last().map_or(0.0, |p| p.1)
            }
        }
    }

    fn validate(&self) -> Result<(), String> {
        let finite = |v: f64| v.is_finite();
        match self {
            Waveform::Constant(v) if !finite(*v) => Err("non-finite level".into()),
            Waveform::Step { t0, level } if !finite(*t0) || !finite(*level) => {
                Err("non-finite step".into())
            }
            Waveform::Piecewise(p) if p.is_empty() => Err("empty table".into()),
            Waveform::Piecewise(p)
                if p.iter().any(|(t, v)| !finite(*t) || !finite(*v))
                    || p.windows(2).any(|w| w[1].0 < w[0].0) =>
            {
                Err("table times must be finite and non-decreasing".into())
            }
            _ => Ok(()),
        }
    }
}

/// `<value>`, `step:<t0>,<level>` or `pwl:<t>,<v>;<t>,<v>;...`.
impl FromStr for Waveform {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        let bad = || SimError::Config(format!("cannot read waveform `{s}`"));
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        let pair = |x: &str| -> Result<(f64, f64), SimError> {
            let (a, b) = x.split_once(',').ok_or_else(bad)?;
            Ok((num(a)?, num(b)?))
        };
        let w = if let Some(rest) = s.strip_prefix("step:") {
            let (t0, level) = pair(rest)?;
            Waveform::Step { t0, level }
        } else if let Some(rest) = s.strip_prefix("pwl:") {
            Waveform::Piecewise(rest.split(';').map(pair).collect::<Result<_, _>>()?)
        } else {
            Waveform::Constant(num(s)?)
        };
        w.validate().map_err(SimError::Config)?;
        Ok(w)
    }
}

/// Fixed-step integration settings, in circuit seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Record every `record_stride`-th step.
    pub record_stride: usize,
    /// Drives by input name; undriven inputs hold their default.
    pub drives: BTreeMap<String, Waveform>,
}

pub const MAX_STEPS: f64 = 1e9;

impl SimConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        SimConfig {
            dt,
            t_end,
            record_stride: 1,
            drives: BTreeMap::new(),
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_drive(mut self, input: &str, w: Waveform) -> Self {
        self.drives.insert(input.to_string(), w);
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive and finite");
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be non-negative and finite");
        }
        if self.t_end > 0.0 && self.dt > self.t_end {
            return bad("dt must not exceed t_end");
        }
        if self.t_end / self.dt > MAX_STEPS {
            return bad("more than 1e9 steps");
        }
        if self.record_stride == 0 {
            return bad("record stride must be at least 1");
        }
        for (name, w) in &self.drives {
            w.validate()
                .map_err(|m| SimError::Config(format!("drive `{name}`: {m}")))?;
        }
        Ok(())
    }

    /// Number of steps; `t_end` within 1e-9 steps of a grid point counts as
    /// that point.
    pub fn steps(&self) -> usize {
        let r = self.t_end / self.dt;
        let nearest = r.round();
        if (r - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            r.floor() as usize
        }
    }

    /// Per-input waveforms in `names` order, falling back to `defaults`.
    pub(crate) fn resolve_drives(
        &self,
        names: &[String],
        defaults: &[f64],
    ) -> Result<Vec<Waveform>, SimError> {
        if let Some(unknown) = self.drives.keys().find(|k| !names.contains(k)) {
            return Err(SimError::UnknownInput(unknown.clone()));
        }
        Ok(names
            .iter()
            .zip(defaults)
            .map(|(n, d)| {
                self.drives
                    .get(n)
                    .cloned()
                    .unwrap_or(Waveform::Constant(*d))
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waveform_values() {
        assert_eq!(Waveform::Constant(2.0).at(5.0), 2.0);
        let s = Waveform::Step {
            t0: 1.0,
            level: 3.0,
        };
        assert_eq!((s.at(0.999), s.at(1.0)), (0.0, 3.0));
        let p = Waveform::Piecewise(vec![(0.0, 0.0), (1.0, 2.0), (1.0, 5.0), (2.0, 5.0)]);
        assert_eq!(p.at(-1.0), 0.0);
        assert_eq!(p.at(0.5), 1.0);
        assert_eq!(p.at(1.5), 5.0);
        assert_eq!(p.at(9.0), 5.0);
    }

    #[test]
    fn waveform_text() {
        assert_eq!("1e-6".parse::<Waveform>().unwrap(), Waveform::Constant(1e-6));
        assert_eq!(
            "step:0.001,2e-6".parse::<Waveform>().unwrap(),
            Waveform::Step {
                t0: 1e-3,
                level: 2e-6
            }
        );
        assert_eq!(
            "pwl:0,0;1e-3,1e-6".parse::<Waveform>().unwrap(),
            Waveform::Piecewise(vec![(0.0, 0.0), (1e-3, 1e-6)])
        );
        for bad in ["", "step:1", "pwl:1,0;0,1", "abc", "step:nan,1"] {
            assert!(bad.parse::<Waveform>().is_err(), "{bad}");
        }
    }

    #[test]
    fn config_bounds() {
        assert!(SimConfig::new(1e-6, 1e-3).validate().is_ok());
        assert!(SimConfig::new(1e-6, 0.0).validate().is_ok());
        assert!(SimConfig::new(0.0, 1e-3).validate().is_err());
        assert!(SimConfig::new(2e-3, 1e-3).validate().is_err());
        assert!(SimConfig::new(1e-12, 10.0).validate().is_err());
        assert!(SimConfig::new(1e-6, 1e-3).with_stride(0).validate().is_err());
    }

    #[test]
    fn step_count_tolerates_rounding() {
        assert_eq!(SimConfig::new(1e-6, 1e-3).steps(), 1000);
        assert_eq!(SimConfig::new(0.1, 0.3).steps(), 3);
        assert_eq!(SimConfig::new(0.4, 1.0).steps(), 2);
        assert_eq!(SimConfig::new(1e-6, 0.0).steps(), 0);
    }
}
