use super::{rk4_scratch, rk4_step, Event, EventKind, SimConfig, SimError, Trace};
use crate::synth::{validate_netlist, Block, Dataflow, Netlist};

/// `(I_A, I_B)` with `I_B − I_A = i_out` and `√I_A + √I_B = s`.
pub fn recover_branch_currents(i_out: f64, s: f64) -> Result<(f64, f64), SimError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(SimError::Config(format!("S must be positive, got {s}")));
    }
    let limit = s * s;
    if !(i_out.abs() <= limit) {
        return Err(SimError::RangeViolation { i_out, limit });
    }
    Ok(split(i_out, s))
}

fn split(i_out: f64, s: f64) -> (f64, f64) {
    let a = 0.5 * (s - i_out / s);
    let b = 0.5 * (s + i_out / s);
    (a * a, b * b)
}

/// Internal currents of one NBDS core at an accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NbdsState {
    pub i_out: f64,
    pub s: f64,
    pub i_a: f64,
    pub i_b: f64,
    /// Capacitor current.
    pub i_cin: f64,
}

struct Core {
    s: f64,
    limit: f64,
    /// `I_dc`.
    i_dc: f64,
    /// `2√k_n / ((2+β)·C)`.
    gain: f64,
}

impl Core {
    fn state(&self, i_out: f64, f: f64) -> NbdsState {
        let (i_a, i_b) = split(i_out.clamp(-self.limit, self.limit), self.s);
        let sum = i_a.sqrt() + i_b.sqrt();
        NbdsState {
            i_out,
            s: self.s,
            i_a,
            i_b,
            i_cin: f * self.i_dc / sum,
        }
    }

    fn derivative(&self, i_out: f64, f: f64) -> f64 {
        let st = self.state(i_out, f);
        (st.i_a.sqrt() + st.i_b.sqrt()) * self.gain * st.i_cin
    }
}

struct Model {
    flow: Dataflow,
    cores: Vec<Core>,
    drives: Vec<super::Waveform>,
    inputs: Vec<f64>,
    /// MULT blocks whose divisor was clamped during the current step.
    floored: Vec<usize>,
}

impl Model {
    fn settle(&mut self, t: f64, xs: &[f64]) {
        for (v, w) in self.inputs.iter_mut().zip(&self.drives) {
            *v = w.at(t);
        }
        self.flow.evaluate(xs, &self.inputs);
        self.floored.extend_from_slice(self.flow.floored_blocks());
    }

    fn derivative(&mut self, t: f64, xs: &[f64], dx: &mut [f64]) {
        self.settle(t, xs);
        for (d, core) in self.cores.iter().enumerate() {
            dx[d] = core.derivative(xs[d], self.flow.rhs(d));
        }
    }

    fn core_states(&mut self, t: f64, xs: &[f64]) -> Vec<NbdsState> {
        self.settle(t, xs);
        self.cores
            .iter()
            .enumerate()
            .map(|(d, core)| core.state(xs[d], self.flow.rhs(d)))
            .collect()
    }
}

/// Integrate the circuit-level dynamics of every NBDS core.
pub fn integrate_netlist(netlist: &Netlist, cfg: &SimConfig) -> Result<Trace, SimError> {
    integrate_netlist_with_probe(netlist, cfg, None)
}

/// Callback receiving the time and the core states.
pub type Probe<'a> = &'a mut dyn FnMut(f64, &[NbdsState]);

/// As [`integrate_netlist`], handing the core states at every accepted step
/// (including `t = 0`) to `probe`.
pub fn integrate_netlist_with_probe(
    netlist: &Netlist,
    cfg: &SimConfig,
    mut probe: Option<Probe<'_>>,
) -> Result<Trace, SimError> {
    cfg.validate()?;
    let diagnostics = validate_netlist(netlist);
    if !diagnostics.is_empty() {
        let text: Vec<String> = diagnostics.iter().map(ToString::to_string).collect();
        return Err(SimError::Netlist(text.join("; ")));
    }
    let flow = Dataflow::new(netlist).map_err(|e| SimError::Netlist(format!("{e:?}")))?;
    let n = netlist.dimension;
    let ports = netlist.input_ports();
    let names: Vec<String> = ports.iter().map(|p| p.0.clone()).collect();
    let defaults: Vec<f64> = ports.iter().map(|p| p.1).collect();
    let drives = cfg.resolve_drives(&names, &defaults)?;

    let beta = netlist.device.beta;
    let root_kn = netlist.device.k_n.sqrt();
    let mut cores = Vec::with_capacity(n);
    let mut x = vec![0.0; n];
    for (dim, idx) in netlist.nbds_blocks().into_iter().enumerate() {
        let Some(Block::Nbds {
            bias, s, initial, ..
        }) = idx.map(|i| &netlist.blocks[i])
        else {
            return Err(SimError::Netlist(format!("no NBDS for dimension {dim}")));
        };
        cores.push(Core {
            s: *s,
            limit: s * s,
            i_dc: bias.i_dc,
            gain: 2.0 * root_kn / ((2.0 + beta) * bias.c),
        });
        x[dim] = *initial;
    }
    let mut model = Model {
        flow,
        cores,
        inputs: vec![0.0; drives.len()],
        drives,
        floored: Vec::new(),
    };

    let mut trace = Trace::new(netlist.state_names());
    let mut violating = vec![false; n];
    let mut floor_active: Vec<usize> = Vec::new();
    clamp(&mut x, &model, &mut violating, &mut trace, 0.0);
    if let Some(p) = probe.as_mut() {
        p(0.0, &model.core_states(0.0, &x));
    }
    trace.record(0.0, &x);
    let mut k = rk4_scratch(n);
    for step in 0..cfg.steps() {
        let t = step as f64 * cfg.dt;
        model.floored.clear();
        rk4_step(
            &mut |tt: f64, xs: &[f64], dx: &mut [f64]| model.derivative(tt, xs, dx),
            t,
            cfg.dt,
            &mut x,
            &mut k,
        );
        let t_next = (step + 1) as f64 * cfg.dt;

        let mut now: Vec<usize> = std::mem::take(&mut model.floored);
        now.sort_unstable();
        now.dedup();
        for b in &now {
            if !floor_active.contains(b) {
                trace.events.push(Event {
                    time: t,
                    kind: EventKind::DenominatorFloor,
                    detail: format!("MULT block {b} divisor clamped to 1 pA"),
                });
            }
        }
        floor_active = now;

        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            trace.events.push(Event {
                time: t_next,
                kind: EventKind::NonFiniteState,
                detail: format!("{} = {}", trace.states[i], x[i]),
            });
            return Err(SimError::NonFiniteState {
                time: t_next,
                partial: Box::new(trace),
            });
        }
        clamp(&mut x, &model, &mut violating, &mut trace, t_next);
        if let Some(p) = probe.as_mut() {
            p(t_next, &model.core_states(t_next, &x));
        }
        if (step + 1) % cfg.record_stride == 0 {
            trace.record(t_next, &x);
        }
    }
    Ok(trace)
}

/// Hold every `I_out` inside `±S²`, logging entry into the clamped region.
fn clamp(x: &mut [f64], model: &Model, violating: &mut [bool], trace: &mut Trace, t: f64) {
    for (d, core) in model.cores.iter().enumerate() {
        if x[d].abs() > core.limit {
            if !violating[d] {
                trace.events.push(Event {
                    time: t,
                    kind: EventKind::RangeViolation,
                    detail: format!(
                        "{}: |I_out| = {:e} A > S^2 = {:e} A",
                        trace.states[d],
                        x[d].abs(),
                        core.limit
                    ),
                });
            }
            violating[d] = true;
            x[d] = x[d].clamp(-core.limit, core.limit);
        } else if x[d].abs() < core.limit {
            violating[d] = false;
        }
    }
}
