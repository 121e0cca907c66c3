use super::{rk4_scratch, rk4_step, Event, EventKind, SimConfig, SimError, Trace};
use crate::expr::CompiledExpr;
use crate::system::DynamicalSystem;

/// Integrate `ẋ_N = F_N/τ_N` with classical RK4 at fixed `cfg.dt`.
pub fn integrate_reference(system: &DynamicalSystem, cfg: &SimConfig) -> Result<Trace, SimError> {
    cfg.validate()?;
    let n = system.dimension();
    let names: Vec<String> = system.inputs.iter().map(|i| i.name.clone()).collect();
    let defaults: Vec<f64> = system.inputs.iter().map(|i| i.default).collect();
    let drives = cfg.resolve_drives(&names, &defaults)?;

    let params: Vec<(&String, f64)> = system.parameters.iter().map(|(k, v)| (k, *v)).collect();
    let slot = |s: &str| -> Option<usize> {
        system
            .state_index(s)
            .or_else(|| names.iter().position(|x| x == s).map(|i| n + i))
            .or_else(|| {
                params
                    .iter()
                    .position(|(k, _)| k.as_str() == s)
                    .map(|i| n + names.len() + i)
            })
    };
    let compiled: Vec<CompiledExpr> = system
        .states
        .iter()
        .map(|st| st.rhs.compile(&slot))
        .collect::<Result<_, _>>()
        .map_err(|e| SimError::Config(e.to_string()))?;
    let inv_tau: Vec<f64> = system.states.iter().map(|st| 1.0 / st.tau).collect();
    let mut slots = vec![0.0; n + names.len() + params.len()];
    for (i, (_, v)) in params.iter().enumerate() {
        slots[n + names.len() + i] = *v;
    }
    let mut stack = Vec::new();

    let mut f = |t: f64, x: &[f64], dx: &mut [f64]| {
        slots[..n].copy_from_slice(x);
        for (i, w) in drives.iter().enumerate() {
            slots[n + i] = w.at(t);
        }
        for i in 0..n {
            dx[i] = compiled[i].eval_unguarded(&slots, &mut stack) * inv_tau[i];
        }
    };

    let mut trace = Trace::new(system.states.iter().map(|s| s.name.clone()).collect());
    let mut x: Vec<f64> = system.states.iter().map(|s| s.initial_value).collect();
    let mut k = rk4_scratch(n);
    trace.record(0.0, &x);
    let steps = cfg.steps();
    for step in 0..steps {
        let t = step as f64 * cfg.dt;
        rk4_step(&mut f, t, cfg.dt, &mut x, &mut k);
        let t_next = (step + 1) as f64 * cfg.dt;
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
        if (step + 1) % cfg.record_stride == 0 {
            trace.record(t_next, &x);
        }
    }
    Ok(trace)
}
