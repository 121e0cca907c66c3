//! One PASS/FAIL line per acceptance criterion.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nbds_core::expr::split_terms;
use nbds_core::simulate::{
    compare_traces, estimate_period, integrate_netlist, integrate_netlist_with_probe,
    integrate_reference, EventKind, NbdsState, SimConfig, Trace, Waveform,
};
use nbds_core::synth::{
    compute_bias, synthesize, CapacitorPolicy, Dataflow, DeviceParams, Netlist, SumSpec,
};
use nbds_core::system::{builtin, to_electrical, DynamicalSystem, UnitMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

fn electrical(name: &str) -> DynamicalSystem {
    to_electrical(&builtin(name).unwrap(), &UnitMap::default())
}

fn synth(e: &DynamicalSystem, device: &DeviceParams) -> Result<Netlist, String> {
    synthesize(e, device, &UnitMap::default()).map_err(|e| e.to_string())
}

fn both(e: &DynamicalSystem, cfg: &SimConfig) -> Result<(Trace, Trace), String> {
    let n = synth(e, &DeviceParams::default())?;
    let r = integrate_reference(e, cfg).map_err(|e| e.to_string())?;
    let t = integrate_netlist(&n, cfg).map_err(|e| e.to_string())?;
    Ok((r, t))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn census() -> Result<String, String> {
    let mut parts = Vec::new();
    for (name, nbds, mult) in [("synapse", 1, 0), ("fhn", 2, 2), ("astrocyte", 2, 3)] {
        let c = synth(&electrical(name), &DeviceParams::default())?.census;
        ensure(c.nbds == nbds && c.mult == mult, || {
            format!("{name}: NBDS={} MULT={}, expected {nbds}/{mult}", c.nbds, c.mult)
        })?;
        parts.push(format!("{name} NBDS={} MULT={}", c.nbds, c.mult));
    }
    Ok(parts.join(", "))
}

fn bias_ratio() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let units = UnitMap::default();
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let tau_model = 10f64.powf(rng.gen_range(-1.0..3.0));
        let k_n = 10f64.powf(rng.gen_range(-5.0..-3.0));
        let k_p = 10f64.powf(rng.gen_range(-5.0..-3.0));
        let policy = if i % 2 == 0 {
            CapacitorPolicy::FixedIdc(10f64.powf(rng.gen_range(-7.0..-5.0)))
        } else {
            CapacitorPolicy::FixedC(10f64.powf(rng.gen_range(-12.0..-10.0)))
        };
        let device = DeviceParams {
            k_n,
            k_p,
            s: SumSpec::Auto,
            capacitor_policy: policy,
        };
        let b = compute_bias(tau_model, &units, &device, 0).map_err(|e| e.to_string())?;
        let tau = tau_model * 1e-3;
        let want = 2.0 * tau * k_n.sqrt() / (2.0 + (k_n / k_p).sqrt());
        worst = worst.max(((b.c / b.i_dc) - want).abs() / want);
    }
    ensure(worst <= 1e-12, || format!("worst relative error {worst:e}"))?;
    Ok(format!("1000 draws, worst relative error {worst:.1e}"))
}

fn oracle_equivalence() -> Result<String, String> {
    let mut parts = Vec::new();
    for name in ["synapse", "fhn", "astrocyte"] {
        let e = electrical(name);
        let tau_min = e.states.iter().map(|s| s.tau).fold(f64::INFINITY, f64::min);
        let tau_max = e.states.iter().map(|s| s.tau).fold(0.0, f64::max);
        let dt = tau_min / 1000.0;
        let cfg = SimConfig::new(dt, 10.0 * tau_max);
        let (r, t) = both(&e, &cfg)?;
        ensure(t.events.is_empty(), || format!("{name}: netlist run logged events"))?;
        let c = compare_traces(&r, &t).map_err(|e| e.to_string())?;
        ensure(c.rel_rmse <= 1e-9, || format!("{name}: rel_rmse {:e}", c.rel_rmse))?;
        parts.push(format!("{name} {:.1e}", c.rel_rmse));
    }
    Ok(format!("rel_rmse: {}", parts.join(", ")))
}

fn synapse_error(dt: f64, netlist: bool) -> Result<f64, String> {
    let e = electrical("synapse");
    let tau = e.states[0].tau;
    let level = 1e-6;
    let cfg = SimConfig::new(dt, tau).with_drive("I_ext", Waveform::Step { t0: 0.0, level });
    let trace = if netlist {
        let n = synth(&e, &DeviceParams::default())?;
        integrate_netlist(&n, &cfg)
    } else {
        integrate_reference(&e, &cfg)
    }
    .map_err(|e| e.to_string())?;
    let exact = (1.0 - (-1.0f64).exp()) * level;
    let last = *trace.values[0].last().unwrap();
    ensure((trace.times.last().unwrap() - tau).abs() < 1e-3 * dt, || {
        "final sample is not at t = τ".into()
    })?;
    Ok((last - exact).abs() / exact)
}

fn synapse_analytic() -> Result<String, String> {
    let tau = electrical("synapse").states[0].tau;
    let mut parts = Vec::new();
    for (label, netlist) in [("ref", false), ("netlist", true)] {
        let fine = synapse_error(tau / 1000.0, netlist)?;
        ensure(fine <= 1e-6, || format!("{label}: relative error {fine:e} at t = τ"))?;
        let ratio = synapse_error(tau / 10.0, netlist)? / synapse_error(tau / 20.0, netlist)?;
        ensure((14.0..=18.0).contains(&ratio), || {
            format!("{label}: error ratio {ratio:.2} on halving dt")
        })?;
        parts.push(format!("{label} err {fine:.1e}, halving ratio {ratio:.2}"));
    }
    Ok(parts.join("; "))
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(lo) < 0.0) == (f(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn fhn_fixed_point() -> Result<String, String> {
    let v_star = bisect(|v| v * v * v + 0.75 * v + 2.625, -3.0, 0.0);
    let w_star = 1.25 * v_star + 0.875;
    let e = electrical("fhn");
    let cfg = SimConfig::new(1e-5, 0.2)
        .with_stride(100)
        .with_drive("I_ext", Waveform::Constant(0.0));
    let (r, t) = both(&e, &cfg)?;
    let mut parts = Vec::new();
    for (label, tr) in [("ref", &r), ("netlist", &t)] {
        let v = tr.values[0].last().unwrap() * 1e6;
        let w = tr.values[1].last().unwrap() * 1e6;
        ensure((v - v_star).abs() <= 1e-3 && (w - w_star).abs() <= 1e-3, || {
            format!("{label}: ({v:.5}, {w:.5}) µA vs ({v_star:.5}, {w_star:.5})")
        })?;
        parts.push(format!("{label} ({v:.4}, {w:.4})"));
    }
    Ok(format!(
        "oracle ({v_star:.4}, {w_star:.4}) µA; {}",
        parts.join(", ")
    ))
}

/// Upward crossings of the midrange of the trace after `skip` of it.
fn cycles(tr: &Trace, state: usize, skip: f64) -> (usize, Option<f64>) {
    let tail = tr.tail(skip);
    let v = &tail.values[state];
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo > 1e-3 * hi.abs().max(lo.abs())) {
        return (0, None);
    }
    let mid = 0.5 * (lo + hi);
    let up = v.windows(2).filter(|w| w[0] < mid && w[1] >= mid).count();
    (up.saturating_sub(1), estimate_period(&tail, state, mid))
}

fn oscillation(name: &str, cfg: &SimConfig, states: &[usize]) -> Result<String, String> {
    let e = electrical(name);
    let (r, t) = both(&e, cfg)?;
    let mut parts = Vec::new();
    for &s in states {
        let (nr, pr) = cycles(&r, s, 0.2);
        let (nt, pt) = cycles(&t, s, 0.2);
        let label = &r.states[s];
        ensure(nr >= 5 && nt >= 5, || {
            format!("{label}: {nr} reference and {nt} netlist periods")
        })?;
        let (pr, pt) = (pr.unwrap(), pt.unwrap());
        let rel = (pt - pr).abs() / pr;
        ensure(rel <= 5e-3, || format!("{label}: periods {pr:e} vs {pt:e}"))?;
        parts.push(format!(
            "{label}: {nr} periods, T = {:.4} ms (netlist {:.4} ms, Δ {rel:.1e})",
            pr * 1e3,
            pt * 1e3
        ));
    }
    Ok(parts.join("; "))
}

fn fhn_oscillation() -> Result<String, String> {
    let cfg = SimConfig::new(5e-6, 0.3).with_drive("I_ext", Waveform::Constant(0.5e-6));
    oscillation("fhn", &cfg, &[0])
}

fn astrocyte_oscillation() -> Result<String, String> {
    oscillation("astrocyte", &SimConfig::new(1e-6, 0.02), &[0, 1])
}

fn conservation_and_range() -> Result<String, String> {
    let mut worst = 0.0f64;
    for (name, cfg) in [
        ("fhn", SimConfig::new(1e-5, 0.1)),
        ("astrocyte", SimConfig::new(1e-6, 0.01)),
    ] {
        let n = synth(&electrical(name), &DeviceParams::default())?;
        let mut probe = |_: f64, cores: &[NbdsState]| {
            for c in cores {
                worst = worst.max(((c.i_a.sqrt() + c.i_b.sqrt()) - c.s).abs() / c.s);
            }
        };
        integrate_netlist_with_probe(&n, &cfg, Some(&mut probe)).map_err(|e| e.to_string())?;
    }
    ensure(worst <= 1e-12, || format!("conservation deviation {worst:e}"))?;

    let e = electrical("fhn");
    let dt = 1e-5;
    let cfg = SimConfig::new(dt, 0.1).with_drive("I_ext", Waveform::Constant(0.5e-6));
    let r = integrate_reference(&e, &cfg).map_err(|e| e.to_string())?;
    let peak = r.values[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let limit = 0.8 * peak;
    let first = r.values[0]
        .iter()
        .position(|v| v.abs() > limit)
        .map(|i| r.times[i])
        .ok_or("reference never crosses 80% of its peak")?;
    let device = DeviceParams {
        s: SumSpec::PerDim(vec![limit.sqrt(), 2.0 * 1e-5f64.sqrt()]),
        ..Default::default()
    };
    let n = synth(&e, &device)?;
    let t = integrate_netlist(&n, &cfg).map_err(|e| e.to_string())?;
    let event = t
        .events_of(EventKind::RangeViolation)
        .next()
        .ok_or("no RangeViolation logged")?;
    ensure((event.time - first).abs() <= 2.0 * dt, || {
        format!("event at {:e} s, crossing at {first:e} s", event.time)
    })?;
    Ok(format!(
        "max deviation {worst:.1e}; S² = {:.3} µA, crossing {:.3} ms, event {:.3} ms",
        limit * 1e6,
        first * 1e3,
        event.time * 1e3
    ))
}

fn recombination() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_split = 0.0f64;
    let mut worst_flow = 0.0f64;
    for _ in 0..100 {
        let expr = common::synthesizable_expr(&mut rng);
        let recombined = split_terms(&expr).recombine();
        let sys = common::system_with(expr.clone());
        let netlist = synth(&sys, &DeviceParams::default())
            .map_err(|err| format!("`{expr}`: {err}"))?;
        let mut flow = Dataflow::new(&netlist).map_err(|e| format!("{e:?}"))?;
        for _ in 0..20 {
            let env = common::random_point(&mut rng);
            let want = common::eval_at(&expr, &env);
            let scale = common::magnitude(&expr, &env).max(want.abs());
            let got = common::eval_at(&recombined, &env);
            worst_split = worst_split.max((got - want).abs() / scale);
            flow.evaluate(&[env["x"], env["y"]], &[env["u"]]);
            worst_flow = worst_flow.max((flow.rhs(0) - want).abs() / scale);
        }
    }
    ensure(worst_split <= 1e-9 && worst_flow <= 1e-9, || {
        format!("worst split {worst_split:e}, dataflow {worst_flow:e}")
    })?;
    Ok(format!(
        "100 expressions × 20 points, worst split {worst_split:.1e}, dataflow {worst_flow:.1e}"
    ))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, f64, Check); 9] = [
        (1, "structural census", 1.0, census),
        (2, "bias-ratio law", 1.0, bias_ratio),
        (3, "oracle equivalence", 30.0, oracle_equivalence),
        (4, "synapse analytic step", 5.0, synapse_analytic),
        (5, "FHN fixed point", 5.0, fhn_fixed_point),
        (6, "FHN oscillation", 10.0, fhn_oscillation),
        (7, "astrocyte oscillation", 10.0, astrocyte_oscillation),
        (8, "conservation and range", 10.0, conservation_and_range),
        (9, "recombination and splitting", 5.0, recombination),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let slow = elapsed > Duration::from_secs_f64(limit);
        let (verdict, detail) = match (&result, slow) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; exceeded {limit} s")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!(
            "{verdict} [{id}] {name} ({:.2} s): {detail}",
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
