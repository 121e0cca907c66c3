use serde::{Deserialize, Serialize};

use super::{SimError, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    /// Amperes, over every state and sample.
    pub rmse: f64,
    pub max_abs_err: f64,
    /// `rmse` over the reference RMS.
    pub rel_rmse: f64,
    /// Seconds, from the first state over the second half of each trace.
    pub period_ref: Option<f64>,
    pub period_test: Option<f64>,
}

/// Error statistics of `test` against `reference` on a shared grid.
pub fn compare_traces(reference: &Trace, test: &Trace) -> Result<CompareReport, SimError> {
    if reference.states.len() != test.states.len() {
        return Err(SimError::GridMismatch(format!(
            "{} vs {} states",
            reference.states.len(),
            test.states.len()
        )));
    }
    if reference.len() != test.len() {
        return Err(SimError::GridMismatch(format!(
            "{} vs {} samples",
            reference.len(),
            test.len()
        )));
    }
    let span = reference.times.last().copied().unwrap_or(0.0).abs();
    for (i, (a, b)) in reference.times.iter().zip(&test.times).enumerate() {
        if (a - b).abs() > 1e-12 * span.max(f64::MIN_POSITIVE) {
            return Err(SimError::GridMismatch(format!(
                "sample {i} at {a:e} s vs {b:e} s"
            )));
        }
    }

    let mut sq = 0.0;
    let mut ref_sq = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut count = 0usize;
    for (r, t) in reference.values.iter().zip(&test.values) {
        for (a, b) in r.iter().zip(t) {
            let e = b - a;
            sq += e * e;
            ref_sq += a * a;
            max_abs = max_abs.max(e.abs());
            count += 1;
        }
    }
    let count = count.max(1) as f64;
    let rmse = (sq / count).sqrt();
    let ref_rms = (ref_sq / count).sqrt();
    let rel_rmse = if rmse == 0.0 {
        0.0
    } else if ref_rms == 0.0 {
        f64::INFINITY
    } else {
        rmse / ref_rms
    };

    let (period_ref, period_test) = if reference.states.is_empty() {
        (None, None)
    } else {
        let r = reference.tail(0.5);
        let t = test.tail(0.5);
        let (lo, hi) = r.values[0]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
        let threshold = 0.5 * (lo + hi);
        (
            estimate_period(&r, 0, threshold),
            estimate_period(&t, 0, threshold),
        )
    };
    Ok(CompareReport {
        rmse,
        max_abs_err: max_abs,
        rel_rmse,
        period_ref,
        period_test,
    })
}

/// Mean spacing of upward crossings of `threshold` by `state`, with linear
/// interpolation between samples. `None` with fewer than three crossings.
pub fn estimate_period(trace: &Trace, state: usize, threshold: f64) -> Option<f64> {
    let v = trace.values.get(state)?;
    let crossings: Vec<f64> = v
        .windows(2)
        .zip(trace.times.windows(2))
        .filter(|(w, _)| w[0] < threshold && w[1] >= threshold)
        .map(|(w, t)| t[0] + (t[1] - t[0]) * (threshold - w[0]) / (w[1] - w[0]))
        .collect();
    if crossings.len() < 3 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(period: f64, offset: f64, dt: f64, n: usize) -> Trace {
        let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let values = vec![times
            .iter()
            .map(|t| (2.0 * std::f64::consts::PI * t / period).sin() + offset)
            .collect()];
        Trace {
            states: vec!["x".into()],
            times,
            values,
            events: vec![],
        }
    }

    #[test]
    fn identical() {
        let a = sine(1e-2, 0.0, 1e-4, 1000);
        let r = compare_traces(&a, &a).unwrap();
        assert_eq!((r.rmse, r.max_abs_err, r.rel_rmse), (0.0, 0.0, 0.0));
    }

    #[test]
    fn offset() {
        let a = sine(1e-2, 0.0, 1e-4, 1000);
        let b = sine(1e-2, 1e-6, 1e-4, 1000);
        let r = compare_traces(&a, &b).unwrap();
        assert!((r.max_abs_err - 1e-6).abs() < 1e-12);
        assert!((r.rmse - 1e-6).abs() < 1e-12);
    }

    #[test]
    fn sine_period() {
        let a = sine(1e-2, 0.0, 1e-4, 10_000);
        let p = estimate_period(&a, 0, 0.0).unwrap();
        assert!((p - 1e-2).abs() < 1e-4);
        let r = compare_traces(&a, &a).unwrap();
        assert_eq!(r.period_ref, r.period_test);
    }

    #[test]
    fn flat_has_no_period() {
        let mut a = sine(1e-2, 0.0, 1e-4, 100);
        a.values[0].iter_mut().for_each(|v| *v = 0.5);
        assert_eq!(estimate_period(&a, 0, 0.0), None);
        assert_eq!(estimate_period(&a, 0, 0.5), None);
    }

    #[test]
    fn grid_mismatch() {
        let a = sine(1e-2, 0.0, 1e-4, 100);
        let b = sine(1e-2, 0.0, 1e-4, 101);
        assert!(matches!(compare_traces(&a, &b), Err(SimError::GridMismatch(_))));
        let c = sine(1e-2, 0.0, 2e-4, 100);
        assert!(matches!(compare_traces(&a, &c), Err(SimError::GridMismatch(_))));
    }
}
