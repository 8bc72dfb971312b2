use serde::{Deserialize, Serialize};

/// Per-event traces of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub run_id: usize,
    pub success: Vec<bool>,
    pub n_active: Vec<usize>,
    /// Mean ε of the event's active agents after their update.
    pub epsilon: Vec<f64>,
    /// Mean training loss of the agents that trained, when any did.
    pub mse_sys: Vec<Option<f64>>,
    /// Trailing success rate over the convergence window.
    pub rolling_success: Vec<f64>,
    pub convergence_event: Option<usize>,
    pub post_convergence_rate: Option<f64>,
    pub mean_active: f64,
}

impl MetricsSeries {
    pub fn success_values(&self) -> Vec<f64> {
        self.success.iter().map(|&s| f64::from(u8::from(s))).collect()
    }

    /// Events where `mse_sys` is defined, in order.
    pub fn mse_trace(&self) -> Vec<f64> {
        self.mse_sys.iter().flatten().copied().collect()
    }
}

/// Trailing mean over at most `window` values ending at each index.
pub fn rolling_mean(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, &v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Earliest event count `t >= 2 window` at which the mean of the last
/// `window` values differs from the mean of the `window` before them by less
/// than `tol`. `None` if that never happens (including series shorter than
/// two windows).
pub fn detect_convergence(values: &[f64], window: usize, tol: f64) -> Option<usize> {
    if window == 0 || values.len() < 2 * window {
        return None;
    }
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in values {
        acc += v;
        prefix.push(acc);
    }
    let w = window as f64;
    (2 * window..=values.len()).find(|&t| {
        let recent = (prefix[t] - prefix[t - window]) / w;
        let before = (prefix[t - window] - prefix[t - 2 * window]) / w;
        (recent - before).abs() < tol
    })
}

/// Mean of the final `eval_window` success values, provided the run converged.
pub fn success_rate_post_convergence(
    values: &[f64],
    convergence_event: Option<usize>,
    eval_window: usize,
) -> Option<f64> {
    convergence_event?;
    if values.is_empty() {
        return None;
    }
    let tail = &values[values.len().saturating_sub(eval_window.max(1))..];
    Some(tail.iter().sum::<f64>() / tail.len() as f64)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Aggregate over the runs of one cell. Success statistics cover converged
/// runs only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub runs: usize,
    pub converged_runs: usize,
    pub converged_fraction: f64,
    pub mean_success_rate: Option<f64>,
    pub ci95_low: Option<f64>,
    pub ci95_high: Option<f64>,
    pub convergence_event_mean: Option<f64>,
    pub mean_active: f64,
}

/// Normal-approximation 95% interval of the mean over runs.
pub fn summarize(runs: &[MetricsSeries]) -> RunSummary {
    let rates: Vec<f64> = runs.iter().filter_map(|r| r.post_convergence_rate).collect();
    let events: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.convergence_event.map(|e| e as f64))
        .collect();
    let n = rates.len();
    let mean = (n > 0).then(|| rates.iter().sum::<f64>() / n as f64);
    let half_width = mean.map(|m| {
        if n < 2 {
            0.0
        } else {
            let var = rates.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        }
    });
    RunSummary {
        runs: runs.len(),
        converged_runs: n,
        converged_fraction: if runs.is_empty() { 0.0 } else { n as f64 / runs.len() as f64 },
        mean_success_rate: mean,
        ci95_low: mean.zip(half_width).map(|(m, h)| m - h),
        ci95_high: mean.zip(half_width).map(|(m, h)| m + h),
        convergence_event_mean: (!events.is_empty()).then(|| events.iter().sum::<f64>() / events.len() as f64),
        mean_active: runs.iter().map(|r| r.mean_active).sum::<f64>() / runs.len().max(1) as f64,
    }
}
