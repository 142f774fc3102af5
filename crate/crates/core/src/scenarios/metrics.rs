//! Frequency metrics and the stability verdict.

use crate::engine::{SimResult, Termination};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const UFLS_HZ: f64 = 59.5;
pub const ROCOF_WINDOW: f64 = 0.1;
pub const SETTLING_BAND_HZ: f64 = 0.05;
pub const STABILITY_WINDOW: f64 = 2.0;
pub const STABILITY_P2P_HZ: f64 = 0.05;
/// Trace needed after the last event before a verdict is meaningful.
pub const MIN_POST_EVENT: f64 = 5.0;
pub const COLLAPSE_BAND_HZ: (f64, f64) = (55.0, 65.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    Collapsed,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Stable => "stable",
            Self::Unstable => "unstable",
            Self::Collapsed => "collapsed",
        })
    }
}

/// Times are measured from the first event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub nadir_hz: f64,
    pub time_to_ufls_s: Option<f64>,
    pub max_rocof_hz_s: f64,
    pub settling_time_s: Option<f64>,
    pub osc_period_s: Option<f64>,
    pub verdict: Verdict,
}

/// A frequency trace with the context the verdict needs.
#[derive(Debug, Clone, Copy)]
pub struct FreqTrace<'a> {
    pub t: &'a [f64],
    pub f: &'a [f64],
    pub last_event: f64,
    pub terminated_early: bool,
}

/// Linear interpolation of `(t, y)` at `x`, clamped to the ends.
fn interp(t: &[f64], y: &[f64], x: f64) -> f64 {
    let k = t.partition_point(|&ti| ti <= x);
    if k == 0 {
        return y[0];
    }
    if k == t.len() {
        return y[t.len() - 1];
    }
    let (t0, t1) = (t[k - 1], t[k]);
    y[k - 1] + (y[k] - y[k - 1]) * (x - t0) / (t1 - t0)
}

pub fn classify_stability(trace: &FreqTrace) -> Result<Verdict> {
    if trace.t.is_empty() || trace.t.len() != trace.f.len() {
        return Err(Error::Metrics("empty or ragged frequency trace".into()));
    }
    let (lo, hi) = COLLAPSE_BAND_HZ;
    if trace.terminated_early || trace.f.iter().any(|&f| !(f >= lo && f <= hi)) {
        return Ok(Verdict::Collapsed);
    }
    let t_last = *trace.t.last().unwrap();
    if t_last - trace.t[0] < STABILITY_WINDOW {
        return Err(Error::Metrics(
            "stability window is longer than the trace".into(),
        ));
    }
    if t_last - trace.last_event < MIN_POST_EVENT - 1e-9 {
        return Err(Error::Metrics(format!(
            "trace covers {:.3} s after the last event; {MIN_POST_EVENT} s needed",
            t_last - trace.last_event
        )));
    }
    let p2p = peak_to_peak(trace.t, trace.f, t_last - STABILITY_WINDOW);
    Ok(if p2p < STABILITY_P2P_HZ {
        Verdict::Stable
    } else {
        Verdict::Unstable
    })
}

/// Peak-to-peak excursion of `y` over `t >= from`.
pub fn peak_to_peak(t: &[f64], y: &[f64], from: f64) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (&ti, &yi) in t.iter().zip(y) {
        if ti >= from - 1e-12 {
            lo = lo.min(yi);
            hi = hi.max(yi);
        }
    }
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Mean spacing of upward mean-crossings over `t >= from`.
pub fn oscillation_period(t: &[f64], y: &[f64], from: f64) -> Option<f64> {
    let idx: Vec<usize> = (0..t.len()).filter(|&k| t[k] >= from - 1e-12).collect();
    if idx.len() < 3 {
        return None;
    }
    let mean = idx.iter().map(|&k| y[k]).sum::<f64>() / idx.len() as f64;
    let p2p = peak_to_peak(t, y, from);
    if p2p < 1e-6 {
        return None;
    }
    let mut crossings = Vec::new();
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ya, yb) = (y[a] - mean, y[b] - mean);
        if ya < 0.0 && yb >= 0.0 {
            crossings.push(t[a] + (t[b] - t[a]) * (-ya) / (yb - ya));
        }
    }
    if crossings.len() < 2 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// Metrics of one frequency trace, with times measured from `t0`.
pub fn trace_metrics(trace: &FreqTrace, t0: f64) -> Result<MetricReport> {
    let (t, f) = (trace.t, trace.f);
    if t.is_empty() || t.len() != f.len() {
        return Err(Error::Metrics("empty or ragged frequency trace".into()));
    }
    let start = t.partition_point(|&ti| ti < t0 - 1e-12).min(t.len() - 1);
    let (tp, fp) = (&t[start..], &f[start..]);

    let nadir_hz = fp.iter().copied().fold(f64::INFINITY, f64::min);

    let mut time_to_ufls_s = None;
    if fp[0] < UFLS_HZ {
        time_to_ufls_s = Some(tp[0] - t0);
    } else {
        for k in 1..fp.len() {
            if fp[k] < UFLS_HZ {
                let frac = (fp[k - 1] - UFLS_HZ) / (fp[k - 1] - fp[k]);
                time_to_ufls_s = Some(tp[k - 1] + frac * (tp[k] - tp[k - 1]) - t0);
                break;
            }
        }
    }

    let span = (tp[tp.len() - 1] - tp[0]).min(ROCOF_WINDOW);
    let mut max_rocof_hz_s: f64 = 0.0;
    if span > 0.0 {
        for k in 0..tp.len() {
            if tp[k] - tp[0] < span - 1e-12 {
                continue;
            }
            let before = interp(tp, fp, tp[k] - span);
            max_rocof_hz_s = max_rocof_hz_s.max((fp[k] - before).abs() / span);
        }
    }

    let verdict = classify_stability(trace)?;
    let settling_time_s = if verdict == Verdict::Stable {
        let last = fp[fp.len() - 1];
        match (0..fp.len())
            .rev()
            .find(|&k| (fp[k] - last).abs() > SETTLING_BAND_HZ)
        {
            None => Some(0.0),
            Some(k) => Some(tp[k + 1] - t0),
        }
    } else {
        None
    };
    let osc_period_s = if verdict == Verdict::Collapsed {
        None
    } else {
        let tail_from = trace.last_event.max(tp[0]);
        let tail_from = tail_from + (tp[tp.len() - 1] - tail_from) / 2.0;
        oscillation_period(tp, fp, tail_from)
    };
    Ok(MetricReport {
        nadir_hz,
        time_to_ufls_s,
        max_rocof_hz_s,
        settling_time_s,
        osc_period_s,
        verdict,
    })
}

/// Metrics of device `device`'s frequency in a simulation result.
pub fn metrics(result: &SimResult, device: usize) -> Result<MetricReport> {
    let d = result
        .devices
        .get(device)
        .ok_or_else(|| Error::Metrics(format!("no device {device}")))?;
    if result.t.is_empty() {
        return Err(Error::Metrics("empty trace".into()));
    }
    let trace = FreqTrace {
        t: &result.t,
        f: &d.freq,
        last_event: result.last_event.unwrap_or(result.t[0]),
        terminated_early: result.termination != Termination::Completed,
    };
    trace_metrics(&trace, result.first_event.unwrap_or(result.t[0]))
}
