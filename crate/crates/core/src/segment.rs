//! Repetition detection and movement onset.

use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;


/// A sampled scalar signal: `v[i]` at time `t[i]` (degrees for angles).
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trace {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
}

impl Trace {
    pub fn new(t: Vec<f64>, v: Vec<f64>) -> Self {
        assert_eq!(t.len(), v.len(), "trace time and value lengths differ");
        Self { t, v }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.t.first(), self.t.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Mean sample spacing.
    pub fn mean_dt(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        self.duration() / (self.len() - 1) as f64
    }

    /// Samples with `t ∈ [start, end]`.
    pub fn window(&self, start: f64, end: f64) -> Trace {
        let lo = self.t.partition_point(|&t| t < start);
        let hi = self.t.partition_point(|&t| t <= end);
        let hi = hi.max(lo);
        Trace {
            t: self.t[lo..hi].to_vec(),
            v: self.v[lo..hi].to_vec(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Trace {
        Trace {
            t: self.t.clone(),
            v: self.v.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Index of the first sample at or after `t`, clamped to the last sample.
    pub fn index_at(&self, t: f64) -> usize {
        self.t.partition_point(|&x| x < t).min(self.len().saturating_sub(1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SegmentConfig {
    /// Moving-average window, s.
    pub smoothing_window: f64,
    /// Absolute floor for a repetition peak, degrees.
    pub min_peak: f64,
    /// Peaks must also reach this fraction of the global maximum.
    pub peak_fraction: f64,
    /// Minimum time between accepted peaks, s.
    pub min_separation: f64,
    /// Angular speed that counts as moving, °/s.
    pub onset_velocity: f64,
    /// How long the speed must stay above `onset_velocity`, s.
    pub onset_hold: f64,
    /// Fraction of the repetition amplitude that marks the end of the activation.
    pub attain_fraction: f64,
    /// Shortest series `find_repetitions` accepts, s.
    pub min_duration: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            smoothing_window: 0.25,
            min_peak: 20.0,
            peak_fraction: 0.5,
            min_separation: 1.0,
            onset_velocity: 5.0,
            onset_hold: 0.1,
            attain_fraction: 0.95,
            min_duration: 3.0,
        }
    }
}

impl SegmentConfig {
    /// The same detector with every time constant multiplied by `k`.
    pub fn time_scaled(&self, k: f64) -> Self {
        Self {
            smoothing_window: self.smoothing_window * k,
            min_separation: self.min_separation * k,
            onset_velocity: self.onset_velocity / k,
            onset_hold: self.onset_hold * k,
            min_duration: self.min_duration * k,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Repetition {
    pub index: usize,
    pub t_start: f64,
    pub t_peak: f64,
    pub t_end: f64,
    pub peak: f64,
    pub valid: bool,
    pub start_idx: usize,
    pub peak_idx: usize,
    pub end_idx: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OnsetEvent {
    pub t_onset: f64,
    /// First time the signal reaches the attain fraction of the repetition amplitude.
    pub t_attain: f64,
}

impl OnsetEvent {
    pub fn activation_time(&self) -> f64 {
        self.t_attain - self.t_onset
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SegmentError {
    TooShort { have: f64, need: f64 },
    NoMovement,
    NoOnset { repetition: usize },
    OutOfRange,
}

impl fmt::Display for SegmentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentError::TooShort { have, need } => {
                write!(f, "series too short ({have:.3} < {need:.3})")
            }
            SegmentError::NoMovement => f.write_str("no qualifying repetition peak"),
            SegmentError::NoOnset { repetition } => {
                write!(f, "no movement onset in repetition {repetition}")
            }
            SegmentError::OutOfRange => f.write_str("repetition lies outside the series"),
        }
    }
}

impl core::error::Error for SegmentError {}

/// Centered moving average; near the ends the window shrinks symmetrically.
///
/// The window spans `2h + 1` samples with `h = round(window / dt) / 2`.
pub fn smooth(series: &Trace, window: f64) -> Result<Trace, SegmentError> {
    let dt = series.mean_dt();
    let n_window = if dt > 0.0 { (window / dt).round() } else { 0.0 };
    if !(n_window >= 2.0) {
        return Err(SegmentError::TooShort { have: n_window, need: 2.0 });
    }
    let half = (n_window as usize) / 2;
    let n = series.len();
    let v = (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let sum: f64 = series.v[i - h..=i + h].iter().sum();
            sum / (2 * h + 1) as f64
        })
        .collect();
    Ok(Trace { t: series.t.clone(), v })
}

/// Central finite differences; one-sided at the ends.
pub fn velocity(series: &Trace) -> Vec<f64> {
    let n = series.len();
    if n < 2 {
        return alloc::vec![0.0; n];
    }
    let (t, v) = (&series.t, &series.v);
    (0..n)
        .map(|i| {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            (v[b] - v[a]) / (t[b] - t[a])
        })
        .collect()
}

fn last_argmin(v: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for i in lo..=hi {
        if v[i] <= v[best] {
            best = i;
        }
    }
    best
}

fn first_argmin(v: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for i in lo..=hi {
        if v[i] < v[best] {
            best = i;
        }
    }
    best
}

/// Splits an elevation trace into repetitions.
///
/// Peaks must reach `max(min_peak, peak_fraction · global max)` and lie at
/// least `min_separation` apart (higher peaks win). Neighbouring peaks whose
/// separating trough never drops below the threshold belong to one
/// repetition. Each repetition runs from the trough before its peak to the
/// trough after it.
pub fn find_repetitions(series: &Trace, cfg: &SegmentConfig) -> Result<Vec<Repetition>, SegmentError> {
    let n = series.len();
    let duration = series.duration();
    if n < 3 || !(duration >= cfg.min_duration) {
        return Err(SegmentError::TooShort { have: duration, need: cfg.min_duration });
    }
    let v = &series.v;
    let t = &series.t;
    let global_max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let threshold = cfg.min_peak.max(cfg.peak_fraction * global_max);

    let mut candidates: Vec<usize> = (1..n - 1)
        .filter(|&i| v[i] >= threshold && v[i] > v[i - 1] && v[i] >= v[i + 1])
        .collect();
    candidates.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));

    let mut peaks: Vec<usize> = Vec::new();
    for c in candidates {
        if peaks.iter().all(|&p| (t[p] - t[c]).abs() >= cfg.min_separation) {
            peaks.push(c);
        }
    }
    peaks.sort_unstable();

    let mut merged: Vec<usize> = Vec::new();
    for p in peaks {
        if let Some(&last) = merged.last() {
            let trough = v[last..=p].iter().cloned().fold(f64::INFINITY, f64::min);
            if trough >= threshold {
                if v[p] > v[last] {
                    *merged.last_mut().unwrap() = p;
                }
                continue;
            }
        }
        merged.push(p);
    }
    if merged.is_empty() {
        return Err(SegmentError::NoMovement);
    }

    let mut reps = Vec::with_capacity(merged.len());
    let mut lo = 0usize;
    for (k, &p) in merged.iter().enumerate() {
        let hi = merged.get(k + 1).map_or(n - 1, |&next| next - 1);
        let start = last_argmin(v, lo, p);
        let end = first_argmin(v, p, hi);
        lo = end + 1;
        if start == p || end == p {
            continue;
        }
        reps.push(Repetition {
            index: reps.len(),
            t_start: t[start],
            t_peak: t[p],
            t_end: t[end],
            peak: v[p],
            valid: true,
            start_idx: start,
            peak_idx: p,
            end_idx: end,
        });
    }
    if reps.is_empty() {
        return Err(SegmentError::NoMovement);
    }
    Ok(reps)
}

/// Re-anchors a repetition found on one signal onto another signal that
/// moves in step with it, searching samples with `window.0 < t <= window.1`.
///
/// The returned repetition runs from the second signal's trough before its
/// peak in the window to the trough after it.
pub fn align_repetition(series: &Trace, rep: &Repetition, window: (f64, f64)) -> Result<Repetition, SegmentError> {
    let lo = series.t.partition_point(|&x| x <= window.0);
    let hi = series.t.partition_point(|&x| x <= window.1);
    if hi < lo + 2 {
        return Err(SegmentError::OutOfRange);
    }
    let hi = hi - 1;
    let v = &series.v;
    let mut peak = lo;
    for i in lo..=hi {
        if v[i] > v[peak] {
            peak = i;
        }
    }
    let start = last_argmin(v, lo, peak);
    let end = first_argmin(v, peak, hi);
    if start == peak {
        return Err(SegmentError::NoMovement);
    }
    Ok(Repetition {
        index: rep.index,
        t_start: series.t[start],
        t_peak: series.t[peak],
        t_end: series.t[end],
        peak: v[peak],
        valid: rep.valid,
        start_idx: start,
        peak_idx: peak,
        end_idx: end,
    })
}

/// Search windows for [`align_repetition`]: each repetition owns the time
/// between the midpoints to its neighbours' peaks.
pub fn alignment_windows(reps: &[Repetition]) -> Vec<(f64, f64)> {
    (0..reps.len())
        .map(|k| {
            let lo = if k == 0 { f64::NEG_INFINITY } else { 0.5 * (reps[k - 1].t_peak + reps[k].t_peak) };
            let hi = reps.get(k + 1).map_or(f64::INFINITY, |n| 0.5 * (reps[k].t_peak + n.t_peak));
            (lo, hi)
        })
        .collect()
}

/// Onset and attain times inside one repetition.
///
/// The onset is the first sample in `[t_start, t_peak]` from which the
/// finite-difference speed stays above `onset_velocity` for `onset_hold`
/// seconds. The attain time is the first later sample at or above
/// `baseline + attain_fraction · (peak - baseline)`, baseline being the value
/// at `t_start`.
pub fn detect_onset(series: &Trace, rep: &Repetition, cfg: &SegmentConfig) -> Result<OnsetEvent, SegmentError> {
    let n = series.len();
    if n < 2 || rep.peak_idx >= n || rep.start_idx > rep.peak_idx {
        return Err(SegmentError::OutOfRange);
    }
    let t = &series.t;
    let v = &series.v;
    let speed = velocity(series);
    let (hold_lo, hold_hi) = (cfg.onset_hold - 1e-9, cfg.onset_hold + 1e-9);

    let qualifies = |i: usize| {
        let mut j = i;
        while j < n && t[j] - t[i] <= hold_hi {
            if !(speed[j] > cfg.onset_velocity) {
                return false;
            }
            j += 1;
        }
        // the hold window must lie inside the data
        t[j - 1] - t[i] >= hold_lo
    };
    let onset = (rep.start_idx..=rep.peak_idx).find(|&i| qualifies(i));
    let onset = onset.ok_or(SegmentError::NoOnset { repetition: rep.index })?;

    let baseline = v[rep.start_idx];
    let target = baseline + cfg.attain_fraction * (rep.peak - baseline);
    let attain = (onset + 1..n)
        .find(|&i| v[i] >= target)
        .ok_or(SegmentError::NoOnset { repetition: rep.index })?;
    Ok(OnsetEvent { t_onset: t[onset], t_attain: t[attain] })
}
