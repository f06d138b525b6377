//! Interval-based temporal encoding for the Morphognosis learner.
//!
//! Prior steps are grouped into intervals whose sizes grow with age: a skew
//! parameter shifts weight from recent lags toward older ones, the integer
//! part of each weight becomes the number of lags the interval absorbs, and
//! the one-hot stimuli in each interval are summed and max-normalized. The
//! current step keeps its own unaggregated slot.
//!
//! Lags count backwards from the step just before the current one: lag 0 is
//! the previous step, lag `steps − 1` the oldest.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorphError {
    #[error("T must be at least 1, got {0}")]
    Horizon(usize),
    #[error("skew must lie in [0, 1], got {0}")]
    Skew(f64),
    #[error("interval cover needs at least one step")]
    NoSteps,
    #[error("width mismatch: {0}")]
    Width(String),
}

/// Skewed weights for lag slots `0..=t_max`, indexed by lag.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewWeights {
    t_max: usize,
    skew: f64,
    weights: Vec<f64>,
}

impl SkewWeights {
    /// Starts every slot at 1, then for `t = t_max … 1` moves
    /// `w = skew · Σ_{i<t} weight_i` into slot `t`, taking `w / t` from each
    /// younger slot. Total weight stays `t_max + 1`.
    pub fn new(t_max: usize, skew: f64) -> Result<Self, MorphError> {
        if t_max < 1 {
            return Err(MorphError::Horizon(t_max));
        }
        if !(0.0..=1.0).contains(&skew) {
            return Err(MorphError::Skew(skew));
        }
        let mut weights = vec![1.0; t_max + 1];
        for t in (1..=t_max).rev() {
            let w = weights[..t].iter().sum::<f64>() * skew;
            weights[t] += w;
            let share = w / t as f64;
            for wi in &mut weights[..t] {
                *wi -= share;
            }
        }
        Ok(Self { t_max, skew, weights })
    }

    /// Builds weights directly from per-lag values (lag 0 first).
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, MorphError> {
        if weights.len() < 2 {
            return Err(MorphError::Horizon(weights.len().saturating_sub(1)));
        }
        Ok(Self {
            t_max: weights.len() - 1,
            skew: f64::NAN,
            weights,
        })
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn skew(&self) -> f64 {
        self.skew
    }

    /// Weight per lag, lag 0 first.
    pub fn by_lag(&self) -> &[f64] {
        &self.weights
    }

    /// Weights ordered oldest lag first.
    pub fn oldest_first(&self) -> Vec<f64> {
        self.weights.iter().rev().copied().collect()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Contiguous run of lags `newest_lag..=oldest_lag`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSpan {
    pub oldest_lag: usize,
    pub newest_lag: usize,
}

impl IntervalSpan {
    pub fn size(&self) -> usize {
        self.oldest_lag - self.newest_lag + 1
    }
}

/// Partitions lags `0..steps` into intervals, oldest first.
///
/// Walking slots from the oldest lag, each slot claims `floor(weight)` lags
/// (zero-size slots vanish). Lags still unclaimed once the weights run out
/// become singleton intervals at the newest end.
pub fn intervals_from_weights(weights: &SkewWeights, steps: usize) -> Result<Vec<IntervalSpan>, MorphError> {
    if steps == 0 {
        return Err(MorphError::NoSteps);
    }
    let mut spans = Vec::new();
    // Number of lags not yet assigned; the next span starts at lag `remaining − 1`.
    let mut remaining = steps;
    for &w in weights.by_lag().iter().rev() {
        if remaining == 0 {
            break;
        }
        let size = (w.max(0.0).floor() as usize).min(remaining);
        if size == 0 {
            continue;
        }
        spans.push(IntervalSpan {
            oldest_lag: remaining - 1,
            newest_lag: remaining - size,
        });
        remaining -= size;
    }
    while remaining > 0 {
        remaining -= 1;
        spans.push(IntervalSpan {
            oldest_lag: remaining,
            newest_lag: remaining,
        });
    }
    Ok(spans)
}

/// Aggregated interval slots (oldest first) followed by the current-step slot.
#[derive(Clone, Debug, PartialEq)]
pub struct MorphognosticVector {
    pub width: usize,
    pub values: Vec<f64>,
}

impl MorphognosticVector {
    pub fn num_slots(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn slot(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }
}

/// Sums the rows of each span and scales every span to a maximum of 1.
///
/// `window` holds `lags + 1` rows of `width` values, oldest first, the last
/// row being the current step.
pub fn aggregate(window: &[f64], width: usize, spans: &[IntervalSpan]) -> Result<MorphognosticVector, MorphError> {
    let lags: usize = spans.iter().map(IntervalSpan::size).sum();
    if width == 0 || window.len() != (lags + 1) * width {
        return Err(MorphError::Width(format!(
            "window of {} values does not hold {} rows of width {width}",
            window.len(),
            lags + 1
        )));
    }
    let mut values = vec![0.0; (spans.len() + 1) * width];
    aggregate_into(window, width, lags, spans, &mut values);
    Ok(MorphognosticVector { width, values })
}

fn aggregate_into(window: &[f64], width: usize, lags: usize, spans: &[IntervalSpan], out: &mut [f64]) {
    for (i, span) in spans.iter().enumerate() {
        let slot = &mut out[i * width..(i + 1) * width];
        for lag in span.newest_lag..=span.oldest_lag {
            let row = lags - 1 - lag;
            for (o, &x) in slot.iter_mut().zip(&window[row * width..(row + 1) * width]) {
                *o += x;
            }
        }
        let max = slot.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            slot.iter_mut().for_each(|v| *v /= max);
        }
    }
    let cur = spans.len();
    out[cur * width..(cur + 1) * width].copy_from_slice(&window[lags * width..(lags + 1) * width]);
}

/// Precomputed interval layout for a fixed horizon, skew and stimulus width.
#[derive(Clone, Debug, PartialEq)]
pub struct MorphognosticEncoder {
    t_steps: usize,
    skew: f64,
    width: usize,
    spans: Vec<IntervalSpan>,
}

impl MorphognosticEncoder {
    pub fn new(t_steps: usize, skew: f64, width: usize) -> Result<Self, MorphError> {
        let weights = SkewWeights::new(t_steps, skew)?;
        let spans = intervals_from_weights(&weights, t_steps)?;
        if width == 0 {
            return Err(MorphError::Width("stimulus width must be positive".into()));
        }
        Ok(Self {
            t_steps,
            skew,
            width,
            spans,
        })
    }

    pub fn spans(&self) -> &[IntervalSpan] {
        &self.spans
    }

    pub fn t_steps(&self) -> usize {
        self.t_steps
    }

    pub fn skew(&self) -> f64 {
        self.skew
    }

    /// Width of one sliding-window row this encoder consumes: `(t_steps + 1)` stimulus slots.
    pub fn window_width(&self) -> usize {
        (self.t_steps + 1) * self.width
    }

    pub fn output_width(&self) -> usize {
        (self.spans.len() + 1) * self.width
    }

    /// Encodes one sliding-window row (oldest slot first, current step last).
    pub fn encode_window_row(&self, row: &[f64], out: &mut [f64]) -> Result<(), MorphError> {
        if row.len() != self.window_width() || out.len() != self.output_width() {
            return Err(MorphError::Width(format!(
                "row {} / output {} for window width {} / output width {}",
                row.len(),
                out.len(),
                self.window_width(),
                self.output_width()
            )));
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        aggregate_into(row, self.width, self.t_steps, &self.spans, out);
        Ok(())
    }

    /// Encodes the last step of `history` (rows oldest first, current step
    /// last). Missing history before the path start is treated as zero rows;
    /// history beyond the horizon is dropped.
    pub fn encode_history(&self, history: &[Vec<f64>]) -> Result<MorphognosticVector, MorphError> {
        if history.is_empty() {
            return Err(MorphError::Width("history must include the current step".into()));
        }
        let slots = self.t_steps + 1;
        let mut window = vec![0.0; slots * self.width];
        let take = history.len().min(slots);
        for (k, row) in history[history.len() - take..].iter().enumerate() {
            if row.len() != self.width {
                return Err(MorphError::Width(format!(
                    "history row of width {} for stimulus width {}",
                    row.len(),
                    self.width
                )));
            }
            let slot = slots - take + k;
            window[slot * self.width..(slot + 1) * self.width].copy_from_slice(row);
        }
        aggregate(&window, self.width, &self.spans)
    }
}

/// One-shot encoding of the last step of `history`.
pub fn morphognostic_encode(
    history: &[Vec<f64>],
    t_steps: usize,
    skew: f64,
) -> Result<MorphognosticVector, MorphError> {
    let width = history.first().map(Vec::len).unwrap_or(0);
    MorphognosticEncoder::new(t_steps, skew, width)?.encode_history(history)
}
