use std::collections::BTreeMap;

use thiserror::Error;

use super::config::ProtocolKind;
use super::experiment::ResultRow;

pub const MIN_DISTINCT_N: usize = 4;
pub const MIN_CONVERGED: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitModel {
    /// `T ~ n^a (ln n)^q`: regress `ln(T / (ln n)^q)` on `ln n`.
    PowerLaw { q: f64 },
    /// `T ~ a + b ln n`.
    LogAffine,
}

impl FitModel {
    /// The model matching a protocol's time bound.
    pub fn for_protocol(protocol: ProtocolKind, k: usize) -> FitModel {
        match protocol {
            ProtocolKind::KContact => FitModel::PowerLaw { q: 1.0 / k as f64 },
            ProtocolKind::LeaderLoc | ProtocolKind::SelfStab => FitModel::PowerLaw {
                q: 1.0 / (k as f64 + 1.0),
            },
            ProtocolKind::Improved1d => FitModel::PowerLaw { q: 1.0 / 3.0 },
            ProtocolKind::Vector => FitModel::LogAffine,
        }
    }
}

/// Theoretical `n`-exponent of a power-law bound.
pub fn target_exponent(protocol: ProtocolKind, k: usize) -> Option<f64> {
    let k = k as f64;
    match protocol {
        ProtocolKind::KContact => Some(1.0 - 1.0 / k),
        ProtocolKind::LeaderLoc | ProtocolKind::SelfStab => Some(k / (k + 1.0)),
        ProtocolKind::Improved1d => Some(1.0 / 3.0),
        ProtocolKind::Vector => None,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {needed} population sizes with {per_n} converged trials each, found {usable}")]
    InsufficientData { needed: usize, per_n: usize, usable: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeSummary {
    pub n: usize,
    pub trials: usize,
    pub converged: usize,
    pub median: f64,
    pub q90: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub model: FitModel,
    /// Exponent of `n` (power law) or slope in `ln n` (log model).
    pub slope: f64,
    pub intercept: f64,
    pub std_error: f64,
    /// Largest `|fit - median| / median` over the grid.
    pub relative_residual: f64,
    pub sizes: Vec<SizeSummary>,
    pub target: Option<f64>,
    pub tolerance: f64,
    pub pass: Option<bool>,
}

/// Quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-`n` counts, medians and 0.9-quantiles of converged trials.
pub fn summarise(rows: &[ResultRow]) -> Vec<SizeSummary> {
    let mut by_n: BTreeMap<usize, (usize, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        let e = by_n.entry(r.n).or_default();
        e.0 += 1;
        if r.converged {
            e.1.push(r.parallel_time);
        }
    }
    by_n.into_iter()
        .map(|(n, (trials, mut times))| {
            times.sort_by(f64::total_cmp);
            SizeSummary {
                n,
                trials,
                converged: times.len(),
                median: quantile(&times, 0.5),
                q90: quantile(&times, 0.9),
            }
        })
        .collect()
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, se(b))`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let sse: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
    let se = if x.len() > 2 {
        (sse / (m - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (a, b, se)
}

/// Fits per-`n` medians of converged trials. With a target, the report
/// passes when the fitted slope is within `tolerance` of it; the log model
/// additionally requires a relative residual below `tolerance` when no
/// target is given.
pub fn fit_scaling(
    rows: &[ResultRow],
    model: FitModel,
    target: Option<f64>,
    tolerance: f64,
) -> Result<ScalingReport, FitError> {
    let sizes = summarise(rows);
    let usable: Vec<&SizeSummary> = sizes.iter().filter(|s| s.converged >= MIN_CONVERGED).collect();
    if usable.len() < MIN_DISTINCT_N {
        return Err(FitError::InsufficientData {
            needed: MIN_DISTINCT_N,
            per_n: MIN_CONVERGED,
            usable: usable.len(),
        });
    }
    let ln_n: Vec<f64> = usable.iter().map(|s| (s.n as f64).ln()).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = match model {
        FitModel::PowerLaw { q } => usable
            .iter()
            .zip(&ln_n)
            .map(|(s, &l)| (l, (s.median / l.powf(q)).ln()))
            .unzip(),
        FitModel::LogAffine => usable.iter().zip(&ln_n).map(|(s, &l)| (l, s.median)).unzip(),
    };
    let (a, b, se) = least_squares(&x, &y);
    let relative_residual = usable
        .iter()
        .zip(&ln_n)
        .map(|(s, &l)| {
            let fit = match model {
                FitModel::PowerLaw { q } => (a + b * l).exp() * l.powf(q),
                FitModel::LogAffine => a + b * l,
            };
            ((fit - s.median) / s.median).abs()
        })
        .fold(0.0, f64::max);
    let pass = match (target, model) {
        (Some(t), _) => Some((b - t).abs() <= tolerance),
        (None, FitModel::LogAffine) => Some(relative_residual < tolerance),
        (None, FitModel::PowerLaw { .. }) => None,
    };
    Ok(ScalingReport {
        model,
        slope: b,
        intercept: a,
        std_error: se,
        relative_residual,
        sizes,
        target,
        tolerance,
        pass,
    })
}
