//! Post-processing of asymmetry time series: decay rates, restoration
//! verdicts and Mpemba crossings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `ΔS_A^(n)` (or any positive observable) sampled on an increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetrySeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub n: u32,
    pub ell: usize,
}

impl AsymmetrySeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, n: u32, ell: usize) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Invalid("times and values differ in length".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("times must be strictly increasing".into()));
        }
        Ok(Self { times, values, n, ell })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub const NOISE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingKind {
    None,
    Single,
    /// More than one robust sign change.
    Multiple,
    /// The curves never separate beyond the noise floor.
    EqualCurves,
}

/// Agreement between a measured crossing and the slow-mode prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionVerdict {
    Consistent,
    Inconsistent,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub crossed: bool,
    pub t_m: Option<f64>,
    pub crossing_times: Vec<f64>,
    pub margin_before: f64,
    pub margin_after: f64,
    pub kind: CrossingKind,
    /// True when the first series starts above the second.
    pub first_starts_higher: bool,
    pub criterion_verdict: Option<CriterionVerdict>,
}

fn same_grid(a: &AsymmetrySeries, b: &AsymmetrySeries) -> Result<()> {
    if a.times.len() != b.times.len() || a.times.iter().zip(&b.times).any(|(x, y)| x != y) {
        return Err(Error::Invalid("series are on different time grids".into()));
    }
    if a.is_empty() {
        return Err(Error::Invalid("empty series".into()));
    }
    Ok(())
}

/// Finds where `s1 - s2` changes sign; `s1` must start above `s2` by more than `noise`.
pub fn detect_crossing(s1: &AsymmetrySeries, s2: &AsymmetrySeries, noise: f64) -> Result<CrossingReport> {
    same_grid(s1, s2)?;
    let d: Vec<f64> = s1.values.iter().zip(&s2.values).map(|(a, b)| a - b).collect();
    if d.iter().all(|x| x.abs() <= noise) {
        return Ok(CrossingReport {
            crossed: false,
            t_m: None,
            crossing_times: vec![],
            margin_before: 0.0,
            margin_after: 0.0,
            kind: CrossingKind::EqualCurves,
            first_starts_higher: true,
            criterion_verdict: None,
        });
    }
    if d[0] <= noise {
        return Err(Error::Invalid(format!(
            "first series must start above the second by more than {noise:e} (difference {:e})",
            d[0]
        )));
    }
    let t = &s1.times;
    let mut crossings = Vec::new();
    let mut last_robust = 0usize;
    for i in 1..d.len() {
        if d[i].abs() <= noise {
            continue;
        }
        if d[i].signum() != d[last_robust].signum() {
            // zero of the interpolant inside the span of the sign change
            let mut tc = t[i];
            for j in last_robust..i {
                if d[j] == 0.0 {
                    tc = t[j];
                    break;
                }
                if d[j].signum() != d[j + 1].signum() {
                    tc = t[j] + (t[j + 1] - t[j]) * d[j] / (d[j] - d[j + 1]);
                    break;
                }
            }
            crossings.push(tc);
        }
        last_robust = i;
    }
    let (kind, t_m) = match crossings.len() {
        0 => (CrossingKind::None, None),
        1 => (CrossingKind::Single, Some(crossings[0])),
        _ => (CrossingKind::Multiple, None),
    };
    let (margin_before, margin_after) = match t_m {
        Some(tc) => {
            let before = t.iter().zip(&d).filter(|(x, _)| **x < tc).map(|(_, v)| *v).fold(0.0, f64::max);
            let after = t.iter().zip(&d).filter(|(x, _)| **x > tc).map(|(_, v)| -*v).fold(0.0, f64::max);
            (before, after)
        }
        None => (d.iter().copied().fold(0.0, f64::max), d.iter().map(|v| -v).fold(0.0, f64::max)),
    };
    let crossed = kind == CrossingKind::Single && margin_before > noise && margin_after > noise;
    Ok(CrossingReport {
        crossed,
        t_m,
        crossing_times: crossings,
        margin_before,
        margin_after,
        kind,
        first_starts_higher: true,
        criterion_verdict: None,
    })
}

/// [`detect_crossing`] for inputs in either order.
pub fn detect_crossing_unordered(s1: &AsymmetrySeries, s2: &AsymmetrySeries, noise: f64) -> Result<CrossingReport> {
    same_grid(s1, s2)?;
    if s1.values[0] >= s2.values[0] {
        detect_crossing(s1, s2, noise)
    } else {
        let mut r = detect_crossing(s2, s1, noise)?;
        r.first_starts_higher = false;
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Positive for decay.
    pub rate: f64,
    pub r_squared: f64,
    pub points: usize,
    /// `r² < 0.99`.
    pub poor_fit: bool,
}

/// Least-squares slope of `ln v` against `t` over `[t_lo, t_hi]`.
pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= lo - 1e-12 && **t <= hi + 1e-12)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Invalid(format!("fewer than two samples in window [{lo}, {hi}]")));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Domain(format!("non-positive value {v:e} at t = {t} in fit window")));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (t, v) in &pts {
        let (dx, dy) = (t - tm, v.ln() - ym);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(DecayFit { rate: -slope, r_squared, points: pts.len(), poor_fit: r_squared < 0.99 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestorationReport {
    pub restored: bool,
    pub tail_mean: f64,
    pub tail_slope: f64,
    pub tail_samples: usize,
    pub tol: f64,
    pub tail_fraction: f64,
}

pub const DEFAULT_TAIL_FRACTION: f64 = 0.2;
pub const DEFAULT_RESTORATION_TOL: f64 = 1e-3;
/// Slope times tail duration below this counts as non-increasing.
const FLAT_TAIL: f64 = 1e-9;

pub fn restoration_report(s: &AsymmetrySeries, tail_fraction: f64, tol: f64) -> Result<RestorationReport> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Invalid(format!("tail fraction {tail_fraction} out of (0, 1]")));
    }
    let count = ((s.len() as f64) * tail_fraction).ceil() as usize;
    if count < 10 {
        return Err(Error::Invalid(format!("tail window holds {count} samples; at least 10 are needed")));
    }
    let tail_t = &s.times[s.len() - count..];
    let tail_v = &s.values[s.len() - count..];
    let n = count as f64;
    let tm = tail_t.iter().sum::<f64>() / n;
    let vm = tail_v.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in tail_t.iter().zip(tail_v) {
        sxy += (t - tm) * (v - vm);
        sxx += (t - tm) * (t - tm);
    }
    let slope = sxy / sxx;
    let span = tail_t[count - 1] - tail_t[0];
    Ok(RestorationReport {
        restored: vm < tol && slope * span <= FLAT_TAIL,
        tail_mean: vm,
        tail_slope: slope,
        tail_samples: count,
        tol,
        tail_fraction,
    })
}

/// True iff the tail mean is below `tol` and the tail does not grow.
pub fn restoration_verdict(s: &AsymmetrySeries, tail_fraction: f64, tol: f64) -> Result<bool> {
    Ok(restoration_report(s, tail_fraction, tol)?.restored)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, tmax: f64, dt: f64) -> AsymmetrySeries {
        let n = (tmax / dt).round() as usize;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        AsymmetrySeries::new(times, values, 2, 10).unwrap()
    }

    #[test]
    fn exponential_pair_crosses_at_closed_form_time() {
        let a = series(|t| (-2.0 * t).exp(), 8.0, 0.01);
        let b = series(|t| 0.5 * (-0.5 * t).exp(), 8.0, 0.01);
        let r = detect_crossing(&a, &b, NOISE_FLOOR).unwrap();
        assert!(r.crossed);
        assert!((r.t_m.unwrap() - 2f64.ln() / 1.5).abs() < 1e-4);
    }

    #[test]
    fn identical_series_do_not_cross() {
        let a = series(|t| (-t).exp(), 4.0, 0.1);
        let r = detect_crossing(&a, &a, NOISE_FLOOR).unwrap();
        assert!(!r.crossed);
        assert_eq!(r.kind, CrossingKind::EqualCurves);
    }

    #[test]
    fn wrong_initial_order_is_rejected() {
        let a = series(|t| (-2.0 * t).exp(), 8.0, 0.1);
        let b = series(|t| 0.5 * (-0.5 * t).exp(), 8.0, 0.1);
        assert!(detect_crossing(&b, &a, NOISE_FLOOR).is_err());
        let r = detect_crossing_unordered(&b, &a, NOISE_FLOOR).unwrap();
        assert!(!r.first_starts_higher && r.crossed);
    }

    #[test]
    fn double_crossing_is_reported_as_multiple() {
        let a = series(|t| 1.0 + 0.5 * (t * 1.5).cos(), 6.0, 0.01);
        let b = series(|_| 1.0, 6.0, 0.01);
        let r = detect_crossing(&a, &b, NOISE_FLOOR).unwrap();
        assert!(!r.crossed);
        assert_eq!(r.kind, CrossingKind::Multiple);
        assert_eq!(r.crossing_times.len(), 3);
    }

    #[test]
    fn decay_fit_recovers_rate() {
        let s = series(|t| 4.0 * (-3.0 * t).exp(), 5.0, 0.05);
        let f = fit_decay_rate(&s.times, &s.values, (1.0, 4.0)).unwrap();
        assert!((f.rate - 3.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let c = series(|_| 0.3, 5.0, 0.05);
        assert_eq!(fit_decay_rate(&c.times, &c.values, (0.0, 5.0)).unwrap().rate, 0.0);
    }

    #[test]
    fn decay_fit_rejects_non_positive() {
        let s = series(|t| 1.0 - t, 2.0, 0.1);
        assert!(matches!(fit_decay_rate(&s.times, &s.values, (0.0, 2.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn restoration_cases() {
        let zero = series(|_| 0.0, 10.0, 0.1);
        assert!(restoration_verdict(&zero, 0.2, 1e-3).unwrap());
        let sat = series(|t| 0.3 * (1.0 - (-t).exp()), 10.0, 0.1);
        assert!(!restoration_verdict(&sat, 0.2, 1e-3).unwrap());
        let short = series(|_| 0.0, 1.0, 0.5);
        assert!(restoration_verdict(&short, 0.2, 1e-3).is_err());
    }
}
