//! Empirical convergence rates by least squares on log-transformed gaps.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Minimum number of usable points for a fit.
pub const MIN_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateModel {
    /// `log gap` against `log k`: polynomial rates.
    LogLog,
    /// `log gap` against `k`: linear (geometric) rates.
    SemiLog,
}

impl FromStr for RateModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loglog" => Ok(RateModel::LogLog),
            "semilog" => Ok(RateModel::SemiLog),
            other => Err(Error::InvalidArgument(format!(
                "unknown rate model `{other}` (expected loglog or semilog)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Fits `log(gap)` against the abscissa over `lo <= k <= hi`, skipping
/// nonpositive or non-finite gaps.
pub fn fit_rate(samples: &[(f64, f64)], model: RateModel, window: (f64, f64)) -> Result<RateFit> {
    let (lo, hi) = window;
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(k, g)| *k >= lo && *k <= hi && *g > 0.0 && g.is_finite())
        .filter(|(k, _)| model == RateModel::SemiLog || *k > 0.0)
        .map(|&(k, g)| {
            let x = match model {
                RateModel::LogLog => k.ln(),
                RateModel::SemiLog => k,
            };
            (x, g.ln())
        })
        .collect();
    if pts.len() < MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} usable points in [{lo}, {hi}], need {MIN_POINTS}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all points share one abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        points: pts.len(),
    })
}

/// Where the gap of a CSV row comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum GapSource {
    /// A named column, such as `f_gap` or `phi_gap`.
    Column(String),
    /// Euclidean distance of the `x` columns to a target point.
    DistanceTo(Vec<f64>),
}

/// Reads `(k or t, gap)` pairs from a trajectory CSV.
pub fn read_samples(path: &Path, source: &GapSource) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let abscissa = find("k")
        .or_else(|| find("t"))
        .ok_or_else(|| Error::InsufficientData("no `k` or `t` column".into()))?;
    let gap_cols: Vec<usize> = match source {
        GapSource::Column(name) => vec![find(name)
            .ok_or_else(|| Error::InsufficientData(format!("no `{name}` column")))?],
        GapSource::DistanceTo(target) => (0..target.len())
            .map(|i| {
                find(&format!("x{i}"))
                    .ok_or_else(|| Error::InsufficientData(format!("no `x{i}` column")))
            })
            .collect::<Result<_>>()?,
    };
    let parse = |s: &str| -> Option<f64> { s.parse::<f64>().ok() };
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let Some(k) = rec.get(abscissa).and_then(parse) else { continue };
        let gap = match source {
            GapSource::Column(_) => rec.get(gap_cols[0]).and_then(parse),
            GapSource::DistanceTo(target) => {
                let xs: Option<Vec<f64>> =
                    gap_cols.iter().map(|&c| rec.get(c).and_then(parse)).collect();
                xs.map(|xs| {
                    xs.iter()
                        .zip(target)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
            }
        };
        if let Some(g) = gap {
            out.push((k, g));
        }
    }
    Ok(out)
}

/// Parses `lo:hi`.
pub fn parse_window(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| Error::InvalidArgument(format!("window `{s}` is not lo:hi")))?;
    let lo: f64 = lo.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad window start `{lo}`")))?;
    let hi: f64 = hi.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad window end `{hi}`")))?;
    if !(hi > lo) {
        return Err(Error::InvalidArgument(format!("window end {hi} must exceed start {lo}")));
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn inverse_square_has_slope_minus_two() {
        let s: Vec<(f64, f64)> = (1..=100).map(|k| (k as f64, 1.0 / (k * k) as f64)).collect();
        let fit = fit_rate(&s, RateModel::LogLog, (1.0, 100.0)).unwrap();
        assert_abs_diff_eq!(fit.slope, -2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.r2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exponential_has_semilog_slope() {
        let s: Vec<(f64, f64)> = (0..50).map(|k| (k as f64, (-0.5 * k as f64).exp())).collect();
        let fit = fit_rate(&s, RateModel::SemiLog, (0.0, 49.0)).unwrap();
        assert_abs_diff_eq!(fit.slope, -0.5, epsilon = 1e-10);
    }

    #[test]
    fn too_few_points() {
        let s: Vec<(f64, f64)> = (1..=9).map(|k| (k as f64, 1.0 / k as f64)).collect();
        assert!(matches!(
            fit_rate(&s, RateModel::LogLog, (0.0, 100.0)),
            Err(Error::InsufficientData(_))
        ));
        let mut s: Vec<(f64, f64)> = (1..=20).map(|k| (k as f64, 0.0)).collect();
        s[0].1 = 1.0;
        assert!(fit_rate(&s, RateModel::LogLog, (0.0, 100.0)).is_err());
    }

    #[test]
    fn window_parsing() {
        assert_eq!(parse_window("50:500").unwrap(), (50.0, 500.0));
        assert!(parse_window("500:50").is_err());
        assert!(parse_window("50").is_err());
    }
}
