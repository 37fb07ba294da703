//! Log-log diagnostics for heavy-tailed degree and visit-count data.
//!
//! Points are `(x, N(>= x))` for every distinct positive value `x`: the
//! complementary cumulative count. The slope is fitted by ordinary least
//! squares on `(ln x, ln N)` using the values that make up the top 95% of
//! total mass; for a density `P(x) ~ x^-a` it estimates `1 - a`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::walker::WalkSet;

/// Share of total mass covered by the fitted points.
pub const MASS_SHARE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawPoint {
    pub value: u64,
    /// Items with exactly this value.
    pub count: usize,
    /// Items with at least this value.
    pub ccdf: usize,
    pub in_fit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub points: Vec<PowerLawPoint>,
    /// `None` when fewer than two distinct values enter the fit.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
    pub fitted_points: usize,
}

impl PowerLawFit {
    pub fn is_degenerate(&self) -> bool {
        self.slope.is_none()
    }

    /// `value,count,ccdf,in_fit` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "value,count,ccdf,in_fit")?;
        for p in &self.points {
            writeln!(out, "{},{},{},{}", p.value, p.count, p.ccdf, p.in_fit as u8)?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        match (self.slope, self.r_squared) {
            (Some(s), Some(r2)) => format!("slope {s:.4}, R^2 {r2:.4}, {} points", self.fitted_points),
            _ => "slope undefined (fewer than two distinct values)".to_string(),
        }
    }
}

/// Fits the log-log CCDF of `values`; zeros are ignored.
pub fn fit(values: &[u64]) -> Result<PowerLawFit> {
    let mut hist: BTreeMap<u64, usize> = BTreeMap::new();
    for &v in values.iter().filter(|&&v| v > 0) {
        *hist.entry(v).or_default() += 1;
    }
    if hist.is_empty() {
        return Err(Error::InvalidArgument(
            "power-law fit needs at least one positive value".into(),
        ));
    }
    let total: f64 = hist.iter().map(|(&v, &c)| v as f64 * c as f64).sum();
    // smallest value still needed, scanning from the top, to cover the share
    let mut covered = 0.0;
    let mut cutoff = *hist.keys().next().expect("non-empty");
    for (&v, &c) in hist.iter().rev() {
        cutoff = v;
        covered += v as f64 * c as f64;
        if covered >= MASS_SHARE * total {
            break;
        }
    }
    let mut ccdf = values.iter().filter(|&&v| v > 0).count();
    let mut points = Vec::with_capacity(hist.len());
    for (&value, &count) in &hist {
        points.push(PowerLawPoint {
            value,
            count,
            ccdf,
            in_fit: value >= cutoff,
        });
        ccdf -= count;
    }
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.in_fit)
        .map(|p| ((p.value as f64).ln(), (p.ccdf as f64).ln()))
        .collect();
    let (slope, intercept, r_squared) = match least_squares(&xy) {
        Some((s, i, r)) => (Some(s), Some(i), Some(r)),
        None => (None, None, None),
    };
    Ok(PowerLawFit {
        points,
        slope,
        intercept,
        r_squared,
        fitted_points: xy.len(),
    })
}

/// `(slope, intercept, R^2)`; `None` for fewer than two distinct `x`.
fn least_squares(xy: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = xy.len() as f64;
    if xy.len() < 2 {
        return None;
    }
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, my - slope * mx, r2))
}

pub fn degree_values(graph: &Graph) -> Vec<u64> {
    (0..graph.node_count())
        .map(|v| graph.out_degree(v as u32) as u64)
        .collect()
}

/// Visits per node over all walks, one entry per node of a
/// `node_count`-node graph.
pub fn visit_counts(walks: &WalkSet, node_count: usize) -> Vec<u64> {
    let mut counts = vec![0u64; node_count];
    for &v in walks.walks.iter().flatten() {
        if let Some(c) = counts.get_mut(v as usize) {
            *c += 1;
        }
    }
    counts
}

pub fn diagnose_graph(graph: &Graph) -> Result<PowerLawFit> {
    fit(&degree_values(graph))
}

pub fn diagnose_walks(walks: &WalkSet, node_count: usize) -> Result<PowerLawFit> {
    if walks.is_empty() {
        return Err(Error::EmptyWalkSet);
    }
    fit(&visit_counts(walks, node_count))
}
