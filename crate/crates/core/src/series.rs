//! Taylor-series upper bound for `sup I_β` with `β < 1`.
//!
//! Expanding the exponential and bounding each power with the Bliss
//! inequality and `max_s s^(1/k) log(e/s) = k e^(1/k - 1)` gives
//! `sup I_β ≤ 1 + Σ_k e (k^(k-1)/k!) (β/e)^k · k C_{N,k}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridfn::Dim;
use crate::special::{log_bliss_constant, log_gamma};

/// `log term_k`, or `-∞` when `β = 0`.
pub fn log_series_term(n: Dim, beta: f64, k: u64) -> Result<f64> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("β must be ≥ 0, got {beta}")));
    }
    if k == 0 {
        return Err(Error::InvalidArgument(
            "series index starts at k = 1".into(),
        ));
    }
    if beta == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let kf = k as f64;
    let log_kc = kf.ln() + log_bliss_constant(n, kf)?;
    Ok(1.0 + (kf - 1.0) * kf.ln() - log_gamma(kf + 1.0)? + kf * (beta.ln() - 1.0) + log_kc)
}

/// `e (k^(k-1)/k!) (β/e)^k · k C_{N,k}`.
pub fn series_term(n: Dim, beta: f64, k: u64) -> Result<f64> {
    log_series_term(n, beta, k).map(f64::exp)
}

/// `term_{k+1} / term_k`, which tends to `β`.
pub fn term_ratio(n: Dim, beta: f64, k: u64) -> Result<f64> {
    if beta == 0.0 {
        return Ok(0.0);
    }
    Ok((log_series_term(n, beta, k + 1)? - log_series_term(n, beta, k)?).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    pub max_terms: u64,
    pub tail_tol: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            max_terms: 100_000,
            tail_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesBound {
    /// `1 + Σ_{k ≤ K} term_k`.
    pub value: f64,
    pub terms: u64,
    /// `term_K · r / (1 - r)` with `r` the certified tail ratio.
    pub tail_estimate: f64,
    /// The tail rule was met before `max_terms`.
    pub tail_converged: bool,
    pub last_ratio: f64,
}

/// Number of trailing ratios inspected when certifying the tail.
const RATIO_WINDOW: usize = 8;

/// Sums the series until the geometric tail estimate falls below
/// `tail_tol`.
///
/// The tail ratio is `max(β, largest of the last few observed ratios)`:
/// the ratios increase toward `β`, so `β` dominates every later ratio.
pub fn series_bound(n: Dim, beta: f64, cfg: &SeriesConfig) -> Result<SeriesBound> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!(
            "series bound needs 0 ≤ β < 1 (the series diverges for β > 1), got {beta}"
        )));
    }
    if beta == 0.0 {
        return Ok(SeriesBound {
            value: 1.0,
            terms: 0,
            tail_estimate: 0.0,
            tail_converged: true,
            last_ratio: 0.0,
        });
    }
    let mut sum = 1.0;
    let mut prev: Option<f64> = None;
    let mut recent: Vec<f64> = Vec::with_capacity(RATIO_WINDOW);
    let mut out = SeriesBound {
        value: 1.0,
        terms: 0,
        tail_estimate: f64::INFINITY,
        tail_converged: false,
        last_ratio: f64::NAN,
    };
    for k in 1..=cfg.max_terms {
        let t = series_term(n, beta, k)?;
        sum += t;
        out.value = sum;
        out.terms = k;
        if let Some(p) = prev {
            let r = t / p;
            out.last_ratio = r;
            if recent.len() == RATIO_WINDOW {
                recent.remove(0);
            }
            recent.push(r);
            let r_hat = recent.iter().copied().fold(beta, f64::max);
            if r_hat < 1.0 {
                out.tail_estimate = t * r_hat / (1.0 - r_hat);
                if out.tail_estimate <= cfg.tail_tol {
                    out.tail_converged = true;
                    break;
                }
            }
        }
        prev = Some(t);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesRow {
    pub k: u64,
    pub term: f64,
    /// `1 + Σ_{i ≤ k} term_i`.
    pub partial_sum: f64,
    /// `term_k / term_{k-1}`; undefined for `k = 1`.
    pub ratio: Option<f64>,
}

/// Terms, partial sums and consecutive ratios for `k = 1..=terms`.
pub fn series_table(n: Dim, beta: f64, terms: u64) -> Result<Vec<SeriesRow>> {
    let mut rows = Vec::with_capacity(terms as usize);
    let mut sum = 1.0;
    let mut prev: Option<f64> = None;
    for k in 1..=terms {
        let t = series_term(n, beta, k)?;
        sum += t;
        let ratio = prev.filter(|&p| p > 0.0).map(|p| t / p);
        rows.push(SeriesRow {
            k,
            term: t,
            partial_sum: sum,
            ratio,
        });
        prev = Some(t);
    }
    Ok(rows)
}

/// Partial sums `1 + Σ_{i ≤ k} term_i`, `k = 1..=terms`, for `β ≥ 1`.
pub fn divergence_witness(n: Dim, beta: f64, terms: u64) -> Result<Vec<f64>> {
    if !(beta >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "divergence witness needs β ≥ 1, got {beta}"
        )));
    }
    Ok(series_table(n, beta, terms)?
        .into_iter()
        .map(|r| r.partial_sum)
        .collect())
}
