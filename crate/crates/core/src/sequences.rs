//! Concentrating families, asymptotic sweeps and approximate-Moser
//! diagnostics.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt17;
use crate::functionals::{eval_functional, gamma_growth_model, supercritical_lower_bound};
use crate::gridfn::{Dim, GridFn};
use crate::quad::QuadConfig;
use crate::weights::{Perturbation, WeightSpec};

/// Largest `j` swept without flagging the row.
pub const DEFAULT_MAX_J: f64 = 1e8;

/// `v(s) = a^(-1/N) s` on `[0, a]`, `a^((N-1)/N)` on `[a, 1]`.
pub fn broken_line(a: f64, n: Dim) -> Result<GridFn> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "kink abscissa {a} outside (0, 1]"
        )));
    }
    let h = a.powf((n.as_f64() - 1.0) / n.as_f64());
    if a == 1.0 {
        return GridFn::new(&[(0.0, 0.0), (1.0, 1.0)]);
    }
    GridFn::new(&[(0.0, 0.0), (a, h), (1.0, h)])
}

/// Infinitesimal Moser function `w_j = broken_line(1/j)`.
pub fn moser_w(j: f64, n: Dim) -> Result<GridFn> {
    if !(j > 1.0) || !j.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Moser index j must exceed 1, got {j}"
        )));
    }
    broken_line(1.0 / j, n)
}

/// `start, start·ratio, …` up to `stop` (inclusive within rounding).
pub fn geometric_schedule(start: f64, stop: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(start > 0.0) || !(stop >= start) || !(ratio > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "bad geometric schedule {start}:{stop}:x{ratio}"
        )));
    }
    let steps = ((stop / start).ln() / ratio.ln() + 1e-9).floor() as i32;
    Ok((0..=steps).map(|k| start * ratio.powi(k)).collect())
}

/// Parses `a:b:xR`, e.g. `1e2:1e8:x10`.
pub fn parse_schedule(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Parse(format!("schedule `{spec}` is not of the form a:b:xR"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let ratio: f64 = parts[2]
        .trim()
        .strip_prefix('x')
        .ok_or_else(bad)?
        .parse()
        .map_err(|_| bad())?;
    geometric_schedule(start, stop, ratio)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub j: f64,
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
    pub model: Option<f64>,
    /// `j` beyond [`DEFAULT_MAX_J`].
    pub beyond_range: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub n: u32,
    pub weight: WeightSpec,
    pub cfg: QuadConfig,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    /// CSV with header `j,value,converged,model`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,value,converged,model\n");
        for r in &self.rows {
            let model = r.model.map(fmt17).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt17(r.j),
                fmt17(r.value),
                r.converged,
                model
            ));
        }
        out
    }
}

/// Comparison value attached to a sweep row: the divergence rate for
/// `γ > 1`, the closed-form lower bound for pure `I_β` with `β > 1`.
fn model_for(w: &WeightSpec, j: f64) -> Option<f64> {
    if w.gamma > 1.0 && w.beta == 1.0 {
        gamma_growth_model(w.gamma, j).ok()
    } else if w.beta > 1.0 && w.gamma == 0.0 && w.perturbation == Perturbation::None {
        supercritical_lower_bound(j, w.beta - 1.0).ok()
    } else {
        None
    }
}

/// Evaluates the functional along `w_j` for each `j` of the schedule.
pub fn sweep(w: &WeightSpec, n: Dim, schedule: &[f64], cfg: &QuadConfig) -> Result<SweepTable> {
    cfg.validate()?;
    if schedule.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidArgument(
            "j schedule must be strictly increasing".into(),
        ));
    }
    if let Some(&j) = schedule.iter().find(|&&j| !(j > 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "Moser index j must exceed 1, got {j}"
        )));
    }
    let rows = schedule
        .par_iter()
        .map(|&j| {
            let res = moser_w(j, n).and_then(|f| eval_functional(&f, w, n, cfg));
            let (value, error_estimate, converged, error) = match res {
                Ok(r) => (r.value, r.error_estimate, r.converged, None),
                Err(e) => (f64::NAN, f64::NAN, false, Some(e.to_string())),
            };
            SweepRow {
                j,
                value,
                error_estimate,
                converged,
                model: model_for(w, j),
                beyond_range: j > DEFAULT_MAX_J,
                error,
            }
        })
        .collect();
    Ok(SweepTable {
        n: n.get(),
        weight: *w,
        cfg: *cfg,
        rows,
    })
}

/// Approximate-Moser report for a monotone member of `E_N`.
///
/// Margins are `max (lhs - rhs)` over the sampled points, so a lemma holds
/// on the sample when its margin is `≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaReport {
    pub a: f64,
    pub delta: f64,
    /// `(v(a)/a)^(N-2) ∫₀^a |v' - v(a)/a|² + ∫_a^1 |v'|^N`.
    pub defect: f64,
    /// `defect - δ`.
    pub closeness_margin: f64,
    /// `v(s) - v(a) - (s-a)^(1-1/N) δ^(1/N)` on `[a, 1]`.
    pub right_margin: f64,
    /// `v(s) - s v(a)/a - (a-s)^(1/2) δ^(1/2) (v(a)/a)^(-(N-2)/2)` on `[0, a]`.
    pub left_margin: f64,
    /// `v(s) - s a^(-1/N) - s^((N-1)/N) (2δ)^(1/N)` on `[0, a]`; only for `δ < 1/2`.
    pub moser_margin: Option<f64>,
}

impl LemmaReport {
    pub fn worst_margin(&self) -> f64 {
        [
            self.closeness_margin,
            self.right_margin,
            self.left_margin,
            self.moser_margin.unwrap_or(f64::NEG_INFINITY),
        ]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Samples per side for the pointwise bounds (nodes are always added).
pub const LEMMA_SAMPLES: usize = 200;

pub fn diagnostics(f: &GridFn, n: Dim) -> Result<LemmaReport> {
    if let Some(seg) = f.slopes().iter().position(|&g| g < 0.0) {
        return Err(Error::SignChanging { segment: seg });
    }
    let e = f.energy(n);
    if (e - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("energy {e} is not 1")));
    }
    if f.is_zero() {
        return Err(Error::ZeroEnergy);
    }
    let mr = f.max_ratio(n);
    let a = mr.a;
    let delta = mr.delta;
    let d = delta.max(0.0);
    let nf = n.as_f64();
    let va = f.eval(a)?;
    let c = va / a;

    let xs = f.xs();
    let mut l2 = 0.0;
    for (i, &g) in f.slopes().iter().enumerate() {
        let len = (xs[i + 1].min(a) - xs[i]).max(0.0);
        l2 += (g - c) * (g - c) * len;
    }
    let defect = c.powf(nf - 2.0) * l2 + f.energy_on(n, a, 1.0);

    let left_pts = xs
        .iter()
        .copied()
        .filter(|&x| x <= a)
        .chain((0..=LEMMA_SAMPLES).map(|k| a * k as f64 / LEMMA_SAMPLES as f64));
    let right_pts = xs
        .iter()
        .copied()
        .filter(|&x| x >= a)
        .chain((0..=LEMMA_SAMPLES).map(|k| a + (1.0 - a) * k as f64 / LEMMA_SAMPLES as f64));

    let mut right_margin = f64::NEG_INFINITY;
    for s in right_pts {
        let s = s.clamp(a, 1.0);
        let bound = va + (s - a).powf(1.0 - 1.0 / nf) * d.powf(1.0 / nf);
        right_margin = right_margin.max(f.eval(s)? - bound);
    }

    let mut left_margin = f64::NEG_INFINITY;
    let mut moser_margin = f64::NEG_INFINITY;
    let left_coef = d.sqrt() * c.powf(-(nf - 2.0) / 2.0);
    for s in left_pts {
        let s = s.clamp(0.0, a);
        let v = f.eval(s)?;
        left_margin = left_margin.max(v - s * c - (a - s).sqrt() * left_coef);
        let bound = s * a.powf(-1.0 / nf) + s.powf((nf - 1.0) / nf) * (2.0 * d).powf(1.0 / nf);
        moser_margin = moser_margin.max(v - bound);
    }

    Ok(LemmaReport {
        a,
        delta,
        defect,
        closeness_margin: defect - delta,
        right_margin,
        left_margin,
        moser_margin: (delta < 0.5).then_some(moser_margin),
    })
}
