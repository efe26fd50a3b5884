//! Adaptive quadrature for `∫₀¹ exp(W(s) · |v(s)|^N / s^(N-1)) ds` with
//! piecewise-linear `v`.
//!
//! Every breakpoint of `v` is a panel boundary. Segments start from a
//! geometric partition (toward `s = 0` on the first segment, upward from the
//! left end on long segments such as the plateau of a Moser function) and are
//! refined by bisecting the panel with the largest error estimate. Each panel
//! uses a 7/15-point Gauss–Kronrod pair and is evaluated as
//! `exp(m) · Σ w_k exp(φ(s_k) - m)` with `m` the largest exponent on the
//! panel, so large exponents are only exponentiated once per panel.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridfn::{ratio_at, Dim, GridFn};
use crate::weights::WeightSpec;

/// Kronrod abscissas on `[0, 1]` (half-rule, descending; last is the centre).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for the odd Kronrod abscissas `XGK[1], XGK[3], XGK[5], XGK[7]`.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Number of geometric panels laid toward `s = 0` before adaptivity.
const ORIGIN_LEVELS: usize = 8;
/// Upper bound on the initial geometric panels of a single segment.
const MAX_INITIAL_PER_SEGMENT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Panel budget per segment of the integrated function.
    pub max_panels: usize,
    /// Ratio of consecutive geometric panel boundaries.
    pub origin_refinement: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_panels: 100_000,
            origin_refinement: 2.0,
        }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.max_panels < 8 {
            return Err(Error::InvalidArgument("max_panels must be ≥ 8".into()));
        }
        if !(self.origin_refinement > 1.0) || !self.origin_refinement.is_finite() {
            return Err(Error::InvalidArgument(
                "origin_refinement must be > 1".into(),
            ));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        (self.rel_tol * value.abs()).max(self.abs_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub panels_used: usize,
    pub converged: bool,
}

/// Exponent `φ(s) = W(s) |v(s)|^N / s^(N-1)` restricted to one segment.
struct Exponent<'a> {
    f: &'a GridFn,
    w: &'a WeightSpec,
    n: Dim,
    trivial: bool,
}

impl<'a> Exponent<'a> {
    fn new(f: &'a GridFn, w: &'a WeightSpec, n: Dim) -> Self {
        Exponent {
            f,
            w,
            n,
            trivial: f.is_zero() || w.is_zero(),
        }
    }

    #[inline]
    fn at(&self, seg: usize, s: f64) -> f64 {
        if self.trivial {
            return 0.0;
        }
        let v = self.f.eval_on(seg, s);
        let r = ratio_at(v, s, self.n);
        if r == 0.0 {
            return 0.0;
        }
        self.w.eval_unchecked(s) * r
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Panel {
    pub seg: usize,
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Kronrod nodes on `[a, b]` as `(node, kronrod weight, gauss weight)`; the
/// Gauss weight is zero on Kronrod-only nodes.
#[inline]
fn kronrod_nodes(a: f64, b: f64) -> [(f64, f64, f64); 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0, 0.0); 15];
    for k in 0..7 {
        let gw = if k % 2 == 1 { WG[k / 2] } else { 0.0 };
        out[2 * k] = (c - h * XGK[k], WGK[k], gw);
        out[2 * k + 1] = (c + h * XGK[k], WGK[k], gw);
    }
    out[14] = (c, WGK[7], WG[3]);
    out
}

fn eval_panel(phi: &Exponent<'_>, seg: usize, a: f64, b: f64) -> Result<Panel> {
    let nodes = kronrod_nodes(a, b);
    let mut ex = [0.0; 15];
    let mut m = f64::NEG_INFINITY;
    for (slot, &(s, _, _)) in ex.iter_mut().zip(nodes.iter()) {
        let p = phi.at(seg, s);
        if !p.is_finite() {
            return Err(Error::NonFiniteExponent { s });
        }
        *slot = p;
        m = m.max(p);
    }
    let (mut k, mut g) = (0.0, 0.0);
    for (&p, &(_, wk, wg)) in ex.iter().zip(nodes.iter()) {
        let e = (p - m).exp();
        k += wk * e;
        g += wg * e;
    }
    let h = 0.5 * (b - a);
    let scale = m.exp();
    if !scale.is_finite() {
        return Err(Error::Overflow(format!("panel exponent {m} on [{a}, {b}]")));
    }
    Ok(Panel {
        seg,
        a,
        b,
        value: scale * h * k,
        err: scale * h * (k - g).abs(),
    })
}

/// Initial panel boundaries for segment `[x0, x1]`.
fn initial_cuts(x0: f64, x1: f64, r: f64) -> Vec<f64> {
    let mut cuts = vec![x0];
    if x0 == 0.0 {
        let mut inner: Vec<f64> = (1..=ORIGIN_LEVELS).map(|k| x1 / r.powi(k as i32)).collect();
        inner.reverse();
        cuts.extend(inner.into_iter().filter(|&c| c > 0.0));
    } else {
        let mut c = x0 * r;
        while c < x1 && cuts.len() < MAX_INITIAL_PER_SEGMENT {
            cuts.push(c);
            c *= r;
        }
    }
    cuts.push(x1);
    cuts
}

/// Splits a panel: geometrically if it touches the origin, else in half.
fn split_point(p: &Panel, r: f64) -> f64 {
    if p.a == 0.0 {
        p.b / r
    } else {
        0.5 * (p.a + p.b)
    }
}

/// Runs the adaptive refinement and returns the final panels in ascending
/// order together with the summary.
pub(crate) fn adaptive_panels(
    f: &GridFn,
    w: &WeightSpec,
    n: Dim,
    cfg: &QuadConfig,
) -> Result<(QuadResult, Vec<Panel>)> {
    cfg.validate()?;
    let phi = Exponent::new(f, w, n);
    let xs = f.xs();
    let budget = cfg.max_panels.saturating_mul(f.segments());

    let mut heap = BinaryHeap::new();
    let mut done: Vec<Panel> = Vec::new();
    let (mut total, mut total_err) = (0.0, 0.0);
    for seg in 0..f.segments() {
        let cuts = if phi.trivial {
            vec![xs[seg], xs[seg + 1]]
        } else {
            initial_cuts(xs[seg], xs[seg + 1], cfg.origin_refinement)
        };
        for c in cuts.windows(2) {
            let p = eval_panel(&phi, seg, c[0], c[1])?;
            total += p.value;
            total_err += p.err;
            heap.push(p);
        }
    }

    let mut count = heap.len();
    while total_err > cfg.target(total) && count < budget {
        let Some(worst) = heap.pop() else { break };
        let mid = split_point(&worst, cfg.origin_refinement);
        if !(mid > worst.a && mid < worst.b) {
            // panel is at floating-point resolution
            done.push(worst);
            continue;
        }
        let left = eval_panel(&phi, worst.seg, worst.a, mid)?;
        let right = eval_panel(&phi, worst.seg, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        count += 1;
    }

    done.extend(heap.into_vec());
    done.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value: f64 = done.iter().map(|p| p.value).sum();
    let error_estimate: f64 = done.iter().map(|p| p.err).sum();
    let converged = error_estimate <= cfg.target(value);
    Ok((
        QuadResult {
            value,
            error_estimate,
            panels_used: done.len(),
            converged,
        },
        done,
    ))
}

/// `∫₀¹ exp(W(s) |v(s)|^N / s^(N-1)) ds`.
pub fn integrate_exp(f: &GridFn, w: &WeightSpec, n: Dim, cfg: &QuadConfig) -> Result<QuadResult> {
    adaptive_panels(f, w, n, cfg).map(|(r, _)| r)
}

/// Value and slope-gradient of the integral, the gradient evaluated with
/// the Kronrod rule on the panels refined for the value.
///
/// With `c(s) = exp(φ) · W · N |v|^(N-1) sgn(v) / s^(N-1)` and
/// `∂v/∂g_i = clamp(s - x_i, 0, Δx_i)`, component `i` is
/// `Δx_i ∫_{x_{i+1}}^1 c + ∫_{x_i}^{x_{i+1}} c · (s - x_i)`.
pub(crate) fn integrate_exp_with_grad(
    f: &GridFn,
    w: &WeightSpec,
    n: Dim,
    cfg: &QuadConfig,
) -> Result<(QuadResult, Vec<f64>)> {
    let (res, panels) = adaptive_panels(f, w, n, cfg)?;
    let m_seg = f.segments();
    let mut whole = vec![0.0; m_seg];
    let mut moment = vec![0.0; m_seg];
    if f.is_zero() || w.is_zero() {
        return Ok((res, vec![0.0; m_seg]));
    }
    let phi = Exponent::new(f, w, n);
    let xs = f.xs();
    let nf = n.as_f64();
    for p in &panels {
        let nodes = kronrod_nodes(p.a, p.b);
        let mut ex = [0.0; 15];
        let mut m = f64::NEG_INFINITY;
        for (slot, &(s, _, _)) in ex.iter_mut().zip(nodes.iter()) {
            *slot = phi.at(p.seg, s);
            m = m.max(*slot);
        }
        let (mut a_sum, mut b_sum) = (0.0, 0.0);
        for (&e, &(s, wk, _)) in ex.iter().zip(nodes.iter()) {
            let v = f.eval_on(p.seg, s);
            if v == 0.0 {
                continue;
            }
            let dphi = w.eval_unchecked(s) * nf * n.pow_m1(v.abs() / s) * v.signum();
            let c = wk * (e - m).exp() * dphi;
            a_sum += c;
            b_sum += c * (s - xs[p.seg]);
        }
        let scale = m.exp() * 0.5 * (p.b - p.a);
        whole[p.seg] += scale * a_sum;
        moment[p.seg] += scale * b_sum;
    }
    let mut grad = vec![0.0; m_seg];
    let mut tail = 0.0;
    for i in (0..m_seg).rev() {
        grad[i] = (xs[i + 1] - xs[i]) * tail + moment[i];
        tail += whole[i];
    }
    Ok((res, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::{random_monotone, GridKind};

    fn moser(j: f64, n: Dim) -> GridFn {
        let h = j.powf(-(n.as_f64() - 1.0) / n.as_f64());
        GridFn::new(&[(0.0, 0.0), (1.0 / j, h), (1.0, h)]).unwrap()
    }

    #[test]
    fn zero_function_integrates_to_one() {
        for n in [Dim::TWO, Dim::THREE] {
            let r = integrate_exp(
                &GridFn::zero(),
                &WeightSpec::j_gamma(1.0),
                n,
                &QuadConfig::default(),
            )
            .unwrap();
            assert!((r.value - 1.0).abs() < 1e-14, "{r:?}");
            assert!(r.converged);
        }
    }

    #[test]
    fn zero_weight_integrates_to_one() {
        let f = random_monotone(5, 17, Dim::THREE, GridKind::Random).unwrap();
        let r = integrate_exp(
            &f,
            &WeightSpec::i_beta(0.0),
            Dim::THREE,
            &QuadConfig::default(),
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_matches_brute_force() {
        // ∫₀¹ (e/s)^s ds by composite midpoint on 10^7 cells
        let cells = 10_000_000usize;
        let h = 1.0 / cells as f64;
        let oracle: f64 = (0..cells)
            .map(|i| {
                let s = (i as f64 + 0.5) * h;
                (s * (1.0 - s.ln())).exp()
            })
            .sum::<f64>()
            * h;
        let id = GridFn::new(&[(0.0, 0.0), (1.0, 1.0)]).unwrap();
        let r = integrate_exp(
            &id,
            &WeightSpec::i_beta(1.0),
            Dim::TWO,
            &QuadConfig::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert!(
            ((r.value - oracle) / oracle).abs() < 1e-6,
            "{} vs {oracle}",
            r.value
        );
    }

    #[test]
    fn converged_flag_respects_contract() {
        let cfg = QuadConfig::default();
        let r = integrate_exp(
            &moser(1e6, Dim::TWO),
            &WeightSpec::j_gamma(1.0),
            Dim::TWO,
            &cfg,
        )
        .unwrap();
        assert!(r.converged);
        assert!(r.error_estimate <= (cfg.rel_tol * r.value).max(cfg.abs_tol));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let cfg = QuadConfig {
            max_panels: 8,
            rel_tol: 1e-14,
            ..QuadConfig::default()
        };
        let r = integrate_exp(
            &moser(1e6, Dim::TWO),
            &WeightSpec::j_gamma(1.0),
            Dim::TWO,
            &cfg,
        )
        .unwrap();
        assert!(!r.converged);
        assert!(r.value.is_finite());
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = QuadConfig {
            max_panels: 4,
            ..QuadConfig::default()
        };
        assert!(integrate_exp(&GridFn::zero(), &WeightSpec::i_beta(1.0), Dim::TWO, &cfg).is_err());
        let cfg = QuadConfig::default().with_rel_tol(0.0);
        assert!(integrate_exp(&GridFn::zero(), &WeightSpec::i_beta(1.0), Dim::TWO, &cfg).is_err());
    }

    #[test]
    fn moser_closed_form_first_piece() {
        // On [0, 1/j] the I_β integrand of w_j is (e/s)^{β j s}; check the
        // piecewise structure against direct evaluation at the kink.
        let f = moser(100.0, Dim::TWO);
        let phi_spec = WeightSpec::i_beta(1.2);
        let phi = Exponent::new(&f, &phi_spec, Dim::TWO);
        let s = 0.01;
        let want = 1.2 * 100.0 * s * (1.0 - f64::ln(s));
        assert!((phi.at(0, s) - want).abs() < 1e-12);
    }

    #[test]
    fn initial_cuts_are_geometric() {
        let c = initial_cuts(0.0, 1.0, 2.0);
        assert_eq!(c.len(), ORIGIN_LEVELS + 2);
        assert_eq!(c[1], 1.0 / 256.0);
        let c = initial_cuts(1e-3, 1.0, 2.0);
        assert_eq!(c[0], 1e-3);
        assert_eq!(c[1], 2e-3);
        assert_eq!(*c.last().unwrap(), 1.0);
        assert_eq!(initial_cuts(0.5, 0.75, 2.0), vec![0.5, 0.75]);
    }
}
