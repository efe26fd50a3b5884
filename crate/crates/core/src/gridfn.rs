//! Piecewise-linear candidate functions on `[0, 1]` with `v(0) = 0`.
//!
//! A [`GridFn`] is the discrete stand-in for an element of
//! `E_N = { v : v(0) = 0, ∫₀¹ |v'|^N = 1 }`. Energies, pointwise bounds and
//! the ratio maximum `max_s |v(s)|^N / s^(N-1)` are all computed exactly from
//! the node list; nothing in this module uses quadrature.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent `N ≥ 2` of the energy `∫ |v'|^N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Dim(u32);

impl Dim {
    pub const TWO: Dim = Dim(2);
    pub const THREE: Dim = Dim(3);
    pub const FOUR: Dim = Dim(4);

    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("N must be ≥ 2".into()));
        }
        Ok(Dim(n))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    /// `x^N`.
    #[inline]
    pub fn pow(self, x: f64) -> f64 {
        x.powi(self.0 as i32)
    }

    /// `x^(N-1)`.
    #[inline]
    pub fn pow_m1(self, x: f64) -> f64 {
        x.powi(self.0 as i32 - 1)
    }
}

impl TryFrom<u32> for Dim {
    type Error = Error;
    fn try_from(n: u32) -> Result<Self> {
        Dim::new(n)
    }
}

impl From<Dim> for u32 {
    fn from(d: Dim) -> u32 {
        d.0
    }
}

impl std::fmt::Display for Dim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `|v|^N / s^(N-1)`, evaluated as `(|v|/s)^(N-1) · |v|` so that tiny `s`
/// neither overflows nor underflows before the quotient is formed.
#[inline]
pub(crate) fn ratio_at(v: f64, s: f64, n: Dim) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let av = v.abs();
    n.pow_m1(av / s) * av
}

/// Piecewise-linear function on `[0, 1]` through the given nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFnRepr", into = "GridFnRepr")]
pub struct GridFn {
    xs: Vec<f64>,
    vs: Vec<f64>,
    slopes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridFnRepr {
    nodes: Vec<[f64; 2]>,
}

impl TryFrom<GridFnRepr> for GridFn {
    type Error = Error;
    fn try_from(r: GridFnRepr) -> Result<Self> {
        let nodes: Vec<(f64, f64)> = r.nodes.iter().map(|p| (p[0], p[1])).collect();
        GridFn::new(&nodes)
    }
}

impl From<GridFn> for GridFnRepr {
    fn from(f: GridFn) -> Self {
        GridFnRepr {
            nodes: f.xs.iter().zip(&f.vs).map(|(&x, &v)| [x, v]).collect(),
        }
    }
}

impl GridFn {
    /// Validates the node list and caches per-segment slopes.
    pub fn new(nodes: &[(f64, f64)]) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidNodes("at least 2 nodes required".into()));
        }
        if nodes.iter().any(|(x, v)| !x.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidNodes("non-finite node".into()));
        }
        if nodes[0] != (0.0, 0.0) {
            return Err(Error::InvalidNodes("first node must be (0, 0)".into()));
        }
        if nodes[nodes.len() - 1].0 != 1.0 {
            return Err(Error::InvalidNodes("last abscissa must be 1".into()));
        }
        for (i, w) in nodes.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidNodes(format!(
                    "abscissas not strictly increasing at node {}",
                    i + 1
                )));
            }
        }
        let xs: Vec<f64> = nodes.iter().map(|n| n.0).collect();
        let vs: Vec<f64> = nodes.iter().map(|n| n.1).collect();
        let slopes = xs
            .windows(2)
            .zip(vs.windows(2))
            .map(|(x, v)| (v[1] - v[0]) / (x[1] - x[0]))
            .collect();
        Ok(GridFn { xs, vs, slopes })
    }

    /// Builds the function on the abscissa grid `xs` whose segment `i` has
    /// derivative `slopes[i]`.
    pub fn from_slopes(xs: &[f64], slopes: &[f64]) -> Result<Self> {
        if xs.len() != slopes.len() + 1 {
            return Err(Error::InvalidNodes(format!(
                "{} abscissas but {} slopes",
                xs.len(),
                slopes.len()
            )));
        }
        let mut nodes = Vec::with_capacity(xs.len());
        let mut v = 0.0;
        nodes.push((xs[0], 0.0));
        for (i, g) in slopes.iter().enumerate() {
            v += g * (xs[i + 1] - xs[i]);
            nodes.push((xs[i + 1], v));
        }
        GridFn::new(&nodes)
    }

    /// The identically zero function on `[0, 1]`.
    pub fn zero() -> Self {
        GridFn::new(&[(0.0, 0.0), (1.0, 0.0)]).expect("valid")
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.vs
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn segments(&self) -> usize {
        self.slopes.len()
    }

    pub fn nodes(&self) -> Vec<(f64, f64)> {
        self.xs
            .iter()
            .copied()
            .zip(self.vs.iter().copied())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.vs.iter().all(|&v| v == 0.0)
    }

    pub fn is_monotone(&self) -> bool {
        self.slopes.iter().all(|&g| g >= 0.0)
    }

    /// `Σ |g_i|^N Δx_i`, exact for piecewise-linear functions.
    pub fn energy(&self, n: Dim) -> f64 {
        self.slopes
            .iter()
            .zip(self.xs.windows(2))
            .map(|(g, x)| n.pow(g.abs()) * (x[1] - x[0]))
            .sum()
    }

    /// Energy restricted to `[lo, hi]`.
    pub fn energy_on(&self, n: Dim, lo: f64, hi: f64) -> f64 {
        self.slopes
            .iter()
            .zip(self.xs.windows(2))
            .map(|(g, x)| {
                let w = (x[1].min(hi) - x[0].max(lo)).max(0.0);
                n.pow(g.abs()) * w
            })
            .sum()
    }

    /// Scales `f` onto the unit energy sphere.
    pub fn normalize(&self, n: Dim) -> Result<GridFn> {
        let e = self.energy(n);
        if e <= 0.0 {
            return Err(Error::ZeroEnergy);
        }
        Ok(self.scaled(e.powf(-1.0 / n.as_f64())))
    }

    pub fn scaled(&self, c: f64) -> GridFn {
        let nodes: Vec<(f64, f64)> = self
            .xs
            .iter()
            .zip(&self.vs)
            .map(|(&x, &v)| (x, v * c))
            .collect();
        GridFn::new(&nodes).expect("scaling a finite function by a finite factor")
    }

    /// Index of the segment containing `s` (right-closed except at 0).
    #[inline]
    pub(crate) fn segment_of(&self, s: f64) -> usize {
        let k = self.xs.partition_point(|&x| x < s);
        k.saturating_sub(1).min(self.segments() - 1)
    }

    /// Value on segment `i` at `s`, with no range check.
    #[inline]
    pub(crate) fn eval_on(&self, i: usize, s: f64) -> f64 {
        if s == self.xs[i + 1] {
            return self.vs[i + 1];
        }
        self.vs[i] + self.slopes[i] * (s - self.xs[i])
    }

    /// Linear interpolation; exact at the nodes.
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::OutOfDomain(s));
        }
        Ok(self.eval_on(self.segment_of(s), s))
    }

    /// Global maximizer of `|v(s)|^N / s^(N-1)` over `[0, 1]`.
    ///
    /// On a segment where `v(s) = α + βs` keeps its sign, the derivative of
    /// the ratio has the sign of `βs - (N-1)α`, so the only interior critical
    /// point `s* = (N-1)α/β` is a minimum. The maximum is therefore attained
    /// at a node. Ties go to the smallest abscissa.
    pub fn max_ratio(&self, n: Dim) -> MaxRatioResult {
        if self.is_zero() {
            return MaxRatioResult {
                a: 1.0,
                max_value: 0.0,
                delta: 1.0,
                degenerate: true,
            };
        }
        let mut best_a = 1.0;
        let mut best = f64::NEG_INFINITY;
        let mut consider = |s: f64, r: f64| {
            if r > best {
                best = r;
                best_a = s;
            }
        };
        for i in 0..self.segments() {
            let x1 = self.xs[i + 1];
            consider(x1, ratio_at(self.vs[i + 1], x1, n));
        }
        MaxRatioResult {
            a: best_a,
            max_value: best,
            delta: 1.0 - best,
            degenerate: false,
        }
    }

    /// Worst signed violation of `|v(s)| ≤ s^((N-1)/N) · E^(1/N)`.
    ///
    /// `|v|` is linear between nodes and sign changes while the right-hand
    /// side is concave, so the difference is convex on each piece and its
    /// maximum sits at a node or a zero of `v`. The result is exact. The
    /// trivial equality at `s = 0` is not reported.
    pub fn basic_bound_check(&self, n: Dim) -> BoundViolation {
        let scale = self.energy(n).powf(1.0 / n.as_f64());
        let p = (n.as_f64() - 1.0) / n.as_f64();
        let margin = |s: f64, v: f64| v.abs() - s.powf(p) * scale;
        let mut worst = BoundViolation {
            violation: f64::NEG_INFINITY,
            at: f64::NAN,
        };
        let mut consider = |s: f64, v: f64| {
            let m = margin(s, v);
            if m > worst.violation {
                worst = BoundViolation {
                    violation: m,
                    at: s,
                };
            }
        };
        for i in 0..self.segments() {
            consider(self.xs[i + 1], self.vs[i + 1]);
            let (v0, v1) = (self.vs[i], self.vs[i + 1]);
            if v0 * v1 < 0.0 {
                let root = self.xs[i] - v0 / self.slopes[i];
                consider(root, 0.0);
            }
        }
        worst
    }

    /// Refines the abscissa grid by inserting `s` as a node (no-op if present).
    pub fn with_node(&self, s: f64) -> Result<GridFn> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::OutOfDomain(s));
        }
        if self.xs.contains(&s) {
            return Ok(self.clone());
        }
        let v = self.eval(s)?;
        let mut nodes = self.nodes();
        let k = self.xs.partition_point(|&x| x < s);
        nodes.insert(k, (s, v));
        GridFn::new(&nodes)
    }

    /// Resamples onto the abscissas `xs`; exact when every kink of `self`
    /// is one of `xs`.
    pub fn resample(&self, xs: &[f64]) -> Result<GridFn> {
        let nodes = xs
            .iter()
            .map(|&x| self.eval(x).map(|v| (x, v)))
            .collect::<Result<Vec<_>>>()?;
        GridFn::new(&nodes)
    }
}

/// Location and value of `max_s |v(s)|^N / s^(N-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxRatioResult {
    pub a: f64,
    /// `1 - δ` for functions in `E_N`.
    pub max_value: f64,
    pub delta: f64,
    /// Set for the all-zero function, where the maximizer is undefined.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundViolation {
    /// `max (|v(s)| - s^((N-1)/N) E^(1/N))`; `≤ 0` when the bound holds.
    pub violation: f64,
    pub at: f64,
}

/// Abscissa layouts for generated test functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind {
    Uniform,
    /// Sorted uniform random breakpoints.
    Random,
    /// Log-uniform breakpoints from `finest` up to 1.
    Geometric {
        finest: f64,
    },
}

/// Abscissas `0 = x_0 < x_1 = finest < … < x_m = 1`, log-uniform above
/// `finest`.
pub fn geometric_grid(segments: usize, finest: f64) -> Result<Vec<f64>> {
    if segments == 0 {
        return Err(Error::InvalidArgument("segments must be ≥ 1".into()));
    }
    if !(finest > 0.0 && finest < 1.0) && segments > 1 {
        return Err(Error::InvalidArgument(format!(
            "finest cell {finest} outside (0, 1)"
        )));
    }
    let mut xs = vec![0.0];
    if segments == 1 {
        xs.push(1.0);
        return Ok(xs);
    }
    let m = segments - 1;
    let lf = finest.ln();
    for k in 0..m {
        xs.push((lf * (m - k) as f64 / m as f64).exp());
    }
    xs.push(1.0);
    Ok(xs)
}

/// Random nondecreasing member of `E_N`, deterministic per seed.
pub fn random_monotone(seed: u64, segments: usize, n: Dim, kind: GridKind) -> Result<GridFn> {
    if segments == 0 {
        return Err(Error::InvalidArgument("segments must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = match kind {
        GridKind::Uniform => (0..=segments).map(|i| i as f64 / segments as f64).collect(),
        GridKind::Geometric { finest } => geometric_grid(segments, finest)?,
        GridKind::Random => {
            let mut inner: Vec<f64> = (1..segments).map(|_| rng.random::<f64>()).collect();
            inner.sort_by(f64::total_cmp);
            inner.dedup();
            let mut xs = vec![0.0];
            xs.extend(inner.into_iter().filter(|&x| x > 0.0 && x < 1.0));
            xs.push(1.0);
            xs
        }
    };
    let spread: f64 = rng.random_range(0.1..2.0);
    let dist = LogNormal::new(0.0, spread).expect("positive sigma");
    let slopes: Vec<f64> = (0..xs.len() - 1).map(|_| dist.sample(&mut rng)).collect();
    GridFn::from_slopes(&xs, &slopes)?.normalize(n)
}
