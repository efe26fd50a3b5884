//! Invariant suites run by `bliss-moser verify`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{eval_functional, grad_slopes};
use crate::gridfn::{random_monotone, Dim, GridFn, GridKind};
use crate::quad::QuadConfig;
use crate::sequences::{diagnostics, geometric_schedule, moser_w, sweep};
use crate::series::{series_bound, term_ratio, SeriesConfig};
use crate::special::{bliss_constant, bliss_limit};
use crate::weights::{Perturbation, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lemmas,
    Bound,
    Constants,
    Series,
    Gradients,
    Trichotomy,
    Quadrature,
    Exactness,
    All,
}

impl Suite {
    const EACH: [Suite; 8] = [
        Suite::Constants,
        Suite::Exactness,
        Suite::Quadrature,
        Suite::Bound,
        Suite::Lemmas,
        Suite::Gradients,
        Suite::Series,
        Suite::Trichotomy,
    ];
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lemmas" => Suite::Lemmas,
            "bound" => Suite::Bound,
            "constants" => Suite::Constants,
            "series" => Suite::Series,
            "gradients" => Suite::Gradients,
            "trichotomy" => Suite::Trichotomy,
            "quadrature" => Suite::Quadrature,
            "exactness" => Suite::Exactness,
            "all" => Suite::All,
            other => return Err(Error::Parse(format!("unknown suite `{other}`"))),
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Lemmas => "lemmas",
            Suite::Bound => "bound",
            Suite::Constants => "constants",
            Suite::Series => "series",
            Suite::Gradients => "gradients",
            Suite::Trichotomy => "trichotomy",
            Suite::Quadrature => "quadrature",
            Suite::Exactness => "exactness",
            Suite::All => "all",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub violations: usize,
    pub cases: usize,
    pub detail: String,
}

impl Check {
    fn new(suite: Suite, name: &str, cases: usize, violations: usize, detail: String) -> Self {
        Check {
            suite,
            name: name.into(),
            passed: violations == 0,
            violations,
            cases,
            detail,
        }
    }

    fn single(suite: Suite, name: &str, ok: bool, detail: String) -> Self {
        Check::new(suite, name, 1, usize::from(!ok), detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    /// Fixed-width table, one line per check.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<11} {:<40} {:>6} {:>10}  {}\n",
            "suite", "check", "result", "violations", "detail"
        );
        for c in &self.checks {
            out.push_str(&format!(
                "{:<11} {:<40} {:>6} {:>5}/{:<4}  {}\n",
                c.suite.to_string(),
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.violations,
                c.cases,
                c.detail
            ));
        }
        out
    }
}

/// Functions per `N` in the lemma and bound corpora.
pub const CORPUS_SIZE: usize = 1000;

pub const DIMS: [Dim; 3] = [Dim::TWO, Dim::THREE, Dim::FOUR];

/// Deterministic corpus of nondecreasing members of `E_N` mixing uniform,
/// random and geometric grids with 1 to 24 segments.
pub fn corpus(n: Dim, count: usize, base_seed: u64) -> Result<Vec<GridFn>> {
    (0..count)
        .map(|i| {
            let seed = base_seed.wrapping_add(i as u64);
            let kind = match i % 3 {
                0 => GridKind::Uniform,
                1 => GridKind::Random,
                _ => GridKind::Geometric { finest: 1e-6 },
            };
            random_monotone(seed, 1 + i % 24, n, kind)
        })
        .collect()
}

pub fn run(suite: Suite) -> Result<VerifyReport> {
    let suites: Vec<Suite> = if suite == Suite::All {
        Suite::EACH.to_vec()
    } else {
        vec![suite]
    };
    let mut checks = Vec::new();
    for s in suites {
        checks.extend(match s {
            Suite::Lemmas => lemmas()?,
            Suite::Bound => bound()?,
            Suite::Constants => constants()?,
            Suite::Series => series()?,
            Suite::Gradients => gradients()?,
            Suite::Trichotomy => trichotomy()?,
            Suite::Quadrature => quadrature()?,
            Suite::Exactness => exactness()?,
            Suite::All => unreachable!(),
        });
    }
    Ok(VerifyReport { checks })
}

pub fn lemmas() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for n in DIMS {
        let fs = corpus(n, CORPUS_SIZE, 1)?;
        let reports = fs
            .iter()
            .map(|f| diagnostics(f, n))
            .collect::<Result<Vec<_>>>()?;
        let columns: [(&str, Vec<f64>); 4] = [
            (
                "closeness defect ≤ δ",
                reports.iter().map(|r| r.closeness_margin).collect(),
            ),
            (
                "right pointwise bound",
                reports.iter().map(|r| r.right_margin).collect(),
            ),
            (
                "left pointwise bound",
                reports.iter().map(|r| r.left_margin).collect(),
            ),
            (
                "Moser-type bound (δ < 1/2)",
                reports.iter().filter_map(|r| r.moser_margin).collect(),
            ),
        ];
        for (name, vals) in columns {
            let bad = vals.iter().filter(|&&x| !(x <= 1e-9)).count();
            let worst = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            checks.push(Check::new(
                Suite::Lemmas,
                &format!("N={n} {name}"),
                vals.len(),
                bad,
                format!("worst margin {worst:.3e}"),
            ));
        }
    }
    Ok(checks)
}

pub fn bound() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for n in DIMS {
        let fs = corpus(n, CORPUS_SIZE, 7)?;
        let worst: Vec<f64> = fs
            .iter()
            .map(|f| f.basic_bound_check(n).violation)
            .collect();
        let bad = worst.iter().filter(|&&x| !(x <= 1e-12)).count();
        let w = worst.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::new(
            Suite::Bound,
            &format!("N={n} |v(s)| ≤ s^(1-1/N)"),
            fs.len(),
            bad,
            format!("worst violation {w:.3e}"),
        ));
    }
    Ok(checks)
}

pub fn constants() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let c22 = bliss_constant(Dim::TWO, 2.0)?;
    checks.push(Check::single(
        Suite::Constants,
        "C_{2,2} = 3/2",
        (c22 - 1.5).abs() < 1e-13,
        format!("{c22}"),
    ));
    let hardy = bliss_constant(Dim::THREE, 1.0)?;
    checks.push(Check::single(
        Suite::Constants,
        "C_{3,1} = (3/2)^3",
        (hardy - 3.375).abs() < 1e-13,
        format!("{hardy}"),
    ));
    for n in [Dim::TWO, Dim::THREE] {
        let lim = bliss_limit(n);
        let gaps: Vec<f64> = (2..=6)
            .map(|p| {
                let k = 10f64.powi(p);
                bliss_constant(n, k).map(|c| (k * c - lim).abs())
            })
            .collect::<Result<_>>()?;
        let ok = gaps[4] <= 1e-2 && gaps.windows(2).all(|g| g[1] < g[0]);
        checks.push(Check::single(
            Suite::Constants,
            &format!("N={n} k·C → C_N monotonically"),
            ok,
            format!("gap at 1e6 {:.3e}", gaps[4]),
        ));
    }
    Ok(checks)
}

pub fn series() -> Result<Vec<Check>> {
    let cfg = QuadConfig::default();
    let mut checks = Vec::new();
    for n in [Dim::TWO, Dim::THREE] {
        for beta in [0.3, 0.6, 0.9] {
            let b = series_bound(n, beta, &SeriesConfig::default())?;
            let r = term_ratio(n, beta, 10_000)?;
            checks.push(Check::single(
                Suite::Series,
                &format!("N={n} β={beta} tail rule and ratio"),
                b.tail_converged && (r - beta).abs() <= 1e-3,
                format!("bound {:.6} after {} terms, ratio {r:.6}", b.value, b.terms),
            ));
            let fs = corpus(n, 100, 1000 + (beta * 10.0) as u64)?;
            let vals = fs
                .par_iter()
                .map(|f| eval_functional(f, &WeightSpec::i_beta(beta), n, &cfg).map(|r| r.value))
                .collect::<Result<Vec<f64>>>()?;
            let bad = vals.iter().filter(|&&v| !(v <= b.value)).count();
            let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            checks.push(Check::new(
                Suite::Series,
                &format!("N={n} β={beta} bound dominates I_β"),
                vals.len(),
                bad,
                format!("largest I_β {top:.6}"),
            ));
        }
    }
    Ok(checks)
}

pub fn gradients() -> Result<Vec<Check>> {
    let cfg = QuadConfig::default()
        .with_rel_tol(1e-13)
        .with_abs_tol(1e-15);
    let weights = [
        WeightSpec::i_beta(0.7),
        WeightSpec::j_gamma(0.5),
        WeightSpec::new(1.0, 1.0, Perturbation::TripleLog),
    ];
    let h = 1e-4;
    let results: Vec<(usize, usize, f64)> = (0..50u64)
        .into_par_iter()
        .map(|i| -> Result<(usize, usize, f64)> {
            let n = DIMS[i as usize % 3];
            let w = weights[i as usize % weights.len()];
            let f = random_monotone(500 + i, 2 + i as usize % 7, n, GridKind::Random)?;
            let g = grad_slopes(&f, &w, n, &cfg)?;
            let value_at = |k: usize, dh: f64| -> Result<f64> {
                let mut sl = f.slopes().to_vec();
                sl[k] += dh;
                Ok(eval_functional(&GridFn::from_slopes(f.xs(), &sl)?, &w, n, &cfg)?.value)
            };
            let mut bad = 0;
            let mut worst: f64 = 0.0;
            for (k, gk) in g.iter().enumerate() {
                // five-point stencil, O(h^4)
                let fd = (8.0 * (value_at(k, h)? - value_at(k, -h)?)
                    - (value_at(k, 2.0 * h)? - value_at(k, -2.0 * h)?))
                    / (12.0 * h);
                let rel = ((gk - fd) / fd).abs();
                worst = worst.max(rel);
                if !(rel <= 1e-5) {
                    bad += 1;
                }
            }
            Ok((f.segments(), bad, worst))
        })
        .collect::<Result<_>>()?;
    let cases = results.iter().map(|r| r.0).sum();
    let bad = results.iter().map(|r| r.1).sum();
    let worst = results.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(vec![Check::new(
        Suite::Gradients,
        "slope gradient vs finite differences",
        cases,
        bad,
        format!("worst relative error {worst:.3e}"),
    )])
}

pub fn trichotomy() -> Result<Vec<Check>> {
    let cfg = QuadConfig::default();
    let js = geometric_schedule(1e2, 1e8, 10.0)?;
    let n = Dim::TWO;
    let run = |w: WeightSpec| sweep(&w, n, &js, &cfg).map(|t| t.values());
    let dec = |v: &[f64]| v.windows(2).all(|p| p[1] < p[0]);
    let inc = |v: &[f64]| v.windows(2).all(|p| p[1] > p[0]);

    let half = run(WeightSpec::j_gamma(0.5))?;
    let crit = run(WeightSpec::j_gamma(1.0))?;
    let sup = run(WeightSpec::j_gamma(1.5))?;
    let i1 = run(WeightSpec::i_beta(1.0))?;
    let pert = run(WeightSpec::j1h())?;

    let mut checks = vec![
        Check::single(
            Suite::Trichotomy,
            "J_0.5(w_j) strictly decreasing",
            dec(&half),
            format!("last {:.6}", half[6]),
        ),
        Check::single(
            Suite::Trichotomy,
            "J_1.5(w_j) strictly increasing",
            inc(&sup),
            format!("last {:.6}", sup[6]),
        ),
        Check::single(
            Suite::Trichotomy,
            "I_1(w_j) strictly decreasing",
            dec(&i1),
            format!("last {:.6}", i1[6]),
        ),
    ];
    // j = 10^3 → 10^6 and 10^4 → 10^8
    let halving = [(i1[4] - 1.0) / (i1[1] - 1.0), (i1[6] - 1.0) / (i1[2] - 1.0)];
    checks.push(Check::single(
        Suite::Trichotomy,
        "I_1 gap halves under j → j²",
        halving.iter().all(|r| (0.35..=0.65).contains(r)),
        format!("ratios {:.4} {:.4}", halving[0], halving[1]),
    ));
    let margins: Vec<f64> = pert.iter().zip(&crit).map(|(a, b)| a - b).collect();
    checks.push(Check::single(
        Suite::Trichotomy,
        "J_{1,h}(w_j) increasing, margin over J_1 grows",
        inc(&pert) && margins[0] > 0.0 && inc(&margins),
        format!("margin {:.4} → {:.4}", margins[0], margins[6]),
    ));
    Ok(checks)
}

pub fn quadrature() -> Result<Vec<Check>> {
    let cfg = QuadConfig::default();
    let mut checks = Vec::new();
    let z = GridFn::zero();
    let worst = [
        WeightSpec::i_beta(1.0),
        WeightSpec::j_gamma(3.0),
        WeightSpec::j1h(),
    ]
    .iter()
    .map(|w| eval_functional(&z, w, Dim::THREE, &cfg).map(|r| (r.value - 1.0).abs()))
    .collect::<Result<Vec<_>>>()?
    .into_iter()
    .fold(0.0, f64::max);
    checks.push(Check::single(
        Suite::Quadrature,
        "functional of zero is 1",
        worst <= 1e-12,
        format!("{worst:.3e}"),
    ));

    let js = geometric_schedule(1e2, 1e8, 10.0)?;
    let mut unconverged = 0;
    let mut disagreement: f64 = 0.0;
    let tight = cfg.with_rel_tol(1e-12).with_abs_tol(1e-15);
    for &j in &js {
        let f = moser_w(j, Dim::TWO)?;
        let a = eval_functional(&f, &WeightSpec::j_gamma(1.0), Dim::TWO, &cfg)?;
        let b = eval_functional(&f, &WeightSpec::j_gamma(1.0), Dim::TWO, &tight)?;
        unconverged += usize::from(!a.converged || !b.converged);
        disagreement = disagreement.max(((a.value - b.value) / b.value).abs());
    }
    checks.push(Check::new(
        Suite::Quadrature,
        "w_j quadrature converges",
        2 * js.len(),
        unconverged,
        String::new(),
    ));
    checks.push(Check::single(
        Suite::Quadrature,
        "refinement changes value by ≤ 1e-8",
        disagreement <= 1e-8,
        format!("{disagreement:.3e}"),
    ));

    let fs = corpus(Dim::TWO, 50, 77)?;
    let mut bad = 0;
    for f in &fs {
        let mut prev = 0.0;
        for beta in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let v = eval_functional(f, &WeightSpec::i_beta(beta), Dim::TWO, &cfg)?.value;
            if v < prev {
                bad += 1;
            }
            prev = v;
        }
    }
    checks.push(Check::new(
        Suite::Quadrature,
        "I_β nondecreasing in β",
        fs.len(),
        bad,
        String::new(),
    ));
    Ok(checks)
}

pub fn exactness() -> Result<Vec<Check>> {
    let cfg = QuadConfig::default();
    let z = GridFn::zero();
    let mut worst: f64 = 0.0;
    for n in DIMS {
        for w in [
            WeightSpec::i_beta(1.0),
            WeightSpec::i_beta(0.5),
            WeightSpec::j_gamma(0.5),
            WeightSpec::j_gamma(2.0),
        ] {
            worst = worst.max((eval_functional(&z, &w, n, &cfg)?.value - 1.0).abs());
        }
    }
    let mut checks = vec![Check::single(
        Suite::Exactness,
        "I_β(0) = J_γ(0) = 1",
        worst <= 1e-12,
        format!("{worst:.3e}"),
    )];
    let mut bad = 0;
    let mut dev: f64 = 0.0;
    for n in DIMS {
        for j in [2.0, 10.0, 1e4] {
            let f = moser_w(j, n)?;
            let m = f.max_ratio(n);
            let d = [
                (f.energy(n) - 1.0).abs(),
                (m.max_value - 1.0).abs(),
                (m.a * j - 1.0).abs(),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            dev = dev.max(d);
            if d > 1e-14 {
                bad += 1;
            }
        }
    }
    checks.push(Check::new(
        Suite::Exactness,
        "w_j: energy 1, ratio max 1 at 1/j",
        9,
        bad,
        format!("largest deviation {dev:.3e}"),
    ));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH.iter().chain([Suite::All].iter()) {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), *s);
        }
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn corpus_is_in_e_n() {
        for n in DIMS {
            for f in corpus(n, 30, 5).unwrap() {
                assert!((f.energy(n) - 1.0).abs() < 1e-14);
                assert!(f.is_monotone());
            }
        }
    }

    #[test]
    fn quick_suites_pass() {
        for s in [Suite::Constants, Suite::Exactness, Suite::Bound] {
            let r = run(s).unwrap();
            assert!(r.passed(), "{}", r.table());
        }
    }
}
