//! Exponent weights `W(s) = β·log(e/s) + γ·log log(e/s) + h(1/s)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Catalogued perturbations `h(1/s)` of the exponent weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    #[default]
    None,
    /// `h(1/s) = log log log(e^e / s)`.
    TripleLog,
}

impl FromStr for Perturbation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Perturbation::None),
            "triple_log" => Ok(Perturbation::TripleLog),
            other => Err(Error::Parse(format!("unknown perturbation `{other}`"))),
        }
    }
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Perturbation::None => "none",
            Perturbation::TripleLog => "triple_log",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub beta: f64,
    pub gamma: f64,
    #[serde(default)]
    pub perturbation: Perturbation,
}

impl WeightSpec {
    pub fn new(beta: f64, gamma: f64, perturbation: Perturbation) -> Self {
        WeightSpec {
            beta,
            gamma,
            perturbation,
        }
    }

    /// `I_β`: weight `β·log(e/s)`.
    pub fn i_beta(beta: f64) -> Self {
        WeightSpec::new(beta, 0.0, Perturbation::None)
    }

    /// `J_γ`: weight `log(e/s) + γ·log log(e/s)`.
    pub fn j_gamma(gamma: f64) -> Self {
        WeightSpec::new(1.0, gamma, Perturbation::None)
    }

    /// `J_{1,h}` with the triple-log perturbation.
    pub fn j1h() -> Self {
        WeightSpec::new(1.0, 1.0, Perturbation::TripleLog)
    }

    pub fn is_zero(&self) -> bool {
        self.beta == 0.0 && self.gamma == 0.0 && self.perturbation == Perturbation::None
    }

    /// `W(s)` for `0 < s ≤ 1`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::OutOfDomain(s));
        }
        Ok(self.eval_unchecked(s))
    }

    /// `W(s)` without the domain check; `-ln s` is formed once and every
    /// nested logarithm goes through `ln_1p` to stay accurate near `s = 1`.
    #[inline]
    pub(crate) fn eval_unchecked(&self, s: f64) -> f64 {
        let t = -s.ln(); // ≥ 0
        let mut w = self.beta * (1.0 + t);
        if self.gamma != 0.0 {
            w += self.gamma * t.ln_1p();
        }
        if self.perturbation == Perturbation::TripleLog {
            // log(e^e/s) = e (1 + t/e); log of that = 1 + ln_1p(t/e)
            w += (t / std::f64::consts::E).ln_1p().ln_1p();
        }
        w
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "beta={} gamma={} perturb={}",
            self.beta, self.gamma, self.perturbation
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    /// Literal nested-log evaluation used as an oracle.
    fn naive(w: &WeightSpec, s: f64) -> f64 {
        let mut v = w.beta * (E / s).ln() + w.gamma * (E / s).ln().ln();
        if w.perturbation == Perturbation::TripleLog {
            v += (E.powf(E) / s).ln().ln().ln();
        }
        v
    }

    #[test]
    fn values_at_one() {
        assert_eq!(WeightSpec::i_beta(1.0).eval(1.0).unwrap(), 1.0);
        assert_eq!(WeightSpec::j1h().eval(1.0).unwrap(), 1.0);
        assert_eq!(
            WeightSpec::new(2.5, -3.0, Perturbation::TripleLog)
                .eval(1.0)
                .unwrap(),
            2.5
        );
    }

    #[test]
    fn double_log_point() {
        let s = (1.0 - E).exp();
        let w = WeightSpec::new(1.0, 1.0, Perturbation::None)
            .eval(s)
            .unwrap();
        assert!((w - (E + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn triple_log_point_matches_direct_evaluation() {
        let s = (1.0 - E.powf(E)).exp();
        let w = WeightSpec::j1h().eval(s).unwrap();
        let want = naive(&WeightSpec::j1h(), s);
        assert!((w - want).abs() < 1e-12, "{w} vs {want}");
        // log(e/s) = e^e and log log(e/s) = e exactly; h is log log(e^e + e - 1)
        let h = (E.powf(E) + E - 1.0).ln().ln();
        assert!((w - (E.powf(E) + E + h)).abs() < 1e-12);
    }

    #[test]
    fn matches_naive_on_grid() {
        let specs = [
            WeightSpec::i_beta(0.7),
            WeightSpec::j_gamma(1.3),
            WeightSpec::j1h(),
        ];
        for w in specs {
            for k in 1..200 {
                let s = (k as f64 / 200.0).powi(3);
                assert!((w.eval(s).unwrap() - naive(&w, s)).abs() < 1e-12 * (1.0 + naive(&w, s)));
            }
        }
    }

    #[test]
    fn gamma_zero_is_i_one() {
        let a = WeightSpec::j_gamma(0.0);
        let b = WeightSpec::i_beta(1.0);
        for k in 1..=10_000 {
            let s = k as f64 / 10_000.0;
            assert_eq!(a.eval(s).unwrap(), b.eval(s).unwrap());
        }
    }

    #[test]
    fn strictly_decreasing() {
        for w in [
            WeightSpec::i_beta(0.3),
            WeightSpec::j_gamma(2.0),
            WeightSpec::j1h(),
        ] {
            let mut prev = f64::INFINITY;
            for k in 1..=1000 {
                let s = k as f64 / 1000.0;
                let v = w.eval(s).unwrap();
                assert!(v < prev);
                prev = v;
            }
        }
    }

    #[test]
    fn triple_log_is_admissible() {
        // h(1/s) / log log(e/s) → 0 as s → 0
        let with_h = WeightSpec::j1h();
        let without = WeightSpec::j_gamma(1.0);
        let loglog = WeightSpec::new(0.0, 1.0, Perturbation::None);
        let ratios: Vec<f64> = [1e-3, 1e-6, 1e-12]
            .iter()
            .map(|&s| {
                let h = with_h.eval(s).unwrap() - without.eval(s).unwrap();
                h / loglog.eval(s).unwrap()
            })
            .collect();
        assert!(ratios.windows(2).all(|p| p[1] < p[0]), "{ratios:?}");
    }

    #[test]
    fn domain_errors() {
        let w = WeightSpec::i_beta(1.0);
        assert!(w.eval(0.0).is_err());
        assert!(w.eval(1.0 + 1e-12).is_err());
        assert!(w.eval(f64::NAN).is_err());
    }

    #[test]
    fn parse_perturbation() {
        assert_eq!(
            "triple_log".parse::<Perturbation>().unwrap(),
            Perturbation::TripleLog
        );
        assert!("cubic".parse::<Perturbation>().is_err());
    }
}
