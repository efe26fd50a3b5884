//! Gamma-function constants: log-Gamma, harmonic numbers, the Bliss
//! embedding constants `C_{N,k}`, their limit `C_N = lim k·C_{N,k}` and the
//! Carleson–Chang energy threshold.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gridfn::Dim;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of `Γ(x)` for `x > 0` (Lanczos, g = 7, nine terms; reflection
/// below 1/2).
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "log_gamma needs x > 0, got {x}"
        )));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x)Γ(1-x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma_pos(1.0 - x);
    }
    let z = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = z + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// `H_n = Σ_{i=1..n} 1/i`.
pub fn harmonic(n: u32) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}

/// `log C_{N,k}`.
///
/// For `k > 1` with `m = k - 1` the Gamma quotient is rewritten as
/// `Π_{i=1}^{N-1} (1 + 1/(i·m + N - 1)) · Γ(1+N/m) / (Γ(1+1/m) Γ(1+(N-1)/m))`
/// and raised to the power `m`; every factor stays near 1 for large `k`,
/// so nothing of size `Γ(Nk/(k-1))` is ever formed.
pub fn log_bliss_constant(n: Dim, k: f64) -> Result<f64> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Bliss exponent k must be ≥ 1, got {k}"
        )));
    }
    let nf = n.as_f64();
    if k == 1.0 {
        // sharp Hardy constant (N/(N-1))^N
        return Ok(nf * (nf / (nf - 1.0)).ln());
    }
    let m = k - 1.0;
    let prod: f64 = (1..n.get())
        .map(|i| (1.0 / (i as f64 * m + nf - 1.0)).ln_1p())
        .sum();
    let gam = ln_gamma_pos(1.0 + nf / m)
        - ln_gamma_pos(1.0 + 1.0 / m)
        - ln_gamma_pos(1.0 + (nf - 1.0) / m);
    let log_c = m * (prod + gam) - ((nf - 1.0) * k).ln();
    if !log_c.is_finite() {
        return Err(Error::Overflow(format!("log C_{{{n},{k}}} = {log_c}")));
    }
    Ok(log_c)
}

/// Bliss constant `C_{N,k}`; `k = 1` is the sharp Hardy constant.
pub fn bliss_constant(n: Dim, k: f64) -> Result<f64> {
    let log_c = log_bliss_constant(n, k)?;
    if log_c > f64::MAX.ln() {
        return Err(Error::Overflow(format!("C_{{{n},{k}}} = exp({log_c})")));
    }
    Ok(log_c.exp())
}

/// `C_N = e^{H_{N-1}} / (N - 1)`.
pub fn bliss_limit(n: Dim) -> f64 {
    harmonic(n.get() - 1).exp() / (n.as_f64() - 1.0)
}

/// `1 + e^{H_{N-1}}`.
pub fn carleson_chang_threshold(n: Dim) -> f64 {
    1.0 + harmonic(n.get() - 1).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlissConstantRow {
    pub n: u32,
    pub k: f64,
    pub c_value: f64,
    pub k_times_c: f64,
    pub limit: f64,
}

pub fn bliss_row(n: Dim, k: f64) -> Result<BlissConstantRow> {
    let c_value = bliss_constant(n, k)?;
    Ok(BlissConstantRow {
        n: n.get(),
        k,
        c_value,
        k_times_c: k * c_value,
        limit: bliss_limit(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Values from a 30-digit reference evaluation.
    #[allow(clippy::excessive_precision)]
    const REFERENCE: [(f64, f64); 10] = [
        (0.001, 6.907_178_885_383_853_682_5),
        (0.1, 2.252_712_651_734_205_959_9),
        (0.5, 0.572_364_942_924_700_087_07),
        (1.5, -0.120_782_237_635_245_222_35),
        (2.5, 0.284_682_870_472_919_159_63),
        (3.7, 1.428_072_326_665_387_921_9),
        (10.0, 12.801_827_480_081_469_611),
        (100.5, 361.435_540_467_777_621_56),
        (1e6, 12_815_504.569_147_611_66),
        (1e12, 26_631_021_115_915.651_636),
    ];

    #[test]
    fn log_gamma_reference_values() {
        for (x, want) in REFERENCE {
            let got = log_gamma(x).unwrap();
            assert!(rel(got, want) <= 1e-13, "x={x}: {got} vs {want}");
        }
        assert!(log_gamma(1.0).unwrap().abs() < 1e-15);
        assert!((log_gamma(4.0).unwrap() - 6f64.ln()).abs() < 1e-14);
        assert!((log_gamma(0.5).unwrap() - PI.sqrt().ln()).abs() < 1e-15);
    }

    #[test]
    fn log_gamma_rejects_nonpositive() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic(0), 0.0);
        assert_eq!(harmonic(1), 1.0);
        assert!((harmonic(4) - 25.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn bliss_small_cases() {
        assert!((bliss_constant(Dim::TWO, 2.0).unwrap() - 1.5).abs() < 1e-13);
        assert!((bliss_constant(Dim::TWO, 1.0).unwrap() - 4.0).abs() < 1e-14);
        assert!((bliss_constant(Dim::THREE, 1.0).unwrap() - 3.375).abs() < 1e-14);
        assert!(bliss_constant(Dim::TWO, 0.5).is_err());
    }

    /// Literal Gamma-quotient form of `log C_{N,k}`, a second route to the
    /// rearranged product used by the implementation.
    fn direct_log_c(n: f64, k: f64) -> f64 {
        let lg = |x: f64| log_gamma(x).unwrap();
        -((n - 1.0) * k).ln()
            + (k - 1.0)
                * ((k - 1.0).ln() + lg(n * k / (k - 1.0))
                    - lg(1.0 / (k - 1.0))
                    - lg((n * k - 1.0) / (k - 1.0)))
    }

    #[test]
    fn rearranged_form_matches_direct_form() {
        for n in 2..=6u32 {
            for &k in &[1.01, 1.5, 2.0, 3.0, 7.5, 20.0, 100.0] {
                let a = log_bliss_constant(Dim::new(n).unwrap(), k).unwrap();
                let b = direct_log_c(n as f64, k);
                assert!(
                    (a - b).abs() < 1e-10 * (1.0 + b.abs()),
                    "N={n} k={k}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn limits_and_threshold() {
        assert!((bliss_limit(Dim::TWO) - E).abs() < 1e-15);
        assert!((bliss_limit(Dim::THREE) - 1.5f64.exp() / 2.0).abs() < 1e-15);
        assert!((carleson_chang_threshold(Dim::TWO) - (1.0 + E)).abs() < 1e-15);
        assert!((carleson_chang_threshold(Dim::THREE) - (1.0 + 1.5f64.exp())).abs() < 1e-15);
        for n in 2..=10 {
            let d = Dim::new(n).unwrap();
            let lhs = carleson_chang_threshold(d);
            let rhs = 1.0 + (n as f64 - 1.0) * bliss_limit(d);
            assert!(rel(lhs, rhs) < 1e-15);
        }
    }

    #[test]
    fn k_times_c_approaches_limit() {
        for n in [Dim::TWO, Dim::THREE, Dim::FOUR] {
            let lim = bliss_limit(n);
            let gaps: Vec<f64> = (2..=6)
                .map(|p| {
                    let k = 10f64.powi(p);
                    (k * bliss_constant(n, k).unwrap() - lim).abs()
                })
                .collect();
            assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
            assert!(gaps[4] <= 1e-2);
        }
        let k = 1e6;
        assert!((k * bliss_constant(Dim::TWO, k).unwrap() - E).abs() < 1e-2);
    }

    #[test]
    fn finite_everywhere_on_tested_range() {
        for n in 2..=10 {
            let d = Dim::new(n).unwrap();
            for p in 0..=9 {
                for &mant in &[1.0, 2.5, 7.0] {
                    let k = mant * 10f64.powi(p);
                    let c = bliss_constant(d, k).unwrap();
                    assert!(c.is_finite() && c > 0.0, "N={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn row_fields() {
        let r = bliss_row(Dim::TWO, 2.0).unwrap();
        assert_eq!(r.k_times_c, 2.0 * r.c_value);
        assert_eq!(r.limit, E);
    }
}
