//! The functionals `I_β`, `J_γ`, `J_{1,h}` and the closed-form comparison
//! values used along the infinitesimal Moser sequence.

use crate::error::{Error, Result};
use crate::gridfn::{Dim, GridFn};
use crate::quad::{integrate_exp, integrate_exp_with_grad, QuadConfig, QuadResult};
use crate::weights::WeightSpec;

/// Evaluates `∫₀¹ exp(W(s) |v|^N / s^(N-1)) ds` for the given weight.
pub fn eval_functional(f: &GridFn, w: &WeightSpec, n: Dim, cfg: &QuadConfig) -> Result<QuadResult> {
    integrate_exp(f, w, n, cfg)
}

/// Derivative of the functional with respect to each segment slope, with
/// node abscissas held fixed.
pub fn grad_slopes(f: &GridFn, w: &WeightSpec, n: Dim, cfg: &QuadConfig) -> Result<Vec<f64>> {
    integrate_exp_with_grad(f, w, n, cfg).map(|(_, g)| g)
}

/// Value and gradient from a single adaptive pass.
pub fn eval_with_grad(
    f: &GridFn,
    w: &WeightSpec,
    n: Dim,
    cfg: &QuadConfig,
) -> Result<(QuadResult, Vec<f64>)> {
    integrate_exp_with_grad(f, w, n, cfg)
}

/// Lower bound for `I_{1+δ}(w_j)`, valid for every `N ≥ 2`:
/// `e^{1+δ}/(1+δ) · j^δ / log(je) - 1 / (j (1+δ) log(je))`.
pub fn supercritical_lower_bound(j: f64, delta: f64) -> Result<f64> {
    if !(j >= 1.0) || !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need j ≥ 1 and δ > 0, got j={j} δ={delta}"
        )));
    }
    let b = 1.0 + delta;
    let l = j.ln() + 1.0;
    Ok(b.exp() / b * j.powf(delta) / l - 1.0 / (j * b * l))
}

/// Divergence rate `e · (log(ej))^(γ-1)` of `J_γ(w_j)` for `γ > 1`.
pub fn gamma_growth_model(gamma: f64, j: f64) -> Result<f64> {
    if !(gamma > 1.0) || !(j >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need γ > 1 and j ≥ 1, got γ={gamma} j={j}"
        )));
    }
    Ok(std::f64::consts::E * (j.ln() + 1.0).powf(gamma - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::{random_monotone, GridKind};
    use std::f64::consts::E;

    #[test]
    fn supercritical_bound_small_delta_limit() {
        let v = supercritical_lower_bound(1.0, 1e-12).unwrap();
        assert!((v - (E - 1.0)).abs() < 1e-10);
        assert!(supercritical_lower_bound(0.5, 0.1).is_err());
        assert!(supercritical_lower_bound(10.0, 0.0).is_err());
    }

    #[test]
    fn supercritical_bound_growth() {
        let a = supercritical_lower_bound(1e2, 0.2).unwrap();
        let b = supercritical_lower_bound(1e4, 0.2).unwrap();
        assert!(b > a);
        // leading term ratio (10^2)^0.2 · log(100e)/log(10^4 e)
        let lead = 100f64.powf(0.2) * (1.0 + 100f64.ln()) / (1.0 + 1e4f64.ln());
        assert!(((b / a) - lead).abs() / lead < 1e-2);
    }

    #[test]
    fn growth_model() {
        assert!((gamma_growth_model(2.0, 1.0).unwrap() - E).abs() < 1e-15);
        let a = gamma_growth_model(1.5, 1e3).unwrap();
        let b = gamma_growth_model(1.5, 1e4).unwrap();
        assert!(b > a);
        assert!(gamma_growth_model(1.0, 10.0).is_err());
    }

    #[test]
    fn zero_function_gradient_vanishes() {
        let z = GridFn::new(&[(0.0, 0.0), (0.5, 0.0), (1.0, 0.0)]).unwrap();
        let g = grad_slopes(
            &z,
            &WeightSpec::i_beta(0.7),
            Dim::THREE,
            &QuadConfig::default(),
        )
        .unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn monotone_gradient_is_nonnegative() {
        for seed in 0..10 {
            let f = random_monotone(seed, 8, Dim::TWO, GridKind::Random).unwrap();
            let g = grad_slopes(
                &f,
                &WeightSpec::i_beta(0.5),
                Dim::TWO,
                &QuadConfig::default(),
            )
            .unwrap();
            assert!(g.iter().all(|&c| c >= 0.0), "{g:?}");
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let cfg = QuadConfig::default()
            .with_rel_tol(1e-13)
            .with_abs_tol(1e-15);
        let w = WeightSpec::i_beta(0.5);
        let f = random_monotone(11, 6, Dim::TWO, GridKind::Random).unwrap();
        let g = grad_slopes(&f, &w, Dim::TWO, &cfg).unwrap();
        let h = 1e-6;
        for i in 0..f.segments() {
            let mut up = f.slopes().to_vec();
            let mut dn = f.slopes().to_vec();
            up[i] += h;
            dn[i] -= h;
            let fu = GridFn::from_slopes(f.xs(), &up).unwrap();
            let fd = GridFn::from_slopes(f.xs(), &dn).unwrap();
            let vu = eval_functional(&fu, &w, Dim::TWO, &cfg).unwrap().value;
            let vd = eval_functional(&fd, &w, Dim::TWO, &cfg).unwrap().value;
            let fdg = (vu - vd) / (2.0 * h);
            assert!(
                ((g[i] - fdg) / fdg).abs() < 1e-5,
                "component {i}: {} vs {fdg}",
                g[i]
            );
        }
    }
}
