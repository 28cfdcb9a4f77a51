//! Dedekind eta, Eisenstein series of the lattice `Z + τZ`, the Weierstrass
//! invariants and the discriminant.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::report::VerificationReport;
use crate::summation::ComplexSum;

const ETA_MAX_FACTORS: usize = 1_000_000;
const DEFAULT_PRECISION: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus {
    pub tau: Complex64,
    pub precision_target: f64,
}

impl Modulus {
    pub fn new(tau: Complex64, precision_target: f64) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.re.is_finite() || !tau.im.is_finite() {
            return Err(Error::domain(format!("tau = {tau} is not in the upper half-plane")));
        }
        if !(precision_target > 0.0) {
            return Err(Error::domain("precision target must be positive"));
        }
        Ok(Modulus { tau, precision_target })
    }

    pub fn from_tau(tau: Complex64) -> Result<Self> {
        Self::new(tau, DEFAULT_PRECISION)
    }

    fn nome(&self) -> Complex64 {
        (Complex64::new(0.0, 2.0 * PI) * self.tau).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularValues {
    pub eta: Complex64,
    /// Weight-4 lattice sum `Σ′ ω⁻⁴`.
    pub eis2: Complex64,
    /// Weight-6 lattice sum `Σ′ ω⁻⁶`.
    pub eis3: Complex64,
    pub g2: Complex64,
    pub g3: Complex64,
    pub discriminant: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    pub error_bound: f64,
}

/// `η(τ) = q^{1/24} ∏ (1 − qᵏ)` with the root taken as `exp(2πiτ/24)`.
pub fn dedekind_eta(m: &Modulus) -> Result<Complex64> {
    Ok(dedekind_eta_bounded(m)?.value)
}

/// Eta together with a bound on the truncation error of the product.
pub fn dedekind_eta_bounded(m: &Modulus) -> Result<SeriesValue> {
    let q = m.nome();
    let r = q.norm();
    let prefactor = (Complex64::new(0.0, 2.0 * PI / 24.0) * m.tau).exp();
    let mut prod = Complex64::new(1.0, 0.0);
    let mut qk = Complex64::new(1.0, 0.0);
    let mut rk = 1.0;
    for _ in 1..=ETA_MAX_FACTORS {
        qk *= q;
        rk *= r;
        prod *= Complex64::new(1.0, 0.0) - qk;
        // remaining factors change the product by at most ~ r^{k+1}/(1-r)
        let tail = rk * r / (1.0 - r);
        if tail < m.precision_target / 10.0 {
            let value = prefactor * prod;
            let bound = value.norm() * 2.0 * tail + 4.0 * f64::EPSILON * value.norm();
            return Ok(SeriesValue { value, error_bound: bound });
        }
    }
    Err(Error::Convergence {
        what: format!("eta product at tau = {}", m.tau),
        iterations: ETA_MAX_FACTORS,
    })
}

/// Smallest `|x + yτ|` over `max(|x|, |y|) = 1`, so `|m + nτ| ≥ c·max(|m|, |n|)`.
fn sup_norm_constant(tau: Complex64) -> f64 {
    let t2 = tau.norm_sqr();
    // edges y = ±1: |x + τ| minimized over x ∈ [-1, 1]
    let x = (-tau.re).clamp(-1.0, 1.0);
    let e1 = (Complex64::new(x, 0.0) + tau).norm();
    // edges x = ±1: |1 + yτ| minimized over y ∈ [-1, 1]
    let y = (-tau.re / t2).clamp(-1.0, 1.0);
    let e2 = (Complex64::new(1.0, 0.0) + tau * y).norm();
    e1.min(e2)
}

/// Direct lattice sum `G_k(τ) = Σ′ (m + nτ)^{−2k}` over the shells
/// `max(|m|, |n|) ≤ cutoff`, with an integral-comparison tail bound.
pub fn eisenstein_series(k: u32, m: &Modulus, cutoff: u32) -> Result<SeriesValue> {
    if k < 2 {
        return Err(Error::domain(format!("Eisenstein index k = {k} < 2 is not absolutely convergent")));
    }
    if cutoff == 0 {
        return Err(Error::domain("cutoff must be positive"));
    }
    let tau = m.tau;
    let w = -2 * k as i32;
    let mut acc = ComplexSum::new();
    for r in 1..=cutoff as i64 {
        // lexicographic walk over the shell
        for a in -r..=r {
            if a.abs() == r {
                for b in -r..=r {
                    acc.add((Complex64::new(a as f64, 0.0) + tau * b as f64).powi(w));
                }
            } else {
                for b in [-r, r] {
                    acc.add((Complex64::new(a as f64, 0.0) + tau * b as f64).powi(w));
                }
            }
        }
    }
    let cst = sup_norm_constant(tau);
    let kk = 2.0 * k as f64;
    let tail = 8.0 * cst.powf(-kk) * (cutoff as f64).powf(2.0 - kk) / (kk - 2.0);
    let value = acc.value();
    Ok(SeriesValue { value, error_bound: tail + 1e-15 * value.norm() })
}

/// Smallest shell cutoff whose tail bound is below `target`.
pub fn eisenstein_cutoff(k: u32, m: &Modulus, target: f64) -> u32 {
    let cst = sup_norm_constant(m.tau);
    let kk = 2.0 * k as f64;
    let r = (8.0 * cst.powf(-kk) / ((kk - 2.0) * target)).powf(1.0 / (kk - 2.0));
    r.ceil().clamp(1.0, u32::MAX as f64) as u32
}

fn riemann_zeta_even(k: u32) -> f64 {
    match k {
        2 => PI.powi(4) / 90.0,
        3 => PI.powi(6) / 945.0,
        _ => unreachable!("only weights 4 and 6 are needed"),
    }
}

/// `Σ′ ω^{−2k}` from the q-expansion
/// `2ζ(2k) + 2(2πi)^{2k}/(2k−1)! · Σ σ_{2k−1}(m) qᵐ` (Lambert form).
fn eisenstein_q_series(k: u32, m: &Modulus) -> Result<Complex64> {
    let q = m.nome();
    let r = q.norm();
    let p = 2 * k - 1;
    let mut acc = ComplexSum::new();
    let mut qd = Complex64::new(1.0, 0.0);
    for d in 1..=ETA_MAX_FACTORS {
        qd *= q;
        let df = d as f64;
        let term = qd / (Complex64::new(1.0, 0.0) - qd) * df.powi(p as i32);
        acc.add(term);
        let rd = qd.norm();
        if df.powi(p as i32) * rd / ((1.0 - r) * (1.0 - r)) < 1e-18 * acc.value().norm().max(1e-300)
            || rd == 0.0
        {
            let fact: f64 = (1..=p).map(|i| i as f64).product();
            let pre = 2.0 * (2.0 * PI).powi(2 * k as i32) / fact * if k % 2 == 0 { 1.0 } else { -1.0 };
            return Ok(2.0 * riemann_zeta_even(k) + acc.value() * pre);
        }
    }
    Err(Error::Convergence {
        what: format!("Lambert series at tau = {}", m.tau),
        iterations: ETA_MAX_FACTORS,
    })
}

/// Weierstrass invariants and `Δ = g₂³ − 27 g₃²` for the lattice `Z + τZ`.
///
/// The lattice sums come from their q-expansions; the direct shell sum in
/// [`eisenstein_series`] converges too slowly for double-precision targets.
pub fn weierstrass_discriminant(m: &Modulus) -> Result<ModularValues> {
    let eta = dedekind_eta(m)?;
    let eis2 = eisenstein_q_series(2, m)?;
    let eis3 = eisenstein_q_series(3, m)?;
    let g2 = eis2 * 60.0;
    let g3 = eis3 * 140.0;
    let discriminant = g2 * g2 * g2 - g3 * g3 * 27.0;
    Ok(ModularValues { eta, eis2, eis3, g2, g3, discriminant })
}

/// Residuals of `Δ = (2π)¹² η²⁴` and of the T and S transformation laws of eta.
pub fn modular_identity_residuals(m: &Modulus) -> Result<Vec<VerificationReport>> {
    let tol = 1e-10;
    let tau = m.tau;
    let inputs = format!("tau={}", fmt_complex(tau));
    let vals = weierstrass_discriminant(m)?;
    let eta = vals.eta;
    let predicted = eta.powi(24) * (2.0 * PI).powi(12);
    let r_disc = (vals.discriminant / predicted - 1.0).norm();

    let shifted = Modulus::new(tau + 1.0, m.precision_target)?;
    let eta_t = dedekind_eta(&shifted)?;
    let r_t = (eta_t * Complex64::new(0.0, -PI / 12.0).exp() / eta - 1.0).norm();

    let inv = Modulus::new(-Complex64::new(1.0, 0.0) / tau, m.precision_target)?;
    let eta_s = dedekind_eta(&inv)?;
    let root = (Complex64::new(0.0, -1.0) * tau).sqrt();
    let r_s = (eta_s / (root * eta) - 1.0).norm();

    Ok(vec![
        VerificationReport::new("modular.discriminant_eta24", inputs.clone(), r_disc, tol),
        VerificationReport::new("modular.eta_t_transform", inputs.clone(), r_t, tol),
        VerificationReport::new("modular.eta_s_transform", inputs, r_s, tol),
    ])
}

/// `a+bi` rendering used in report inputs.
pub fn fmt_complex(z: Complex64) -> String {
    if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn md(re: f64, im: f64) -> Modulus {
        Modulus::from_tau(Complex64::new(re, im)).unwrap()
    }

    #[test]
    fn eta_at_i() {
        let e = dedekind_eta(&md(0.0, 1.0)).unwrap();
        assert!((e.re - 0.768_225_422_326_057).abs() < 1e-12);
        assert!(e.im.abs() < 1e-15);
    }

    #[test]
    fn eta_t_shift_at_i() {
        let e = dedekind_eta(&md(0.0, 1.0)).unwrap();
        let et = dedekind_eta(&md(1.0, 1.0)).unwrap() * Complex64::new(0.0, -PI / 12.0).exp();
        assert!((e - et).norm() < 1e-13);
    }

    #[test]
    fn eta_at_2i_from_functional_equation() {
        let e1 = dedekind_eta(&md(0.0, 1.0)).unwrap();
        let e2 = dedekind_eta(&md(0.0, 2.0)).unwrap();
        assert!((e2.re - e1.re * 2f64.powf(-3.0 / 8.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(Modulus::from_tau(Complex64::new(0.0, -1.0)).is_err());
        assert!(Modulus::new(Complex64::new(0.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn eisenstein_symmetry_zeros() {
        let g3 = eisenstein_series(3, &md(0.0, 1.0), 60).unwrap();
        assert!(g3.value.norm() < 1e-12);
        // sup-norm shells are not invariant under the hexagonal rotation, so
        // the truncated direct sum only vanishes within its tail bound
        let rho = Complex64::new(0.0, 2.0 * PI / 3.0).exp();
        let m = Modulus::from_tau(rho).unwrap();
        let g2 = eisenstein_series(2, &m, 60).unwrap();
        assert!(g2.value.norm() <= g2.error_bound);
        assert!(weierstrass_discriminant(&m).unwrap().eis2.norm() < 1e-12);
        assert!(eisenstein_series(1, &md(0.0, 1.0), 10).is_err());
    }

    #[test]
    fn eisenstein_weight_four_at_i() {
        let m = md(0.0, 1.0);
        let cutoff = eisenstein_cutoff(2, &m, 1e-5);
        let g = eisenstein_series(2, &m, cutoff).unwrap();
        assert!(g.error_bound <= 1.0001e-5);
        assert!((g.value.re - 3.15121).abs() < 1e-5);
        // q-series agrees with the direct sum within its bound
        let q = eisenstein_q_series(2, &m).unwrap();
        assert!((q - g.value).norm() <= g.error_bound);
    }

    #[test]
    fn discriminant_at_i() {
        let v = weierstrass_discriminant(&md(0.0, 1.0)).unwrap();
        assert!(v.g3.norm() < 1e-10);
        assert!((v.discriminant - v.g2.powi(3)).norm() <= 1e-10 * v.discriminant.norm());
        let pred = v.eta.powi(24) * (2.0 * PI).powi(12);
        assert!(((v.discriminant - pred) / pred).norm() < 1e-6);
        assert!((v.discriminant.re - 6.76e6).abs() / 6.76e6 < 1e-2);
        assert_eq!(v.g2, v.eis2 * 60.0);
        assert_eq!(v.g3, v.eis3 * 140.0);
    }

    #[test]
    fn discriminant_matches_eta_product_off_axis() {
        let v = weierstrass_discriminant(&md(0.3, 0.9)).unwrap();
        let pred = v.eta.powi(24) * (2.0 * PI).powi(12);
        assert!(((v.discriminant - pred) / pred).norm() < 1e-10);
    }

    #[test]
    fn identity_residuals() {
        for r in modular_identity_residuals(&md(0.0, 1.0)).unwrap() {
            assert!(r.passed(), "{r:?}");
        }
        let s = &modular_identity_residuals(&md(0.0, 1.0)).unwrap()[2];
        assert!(s.residual < 1e-14);
        for r in modular_identity_residuals(&md(0.1, 2.5)).unwrap() {
            assert!(r.residual < 1e-11, "{r:?}");
        }
    }

    #[test]
    fn complex_formatting() {
        assert_eq!(fmt_complex(Complex64::new(0.0, 1.0)), "0+1i");
        assert_eq!(fmt_complex(Complex64::new(0.3, -1.2)), "0.3-1.2i");
    }
}
