//! Epstein zeta functions `Z(s) = Σ′ (vᵀAv)^{−s}` continued to the whole
//! plane by Ewald splitting into incomplete-gamma sums over the lattice and
//! its dual.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::{GramLattice, DEFAULT_BUDGET};
use crate::linalg::RMat;
use crate::modular::{dedekind_eta, fmt_complex, Modulus};
use crate::report::VerificationReport;
use crate::special::{gamma_real, gamma_upper, gamma_upper_real, exp_integral_e1, rgamma, EULER_GAMMA};
use crate::summation::{ComplexSum, NeumaierSum};

/// Evaluations closer than this to `d/2` are rejected.
pub const POLE_RADIUS: f64 = 1e-6;
const TAIL_TARGET: f64 = 1e-18;
const MAX_CUTOFF: f64 = 400.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaValue {
    pub s: Complex64,
    pub value: Complex64,
    pub error_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwaldOptions {
    /// Splitting parameter; `None` means `π·det^{−1/d}`.
    pub alpha: Option<f64>,
    pub budget: usize,
}

impl Default for EwaldOptions {
    fn default() -> Self {
        EwaldOptions { alpha: None, budget: DEFAULT_BUDGET }
    }
}

fn default_alpha(l: &GramLattice) -> f64 {
    PI * l.det_gram().powf(-1.0 / l.rank() as f64)
}

fn resolve_alpha(l: &GramLattice, opts: &EwaldOptions) -> Result<f64> {
    match opts.alpha {
        None => Ok(default_alpha(l)),
        Some(a) if a > 0.0 && a.is_finite() => Ok(a),
        Some(a) => Err(Error::domain(format!("splitting parameter {a} must be positive"))),
    }
}

fn unit_ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma_real(d as f64 / 2.0 + 1.0)
}

/// Cutoffs `X` for the direct (`αQ ≤ X`) and dual (`π²Q*/α ≤ X`) sums.
///
/// Both sums have terms of size about `scale·x⁻¹e^{−x}` at argument `x`
/// and roughly `c·x^{d/2}` points below `x`, which gives the tail estimate.
struct Cutoffs {
    direct: f64,
    dual: f64,
    tail: f64,
}

fn choose_cutoffs(l: &GramLattice, alpha: f64, s: Complex64) -> Result<Cutoffs> {
    let d = l.rank() as f64;
    let det = l.det_gram();
    let vd = unit_ball_volume(l.rank());
    let sig = s.re;
    let c_dir = vd / (alpha.powf(d / 2.0) * det.sqrt());
    let c_dual = vd * (alpha / (PI * PI)).powf(d / 2.0) * det.sqrt();
    let scale_dir = (alpha / PI).powf(sig);
    let scale_dual = det.powf(-0.5) * (alpha / PI).powf(sig - d / 2.0);
    let est = |c: f64, scale: f64, x: f64| c * d * (x + s.norm() + d).powf(d / 2.0) * (-x).exp() * scale.max(1e-300);
    let pick = |c: f64, scale: f64| -> Result<(f64, f64)> {
        let mut x = 25.0;
        while est(c, scale, x) > TAIL_TARGET {
            x += 1.0;
            if x > MAX_CUTOFF {
                return Err(Error::Truncation(format!(
                    "Gaussian tail bound cannot reach {TAIL_TARGET:e} for s = {s}"
                )));
            }
        }
        Ok((x, est(c, scale, x)))
    };
    let (direct, t1) = pick(c_dir, scale_dir)?;
    let (dual, t2) = pick(c_dual, scale_dual)?;
    Ok(Cutoffs { direct, dual, tail: t1 + t2 })
}

pub fn epstein_zeta(l: &GramLattice, s: Complex64) -> Result<ZetaValue> {
    epstein_zeta_with(l, s, &EwaldOptions::default())
}

/// Ewald representation with `t₀ = α/π`:
/// `Z(s) = π^s (S₁ + S₂ + B)/Γ(s) − α^s/Γ(s+1)` where
/// `S₁ = Σ′ (πQ)^{−s} Γ(s, αQ)`,
/// `S₂ = det^{−1/2} Σ′ (πQ*)^{s−d/2} Γ(d/2 − s, π²Q*/α)` and
/// `B = det^{−1/2} t₀^{s−d/2}/(s − d/2)`.
pub fn epstein_zeta_with(l: &GramLattice, s: Complex64, opts: &EwaldOptions) -> Result<ZetaValue> {
    let d = l.rank() as f64;
    let half = d / 2.0;
    if (s - half).norm() < POLE_RADIUS {
        return Err(Error::Pole { s: fmt_complex(s), pole: half });
    }
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::NonFinite(format!("s = {s}")));
    }
    let alpha = resolve_alpha(l, opts)?;
    let cut = choose_cutoffs(l, alpha, s)?;
    let det = l.det_gram();

    let mut s1 = ComplexSum::new();
    let mut mag = NeumaierSum::new();
    let mut failure = None;
    l.for_each_point(cut.direct / alpha, opts.budget, |_, q| {
        if failure.is_some() {
            return;
        }
        match gamma_upper(s, alpha * q) {
            Ok(g) => {
                let t = (-s * (PI * q).ln()).exp() * g;
                mag.add(t.norm());
                s1.add(t);
            }
            Err(e) => failure = Some(e),
        }
    })?;
    let dual = l.dual()?;
    let mut s2 = ComplexSum::new();
    let a2 = half - s;
    dual.for_each_point(cut.dual * alpha / (PI * PI), opts.budget, |_, q| {
        if failure.is_some() {
            return;
        }
        match gamma_upper(a2, PI * PI * q / alpha) {
            Ok(g) => {
                let t = ((s - half) * (PI * q).ln()).exp() * g;
                mag.add(t.norm());
                s2.add(t);
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let inv_sqrt_det = det.powf(-0.5);
    let t0 = alpha / PI;
    let boundary = inv_sqrt_det * ((s - half) * t0.ln()).exp() / (s - half);
    let bracket = s1.value() + s2.value() * inv_sqrt_det + boundary;
    let pis_rg = (s * PI.ln()).exp() * rgamma(s);
    let tail_term = (s * alpha.ln()).exp() * rgamma(s + 1.0);
    let value = pis_rg * bracket - tail_term;
    // phases of (πQ)^{−s} lose about |s|·ulp each, and 1/Γ(s) amplifies them
    let eps = 1e-15 * (4.0 + 2.0 * s.norm());
    let rounding = eps * (pis_rg.norm() * (mag.value() * inv_sqrt_det.max(1.0) + boundary.norm()) + tail_term.norm());
    let error_bound = pis_rg.norm() * cut.tail + rounding;
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::NonFinite(format!("Epstein zeta at s = {s}")));
    }
    Ok(ZetaValue { s, value, error_bound })
}

/// Location `d/2` and residue `π^{d/2}/(Γ(d/2)√det)` of the only pole.
pub fn epstein_pole(l: &GramLattice) -> (f64, f64) {
    let half = l.rank() as f64 / 2.0;
    (half, PI.powf(half) / (gamma_real(half) * l.det_gram().sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deriv0 {
    pub value: f64,
    pub error_bound: f64,
}

pub fn epstein_deriv0(l: &GramLattice) -> Result<f64> {
    Ok(epstein_deriv0_with(l, &EwaldOptions::default())?.value)
}

/// `Z′(0) = Σ′ E₁(αQ) + det^{−1/2} Σ′ (πQ*)^{−d/2} Γ(d/2, π²Q*/α)
///          − (2/d) det^{−1/2} (α/π)^{−d/2} − log α − γ`.
pub fn epstein_deriv0_with(l: &GramLattice, opts: &EwaldOptions) -> Result<Deriv0> {
    let d = l.rank() as f64;
    let half = d / 2.0;
    let alpha = resolve_alpha(l, opts)?;
    let cut = choose_cutoffs(l, alpha, Complex64::new(0.0, 0.0))?;
    let det = l.det_gram();
    let mut failure = None;
    let mut s1 = NeumaierSum::new();
    l.for_each_point(cut.direct / alpha, opts.budget, |_, q| {
        if failure.is_none() {
            match exp_integral_e1(alpha * q) {
                Ok(v) => s1.add(v),
                Err(e) => failure = Some(e),
            }
        }
    })?;
    let dual = l.dual()?;
    let mut s2 = NeumaierSum::new();
    dual.for_each_point(cut.dual * alpha / (PI * PI), opts.budget, |_, q| {
        if failure.is_none() {
            match gamma_upper_real(half, PI * PI * q / alpha) {
                Ok(g) => s2.add((PI * q).powf(-half) * g),
                Err(e) => failure = Some(e),
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let inv_sqrt_det = det.powf(-0.5);
    let boundary = -(2.0 / d) * inv_sqrt_det * (alpha / PI).powf(-half);
    let value = s1.value() + inv_sqrt_det * s2.value() + boundary - alpha.ln() - EULER_GAMMA;
    let scale = s1.value().abs() + inv_sqrt_det * s2.value().abs() + boundary.abs() + alpha.ln().abs() + 1.0;
    Ok(Deriv0 { value, error_bound: cut.tail + 1e-15 * scale })
}

/// Gram matrix `[[1, Re τ], [Re τ, |τ|²]]` of the lattice `Z + τZ`.
pub fn modulus_gram(tau: Complex64) -> RMat {
    RMat::from_row_slice(2, 2, &[1.0, tau.re, tau.re, tau.norm_sqr()])
}

/// `E(s) = (2π)^{−2s} Z(s)` for the lattice `Z + τZ`.
pub fn lattice_zeta_e(m: &Modulus, s: Complex64) -> Result<ZetaValue> {
    let l = GramLattice::new(modulus_gram(m.tau))?;
    let z = epstein_zeta(&l, s)?;
    let pre = (-2.0 * s * (2.0 * PI).ln()).exp();
    Ok(ZetaValue { s, value: pre * z.value, error_bound: pre.norm() * z.error_bound })
}

/// `log det′Δ = −ζ′(0)` for the flat torus `C/(Z + τZ)` with metric `|dz|²`,
/// eigenvalues `4π²|m + nτ|²/(Im τ)²`.
pub fn torus_log_det_from_zeta(tau: Complex64) -> Result<f64> {
    let g = modulus_gram(tau);
    let y2 = tau.im * tau.im;
    // inverse of the period Gram, i.e. |m τ − n|²/(Im τ)² in dual coordinates
    let dual = RMat::from_row_slice(2, 2, &[tau.norm_sqr() / y2, -tau.re / y2, -tau.re / y2, 1.0 / y2]);
    debug_assert!(((&g * &dual) - RMat::identity(2, 2)).abs().max() < 1e-10);
    let l = GramLattice::new(dual)?;
    let zp = epstein_deriv0(&l)?;
    // ζ(s) = (4π²)^{−s} Z(s), Z(0) = −1
    Ok(-zp - (4.0 * PI * PI).ln())
}

/// Compares `−ζ′(0)` with `log((Im τ)² |η(τ)|⁴)`.
pub fn kronecker_check(m: &Modulus) -> Result<VerificationReport> {
    let lhs = torus_log_det_from_zeta(m.tau)?;
    let eta = dedekind_eta(m)?;
    let rhs = 2.0 * m.tau.im.ln() + 4.0 * eta.norm().ln();
    Ok(VerificationReport::new(
        "epstein.kronecker_limit",
        format!("tau={}", fmt_complex(m.tau)),
        (lhs - rhs).abs(),
        1e-10,
    )
    .note(format!("log_det_zeta={lhs:.15e}; log_eta_side={rhs:.15e}; det'=exp(-zeta'(0))")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn id(d: usize) -> GramLattice {
        GramLattice::new(RMat::identity(d, d)).unwrap()
    }

    #[test]
    fn square_lattice_at_two() {
        let z = epstein_zeta(&id(2), c(2.0, 0.0)).unwrap();
        assert!((z.value.re - 6.026_812_039_6).abs() < 1e-9, "{}", z.value);
        assert!(z.error_bound < 1e-12);
    }

    #[test]
    fn value_at_zero_is_minus_one() {
        for l in [id(2), id(3), GramLattice::new(modulus_gram(c(0.3, 1.2))).unwrap()] {
            let z = epstein_zeta(&l, c(0.0, 0.0)).unwrap();
            assert!((z.value - c(-1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn homogeneity_in_the_gram() {
        let l = id(2);
        let l4 = l.scaled(4.0).unwrap();
        let s = c(1.3, 0.0);
        let a = epstein_zeta(&l, s).unwrap().value;
        let b = epstein_zeta(&l4, s).unwrap().value;
        assert!((b - a * 4f64.powf(-1.3)).norm() < 1e-12);
    }

    #[test]
    fn pole_is_rejected() {
        assert!(matches!(epstein_zeta(&id(2), c(1.0, 0.0)), Err(Error::Pole { .. })));
        assert!(matches!(epstein_zeta(&id(4), c(2.0 + 1e-7, 0.0)), Err(Error::Pole { .. })));
        assert!(epstein_zeta(&id(2), c(1.0 + 1e-5, 0.0)).is_ok());
    }

    #[test]
    fn pole_data() {
        let (p, r) = epstein_pole(&id(2));
        assert_eq!(p, 1.0);
        assert!((r - PI).abs() < 1e-14);
        let (_, r) = epstein_pole(&GramLattice::new(RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0])).unwrap());
        assert!((r - PI / 2.0).abs() < 1e-14);
        let (p, r) = epstein_pole(&id(4));
        assert_eq!(p, 2.0);
        assert!((r - PI * PI).abs() < 1e-13);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let l = GramLattice::new(modulus_gram(c(0.2, 1.1))).unwrap();
        let h = 1e-4;
        let zp = epstein_zeta(&l, c(h, 0.0)).unwrap().value.re;
        let zm = epstein_zeta(&l, c(-h, 0.0)).unwrap().value.re;
        let fd = (zp - zm) / (2.0 * h);
        let d0 = epstein_deriv0_with(&l, &EwaldOptions::default()).unwrap();
        assert!((fd - d0.value).abs() < 1e-7);
        assert!(d0.error_bound < 1e-10);
    }

    #[test]
    fn derivative_scaling_law() {
        let l = id(2);
        let l2 = l.scaled(2.0).unwrap();
        let a = epstein_deriv0(&l).unwrap();
        let b = epstein_deriv0(&l2).unwrap();
        // Z(0) = −1
        assert!((b - (a + 2f64.ln())).abs() < 1e-11);
    }

    #[test]
    fn normalized_e_values() {
        let m = Modulus::from_tau(c(0.0, 1.0)).unwrap();
        let e2 = lattice_zeta_e(&m, c(2.0, 0.0)).unwrap().value.re;
        assert!((e2 - 6.026_812_039_6 / (2.0 * PI).powi(4)).abs() < 1e-9);
        assert!((lattice_zeta_e(&m, c(0.0, 0.0)).unwrap().value.re + 1.0).abs() < 1e-12);
        let a = lattice_zeta_e(&Modulus::from_tau(c(0.35, 0.8)).unwrap(), c(1.7, 0.0)).unwrap().value;
        let b = lattice_zeta_e(&Modulus::from_tau(c(1.35, 0.8)).unwrap(), c(1.7, 0.0)).unwrap().value;
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn kronecker_at_reference_points() {
        for tau in [c(0.0, 1.0), c(0.0, 2.0), c(0.3, 1.2)] {
            let r = kronecker_check(&Modulus::from_tau(tau).unwrap()).unwrap();
            assert!(r.passed(), "{r:?}");
        }
        let v = torus_log_det_from_zeta(c(0.0, 1.0)).unwrap();
        assert!((v - 0.348_302f64.ln()).abs() < 1e-5);
        assert!((v - 4.0 * 0.768_225_422_326_057f64.ln()).abs() < 1e-12);
    }
}
