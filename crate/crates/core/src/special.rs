//! Gamma-type special functions in double precision.
//!
//! The upper incomplete gamma function is the kernel of the Ewald splitting
//! in [`crate::epstein`], so it is needed for complex order `s` and real
//! argument `x > 0`, including orders at and around the poles of `Γ(s)`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
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

/// Taylor coefficients of `1/Γ(z)` around `z = 0` (index = power).
const RGAMMA_TAYLOR: [f64; 29] = [
    0.0,
    1.0,
    5.772_156_649_015_328_66e-1,
    -6.558_780_715_202_539_02e-1,
    -4.200_263_503_409_523_70e-2,
    1.665_386_113_822_914_79e-1,
    -4.219_773_455_554_433_34e-2,
    -9.621_971_527_876_973_03e-3,
    7.218_943_246_663_099_90e-3,
    -1.165_167_591_859_065_17e-3,
    -2.152_416_741_149_509_75e-4,
    1.280_502_823_881_161_96e-4,
    -2.013_485_478_078_823_87e-5,
    -1.250_493_482_142_670_63e-6,
    1.133_027_231_981_695_93e-6,
    -2.056_338_416_977_607_07e-7,
    6.116_095_104_481_416_09e-9,
    5.002_007_644_469_222_95e-9,
    -1.181_274_570_487_020_04e-9,
    1.043_426_711_691_100_54e-10,
    7.782_263_439_905_070_81e-12,
    -3.696_805_618_642_205_98e-12,
    5.100_370_287_454_475_75e-13,
    -2.058_326_053_566_506_64e-14,
    -5.348_122_539_423_017_82e-15,
    1.226_778_628_238_260_84e-15,
    -1.181_259_301_697_458_83e-16,
    1.186_692_254_751_600_37e-18,
    1.412_380_655_318_031_86e-18,
];

const MAX_TERMS: usize = 4000;

/// `ln Γ(z)` for complex `z` off the non-positive integers.
///
/// The imaginary part is only determined modulo `2π`; callers exponentiate.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection
        let s = (Complex64::new(PI, 0.0) * z).sin();
        return Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut a = Complex64::new(LANCZOS[0], 0.0);
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        a += *c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

pub fn gamma(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    ln_gamma(z).exp()
}

/// `1/Γ(z)`, an entire function; exact zeros at the non-positive integers.
pub fn rgamma(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if z.norm() < 0.5 {
        return horner(&RGAMMA_TAYLOR, z);
    }
    if z.re < 0.5 {
        let s = (Complex64::new(PI, 0.0) * z).sin();
        return s * gamma(Complex64::new(1.0, 0.0) - z) / PI;
    }
    (-ln_gamma(z)).exp()
}

pub fn gamma_real(x: f64) -> f64 {
    gamma(Complex64::new(x, 0.0)).re
}

fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// `(Γ(1+ε) − 1)/ε`, continuous through `ε = 0` where it equals `−γ`.
fn gamma1pm1_over(eps: Complex64) -> Complex64 {
    if eps.norm() > 0.5 {
        return (gamma(eps + 1.0) - 1.0) / eps;
    }
    // 1/Γ(1+ε) = Σ c_{k+1} ε^k = 1 + ε·tail(ε)
    let tail = horner(&RGAMMA_TAYLOR[2..], eps);
    let r = Complex64::new(1.0, 0.0) + eps * tail;
    -tail / r
}

/// `(exp(z) − 1)/z`, continuous through `z = 0`.
fn exprel(z: Complex64) -> Complex64 {
    if z.norm() > 0.5 {
        return (z.exp() - 1.0) / z;
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 2..40 {
        term *= z / k as f64;
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// Upper incomplete gamma function `Γ(s, x) = ∫_x^∞ t^{s−1} e^{−t} dt`.
///
/// Continued fraction for `x ≥ |s| + 1`; the lower series for `Re s ≥ 1/2`;
/// below that, an order-shifted base case followed by downward recursion.
pub fn gamma_upper(s: Complex64, x: f64) -> Result<Complex64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("incomplete gamma needs x > 0, got {x}")));
    }
    if s.norm() > 60.0 {
        return Err(Error::domain(format!("|s| = {} exceeds the supported range", s.norm())));
    }
    if x >= s.norm() + 1.0 {
        return continued_fraction(s, x);
    }
    if s.re >= 0.5 {
        let lower = lower_series(s, x)?;
        return Ok(gamma(s) - lower);
    }
    // shift s up by m so that Re(eps) lies in [-1/2, 1/2)
    let m = (-s.re - 0.5).ceil().max(0.0) as usize;
    let eps = s + m as f64;
    let mut value = if x >= eps.norm() + 1.0 || x >= 4.0 {
        continued_fraction(eps, x)?
    } else {
        small_order_series(eps, x)?
    };
    let ex = (-x).exp();
    let mut a = eps;
    for _ in 0..m {
        // Γ(a−1, x) = (Γ(a, x) − x^{a−1} e^{−x}) / (a − 1)
        let am1 = a - 1.0;
        value = (value - Complex64::new(x, 0.0).powc(am1) * ex) / am1;
        a = am1;
    }
    Ok(value)
}

pub fn gamma_upper_real(a: f64, x: f64) -> Result<f64> {
    Ok(gamma_upper(Complex64::new(a, 0.0), x)?.re)
}

/// Regularized `Q(a, x) = Γ(a, x)/Γ(a)` for real `a > 0`.
pub fn gamma_q(a: f64, x: f64) -> Result<f64> {
    if a <= 0.0 {
        return Err(Error::domain("gamma_q needs a > 0"));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    Ok(gamma_upper_real(a, x)? / gamma_real(a))
}

/// Exponential integral `E₁(x) = Γ(0, x)`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    gamma_upper_real(0.0, x)
}

fn continued_fraction(s: Complex64, x: f64) -> Result<Complex64> {
    // modified Lentz on Γ(s,x) = e^{-x} x^s / (x+1−s − 1(1−s)/(x+3−s − 2(2−s)/…))
    let tiny = 1e-300;
    let one = Complex64::new(1.0, 0.0);
    let b0 = Complex64::new(x + 1.0, 0.0) - s;
    let mut f = if b0.norm() < tiny { Complex64::new(tiny, 0.0) } else { b0 };
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    for n in 1..=MAX_TERMS {
        let nf = n as f64;
        let an = -nf * (Complex64::new(nf, 0.0) - s);
        let bn = Complex64::new(x + 2.0 * nf + 1.0, 0.0) - s;
        d = bn + an * d;
        if d.norm() < tiny {
            d = Complex64::new(tiny, 0.0);
        }
        d = one / d;
        c = bn + an / c;
        if c.norm() < tiny {
            c = Complex64::new(tiny, 0.0);
        }
        let delta = c * d;
        f *= delta;
        if (delta - one).norm() < 1e-16 {
            let prefactor = (s * x.ln() - x).exp();
            return Ok(prefactor / f);
        }
    }
    Err(Error::Convergence {
        what: format!("continued fraction for Γ({s}, {x})"),
        iterations: MAX_TERMS,
    })
}

fn lower_series(s: Complex64, x: f64) -> Result<Complex64> {
    // γ(s,x) = x^s e^{-x} Σ x^n / (s (s+1) … (s+n))
    let mut term = one_over(s);
    let mut sum = term;
    for n in 1..MAX_TERMS {
        term *= x / (s + n as f64);
        sum += term;
        if term.norm() < 1e-17 * sum.norm() {
            return Ok(sum * (s * x.ln() - x).exp());
        }
    }
    Err(Error::Convergence {
        what: format!("lower series for γ({s}, {x})"),
        iterations: MAX_TERMS,
    })
}

fn one_over(z: Complex64) -> Complex64 {
    Complex64::new(1.0, 0.0) / z
}

/// `Γ(ε, x)` for small orders, including `ε = 0`, and small `x`:
/// `(Γ(1+ε) − 1)/ε − (x^ε − 1)/ε − x^ε Σ_{k≥1} (−x)^k / (k! (ε + k))`.
fn small_order_series(eps: Complex64, x: f64) -> Result<Complex64> {
    let lx = x.ln();
    let head = gamma1pm1_over(eps) - lx * exprel(eps * lx);
    let mut fact_term = 1.0;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..MAX_TERMS {
        fact_term *= -x / k as f64;
        let term = fact_term / (eps + k as f64);
        sum += term;
        if term.norm() < 1e-18 * sum.norm().max(1e-300) {
            let xe = (eps * lx).exp();
            return Ok(head - xe * sum);
        }
    }
    Err(Error::Convergence {
        what: format!("small-order series for Γ({eps}, {x})"),
        iterations: MAX_TERMS,
    })
}
