//! Spectra, heat traces and zeta-regularized determinants of the `∂̄`-Laplacian
//! on `(0,q)`-forms of a flat torus.
//!
//! On a flat torus every `(0,q)`-form operator built from `∂̄`, `∂̄*` and
//! constant endomorphisms is block diagonal over the characters
//! `e_k = exp(2πi⟨k, x⟩)`. On the block of `k` the Laplacian acts as the
//! scalar `4π² kᵀG⁻¹k`, so every determinant reduces to the Epstein zeta
//! function of the dual Gram `G⁻¹`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epstein::epstein_deriv0;
use crate::error::{Error, Result};
use crate::exterior::{compose_beltrami_orthonormal, endo_extend_matrix, wedge_matrix, BeltramiMatrix};
use crate::lattice::{GramLattice, DEFAULT_BUDGET};
use crate::linalg::{binomial, inverse, CMat, RMat};
use crate::report::VerificationReport;
use crate::special::{gamma_q, gamma_real};
use crate::summation::{ComplexSum, NeumaierSum};
use crate::torus::FlatTorus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HodgeComponent {
    Full,
    /// Restriction to `Im ∂̄`.
    Prime,
    /// Restriction to `Im ∂̄*`.
    DoublePrime,
}

impl fmt::Display for HodgeComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HodgeComponent::Full => "full",
            HodgeComponent::Prime => "prime",
            HodgeComponent::DoublePrime => "doubleprime",
        })
    }
}

impl FromStr for HodgeComponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(HodgeComponent::Full),
            "prime" => Ok(HodgeComponent::Prime),
            "doubleprime" => Ok(HodgeComponent::DoublePrime),
            other => Err(Error::domain(format!("unknown component '{other}' (full|prime|doubleprime)"))),
        }
    }
}

pub fn hodge_multiplicity(n: usize, q: usize, comp: HodgeComponent) -> Result<usize> {
    if q > n {
        return Err(Error::domain(format!("degree q = {q} outside 0..={n}")));
    }
    Ok(match comp {
        HodgeComponent::Full => binomial(n, q),
        HodgeComponent::Prime if q == 0 => 0,
        HodgeComponent::Prime => binomial(n - 1, q - 1),
        HodgeComponent::DoublePrime if q == n => 0,
        HodgeComponent::DoublePrime => binomial(n - 1, q),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDeterminant {
    pub q: usize,
    pub component: HodgeComponent,
    pub log_det: f64,
    /// `ζ(0)` of the nonzero spectrum.
    pub zeta_at_0: f64,
    pub multiplicity: usize,
}

/// Distinct scalar eigenvalues `≤ cutoff` with multiplicities, zero included.
pub fn scalar_eigenvalues(t: &FlatTorus, cutoff: f64) -> Result<Vec<(f64, usize)>> {
    if !(cutoff > 0.0) {
        return Err(Error::domain("eigenvalue cutoff must be positive"));
    }
    let scale = 4.0 * PI * PI;
    let pts = t.dual_lattice().enumerate(cutoff / scale, DEFAULT_BUDGET)?;
    let mut out: Vec<(f64, usize)> = vec![(0.0, 1)];
    for p in pts {
        let lam = scale * p.norm;
        match out.last_mut() {
            Some((prev, m)) if (*prev - lam).abs() <= 1e-12 * lam => *m += 1,
            _ => out.push((lam, 1)),
        }
    }
    Ok(out)
}

/// `log det′` of the scalar Laplacian: `−ζ′(0)` with `ζ(s) = (4π²)^{−s} Z_{G⁻¹}(s)`.
pub fn scalar_log_det(t: &FlatTorus) -> Result<f64> {
    let zp = epstein_deriv0(t.dual_lattice())?;
    // Z(0) = −1, so ζ′(0) = Z′(0) + log 4π²
    Ok(-zp - (4.0 * PI * PI).ln())
}

fn component_value(t: &FlatTorus, q: usize, comp: HodgeComponent, scalar: f64) -> Result<SpectralDeterminant> {
    let m = hodge_multiplicity(t.n(), q, comp)?;
    Ok(SpectralDeterminant { q, component: comp, log_det: m as f64 * scalar, zeta_at_0: -(m as f64), multiplicity: m })
}

pub fn log_det(t: &FlatTorus, q: usize, comp: HodgeComponent) -> Result<SpectralDeterminant> {
    let n = t.n();
    if q > n {
        return Err(Error::domain(format!("degree q = {q} outside 0..={n}")));
    }
    match comp {
        HodgeComponent::Prime if q == 0 => return Err(Error::domain("the prime component needs q ≥ 1")),
        HodgeComponent::DoublePrime if q == n => return Err(Error::domain("the doubleprime component needs q ≤ n − 1")),
        _ => {}
    }
    component_value(t, q, comp, scalar_log_det(t)?)
}

/// Hodge split `Δ_q = Δ′_q ⊕ Δ″_q` and the isospectrality `Δ″_q ≅ Δ′_{q+1}`.
pub fn spectral_identity_residuals(t: &FlatTorus, q: usize) -> Result<Vec<VerificationReport>> {
    let n = t.n();
    if q > n {
        return Err(Error::domain(format!("degree q = {q} outside 0..={n}")));
    }
    let inputs = format!("n={n}; q={q}");
    // the empty components at the ends of the complex have determinant 1
    let part = |q: usize, comp| -> Result<f64> {
        Ok(if hodge_multiplicity(n, q, comp)? == 0 { 0.0 } else { log_det(t, q, comp)?.log_det })
    };
    let full = log_det(t, q, HodgeComponent::Full)?.log_det;
    let prime = part(q, HodgeComponent::Prime)?;
    let dprime = part(q, HodgeComponent::DoublePrime)?;
    let mut out = vec![VerificationReport::new("spectral.hodge_split", inputs.clone(), (full - prime - dprime).abs(), 1e-9)
        .note(format!("full={full:.15e}; prime={prime:.15e}; doubleprime={dprime:.15e}"))];
    if q < n {
        let next = part(q + 1, HodgeComponent::Prime)?;
        out.push(
            VerificationReport::new("spectral.isospectral", inputs, (dprime - next).abs(), 1e-9)
                .note(format!("doubleprime_q={dprime:.15e}; prime_q+1={next:.15e}")),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatMethod {
    Spectral,
    ThetaDual,
}

impl FromStr for HeatMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(HeatMethod::Spectral),
            "theta_dual" | "theta-dual" => Ok(HeatMethod::ThetaDual),
            other => Err(Error::domain(format!("unknown heat method '{other}'"))),
        }
    }
}

/// Radius `R` with `Σ_{Q(v) > R} exp(−a Q(v)) ≤ rel`, from the lattice-point
/// count `V_d (R/det^{1/d})^{d/2}` and the incomplete-gamma tail.
fn gaussian_radius(l: &GramLattice, a: f64, rel: f64) -> f64 {
    let d = l.rank() as f64;
    let vd = PI.powf(d / 2.0) / gamma_real(d / 2.0 + 1.0);
    let pre = vd * d / (a.powf(d / 2.0) * l.det_gram().sqrt());
    let mut x: f64 = 30.0;
    while pre * (x + d).powf(d / 2.0) * (-x).exp() > rel && x < 2000.0 {
        x += 1.0;
    }
    x / a
}

/// `Σ_{v ∈ Λ} exp(−a Q(v))`, zero vector included, in enumeration order.
fn gaussian_sum(l: &GramLattice, a: f64) -> Result<f64> {
    let r = gaussian_radius(l, a, 1e-18);
    let mut acc = NeumaierSum::new();
    acc.add(1.0);
    l.for_each_point(r, DEFAULT_BUDGET, |_, q| acc.add((-a * q).exp()))?;
    Ok(acc.value())
}

/// `Tr e^{−tΔ_q}` including zero modes.
pub fn heat_trace(torus: &FlatTorus, q: usize, t: f64, method: HeatMethod) -> Result<f64> {
    let n = torus.n();
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain("heat time must be positive"));
    }
    let mult = hodge_multiplicity(n, q, HodgeComponent::Full)? as f64;
    match method {
        HeatMethod::Spectral => Ok(mult * gaussian_sum(torus.dual_lattice(), 4.0 * PI * PI * t)?),
        HeatMethod::ThetaDual => {
            let pre = torus.volume() / (4.0 * PI * t).powi(n as i32);
            Ok(mult * pre * gaussian_sum(torus.lattice(), 1.0 / (4.0 * t))?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatTraceExpansion {
    /// Power of `t` ↦ coefficient, powers `−n..=0`.
    pub coefficients: BTreeMap<i32, f64>,
    pub standard_errors: BTreeMap<i32, f64>,
    /// Root-mean-square relative misfit.
    pub fit_residual: f64,
    pub t_window: (f64, f64),
}

impl HeatTraceExpansion {
    pub fn coefficient(&self, power: i32) -> f64 {
        self.coefficients.get(&power).copied().unwrap_or(0.0)
    }
}

const MAX_FIT_CONDITION: f64 = 1e12;

/// Eight log-spaced samples below the scale where the first dual correction
/// `exp(−Q_min/4t)` reaches `e^{−25}`.
pub fn default_heat_samples(torus: &FlatTorus) -> Vec<f64> {
    let hi = (torus.lattice().minimum() / 100.0).min(0.01);
    let lo = 0.4 * hi;
    (0..8).map(|i| lo * (hi / lo).powf(i as f64 / 7.0)).collect()
}

/// Least-squares fit of `Σ_{k=0..n} a_k t^{−k}` to the heat trace. Rows are
/// weighted by the inverse trace so every sample counts in relative terms.
pub fn heat_coefficients(torus: &FlatTorus, q: usize, samples: &[f64]) -> Result<HeatTraceExpansion> {
    let n = torus.n();
    let p = n + 1;
    if samples.len() < 2 * p {
        return Err(Error::domain(format!("need at least {} samples for {p} coefficients", 2 * p)));
    }
    if samples.iter().any(|&t| !(t > 0.0 && t <= 0.2)) {
        return Err(Error::domain("heat samples must lie in (0, 0.2]"));
    }
    let values: Vec<f64> = samples
        .par_iter()
        .map(|&t| heat_trace(torus, q, t, HeatMethod::ThetaDual))
        .collect::<Result<Vec<_>>>()?;
    let m = samples.len();
    let mut a = RMat::zeros(m, p);
    let mut b = nalgebra::DVector::zeros(m);
    for (i, (&t, &y)) in samples.iter().zip(&values).enumerate() {
        let w = 1.0 / y.abs().max(1e-300);
        for k in 0..p {
            a[(i, k)] = w * t.powi(-(k as i32));
        }
        b[i] = w * y;
    }
    // column scaling keeps the SVD condition estimate meaningful
    let scales: Vec<f64> = (0..p).map(|k| a.column(k).norm().max(1e-300)).collect();
    for (k, s) in scales.iter().enumerate() {
        a.column_mut(k).unscale_mut(*s);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) || smax / smin > MAX_FIT_CONDITION {
        return Err(Error::IllConditioned(format!("heat fit condition {:.3e}", smax / smin)));
    }
    let x = svd.solve(&b, 1e-300).map_err(|e| Error::IllConditioned(e.to_string()))?;
    let resid = &a * &x - &b;
    let rss = resid.norm_squared();
    let dof = (m - p).max(1) as f64;
    let sigma2 = rss / dof;
    let ata_inv = inverse_real_sym(&(a.transpose() * &a))?;
    let mut coefficients = BTreeMap::new();
    let mut standard_errors = BTreeMap::new();
    for k in 0..p {
        let power = -(k as i32);
        coefficients.insert(power, x[k] / scales[k]);
        standard_errors.insert(power, (sigma2 * ata_inv[(k, k)]).max(0.0).sqrt() / scales[k]);
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(0.0, f64::max);
    Ok(HeatTraceExpansion { coefficients, standard_errors, fit_residual: (rss / m as f64).sqrt(), t_window: (lo, hi) })
}

fn inverse_real_sym(m: &RMat) -> Result<RMat> {
    m.clone().try_inverse().ok_or_else(|| Error::IllConditioned("normal matrix is singular".into()))
}

/// Endomorphism field `w ↦ Σ_k c_k exp(2πi⟨k, x(w)⟩)` with finitely many
/// constant matrix coefficients, `x` the real lattice coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EndomorphismField {
    rank: usize,
    terms: Vec<(Vec<i64>, CMat)>,
}

impl EndomorphismField {
    pub fn new(rank: usize, terms: Vec<(Vec<i64>, CMat)>) -> Result<Self> {
        let fiber = terms.first().map(|(_, m)| m.nrows());
        for (k, m) in &terms {
            if k.len() != rank {
                return Err(Error::dim(format!("frequency of length {} on a rank-{rank} lattice", k.len())));
            }
            if !m.is_square() || Some(m.nrows()) != fiber {
                return Err(Error::dim("coefficients must be square of a common size"));
            }
        }
        Ok(EndomorphismField { rank, terms })
    }

    pub fn constant(rank: usize, m: CMat) -> Result<Self> {
        Self::new(rank, vec![(vec![0; rank], m)])
    }

    pub fn terms(&self) -> &[(Vec<i64>, CMat)] {
        &self.terms
    }

    /// `Tr φ(x)` at real lattice coordinates `x`.
    pub fn trace_at(&self, x: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(k, m)| m.trace() * phase(k, x))
            .collect::<ComplexSum>()
            .value()
    }
}

fn phase(k: &[i64], x: &[f64]) -> Complex64 {
    let arg: f64 = k.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum();
    Complex64::from_polar(1.0, 2.0 * PI * arg)
}

/// `Υ_t(φ, z) = ∫ K_t(w, z) Tr φ(w) dw` with the unit-mass heat kernel.
/// Returns the value and the kernel mass outside the injectivity ball.
pub fn upsilon_value(torus: &FlatTorus, field: &EndomorphismField, z: &[f64], t: f64) -> Result<(Complex64, f64)> {
    let d = 2 * torus.n();
    if field.rank != d || z.len() != d {
        return Err(Error::dim(format!("field and point must have rank {d}")));
    }
    if !(t > 0.0) {
        return Err(Error::domain("kernel time must be positive"));
    }
    let delta = 0.5 * torus.lattice().minimum().sqrt();
    let outside = gamma_q(d as f64 / 2.0, delta * delta / (4.0 * t))?;
    let value = field
        .terms
        .iter()
        .map(|(k, m)| m.trace() * (-t * torus.character_eigenvalue(k)).exp() * phase(k, z))
        .collect::<ComplexSum>()
        .value();
    Ok((value, outside))
}

/// Kernel mass allowed outside the injectivity ball.
pub const UPSILON_MASS_CUTOFF: f64 = 1e-13;

/// Six halving times starting where the kernel mass outside the injectivity
/// ball is about `e^{−32}`.
pub fn default_upsilon_times(torus: &FlatTorus) -> Vec<f64> {
    let delta_sq = 0.25 * torus.lattice().minimum();
    let t0 = delta_sq / (4.0 * (32.0 + 2.0 * torus.n() as f64));
    (0..6).map(|i| t0 * 0.5f64.powi(i)).collect()
}

/// Neville extrapolation of `(tᵢ, yᵢ)` to `t = 0`.
pub fn neville_at_zero(ts: &[f64], ys: &[Complex64]) -> Complex64 {
    let mut p: Vec<Complex64> = ys.to_vec();
    let m = ts.len();
    for level in 1..m {
        for i in 0..m - level {
            let (a, b) = (ts[i], ts[i + level]);
            p[i] = (p[i + 1] * a - p[i] * b) / (a - b);
        }
    }
    p[0]
}

pub fn upsilon_limit(torus: &FlatTorus, field: &EndomorphismField, z: &[f64], ts: &[f64]) -> Result<VerificationReport> {
    if ts.is_empty() || ts.windows(2).any(|w| !(w[1] < w[0])) || ts.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::domain("t sequence must be positive and strictly decreasing"));
    }
    let mut vals = Vec::with_capacity(ts.len());
    for &t in ts {
        let (v, outside) = upsilon_value(torus, field, z, t)?;
        if outside > UPSILON_MASS_CUTOFF {
            return Err(Error::domain(format!(
                "t = {t} is too large for the injectivity radius (kernel mass {outside:.2e} outside it)"
            )));
        }
        vals.push(v);
    }
    let limit = neville_at_zero(ts, &vals);
    let target = field.trace_at(z);
    let seq: Vec<String> = ts.iter().zip(&vals).map(|(t, v)| format!("{t:.3e}:{:.12e}", v.re)).collect();
    Ok(VerificationReport::new(
        "spectral.upsilon_limit",
        format!("n={}; z={:?}", torus.n(), z),
        (limit - target).norm(),
        1e-6,
    )
    .note(format!("limit={:.15e}; trace={:.15e}; sequence={}", limit.re, target.re, seq.join(","))))
}

/// Trace and squared Hilbert–Schmidt norm of a finite matrix.
pub fn truncated_trace_and_hs(k: &CMat) -> Result<(Complex64, f64)> {
    if !k.is_square() {
        return Err(Error::dim("trace needs a square matrix"));
    }
    let tr = k.diagonal().iter().copied().collect::<ComplexSum>().value();
    let hs = k.iter().map(|z| z.norm_sqr()).collect::<NeumaierSum>().value();
    Ok((tr, hs))
}

/// Compares `Tr(e^{−tΔ″_{q−1}} ∂̄⁻¹ F′ ∂̄)` with `Tr(e^{−tΔ′_q} F′)`, where
/// `F′` is the extension of `φ ∘ ψ*` to `Λ^{0,q}` compressed to `Im ∂̄`.
/// Both are summed over characters; each block is handled in a
/// `g`-orthonormal frame.
pub fn conjugation_trace_check(
    torus: &FlatTorus,
    q: usize,
    phi: &BeltramiMatrix,
    psi: &BeltramiMatrix,
    t: f64,
) -> Result<VerificationReport> {
    let (a, b) = conjugation_traces(torus, q, phi, psi, t)?;
    Ok(VerificationReport::new(
        "spectral.conjugation_trace",
        format!("n={}; q={q}; t={t}", torus.n()),
        (a - b).norm(),
        1e-11,
    )
    .note(format!("conjugated={:.15e}; compressed={:.15e}", a.re, b.re)))
}

/// The two traces compared in [`conjugation_trace_check`].
pub fn conjugation_traces(
    torus: &FlatTorus,
    q: usize,
    phi: &BeltramiMatrix,
    psi: &BeltramiMatrix,
    t: f64,
) -> Result<(Complex64, Complex64)> {
    let n = torus.n();
    if q == 0 || q > n {
        return Err(Error::domain(format!("degree q = {q} outside 1..={n}")));
    }
    if !(t > 0.0) {
        return Err(Error::domain("heat time must be positive"));
    }
    let g = torus.metric();
    let f = endo_extend_matrix(&compose_beltrami_orthonormal(phi, psi, g)?, q);
    let lbar_inv = inverse(&torus.frame().map(|z| z.conj()), "metric frame")?;
    let a = 4.0 * PI * PI * t;
    let r = gaussian_radius(torus.dual_lattice(), a, 1e-20);
    let mut conj_sum = ComplexSum::new();
    let mut comp_sum = ComplexSum::new();
    let mut failure = None;
    torus.dual_lattice().for_each_point(r, DEFAULT_BUDGET, |k, norm| {
        if failure.is_some() {
            return;
        }
        let (_, xi) = torus.character_multipliers(k);
        let xi_v = CMat::from_fn(n, 1, |i, _| xi[i]);
        let xi_on = &lbar_inv * xi_v;
        let w = wedge_matrix(xi_on.as_slice(), q - 1);
        let w_plus = match w.clone().pseudo_inverse(1e-10 * w.norm()) {
            Ok(m) => m,
            Err(e) => {
                failure = Some(Error::IllConditioned(e.to_string()));
                return;
            }
        };
        let proj = &w * &w_plus;
        let heat = (-a * norm).exp();
        let compressed = &proj * &f * &proj;
        conj_sum.add((&w_plus * &compressed * &w).trace() * heat);
        comp_sum.add(compressed.trace() * heat);
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((conj_sum.value(), comp_sum.value()))
}

/// Scalar heat factor sum `Σ_{k≠0} e^{−tλ_k}`, used by callers that scale
/// per-block traces.
pub fn nonzero_heat_sum(torus: &FlatTorus, t: f64) -> Result<f64> {
    Ok(gaussian_sum(torus.dual_lattice(), 4.0 * PI * PI * t)? - 1.0)
}
