//! Families of flat tori over flat coordinates, the Weil–Petersson metric and
//! finite-difference `dd^c` checks of the determinant potentials.
//!
//! A family deforms a base torus by the constant Beltrami matrix
//! `Ψ(τ) = Σ τⁱ φᵢ`: the new holomorphic coordinates are `w = z + Ψ z̄`, so the
//! periods become `Π + Ψ Π̄`. The Kähler class `L` is held fixed and the flat
//! metric is re-solved from it. Hessians are `∂²f/∂τⁱ∂τ̄ʲ`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epstein::torus_log_det_from_zeta;
use crate::error::{Error, Result};
use crate::exterior::{compose_beltrami, extend_trace, wp_pointwise_trace, BeltramiMatrix};
use crate::linalg::{c, hermitian_cholesky, inverse, max_abs, CMat};
use crate::report::VerificationReport;
use crate::spectral::{log_det, HodgeComponent};
use crate::torus::{build_torus, FlatTorus};

pub const DEFAULT_EPSILON: f64 = 0.25;
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct TorusFamily {
    base: FlatTorus,
    basis: Vec<BeltramiMatrix>,
    epsilon: f64,
    /// First of the `n` consecutive lattice generators spanning the marked cycle.
    marked_cycle: usize,
}

impl TorusFamily {
    /// Validates that the basis is WP-orthonormal at the base point.
    pub fn new(base: FlatTorus, basis: Vec<BeltramiMatrix>, epsilon: f64, marked_cycle: usize) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::dim("a family needs at least one direction"));
        }
        if basis.iter().any(|b| b.n() != base.n()) {
            return Err(Error::dim("basis dimension differs from the torus dimension"));
        }
        if !(epsilon > 0.0) {
            return Err(Error::domain("family radius must be positive"));
        }
        if marked_cycle + base.n() > 2 * base.n() {
            return Err(Error::domain(format!("marked cycle index {marked_cycle} is out of range")));
        }
        let fam = TorusFamily { base, basis, epsilon, marked_cycle };
        let wp = fam.wp_metric(&vec![c(0.0, 0.0); fam.dim()])?;
        let dev = max_abs(&(wp - CMat::identity(fam.dim(), fam.dim())));
        if dev > 1e-12 {
            return Err(Error::domain(format!("basis is not WP-orthonormal (deviation {dev:.2e})")));
        }
        Ok(fam)
    }

    /// All `n(n+1)/2` symmetric directions, orthonormal in a `g`-unitary frame.
    pub fn standard(base: FlatTorus) -> Result<Self> {
        let n = base.n();
        let l = base.frame().clone();
        let lt_inv = inverse(&l.transpose(), "metric frame")?;
        let ldag = l.adjoint();
        let norm = c(1.0 / base.volume().sqrt(), 0.0);
        let mut basis = Vec::new();
        for i in 0..n {
            for j in i..n {
                let mut e = CMat::zeros(n, n);
                if i == j {
                    e[(i, i)] = c(1.0, 0.0);
                } else {
                    e[(i, j)] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                    e[(j, i)] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                }
                basis.push(BeltramiMatrix::fibre_map(&lt_inv * e * &ldag * norm)?);
            }
        }
        TorusFamily::new(base, basis, DEFAULT_EPSILON, 0)
    }

    /// Standard family over the principally polarized torus with period
    /// matrix `[I | τ₀ I]`.
    pub fn reference(n: usize, tau0: Complex64) -> Result<Self> {
        if n == 0 {
            return Err(Error::dim("complex dimension must be positive"));
        }
        let z = CMat::identity(n, n) * tau0;
        TorusFamily::standard(FlatTorus::from_siegel(&z)?)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::domain("family radius must be positive"));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn base(&self) -> &FlatTorus {
        &self.base
    }

    pub fn basis(&self) -> &[BeltramiMatrix] {
        &self.basis
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn marked_cycle(&self) -> usize {
        self.marked_cycle
    }

    /// Number of coordinates.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn check_tau(&self, tau: &[Complex64]) -> Result<()> {
        if tau.len() != self.dim() {
            return Err(Error::dim(format!("{} coordinates for a {}-dimensional family", tau.len(), self.dim())));
        }
        let r = tau.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(r < self.epsilon) {
            return Err(Error::domain(format!("|tau| = {r:.3e} is outside the family radius {}", self.epsilon)));
        }
        Ok(())
    }

    /// `Ψ(τ) = Σ τⁱ φᵢ`.
    pub fn beltrami_at(&self, tau: &[Complex64]) -> Result<BeltramiMatrix> {
        self.check_tau(tau)?;
        let n = self.base.n();
        let mut m = CMat::zeros(n, n);
        for (b, &t) in self.basis.iter().zip(tau) {
            m += b.entries() * t;
        }
        BeltramiMatrix::new(m)
    }
}

fn real_periods(pi: &CMat) -> CMat {
    let n = pi.nrows();
    let mut p = CMat::zeros(2 * n, 2 * n);
    p.view_mut((0, 0), (n, 2 * n)).copy_from(pi);
    p.view_mut((n, 0), (n, 2 * n)).copy_from(&pi.map(|z| z.conj()));
    p
}

/// Torus with periods `Π + ΨΠ̄` and the constant metric whose Kähler class
/// is the base polarization.
pub fn deform_torus(fam: &TorusFamily, tau: &[Complex64]) -> Result<FlatTorus> {
    let psi = fam.beltrami_at(tau)?;
    deform_by(&fam.base, &psi)
}

/// Deformation of a torus by a single constant Beltrami matrix.
pub fn deform_by(base: &FlatTorus, psi: &BeltramiMatrix) -> Result<FlatTorus> {
    let n = base.n();
    let pi0 = base.periods();
    let pi = pi0 + psi.entries() * pi0.map(|z| z.conj());
    let p = real_periods(&pi);
    let p_inv = inverse(&p, "deformed periods")?;
    let l = base.polarization().map(|x| c(x, 0.0));
    // the class as a form in (w, w̄) coordinates
    let omega = p_inv.transpose() * l * &p_inv;
    let scale = max_abs(&omega).max(1e-300);
    let holo = omega.view((0, 0), (n, n)).clone_owned();
    if max_abs(&holo) > 1e-9 * scale {
        return Err(Error::Polarization(format!(
            "the class has a (2,0) part of size {:.2e} on the deformed structure",
            max_abs(&holo)
        )));
    }
    let h = omega.view((0, n), (n, n)).clone_owned() * c(0.0, -2.0);
    let h = (&h + h.adjoint()) * c(0.5, 0.0);
    hermitian_cholesky(&h).map_err(|_| Error::Polarization("re-solved metric is not positive".into()))?;
    build_torus(n, pi, h)
}

/// Scale making the marked period of `dz¹∧…∧dzⁿ` equal to one, and the norm
/// `2⁻ⁿ|∫ω∧ω̄|`-normalized so that `n = 1` gives `Im τ`.
pub fn normalized_holomorphic_form(t: &FlatTorus, marked_cycle: usize) -> Result<(Complex64, f64)> {
    let n = t.n();
    if marked_cycle + n > 2 * n {
        return Err(Error::domain(format!("marked cycle index {marked_cycle} is out of range")));
    }
    let period = t.periods().view((0, marked_cycle), (n, n)).determinant();
    if period.norm() < 1e-14 {
        return Err(Error::domain("the marked period vanishes"));
    }
    let scale = c(1.0, 0.0) / period;
    Ok((scale, holomorphic_form_norm(t) * scale.norm_sqr()))
}

/// `⟨dw¹∧…∧dwⁿ, same⟩ = 2⁻ⁿ |det [Π; Π̄]|`.
pub fn holomorphic_form_norm(t: &FlatTorus) -> f64 {
    real_periods(t.periods()).determinant().norm() / 2f64.powi(t.n() as i32)
}

/// Transported tangent classes `κᵢ = φᵢ (I − Ψ̄Ψ)⁻¹` at `τ`.
pub fn transported_basis(fam: &TorusFamily, tau: &[Complex64]) -> Result<Vec<BeltramiMatrix>> {
    let psi = fam.beltrami_at(tau)?;
    let n = psi.n();
    let a = CMat::identity(n, n) - psi.entries().map(|z| z.conj()) * psi.entries();
    let a_inv = inverse(&a, "I - conj(Psi) Psi")?;
    fam.basis.iter().map(|b| BeltramiMatrix::fibre_map(b.entries() * &a_inv)).collect()
}

/// `g_{ij̄}(τ) = Vol · Tr(κᵢ ∘ κⱼ*)` on the deformed torus.
pub fn wp_metric(fam: &TorusFamily, tau: &[Complex64]) -> Result<CMat> {
    fam.wp_metric(tau)
}

impl TorusFamily {
    pub fn wp_metric(&self, tau: &[Complex64]) -> Result<CMat> {
        let t = deform_torus(self, tau)?;
        let kappa = transported_basis(self, tau)?;
        let m = self.dim();
        let mut g = CMat::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                g[(i, j)] = wp_pointwise_trace(&kappa[i], &kappa[j], t.metric())? * t.volume();
            }
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianResult {
    /// Row-major `∂²f/∂τⁱ∂τ̄ʲ`.
    #[serde(skip)]
    pub matrix: CMat,
    pub step: f64,
    pub richardson_order: u32,
    pub error_estimate: f64,
}

fn point_key(p: &[Complex64]) -> Vec<(u64, u64)> {
    p.iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect()
}

fn unit(n: usize, k: usize, v: Complex64) -> Vec<Complex64> {
    let mut e = vec![c(0.0, 0.0); n];
    e[k] = v;
    e
}

fn raw_hessian(tau: &[Complex64], h: f64, cache: &BTreeMap<Vec<(u64, u64)>, f64>) -> CMat {
    let n = tau.len();
    let d = |u: &[Complex64], w: &[Complex64]| -> f64 {
        let at = |su: f64, sw: f64| cache[&point_key(&shifted(tau, u, su, w, sw))];
        (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h)
    };
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (xi, yi) = (unit(n, i, c(h, 0.0)), unit(n, i, c(0.0, h)));
            let (xj, yj) = (unit(n, j, c(h, 0.0)), unit(n, j, c(0.0, h)));
            m[(i, j)] = c(0.25 * (d(&xi, &xj) + d(&yi, &yj)), 0.25 * (d(&xi, &yj) - d(&yi, &xj)));
        }
    }
    m
}

/// `τ + su·u + sw·w`, evaluated the same way for the stencil and its lookup.
fn shifted(tau: &[Complex64], u: &[Complex64], su: f64, w: &[Complex64], sw: f64) -> Vec<Complex64> {
    (0..tau.len()).map(|k| tau[k] + u[k] * su + w[k] * sw).collect()
}

fn stencil(tau: &[Complex64], h: f64) -> Vec<Vec<Complex64>> {
    let n = tau.len();
    let mut pts = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let dirs_i = [unit(n, i, c(h, 0.0)), unit(n, i, c(0.0, h))];
            let dirs_j = [unit(n, j, c(h, 0.0)), unit(n, j, c(0.0, h))];
            for u in &dirs_i {
                for w in &dirs_j {
                    for (su, sw) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                        pts.push(shifted(tau, u, su, w, sw));
                    }
                }
            }
        }
    }
    pts
}

/// Mixed second derivatives `∂²f/∂τⁱ∂τ̄ʲ` by central differences in the four
/// real directions of each coordinate pair, with one Richardson step from
/// steps `h` and `h/2`. Stencil points are evaluated in parallel; the result
/// does not depend on the thread count.
pub fn ddc_hessian<F>(f: &F, tau: &[Complex64], h: f64) -> Result<HessianResult>
where
    F: Fn(&[Complex64]) -> Result<f64> + Sync,
{
    if tau.is_empty() {
        return Err(Error::dim("no coordinates"));
    }
    if !(h > 0.0 && h < 0.1) {
        return Err(Error::domain(format!("finite-difference step {h} outside (0, 0.1)")));
    }
    let mut unique: BTreeMap<Vec<(u64, u64)>, Vec<Complex64>> = BTreeMap::new();
    for step in [h, h / 2.0] {
        for p in stencil(tau, step) {
            unique.entry(point_key(&p)).or_insert(p);
        }
    }
    let points: Vec<(Vec<(u64, u64)>, Vec<Complex64>)> = unique.into_iter().collect();
    let values: Vec<f64> = points
        .par_iter()
        .map(|(_, p)| {
            let v = f(p)?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite(format!("objective at {p:?}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let cache: BTreeMap<Vec<(u64, u64)>, f64> = points.into_iter().map(|(k, _)| k).zip(values).collect();
    let coarse = raw_hessian(tau, h, &cache);
    let fine = raw_hessian(tau, h / 2.0, &cache);
    let matrix = (&fine * c(4.0, 0.0) - &coarse) / c(3.0, 0.0);
    let richardson = max_abs(&(&fine - &coarse)) / 3.0;
    let asym = max_abs(&(&matrix - matrix.adjoint())) / 2.0;
    Ok(HessianResult { matrix, step: h, richardson_order: 2, error_estimate: richardson.max(asym) })
}

/// `log det′` of the full Laplacian on `(0,q)`-forms of the deformed torus.
pub fn family_log_det(fam: &TorusFamily, tau: &[Complex64], q: usize, comp: HodgeComponent) -> Result<f64> {
    Ok(log_det(&deform_torus(fam, tau)?, q, comp)?.log_det)
}

/// `log⟨ω_τ, ω_τ⟩` for the form normalized on the marked cycle.
pub fn family_log_hol_norm(fam: &TorusFamily, tau: &[Complex64]) -> Result<f64> {
    Ok(normalized_holomorphic_form(&deform_torus(fam, tau)?, fam.marked_cycle)?.1.ln())
}

/// Least-squares constant `c` in `Hess ≈ −c·WP`, and the relative misfit.
pub fn fitted_constant(hess: &CMat, wp: &CMat) -> (f64, f64) {
    let num: f64 = hess.iter().zip(wp.iter()).map(|(a, b)| (a * b.conj()).re).sum();
    let den: f64 = wp.iter().map(|z| z.norm_sqr()).sum();
    let cst = -num / den;
    let misfit = (hess + wp * c(cst, 0.0)).norm() / wp.norm();
    (cst, misfit)
}

pub const POTENTIAL_TOL: f64 = 1e-4;

fn fmt_tau(tau: &[Complex64]) -> String {
    tau.iter().map(|z| crate::modular::fmt_complex(*z)).collect::<Vec<_>>().join(",")
}

/// Hessian checks of the determinant potentials against the WP metric:
/// `q = 1` and `q = n` full Laplacians, the pluriharmonicity of
/// `log det Δ₁ − log⟨ω,ω⟩`, the `Δ″₁` trace formula (`n ≥ 2`) and the
/// fitted proportionality constant.
pub fn verify_potential_identities(fam: &TorusFamily, tau: &[Complex64], h: f64) -> Result<Vec<VerificationReport>> {
    fam.check_tau(tau)?;
    let r = tau.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(r + 2.0 * h < fam.epsilon) {
        return Err(Error::domain("stencil leaves the family radius"));
    }
    let n = fam.base.n();
    let inputs = format!("n={n}; tau=[{}]; h={h}", fmt_tau(tau));
    let wp = fam.wp_metric(tau)?;
    let ha = ddc_hessian(&|t: &[Complex64]| family_log_det(fam, t, 1, HodgeComponent::Full), tau, h)?;
    let hb = ddc_hessian(&|t: &[Complex64]| family_log_hol_norm(fam, t), tau, h)?;
    let mut out = Vec::new();
    let res = max_abs(&(&ha.matrix + &wp));
    out.push(
        VerificationReport::new("moduli.izs1_q1", inputs.clone(), res, POTENTIAL_TOL)
            .note(format!("hess_diag={}", diag_string(&ha.matrix)))
            .with_fd_error(ha.error_estimate),
    );
    let res = max_abs(&(&ha.matrix - &hb.matrix));
    out.push(
        VerificationReport::new("moduli.com1", inputs.clone(), res, POTENTIAL_TOL)
            .note(format!("hess_log_norm_diag={}", diag_string(&hb.matrix)))
            .with_fd_error(ha.error_estimate + hb.error_estimate),
    );
    let hc = if n == 1 {
        ha.clone()
    } else {
        ddc_hessian(&|t: &[Complex64]| family_log_det(fam, t, n, HodgeComponent::Full), tau, h)?
    };
    out.push(
        VerificationReport::new("moduli.enr_qn", inputs.clone(), max_abs(&(&hc.matrix + &wp)), POTENTIAL_TOL)
            .with_fd_error(hc.error_estimate),
    );
    if n >= 2 {
        let hm = ddc_hessian(&|t: &[Complex64]| family_log_det(fam, t, 1, HodgeComponent::DoublePrime), tau, h)?;
        let t = deform_torus(fam, tau)?;
        let kappa = transported_basis(fam, tau)?;
        let m = fam.dim();
        let mut trace = CMat::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let comp = compose_beltrami(&kappa[i], &kappa[j], t.metric())?;
                trace[(i, j)] = extend_trace(&comp, 2)? * t.volume();
            }
        }
        out.push(
            VerificationReport::new("moduli.main_q1", inputs.clone(), max_abs(&(&hm.matrix + &trace)), POTENTIAL_TOL)
                .with_fd_error(hm.error_estimate),
        );
    }
    let (cst, misfit) = fitted_constant(&ha.matrix, &wp);
    out.push(
        VerificationReport::new("moduli.fitted_constant", inputs, misfit, POTENTIAL_TOL)
            .note(format!("constant={cst:.9}"))
            .with_fd_error(ha.error_estimate / wp.norm()),
    );
    Ok(out)
}

fn diag_string(m: &CMat) -> String {
    (0..m.nrows()).map(|i| format!("{:.6}", m[(i, i)].re)).collect::<Vec<_>>().join(",")
}

/// Spread of the fitted constant `c` in `Hess log det Δ₁ ≈ −c·WP` over a set
/// of base points.
pub fn fitted_constant_stability(fam: &TorusFamily, points: &[Vec<Complex64>], h: f64) -> Result<VerificationReport> {
    let mut consts = Vec::with_capacity(points.len());
    let mut fd = 0.0f64;
    for tau in points {
        let wp = fam.wp_metric(tau)?;
        let hs = ddc_hessian(&|t: &[Complex64]| family_log_det(fam, t, 1, HodgeComponent::Full), tau, h)?;
        fd = fd.max(hs.error_estimate / wp.norm());
        consts.push(fitted_constant(&hs.matrix, &wp).0);
    }
    let lo = consts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = consts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let list: Vec<String> = consts.iter().map(|x| format!("{x:.9}")).collect();
    Ok(VerificationReport::new(
        "moduli.fitted_constant_stability",
        format!("n={}; points={}", fam.base.n(), points.len()),
        hi - lo,
        1e-3,
    )
    .note(format!("constants={}", list.join(",")))
    .with_fd_error(2.0 * fd))
}

/// Checks in the elliptic modulus itself for `C/(Z + τZ)` with metric `|dz|²`:
/// `Hess log det Δ = −1/(2y²)` and `Hess log det Δ = 2 Hess log Im τ`.
pub fn modulus_potential_checks(tau0: Complex64, h: f64) -> Result<Vec<VerificationReport>> {
    if !(tau0.im > 4.0 * h) {
        return Err(Error::domain("base modulus too close to the real axis"));
    }
    let inputs = format!("tau0={}; h={h}", crate::modular::fmt_complex(tau0));
    let ld = |t: &[Complex64]| torus_log_det_from_zeta(t[0]);
    let lim = |t: &[Complex64]| Ok(t[0].im.ln());
    let ha = ddc_hessian(&ld, &[tau0], h)?;
    let hb = ddc_hessian(&lim, &[tau0], h)?;
    let a = ha.matrix[(0, 0)].re;
    let b = hb.matrix[(0, 0)].re;
    let closed = -1.0 / (2.0 * tau0.im * tau0.im);
    Ok(vec![
        VerificationReport::new("moduli.modulus_hessian", inputs.clone(), (a - closed).abs(), 1e-5)
            .note(format!("hessian={a:.12}; closed_form={closed:.12}"))
            .with_fd_error(ha.error_estimate),
        VerificationReport::new("moduli.klf_modulus", inputs, (a - 2.0 * b).abs(), 1e-5)
            .note(format!("hess_log_det={a:.12}; hess_log_im_tau={b:.12}"))
            .with_fd_error(ha.error_estimate + 2.0 * hb.error_estimate),
    ])
}

/// `⟨θ¹∧…∧θⁿ, same⟩` relative to the base, for the holomorphic family of
/// forms `dw¹∧…∧dwⁿ`; equals `|det(I − Ψ̄Ψ)|`.
pub fn forms_ratio(fam: &TorusFamily, tau: &[Complex64]) -> Result<f64> {
    let t = deform_torus(fam, tau)?;
    Ok(holomorphic_form_norm(&t) / holomorphic_form_norm(&fam.base))
}

/// Quadratic coefficient of the norm ratio (expected `−δ`), its linear
/// coefficients (expected 0) and the bound `ratio ≤ 1` on a grid of the
/// ball of radius `ε/2`.
pub fn hol_norm_expansion_check(fam: &TorusFamily, h: f64) -> Result<Vec<VerificationReport>> {
    if !(h > 0.0 && h < fam.epsilon / 4.0) {
        return Err(Error::domain(format!("step {h} must lie in (0, epsilon/4)")));
    }
    let m = fam.dim();
    let zero = vec![c(0.0, 0.0); m];
    let inputs = format!("n={}; N={m}; h={h}", fam.base.n());
    let f = |t: &[Complex64]| forms_ratio(fam, t);
    let hess = ddc_hessian(&f, &zero, h)?;
    let quad = max_abs(&(&hess.matrix + CMat::identity(m, m)));
    let mut lin = 0.0f64;
    for k in 0..m {
        for dir in [c(h, 0.0), c(0.0, h)] {
            let p = unit(m, k, dir);
            let q: Vec<Complex64> = p.iter().map(|z| -z).collect();
            lin = lin.max(((f(&p)? - f(&q)?) / (2.0 * h)).abs());
        }
    }
    let radius = fam.epsilon / 2.0;
    let levels = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let dims = 2 * m;
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0usize;
    let total = levels.len().pow(dims as u32);
    for idx in 0..total {
        let mut rem = idx;
        let mut tau = vec![c(0.0, 0.0); m];
        for d in 0..dims {
            let v = levels[rem % levels.len()] * radius;
            rem /= levels.len();
            if d % 2 == 0 {
                tau[d / 2].re = v;
            } else {
                tau[d / 2].im = v;
            }
        }
        let r = tau.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if r == 0.0 || r > radius * (1.0 + 1e-12) {
            continue;
        }
        let ratio = f(&tau)?;
        worst = worst.max(ratio - 1.0);
        count += 1;
    }
    Ok(vec![
        VerificationReport::new("moduli.forms_quadratic", inputs.clone(), quad, 1e-5)
            .note(format!("coefficients_diag={}", diag_string(&hess.matrix)))
            .with_fd_error(hess.error_estimate),
        VerificationReport::new("moduli.forms_linear", inputs.clone(), lin, 1e-8),
        VerificationReport::new("moduli.forms_inequality", format!("{inputs}; grid={count}"), worst.max(0.0), 0.0)
            .note(format!("max_ratio_minus_one={worst:.3e}")),
    ])
}

/// Constancy of the Kähler class along a path: maximal deviation of
/// `Im g` in fixed lattice coordinates, and central-difference derivatives
/// of `Im g` and of the WP metric at the origin.
pub fn im_g_constancy_check(fam: &TorusFamily, path: &[Vec<Complex64>], h: f64) -> Result<Vec<VerificationReport>> {
    let base = fam.base.polarization().clone();
    let inputs = format!("n={}; N={}; path={}", fam.base.n(), fam.dim(), path.len());
    let mut dev = 0.0f64;
    for tau in path {
        let t = deform_torus(fam, tau)?;
        dev = dev.max((t.polarization() - &base).abs().max());
    }
    let m = fam.dim();
    let mut d_img = 0.0f64;
    let mut d_wp = 0.0f64;
    for k in 0..m {
        for dir in [c(h, 0.0), c(0.0, h)] {
            let p = unit(m, k, dir);
            let q: Vec<Complex64> = p.iter().map(|z| -z).collect();
            let lp = deform_torus(fam, &p)?.polarization().clone();
            let lq = deform_torus(fam, &q)?.polarization().clone();
            d_img = d_img.max((lp - lq).abs().max() / (2.0 * h));
            let gp = fam.wp_metric(&p)?;
            let gq = fam.wp_metric(&q)?;
            d_wp = d_wp.max(max_abs(&(gp - gq)) / (2.0 * h));
        }
    }
    Ok(vec![
        VerificationReport::new("moduli.im_g_deviation", inputs.clone(), dev, 1e-8),
        VerificationReport::new("moduli.im_g_derivative", format!("{inputs}; h={h}"), d_img, 1e-8),
        VerificationReport::new("moduli.wp_derivative", format!("{inputs}; h={h}"), d_wp, 1e-8),
    ])
}

/// Radial path `τ = s·u`, `s ∈ [0, r]`, along a fixed unit direction.
pub fn radial_path(dim: usize, r: f64, steps: usize) -> Vec<Vec<Complex64>> {
    let u: Vec<Complex64> = (0..dim).map(|k| c(1.0 + k as f64, 0.5 - 0.25 * k as f64)).collect();
    let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (0..=steps).map(|s| u.iter().map(|z| z * (r * s as f64 / steps as f64 / norm)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RMat;

    fn one() -> TorusFamily {
        TorusFamily::reference(1, c(0.0, 1.0)).unwrap()
    }

    #[test]
    fn origin_is_the_base() {
        let f = one();
        let t = deform_torus(&f, &[c(0.0, 0.0)]).unwrap();
        assert!(max_abs(&(t.periods() - f.base().periods())) == 0.0);
        assert!(max_abs(&(t.metric() - f.base().metric())) < 1e-15);
    }

    #[test]
    fn one_dimensional_modulus() {
        let f = one();
        for mu in [0.01, -0.05, 0.1] {
            let t = deform_torus(&f, &[c(mu, 0.0)]).unwrap();
            let p = t.periods();
            let tau = p[(0, 1)] / p[(0, 0)];
            let expect = c(0.0, 1.0) * (1.0 - mu) / (1.0 + mu);
            assert!((tau - expect).norm() < 1e-12);
            assert!((t.polarization() - f.base().polarization()).abs().max() < 1e-14);
        }
        for re in [-0.15, 0.0, 0.15] {
            for im in [-0.15, 0.1] {
                let t = deform_torus(&f, &[c(re, im)]).unwrap();
                let p = t.periods();
                assert!((p[(0, 1)] / p[(0, 0)]).im > 0.0);
            }
        }
    }

    #[test]
    fn holomorphic_form_norms() {
        let sq = FlatTorus::from_moduli(&[c(0.0, 1.0)]).unwrap();
        assert!((normalized_holomorphic_form(&sq, 0).unwrap().1 - 1.0).abs() < 1e-15);
        let sk = FlatTorus::from_moduli(&[c(0.3, 1.2)]).unwrap();
        assert!((normalized_holomorphic_form(&sk, 0).unwrap().1 - 1.2).abs() < 1e-12);
        let pr = FlatTorus::from_moduli(&[c(0.0, 1.0), c(0.0, 2.0)]).unwrap();
        assert!((normalized_holomorphic_form(&pr, 0).unwrap().1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wp_is_identity_at_origin_and_positive_nearby() {
        let f = TorusFamily::reference(2, c(0.0, 1.0)).unwrap();
        let g = f.wp_metric(&[c(0.0, 0.0); 3]).unwrap();
        assert!(max_abs(&(g - CMat::identity(3, 3))) < 1e-14);
        let g = f.wp_metric(&[c(0.05, -0.02), c(0.01, 0.03), c(-0.04, 0.0)]).unwrap();
        assert!(max_abs(&(&g - g.adjoint())) < 1e-14);
        assert!(hermitian_cholesky(&g).is_ok());
    }

    #[test]
    fn hessian_examples() {
        let quad = |t: &[Complex64]| Ok(t[0].norm_sqr());
        let r = ddc_hessian(&quad, &[c(0.3, -0.2)], 1e-3).unwrap();
        assert!((r.matrix[(0, 0)] - c(1.0, 0.0)).norm() < 1e-10);
        let cubic = |t: &[Complex64]| Ok((t[0] * t[0] * t[0]).re);
        let r = ddc_hessian(&cubic, &[c(0.3, -0.2)], 1e-3).unwrap();
        assert!(r.matrix[(0, 0)].norm() < 1e-8);
        let lim = |t: &[Complex64]| Ok(t[0].im.ln());
        let r = ddc_hessian(&lim, &[c(0.0, 1.0)], 1e-3).unwrap();
        assert!((r.matrix[(0, 0)] - c(-0.25, 0.0)).norm() < 1e-7);
        // off-diagonal: f = τ₁ τ̄₂ + c.c. has Hessian entry (0,1) = 1
        let mixed = |t: &[Complex64]| Ok(2.0 * (t[0] * t[1].conj()).re);
        let r = ddc_hessian(&mixed, &[c(0.1, 0.0), c(0.0, 0.2)], 1e-3).unwrap();
        assert!((r.matrix[(0, 1)] - c(1.0, 0.0)).norm() < 1e-9);
        assert!((r.matrix[(1, 0)] - c(1.0, 0.0)).norm() < 1e-9);
        let bad = |_: &[Complex64]| Ok(f64::NAN);
        assert!(ddc_hessian(&bad, &[c(0.0, 0.0)], 1e-3).is_err());
    }

    #[test]
    fn one_dimensional_potentials() {
        let f = one();
        let reps = verify_potential_identities(&f, &[c(0.0, 0.0)], DEFAULT_STEP).unwrap();
        for r in &reps {
            assert!(r.passed(), "{r:?}");
        }
        let reps = modulus_potential_checks(c(0.0, 1.0), DEFAULT_STEP).unwrap();
        assert!(reps.iter().all(|r| r.passed()), "{reps:?}");
    }

    #[test]
    fn forms_expansion_in_one_dimension() {
        let reps = hol_norm_expansion_check(&one(), 1e-3).unwrap();
        assert!(reps.iter().all(|r| r.passed()), "{reps:?}");
    }

    #[test]
    fn class_is_constant() {
        let f = TorusFamily::reference(2, c(0.1, 1.1)).unwrap();
        let reps = im_g_constancy_check(&f, &radial_path(3, 0.05, 5), 1e-3).unwrap();
        assert!(reps.iter().all(|r| r.passed()), "{reps:?}");
        let base: RMat = f.base().polarization().clone();
        assert!((base.abs().max() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_symmetric_direction_breaks_polarization() {
        let f = TorusFamily::reference(2, c(0.0, 1.0)).unwrap();
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = c(0.05, 0.0);
        assert!(matches!(
            deform_by(f.base(), &BeltramiMatrix::new(m).unwrap()),
            Err(Error::Polarization(_))
        ));
    }
}
