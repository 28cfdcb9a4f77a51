//! Trigonometric-polynomial Beltrami calculus on a flat torus: `∂̄`, `∂̄*`,
//! the Green operator, the bracket of vector-valued `(0,1)`-forms and the
//! Kuranishi fixed-point iteration.
//!
//! A section of `Λ^{0,q} ⊗ V` is a finite map from characters `k` (integer
//! vectors of length `2n`, the exponent `2πi⟨k, x⟩` in real lattice
//! coordinates) to `C(n,q) × dim V` coefficient matrices. Beltrami sections
//! use `V = T^{1,0}`, so the coefficient at a character is `Ψᵀ`: rows are the
//! antiholomorphic form index, columns the vector component.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{form_gram, wedge_matrix, BeltramiMatrix};
use crate::linalg::{binomial, c, inverse, multi_indices, CMat};
use crate::summation::NeumaierSum;
use crate::torus::FlatTorus;

/// Largest `ℓ∞` character radius a section may carry.
pub const MAX_FOURIER_RADIUS: u32 = 32;

/// Coordinate radius below which the fixed-point iteration is attempted.
pub const KURANISHI_EPSILON: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct FourierSection {
    n: usize,
    q: usize,
    components: usize,
    radius: u32,
    coeffs: BTreeMap<Vec<i64>, CMat>,
}

/// `(0,1)`-forms with values in `T^{1,0}`.
pub type FourierBeltrami = FourierSection;

fn linf(k: &[i64]) -> u32 {
    k.iter().map(|x| x.unsigned_abs() as u32).max().unwrap_or(0)
}

impl FourierSection {
    pub fn zero(n: usize, q: usize, components: usize, radius: u32) -> Result<Self> {
        if n == 0 || q > n || components == 0 {
            return Err(Error::dim(format!("invalid section shape n={n} q={q} components={components}")));
        }
        if radius > MAX_FOURIER_RADIUS {
            return Err(Error::Truncation(format!("radius {radius} exceeds the budget {MAX_FOURIER_RADIUS}")));
        }
        Ok(FourierSection { n, q, components, radius, coeffs: BTreeMap::new() })
    }

    /// Scalar function (degree 0, one component).
    pub fn scalar(n: usize, radius: u32) -> Result<Self> {
        Self::zero(n, 0, 1, radius)
    }

    pub fn beltrami(n: usize, radius: u32) -> Result<Self> {
        Self::zero(n, 1, n, radius)
    }

    /// Constant Beltrami section from a matrix `Ψ[k][l] = φᵏ_l̄`.
    pub fn from_beltrami(b: &BeltramiMatrix) -> Self {
        let n = b.n();
        let mut s = FourierSection { n, q: 1, components: n, radius: 0, coeffs: BTreeMap::new() };
        s.coeffs.insert(vec![0; 2 * n], b.entries().transpose());
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.q
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, &CMat)> {
        self.coeffs.iter()
    }

    pub fn coefficient(&self, k: &[i64]) -> Option<&CMat> {
        self.coeffs.get(k)
    }

    /// Beltrami matrix `Ψ` at a character (zero if absent).
    pub fn beltrami_at(&self, k: &[i64]) -> CMat {
        self.coeffs.get(k).map(|m| m.transpose()).unwrap_or_else(|| CMat::zeros(self.components, binomial(self.n, self.q)))
    }

    fn shape(&self) -> (usize, usize) {
        (binomial(self.n, self.q), self.components)
    }

    /// Adds `coeff` at character `k`.
    pub fn insert(&mut self, k: Vec<i64>, coeff: CMat) -> Result<()> {
        if k.len() != 2 * self.n {
            return Err(Error::dim(format!("character of length {} on a rank-{} lattice", k.len(), 2 * self.n)));
        }
        if (coeff.nrows(), coeff.ncols()) != self.shape() {
            return Err(Error::dim(format!(
                "coefficient is {}x{}, expected {:?}",
                coeff.nrows(),
                coeff.ncols(),
                self.shape()
            )));
        }
        if linf(&k) > self.radius {
            return Err(Error::Truncation(format!("character {k:?} lies outside radius {}", self.radius)));
        }
        match self.coeffs.get_mut(&k) {
            Some(m) => *m += coeff,
            None => {
                self.coeffs.insert(k, coeff);
            }
        }
        Ok(())
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if (self.n, self.q, self.components) != (other.n, other.q, other.components) {
            return Err(Error::dim("sections have different shapes"));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let mut out = self.clone();
        out.radius = self.radius.max(other.radius);
        for (k, m) in &other.coeffs {
            out.insert(k.clone(), m.clone())?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(c(-1.0, 0.0)))
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for m in out.coeffs.values_mut() {
            *m *= s;
        }
        out
    }

    /// Drops characters outside `radius`.
    pub fn truncated(&self, radius: u32) -> Self {
        let mut out = self.clone();
        out.radius = radius.min(self.radius);
        out.coeffs.retain(|k, _| linf(k) <= radius);
        out
    }

    /// Coefficient `ℓ²` norm (Parseval, coordinate coefficients).
    pub fn norm(&self) -> f64 {
        self.coeffs
            .values()
            .flat_map(|m| m.iter().map(|z| z.norm_sqr()))
            .collect::<NeumaierSum>()
            .value()
            .sqrt()
    }

    /// Value at real lattice coordinates `x`.
    pub fn evaluate(&self, x: &[f64]) -> CMat {
        let (r, cc) = self.shape();
        let mut out = CMat::zeros(r, cc);
        for (k, m) in &self.coeffs {
            let arg: f64 = k.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum();
            out += m * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * arg);
        }
        out
    }

    fn prune(mut self) -> Self {
        self.coeffs.retain(|_, m| m.iter().any(|z| *z != c(0.0, 0.0)));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalculusOp {
    Dbar,
    DbarStar,
    Green,
    HarmonicProj,
}

fn check_torus(t: &FlatTorus, f: &FourierSection) -> Result<()> {
    if t.n() != f.n {
        return Err(Error::dim(format!("section of dimension {} on a torus of dimension {}", f.n, t.n())));
    }
    Ok(())
}

fn xi_of(t: &FlatTorus, k: &[i64]) -> Vec<Complex64> {
    t.character_multipliers(k).1
}

pub fn dbar(t: &FlatTorus, f: &FourierSection) -> Result<FourierSection> {
    check_torus(t, f)?;
    if f.q >= f.n {
        return Err(Error::domain(format!("∂̄ of a degree-{} form on dimension {}", f.q, f.n)));
    }
    let mut out = FourierSection::zero(f.n, f.q + 1, f.components, f.radius)?;
    for (k, m) in &f.coeffs {
        out.insert(k.clone(), wedge_matrix(&xi_of(t, k), f.q) * m)?;
    }
    Ok(out.prune())
}

/// Pointwise `g`-adjoint of `ξ∧` from `Λ^{q+1}` to `Λ^q`.
fn wedge_adjoint(t: &FlatTorus, xi: &[Complex64], q: usize) -> Result<CMat> {
    let w = wedge_matrix(xi, q);
    let g0 = form_gram(t.metric(), q)?;
    let g1 = form_gram(t.metric(), q + 1)?;
    Ok(inverse(&g0.transpose(), "form Gram")? * w.adjoint() * g1.transpose())
}

pub fn dbar_star(t: &FlatTorus, f: &FourierSection) -> Result<FourierSection> {
    check_torus(t, f)?;
    if f.q == 0 {
        return Err(Error::domain("∂̄* of a function"));
    }
    let mut out = FourierSection::zero(f.n, f.q - 1, f.components, f.radius)?;
    for (k, m) in &f.coeffs {
        out.insert(k.clone(), wedge_adjoint(t, &xi_of(t, k), f.q - 1)? * m)?;
    }
    Ok(out.prune())
}

/// Divides each nonzero character block by its `∂̄`-Laplace eigenvalue
/// `|ξ|²_g` and drops the harmonic block.
pub fn green(t: &FlatTorus, f: &FourierSection) -> Result<FourierSection> {
    check_torus(t, f)?;
    let mut out = FourierSection::zero(f.n, f.q, f.components, f.radius)?;
    for (k, m) in &f.coeffs {
        if k.iter().all(|&x| x == 0) {
            continue;
        }
        let lam = t.covector_norm_sq(&xi_of(t, k));
        out.insert(k.clone(), m / c(lam, 0.0))?;
    }
    Ok(out)
}

pub fn harmonic_proj(f: &FourierSection) -> FourierSection {
    let mut out = f.clone();
    out.coeffs.retain(|k, _| k.iter().all(|&x| x == 0));
    out
}

/// `□ = ∂̄∂̄* + ∂̄*∂̄` applied blockwise.
pub fn laplacian(t: &FlatTorus, f: &FourierSection) -> Result<FourierSection> {
    check_torus(t, f)?;
    let mut out = FourierSection::zero(f.n, f.q, f.components, f.radius)?;
    for (k, m) in &f.coeffs {
        let lam = t.covector_norm_sq(&xi_of(t, k));
        out.insert(k.clone(), m * c(lam, 0.0))?;
    }
    Ok(out.prune())
}

pub fn fourier_calculus(t: &FlatTorus, op: CalculusOp, f: &FourierSection) -> Result<FourierSection> {
    match op {
        CalculusOp::Dbar => dbar(t, f),
        CalculusOp::DbarStar => dbar_star(t, f),
        CalculusOp::Green => green(t, f),
        CalculusOp::HarmonicProj => {
            check_torus(t, f)?;
            Ok(harmonic_proj(f))
        }
    }
}

fn check_beltrami(f: &FourierSection) -> Result<()> {
    if f.q != 1 || f.components != f.n {
        return Err(Error::dim("expected a (0,1)-form with values in T^{1,0}"));
    }
    Ok(())
}

/// `B(f, h)ᵏ_{ab} = Σ_μ (f^μ_ā ∂_μ hᵏ_b̄ − f^μ_b̄ ∂_μ hᵏ_ā)` for `a < b`.
fn half_bracket(t: &FlatTorus, f: &FourierSection, h: &FourierSection, out: &mut FourierSection) -> Result<()> {
    let n = f.n;
    let pairs = multi_indices(n, 2);
    for (kh, mh) in &h.coeffs {
        let eta = t.character_multipliers(kh).0;
        // ∂_μ hᵏ_b̄ is eta[μ]·mh[b][k]
        for (kf, mf) in &f.coeffs {
            let mut block = CMat::zeros(pairs.len(), n);
            for (row, ab) in pairs.iter().enumerate() {
                let (a, b) = (ab[0], ab[1]);
                let fa: Complex64 = (0..n).map(|mu| mf[(a, mu)] * eta[mu]).sum();
                let fb: Complex64 = (0..n).map(|mu| mf[(b, mu)] * eta[mu]).sum();
                for k in 0..n {
                    block[(row, k)] = fa * mh[(b, k)] - fb * mh[(a, k)];
                }
            }
            let key: Vec<i64> = kf.iter().zip(kh).map(|(x, y)| x + y).collect();
            out.insert(key, block)?;
        }
    }
    Ok(())
}

/// `[f, h] = B(f, h) + B(h, f)`, symmetric in its arguments; the supports
/// add, so nothing is truncated.
pub fn bracket(t: &FlatTorus, f: &FourierSection, h: &FourierSection) -> Result<FourierSection> {
    check_beltrami(f)?;
    check_beltrami(h)?;
    f.same_shape(h)?;
    check_torus(t, f)?;
    let mut out = FourierSection::zero(f.n, 2.min(f.n), f.n, f.radius + h.radius)?;
    if f.n < 2 {
        return Ok(out);
    }
    half_bracket(t, f, h, &mut out)?;
    half_bracket(t, h, f, &mut out)?;
    Ok(out.prune())
}

/// `½[φ, φ] = B(φ, φ)`.
fn quadratic(t: &FlatTorus, phi: &FourierSection) -> Result<FourierSection> {
    Ok(bracket(t, phi, phi)?.scaled(c(0.5, 0.0)))
}

/// `‖∂̄φ − ½[φ, φ]‖` in the coefficient norm.
pub fn integrability_residual(t: &FlatTorus, phi: &FourierSection) -> Result<f64> {
    check_beltrami(phi)?;
    if phi.n < 2 {
        return Ok(0.0);
    }
    Ok(dbar(t, phi)?.sub(&quadratic(t, phi)?)?.norm())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KuranishiSolution {
    pub tau: Vec<Complex64>,
    pub phi: FourierSection,
    pub iterations: usize,
    /// `‖∂̄*φ‖`.
    pub gauge_residual: f64,
    /// `‖∂̄φ − ½[φ, φ]‖`.
    pub residual: f64,
    /// `‖φ − lin − ½∂̄*G[φ, φ]‖` after truncation.
    pub fixed_point_residual: f64,
    /// Last ratio of successive update norms (0 when the first update vanishes).
    pub contraction_ratio: f64,
}

fn linear_term(basis: &[FourierSection], tau: &[Complex64]) -> Result<FourierSection> {
    if basis.is_empty() || basis.len() != tau.len() {
        return Err(Error::dim(format!("{} basis elements for {} coordinates", basis.len(), tau.len())));
    }
    let mut lin = basis[0].scaled(tau[0]);
    for (b, &s) in basis.iter().zip(tau).skip(1) {
        lin = lin.add(&b.scaled(s))?;
    }
    Ok(lin)
}

fn iterate(
    t: &FlatTorus,
    lin: &FourierSection,
    truncation: Option<u32>,
    tol: f64,
    max_iter: usize,
) -> Result<(FourierSection, usize, f64)> {
    let step = |phi: &FourierSection| -> Result<FourierSection> {
        if phi.n < 2 {
            // no (0,2)-forms in dimension one
            return Ok(lin.clone());
        }
        let q = quadratic(t, phi)?;
        let q = match truncation {
            Some(r) => q.truncated(r),
            None => q,
        };
        let corr = dbar_star(t, &green(t, &q)?)?;
        let mut next = lin.add(&corr)?;
        if let Some(r) = truncation {
            next = next.truncated(r);
            next.radius = r;
        }
        Ok(next)
    };
    let mut phi = lin.clone();
    let mut prev_diff = f64::NAN;
    let mut ratio = 0.0;
    for it in 1..=max_iter {
        let next = step(&phi)?;
        let diff = next.sub(&phi)?.norm();
        if prev_diff.is_finite() && prev_diff > 0.0 {
            ratio = diff / prev_diff;
        }
        phi = next;
        if diff < tol {
            return Ok((phi, it, ratio));
        }
        prev_diff = diff;
    }
    Err(Error::NonConvergence { iterations: max_iter, ratio })
}

fn finish(
    t: &FlatTorus,
    tau: &[Complex64],
    lin: &FourierSection,
    phi: FourierSection,
    iterations: usize,
    ratio: f64,
    truncation: Option<u32>,
) -> Result<KuranishiSolution> {
    let gauge_residual = dbar_star(t, &phi)?.norm();
    let residual = integrability_residual(t, &phi)?;
    if phi.n < 2 {
        let fixed = phi.sub(lin)?.norm();
        return Ok(KuranishiSolution {
            tau: tau.to_vec(),
            phi,
            iterations,
            gauge_residual,
            residual,
            fixed_point_residual: fixed,
            contraction_ratio: ratio,
        });
    }
    let mut q = quadratic(t, &phi)?;
    if let Some(r) = truncation {
        q = q.truncated(r);
    }
    let fixed = phi.sub(lin)?.sub(&dbar_star(t, &green(t, &q)?)?)?;
    Ok(KuranishiSolution {
        tau: tau.to_vec(),
        phi,
        iterations,
        gauge_residual,
        residual,
        fixed_point_residual: fixed.norm(),
        contraction_ratio: ratio,
    })
}

fn check_tau(tau: &[Complex64]) -> Result<()> {
    let r = tau.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if r >= KURANISHI_EPSILON {
        return Err(Error::domain(format!("|tau| = {r} is outside the radius {KURANISHI_EPSILON}")));
    }
    Ok(())
}

/// Fixed-point iteration of `φ = Σ τⁱφᵢ + ½∂̄*G[φ, φ]` for a harmonic basis.
pub fn kuranishi_solve(
    t: &FlatTorus,
    basis: &[FourierSection],
    tau: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<KuranishiSolution> {
    for (i, b) in basis.iter().enumerate() {
        check_beltrami(b)?;
        check_torus(t, b)?;
        if b.coeffs.keys().any(|k| k.iter().any(|&x| x != 0)) {
            return Err(Error::domain(format!("basis element {i} is not harmonic")));
        }
    }
    check_tau(tau)?;
    let lin = linear_term(basis, tau)?;
    let (phi, iterations, ratio) = iterate(t, &lin, None, tol, max_iter)?;
    finish(t, tau, &lin, phi, iterations, ratio, None)
}

/// Synthetic variant: the same iteration with an arbitrary (typically
/// non-harmonic) linear term and the quadratic term projected to characters
/// of radius at most `radius`. This exercises the contraction without any
/// geometric meaning.
pub fn kuranishi_solve_truncated(
    t: &FlatTorus,
    linear: &FourierSection,
    radius: u32,
    tol: f64,
    max_iter: usize,
) -> Result<KuranishiSolution> {
    check_beltrami(linear)?;
    check_torus(t, linear)?;
    if radius > MAX_FOURIER_RADIUS / 2 {
        return Err(Error::Truncation(format!("radius {radius} leaves no room for the bracket")));
    }
    let mut lin = linear.truncated(radius);
    lin.radius = radius;
    let (phi, iterations, ratio) = iterate(t, &lin, Some(radius), tol, max_iter)?;
    finish(t, &[], &lin, phi, iterations, ratio, Some(radius))
}

/// `(∂̄_φ f)_j̄ = ∂_j̄ f − Σ_k φᵏ_j̄ ∂_k f` for a scalar section `f`.
pub fn deformed_dbar_apply(t: &FlatTorus, phi: &FourierSection, f: &FourierSection) -> Result<FourierSection> {
    check_beltrami(phi)?;
    check_torus(t, phi)?;
    check_torus(t, f)?;
    if f.q != 0 || f.components != 1 {
        return Err(Error::dim("deformed ∂̄ acts on scalar functions"));
    }
    let n = f.n;
    let mut out = FourierSection::zero(n, 1, 1, phi.radius + f.radius)?;
    for (kf, a) in &f.coeffs {
        let (eta, xi) = t.character_multipliers(kf);
        let a = a[(0, 0)];
        out.insert(kf.clone(), CMat::from_fn(n, 1, |j, _| xi[j] * a))?;
        for (kp, m) in &phi.coeffs {
            let key: Vec<i64> = kp.iter().zip(kf).map(|(x, y)| x + y).collect();
            let block = CMat::from_fn(n, 1, |j, _| -(0..n).map(|k| m[(j, k)] * eta[k]).sum::<Complex64>() * a);
            out.insert(key, block)?;
        }
    }
    Ok(out.prune())
}
