//! Fibrewise exterior algebra of a flat torus: Beltrami matrices, their
//! compositions and extensions to `(0,q)`-forms, the Hodge star, and the
//! trace identities built from them.
//!
//! Coordinate conventions. A Beltrami matrix stores `Ψ[k][l] = φᵏ_l̄`. With
//! `g = L L†`, orthonormal coordinates are `α′ = L̄⁻¹α` for `(0,1)`-covectors,
//! `a′ = L⁻¹a` for `(1,0)`-covectors and `Ψ′ = Lᵀ Ψ (L†)⁻¹` for Beltrami
//! matrices. The `g`-inner product of `(0,1)`-covectors is `αᵀ g⁻¹ β̄`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{binomial, c, compound, hermitian_cholesky, index_of, inverse, max_abs, multi_indices, sort_sign, CMat};
use crate::report::VerificationReport;

#[derive(Debug, Clone, PartialEq)]
pub struct BeltramiMatrix {
    entries: CMat,
}

impl BeltramiMatrix {
    /// Rejects matrices with `det A_φ = det(I − φ̄φ) = 0`.
    pub fn new(entries: CMat) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::dim("Beltrami matrix must be square and nonempty"));
        }
        let b = BeltramiMatrix { entries };
        let det = b.a_matrix().determinant();
        if det.norm() < 1e-12 {
            return Err(Error::IllConditioned("det A_phi vanishes".into()));
        }
        Ok(b)
    }

    pub fn identity(n: usize) -> Self {
        // det A_φ = 0 for φ = I, so bypass the check: the identity is only
        // used as a fibre map, never as a deformation
        BeltramiMatrix { entries: CMat::identity(n, n) }
    }

    pub fn zero(n: usize) -> Self {
        BeltramiMatrix { entries: CMat::zeros(n, n) }
    }

    /// Fibre map without the deformation check.
    pub fn fibre_map(entries: CMat) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::dim("Beltrami matrix must be square and nonempty"));
        }
        Ok(BeltramiMatrix { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    /// `A_φ = [[I, φ], [φ̄, I]]`.
    pub fn a_matrix(&self) -> CMat {
        let n = self.n();
        let mut a = CMat::identity(2 * n, 2 * n);
        a.view_mut((0, n), (n, n)).copy_from(&self.entries);
        a.view_mut((n, 0), (n, n)).copy_from(&self.entries.map(|z| z.conj()));
        a
    }

    /// Lowered matrix `φ_{k̄ l̄} = Σⱼ g_{j k̄} φʲ_l̄`, i.e. `gᵀΨ`.
    pub fn lowered(&self, g: &CMat) -> CMat {
        g.transpose() * &self.entries
    }

    pub fn is_g_symmetric(&self, g: &CMat, tol: f64) -> bool {
        let low = self.lowered(g);
        max_abs(&(&low - low.transpose())) <= tol * max_abs(&low).max(1.0)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        BeltramiMatrix { entries: &self.entries * s }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberBasis {
    pub n: usize,
    pub q: usize,
    pub indices: Vec<Vec<usize>>,
}

impl FiberBasis {
    pub fn new(n: usize, q: usize) -> Result<Self> {
        if q > n {
            return Err(Error::domain(format!("degree {q} exceeds dimension {n}")));
        }
        Ok(FiberBasis { n, q, indices: multi_indices(n, q) })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberSpace {
    /// `Λ^{0,q}`.
    AntiHolomorphic { n: usize, q: usize },
    /// `Λ^{1,0} ⊗ Λ^{0,q−1}`, basis `dzⁱ ⊗ dz̄^J` with `i` major.
    Mixed { n: usize, q: usize },
    /// `Λ^{q,0}`.
    Holomorphic { n: usize, q: usize },
}

impl FiberSpace {
    pub fn dim(&self) -> usize {
        match *self {
            FiberSpace::AntiHolomorphic { n, q } | FiberSpace::Holomorphic { n, q } => binomial(n, q),
            FiberSpace::Mixed { n, q } => n * binomial(n, q - 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberOperator {
    pub domain: FiberSpace,
    pub codomain: FiberSpace,
    pub matrix: CMat,
}

impl FiberOperator {
    fn new(domain: FiberSpace, codomain: FiberSpace, matrix: CMat) -> Self {
        debug_assert_eq!(matrix.ncols(), domain.dim());
        debug_assert_eq!(matrix.nrows(), codomain.dim());
        FiberOperator { domain, codomain, matrix }
    }

    /// Endomorphism of `Λ^{0,1}` from a plain matrix.
    pub fn on_one_forms(matrix: CMat) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::dim("endomorphism matrix must be square"));
        }
        let n = matrix.nrows();
        let sp = FiberSpace::AntiHolomorphic { n, q: 1 };
        Ok(FiberOperator::new(sp, sp, matrix))
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }
}

fn check_metric(g: &CMat, n: usize) -> Result<CMat> {
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::dim(format!("metric is {}x{}, expected {n}x{n}", g.nrows(), g.ncols())));
    }
    hermitian_cholesky(g)
}

fn same_dim(a: &BeltramiMatrix, b: &BeltramiMatrix) -> Result<usize> {
    if a.n() != b.n() {
        return Err(Error::dim(format!("Beltrami dimensions {} and {} differ", a.n(), b.n())));
    }
    Ok(a.n())
}

/// `Ψ′ = Lᵀ Ψ (L†)⁻¹`; `gᵀΨ` is symmetric exactly when `Ψ′` is.
pub fn orthonormal_beltrami(phi: &BeltramiMatrix, g: &CMat) -> Result<CMat> {
    let l = check_metric(g, phi.n())?;
    let ldag_inv = inverse(&l.adjoint(), "metric frame")?;
    Ok(l.transpose() * phi.entries() * ldag_inv)
}

/// `φ ∘ ψ*` on `Λ^{0,1}` in orthonormal coordinates, where `ψ*` is the
/// `g`-adjoint of `ψ`: the matrix `Ψ′_φᵀ · conj(Ψ′_ψ)`.
pub fn compose_beltrami_orthonormal(phi: &BeltramiMatrix, psi: &BeltramiMatrix, g: &CMat) -> Result<CMat> {
    same_dim(phi, psi)?;
    let a = orthonormal_beltrami(phi, g)?;
    let b = orthonormal_beltrami(psi, g)?;
    Ok(a.transpose() * b.map(|z| z.conj()))
}

/// `φ ∘ ψ*` on `Λ^{0,1}` in the coordinate basis `dz̄ˡ`.
pub fn compose_beltrami(phi: &BeltramiMatrix, psi: &BeltramiMatrix, g: &CMat) -> Result<FiberOperator> {
    let n = same_dim(phi, psi)?;
    let on = compose_beltrami_orthonormal(phi, psi, g)?;
    let l = check_metric(g, n)?;
    let lbar = l.map(|z| z.conj());
    let lbar_inv = inverse(&lbar, "metric frame")?;
    FiberOperator::on_one_forms(&lbar * on * lbar_inv)
}

/// `ψ*` as a map `Λ^{0,1} → Λ^{1,0}` in coordinates: `L · conj(Ψ′_ψ) · L̄⁻¹`.
pub fn beltrami_adjoint(psi: &BeltramiMatrix, g: &CMat) -> Result<CMat> {
    let l = check_metric(g, psi.n())?;
    let lbar_inv = inverse(&l.map(|z| z.conj()), "metric frame")?;
    let p = orthonormal_beltrami(psi, g)?;
    Ok(&l * p.map(|z| z.conj()) * lbar_inv)
}

/// Interior product of `∂/∂z̄^a` with `dz̄^I`: sign and remaining index.
fn interior(a: usize, idx: &[usize]) -> Option<(f64, Vec<usize>)> {
    let p = idx.iter().position(|&x| x == a)?;
    let mut rest = idx.to_vec();
    rest.remove(p);
    Some((if p % 2 == 0 { 1.0 } else { -1.0 }, rest))
}

/// `dz̄^b ∧ dz̄^J` as a sign and sorted index.
fn wedge_left(b: usize, idx: &[usize]) -> Option<(f64, Vec<usize>)> {
    let mut seq = Vec::with_capacity(idx.len() + 1);
    seq.push(b);
    seq.extend_from_slice(idx);
    let (s, sorted) = sort_sign(&seq);
    if s == 0 {
        None
    } else {
        Some((s as f64, sorted))
    }
}

/// Matrix of `α ↦ ξ ∧ α` from `Λ^q` to `Λ^{q+1}`.
pub fn wedge_matrix(xi: &[Complex64], q: usize) -> CMat {
    let n = xi.len();
    let dom = multi_indices(n, q);
    let cod = multi_indices(n, q + 1);
    let mut m = CMat::zeros(cod.len(), dom.len());
    for (j, idx) in dom.iter().enumerate() {
        for (b, &x) in xi.iter().enumerate() {
            if let Some((s, out)) = wedge_left(b, idx) {
                m[(index_of(&cod, &out), j)] += x * s;
            }
        }
    }
    m
}

/// Extension of an endomorphism `B` of `Λ¹` to `Λ^q` through the contraction
/// `ω ↦ Σ_{a,b} B[b][a] dz̄ᵇ ∧ ι_a ω`.
pub fn endo_extend_matrix(b: &CMat, q: usize) -> CMat {
    let n = b.nrows();
    let basis = multi_indices(n, q);
    let mut m = CMat::zeros(basis.len(), basis.len());
    for (col, idx) in basis.iter().enumerate() {
        for &a in idx {
            let (s1, rest) = interior(a, idx).expect("a is in the index");
            for bb in 0..n {
                let coeff = b[(bb, a)];
                if coeff == c(0.0, 0.0) {
                    continue;
                }
                if let Some((s2, out)) = wedge_left(bb, &rest) {
                    m[(index_of(&basis, &out), col)] += coeff * (s1 * s2);
                }
            }
        }
    }
    m
}

fn check_degree(n: usize, q: usize) -> Result<()> {
    if q == 0 || q > n {
        return Err(Error::domain(format!("degree q = {q} outside 1..={n}")));
    }
    Ok(())
}

pub fn endo_extend(b: &FiberOperator, q: usize) -> Result<FiberOperator> {
    let n = match b.domain {
        FiberSpace::AntiHolomorphic { n, q: 1 } if b.codomain == b.domain => n,
        _ => return Err(Error::dim("endo_extend needs an endomorphism of one-forms")),
    };
    check_degree(n, q)?;
    let sp = FiberSpace::AntiHolomorphic { n, q };
    Ok(FiberOperator::new(sp, sp, endo_extend_matrix(&b.matrix, q)))
}

/// Trace of the extension to `Λ^q`; equals `C(n−1, q−1)·Tr B`.
pub fn extend_trace(b: &FiberOperator, q: usize) -> Result<Complex64> {
    Ok(endo_extend(b, q)?.trace())
}

/// `F(q, φ): dzⁱ ⊗ α ↦ φ(dzⁱ) ∧ α` from `Λ^{1,0} ⊗ Λ^{0,q−1}` to `Λ^{0,q}`.
pub fn f_operator(phi: &BeltramiMatrix, q: usize) -> Result<FiberOperator> {
    let n = phi.n();
    check_degree(n, q)?;
    let lower = multi_indices(n, q - 1);
    let upper = multi_indices(n, q);
    let mut m = CMat::zeros(upper.len(), n * lower.len());
    for i in 0..n {
        for (j, idx) in lower.iter().enumerate() {
            let col = i * lower.len() + j;
            for l in 0..n {
                let coeff = phi.entries()[(i, l)];
                if let Some((s, out)) = wedge_left(l, idx) {
                    m[(index_of(&upper, &out), col)] += coeff * s;
                }
            }
        }
    }
    Ok(FiberOperator::new(FiberSpace::Mixed { n, q }, FiberSpace::AntiHolomorphic { n, q }, m))
}

/// `ω ↦ Σ_a ψ*(dz̄ᵃ) ⊗ ι_a ω` from `Λ^{0,q}` to `Λ^{1,0} ⊗ Λ^{0,q−1}`.
pub fn adjoint_insertion(psi: &BeltramiMatrix, g: &CMat, q: usize) -> Result<FiberOperator> {
    let n = psi.n();
    check_degree(n, q)?;
    let s = beltrami_adjoint(psi, g)?;
    let lower = multi_indices(n, q - 1);
    let upper = multi_indices(n, q);
    let mut m = CMat::zeros(n * lower.len(), upper.len());
    for (col, idx) in upper.iter().enumerate() {
        for &a in idx {
            let (sg, rest) = interior(a, idx).expect("a is in the index");
            let j = index_of(&lower, &rest);
            for k in 0..n {
                m[(k * lower.len() + j, col)] += s[(k, a)] * sg;
            }
        }
    }
    Ok(FiberOperator::new(FiberSpace::AntiHolomorphic { n, q }, FiberSpace::Mixed { n, q }, m))
}

/// Coordinate Gram matrix of `Λ^{0,q}`: `⟨dz̄^I, dz̄^J⟩ = det g⁻¹[I, J]`.
pub fn form_gram(g: &CMat, q: usize) -> Result<CMat> {
    let ginv = inverse(g, "metric")?;
    Ok(compound(&ginv, q))
}

/// Signed complement map `dz̄^I ↦ sgn(I, Iᶜ) dz̄^{Iᶜ}` from `Λ^q` to `Λ^{n−q}`.
fn complement_matrix(n: usize, q: usize) -> CMat {
    let dom = multi_indices(n, q);
    let cod = multi_indices(n, n - q);
    let mut m = CMat::zeros(cod.len(), dom.len());
    for (j, idx) in dom.iter().enumerate() {
        let comp: Vec<usize> = (0..n).filter(|x| !idx.contains(x)).collect();
        let mut seq = idx.clone();
        seq.extend_from_slice(&comp);
        let (s, _) = sort_sign(&seq);
        m[(index_of(&cod, &comp), j)] = c(s as f64, 0.0);
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct HodgeStar {
    /// `∗α = matrix · conj(α)` in coordinates.
    pub operator: FiberOperator,
    /// `∗∗ = sign · id`.
    pub sign: i32,
}

/// Conjugate-linear star `Λ^{0,q} → Λ^{0,n−q}` with `α ∧ ∗β = ⟨α, β⟩ ε̄`,
/// where `ε̄` is the unit antiholomorphic volume form of the orthonormal coframe.
pub fn hodge_star_fiber(g: &CMat, q: usize) -> Result<HodgeStar> {
    let n = g.nrows();
    if q > n {
        return Err(Error::domain(format!("degree {q} exceeds dimension {n}")));
    }
    let l = check_metric(g, n)?;
    let lbar = l.map(|z| z.conj());
    let linv = inverse(&l, "metric frame")?;
    let m = compound(&lbar, n - q) * complement_matrix(n, q) * compound(&linv, q);
    let sign = if (q * (n - q)) % 2 == 0 { 1 } else { -1 };
    Ok(HodgeStar {
        operator: FiberOperator::new(
            FiberSpace::AntiHolomorphic { n, q },
            FiberSpace::AntiHolomorphic { n, q: n - q },
            m,
        ),
        sign,
    })
}

/// Coefficient of `dz̄^{1…n}` in `α ∧ β` for complementary degrees.
pub fn top_wedge(alpha: &[Complex64], q: usize, beta: &[Complex64], n: usize) -> Complex64 {
    let dom = multi_indices(n, q);
    let cod = multi_indices(n, n - q);
    let mut acc = c(0.0, 0.0);
    for (i, idx) in dom.iter().enumerate() {
        let comp: Vec<usize> = (0..n).filter(|x| !idx.contains(x)).collect();
        let mut seq = idx.clone();
        seq.extend_from_slice(&comp);
        let (s, _) = sort_sign(&seq);
        acc += alpha[i] * beta[index_of(&cod, &comp)] * s as f64;
    }
    acc
}

/// `Tr(φ₁ ∘ φ₂*) = Σ Ψ₁[k][l] conj(Ψ₂[m][j]) g[k][m] g⁻¹[l][j]`.
pub fn wp_pointwise_trace(phi1: &BeltramiMatrix, phi2: &BeltramiMatrix, g: &CMat) -> Result<Complex64> {
    same_dim(phi1, phi2)?;
    let a = orthonormal_beltrami(phi1, g)?;
    let b = orthonormal_beltrami(phi2, g)?;
    Ok((a * b.adjoint()).trace())
}

/// Fibrewise comparison of `ψ* ∘ φ` on `Λ^{1,0}` with the wedge-pairing dual
/// of `A = φ ∘ ψ*` on `Λ^{0,n−1}`, namely `Tr(A) − A∧id_{n−2}`, written in the
/// basis `∗ε̄ᵏ`. Both sides are taken in `g`-orthonormal frames.
pub fn izs_matrix_check(phi: &BeltramiMatrix, psi: &BeltramiMatrix, g: &CMat) -> Result<VerificationReport> {
    izs_residual(phi, psi, g).map(|r| {
        VerificationReport::new("exterior.izs_matrix", format!("n={}", phi.n()), r, 1e-11)
    })
}

/// Max-entry residual of the comparison in [`izs_matrix_check`].
pub fn izs_residual(phi: &BeltramiMatrix, psi: &BeltramiMatrix, g: &CMat) -> Result<f64> {
    for (name, b) in [("phi", phi), ("psi", psi)] {
        if !b.is_g_symmetric(g, 1e-10) {
            return Err(Error::Symmetry(format!("{name} is not symmetric after lowering with g")));
        }
    }
    izs_residual_unchecked(phi, psi, g)
}

/// Same comparison without the symmetry precondition (negative controls).
pub fn izs_residual_unchecked(phi: &BeltramiMatrix, psi: &BeltramiMatrix, g: &CMat) -> Result<f64> {
    let n = same_dim(phi, psi)?;
    if n < 2 {
        return Err(Error::domain("the comparison needs n ≥ 2"));
    }
    let pp = orthonormal_beltrami(phi, g)?;
    let qq = orthonormal_beltrami(psi, g)?;
    let lhs = qq.map(|z| z.conj()) * pp.transpose();
    let a = pp.transpose() * qq.map(|z| z.conj());
    let t = CMat::identity(n, n) * a.trace() - endo_extend_matrix(&a, n - 1);
    // columns: ∗ε̄ᵏ expressed in the lexicographic basis of Λ^{n−1}
    let basis = complement_matrix(n, 1);
    let rhs = basis.transpose() * t * &basis;
    Ok(max_abs(&(lhs - rhs)))
}
