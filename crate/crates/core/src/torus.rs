//! Flat complex tori `Cⁿ/Λ` with a constant Hermitian metric.
//!
//! Periods are stored as an `n × 2n` matrix whose columns are the lattice
//! generators in holomorphic coordinates. A point with real lattice
//! coordinates `x` sits at `z = Π x`, so `[z; z̄] = P x` with `P = [Π; Π̄]`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::GramLattice;
use crate::linalg::{c, hermitian_cholesky, inverse, is_hermitian, CMat, RMat};

#[derive(Debug, Clone)]
pub struct FlatTorus {
    n: usize,
    periods: CMat,
    metric: CMat,
    polarization: RMat,
    real_gram: RMat,
    volume: f64,
    lattice: GramLattice,
    dual: GramLattice,
    p_inv: CMat,
    frame: CMat,
}

/// Builds and validates a torus. The polarization `−Im(Πᵀ g Π̄)` is recorded
/// but not required to be integral; see [`build_polarized_torus`].
pub fn build_torus(n: usize, periods: CMat, metric: CMat) -> Result<FlatTorus> {
    if n == 0 {
        return Err(Error::dim("complex dimension must be positive"));
    }
    if periods.nrows() != n || periods.ncols() != 2 * n {
        return Err(Error::dim(format!(
            "periods are {}x{}, expected {n}x{}",
            periods.nrows(),
            periods.ncols(),
            2 * n
        )));
    }
    if metric.nrows() != n || metric.ncols() != n {
        return Err(Error::dim(format!("metric is {}x{}, expected {n}x{n}", metric.nrows(), metric.ncols())));
    }
    if !is_hermitian(&metric, 1e-12) {
        return Err(Error::NotPositiveDefinite("metric is not Hermitian".into()));
    }
    let metric = (&metric + metric.adjoint()) * c(0.5, 0.0);
    let frame = hermitian_cholesky(&metric)?;
    let mut p = CMat::zeros(2 * n, 2 * n);
    p.view_mut((0, 0), (n, 2 * n)).copy_from(&periods);
    p.view_mut((n, 0), (n, 2 * n)).copy_from(&periods.map(|z| z.conj()));
    let p_inv = inverse(&p, "real period matrix [Π; Π̄]").map_err(|_| Error::dim("periods are not R-linearly independent"))?;
    let m = periods.transpose() * &metric * periods.map(|z| z.conj());
    let real_gram = m.map(|z| z.re);
    let real_gram = (&real_gram + real_gram.transpose()) * 0.5;
    let polarization = m.map(|z| -z.im);
    let polarization = (&polarization - polarization.transpose()) * 0.5;
    let lattice = GramLattice::new(real_gram.clone())?;
    let dual = lattice.dual()?;
    let volume = lattice.det_gram().sqrt();
    Ok(FlatTorus { n, periods, metric, polarization, real_gram, volume, lattice, dual, p_inv, frame })
}

/// As [`build_torus`], additionally requiring an integral polarization.
pub fn build_polarized_torus(n: usize, periods: CMat, metric: CMat) -> Result<FlatTorus> {
    let t = build_torus(n, periods, metric)?;
    if !t.polarization_is_integral(1e-6) {
        return Err(Error::Polarization(format!(
            "Im g on lattice pairs is not integral: {:?}",
            t.polarization.as_slice()
        )));
    }
    Ok(t)
}

impl FlatTorus {
    /// Product of elliptic curves `C/(Z + τₖZ)` with the Euclidean metric.
    pub fn from_moduli(taus: &[Complex64]) -> Result<FlatTorus> {
        let n = taus.len();
        let mut periods = CMat::zeros(n, 2 * n);
        for (k, tau) in taus.iter().enumerate() {
            periods[(k, k)] = c(1.0, 0.0);
            periods[(k, n + k)] = *tau;
        }
        build_torus(n, periods, CMat::identity(n, n))
    }

    /// Principally polarized torus with period matrix `[I | Z]`, `Z` symmetric
    /// with `Im Z > 0`, and metric `(Im Z)⁻¹`. Such tori have unit volume.
    pub fn from_siegel(z: &CMat) -> Result<FlatTorus> {
        let n = z.nrows();
        if z.ncols() != n {
            return Err(Error::dim("Siegel matrix must be square"));
        }
        if (z - z.transpose()).iter().any(|w| w.norm() > 1e-12 * (1.0 + w.norm())) {
            return Err(Error::Symmetry("Siegel matrix is not symmetric".into()));
        }
        let y = z.map(|w| c(w.im, 0.0));
        let metric = inverse(&y, "Im Z")?;
        let mut periods = CMat::zeros(n, 2 * n);
        periods.view_mut((0, 0), (n, n)).copy_from(&CMat::identity(n, n));
        periods.view_mut((0, n), (n, n)).copy_from(z);
        build_polarized_torus(n, periods, metric)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn periods(&self) -> &CMat {
        &self.periods
    }

    pub fn metric(&self) -> &CMat {
        &self.metric
    }

    /// `L = −Im(Πᵀ g Π̄)`, the class of the Kähler form on lattice pairs.
    pub fn polarization(&self) -> &RMat {
        &self.polarization
    }

    pub fn real_gram(&self) -> &RMat {
        &self.real_gram
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn lattice(&self) -> &GramLattice {
        &self.lattice
    }

    /// Lattice of characters, Gram `G⁻¹`.
    pub fn dual_lattice(&self) -> &GramLattice {
        &self.dual
    }

    /// Lower Cholesky factor `L` of the metric, `g = L L†`.
    pub fn frame(&self) -> &CMat {
        &self.frame
    }

    pub fn p_inverse(&self) -> &CMat {
        &self.p_inv
    }

    pub fn polarization_is_integral(&self, tol: f64) -> bool {
        self.polarization.iter().all(|x| (x - x.round()).abs() <= tol)
    }

    /// Multipliers of `∂/∂zᵏ` and `∂/∂z̄ᵏ` on the character `exp(2πi⟨k, x⟩)`.
    pub fn character_multipliers(&self, k: &[i64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.n;
        let mut row = vec![c(0.0, 0.0); 2 * n];
        for (j, r) in row.iter_mut().enumerate() {
            let mut acc = c(0.0, 0.0);
            for (i, &ki) in k.iter().enumerate() {
                acc += self.p_inv[(i, j)] * ki as f64;
            }
            *r = acc * c(0.0, 2.0 * PI);
        }
        (row[..n].to_vec(), row[n..].to_vec())
    }

    /// Eigenvalue `4π² kᵀG⁻¹k` of the Laplacian on the character `k`.
    pub fn character_eigenvalue(&self, k: &[i64]) -> f64 {
        4.0 * PI * PI * self.dual.norm(k)
    }

    /// Squared length `|ξ|² = ξᵀ g⁻¹ ξ̄` of a `(0,1)` covector.
    pub fn covector_norm_sq(&self, xi: &[Complex64]) -> f64 {
        let n = self.n;
        let v = CMat::from_fn(n, 1, |i, _| xi[i]);
        // solve with the Cholesky factor: |L⁻¹ ξ̄|²
        let w = self.frame.clone().solve_lower_triangular(&v.map(|z| z.conj())).expect("frame is invertible");
        w.iter().map(|z| z.norm_sqr()).sum()
    }
}
