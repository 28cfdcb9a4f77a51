//! Positive-definite lattices given by their Gram matrix, and short-vector
//! enumeration.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::RMat;

pub const MAX_RANK: usize = 8;
pub const DEFAULT_BUDGET: usize = 20_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GramLattice {
    d: usize,
    gram: RMat,
    det_gram: f64,
    dual_gram: RMat,
    /// Fincke–Pohst coefficients: `Q(v) = Σᵢ qᵢᵢ (vᵢ + Σ_{j>i} qᵢⱼ vⱼ)²`.
    fp: RMat,
}

/// A nonzero lattice vector in basis coordinates with its norm `vᵀ A v`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub coords: Vec<i64>,
    pub norm: f64,
}

impl GramLattice {
    pub fn new(gram: RMat) -> Result<Self> {
        let d = gram.nrows();
        if d == 0 || gram.ncols() != d {
            return Err(Error::dim(format!("Gram matrix is {}x{}", gram.nrows(), gram.ncols())));
        }
        if d > MAX_RANK {
            return Err(Error::dim(format!("rank {d} exceeds the supported maximum {MAX_RANK}")));
        }
        if gram.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Gram matrix entry".into()));
        }
        let scale = gram.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for i in 0..d {
            for j in 0..i {
                if (gram[(i, j)] - gram[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Symmetry(format!("Gram matrix entry ({i},{j}) is not symmetric")));
                }
            }
        }
        let gram = (&gram + gram.transpose()) * 0.5;
        let chol = nalgebra::Cholesky::new(gram.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("Gram matrix has a non-positive leading minor".into()))?;
        let l = chol.l();
        let det_gram: f64 = (0..d).map(|i| l[(i, i)] * l[(i, i)]).product();
        if !(det_gram > 0.0) {
            return Err(Error::NotPositiveDefinite("Gram determinant is not positive".into()));
        }
        let dual_gram = chol.inverse();
        let check = &gram * &dual_gram - RMat::identity(d, d);
        let cond = scale * dual_gram.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if check.iter().any(|x| x.abs() > 1e-12 * cond.max(1.0)) {
            return Err(Error::IllConditioned("Gram matrix inverse is inaccurate".into()));
        }
        // R = Lᵀ upper triangular with gram = Rᵀ R
        let r = l.transpose();
        let fp = DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                r[(i, i)] * r[(i, i)]
            } else if j > i {
                r[(i, j)] / r[(i, i)]
            } else {
                0.0
            }
        });
        Ok(GramLattice { d, gram, det_gram, dual_gram, fp })
    }

    pub fn rank(&self) -> usize {
        self.d
    }

    pub fn gram(&self) -> &RMat {
        &self.gram
    }

    pub fn det_gram(&self) -> f64 {
        self.det_gram
    }

    pub fn dual_gram(&self) -> &RMat {
        &self.dual_gram
    }

    pub fn dual(&self) -> Result<GramLattice> {
        GramLattice::new(self.dual_gram.clone())
    }

    pub fn scaled(&self, c: f64) -> Result<GramLattice> {
        if !(c > 0.0) {
            return Err(Error::domain("lattice scale must be positive"));
        }
        GramLattice::new(&self.gram * c)
    }

    pub fn norm(&self, v: &[i64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.d {
            let mut row = 0.0;
            for j in 0..self.d {
                row += self.gram[(i, j)] * v[j] as f64;
            }
            acc += v[i] as f64 * row;
        }
        acc
    }

    /// Visit every nonzero `v` with `Q(v) ≤ radius_sq` in a fixed traversal
    /// order (last coordinate outermost, increasing values).
    pub fn for_each_point<F: FnMut(&[i64], f64)>(&self, radius_sq: f64, budget: usize, mut visit: F) -> Result<usize> {
        let d = self.d;
        let slack = radius_sq * (1.0 + 1e-10) + 1e-300;
        let mut v = vec![0i64; d];
        let mut count = 0usize;
        self.descend(d, slack, radius_sq, &mut v, &mut count, budget, &mut visit)?;
        Ok(count)
    }

    #[allow(clippy::too_many_arguments)]
    fn descend<F: FnMut(&[i64], f64)>(
        &self,
        level: usize,
        remaining: f64,
        radius_sq: f64,
        v: &mut Vec<i64>,
        count: &mut usize,
        budget: usize,
        visit: &mut F,
    ) -> Result<()> {
        if level == 0 {
            if v.iter().all(|&x| x == 0) {
                return Ok(());
            }
            let q = self.norm(v);
            if q <= radius_sq {
                *count += 1;
                if *count > budget {
                    return Err(Error::Budget { budget });
                }
                visit(v, q);
            }
            return Ok(());
        }
        let i = level - 1;
        let mut centre = 0.0;
        for j in level..self.d {
            centre -= self.fp[(i, j)] * v[j] as f64;
        }
        let qii = self.fp[(i, i)];
        let half = (remaining.max(0.0) / qii).sqrt();
        let lo = (centre - half).ceil() as i64;
        let hi = (centre + half).floor() as i64;
        for x in lo..=hi {
            v[i] = x;
            let t = x as f64 - centre;
            let rem = remaining - qii * t * t;
            if rem < -1e-9 * radius_sq.max(1e-300) {
                continue;
            }
            self.descend(i, rem, radius_sq, v, count, budget, visit)?;
        }
        v[i] = 0;
        Ok(())
    }

    /// Nonzero points with `Q(v) ≤ radius_sq`, sorted by norm then lexicographically.
    pub fn enumerate(&self, radius_sq: f64, budget: usize) -> Result<Vec<LatticePoint>> {
        let mut pts = Vec::new();
        self.for_each_point(radius_sq, budget, |v, q| {
            pts.push(LatticePoint { coords: v.to_vec(), norm: q });
        })?;
        pts.sort_by(|a, b| a.norm.total_cmp(&b.norm).then_with(|| a.coords.cmp(&b.coords)));
        Ok(pts)
    }

    /// Length squared of the shortest nonzero vector.
    pub fn minimum(&self) -> f64 {
        // the smallest diagonal entry is an upper bound for the minimum
        let bound = (0..self.d).map(|i| self.gram[(i, i)]).fold(f64::INFINITY, f64::min);
        let mut best = f64::INFINITY;
        let _ = self.for_each_point(bound, usize::MAX, |_, q| best = best.min(q));
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grams() {
        assert!(GramLattice::new(RMat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(GramLattice::new(RMat::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0])).is_err());
        assert!(GramLattice::new(RMat::identity(9, 9)).is_err());
    }

    #[test]
    fn square_lattice_shells() {
        let l = GramLattice::new(RMat::identity(2, 2)).unwrap();
        let pts = l.enumerate(2.0, 100).unwrap();
        assert_eq!(pts.len(), 8);
        assert_eq!(pts[0].coords, vec![-1, 0]);
        assert_eq!(pts[0].norm, 1.0);
        assert!(pts[4..].iter().all(|p| p.norm == 2.0));
        assert!(matches!(l.enumerate(100.0, 10), Err(Error::Budget { .. })));
    }

    #[test]
    fn brute_force_agrees_on_skew_lattice() {
        let g = RMat::from_row_slice(3, 3, &[2.0, 0.7, -0.3, 0.7, 1.5, 0.2, -0.3, 0.2, 0.9]);
        let l = GramLattice::new(g).unwrap();
        let r2 = 6.0;
        let got = l.enumerate(r2, 100_000).unwrap();
        let mut brute = Vec::new();
        for a in -8i64..=8 {
            for b in -8i64..=8 {
                for c in -8i64..=8 {
                    let v = [a, b, c];
                    if v == [0, 0, 0] {
                        continue;
                    }
                    let q = l.norm(&v);
                    if q <= r2 {
                        brute.push(LatticePoint { coords: v.to_vec(), norm: q });
                    }
                }
            }
        }
        brute.sort_by(|a, b| a.norm.total_cmp(&b.norm).then_with(|| a.coords.cmp(&b.coords)));
        assert_eq!(got, brute);
        assert!((l.minimum() - brute[0].norm).abs() < 1e-15);
    }

    #[test]
    fn dual_is_inverse() {
        let g = RMat::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.53]);
        let l = GramLattice::new(g.clone()).unwrap();
        let prod = &g * l.dual_gram();
        assert!((prod - RMat::identity(2, 2)).abs().max() < 1e-14);
        assert!((l.det_gram() - (1.53 - 0.09)).abs() < 1e-14);
    }
}
