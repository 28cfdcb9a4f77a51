//! Small dense complex linear algebra shared by the geometry modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cmat_from_real(m: &RMat) -> CMat {
    m.map(|x| c(x, 0.0))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_real(m: &RMat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn frobenius_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && max_abs(&(m - m.adjoint())) <= tol * max_abs(m).max(1.0)
}

pub fn inverse(m: &CMat, what: &str) -> Result<CMat> {
    if !m.is_square() {
        return Err(Error::dim(format!("{what} is {}x{}, not square", m.nrows(), m.ncols())));
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned(format!("{what} is singular")))?;
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::IllConditioned(format!("{what} is numerically singular")));
    }
    Ok(inv)
}

pub fn inverse_real(m: &RMat, what: &str) -> Result<RMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned(format!("{what} is singular")))
}

/// Lower factor `L` with `g = L L†` for a Hermitian positive definite `g`.
pub fn hermitian_cholesky(g: &CMat) -> Result<CMat> {
    if !is_hermitian(g, 1e-12) {
        return Err(Error::NotPositiveDefinite("metric is not Hermitian".into()));
    }
    let ch = nalgebra::Cholesky::new(g.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    let l = ch.l();
    // complex Cholesky happily takes square roots of negative pivots
    if (0..l.nrows()).any(|i| !(l[(i, i)].re > 0.0) || l[(i, i)].im.abs() > 1e-12 * l[(i, i)].re) {
        return Err(Error::NotPositiveDefinite("non-positive pivot".into()));
    }
    Ok(l)
}

/// Binomial coefficient; zero outside `0 ≤ k ≤ n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Strictly increasing `q`-subsets of `0..n` in lexicographic order.
pub fn multi_indices(n: usize, q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, q));
    let mut cur = Vec::with_capacity(q);
    fn rec(start: usize, n: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < q - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, q, cur, out);
            cur.pop();
        }
    }
    rec(0, n, q, &mut cur, &mut out);
    out
}

/// Position of a sorted multi-index in the lexicographic list.
pub fn index_of(indices: &[Vec<usize>], key: &[usize]) -> usize {
    indices
        .binary_search_by(|probe| probe.as_slice().cmp(key))
        .expect("multi-index not present in basis")
}

/// `q`-th compound matrix: minors `det M[I, J]` over lexicographic multi-indices.
pub fn compound(m: &CMat, q: usize) -> CMat {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let idx = multi_indices(n, q);
    let size = idx.len();
    if q == 0 {
        return CMat::identity(1, 1);
    }
    CMat::from_fn(size, size, |a, b| {
        let sub = CMat::from_fn(q, q, |i, j| m[(idx[a][i], idx[b][j])]);
        sub.determinant()
    })
}

/// Sign of the permutation sorting `seq` (distinct entries), or zero on repeats.
pub fn sort_sign(seq: &[usize]) -> (i32, Vec<usize>) {
    let mut v = seq.to_vec();
    let mut sign = 1;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] == v[j + 1] {
                return (0, v);
            }
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return (0, v);
    }
    (sign, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(3, 0), 1);
        assert_eq!(binomial(2, 3), 0);
    }

    #[test]
    fn multi_indices_are_lexicographic() {
        let idx = multi_indices(4, 2);
        assert_eq!(
            idx,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(multi_indices(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(index_of(&idx, &[1, 3]), 4);
    }

    #[test]
    fn sort_sign_parity() {
        assert_eq!(sort_sign(&[2, 0, 1]), (1, vec![0, 1, 2]));
        assert_eq!(sort_sign(&[1, 0]), (-1, vec![0, 1]));
        assert_eq!(sort_sign(&[1, 1]).0, 0);
    }

    #[test]
    fn compound_is_multiplicative() {
        let a = CMat::from_fn(3, 3, |i, j| c((i * 3 + j) as f64 * 0.3 + 1.0, (i as f64) - (j as f64) * 0.5));
        let b = CMat::from_fn(3, 3, |i, j| c(((i + 2 * j) % 5) as f64, 0.25 * (i * j) as f64));
        let lhs = compound(&(&a * &b), 2);
        let rhs = compound(&a, 2) * compound(&b, 2);
        assert!(max_abs(&(lhs - rhs)) < 1e-10);
    }

    #[test]
    fn cholesky_reconstructs() {
        let g = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.3), c(0.5, -0.3), c(1.0, 0.0)]);
        let l = hermitian_cholesky(&g).unwrap();
        assert!(max_abs(&(&l * l.adjoint() - &g)) < 1e-14);
        let bad = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        assert!(hermitian_cholesky(&bad).is_err());
    }
}
