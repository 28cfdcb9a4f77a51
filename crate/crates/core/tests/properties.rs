use num_complex::Complex64;
use proptest::prelude::*;
use torusdet::exterior::{
    endo_extend_matrix, hodge_star_fiber, izs_residual, izs_residual_unchecked, top_wedge, wp_pointwise_trace,
    BeltramiMatrix,
};
use torusdet::kuranishi::{bracket, dbar, dbar_star, green, harmonic_proj, laplacian, FourierSection};
use torusdet::linalg::{binomial, c, hermitian_cholesky, inverse, max_abs, CMat};
use torusdet::moduli::ddc_hessian;
use torusdet::report::{Status, VerificationReport};
use torusdet::spectral::{hodge_multiplicity, truncated_trace_and_hs, HodgeComponent};
use torusdet::torus::FlatTorus;

fn cplx() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b))
}

fn cmat(n: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec(cplx(), n * n).prop_map(move |v| CMat::from_vec(n, n, v))
}

/// Hermitian positive definite `AA† + I/2`.
fn metric(n: usize) -> impl Strategy<Value = CMat> {
    cmat(n).prop_map(move |a| &a * a.adjoint() * c(0.5, 0.0) + CMat::identity(n, n) * c(0.5, 0.0))
}

/// `Ψ = g⁻ᵀ S` with `S` symmetric, so that `gᵀΨ` is symmetric.
fn symmetric_beltrami(g: &CMat, s: &CMat, scale: f64) -> BeltramiMatrix {
    let sym = (s + s.transpose()) * c(0.5 * scale, 0.0);
    let gt_inv = inverse(&g.transpose(), "metric").unwrap();
    let raw = gt_inv * sym;
    // keep well inside the unit ball so that A_φ stays invertible
    let norm = raw.norm();
    let m = if norm > 0.5 { raw * c(0.5 / norm, 0.0) } else { raw };
    BeltramiMatrix::new(m).unwrap()
}

fn small_section(n: usize, q: usize, comps: usize, seed: &[Complex64]) -> FourierSection {
    let mut f = FourierSection::zero(n, q, comps, 1).unwrap();
    let rows = binomial(n, q);
    let keys: Vec<Vec<i64>> = vec![
        (0..2 * n).map(|i| if i == 0 { 1 } else { 0 }).collect(),
        (0..2 * n).map(|i| if i % 2 == 1 { -1 } else { 0 }).collect(),
        (0..2 * n).map(|i| (i as i64 % 3) - 1).collect(),
    ];
    for (j, k) in keys.into_iter().enumerate() {
        let m = CMat::from_fn(rows, comps, |a, b| seed[(a * 7 + b * 3 + j * 5) % seed.len()]);
        f.insert(k, m).unwrap();
    }
    f
}

fn torus2() -> FlatTorus {
    FlatTorus::from_siegel(&CMat::from_row_slice(2, 2, &[c(0.1, 1.1), c(0.2, 0.25), c(0.2, 0.25), c(-0.1, 0.9)])).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn extension_trace_scales_by_binomial(n in 1usize..=6, qf in 0.0..1.0f64, seed in prop::collection::vec(cplx(), 36)) {
        let q = 1 + ((qf * n as f64) as usize).min(n - 1);
        let b = CMat::from_fn(n, n, |i, j| seed[i * 6 + j]);
        let ext = endo_extend_matrix(&b, q);
        let lhs = ext.trace();
        let rhs = b.trace() * binomial(n - 1, q - 1) as f64;
        prop_assert!((lhs - rhs).norm() < 1e-11 * (1.0 + rhs.norm()));
    }

    #[test]
    fn izs_matrix_identity_for_symmetric_pairs(n in 2usize..=4, g in metric(4), s1 in cmat(4), s2 in cmat(4)) {
        let g = g.view((0, 0), (n, n)).clone_owned();
        let s1 = s1.view((0, 0), (n, n)).clone_owned();
        let s2 = s2.view((0, 0), (n, n)).clone_owned();
        let phi = symmetric_beltrami(&g, &s1, 0.3);
        let psi = symmetric_beltrami(&g, &s2, 0.3);
        prop_assert!(izs_residual(&phi, &psi, &g).unwrap() < 1e-11);
    }

    #[test]
    fn star_squares_to_sign_and_pairs_positively(n in 1usize..=5, qf in 0.0..1.0f64, g in metric(5), v in prop::collection::vec(cplx(), 10)) {
        let q = ((qf * (n + 1) as f64) as usize).min(n);
        let g = g.view((0, 0), (n, n)).clone_owned();
        let star = hodge_star_fiber(&g, q).unwrap();
        let back = hodge_star_fiber(&g, n - q).unwrap();
        // both maps are conjugate-linear
        let twice = &back.operator.matrix * star.operator.matrix.map(|z| z.conj());
        let dim = binomial(n, q);
        let want = CMat::identity(dim, dim) * c(star.sign as f64, 0.0);
        prop_assert!(max_abs(&(twice - want)) < 1e-10);
        let alpha: Vec<Complex64> = v.iter().take(dim).copied().collect();
        let a = CMat::from_column_slice(dim, 1, &alpha);
        let sa = &star.operator.matrix * a.map(|z| z.conj());
        let l = hermitian_cholesky(&g).unwrap();
        let wedge = top_wedge(&alpha, q, sa.as_slice(), n) / l.map(|z| z.conj()).determinant();
        // α ∧ ∗α is a nonnegative multiple of the unit volume form
        prop_assert!(wedge.im.abs() < 1e-10 * (1.0 + wedge.norm()));
        prop_assert!(wedge.re > -1e-12);
    }

    #[test]
    fn pascal_rule_and_hodge_split(n in 1usize..=8, k in 0usize..=8) {
        let k = k.min(n);
        if k > 0 {
            prop_assert_eq!(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k));
        }
        let full = hodge_multiplicity(n, k, HodgeComponent::Full).unwrap();
        let p = hodge_multiplicity(n, k, HodgeComponent::Prime).unwrap();
        let pp = hodge_multiplicity(n, k, HodgeComponent::DoublePrime).unwrap();
        prop_assert_eq!(full, p + pp);
    }

    #[test]
    fn bracket_is_symmetric(s1 in prop::collection::vec(cplx(), 8), s2 in prop::collection::vec(cplx(), 8)) {
        let t = torus2();
        let f = small_section(2, 1, 2, &s1);
        let h = small_section(2, 1, 2, &s2);
        let a = bracket(&t, &f, &h).unwrap();
        let b = bracket(&t, &h, &f).unwrap();
        prop_assert!(a.sub(&b).unwrap().norm() < 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn green_inverts_the_laplacian_off_harmonics(q in 0usize..=2, s in prop::collection::vec(cplx(), 8)) {
        let t = torus2();
        let f = small_section(2, q, 2, &s);
        // □ assembled from ∂̄ and ∂̄* must agree with the blockwise multiplier
        let mut box_f = FourierSection::zero(2, q, 2, 1).unwrap();
        if q < 2 {
            box_f = box_f.add(&dbar_star(&t, &dbar(&t, &f).unwrap()).unwrap()).unwrap();
        }
        if q > 0 {
            box_f = box_f.add(&dbar(&t, &dbar_star(&t, &f).unwrap()).unwrap()).unwrap();
        }
        let lap = laplacian(&t, &f).unwrap();
        prop_assert!(box_f.sub(&lap).unwrap().norm() < 1e-10 * (1.0 + lap.norm()));
        let back = laplacian(&t, &green(&t, &f).unwrap()).unwrap();
        let want = f.sub(&harmonic_proj(&f)).unwrap();
        prop_assert!(back.sub(&want).unwrap().norm() < 1e-12 * (1.0 + f.norm()));
    }

    #[test]
    fn dbar_squares_to_zero(q in 0usize..=1, s in prop::collection::vec(cplx(), 8)) {
        let t = FlatTorus::from_moduli(&[c(0.1, 1.1), c(-0.2, 0.9), c(0.0, 1.3)]).unwrap();
        let f = small_section(3, q, 1, &s);
        let dd = dbar(&t, &dbar(&t, &f).unwrap()).unwrap();
        prop_assert!(dd.norm() < 1e-12 * (1.0 + f.norm()));
    }

    #[test]
    fn wp_trace_is_phase_covariant(theta in 0.0..6.3f64, g in metric(3), s1 in cmat(3), s2 in cmat(3)) {
        let phi = symmetric_beltrami(&g, &s1, 0.3);
        let psi = symmetric_beltrami(&g, &s2, 0.3);
        let u = Complex64::from_polar(1.0, theta);
        let base = wp_pointwise_trace(&phi, &psi, &g).unwrap();
        let rotated = wp_pointwise_trace(&phi.scaled(u), &psi, &g).unwrap();
        prop_assert!((rotated - base * u).norm() < 1e-12);
        let both = wp_pointwise_trace(&phi.scaled(u), &psi.scaled(u), &g).unwrap();
        prop_assert!((both - base).norm() < 1e-12);
        let r0 = izs_residual(&phi, &psi, &g).unwrap();
        let r1 = izs_residual(&phi.scaled(u), &psi.scaled(u), &g).unwrap();
        prop_assert!((r0 - r1).abs() < 1e-12);
    }

    #[test]
    fn trace_and_hs_norm_bounds(m in cmat(4)) {
        let (tr, hs) = truncated_trace_and_hs(&m).unwrap();
        prop_assert!((tr - m.trace()).norm() < 1e-14);
        // |Tr K|² ≤ rank·‖K‖²_HS and HS is unitarily invariant
        prop_assert!(tr.norm_sqr() <= 4.0 * hs + 1e-12);
        let q = hermitian_cholesky(&(&m * m.adjoint() + CMat::identity(4, 4))).unwrap();
        let u = q.clone().qr().q();
        let (tr2, hs2) = truncated_trace_and_hs(&(u.adjoint() * &m * &u)).unwrap();
        prop_assert!((tr2 - tr).norm() < 1e-12);
        prop_assert!((hs2 - hs).abs() < 1e-12 * (1.0 + hs));
    }

    #[test]
    fn report_status_rule(res in 0.0..2.0f64, tol in 1e-3..1.0f64, fd in 0.0..2.0f64) {
        let r = VerificationReport::new("x", "", res, tol);
        prop_assert_eq!(r.passed(), res <= tol);
        let d = r.clone().with_fd_error(fd);
        let expect = if res <= tol {
            Status::Pass
        } else if fd >= 0.5 * res {
            Status::Inconclusive
        } else {
            Status::Fail
        };
        prop_assert_eq!(d.status, expect);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ddc_hessian_is_hermitian(a in cmat(2), x in cplx(), y in cplx()) {
        // a real-valued polynomial potential with a non-diagonal Hermitian part
        let f = move |t: &[Complex64]| -> torusdet::Result<f64> {
            let quad: Complex64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| t[i] * a[(i, j)] * t[j].conj()).sum();
            Ok(quad.re + (t[0] * t[1]).re * 0.3 + t[0].norm_sqr().powi(2))
        };
        let h = ddc_hessian(&f, &[x * 0.2, y * 0.2], 1e-3).unwrap();
        let m = &h.matrix;
        prop_assert!(max_abs(&(m - m.adjoint())) < 1e-8);
    }
}

#[test]
fn izs_negative_control_is_detected() {
    let g = CMat::identity(2, 2);
    let phi = BeltramiMatrix::new(CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.3, 0.0), c(0.0, 0.0), c(0.0, 0.0)])).unwrap();
    let psi = BeltramiMatrix::new(CMat::from_row_slice(2, 2, &[c(0.1, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.2, 0.0)])).unwrap();
    assert!(izs_residual(&phi, &psi, &g).is_err());
    assert!(izs_residual_unchecked(&phi, &psi, &g).unwrap() > 1e-3);
}
