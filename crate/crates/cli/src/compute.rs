//! Single computations (everything except `verify`), one record per modulus.

use num_complex::Complex64;
use rayon::prelude::*;
use torusdet::epstein::{epstein_deriv0, epstein_zeta, modulus_gram};
use torusdet::kuranishi::{kuranishi_solve, FourierSection};
use torusdet::lattice::GramLattice;
use torusdet::modular::{dedekind_eta, eisenstein_series, fmt_complex, weierstrass_discriminant, Modulus};
use torusdet::moduli::{ddc_hessian, family_log_det, fitted_constant, TorusFamily, DEFAULT_STEP};
use torusdet::spectral::{default_heat_samples, heat_coefficients, heat_trace, log_det, HeatMethod, HodgeComponent};
use torusdet::torus::FlatTorus;
use torusdet::{Error, Result};

use crate::args::{Command, RunConfig};
use crate::output::Record;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Product torus `E_τ × … × E_τ` of dimension `n`.
pub fn product_torus(tau: Complex64, n: usize) -> Result<FlatTorus> {
    FlatTorus::from_moduli(&vec![tau; n])
}

/// Runs `f` on every modulus in parallel; rows come back in input order and
/// the first error in that order is returned.
fn per_tau<F>(taus: &[Complex64], f: F) -> Result<Vec<Record>>
where
    F: Fn(Complex64) -> Result<Vec<Record>> + Sync,
{
    let parts: Vec<Result<Vec<Record>>> = taus.par_iter().map(|&t| f(t)).collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn base(tau: Complex64) -> Record {
    Record::new().num("tau_re", tau.re).num("tau_im", tau.im)
}

pub fn run_compute(cfg: &RunConfig, taus: &[Complex64]) -> Result<Vec<Record>> {
    let n = cfg.n.unwrap_or(1);
    match cfg.command {
        Command::Eta => per_tau(taus, |tau| {
            let eta = dedekind_eta(&Modulus::from_tau(tau)?)?;
            Ok(vec![base(tau).num("eta_re", eta.re).num("eta_im", eta.im).num("eta_abs", eta.norm())])
        }),
        Command::Eisenstein => per_tau(taus, |tau| {
            let m = Modulus::from_tau(tau)?;
            let v = weierstrass_discriminant(&m)?;
            let mut r = base(tau)
                .num("g4_re", v.eis2.re)
                .num("g4_im", v.eis2.im)
                .num("g6_re", v.eis3.re)
                .num("g6_im", v.eis3.im)
                .num("g2_re", v.g2.re)
                .num("g2_im", v.g2.im)
                .num("g3_re", v.g3.re)
                .num("g3_im", v.g3.im)
                .num("discriminant_re", v.discriminant.re)
                .num("discriminant_im", v.discriminant.im);
            if let Some(cut) = cfg.cutoff {
                let cut = cut as u32;
                let d4 = eisenstein_series(2, &m, cut)?;
                let d6 = eisenstein_series(3, &m, cut)?;
                r = r
                    .num("g4_direct_re", d4.value.re)
                    .num("g4_direct_im", d4.value.im)
                    .num("g4_direct_bound", d4.error_bound)
                    .num("g6_direct_re", d6.value.re)
                    .num("g6_direct_im", d6.value.im)
                    .num("g6_direct_bound", d6.error_bound);
            }
            Ok(vec![r])
        }),
        Command::Epstein => {
            let s = cfg.s.unwrap_or(Complex64::new(2.0, 0.0));
            per_tau(taus, |tau| {
                let lattice = if n == 1 {
                    GramLattice::new(modulus_gram(tau))?
                } else {
                    product_torus(tau, n)?.lattice().clone()
                };
                let z = epstein_zeta(&lattice, s)?;
                let mut r = base(tau)
                    .int("rank", lattice.rank() as i64)
                    .num("s_re", s.re)
                    .num("s_im", s.im)
                    .num("z_re", z.value.re)
                    .num("z_im", z.value.im)
                    .num("error_bound", z.error_bound);
                if s == Complex64::new(0.0, 0.0) {
                    r = r.num("z_deriv0", epstein_deriv0(&lattice)?);
                }
                Ok(vec![r])
            })
        }
        Command::Detlap => {
            let q = cfg.q.unwrap_or(1.min(n));
            let comp = cfg.component.unwrap_or(HodgeComponent::Full);
            per_tau(taus, |tau| {
                let d = log_det(&product_torus(tau, n)?, q, comp)?;
                Ok(vec![base(tau)
                    .int("n", n as i64)
                    .int("q", q as i64)
                    .text("component", comp.to_string())
                    .int("multiplicity", d.multiplicity as i64)
                    .num("log_det", d.log_det)
                    .num("zeta_at_0", d.zeta_at_0)])
            })
        }
        Command::Heat => {
            let q = cfg.q.unwrap_or(0);
            per_tau(taus, |tau| {
                let t = product_torus(tau, n)?;
                let r = base(tau).int("n", n as i64).int("q", q as i64);
                match cfg.t {
                    Some(time) => Ok(vec![r
                        .num("t", time)
                        .num("spectral", heat_trace(&t, q, time, HeatMethod::Spectral)?)
                        .num("theta_dual", heat_trace(&t, q, time, HeatMethod::ThetaDual)?)]),
                    None => {
                        let fit = heat_coefficients(&t, q, &default_heat_samples(&t))?;
                        Ok(fit
                            .coefficients
                            .iter()
                            .map(|(&p, &a)| {
                                r.clone()
                                    .int("power", p as i64)
                                    .num("coefficient", a)
                                    .num("standard_error", fit.standard_errors.get(&p).copied().unwrap_or(0.0))
                                    .num("fit_residual", fit.fit_residual)
                            })
                            .collect())
                    }
                }
            })
        }
        Command::Kuranishi => {
            let n = cfg.n.unwrap_or(2);
            let tau0 = cfg.tau0.unwrap_or(I);
            let fam = TorusFamily::reference(n, tau0)?;
            let basis: Vec<FourierSection> = fam.basis().iter().map(FourierSection::from_beltrami).collect();
            let scale = 1.0 / (basis.len() as f64).sqrt();
            // the modulus is spread evenly over the coordinates
            let taus: Vec<Complex64> = match cfg.tau {
                Some(t) => vec![t],
                None => vec![Complex64::new(0.1, 0.05)],
            };
            per_tau(&taus, |tau| {
                let coords = vec![tau * scale; basis.len()];
                let sol = kuranishi_solve(fam.base(), &basis, &coords, 1e-15, 50)?;
                Ok(vec![Record::new()
                    .num("tau_re", tau.re)
                    .num("tau_im", tau.im)
                    .int("n", n as i64)
                    .int("iterations", sol.iterations as i64)
                    .num("gauge_residual", sol.gauge_residual)
                    .num("integrability_residual", sol.residual)
                    .num("fixed_point_residual", sol.fixed_point_residual)
                    .num("phi_norm", sol.phi.norm())])
            })
        }
        Command::Hessian => {
            let tau0 = cfg.tau0.unwrap_or(I);
            let q = cfg.q.unwrap_or(1.min(n));
            let comp = cfg.component.unwrap_or(HodgeComponent::Full);
            let h = cfg.step.unwrap_or(DEFAULT_STEP);
            let fam = TorusFamily::reference(n, tau0)?;
            let zero = vec![Complex64::new(0.0, 0.0); fam.dim()];
            let hess = ddc_hessian(&|t: &[Complex64]| family_log_det(&fam, t, q, comp), &zero, h)?;
            let wp = fam.wp_metric(&zero)?;
            let (cst, misfit) = fitted_constant(&hess.matrix, &wp);
            let mut rows = Vec::new();
            for i in 0..fam.dim() {
                for j in 0..fam.dim() {
                    rows.push(
                        Record::new()
                            .text("tau0", fmt_complex(tau0))
                            .int("n", n as i64)
                            .int("q", q as i64)
                            .text("component", comp.to_string())
                            .int("i", i as i64)
                            .int("j", j as i64)
                            .num("hess_re", hess.matrix[(i, j)].re)
                            .num("hess_im", hess.matrix[(i, j)].im)
                            .num("wp_re", wp[(i, j)].re)
                            .num("wp_im", wp[(i, j)].im)
                            .num("constant", cst)
                            .num("misfit", misfit)
                            .num("fd_error", hess.error_estimate),
                    );
                }
            }
            Ok(rows)
        }
        Command::Verify { .. } => Err(Error::Domain("verify is not a single computation".into())),
    }
}
