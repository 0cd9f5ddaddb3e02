//! Preconditioned conjugate gradients with a zero initial guess.
//!
//! One iteration is one application of the operator inside the loop; the
//! initial residual is `b` itself and costs nothing. The stopping test uses
//! the unpreconditioned residual, `‖b − A x‖₂ ≤ tol · ‖b‖₂`.

use faer::Side;

use crate::error::{Error, Result};
use crate::linalg::dense::{axpy, dot, norm2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgOptions {
    pub tol: f64,
    pub max_it: usize,
    /// Keep the Lanczos coefficients for spectral estimates.
    pub record_lanczos: bool,
}

impl Default for PcgOptions {
    fn default() -> Self {
        PcgOptions {
            tol: 1e-8,
            max_it: 1000,
            record_lanczos: false,
        }
    }
}

/// Tridiagonal matrix of the Lanczos process implied by the CG recurrence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lanczos {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
}

impl Lanczos {
    /// Extreme Ritz values `(λ_min, λ_max)` of the preconditioned operator.
    pub fn extreme_eigenvalues(&self) -> Option<(f64, f64)> {
        let n = self.diagonal.len();
        if n == 0 {
            return None;
        }
        let mut t = faer::Mat::<f64>::zeros(n, n);
        for i in 0..n {
            t[(i, i)] = self.diagonal[i];
            if i + 1 < n {
                t[(i + 1, i)] = self.off_diagonal[i];
                t[(i, i + 1)] = self.off_diagonal[i];
            }
        }
        let eig = t.self_adjoint_eigenvalues(Side::Lower).ok()?;
        Some((eig[0], eig[n - 1]))
    }

    pub fn condition_estimate(&self) -> Option<f64> {
        self.extreme_eigenvalues().map(|(lo, hi)| hi / lo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcgReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
    pub lanczos: Option<Lanczos>,
}

/// Solves `A x = b`. `apply_a(x, y)` and `apply_m(r, z)` overwrite their
/// output argument.
pub fn pcg<A, M>(apply_a: A, apply_m: M, b: &[f64], opts: &PcgOptions) -> Result<(Vec<f64>, PcgReport)>
where
    A: Fn(&[f64], &mut [f64]),
    M: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = norm2(b);
    let mut lanczos = opts.record_lanczos.then(Lanczos::default);
    if !bnorm.is_finite() {
        return Err(Error::Breakdown {
            iteration: 0,
            reason: "non-finite right-hand side".into(),
        });
    }
    if bnorm == 0.0 {
        return Ok((
            x,
            PcgReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
                lanczos,
            },
        ));
    }

    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    apply_m(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut rel = 1.0;
    let (mut alpha_prev, mut beta_prev) = (0.0, 0.0);

    for k in 1..=opts.max_it {
        apply_a(&p, &mut q);
        let pq = dot(&p, &q);
        if !pq.is_finite() || !rz.is_finite() {
            return Err(Error::Breakdown {
                iteration: k,
                reason: "non-finite value in recurrence".into(),
            });
        }
        if pq <= 0.0 || rz <= 0.0 {
            return Err(Error::Breakdown {
                iteration: k,
                reason: format!("lost positive definiteness (pᵀAp = {pq:.3e}, rᵀz = {rz:.3e})"),
            });
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        rel = norm2(&r) / bnorm;
        if let Some(l) = lanczos.as_mut() {
            let d = if k == 1 {
                1.0 / alpha
            } else {
                1.0 / alpha + beta_prev / alpha_prev
            };
            l.diagonal.push(d);
        }
        if !rel.is_finite() {
            return Err(Error::Breakdown {
                iteration: k,
                reason: "non-finite residual".into(),
            });
        }
        if rel <= opts.tol {
            return Ok((
                x,
                PcgReport {
                    iterations: k,
                    relative_residual: rel,
                    converged: true,
                    lanczos,
                },
            ));
        }
        apply_m(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        if let Some(l) = lanczos.as_mut() {
            l.off_diagonal.push(beta.max(0.0).sqrt() / alpha);
        }
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        rz = rz_new;
        alpha_prev = alpha;
        beta_prev = beta;
    }

    if let Some(l) = lanczos.as_mut() {
        l.off_diagonal.truncate(l.diagonal.len().saturating_sub(1));
    }
    Ok((
        x,
        PcgReport {
            iterations: opts.max_it,
            relative_residual: rel,
            converged: false,
            lanczos,
        },
    ))
}

/// Identity preconditioner.
pub fn identity(r: &[f64], z: &mut [f64]) {
    z.copy_from_slice(r);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{factorize_symmetric_indefinite, SparseMatrix};
    use proptest::prelude::*;

    fn diag(d: Vec<f64>) -> impl Fn(&[f64], &mut [f64]) {
        move |x, y| {
            for i in 0..x.len() {
                y[i] = d[i] * x[i];
            }
        }
    }

    /// Textbook dense CG, kept independent of `pcg`.
    fn dense_cg_iterations(a: &[Vec<f64>], b: &[f64], tol: f64) -> usize {
        let n = b.len();
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut p = r.clone();
        let b0 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        for k in 1..=10 * n {
            let ap: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i][j] * p[j]).sum()).collect();
            let rr: f64 = r.iter().map(|v| v * v).sum();
            let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr2: f64 = r.iter().map(|v| v * v).sum();
            if rr2.sqrt() <= tol * b0 {
                return k;
            }
            for i in 0..n {
                p[i] = r[i] + rr2 / rr * p[i];
            }
        }
        usize::MAX
    }

    #[test]
    fn identity_converges_in_one() {
        let b = vec![1.0, -2.0, 3.0];
        let (x, rep) = pcg(identity, identity, &b, &PcgOptions::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        assert_eq!(x, b);
    }

    #[test]
    fn exact_preconditioner_converges_in_one() {
        let b = vec![1.0, 1.0, 1.0];
        let (x, rep) = pcg(
            diag(vec![1.0, 2.0, 3.0]),
            diag(vec![1.0, 0.5, 1.0 / 3.0]),
            &b,
            &PcgOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.iterations, 1);
        assert!((x[2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn finite_termination_matches_dense_oracle() {
        let d: Vec<f64> = (1..=10).map(f64::from).collect();
        let a: Vec<Vec<f64>> = (0..10)
            .map(|i| (0..10).map(|j| if i == j { d[i] } else { 0.0 }).collect())
            .collect();
        let b = vec![1.0; 10];
        let oracle = dense_cg_iterations(&a, &b, 1e-8);
        assert!(oracle <= 10);
        let (_, rep) = pcg(diag(d), identity, &b, &PcgOptions::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, oracle);
    }

    #[test]
    fn zero_rhs() {
        let (x, rep) = pcg(identity, identity, &[0.0; 4], &PcgOptions::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(x, vec![0.0; 4]);
    }

    #[test]
    fn max_it_reports_non_convergence() {
        let d: Vec<f64> = (1..=50).map(f64::from).collect();
        let opts = PcgOptions {
            max_it: 3,
            ..Default::default()
        };
        let (_, rep) = pcg(diag(d), identity, &[1.0; 50], &opts).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
    }

    #[test]
    fn nan_is_breakdown() {
        let bad = |_: &[f64], y: &mut [f64]| y.fill(f64::NAN);
        assert!(matches!(
            pcg(bad, identity, &[1.0], &PcgOptions::default()),
            Err(Error::Breakdown { .. })
        ));
    }

    #[test]
    fn lanczos_recovers_spectrum() {
        let d: Vec<f64> = (1..=6).map(|i| (i * i) as f64).collect();
        let opts = PcgOptions {
            tol: 1e-14,
            record_lanczos: true,
            ..Default::default()
        };
        let (_, rep) = pcg(diag(d), identity, &[1.0; 6], &opts).unwrap();
        let (lo, hi) = rep.lanczos.unwrap().extreme_eigenvalues().unwrap();
        assert!((lo - 1.0).abs() < 1e-8 && (hi - 36.0).abs() < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// GᵀG + I: PCG agrees with the direct solve, and the iteration count
        /// does not depend on the scale of b.
        #[test]
        fn agrees_with_direct_solve(
            n in 2usize..40,
            seed in proptest::collection::vec(-1.0f64..1.0, 160),
            scale_exp in -10i32..10,
        ) {
            let g: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| seed[(i * 7 + j * 3) % 160] * ((i + j) % 3 == 0) as u8 as f64).collect()).collect();
            let mut a = vec![vec![0.0; n]; n];
            for i in 0..n {
                a[i][i] += 1.0;
                for j in 0..n {
                    for k in 0..n {
                        a[i][j] += g[k][i] * g[k][j];
                    }
                }
            }
            let sa = SparseMatrix::from_dense(&a).unwrap();
            let b: Vec<f64> = (0..n).map(|i| seed[(3 * i + 1) % 160] + 0.1).collect();
            let direct = factorize_symmetric_indefinite(&sa).unwrap().solve(&b);
            let apply = |x: &[f64], y: &mut [f64]| sa.mul_vec_into(x, y);
            let (x, rep) = pcg(apply, identity, &b, &PcgOptions::default()).unwrap();
            prop_assert!(rep.converged);
            let err = x.iter().zip(&direct).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-6 * norm2(&direct));

            let scale = 2f64.powi(scale_exp);
            let bs: Vec<f64> = b.iter().map(|v| v * scale).collect();
            let (_, rep2) = pcg(apply, identity, &bs, &PcgOptions::default()).unwrap();
            prop_assert_eq!(rep.iterations, rep2.iterations);
        }
    }
}
