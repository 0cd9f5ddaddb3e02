//! Manufactured solution on the unit square.

use std::f64::consts::PI;

use crate::assembly::ModelParams;

/// Closed-form `(u, z, p)` with the compatible mass-balance source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolution {
    lambda: f64,
    mu: f64,
    kappa: f64,
}

/// Pointwise values of the three fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValues {
    pub u: [f64; 2],
    pub z: [f64; 2],
    pub p: f64,
}

impl ExactSolution {
    pub fn new(params: &ModelParams) -> Self {
        let (lambda, mu) = params.lame();
        ExactSolution {
            lambda,
            mu,
            kappa: params.permeability,
        }
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> FieldValues {
        let (sx, cx) = (2.0 * PI * x).sin_cos();
        let (sy, cy) = (2.0 * PI * y).sin_cos();
        let st = (2.0 * PI * t).sin();
        let cu = -1.0 / (4.0 * PI * (self.lambda + 2.0 * self.mu));
        let cz = -2.0 * PI * self.kappa;
        FieldValues {
            u: [cu * cx * sy * st, cu * sx * cy * st],
            z: [cz * cx * sy * st, cz * sx * cy * st],
            p: sx * sy * st,
        }
    }

    /// g₁ = ∂ₜ∇·u + ∇·z.
    pub fn g1(&self, x: f64, y: f64, t: f64) -> f64 {
        let (st, ct) = (2.0 * PI * t).sin_cos();
        let amp = 2.0 * PI * ct / (self.lambda + 2.0 * self.mu) + 8.0 * PI * PI * self.kappa * st;
        amp * (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
    }

    /// g₂ = z·n.
    pub fn g2(&self, x: f64, y: f64, t: f64, normal: [f64; 2]) -> f64 {
        let z = self.eval(x, y, t).z;
        z[0] * normal[0] + z[1] * normal[1]
    }
}

pub fn exact_solution_eval(x: f64, y: f64, t: f64, params: &ModelParams) -> FieldValues {
    ExactSolution::new(params).eval(x, y, t)
}

pub fn manufactured_source_g1(x: f64, y: f64, t: f64, params: &ModelParams) -> f64 {
    ExactSolution::new(params).g1(x, y, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn substitution_examples() {
        let ex = ExactSolution::new(&params());
        assert!((ex.eval(0.25, 0.25, 0.25).p - 1.0).abs() < 1e-15);
        let z = ex.eval(0.5, 0.25, 0.25).z;
        assert!((z[0] - 2.0 * PI * 1e-2).abs() < 1e-15 && z[1].abs() < 1e-15);
        let zero = ex.eval(0.3, 0.7, 0.0);
        assert!(zero.u.iter().chain(&zero.z).all(|v| *v == 0.0) && zero.p == 0.0);
    }

    #[test]
    fn g1_examples() {
        let p = params();
        let (lambda, mu) = p.lame();
        let (x, y) = (0.1, 0.35);
        let expect = 2.0 * PI / (lambda + 2.0 * mu) * (2.0 * PI * x).sin() * (2.0 * PI * y).sin();
        assert!((manufactured_source_g1(x, y, 0.0, &p) - expect).abs() < 1e-15);
        for x in [0.0, 0.5, 1.0] {
            assert!(manufactured_source_g1(x, 0.3, 0.1, &p).abs() < 1e-13);
        }
    }

    /// Central differences of the closed forms: all three equations of the
    /// test system hold to O(ε²).
    #[test]
    fn finite_difference_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(nu, kappa) in &[(0.3, 1e-2), (0.4999, 1e-7)] {
            let p = ModelParams { poisson: nu, permeability: kappa, ..params() };
            let (lambda, mu) = p.lame();
            let ex = ExactSolution::new(&p);
            let e = 1e-4;
            let f = |x: f64, y: f64, t: f64| ex.eval(x, y, t);
            let div_u = |x: f64, y: f64, t: f64| {
                (f(x + e, y, t).u[0] - f(x - e, y, t).u[0] + f(x, y + e, t).u[1] - f(x, y - e, t).u[1]) / (2.0 * e)
            };
            for _ in 0..20 {
                let (x, y, t) = (rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>());
                // mass balance
                let dt_div = (div_u(x, y, t + e) - div_u(x, y, t - e)) / (2.0 * e);
                let div_z = (f(x + e, y, t).z[0] - f(x - e, y, t).z[0] + f(x, y + e, t).z[1] - f(x, y - e, t).z[1]) / (2.0 * e);
                let g = ex.g1(x, y, t);
                let scale = 2.0 * PI / (lambda + 2.0 * mu) + 8.0 * PI * PI * kappa;
                assert!((dt_div + div_z - g).abs() < 1e-5 * scale, "mass balance");

                // Darcy: z + κ∇p = 0
                let gp = [
                    (f(x + e, y, t).p - f(x - e, y, t).p) / (2.0 * e),
                    (f(x, y + e, t).p - f(x, y - e, t).p) / (2.0 * e),
                ];
                let z = f(x, y, t).z;
                for c in 0..2 {
                    assert!((z[c] + kappa * gp[c]).abs() < 1e-6 * kappa.max(1e-12) * 10.0);
                }

                // momentum: −(λ+μ)∇(∇·u) − μΔu + ∇p = 0
                let grad_div = [
                    (div_u(x + e, y, t) - div_u(x - e, y, t)) / (2.0 * e),
                    (div_u(x, y + e, t) - div_u(x, y - e, t)) / (2.0 * e),
                ];
                for c in 0..2 {
                    let lap = (f(x + e, y, t).u[c] + f(x - e, y, t).u[c] + f(x, y + e, t).u[c]
                        + f(x, y - e, t).u[c]
                        - 4.0 * f(x, y, t).u[c])
                        / (e * e);
                    let r = -(lambda + mu) * grad_div[c] - mu * lap + gp[c];
                    assert!(r.abs() < 1e-4 * 2.0 * PI, "momentum residual {r}");
                }
            }
        }
    }

    #[test]
    fn normal_flux() {
        let ex = ExactSolution::new(&params());
        let z = ex.eval(1.0, 0.3, 0.2).z;
        assert_eq!(ex.g2(1.0, 0.3, 0.2, [1.0, 0.0]), z[0]);
        assert_eq!(ex.g2(1.0, 0.3, 0.2, [0.0, -1.0]), -z[1]);
    }
}
