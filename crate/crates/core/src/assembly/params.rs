use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Physical and discretization parameters of the Biot model.
///
/// Defaults are the reference configuration of the scalability experiment:
/// E = 1000, ν = 0.3, κ = 10⁻², α = 1, c₀ = 0, δ_STAB = 100, Δt = 0.00625,
/// T = 0.25.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub young: f64,
    pub poisson: f64,
    /// Isotropic permeability, K = κ I.
    pub permeability: f64,
    pub biot_alpha: f64,
    /// Constrained specific storage c₀.
    pub storage: f64,
    pub delta_stab: f64,
    pub dt: f64,
    pub t_end: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            young: 1000.0,
            poisson: 0.3,
            permeability: 1e-2,
            biot_alpha: 1.0,
            storage: 0.0,
            delta_stab: 100.0,
            dt: 0.00625,
            t_end: 0.25,
        }
    }
}

impl ModelParams {
    /// Plane-strain Lamé parameters `(λ, μ)`.
    pub fn lame(&self) -> (f64, f64) {
        let (e, nu) = (self.young, self.poisson);
        (e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.young,
            self.poisson,
            self.permeability,
            self.biot_alpha,
            self.storage,
            self.delta_stab,
            self.dt,
            self.t_end,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("model parameters must be finite"));
        }
        if self.young <= 0.0 {
            return Err(invalid("Young's modulus must be positive"));
        }
        if !(self.poisson > -1.0 && self.poisson < 0.5) {
            return Err(invalid("Poisson ratio must lie in (-1, 0.5)"));
        }
        if self.permeability <= 0.0 {
            return Err(invalid("permeability must be positive"));
        }
        if self.biot_alpha <= 0.0 {
            return Err(invalid("Biot-Willis constant must be positive"));
        }
        if self.storage < 0.0 {
            return Err(invalid("specific storage must be non-negative"));
        }
        if self.delta_stab < 0.0 {
            return Err(invalid("stabilization factor must be non-negative"));
        }
        if self.dt <= 0.0 || self.t_end <= 0.0 {
            return Err(invalid("time step and final time must be positive"));
        }
        let steps = self.t_end / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(invalid("final time must be a whole number of time steps"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// With no storage and flux conditions on all of ∂Ω the pressure is only
    /// defined up to a constant.
    pub fn pressure_floating(&self) -> bool {
        self.storage == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let p = ModelParams::default();
        p.validate().unwrap();
        assert_eq!(p.steps(), 40);
        let (lambda, mu) = p.lame();
        assert!((lambda - 1000.0 * 0.3 / (1.3 * 0.4)).abs() < 1e-9);
        assert!((mu - 1000.0 / 2.6).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            ModelParams { poisson: 0.5, ..Default::default() },
            ModelParams { permeability: 0.0, ..Default::default() },
            ModelParams { delta_stab: -1.0, ..Default::default() },
            ModelParams { dt: 0.0, ..Default::default() },
            ModelParams { dt: 0.1, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }
}
