use serde::{Deserialize, Serialize};

use crate::assembly::element::TriangleGeometry;
use crate::assembly::{ExactSolution, FieldState, ModelParams};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// L² norms of the three fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldNorms {
    pub u: f64,
    pub z: f64,
    pub p: f64,
}

const A1: f64 = 0.059_715_871_789_769_82;
const B1: f64 = 0.470_142_064_105_115_1;
const A2: f64 = 0.797_426_985_353_087_3;
const B2: f64 = 0.101_286_507_323_456_3;
const W0: f64 = 0.225;
const W1: f64 = 0.132_394_152_788_506_2;
const W2: f64 = 0.125_939_180_544_827_2;

/// Seven-point rule exact for degree five, as (barycentric point, weight)
/// with weights summing to one.
pub const QUADRATURE_7: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], W0),
    ([A1, B1, B1], W1),
    ([B1, A1, B1], W1),
    ([B1, B1, A1], W1),
    ([A2, B2, B2], W2),
    ([B2, A2, B2], W2),
    ([B2, B2, A2], W2),
];

fn check(state: &FieldState, mesh: &Mesh) -> Result<()> {
    let expected = 4 * mesh.node_count() + mesh.triangle_count();
    if state.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: state.len(),
        });
    }
    Ok(())
}

fn integrate<F>(state: &FieldState, mesh: &Mesh, mut f: F) -> Result<FieldNorms>
where
    F: FnMut([f64; 2], [f64; 2], [f64; 2], f64) -> ([f64; 2], [f64; 2], f64),
{
    check(state, mesh)?;
    let (mut su, mut sz, mut sp) = (0.0, 0.0, 0.0);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let geo = TriangleGeometry::new(mesh.triangle_vertices(t))?;
        let (uh, zh) = (tri.map(|n| state.u(n)), tri.map(|n| state.z(n)));
        let ph = state.p(t);
        for &(l, w) in &QUADRATURE_7 {
            let mut u = [0.0; 2];
            let mut z = [0.0; 2];
            for k in 0..3 {
                for c in 0..2 {
                    u[c] += l[k] * uh[k][c];
                    z[c] += l[k] * zh[k][c];
                }
            }
            let (du, dz, dp) = f(geo.point(l), u, z, ph);
            let wa = w * geo.area;
            su += wa * (du[0] * du[0] + du[1] * du[1]);
            sz += wa * (dz[0] * dz[0] + dz[1] * dz[1]);
            sp += wa * dp * dp;
        }
    }
    Ok(FieldNorms {
        u: su.sqrt(),
        z: sz.sqrt(),
        p: sp.sqrt(),
    })
}

/// ‖u_h − u‖, ‖z_h − z‖, ‖p_h − p‖ in L²(Ω) against the exact solution at `t`.
pub fn error_norms(state: &FieldState, mesh: &Mesh, params: &ModelParams, t: f64) -> Result<FieldNorms> {
    let ex = ExactSolution::new(params);
    integrate(state, mesh, |x, u, z, p| {
        let e = ex.eval(x[0], x[1], t);
        (
            [u[0] - e.u[0], u[1] - e.u[1]],
            [z[0] - e.z[0], z[1] - e.z[1]],
            p - e.p,
        )
    })
}

/// L² norms of the discrete fields.
pub fn field_norms(state: &FieldState, mesh: &Mesh) -> Result<FieldNorms> {
    integrate(state, mesh, |_, u, z, p| (u, z, p))
}

/// Field-wise L² norms of the difference of two states on the same mesh.
pub fn difference_norms(a: &FieldState, b: &FieldState, mesh: &Mesh) -> Result<FieldNorms> {
    check(b, mesh)?;
    let diff: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    let d = FieldState::from_raw(mesh.node_count(), diff);
    field_norms(&d, mesh)
}

/// Mean of element pressures weighted by area.
pub fn mean_pressure(state: &FieldState, mesh: &Mesh) -> f64 {
    let mut s = 0.0;
    for t in 0..mesh.triangle_count() {
        s += mesh.signed_area(t) * state.p(t);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_dofmap, build_partition, build_structured_mesh, BoundaryConditions, DofMap};

    fn setup(m: usize) -> (Mesh, DofMap) {
        let mesh = build_structured_mesh(m).unwrap();
        let part = build_partition(&mesh, 1).unwrap();
        let dm = build_dofmap(&mesh, &part, &BoundaryConditions::all_essential()).unwrap();
        (mesh, dm)
    }

    #[test]
    fn quadrature_is_degree_five() {
        let w: f64 = QUADRATURE_7.iter().map(|q| q.1).sum();
        assert!((w - 1.0).abs() < 1e-15);
        // ∫ λ₀^a λ₁^b λ₂^c = 2A a! b! c! / (a+b+c+2)!
        let fact = |n: u32| (1..=n).product::<u32>().max(1) as f64;
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                let c = 5 - a - b;
                let q: f64 = QUADRATURE_7
                    .iter()
                    .map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32))
                    .sum();
                let exact = 2.0 * fact(a) * fact(b) * fact(c) / fact(a + b + c + 2);
                assert!((q - exact).abs() < 1e-15, "{a} {b} {c}");
            }
        }
    }

    #[test]
    fn zero_state_pressure_norm() {
        let (mesh, dm) = setup(16);
        let e = error_norms(&FieldState::zeros(&dm), &mesh, &ModelParams::default(), 0.25).unwrap();
        assert!((e.p - 0.5).abs() < 1e-3, "{}", e.p);
    }

    #[test]
    fn interpolant_at_t0_is_exact() {
        let (mesh, dm) = setup(4);
        let p = ModelParams::default();
        let s = FieldState::interpolate(&mesh, &dm, &ExactSolution::new(&p), 0.0);
        let e = error_norms(&s, &mesh, &p, 0.0).unwrap();
        assert_eq!((e.u, e.z, e.p), (0.0, 0.0, 0.0));
    }

    #[test]
    fn interpolation_error_is_second_order() {
        let p = ModelParams::default();
        let ex = ExactSolution::new(&p);
        let err = |m| {
            let (mesh, dm) = setup(m);
            error_norms(&FieldState::interpolate(&mesh, &dm, &ex, 0.25), &mesh, &p, 0.25).unwrap()
        };
        let (e1, e2) = (err(16), err(32));
        let (ru, rz, rp) = (e1.u / e2.u, e1.z / e2.z, e1.p / e2.p);
        assert!((3.6..4.4).contains(&ru), "u ratio {ru}");
        assert!((3.6..4.4).contains(&rz), "z ratio {rz}");
        assert!((1.8..2.2).contains(&rp), "p ratio {rp}");
    }

    #[test]
    fn wrong_length_rejected() {
        let (mesh, _) = setup(2);
        let (_, dm4) = setup(4);
        assert!(error_norms(&FieldState::zeros(&dm4), &mesh, &ModelParams::default(), 0.0).is_err());
    }
}
