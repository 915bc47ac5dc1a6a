//! Modulars `rho(u) = integral of H(x, |u|)` and the Luxemburg norm they
//! induce, over fields sampled at mesh quadrature points.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{FeFunction, Mesh, QuadField};
use crate::nfunction::{envelope_over, envelope_under, NFunctionSpec};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModularValue {
    pub value: f64,
    pub quadrature_id: String,
}

/// `sum_q w_q H(x_q, |v_q| / alpha)`
fn scaled_modular(spec: &NFunctionSpec, mesh: &Mesh, field: &QuadField, inv_alpha: f64) -> f64 {
    field
        .0
        .iter()
        .zip(mesh.qp_weights())
        .zip(mesh.qp_coords())
        .map(|((v, w), x)| {
            let s = v.abs() * inv_alpha;
            if s == 0.0 {
                0.0
            } else {
                w * spec.h(x, s)
            }
        })
        .sum()
}

/// Modular of a field given at the quadrature points (function values or
/// gradient magnitudes).
pub fn modular_rho(spec: &NFunctionSpec, mesh: &Mesh, field: &QuadField) -> Result<ModularValue> {
    mesh.check_field(field.0.len())?;
    let value = scaled_modular(spec, mesh, field, 1.0);
    if !value.is_finite() {
        return Err(Error::Numeric(format!("modular is {value}")));
    }
    Ok(ModularValue {
        value,
        quadrature_id: mesh.rule().name().to_string(),
    })
}

/// Modular of `|u|` for a finite element function.
pub fn modular_of(spec: &NFunctionSpec, u: &FeFunction) -> Result<ModularValue> {
    modular_rho(spec, u.mesh(), &u.at_quadrature())
}

/// Luxemburg norm `inf{alpha > 0 : rho(v / alpha) <= 1}`.
///
/// `rho(v/alpha)` is continuous and strictly decreasing in `alpha` for
/// `v != 0`, so the root of `rho(v/alpha) = 1` is bracketed by doubling or
/// halving from `alpha = 1` and then bisected.
pub fn luxemburg_norm(spec: &NFunctionSpec, mesh: &Mesh, field: &QuadField) -> Result<f64> {
    mesh.check_field(field.0.len())?;
    if field.0.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let rho = |alpha: f64| scaled_modular(spec, mesh, field, 1.0 / alpha);
    let (mut lo, mut hi) = (1.0, 1.0);
    if rho(1.0) > 1.0 {
        while rho(hi) > 1.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e30 {
                return Err(Error::Numeric("Luxemburg norm could not be bracketed below 1e30".into()));
            }
        }
    } else {
        while rho(lo) <= 1.0 {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-30 {
                return Err(Error::Numeric("Luxemburg norm could not be bracketed above 1e-30".into()));
            }
        }
    }
    // invariant: rho(lo) > 1 >= rho(hi)
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if rho(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (r_lo, r_hi) = (rho(lo), rho(hi));
    Ok(if (r_lo - 1.0).abs() < (r_hi - 1.0).abs() { lo } else { hi })
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub norm: f64,
    pub modular: f64,
    pub lower: f64,
    pub upper: f64,
    /// Relative amount by which the modular leaves `[lower, upper]`.
    pub violation: f64,
}

impl SandwichReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.violation <= tol
    }
}

/// Compares `rho(v)` with the power envelopes of the norm,
/// `min{|v|^a, |v|^b} <= rho(v) <= max{|v|^a, |v|^b}`, where `a, b` are the
/// lower and upper indices of `H`.
pub fn check_modular_norm_sandwich(
    spec: &NFunctionSpec,
    mesh: &Mesh,
    field: &QuadField,
    indices: (f64, f64),
) -> Result<SandwichReport> {
    let (a, b) = indices;
    if !(a > 1.0 && b.is_finite()) {
        return Err(Error::Argument(format!("indices ({a}, {b}) must satisfy a > 1, b finite")));
    }
    let norm = luxemburg_norm(spec, mesh, field)?;
    let modular = modular_rho(spec, mesh, field)?.value;
    let lower = envelope_under(a, b, norm)?;
    let upper = envelope_over(a, b, norm)?;
    let scale = modular.abs().max(f64::MIN_POSITIVE);
    let violation = ((lower - modular).max(modular - upper)).max(0.0) / scale;
    Ok(SandwichReport {
        norm,
        modular,
        lower,
        upper,
        violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunction::Weight;
    use std::sync::Arc;

    fn square() -> Arc<Mesh> {
        Arc::new(Mesh::unit_square(6, 6).unwrap())
    }

    fn constant_field(mesh: &Mesh, c: f64) -> QuadField {
        QuadField(vec![c; mesh.n_qp()])
    }

    #[test]
    fn zero_function() {
        let m = square();
        let h = NFunctionSpec::power(2.0).unwrap();
        let z = FeFunction::zero(&m);
        assert_eq!(modular_of(&h, &z).unwrap().value, 0.0);
        assert_eq!(luxemburg_norm(&h, &m, &z.at_quadrature()).unwrap(), 0.0);
    }

    #[test]
    fn constant_power_modular() {
        let m = square();
        let h = NFunctionSpec::power(3.0).unwrap();
        let v = modular_rho(&h, &m, &constant_field(&m, 2.0)).unwrap();
        assert!((v.value - 8.0).abs() < 1e-13);
        assert_eq!(v.quadrature_id, "tri_3pt");
    }

    #[test]
    fn norm_of_constants() {
        let m = square();
        let h = NFunctionSpec::power(2.5).unwrap();
        let n = luxemburg_norm(&h, &m, &constant_field(&m, 3.7)).unwrap();
        assert!((n - 3.7).abs() <= 1e-12 * 3.7);
        // measure 1/2 on the interval [0, 1/2]: build a half interval mesh
        let half = Mesh::from_cells(1, vec![[0.0, 0.0], [0.25, 0.0], [0.5, 0.0]], vec![[0, 1, 0], [1, 2, 1]]).unwrap();
        let n = luxemburg_norm(&h, &half, &constant_field(&half, 3.7)).unwrap();
        let oracle = 3.7 * 0.5f64.powf(1.0 / 2.5);
        assert!((n - oracle).abs() <= 1e-9 * oracle);
    }

    #[test]
    fn mismatched_field_is_structural_error() {
        let m = square();
        let h = NFunctionSpec::power(2.0).unwrap();
        assert!(matches!(modular_rho(&h, &m, &QuadField(vec![1.0; 3])), Err(Error::Structure(_))));
    }

    #[test]
    fn unit_norm_gives_unit_modular() {
        let m = square();
        let h = NFunctionSpec::double_phase(1.5, 3.0, Weight::Constant(1.0)).unwrap();
        let u = FeFunction::interpolate(&m, |x| 5.0 * (x[0] * x[1]).sin());
        let f = u.at_quadrature();
        let n = luxemburg_norm(&h, &m, &f).unwrap();
        let scaled = QuadField(f.0.iter().map(|v| v / n).collect());
        let r = check_modular_norm_sandwich(&h, &m, &scaled, (1.5, 3.0)).unwrap();
        assert!((r.norm - 1.0).abs() < 1e-12);
        assert!((r.modular - 1.0).abs() < 1e-10);
        assert!(r.holds(1e-8));
    }
}
