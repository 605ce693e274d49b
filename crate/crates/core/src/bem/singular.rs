//! Closed-form potential integrals of a flat triangle,
//! `∫ 1/|r - r'| dS'` and `∫ (r' - r)/|r - r'| dS'`, evaluated edge by edge.

use nalgebra::Vector3;

use crate::geometry::Point;
use crate::{Error, Real, Result};

/// `∫_T dS' / (4π |r - r'|)` for an arbitrary observation point `r`.
pub fn static_singular_integral(triangle: &[Point; 3], observation: &Point) -> Result<f64> {
    let area = 0.5 * (triangle[1] - triangle[0]).cross(&(triangle[2] - triangle[0])).norm();
    let scale = (triangle[1] - triangle[0]).norm_squared().max((triangle[2] - triangle[0]).norm_squared());
    if !(area > 1e-14 * scale) {
        return Err(Error::DegenerateTriangle(0, area));
    }
    let (scalar, _) = potential_integrals(triangle, observation);
    Ok(scalar / (4.0 * std::f64::consts::PI))
}

/// Returns `(∫ 1/R dS', ∫ (r' - r)/R dS')` over a non-degenerate triangle.
pub(crate) fn potential_integrals<T: Real>(tri: &[Vector3<T>; 3], r: &Vector3<T>) -> (T, Vector3<T>) {
    let zero = T::zero();
    let normal = (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).normalize();
    let d = normal.dot(&(r - tri[0]));
    let abs_d = d.abs();
    let rho = r - normal * d;

    let mut scalar = zero;
    let mut planar = Vector3::zeros();
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let edge = b - a;
        let len = edge.norm();
        let l_hat = edge / len;
        let u_hat = l_hat.cross(&normal);

        let l_plus = (b - rho).dot(&l_hat);
        let l_minus = (a - rho).dot(&l_hat);
        let t = (a - rho).dot(&u_hat);
        let r_plus = (b - r).norm();
        let r_minus = (a - r).norm();
        let r0_sq = t * t + d * d;

        // f = ln((R+ + l+) / (R- + l-)), evaluated without cancellation
        // t·f and r0²·f vanish as the observation point approaches the edge line
        let f = if r0_sq <= (T::EPS * len) * (T::EPS * len) {
            zero
        } else if l_minus >= zero {
            ((r_plus + l_plus) / (r_minus + l_minus)).ln()
        } else if l_plus <= zero {
            ((r_minus - l_minus) / (r_plus - l_plus)).ln()
        } else {
            ((r_plus + l_plus) * (r_minus - l_minus) / r0_sq).ln()
        };

        scalar += t * f;
        if abs_d > zero && t != zero {
            let beta = (t * l_plus / (r0_sq + abs_d * r_plus)).atan() - (t * l_minus / (r0_sq + abs_d * r_minus)).atan();
            scalar -= abs_d * beta;
        }
        planar += u_hat * (T::of(0.5) * (r0_sq * f + l_plus * r_plus - l_minus * r_minus));
    }
    // r' - r = (ρ' - ρ) - d n̂ for r' in the triangle plane
    let vector = planar - normal * (d * scalar);
    (scalar, vector)
}
