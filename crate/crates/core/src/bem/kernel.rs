//! The imaginary-frequency scalar Green's function `e^{-κR} / (4πR)`.

use crate::Real;

/// `e^{-κR} / (4πR)`.
///
/// `R = 0` is a contract violation: coincident points must go through the
/// singular integration path.
pub fn kernel_g(r: f64, kappa: f64) -> f64 {
    assert!(r > 0.0, "kernel_g evaluated at R = {r}");
    (-kappa * r).exp() / (4.0 * std::f64::consts::PI * r)
}

#[inline]
pub(crate) fn green<T: Real>(r: T, kappa: T, inv4pi: T) -> T {
    (-kappa * r).exp() * inv4pi / r
}

/// `(e^{-κR} - 1) / (4πR)`, continuous through `R = 0` where it equals `-κ/(4π)`.
#[inline]
pub(crate) fn green_smooth<T: Real>(r: T, kappa: T, inv4pi: T) -> T {
    let x = kappa * r;
    if x > T::of(1e-3) {
        (-x).exp_m1() * inv4pi / r
    } else {
        // series of expm1(-x)/x, accurate where the quotient would lose digits
        let series = -T::one() + x * (T::of(0.5) - x * (T::of(1.0 / 6.0) - x * T::of(1.0 / 24.0)));
        kappa * series * inv4pi
    }
}

/// `dg/dR = -(1 + κR) e^{-κR} / (4πR²)`.
#[inline]
pub(crate) fn green_deriv<T: Real>(r: T, kappa: T, inv4pi: T) -> T {
    -(T::one() + kappa * r) * (-kappa * r).exp() * inv4pi / (r * r)
}
