use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Gauss–Legendre rule mapped onto `κ ∈ (0, ∞)` by `κ = κ₀ (1+t)/(1−t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaQuadrature {
    pub kappa0: f64,
    /// Increasing, strictly positive.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl KappaQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_q f(κ_q)` with fixed-order pairwise summation.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = self.weights.iter().zip(values).map(|(w, f)| w * f).collect();
        crate::spectral::pairwise_sum(&terms)
    }
}

pub fn build_kappa_grid(kappa0: f64, n: usize) -> Result<KappaQuadrature> {
    if !(kappa0 > 0.0) || !kappa0.is_finite() {
        return Err(Error::InvalidArgument(format!("κ₀ must be positive and finite, got {kappa0}")));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("κ grid needs at least 2 nodes, got {n}")));
    }
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("n ≥ 2"));
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, weights) = pairs
        .iter()
        .map(|&(t, w)| (kappa0 * (1.0 + t) / (1.0 - t), w * 2.0 * kappa0 / ((1.0 - t) * (1.0 - t))))
        .unzip();
    Ok(KappaQuadrature { kappa0, nodes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_integrates_to_one() {
        // e^{-κ} has an essential singularity at t = 1 in the mapped variable,
        // so convergence is sub-geometric: ~2e-9 at 30 nodes, ~2e-11 at 40.
        let err = |n| {
            let q = build_kappa_grid(1.0, n).unwrap();
            let vals: Vec<f64> = q.nodes.iter().map(|k| (-k).exp()).collect();
            (q.integrate(&vals) - 1.0).abs()
        };
        assert!(err(30) < 5e-9, "{:e}", err(30));
        assert!(err(40) < 1e-10, "{:e}", err(40));
    }

    #[test]
    fn casimir_shaped_integrand() {
        let d = 1.0;
        let q = build_kappa_grid(0.5, 30).unwrap();
        let vals: Vec<f64> = q.nodes.iter().map(|k| k * (-2.0 * k * d).exp()).collect();
        assert!((q.integrate(&vals) - 1.0 / (4.0 * d * d)).abs() < 1e-8);
    }

    #[test]
    fn rational_images_of_polynomials_are_exact() {
        // f(κ) = P(t(κ)) · dt/dκ integrates to ∫ P dt over (-1, 1)
        let k0 = 0.7;
        let n = 6;
        let q = build_kappa_grid(k0, n).unwrap();
        let t_of = |k: f64| (k - k0) / (k + k0);
        let dt = |k: f64| 2.0 * k0 / ((k + k0) * (k + k0));
        for deg in 0..2 * n as i32 {
            let vals: Vec<f64> = q.nodes.iter().map(|&k| t_of(k).powi(deg) * dt(k)).collect();
            let exact = if deg % 2 == 0 { 2.0 / (deg + 1) as f64 } else { 0.0 };
            assert!((q.integrate(&vals) - exact).abs() < 1e-13, "degree {deg}");
        }
    }

    #[test]
    fn nodes_positive_and_increasing() {
        let q = build_kappa_grid(0.125, 20).unwrap();
        assert!(q.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(q.nodes.iter().all(|k| *k > 0.0 && k.is_finite()));
        assert!(q.weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_kappa_grid(0.0, 10).is_err());
        assert!(build_kappa_grid(1.0, 1).is_err());
    }
}
