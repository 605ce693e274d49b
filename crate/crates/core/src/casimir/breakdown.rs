use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::engine::{sample_node, EngineOptions, Evaluation, ForceSpec};
use super::quadrature::KappaQuadrature;
use crate::bem::{Formulation, Problem};
use crate::par::map_indices;
use crate::{Precision, Result};

/// Relative errors are measured against `max(|ref|, REFERENCE_FLOOR · max|ref|)`,
/// so nodes where the reference has decayed (or underflows in single
/// precision) do not report meaningless ratios.
pub const REFERENCE_FLOOR: f64 = 1e-6;

/// One `(κ, formulation, precision)` force-integrand sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub kappa: f64,
    pub formulation: Formulation,
    pub precision: Precision,
    /// `NaN` when the evaluation failed.
    pub integrand: f64,
    pub condition_estimate: f64,
    pub relative_error: f64,
    pub singular: bool,
    pub error: Option<String>,
}

/// Force integrand of every formulation × precision series on the κ grid,
/// with errors relative to double-precision A-EFIE.
///
/// Singular factorizations do not abort a series: the value is computed
/// anyway and flagged, since the breakdown itself is what is being measured.
pub fn breakdown_experiment(
    problem: &Problem,
    quad: &KappaQuadrature,
    precisions: &[Precision],
    formulations: &[Formulation],
    force: ForceSpec,
    evaluation: Evaluation,
) -> Result<Vec<BreakdownRow>> {
    let reference_opts = EngineOptions {
        formulation: Formulation::Aefie,
        precision: Precision::Double,
        evaluation,
        strict: true,
        diagnostics: true,
    };
    let reference = map_indices(0..quad.len(), |q| sample_node(problem, quad.nodes[q], Some(force), &reference_opts))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let ref_vals: Vec<f64> = reference.iter().map(|s| s.force.expect("force requested")).collect();
    let ref_max = ref_vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut rows = Vec::new();
    for &formulation in formulations {
        for &precision in precisions {
            let samples = if formulation == Formulation::Aefie && precision == Precision::Double {
                reference.iter().cloned().map(Ok).collect()
            } else {
                let opts = EngineOptions { formulation, precision, evaluation, strict: false, diagnostics: true };
                map_indices(0..quad.len(), |q| sample_node(problem, quad.nodes[q], Some(force), &opts))
            };
            for (q, s) in samples.into_iter().enumerate() {
                let row = match s {
                    Ok(s) => {
                        let val = s.force.expect("force requested");
                        let denom = ref_vals[q].abs().max(REFERENCE_FLOOR * ref_max);
                        BreakdownRow {
                            kappa: s.kappa,
                            formulation,
                            precision,
                            integrand: val,
                            condition_estimate: s.condition_estimate.unwrap_or(f64::NAN),
                            relative_error: if denom > 0.0 { (val - ref_vals[q]).abs() / denom } else { 0.0 },
                            singular: s.singular,
                            error: None,
                        }
                    }
                    Err(e) => BreakdownRow {
                        kappa: quad.nodes[q],
                        formulation,
                        precision,
                        integrand: f64::NAN,
                        condition_estimate: f64::NAN,
                        relative_error: f64::NAN,
                        singular: true,
                        error: Some(e.to_string()),
                    },
                };
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Convenience wrapper: all four series for `object` moved along `direction`.
pub fn full_breakdown(
    problem: &Problem,
    quad: &KappaQuadrature,
    object: usize,
    direction: Vector3<f64>,
) -> Result<Vec<BreakdownRow>> {
    breakdown_experiment(
        problem,
        quad,
        &[Precision::Single, Precision::Double],
        &[Formulation::Efie, Formulation::Aefie],
        ForceSpec { object, direction },
        Evaluation::Coupled,
    )
}
