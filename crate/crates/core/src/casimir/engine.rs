use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use super::quadrature::KappaQuadrature;
use crate::bem::{
    assemble_vp, assemble_vp_gradient, gradient_from_blocks, system_from_blocks, Formulation, Problem,
};
use crate::par::map_indices;
use crate::spectral::{logdet_identity_plus, pairwise_sum, trace_solve, Factorization};
use crate::{Error, Precision, Real, Result};

/// How the normalized log-determinant and its derivative are evaluated.
///
/// `Coupled` factors only the per-object diagonal blocks `Z_aa` and works
/// with the coupling operator `X = Z∞⁻¹(Z − Z∞)`: the energy integrand is
/// `ln det(I + X)` and the force integrand `tr((I + X)⁻¹ Z∞⁻¹ ∂Z)`. Both are
/// small quantities computed directly, so they keep their relative precision
/// where the interaction is exponentially weak. `Direct` subtracts two full
/// log-determinants and solves with the full `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Evaluation {
    #[default]
    Coupled,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineOptions {
    pub formulation: Formulation,
    pub precision: Precision,
    pub evaluation: Evaluation,
    /// Treat numerically singular factorizations as errors.
    pub strict: bool,
    /// Estimate the condition number of the full system at every node.
    pub diagnostics: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            formulation: Formulation::Aefie,
            precision: Precision::Double,
            evaluation: Evaluation::Coupled,
            strict: true,
            diagnostics: true,
        }
    }
}

/// Rigid displacement along which the force is projected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceSpec {
    pub object: usize,
    pub direction: Vector3<f64>,
}

/// Integrands at one κ node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSample {
    pub kappa: f64,
    /// `ln |det Z / det Z∞|`.
    pub energy: f64,
    /// `tr(Z⁻¹ ∂Z) − tr(Z∞⁻¹ ∂Z∞)` when a force was requested.
    pub force: Option<f64>,
    pub condition_estimate: Option<f64>,
    /// Some factorization tripped the `n·ε·max|Z|` pivot test.
    pub singular: bool,
}

/// Outcome of a κ integration. Energies are in `ħc/L`, forces in `ħc/L²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasimirResult {
    pub energy: f64,
    pub force: Option<f64>,
    pub force_spec: Option<ForceSpec>,
    pub formulation: Formulation,
    pub precision: Precision,
    pub evaluation: Evaluation,
    pub nodes: usize,
    pub kappa0: f64,
    pub spectrum: Vec<NodeSample>,
    pub warnings: Vec<String>,
}

/// Unit vector from the centroid of the other objects towards `object`:
/// the direction in which an attractive force is negative.
pub fn default_direction(problem: &Problem, object: usize) -> Result<Vector3<f64>> {
    let scene = problem.scene();
    let k = scene.num_objects();
    if object >= k {
        return Err(Error::UnknownObject(object));
    }
    if k < 2 {
        return Ok(Vector3::x());
    }
    let others = (0..k).filter(|&o| o != object).map(|o| scene.centroid(o)).sum::<Vector3<f64>>() / (k - 1) as f64;
    let d = scene.centroid(object) - others;
    let n = d.norm();
    if n > 1e-12 * scene.max_edge_length() {
        Ok(d / n)
    } else {
        Ok(Vector3::x())
    }
}

fn sub<T: Real>(m: &DMatrix<T>, rows: &[usize], cols: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// `Σ_ij A_ij B_ji` in fixed order.
fn trace_of_product<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    let terms: Vec<f64> = (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| (a[(i, j)] * b[(j, i)]).to_f64()).sum::<f64>())
        .collect();
    pairwise_sum(&terms)
}

fn evaluate<T: Real>(problem: &Problem, kappa: f64, force: Option<ForceSpec>, opts: &EngineOptions) -> Result<NodeSample> {
    let (v, p) = assemble_vp::<T>(problem, kappa)?;
    let z = system_from_blocks(problem, opts.formulation, kappa, &v, &p)?;
    drop((v, p));
    let g = match force {
        Some(spec) => {
            let (dv, dp) = assemble_vp_gradient::<T>(problem, kappa, spec.object, spec.direction)?;
            Some(gradient_from_blocks(problem, opts.formulation, kappa, spec.object, spec.direction, &dv, &dp)?)
        }
        None => None,
    };

    let k = problem.num_objects();
    let blocks: Vec<Vec<usize>> = (0..k).map(|a| z.object_indices(a)).collect();
    let facts = blocks
        .iter()
        .map(|ix| Factorization::new(sub(&z.matrix, ix, ix)))
        .collect::<Result<Vec<_>>>()?;
    let mut singular = false;
    for f in &facts {
        if opts.strict {
            f.check_singular()?;
        }
        singular |= f.is_singular();
    }
    let full = if opts.evaluation == Evaluation::Direct || opts.diagnostics {
        let f = Factorization::new(z.matrix.clone())?;
        if opts.evaluation == Evaluation::Direct {
            if opts.strict {
                f.check_singular()?;
            }
            singular |= f.is_singular();
        }
        Some(f)
    } else {
        None
    };
    let condition_estimate = if opts.diagnostics { full.as_ref().map(|f| f.condition_estimate()) } else { None };

    let (energy, force_val) = if k == 1 {
        // nothing couples: Z = Z∞
        (0.0, g.as_ref().map(|_| 0.0))
    } else {
        match opts.evaluation {
            Evaluation::Direct => {
                let full = full.as_ref().expect("factored above");
                let blocks_ld = facts.iter().map(|f| f.logdet().map(|l| l.log_abs)).collect::<Result<Vec<_>>>()?;
                let energy = full.logdet()?.log_abs - pairwise_sum(&blocks_ld);
                let force_val = match &g {
                    Some(g) => {
                        let t = trace_solve(full, &g.matrix)?;
                        // ∂Z∞ keeps only the self blocks of ∂Z, which vanish for rigid motion
                        let mut t_inf = 0.0;
                        for (f, ix) in facts.iter().zip(&blocks) {
                            t_inf += trace_solve(f, &sub(&g.matrix, ix, ix))?;
                        }
                        debug_assert!(t_inf == 0.0);
                        Some(t - t_inf)
                    }
                    None => None,
                };
                (energy, force_val)
            }
            Evaluation::Coupled if k == 2 => {
                let (b0, b1) = (&blocks[0], &blocks[1]);
                let x12 = facts[0].solve(&sub(&z.matrix, b0, b1))?;
                let x21 = facts[1].solve(&sub(&z.matrix, b1, b0))?;
                // det(I + X) = det(I − X12 X21) for the two-block coupling
                let e = -(&x12 * &x21);
                let energy = logdet_identity_plus(&e)?.log_abs;
                let force_val = match &g {
                    Some(g) => {
                        let q12 = facts[0].solve(&sub(&g.matrix, b0, b1))?;
                        let q21 = facts[1].solve(&sub(&g.matrix, b1, b0))?;
                        let mut s = e;
                        for i in 0..s.nrows() {
                            s[(i, i)] += T::one();
                        }
                        let fs = Factorization::new(s)?;
                        let r = &x12 * &q21 + &q12 * &x21;
                        Some(-trace_solve(&fs, &r)?)
                    }
                    None => None,
                };
                (energy, force_val)
            }
            Evaluation::Coupled => {
                let n = z.dim();
                let scatter_solved = |m: &DMatrix<T>| -> Result<DMatrix<T>> {
                    let mut out = DMatrix::zeros(n, n);
                    for (a, ia) in blocks.iter().enumerate() {
                        for (b, ib) in blocks.iter().enumerate() {
                            if a == b {
                                continue;
                            }
                            let y = facts[a].solve(&sub(m, ia, ib))?;
                            for (jj, &j) in ib.iter().enumerate() {
                                for (ii, &i) in ia.iter().enumerate() {
                                    out[(i, j)] = y[(ii, jj)];
                                }
                            }
                        }
                    }
                    Ok(out)
                };
                let x = scatter_solved(&z.matrix)?;
                let energy = logdet_identity_plus(&x)?.log_abs;
                let force_val = match &g {
                    Some(g) => {
                        let y = scatter_solved(&g.matrix)?;
                        let mut ipx = x.clone();
                        for i in 0..n {
                            ipx[(i, i)] += T::one();
                        }
                        let w = Factorization::new(ipx)?.solve(&y)?;
                        // tr((I+X)⁻¹Y) = tr(Y) − tr(X (I+X)⁻¹ Y), and Y has zero diagonal blocks
                        Some(-trace_of_product(&x, &w))
                    }
                    None => None,
                };
                (energy, force_val)
            }
        }
    };

    if !energy.is_finite() || force_val.is_some_and(|f| !f.is_finite()) {
        return Err(Error::InvalidArgument("non-finite integrand".into()));
    }
    Ok(NodeSample { kappa, energy, force: force_val, condition_estimate, singular })
}

/// Energy and (optionally) force integrands at one node.
pub fn sample_node(problem: &Problem, kappa: f64, force: Option<ForceSpec>, opts: &EngineOptions) -> Result<NodeSample> {
    let r = match opts.precision {
        Precision::Single => evaluate::<f32>(problem, kappa, force, opts),
        Precision::Double => evaluate::<f64>(problem, kappa, force, opts),
    };
    r.map_err(|e| e.at_node(kappa))
}

/// `ln det Z(κ) / det Z∞(κ)`.
pub fn energy_integrand(problem: &Problem, kappa: f64, opts: &EngineOptions) -> Result<f64> {
    sample_node(problem, kappa, None, opts).map(|s| s.energy)
}

/// `∂_u ln det Z(κ) / det Z∞(κ)` for a rigid displacement of `object` along `direction`.
pub fn force_integrand(
    problem: &Problem,
    kappa: f64,
    object: usize,
    direction: Vector3<f64>,
    opts: &EngineOptions,
) -> Result<f64> {
    let s = sample_node(problem, kappa, Some(ForceSpec { object, direction }), opts)?;
    Ok(s.force.expect("force requested"))
}

fn run(problem: &Problem, quad: &KappaQuadrature, force: Option<ForceSpec>, opts: &EngineOptions) -> Result<CasimirResult> {
    let results = map_indices(0..quad.len(), |q| sample_node(problem, quad.nodes[q], force, opts));
    let mut spectrum = Vec::with_capacity(quad.len());
    let mut first_error = None;
    for r in results {
        match r {
            Ok(s) => spectrum.push(s),
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    if let Some(e) = first_error {
        return Err(Error::Aborted { completed: spectrum, source: Box::new(e) });
    }

    let inv2pi = 0.5 / std::f64::consts::PI;
    let energies: Vec<f64> = spectrum.iter().map(|s| s.energy).collect();
    let energy = inv2pi * quad.integrate(&energies);
    let force_val = force.map(|_| {
        let f: Vec<f64> = spectrum.iter().map(|s| s.force.unwrap_or(0.0)).collect();
        -inv2pi * quad.integrate(&f)
    });

    let mut warnings = Vec::new();
    if problem.num_objects() > 1 {
        for s in &spectrum {
            if s.energy > 0.0 {
                warnings.push(format!("positive energy integrand {:e} at κ = {:e}", s.energy, s.kappa));
            }
        }
    }
    let decay_check = |vals: &[f64], what: &str, warnings: &mut Vec<String>| {
        let max = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(last) = vals.last() {
            if max > 0.0 && last.abs() >= 1e-6 * max {
                warnings.push(format!(
                    "{what} integrand has not decayed at the largest node (|f(κ_max)| / max|f| = {:e})",
                    last.abs() / max
                ));
            }
        }
    };
    decay_check(&energies, "energy", &mut warnings);
    if force.is_some() {
        let f: Vec<f64> = spectrum.iter().map(|s| s.force.unwrap_or(0.0)).collect();
        decay_check(&f, "force", &mut warnings);
    }
    for s in &spectrum {
        if s.singular {
            warnings.push(format!("numerically singular factorization at κ = {:e}", s.kappa));
        }
    }

    Ok(CasimirResult {
        energy,
        force: force_val,
        force_spec: force,
        formulation: opts.formulation,
        precision: opts.precision,
        evaluation: opts.evaluation,
        nodes: quad.len(),
        kappa0: quad.kappa0,
        spectrum,
        warnings,
    })
}

/// `E = (1/2π) Σ w_q ln det Z(κ_q)/det Z∞(κ_q)`.
pub fn integrate_energy(problem: &Problem, quad: &KappaQuadrature, opts: &EngineOptions) -> Result<CasimirResult> {
    run(problem, quad, None, opts)
}

/// `F = −(1/2π) Σ w_q ∂_u ln det Z(κ_q)/det Z∞(κ_q)`; the energy is returned too.
pub fn integrate_force(
    problem: &Problem,
    quad: &KappaQuadrature,
    object: usize,
    direction: Vector3<f64>,
    opts: &EngineOptions,
) -> Result<CasimirResult> {
    if object >= problem.num_objects() {
        return Err(Error::UnknownObject(object));
    }
    run(problem, quad, Some(ForceSpec { object, direction }), opts)
}

/// A problem bundled with its evaluation options.
#[derive(Debug, Clone)]
pub struct Engine {
    problem: Problem,
    options: EngineOptions,
}

impl Engine {
    pub fn new(problem: Problem, options: EngineOptions) -> Self {
        Engine { problem, options }
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    pub fn energy_integrand(&self, kappa: f64) -> Result<f64> {
        energy_integrand(&self.problem, kappa, &self.options)
    }

    pub fn force_integrand(&self, kappa: f64, object: usize, direction: Vector3<f64>) -> Result<f64> {
        force_integrand(&self.problem, kappa, object, direction, &self.options)
    }

    pub fn integrate_energy(&self, quad: &KappaQuadrature) -> Result<CasimirResult> {
        integrate_energy(&self.problem, quad, &self.options)
    }

    pub fn integrate_force(&self, quad: &KappaQuadrature, object: usize, direction: Vector3<f64>) -> Result<CasimirResult> {
        integrate_force(&self.problem, quad, object, direction, &self.options)
    }
}
