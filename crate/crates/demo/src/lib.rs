//! Browser bindings for three interactive operations: mesh preview, energy
//! spectrum and the single-precision breakdown curve.
//!
//! Every export returns a JSON string; the page in `www/` parses and plots it.
//! The `*_json` functions hold the logic and run natively in tests.

use casimir_core::bem::{AssemblyOptions, Formulation, Problem};
use casimir_core::casimir::{
    build_kappa_grid, default_direction, default_kappa0, full_breakdown, integrate_energy, EngineOptions,
};
use casimir_core::geometry::{capsule_pair, sphere_pair, TriScene};
use casimir_core::Precision;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Keeps a browser tab responsive: dense solves grow with the cube of this.
const MAX_EDGES: usize = 800;

fn scene(kind: &str, gap: f64, resolution: u32) -> Result<TriScene, String> {
    let s = match kind {
        "spheres" => sphere_pair(1.0, gap, resolution),
        "capsules" => capsule_pair(6.0, 1.0, gap, resolution),
        other => return Err(format!("unknown scene '{other}'")),
    };
    s.map_err(|e| e.to_string())
}

fn problem(kind: &str, gap: f64, resolution: u32) -> Result<Problem, String> {
    let p = Problem::new(scene(kind, gap, resolution)?, AssemblyOptions::default()).map_err(|e| e.to_string())?;
    let e = p.basis().num_edges();
    if e > MAX_EDGES {
        return Err(format!("{e} RWG edges is too many for the browser demo (limit {MAX_EDGES}); lower the resolution"));
    }
    Ok(p)
}

#[derive(Serialize)]
struct Mesh {
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
    object_ids: Vec<usize>,
    edges: usize,
    patches: usize,
}

pub fn mesh_preview_json(kind: &str, gap: f64, resolution: u32) -> Result<String, String> {
    let s = scene(kind, gap, resolution)?;
    let p = Problem::new(s, AssemblyOptions::default()).map_err(|e| e.to_string())?;
    let s = p.scene();
    let mesh = Mesh {
        vertices: s.vertices().iter().map(|v| [v.x, v.y, v.z]).collect(),
        triangles: s.triangles().to_vec(),
        object_ids: s.object_ids().to_vec(),
        edges: p.basis().num_edges(),
        patches: p.basis().num_patches(),
    };
    serde_json::to_string(&mesh).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Spectrum {
    kappa: Vec<f64>,
    integrand: Vec<f64>,
    condition_estimate: Vec<Option<f64>>,
    energy: f64,
    warnings: Vec<String>,
}

pub fn energy_spectrum_json(
    kind: &str,
    gap: f64,
    resolution: u32,
    nodes: usize,
    formulation: &str,
    precision: &str,
) -> Result<String, String> {
    let p = problem(kind, gap, resolution)?;
    let q = build_kappa_grid(default_kappa0(gap), nodes).map_err(|e| e.to_string())?;
    let opts = EngineOptions {
        formulation: formulation.parse::<Formulation>().map_err(|e| e.to_string())?,
        precision: precision.parse::<Precision>()?,
        strict: false,
        ..Default::default()
    };
    let r = integrate_energy(&p, &q, &opts).map_err(|e| e.to_string())?;
    let out = Spectrum {
        kappa: r.spectrum.iter().map(|s| s.kappa).collect(),
        integrand: r.spectrum.iter().map(|s| s.energy).collect(),
        condition_estimate: r.spectrum.iter().map(|s| s.condition_estimate).collect(),
        energy: r.energy,
        warnings: r.warnings,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Series {
    formulation: Formulation,
    precision: Precision,
    kappa: Vec<f64>,
    integrand: Vec<f64>,
    relative_error: Vec<f64>,
}

pub fn breakdown_curve_json(kind: &str, gap: f64, resolution: u32, nodes: usize) -> Result<String, String> {
    let p = problem(kind, gap, resolution)?;
    let q = build_kappa_grid(default_kappa0(gap), nodes).map_err(|e| e.to_string())?;
    let object = 1;
    let u = default_direction(&p, object).map_err(|e| e.to_string())?;
    let rows = full_breakdown(&p, &q, object, u).map_err(|e| e.to_string())?;
    let mut series: Vec<Series> = Vec::new();
    for r in rows {
        let s = match series.iter_mut().find(|s| s.formulation == r.formulation && s.precision == r.precision) {
            Some(s) => s,
            None => {
                series.push(Series {
                    formulation: r.formulation,
                    precision: r.precision,
                    kappa: vec![],
                    integrand: vec![],
                    relative_error: vec![],
                });
                series.last_mut().expect("just pushed")
            }
        };
        s.kappa.push(r.kappa);
        s.integrand.push(r.integrand);
        s.relative_error.push(r.relative_error);
    }
    serde_json::to_string(&series).map_err(|e| e.to_string())
}

/// Triangle mesh of a two-body scene (`"spheres"` or `"capsules"`).
#[wasm_bindgen]
pub fn mesh_preview(kind: &str, gap: f64, resolution: u32) -> Result<String, JsError> {
    mesh_preview_json(kind, gap, resolution).map_err(|e| JsError::new(&e))
}

/// Energy integrand over the κ grid plus the integrated energy (ħc/L).
#[wasm_bindgen]
pub fn energy_spectrum(
    kind: &str,
    gap: f64,
    resolution: u32,
    nodes: usize,
    formulation: &str,
    precision: &str,
) -> Result<String, JsError> {
    energy_spectrum_json(kind, gap, resolution, nodes, formulation, precision).map_err(|e| JsError::new(&e))
}

/// Force-integrand error of every formulation × precision series against
/// double-precision A-EFIE.
#[wasm_bindgen]
pub fn breakdown_curve(kind: &str, gap: f64, resolution: u32, nodes: usize) -> Result<String, JsError> {
    breakdown_curve_json(kind, gap, resolution, nodes).map_err(|e| JsError::new(&e))
}
