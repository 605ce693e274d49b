use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use casimir_core::bem::Problem;
use casimir_core::casimir::{
    breakdown_experiment, build_kappa_grid, default_direction, default_kappa0, integrate_energy, integrate_force,
    BreakdownRow, CasimirResult, EngineOptions, ForceSpec, KappaQuadrature, NodeSample,
};
use casimir_core::geometry::{
    capsule_pair, generate_plate, graded_sphere_pair, load_off_objects, sphere_pair, Point, TriScene,
};
use casimir_core::{bem::Formulation, Error as CoreError, Precision};
use nalgebra::Vector3;
use serde_json::{json, Value};

use crate::config::{Integrand, Kappa0, RunConfig, SceneSpec, Task};
use crate::output::{self, Series};

pub const RESULT_FILE: &str = "result.json";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const BREAKDOWN_FILE: &str = "breakdown.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

/// What a run produced.
#[derive(Debug)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub result: Value,
}

pub fn build_scene(spec: &SceneSpec) -> Result<TriScene> {
    let mut scene = match spec {
        SceneSpec::Spheres { radius, gap, subdivisions, grading, .. } => {
            if *grading == 1.0 {
                sphere_pair(*radius, *gap, *subdivisions)?
            } else {
                graded_sphere_pair(*radius, *gap, *subdivisions, *grading)?
            }
        }
        SceneSpec::Capsules { length, radius, gap, resolution, .. } => {
            capsule_pair(*length, *radius, *gap, *resolution)?
        }
        SceneSpec::Plates { side, gap, resolution, .. } => {
            let a = generate_plate(*side, *resolution)?;
            a.combine(&a.translate_object(0, Point::new(0.0, 0.0, *gap))?)?
        }
        SceneSpec::Off { files, .. } => load_off_objects(files)?,
    };
    let t = spec.translations();
    if !t.is_empty() {
        if t.len() != scene.num_objects() {
            bail!("scene.translations has {} entries but the scene has {} objects", t.len(), scene.num_objects());
        }
        for (o, d) in t.iter().enumerate() {
            scene = scene.translate_object(o, Point::new(d[0], d[1], d[2]))?;
        }
    }
    Ok(scene)
}

fn grid(cfg: &RunConfig, scene: &TriScene) -> Result<KappaQuadrature> {
    let kappa0 = match cfg.quadrature.kappa0 {
        Kappa0::Value(k) => k,
        Kappa0::Auto => {
            let gap = scene.vertex_gap().context("kappa0 = \"auto\" needs a scene with at least two objects")?;
            if !(gap > 0.0) {
                bail!("objects touch or overlap (surface gap {gap}); cannot choose kappa0 automatically");
            }
            default_kappa0(gap)
        }
    };
    Ok(build_kappa_grid(kappa0, cfg.quadrature.nodes)?)
}

fn force_spec(cfg: &RunConfig, problem: &Problem) -> Result<ForceSpec> {
    let k = problem.num_objects();
    let object = cfg.force.object.unwrap_or(k.saturating_sub(1));
    if object >= k {
        bail!("force.object = {object} but the scene has {k} objects");
    }
    let direction = match cfg.force.direction {
        Some(d) => Vector3::from(d).normalize(),
        None => default_direction(problem, object)?,
    };
    Ok(ForceSpec { object, direction })
}

fn mesh_stats(problem: &Problem) -> Value {
    let scene = problem.scene();
    let basis = problem.basis();
    let objects: Vec<Value> = (0..problem.num_objects())
        .map(|o| {
            json!({
                "object": o,
                "triangles": scene.object_triangles(o).len(),
                "edges": basis.edge_range(o).len(),
                "patches": basis.patch_range(o).len(),
            })
        })
        .collect();
    json!({
        "objects": objects,
        "edges": basis.num_edges(),
        "patches": basis.num_patches(),
        "surface_gap": scene.vertex_gap(),
        "max_edge_length": scene.max_edge_length(),
    })
}

fn run_json(r: &CasimirResult) -> Value {
    json!({
        "formulation": r.formulation,
        "precision": r.precision,
        "evaluation": r.evaluation,
        "energy": r.energy,
        "force": r.force,
        "force_object": r.force_spec.map(|f| f.object),
        "force_direction": r.force_spec.map(|f| [f.direction.x, f.direction.y, f.direction.z]),
        "kappa0": r.kappa0,
        "nodes": r.nodes,
        "singular_nodes": r.spectrum.iter().filter(|s| s.singular).count(),
        "warnings": r.warnings,
    })
}

/// Executes `cfg`, writing all artifacts into `cfg.output.dir`.
///
/// Any failed node or assembly makes the whole run fail; samples completed
/// before the failure are still written to the spectrum file.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let options = cfg.assembly.options()?;

    let mut files = Vec::new();
    let mut extra = serde_json::Map::new();
    let mesh;

    match cfg.task {
        Task::Energy | Task::Force | Task::Spectrum => {
            let scene = build_scene(&cfg.scene)?;
            let problem = Problem::new(scene, options)?;
            mesh = mesh_stats(&problem);
            let quad = grid(cfg, problem.scene())?;
            let with_force =
                cfg.task == Task::Force || (cfg.task == Task::Spectrum && cfg.spectrum.integrand == Integrand::Force);
            let spec = if with_force { Some(force_spec(cfg, &problem)?) } else { None };

            let mut results: Vec<CasimirResult> = Vec::new();
            let mut failure = None;
            'series: for f in cfg.formulation.list() {
                for p in cfg.precision.list() {
                    let opts = EngineOptions { formulation: f, precision: p, evaluation: cfg.evaluation, ..Default::default() };
                    let r = match spec {
                        Some(s) => integrate_force(&problem, &quad, s.object, s.direction, &opts),
                        None => integrate_energy(&problem, &quad, &opts),
                    };
                    match r {
                        Ok(r) => results.push(r),
                        Err(e) => {
                            failure = Some((f, p, e));
                            break 'series;
                        }
                    }
                }
            }
            let partial: Vec<NodeSample> = match &failure {
                Some((_, _, CoreError::Aborted { completed, .. })) => completed.clone(),
                _ => Vec::new(),
            };
            let mut series: Vec<Series> = results
                .iter()
                .map(|r| Series { formulation: r.formulation, precision: r.precision, samples: &r.spectrum, force: with_force })
                .collect();
            if let Some((f, p, _)) = &failure {
                series.push(Series { formulation: *f, precision: *p, samples: &partial, force: with_force });
            }
            let path = dir.join(SPECTRUM_FILE);
            output::write_spectrum(&path, &series)?;
            files.push(path);
            if let Some((f, p, e)) = failure {
                return Err(anyhow::Error::new(e).context(format!("{f} / {p} run failed")));
            }
            extra.insert("kappa_nodes".into(), json!(quad.nodes));
            extra.insert("runs".into(), Value::Array(results.iter().map(run_json).collect()));
        }
        Task::Breakdown => {
            let scene = build_scene(&cfg.scene)?;
            let problem = Problem::new(scene, options)?;
            mesh = mesh_stats(&problem);
            let quad = grid(cfg, problem.scene())?;
            let spec = force_spec(cfg, &problem)?;
            let forms = cfg.formulation.list();
            let precs = cfg.precision.list();
            let rows = breakdown_experiment(&problem, &quad, &precs, &forms, spec, cfg.evaluation)?;
            let path = dir.join(BREAKDOWN_FILE);
            output::write_breakdown(&path, &rows)?;
            files.push(path);
            extra.insert("force_object".into(), json!(spec.object));
            extra.insert("force_direction".into(), json!([spec.direction.x, spec.direction.y, spec.direction.z]));
            extra.insert("kappa0".into(), json!(quad.kappa0));
            extra.insert("series".into(), breakdown_summary(&rows, &forms, &precs, &quad));
        }
        Task::Sweep => {
            let sweep = cfg.sweep.as_ref().context("sweep task without a [sweep] section")?;
            let f = cfg.formulation.list()[0];
            let p = cfg.precision.list()[0];
            // sweep tables carry no condition estimates, so skip computing them
            let opts = EngineOptions {
                formulation: f,
                precision: p,
                evaluation: cfg.evaluation,
                diagnostics: false,
                ..Default::default()
            };
            let mut rows = Vec::new();
            let mut points = Vec::new();
            let mut first_mesh = None;
            for &gap in &sweep.values {
                let scene = build_scene(&cfg.scene.with_gap(gap)?)?;
                let problem = Problem::new(scene, options)?;
                first_mesh.get_or_insert_with(|| mesh_stats(&problem));
                let quad = grid(cfg, problem.scene())?;
                let spec = force_spec(cfg, &problem)?;
                let r = integrate_force(&problem, &quad, spec.object, spec.direction, &opts)
                    .with_context(|| format!("sweep point gap = {gap}"))?;
                let force = r.force.expect("force requested");
                rows.push((gap, r.energy, force));
                points.push(json!({ "separation": gap, "energy": r.energy, "force": force, "kappa0": r.kappa0, "warnings": r.warnings }));
            }
            mesh = first_mesh.unwrap_or(Value::Null);
            let path = dir.join(SWEEP_FILE);
            output::write_sweep(&path, &rows)?;
            files.push(path);
            extra.insert("formulation".into(), json!(f));
            extra.insert("precision".into(), json!(p));
            extra.insert("points".into(), Value::Array(points));
        }
    }

    let mut result = json!({
        "task": cfg.task,
        "units": {
            "length": "L",
            "kappa": "1/L",
            "energy": "hbar*c/L",
            "force": "hbar*c/L^2",
        },
        "config": cfg,
        "mesh": mesh,
    });
    let obj = result.as_object_mut().expect("object literal");
    obj.extend(extra);
    obj.insert("wall_clock_seconds".into(), json!(start.elapsed().as_secs_f64()));
    let path = dir.join(RESULT_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&result)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    files.insert(0, path);
    Ok(RunReport { files, result })
}

fn breakdown_summary(rows: &[BreakdownRow], forms: &[Formulation], precs: &[Precision], quad: &KappaQuadrature) -> Value {
    let low = quad.nodes.get(2).copied().unwrap_or(f64::INFINITY);
    let mut out = Vec::new();
    for &f in forms {
        for &p in precs {
            let s: Vec<&BreakdownRow> = rows.iter().filter(|r| r.formulation == f && r.precision == p).collect();
            let max = |it: &mut dyn Iterator<Item = &&BreakdownRow>| it.map(|r| r.relative_error).fold(0.0f64, f64::max);
            out.push(json!({
                "formulation": f,
                "precision": p,
                "max_relative_error": max(&mut s.iter()),
                "max_relative_error_lowest_three": max(&mut s.iter().filter(|r| r.kappa <= low)),
                "singular_nodes": s.iter().filter(|r| r.singular).count(),
                "failed_nodes": s.iter().filter(|r| r.error.is_some()).count(),
            }));
        }
    }
    Value::Array(out)
}
