//! TOML run configuration.
//!
//! Parsing happens in two stages: a permissive raw layer (every key optional,
//! unknown keys rejected) and a validation pass that applies defaults and
//! reports every missing key at once. The resolved [`RunConfig`] serializes
//! back into the same schema, so the echo stored with each result can be fed
//! straight back to the CLI.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use casimir_core::bem::{AssemblyOptions, ChargeGauge, Formulation, TriangleRule};
use casimir_core::casimir::Evaluation;
use casimir_core::Precision;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Energy,
    Force,
    Spectrum,
    Breakdown,
    Sweep,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Energy => "energy",
            Task::Force => "force",
            Task::Spectrum => "spectrum",
            Task::Breakdown => "breakdown",
            Task::Sweep => "sweep",
        })
    }
}

/// `"efie"`, `"aefie"` or `"both"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulationChoice {
    One(Formulation),
    Both,
}

impl FormulationChoice {
    pub fn list(self) -> Vec<Formulation> {
        match self {
            FormulationChoice::One(f) => vec![f],
            FormulationChoice::Both => vec![Formulation::Efie, Formulation::Aefie],
        }
    }
}

impl std::str::FromStr for FormulationChoice {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("both") {
            return Ok(FormulationChoice::Both);
        }
        Ok(FormulationChoice::One(s.parse()?))
    }
}

impl fmt::Display for FormulationChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormulationChoice::One(x) => write!(f, "{x}"),
            FormulationChoice::Both => f.write_str("both"),
        }
    }
}

/// `"single"`, `"double"` or `"both"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecisionChoice {
    One(Precision),
    Both,
}

impl PrecisionChoice {
    pub fn list(self) -> Vec<Precision> {
        match self {
            PrecisionChoice::One(p) => vec![p],
            PrecisionChoice::Both => vec![Precision::Single, Precision::Double],
        }
    }
}

impl std::str::FromStr for PrecisionChoice {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("both") {
            return Ok(PrecisionChoice::Both);
        }
        s.parse().map(PrecisionChoice::One).map_err(|e: String| anyhow!(e))
    }
}

impl fmt::Display for PrecisionChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecisionChoice::One(x) => write!(f, "{x}"),
            PrecisionChoice::Both => f.write_str("both"),
        }
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}
string_serde!(FormulationChoice);
string_serde!(PrecisionChoice);

/// Lower end of the κ map: `"auto"` means `1/(2·gap)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kappa0 {
    Auto,
    Value(f64),
}

impl Serialize for Kappa0 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Kappa0::Auto => s.serialize_str("auto"),
            Kappa0::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Kappa0 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Kappa0::Value(v)),
            Raw::Str(s) if s == "auto" => Ok(Kappa0::Auto),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("kappa0 must be a number or \"auto\", got \"{s}\""))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrand {
    #[default]
    Energy,
    Force,
}

// ---------------------------------------------------------------- raw layer

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    task: Option<OneOrMany<Task>>,
    formulation: Option<FormulationChoice>,
    precision: Option<PrecisionChoice>,
    evaluation: Option<Evaluation>,
    scene: Option<RawScene>,
    quadrature: Option<RawQuadrature>,
    assembly: Option<RawAssembly>,
    force: Option<RawForce>,
    spectrum: Option<RawSpectrum>,
    sweep: Option<RawSweep>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    kind: Option<String>,
    radius: Option<f64>,
    gap: Option<f64>,
    length: Option<f64>,
    side: Option<f64>,
    subdivisions: Option<u32>,
    grading: Option<f64>,
    resolution: Option<u32>,
    files: Option<Vec<PathBuf>>,
    translations: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuadrature {
    nodes: Option<usize>,
    kappa0: Option<Kappa0>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAssembly {
    rule: Option<usize>,
    near_factor: Option<f64>,
    gauge: Option<ChargeGauge>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForce {
    object: Option<usize>,
    direction: Option<[f64; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectrum {
    integrand: Option<Integrand>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    variable: Option<String>,
    values: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    steps: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

// ----------------------------------------------------------- resolved layer

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SceneSpec {
    /// Two equal icospheres separated along x, optionally graded so the
    /// mesh is finest where the spheres face each other.
    Spheres {
        radius: f64,
        gap: f64,
        subdivisions: u32,
        #[serde(default = "unit_grading")]
        grading: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        translations: Vec<[f64; 3]>,
    },
    /// Two parallel capsules (axes along z) separated along x.
    Capsules {
        length: f64,
        radius: f64,
        gap: f64,
        resolution: u32,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        translations: Vec<[f64; 3]>,
    },
    /// Two square plates stacked along z.
    Plates {
        side: f64,
        gap: f64,
        resolution: u32,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        translations: Vec<[f64; 3]>,
    },
    /// One OFF file per object.
    Off {
        files: Vec<PathBuf>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        translations: Vec<[f64; 3]>,
    },
}

fn unit_grading() -> f64 {
    1.0
}

impl SceneSpec {
    pub fn translations(&self) -> &[[f64; 3]] {
        match self {
            SceneSpec::Spheres { translations, .. }
            | SceneSpec::Capsules { translations, .. }
            | SceneSpec::Plates { translations, .. }
            | SceneSpec::Off { translations, .. } => translations,
        }
    }

    /// Copy of the scene with its generator gap replaced.
    pub fn with_gap(&self, new_gap: f64) -> Result<SceneSpec> {
        let mut s = self.clone();
        match &mut s {
            SceneSpec::Spheres { gap, .. } | SceneSpec::Capsules { gap, .. } | SceneSpec::Plates { gap, .. } => {
                *gap = new_gap
            }
            SceneSpec::Off { .. } => bail!("OFF scenes have no gap parameter to sweep"),
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub nodes: usize,
    pub kappa0: Kappa0,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblySpec {
    /// Points of the base triangle rule (1, 3, 6, 12 or 48).
    pub rule: usize,
    pub near_factor: f64,
    pub gauge: ChargeGauge,
}

impl AssemblySpec {
    pub fn options(&self) -> Result<AssemblyOptions> {
        Ok(AssemblyOptions {
            rule: TriangleRule::from_points(self.rule)?,
            near_factor: self.near_factor,
            gauge: self.gauge,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceConfig {
    /// Defaults to the last object.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub object: Option<usize>,
    /// Defaults to the unit vector pointing away from the other objects.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub integrand: Integrand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub formulation: FormulationChoice,
    pub precision: PrecisionChoice,
    pub evaluation: Evaluation,
    pub scene: SceneSpec,
    pub quadrature: QuadratureSpec,
    pub assembly: AssemblySpec,
    pub force: ForceConfig,
    pub spectrum: SpectrumConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    pub output: OutputSpec,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub task: Option<Task>,
    pub formulation: Option<FormulationChoice>,
    pub precision: Option<PrecisionChoice>,
    pub nodes: Option<usize>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_NODES: usize = 20;

impl RunConfig {
    pub fn load(path: impl AsRef<Path>, overrides: &Overrides) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, overrides).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Parses and validates config text; relative OFF paths resolve against `base`.
    pub fn parse(text: &str, base: &Path, overrides: &Overrides) -> Result<RunConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            if e.message().contains("duplicate key") && e.message().contains("task") {
                anyhow!("exactly one task may be requested, but `task` is given more than once")
            } else {
                anyhow!("{e}")
            }
        })?;
        resolve(raw, base, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs always serialize")
    }
}

fn resolve(raw: RawConfig, base: &Path, ov: &Overrides) -> Result<RunConfig> {
    let mut missing: Vec<&str> = Vec::new();

    let task = match (raw.task, ov.task) {
        (Some(OneOrMany::Many(v)), _) if v.len() != 1 => {
            bail!("exactly one task may be requested, got {}", v.len())
        }
        (Some(t), cli) => {
            let t = match t {
                OneOrMany::One(t) => t,
                OneOrMany::Many(v) => v[0],
            };
            if let Some(c) = cli {
                if c != t {
                    bail!("exactly one task may be requested: the config asks for `{t}`, the command line for `{c}`");
                }
            }
            Some(t)
        }
        (None, cli) => cli,
    };
    if task.is_none() {
        missing.push("task");
    }

    let scene = resolve_scene(raw.scene.unwrap_or_default(), base, &mut missing)?;

    let sweep = match (task, raw.sweep) {
        (Some(Task::Sweep), Some(s)) => resolve_sweep(s, &mut missing)?,
        (Some(Task::Sweep), None) => {
            missing.push("sweep");
            None
        }
        (_, Some(_)) => bail!("a [sweep] section is only valid with task = \"sweep\""),
        (_, None) => None,
    };

    if !missing.is_empty() {
        bail!("missing required keys: {}", missing.join(", "));
    }
    let task = task.expect("checked above");
    let scene = scene.expect("checked above");

    // breakdown compares every series unless told otherwise
    let (default_f, default_p) = match task {
        Task::Breakdown => (FormulationChoice::Both, PrecisionChoice::Both),
        _ => (FormulationChoice::One(Formulation::Aefie), PrecisionChoice::One(Precision::Double)),
    };
    let formulation = ov.formulation.or(raw.formulation).unwrap_or(default_f);
    let precision = ov.precision.or(raw.precision).unwrap_or(default_p);
    if task == Task::Sweep && (formulation == FormulationChoice::Both || precision == PrecisionChoice::Both) {
        bail!("a sweep runs a single formulation and precision; \"both\" is not allowed");
    }

    let q = raw.quadrature.unwrap_or_default();
    let quadrature = QuadratureSpec {
        nodes: ov.nodes.or(q.nodes).unwrap_or(DEFAULT_NODES),
        kappa0: q.kappa0.unwrap_or(Kappa0::Auto),
    };
    if quadrature.nodes < 2 {
        bail!("quadrature.nodes must be at least 2, got {}", quadrature.nodes);
    }
    if let Kappa0::Value(k) = quadrature.kappa0 {
        if !(k > 0.0 && k.is_finite()) {
            bail!("quadrature.kappa0 must be positive, got {k}");
        }
    }

    let a = raw.assembly.unwrap_or_default();
    let defaults = AssemblyOptions::default();
    let assembly = AssemblySpec {
        rule: a.rule.unwrap_or(defaults.rule.num_points()),
        near_factor: a.near_factor.unwrap_or(defaults.near_factor),
        gauge: a.gauge.unwrap_or(defaults.gauge),
    };
    assembly.options()?;
    if !(assembly.near_factor >= 0.0) {
        bail!("assembly.near_factor must be non-negative");
    }

    let f = raw.force.unwrap_or_default();
    if let Some(d) = f.direction {
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            bail!("force.direction must be a nonzero vector");
        }
    }
    let force = ForceConfig { object: f.object, direction: f.direction };

    Ok(RunConfig {
        task,
        formulation,
        precision,
        evaluation: raw.evaluation.unwrap_or_default(),
        scene,
        quadrature,
        assembly,
        force,
        spectrum: SpectrumConfig { integrand: raw.spectrum.and_then(|s| s.integrand).unwrap_or_default() },
        sweep,
        output: OutputSpec { dir: ov.out.clone().or(raw.output.and_then(|o| o.dir)).unwrap_or_else(|| "out".into()) },
    })
}

fn resolve_scene(s: RawScene, base: &Path, missing: &mut Vec<&str>) -> Result<Option<SceneSpec>> {
    let Some(kind) = s.kind.as_deref() else {
        missing.push("scene.kind");
        return Ok(None);
    };
    let present: Vec<(&str, bool)> = vec![
        ("radius", s.radius.is_some()),
        ("gap", s.gap.is_some()),
        ("length", s.length.is_some()),
        ("side", s.side.is_some()),
        ("subdivisions", s.subdivisions.is_some()),
        ("grading", s.grading.is_some()),
        ("resolution", s.resolution.is_some()),
        ("files", s.files.is_some()),
    ];
    let (required, optional): (&[&str], &[&str]) = match kind {
        "spheres" => (&["radius", "gap"], &["subdivisions", "grading"]),
        "capsules" => (&["length", "radius", "gap"], &["resolution"]),
        "plates" => (&["side", "gap"], &["resolution"]),
        "off" => (&["files"], &[]),
        other => bail!("unknown scene.kind \"{other}\" (expected spheres, capsules, plates or off)"),
    };
    for (key, is_set) in &present {
        if *is_set && !required.contains(key) && !optional.contains(key) {
            bail!("scene.{key} does not apply to scene.kind = \"{kind}\"");
        }
    }
    let before = missing.len();
    for key in required {
        if !present.iter().any(|(k, set)| k == key && *set) {
            missing.push(match *key {
                "radius" => "scene.radius",
                "gap" => "scene.gap",
                "length" => "scene.length",
                "side" => "scene.side",
                _ => "scene.files",
            });
        }
    }
    if missing.len() > before {
        return Ok(None);
    }
    let positive = |name: &str, v: f64| -> Result<f64> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            bail!("scene.{name} must be positive, got {v}")
        }
    };
    let translations = s.translations.unwrap_or_default();
    let spec = match kind {
        "spheres" => SceneSpec::Spheres {
            radius: positive("radius", s.radius.unwrap())?,
            gap: positive("gap", s.gap.unwrap())?,
            subdivisions: s.subdivisions.unwrap_or(2),
            grading: match s.grading {
                Some(g) if !(g >= 1.0 && g.is_finite()) => bail!("scene.grading must be at least 1, got {g}"),
                Some(g) => g,
                None => 1.0,
            },
            translations,
        },
        "capsules" => SceneSpec::Capsules {
            length: positive("length", s.length.unwrap())?,
            radius: positive("radius", s.radius.unwrap())?,
            gap: positive("gap", s.gap.unwrap())?,
            resolution: s.resolution.unwrap_or(2),
            translations,
        },
        "plates" => SceneSpec::Plates {
            side: positive("side", s.side.unwrap())?,
            gap: positive("gap", s.gap.unwrap())?,
            resolution: s.resolution.unwrap_or(4),
            translations,
        },
        _ => {
            let files: Vec<PathBuf> = s.files.unwrap().into_iter().map(|f| base.join(f)).collect();
            if files.is_empty() {
                bail!("scene.files must list at least one OFF file");
            }
            for f in &files {
                if !f.is_file() {
                    bail!("scene file {} does not exist", f.display());
                }
            }
            SceneSpec::Off { files, translations }
        }
    };
    Ok(Some(spec))
}

fn resolve_sweep(s: RawSweep, missing: &mut Vec<&str>) -> Result<Option<SweepSpec>> {
    let variable = match s.variable {
        Some(v) if v == "gap" => v,
        Some(v) => bail!("sweep.variable \"{v}\" is not supported (expected \"gap\")"),
        None => {
            missing.push("sweep.variable");
            String::new()
        }
    };
    let values = match (s.values, s.start, s.stop, s.steps) {
        (Some(v), None, None, None) => v,
        (None, Some(a), Some(b), Some(n)) => {
            if n < 2 {
                bail!("sweep.steps must be at least 2, got {n}");
            }
            (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
        }
        (None, None, None, None) => {
            missing.push("sweep.values");
            Vec::new()
        }
        _ => bail!("give either sweep.values or all of sweep.start, sweep.stop, sweep.steps"),
    };
    if variable.is_empty() || values.is_empty() && missing.contains(&"sweep.values") {
        return Ok(None);
    }
    if values.is_empty() {
        bail!("sweep range is empty");
    }
    if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        bail!("sweep values must be positive separations");
    }
    let up = values.windows(2).all(|w| w[0] < w[1]);
    let down = values.windows(2).all(|w| w[0] > w[1]);
    if !(up || down) {
        bail!("sweep values must be strictly monotone");
    }
    Ok(Some(SweepSpec { variable, values }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("."), &Overrides::default())
    }

    const MINIMAL: &str = r#"
task = "energy"
[scene]
kind = "spheres"
radius = 1
gap = 1
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.task, Task::Energy);
        assert_eq!(c.quadrature.nodes, 20);
        assert_eq!(c.quadrature.kappa0, Kappa0::Auto);
        assert_eq!(c.formulation, FormulationChoice::One(Formulation::Aefie));
        assert_eq!(c.precision, PrecisionChoice::One(Precision::Double));
        assert_eq!(c.scene, SceneSpec::Spheres { radius: 1.0, gap: 1.0, subdivisions: 2, grading: 1.0, translations: vec![] });
    }

    #[test]
    fn echo_round_trips() {
        let c = parse(MINIMAL).unwrap();
        let again = parse(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), c);
    }

    #[test]
    fn two_tasks_are_rejected() {
        let dup = "task = \"energy\"\ntask = \"force\"\n[scene]\nkind = \"spheres\"\nradius = 1\ngap = 1\n";
        let e = parse(dup).unwrap_err().to_string();
        assert!(e.contains("exactly one task"), "{e}");
        let list = "task = [\"energy\", \"force\"]\n[scene]\nkind = \"spheres\"\nradius = 1\ngap = 1\n";
        assert!(parse(list).unwrap_err().to_string().contains("exactly one task"));
        let ov = Overrides { task: Some(Task::Force), ..Default::default() };
        let e = RunConfig::parse(MINIMAL, Path::new("."), &ov).unwrap_err().to_string();
        assert!(e.contains("exactly one task"), "{e}");
    }

    #[test]
    fn missing_keys_are_listed_together() {
        let e = parse("[scene]\nkind = \"capsules\"\nradius = 1\n").unwrap_err().to_string();
        for key in ["task", "scene.length", "scene.gap"] {
            assert!(e.contains(key), "{e}");
        }
        let e = parse("task = \"sweep\"\n").unwrap_err().to_string();
        assert!(e.contains("scene.kind") && e.contains("sweep"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse(&format!("{MINIMAL}radiuss = 2\n")).is_err());
        assert!(parse("task = \"energy\"\nformulaton = \"efie\"\n[scene]\nkind = \"spheres\"\nradius = 1\ngap = 1\n").is_err());
        let e = parse(&format!("{MINIMAL}side = 2\n")).unwrap_err().to_string();
        assert!(e.contains("does not apply"), "{e}");
    }

    #[test]
    fn capsule_scene_parses() {
        let c = parse("task = \"breakdown\"\n[scene]\nkind = \"capsules\"\nlength = 6\nradius = 1\ngap = 4\n").unwrap();
        match c.scene {
            SceneSpec::Capsules { length, radius, gap, .. } => {
                assert_eq!(length / radius, 6.0);
                assert_eq!(gap / radius, 4.0);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(c.formulation, FormulationChoice::Both);
        assert_eq!(c.precision, PrecisionChoice::Both);
    }

    #[test]
    fn overrides_win() {
        let ov = Overrides {
            task: Some(Task::Energy),
            formulation: Some("efie".parse().unwrap()),
            precision: Some("single".parse().unwrap()),
            nodes: Some(7),
            out: Some("elsewhere".into()),
        };
        let c = RunConfig::parse(MINIMAL, Path::new("."), &ov).unwrap();
        assert_eq!(c.formulation, FormulationChoice::One(Formulation::Efie));
        assert_eq!(c.precision, PrecisionChoice::One(Precision::Single));
        assert_eq!(c.quadrature.nodes, 7);
        assert_eq!(c.output.dir, PathBuf::from("elsewhere"));
    }

    #[test]
    fn sweep_validation() {
        let base = "task = \"sweep\"\n[scene]\nkind = \"spheres\"\nradius = 1\ngap = 1\n[sweep]\nvariable = \"gap\"\n";
        let c = parse(&format!("{base}values = [0.5, 1, 2, 4]\n")).unwrap();
        assert_eq!(c.sweep.unwrap().values, vec![0.5, 1.0, 2.0, 4.0]);
        let c = parse(&format!("{base}start = 1\nstop = 2\nsteps = 3\n")).unwrap();
        assert_eq!(c.sweep.unwrap().values, vec![1.0, 1.5, 2.0]);
        assert!(parse(&format!("{base}values = []\n")).is_err());
        assert!(parse(&format!("{base}values = [1, 3, 2]\n")).is_err());
        assert!(parse(&format!("{base}values = [1, 2]\nformulation = \"both\"\n")).is_err());
    }

    #[test]
    fn off_files_must_exist() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = "task = \"energy\"\n[scene]\nkind = \"off\"\nfiles = [\"a.off\"]\n";
        let e = RunConfig::parse(cfg, dir.path(), &Overrides::default()).unwrap_err().to_string();
        assert!(e.contains("does not exist"), "{e}");
        std::fs::write(dir.path().join("a.off"), "OFF\n0 0 0\n").unwrap();
        let c = RunConfig::parse(cfg, dir.path(), &Overrides::default()).unwrap();
        assert!(matches!(c.scene, SceneSpec::Off { ref files, .. } if files[0].is_absolute() || files[0].starts_with(dir.path())));
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(parse(&MINIMAL.replace("gap = 1", "gap = -1")).is_err());
        assert!(parse(&format!("{MINIMAL}grading = 0.5\n")).is_err());
        assert!(parse(&format!("{MINIMAL}[quadrature]\nnodes = 1\n")).is_err());
        assert!(parse(&format!("{MINIMAL}[quadrature]\nkappa0 = \"low\"\n")).is_err());
        assert!(parse(&format!("{MINIMAL}[assembly]\nrule = 5\n")).is_err());
        let c = parse(&format!("{MINIMAL}[quadrature]\nkappa0 = 0.25\n")).unwrap();
        assert_eq!(c.quadrature.kappa0, Kappa0::Value(0.25));
    }
}
