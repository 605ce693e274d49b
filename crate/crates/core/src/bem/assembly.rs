//! Dense assembly of the imaginary-frequency EFIE and A-EFIE systems.
//!
//! Every matrix is built from triangle-pair moments of the kernel,
//!
//! ```text
//! m0  = ∫∫ g            ma = ∫∫ g (r - c)
//! mab = ∫∫ g (r-c)·(r'-c')   mb = ∫∫ g (r' - c')
//! ```
//!
//! from which both the vector-potential block `V` (RWG·RWG) and the
//! scalar-potential block `P` (pulse·pulse) follow in closed form. Pairs are
//! visited once (`T ≤ T'`) and scattered to both triangles of the matrix.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use super::basis::{build_basis, RwgBasis};
use super::kernel::{green, green_deriv, green_smooth};
use super::quadrature::TriangleRule;
use super::singular::potential_integrals;
use crate::geometry::{Point, TriScene};
use crate::par::map_indices;
use crate::{Error, Precision, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formulation {
    #[serde(rename = "efie")]
    Efie,
    #[serde(rename = "aefie")]
    Aefie,
}

impl Formulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::Efie => "efie",
            Formulation::Aefie => "aefie",
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Formulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "efie" => Ok(Formulation::Efie),
            "aefie" | "a-efie" => Ok(Formulation::Aefie),
            _ => Err(Error::InvalidArgument(format!("unknown formulation '{s}' (expected efie or aefie)"))),
        }
    }
}

/// How the A-EFIE charge unknowns are parameterized.
///
/// The literal block system `[[V, DᵀP], [D, -κ²I]]` carries one spurious
/// eigenvalue `-κ²` per object (the total-charge mode, since `Dᵀ·1 = 0`),
/// which makes its condition number grow like `1/κ²`. The reduced gauge
/// eliminates the last patch charge of every object through charge
/// neutrality; its Schur complement is still `V + DᵀPD/κ²`, so determinant
/// ratios and traces are unchanged, but the system stays well conditioned
/// as `κ → 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChargeGauge {
    #[default]
    Reduced,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    /// Rule for well-separated pairs.
    pub rule: TriangleRule,
    /// Pairs with centroid distance below `near_factor ×` the longer of their two
    /// longest edges use an elevated rule.
    pub near_factor: f64,
    pub gauge: ChargeGauge,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { rule: TriangleRule::P6, near_factor: 2.0, gauge: ChargeGauge::Reduced }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
enum PairClass {
    Far = 0,
    Near = 1,
    Close = 2,
    Singular = 3,
}

/// Integration scheme chosen per triangle pair.
///
/// Computed once from a reference geometry and reused for displaced copies,
/// so assembled matrices are smooth functions of rigid displacements.
#[derive(Debug, Clone, PartialEq)]
pub struct NearFieldPlan {
    num_patches: usize,
    class: Vec<u8>,
}

impl NearFieldPlan {
    pub fn new(scene: &TriScene, near_factor: f64) -> Self {
        let p = scene.num_triangles();
        // longest edge of each triangle; a pair is judged by the larger of the two
        let longest: Vec<f64> = (0..p)
            .map(|t| {
                let [a, b, c] = scene.corners(t);
                (a - b).norm().max((b - c).norm()).max((c - a).norm())
            })
            .collect();
        let centroids: Vec<Point> = (0..p)
            .map(|t| {
                let [a, b, c] = scene.corners(t);
                (a + b + c) / 3.0
            })
            .collect();
        let tris = scene.triangles();
        let mut class = vec![PairClass::Far as u8; p * p];
        for t in 0..p {
            for s in t..p {
                let dist = (centroids[t] - centroids[s]).norm();
                let near = near_factor * longest[t].max(longest[s]);
                let shares = tris[t].iter().any(|v| tris[s].contains(v));
                let c = if shares {
                    PairClass::Singular
                } else if dist < 0.5 * near {
                    PairClass::Close
                } else if dist < near {
                    PairClass::Near
                } else {
                    PairClass::Far
                };
                class[t * p + s] = c as u8;
                class[s * p + t] = c as u8;
            }
        }
        NearFieldPlan { num_patches: p, class }
    }

    fn class(&self, t: usize, s: usize) -> PairClass {
        match self.class[t * self.num_patches + s] {
            0 => PairClass::Far,
            1 => PairClass::Near,
            2 => PairClass::Close,
            _ => PairClass::Singular,
        }
    }

    /// Number of pairs (ordered) that use singular integration.
    pub fn singular_pairs(&self) -> usize {
        self.class.iter().filter(|&&c| c == PairClass::Singular as u8).count()
    }

    /// Number of pairs (ordered) that use an elevated regular rule.
    pub fn near_pairs(&self) -> usize {
        self.class.iter().filter(|&&c| c == PairClass::Near as u8 || c == PairClass::Close as u8).count()
    }
}

/// A scene with its basis and integration plan.
#[derive(Debug, Clone)]
pub struct Problem {
    scene: TriScene,
    basis: Arc<RwgBasis>,
    plan: Arc<NearFieldPlan>,
    options: AssemblyOptions,
}

impl Problem {
    pub fn new(scene: TriScene, options: AssemblyOptions) -> Result<Self> {
        if !(options.near_factor >= 0.0) || !options.near_factor.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "near_factor must be finite and non-negative, got {}",
                options.near_factor
            )));
        }
        let basis = Arc::new(build_basis(&scene)?);
        let plan = Arc::new(NearFieldPlan::new(&scene, options.near_factor));
        Ok(Problem { scene, basis, plan, options })
    }

    /// The same problem with one object rigidly translated; basis and plan are shared.
    pub fn displaced(&self, object: usize, delta: Point) -> Result<Self> {
        Ok(Problem {
            scene: self.scene.translate_object(object, delta)?,
            basis: Arc::clone(&self.basis),
            plan: Arc::clone(&self.plan),
            options: self.options,
        })
    }

    pub fn scene(&self) -> &TriScene {
        &self.scene
    }

    pub fn basis(&self) -> &RwgBasis {
        &self.basis
    }

    pub fn plan(&self) -> &NearFieldPlan {
        &self.plan
    }

    pub fn options(&self) -> &AssemblyOptions {
        &self.options
    }

    pub fn num_objects(&self) -> usize {
        self.scene.num_objects()
    }

    /// Object owning each unknown of the given system, in matrix order.
    pub fn unknown_owners(&self, formulation: Formulation) -> Vec<usize> {
        let b = &*self.basis;
        let mut owners: Vec<usize> = (0..b.num_edges()).map(|n| b.edge_object(n)).collect();
        if formulation == Formulation::Aefie {
            for o in 0..b.num_objects() {
                let r = b.patch_range(o);
                let count = match self.options.gauge {
                    ChargeGauge::Reduced => r.len() - 1,
                    ChargeGauge::Full => r.len(),
                };
                owners.extend(std::iter::repeat_n(o, count));
            }
        }
        owners
    }

    pub fn dimension(&self, formulation: Formulation) -> usize {
        let b = &*self.basis;
        match (formulation, self.options.gauge) {
            (Formulation::Efie, _) => b.num_edges(),
            (Formulation::Aefie, ChargeGauge::Full) => b.num_edges() + b.num_patches(),
            (Formulation::Aefie, ChargeGauge::Reduced) => b.num_edges() + b.num_patches() - b.num_objects(),
        }
    }
}

/// An assembled system matrix with the bookkeeping needed to normalize it.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix<T: Real> {
    pub formulation: Formulation,
    pub gauge: ChargeGauge,
    pub kappa: f64,
    pub matrix: DMatrix<T>,
    owners: Vec<usize>,
    num_currents: usize,
}

impl<T: Real> SystemMatrix<T> {
    pub fn new(
        formulation: Formulation,
        gauge: ChargeGauge,
        kappa: f64,
        matrix: DMatrix<T>,
        owners: Vec<usize>,
        num_currents: usize,
    ) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != owners.len() || num_currents > owners.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}×{} matrix with {} owners and {} currents",
                matrix.nrows(),
                matrix.ncols(),
                owners.len(),
                num_currents
            )));
        }
        Ok(SystemMatrix { formulation, gauge, kappa, matrix, owners, num_currents })
    }

    pub fn precision(&self) -> Precision {
        T::PRECISION
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn owners(&self) -> &[usize] {
        &self.owners
    }

    pub fn num_objects(&self) -> usize {
        self.owners.iter().max().map_or(0, |m| m + 1)
    }

    /// Unknowns owned by `object`, in matrix order.
    pub fn object_indices(&self, object: usize) -> Vec<usize> {
        (0..self.owners.len()).filter(|&i| self.owners[i] == object).collect()
    }

    pub fn num_currents(&self) -> usize {
        self.num_currents
    }

    pub fn num_charges(&self) -> usize {
        self.owners.len() - self.num_currents
    }

    /// The same system with every cross-object entry set to zero: the
    /// infinite-separation limit.
    pub fn normalized(&self) -> SystemMatrix<T> {
        let mut out = self.clone();
        let n = self.dim();
        for j in 0..n {
            for i in 0..n {
                if self.owners[i] != self.owners[j] {
                    out.matrix[(i, j)] = T::zero();
                }
            }
        }
        out
    }
}

/// Derivative of a system matrix with respect to rigidly displacing one object.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMatrix<T: Real> {
    pub formulation: Formulation,
    pub gauge: ChargeGauge,
    pub kappa: f64,
    pub displaced_object: usize,
    pub direction: Vector3<f64>,
    pub matrix: DMatrix<T>,
    owners: Vec<usize>,
    num_currents: usize,
}

impl<T: Real> GradientMatrix<T> {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn owners(&self) -> &[usize] {
        &self.owners
    }

    pub fn num_currents(&self) -> usize {
        self.num_currents
    }
}

// ---------------------------------------------------------------------------
// per-triangle geometry in the working precision

struct Geometry<T: Real> {
    centroid: Vec<Vector3<T>>,
    corners: Vec<[Vector3<T>; 3]>,
    area: Vec<T>,
    rules: [RulePoints<T>; 3],
    vertices: Vec<Vector3<T>>,
}

/// Quadrature points of one rule on every triangle; weights include the area.
struct RulePoints<T: Real> {
    n: usize,
    points: Vec<Vector3<T>>,
    weights: Vec<T>,
}

impl<T: Real> RulePoints<T> {
    fn new(scene: &TriScene, rule: TriangleRule) -> Self {
        let table = rule.points();
        let p = scene.num_triangles();
        let mut points = Vec::with_capacity(p * table.len());
        let mut weights = Vec::with_capacity(p * table.len());
        for t in 0..p {
            let [a, b, c] = scene.corners(t);
            let area = scene.triangle_area(t);
            for (l, w) in table {
                points.push((a * l[0] + b * l[1] + c * l[2]).map(T::of));
                weights.push(T::of(w * area));
            }
        }
        RulePoints { n: table.len(), points, weights }
    }

    fn on(&self, t: usize) -> (&[Vector3<T>], &[T]) {
        let r = t * self.n..(t + 1) * self.n;
        (&self.points[r.clone()], &self.weights[r])
    }
}

const BASE: usize = 0;
const ELEVATED: usize = 1;
const FINEST: usize = 2;

impl<T: Real> Geometry<T> {
    fn new(problem: &Problem) -> Self {
        let scene = &problem.scene;
        let base = problem.options.rule;
        let p = scene.num_triangles();
        let corners: Vec<[Vector3<T>; 3]> = (0..p).map(|t| scene.corners(t).map(|v| v.map(T::of))).collect();
        let centroid = (0..p)
            .map(|t| {
                let [a, b, c] = scene.corners(t);
                ((a + b + c) / 3.0).map(T::of)
            })
            .collect();
        Geometry {
            centroid,
            corners,
            area: (0..p).map(|t| T::of(scene.triangle_area(t))).collect(),
            rules: [
                RulePoints::new(scene, base),
                RulePoints::new(scene, base.elevated()),
                RulePoints::new(scene, TriangleRule::P48),
            ],
            vertices: scene.vertices().iter().map(|v| v.map(T::of)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Moments<T: Real> {
    m0: T,
    ma: Vector3<T>,
    mb: Vector3<T>,
    mab: T,
}

impl<T: Real> Moments<T> {
    fn zero() -> Self {
        Moments { m0: T::zero(), ma: Vector3::zeros(), mb: Vector3::zeros(), mab: T::zero() }
    }

    fn swapped(self) -> Self {
        Moments { m0: self.m0, ma: self.mb, mb: self.ma, mab: self.mab }
    }
}

/// Product-rule moments of `kernel(r - r', |r - r'|)` over triangles `t` and `s`.
fn regular_moments<T: Real, K: Fn(&Vector3<T>, T) -> T>(
    geo: &Geometry<T>,
    level: usize,
    t: usize,
    s: usize,
    kernel: &K,
) -> Moments<T> {
    let (pt, wt) = geo.rules[level].on(t);
    let (ps, ws) = geo.rules[level].on(s);
    let (ct, cs) = (geo.centroid[t], geo.centroid[s]);
    let mut m = Moments::zero();
    for (r, &w) in pt.iter().zip(wt) {
        let mut s0 = T::zero();
        let mut sb = Vector3::zeros();
        for (rp, &wp) in ps.iter().zip(ws) {
            let d = r - rp;
            let k = wp * kernel(&d, d.norm());
            s0 += k;
            sb += (rp - cs) * k;
        }
        let a = r - ct;
        m.m0 += w * s0;
        m.ma += a * (w * s0);
        m.mb += sb * w;
        m.mab += w * a.dot(&sb);
    }
    m
}

/// Moments of `g` for touching or coincident triangles: the `1/(4πR)` part is
/// integrated analytically over `s`, the bounded remainder numerically.
fn singular_moments_one_way<T: Real>(geo: &Geometry<T>, t: usize, s: usize, kappa: T, inv4pi: T) -> Moments<T> {
    // the inner potential has logarithmic edge behaviour: integrate it finely
    let (pt, wt) = geo.rules[FINEST].on(t);
    let (ps, ws) = geo.rules[ELEVATED].on(s);
    let (ct, cs) = (geo.centroid[t], geo.centroid[s]);
    let tri = &geo.corners[s];
    let mut m = Moments::zero();
    for (r, &w) in pt.iter().zip(wt) {
        let (i0, iv) = potential_integrals(tri, r);
        let mut s0 = i0 * inv4pi;
        let mut sb = (iv + (r - cs) * i0) * inv4pi;
        for (rp, &wp) in ps.iter().zip(ws) {
            let k = wp * green_smooth((r - rp).norm(), kappa, inv4pi);
            s0 += k;
            sb += (rp - cs) * k;
        }
        let a = r - ct;
        m.m0 += w * s0;
        m.ma += a * (w * s0);
        m.mb += sb * w;
        m.mab += w * a.dot(&sb);
    }
    m
}

fn kernel_moments<T: Real>(geo: &Geometry<T>, plan: &NearFieldPlan, t: usize, s: usize, kappa: T, inv4pi: T) -> Moments<T> {
    let g = |_: &Vector3<T>, r: T| green(r, kappa, inv4pi);
    match plan.class(t, s) {
        PairClass::Far => regular_moments(geo, BASE, t, s, &g),
        PairClass::Near => regular_moments(geo, ELEVATED, t, s, &g),
        PairClass::Close => regular_moments(geo, FINEST, t, s, &g),
        PairClass::Singular => {
            // average both orders so the result is symmetric in (t, s)
            let a = singular_moments_one_way(geo, t, s, kappa, inv4pi);
            let b = singular_moments_one_way(geo, s, t, kappa, inv4pi).swapped();
            let half = T::of(0.5);
            Moments {
                m0: (a.m0 + b.m0) * half,
                ma: (a.ma + b.ma) * half,
                mb: (a.mb + b.mb) * half,
                mab: (a.mab + b.mab) * half,
            }
        }
    }
}

fn check_kappa(kappa: f64, allow_zero: bool) -> Result<()> {
    let ok = kappa.is_finite() && (kappa > 0.0 || (allow_zero && kappa == 0.0));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("invalid wavenumber κ = {kappa}")))
    }
}

const ROW_CHUNK: usize = 64;

/// Visits every pair `t ≤ s` accepted by `filter` with its moments, in a
/// fixed order independent of thread count.
fn for_each_pair<T: Real, M, F, V>(p: usize, filter: F, moments: M, mut visit: V)
where
    M: Fn(usize, usize) -> Moments<T> + Sync + Send,
    F: Fn(usize, usize) -> bool + Sync + Send,
    V: FnMut(usize, usize, &Moments<T>),
{
    let mut start = 0;
    while start < p {
        let end = (start + ROW_CHUNK).min(p);
        let rows = map_indices(start..end, |t| {
            (t..p).filter(|&s| filter(t, s)).map(|s| (s, moments(t, s))).collect::<Vec<_>>()
        });
        for (t, row) in (start..end).zip(rows) {
            for (s, m) in &row {
                visit(t, *s, m);
            }
        }
        start = end;
    }
}

/// Scatter of one pair's moments into `V` and `P` (or their gradients).
struct Scatter<'a, T: Real> {
    basis: &'a RwgBasis,
    geo: &'a Geometry<T>,
    v: DMatrix<T>,
    p: DMatrix<T>,
}

impl<'a, T: Real> Scatter<'a, T> {
    fn new(basis: &'a RwgBasis, geo: &'a Geometry<T>) -> Self {
        let (e, p) = (basis.num_edges(), basis.num_patches());
        Scatter { basis, geo, v: DMatrix::zeros(e, e), p: DMatrix::zeros(p, p) }
    }

    fn add(&mut self, t: usize, s: usize, m: &Moments<T>) {
        let geo = self.geo;
        let (at, as_) = (geo.area[t], geo.area[s]);
        let pv = m.m0 / (at * as_);
        self.p[(t, s)] = pv;
        self.p[(s, t)] = pv;
        let quarter = T::of(0.25);
        for h in self.basis.halves(t) {
            let alpha = geo.centroid[t] - geo.vertices[h.free_vertex];
            for hp in self.basis.halves(s) {
                let beta = geo.centroid[s] - geo.vertices[hp.free_vertex];
                let sign = if h.sign == hp.sign { T::one() } else { -T::one() };
                let val = sign * quarter / (at * as_)
                    * (m.mab + alpha.dot(&m.mb) + beta.dot(&m.ma) + alpha.dot(&beta) * m.m0);
                self.v[(h.edge, hp.edge)] += val;
                if t != s {
                    self.v[(hp.edge, h.edge)] += val;
                }
            }
        }
    }

    fn finish(mut self) -> (DMatrix<T>, DMatrix<T>) {
        let half = T::of(0.5);
        let vt = self.v.transpose();
        self.v += vt;
        self.v *= half;
        (self.v, self.p)
    }
}

/// Assembles `V` (e×e) and `P` (p×p) together.
///
/// `P[t, s] = ∫∫ g / (A_t A_s)`: the pulse functions carry height `1/A` so
/// that `DᵀPD` with the integer incidence matrix is exactly the scalar
/// potential block `S`.
pub fn assemble_vp<T: Real>(problem: &Problem, kappa: f64) -> Result<(DMatrix<T>, DMatrix<T>)> {
    check_kappa(kappa, true)?;
    let geo = Geometry::<T>::new(problem);
    let k = T::of(kappa);
    let inv4pi = T::of(0.25 / std::f64::consts::PI);
    let plan = &*problem.plan;
    let mut scatter = Scatter::new(&problem.basis, &geo);
    for_each_pair(
        problem.basis.num_patches(),
        |_, _| true,
        |t, s| kernel_moments(&geo, plan, t, s, k, inv4pi),
        |t, s, m| scatter.add(t, s, m),
    );
    let (v, p) = scatter.finish();
    check_finite(&v, "V")?;
    check_finite(&p, "P")?;
    Ok((v, p))
}

pub fn assemble_v<T: Real>(problem: &Problem, kappa: f64) -> Result<DMatrix<T>> {
    assemble_vp(problem, kappa).map(|(v, _)| v)
}

pub fn assemble_p<T: Real>(problem: &Problem, kappa: f64) -> Result<DMatrix<T>> {
    assemble_vp(problem, kappa).map(|(_, p)| p)
}

/// `S = DᵀPD`, gathered from `P` without forming `D`.
pub fn s_from_p<T: Real>(basis: &RwgBasis, p: &DMatrix<T>) -> DMatrix<T> {
    let e = basis.num_edges();
    let edges = basis.edges();
    DMatrix::from_fn(e, e, |m, n| {
        let (a, b) = (&edges[m], &edges[n]);
        (p[(a.plus, b.plus)] - p[(a.plus, b.minus)]) - (p[(a.minus, b.plus)] - p[(a.minus, b.minus)])
    })
}

/// Scalar-potential block `S_mn = ∫∫ (∇·Λ_m)(∇'·Λ_n) g`, assembled
/// directly over RWG pairs. Quadratic in the number of edges with no reuse;
/// intended for cross-checking `DᵀPD`.
pub fn assemble_s_direct<T: Real>(problem: &Problem, kappa: f64) -> Result<DMatrix<T>> {
    check_kappa(kappa, true)?;
    let geo = Geometry::<T>::new(problem);
    let k = T::of(kappa);
    let inv4pi = T::of(0.25 / std::f64::consts::PI);
    let plan = &*problem.plan;
    let edges = problem.basis.edges();
    let e = edges.len();
    let rows = map_indices(0..e, |m| {
        let em = &edges[m];
        (0..e)
            .map(|n| {
                let en = &edges[n];
                let mut acc = T::zero();
                for (t, st) in [(em.plus, 1.0), (em.minus, -1.0)] {
                    for (s, ss) in [(en.plus, 1.0), (en.minus, -1.0)] {
                        let (lo, hi) = if t <= s { (t, s) } else { (s, t) };
                        let m0 = kernel_moments(&geo, plan, lo, hi, k, inv4pi).m0;
                        // ∇·Λ = ±1/A on each patch
                        acc += T::of(st * ss) * m0 / (geo.area[t] * geo.area[s]);
                    }
                }
                acc
            })
            .collect::<Vec<T>>()
    });
    Ok(DMatrix::from_fn(e, e, |m, n| rows[m][n]))
}

fn check_finite<T: Real>(m: &DMatrix<T>, name: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("non-finite entry in assembled {name}")))
    }
}

/// Reduced-gauge charge index of each patch (`None` for the eliminated patch).
fn reduced_index(basis: &RwgBasis) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut map = vec![None; basis.num_patches()];
    let mut dropped = Vec::with_capacity(basis.num_objects());
    let mut next = 0;
    for o in 0..basis.num_objects() {
        let r = basis.patch_range(o);
        for slot in &mut map[r.start..r.end - 1] {
            *slot = Some(next);
            next += 1;
        }
        dropped.push(r.end - 1);
    }
    (map, dropped)
}

/// Combines `V` and `P` blocks into the A-EFIE matrix
/// `[[V, DᵀP], [D, -κ²I]]` (in the configured charge gauge).
///
/// With `charge_block = false` the bottom rows are left zero, which is the
/// shape of the displacement gradient.
fn aefie_from_blocks<T: Real>(
    basis: &RwgBasis,
    gauge: ChargeGauge,
    v: &DMatrix<T>,
    p: &DMatrix<T>,
    kappa: f64,
    charge_block: bool,
) -> DMatrix<T> {
    let e = basis.num_edges();
    let edges = basis.edges();
    match gauge {
        ChargeGauge::Full => {
            let np = basis.num_patches();
            let mut z = DMatrix::zeros(e + np, e + np);
            z.view_mut((0, 0), (e, e)).copy_from(v);
            for m in 0..e {
                let em = &edges[m];
                for j in 0..np {
                    z[(m, e + j)] = p[(em.plus, j)] - p[(em.minus, j)];
                }
            }
            if charge_block {
                for (n, en) in edges.iter().enumerate() {
                    z[(e + en.plus, n)] = T::one();
                    z[(e + en.minus, n)] = -T::one();
                }
                let k2 = T::of(kappa * kappa);
                for j in 0..np {
                    z[(e + j, e + j)] = -k2;
                }
            }
            z
        }
        ChargeGauge::Reduced => {
            let (map, dropped) = reduced_index(basis);
            let nq = basis.num_patches() - basis.num_objects();
            // expansion of a reduced charge: patch `k` gets +1, the dropped patch of its object -1
            let mut kept = vec![0usize; nq];
            let mut sink = vec![0usize; nq];
            for (t, m) in map.iter().enumerate() {
                if let Some(i) = *m {
                    kept[i] = t;
                    sink[i] = dropped[basis.patch_object(t)];
                }
            }
            // P_R = RᵀPR
            let pr = DMatrix::from_fn(nq, nq, |i, j| {
                let (ki, di, kj, dj) = (kept[i], sink[i], kept[j], sink[j]);
                (p[(ki, kj)] - p[(ki, dj)]) - (p[(di, kj)] - p[(di, dj)])
            });
            let mut z = DMatrix::zeros(e + nq, e + nq);
            z.view_mut((0, 0), (e, e)).copy_from(v);
            for (m, em) in edges.iter().enumerate() {
                for j in 0..nq {
                    let mut acc = T::zero();
                    if let Some(i) = map[em.plus] {
                        acc += pr[(i, j)];
                    }
                    if let Some(i) = map[em.minus] {
                        acc -= pr[(i, j)];
                    }
                    z[(m, e + j)] = acc;
                }
            }
            if charge_block {
                for (n, en) in edges.iter().enumerate() {
                    if let Some(i) = map[en.plus] {
                        z[(e + i, n)] = T::one();
                    }
                    if let Some(i) = map[en.minus] {
                        z[(e + i, n)] = -T::one();
                    }
                }
                let k2 = T::of(kappa * kappa);
                for j in 0..nq {
                    z[(e + j, e + j)] = -k2;
                }
            }
            z
        }
    }
}

/// `M(κ) = κV + S/κ`.
pub fn assemble_efie<T: Real>(problem: &Problem, kappa: f64) -> Result<SystemMatrix<T>> {
    check_kappa(kappa, false)?;
    let (v, p) = assemble_vp::<T>(problem, kappa)?;
    system_from_blocks(problem, Formulation::Efie, kappa, &v, &p)
}

/// `Z_A(κ) = [[V, DᵀP], [D, -κ²I]]`; `κ = 0` is accepted for diagnostics.
pub fn assemble_aefie<T: Real>(problem: &Problem, kappa: f64) -> Result<SystemMatrix<T>> {
    check_kappa(kappa, true)?;
    let (v, p) = assemble_vp::<T>(problem, kappa)?;
    system_from_blocks(problem, Formulation::Aefie, kappa, &v, &p)
}

pub fn assemble_system<T: Real>(problem: &Problem, formulation: Formulation, kappa: f64) -> Result<SystemMatrix<T>> {
    match formulation {
        Formulation::Efie => assemble_efie(problem, kappa),
        Formulation::Aefie => assemble_aefie(problem, kappa),
    }
}

/// Builds either system from already assembled `V` and `P`.
pub fn system_from_blocks<T: Real>(
    problem: &Problem,
    formulation: Formulation,
    kappa: f64,
    v: &DMatrix<T>,
    p: &DMatrix<T>,
) -> Result<SystemMatrix<T>> {
    let basis = &*problem.basis;
    let gauge = problem.options.gauge;
    let matrix = match formulation {
        Formulation::Efie => {
            check_kappa(kappa, false)?;
            let k = T::of(kappa);
            let s = s_from_p(basis, p);
            v * k + s / k
        }
        Formulation::Aefie => aefie_from_blocks(basis, gauge, v, p, kappa, true),
    };
    SystemMatrix::new(formulation, gauge, kappa, matrix, problem.unknown_owners(formulation), basis.num_edges())
}

/// Derivatives of `V` and `P` with respect to translating `object` along `direction`.
///
/// Only cross-object entries that involve `object` are nonzero: rows of the
/// displaced object see `∂_u g`, columns see `-∂_u g`, and self-interactions
/// are invariant under rigid motion.
pub fn assemble_vp_gradient<T: Real>(
    problem: &Problem,
    kappa: f64,
    object: usize,
    direction: Vector3<f64>,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    check_kappa(kappa, true)?;
    if object >= problem.num_objects() {
        return Err(Error::UnknownObject(object));
    }
    if !((direction.norm() - 1.0).abs() < 1e-9) {
        return Err(Error::InvalidArgument(format!("direction must be a unit vector, got {direction:?}")));
    }
    let geo = Geometry::<T>::new(problem);
    let k = T::of(kappa);
    let inv4pi = T::of(0.25 / std::f64::consts::PI);
    let u = direction.map(T::of);
    let plan = &*problem.plan;
    let obj = |t: usize| problem.scene.object_of(t);
    let mut scatter = Scatter::new(&problem.basis, &geo);
    for_each_pair(
        problem.basis.num_patches(),
        |t, s| {
            let (a, b) = (obj(t), obj(s));
            a != b && (a == object || b == object)
        },
        |t, s| {
            let sign = if obj(t) == object { T::one() } else { -T::one() };
            let dg = |d: &Vector3<T>, r: T| sign * u.dot(d) / r * green_deriv(r, k, inv4pi);
            let level = match plan.class(t, s) {
                PairClass::Far => BASE,
                PairClass::Near => ELEVATED,
                _ => FINEST,
            };
            regular_moments(&geo, level, t, s, &dg)
        },
        |t, s, m| scatter.add(t, s, m),
    );
    let (v, p) = scatter.finish();
    Ok((v, p))
}

pub fn assemble_gradient<T: Real>(
    problem: &Problem,
    formulation: Formulation,
    kappa: f64,
    object: usize,
    direction: Vector3<f64>,
) -> Result<GradientMatrix<T>> {
    let (dv, dp) = assemble_vp_gradient::<T>(problem, kappa, object, direction)?;
    gradient_from_blocks(problem, formulation, kappa, object, direction, &dv, &dp)
}

pub fn gradient_from_blocks<T: Real>(
    problem: &Problem,
    formulation: Formulation,
    kappa: f64,
    object: usize,
    direction: Vector3<f64>,
    dv: &DMatrix<T>,
    dp: &DMatrix<T>,
) -> Result<GradientMatrix<T>> {
    let basis = &*problem.basis;
    let gauge = problem.options.gauge;
    let matrix = match formulation {
        Formulation::Efie => {
            check_kappa(kappa, false)?;
            let k = T::of(kappa);
            dv * k + s_from_p(basis, dp) / k
        }
        Formulation::Aefie => aefie_from_blocks(basis, gauge, dv, dp, kappa, false),
    };
    Ok(GradientMatrix {
        formulation,
        gauge,
        kappa,
        displaced_object: object,
        direction,
        matrix,
        owners: problem.unknown_owners(formulation),
        num_currents: basis.num_edges(),
    })
}

#[cfg(test)]
mod tests;
