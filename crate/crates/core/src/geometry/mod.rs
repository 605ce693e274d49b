//! Triangle-mesh scenes made of one or more rigid objects.

mod generate;
mod off;

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::{Error, Result};

pub use generate::{
    capsule_pair, generate_capsule, generate_capsule_along, generate_graded_sphere, generate_plate, generate_sphere,
    graded_sphere_pair, sphere_pair,
};
pub use off::{load_off, load_off_objects, parse_off, save_off, write_off};

pub type Point = Vector3<f64>;

/// A validated multi-object triangle mesh.
///
/// Triangles are stored grouped by object (object 0 first), so every object
/// owns a contiguous range of triangle indices. Objects never share vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct TriScene {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    object_id: Vec<usize>,
    transforms: Vec<Point>,
}

/// Edge classification of a scene.
#[derive(Debug, Clone, Default)]
pub struct EdgeCensus {
    /// Edges shared by two triangles, sorted by vertex pair.
    pub interior: Vec<InteriorEdge>,
    /// Edges used by a single triangle, as sorted vertex pairs.
    pub boundary: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InteriorEdge {
    pub v0: usize,
    pub v1: usize,
    /// Triangle that traverses `v0 -> v1`.
    pub forward: usize,
    /// Triangle that traverses `v1 -> v0`.
    pub backward: usize,
}

impl TriScene {
    /// Builds a scene and checks every mesh invariant.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, object_id: Vec<usize>) -> Result<Self> {
        if triangles.len() != object_id.len() {
            return Err(Error::InvalidArgument(format!(
                "{} triangles but {} object ids",
                triangles.len(),
                object_id.len()
            )));
        }
        if triangles.is_empty() {
            return Err(Error::InvalidArgument("scene has no triangles".into()));
        }
        let n_objects = object_id.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; n_objects];
        for &o in &object_id {
            seen[o] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!(
                "object ids are not contiguous: id {missing} is unused"
            )));
        }

        // stable grouping by object
        let mut order: Vec<usize> = (0..triangles.len()).collect();
        order.sort_by_key(|&t| object_id[t]);
        let triangles: Vec<[usize; 3]> = order.iter().map(|&t| triangles[t]).collect();
        let object_id: Vec<usize> = order.iter().map(|&t| object_id[t]).collect();

        let scene = TriScene {
            vertices,
            triangles,
            object_id,
            transforms: vec![Point::zeros(); n_objects],
        };
        scene.validate()?;
        Ok(scene)
    }

    fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        let mut owner: Vec<Option<usize>> = vec![None; nv];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(Error::InvalidArgument(format!(
                        "triangle {t} references vertex {v} but only {nv} vertices exist"
                    )));
                }
                match owner[v] {
                    None => owner[v] = Some(self.object_id[t]),
                    Some(o) if o != self.object_id[t] => {
                        return Err(Error::InvalidArgument(format!(
                            "vertex {v} is shared by objects {o} and {}",
                            self.object_id[t]
                        )))
                    }
                    _ => {}
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateTriangle(t, 0.0));
            }
        }
        let scale = self.bounding_radius().max(f64::MIN_POSITIVE);
        for t in 0..self.triangles.len() {
            let a = self.triangle_area(t);
            if !(a > 1e-14 * scale * scale) {
                return Err(Error::DegenerateTriangle(t, a));
            }
        }
        self.census().map(|_| ())
    }

    /// Classifies every edge; fails on non-manifold edges or inconsistent winding.
    pub fn census(&self) -> Result<EdgeCensus> {
        let mut uses: HashMap<(usize, usize), Vec<(usize, bool)>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                uses.entry(key).or_default().push((t, a < b));
            }
        }
        let mut keys: Vec<_> = uses.keys().copied().collect();
        keys.sort_unstable();

        let mut census = EdgeCensus::default();
        for key in keys {
            let u = &uses[&key];
            match u.as_slice() {
                [_] => census.boundary.push(key),
                [(t0, f0), (t1, f1)] => {
                    if f0 == f1 {
                        return Err(Error::InconsistentWinding(key.0, key.1));
                    }
                    let (forward, backward) = if *f0 { (*t0, *t1) } else { (*t1, *t0) };
                    census.interior.push(InteriorEdge {
                        v0: key.0,
                        v1: key.1,
                        forward,
                        backward,
                    });
                }
                _ => return Err(Error::NonManifoldEdge(key.0, key.1, u.len())),
            }
        }
        Ok(census)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn object_ids(&self) -> &[usize] {
        &self.object_id
    }

    pub fn object_of(&self, triangle: usize) -> usize {
        self.object_id[triangle]
    }

    /// Accumulated rigid displacement of each object.
    pub fn transforms(&self) -> &[Point] {
        &self.transforms
    }

    pub fn num_objects(&self) -> usize {
        self.transforms.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Contiguous triangle index range of an object.
    pub fn object_triangles(&self, object: usize) -> std::ops::Range<usize> {
        let start = self.object_id.partition_point(|&o| o < object);
        let end = self.object_id.partition_point(|&o| o <= object);
        start..end
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn object_area(&self, object: usize) -> f64 {
        self.object_triangles(object).map(|t| self.triangle_area(t)).sum()
    }

    fn object_vertices(&self, object: usize) -> Vec<usize> {
        let mut vs: Vec<usize> = self
            .object_triangles(object)
            .flat_map(|t| self.triangles[t])
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Mean of the vertices used by an object.
    pub fn centroid(&self, object: usize) -> Point {
        let vs = self.object_vertices(object);
        vs.iter().map(|&v| self.vertices[v]).sum::<Point>() / vs.len() as f64
    }

    /// V - E + F of one object.
    pub fn euler_characteristic(&self, object: usize) -> Result<i64> {
        if object >= self.num_objects() {
            return Err(Error::UnknownObject(object));
        }
        let census = self.census()?;
        let tris = self.object_triangles(object);
        let verts = self.object_vertices(object);
        let owned = |v: usize| verts.binary_search(&v).is_ok();
        let edges = census.interior.iter().filter(|e| owned(e.v0)).count()
            + census.boundary.iter().filter(|e| owned(e.0)).count();
        Ok(verts.len() as i64 - edges as i64 + tris.len() as i64)
    }

    pub fn max_edge_length(&self) -> f64 {
        let mut m: f64 = 0.0;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.corners(t);
            m = m.max((b - a).norm()).max((c - b).norm()).max((a - c).norm());
        }
        m
    }

    fn bounding_radius(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Rigidly translates one object.
    pub fn translate_object(&self, object: usize, delta: Point) -> Result<TriScene> {
        if object >= self.num_objects() {
            return Err(Error::UnknownObject(object));
        }
        let mut out = self.clone();
        for v in self.object_vertices(object) {
            out.vertices[v] += delta;
        }
        out.transforms[object] += delta;
        Ok(out)
    }

    /// Uniformly scales all lengths about the origin.
    pub fn scaled(&self, s: f64) -> Result<TriScene> {
        if !(s > 0.0) {
            return Err(Error::InvalidArgument(format!("scale factor must be positive, got {s}")));
        }
        let mut out = self.clone();
        out.vertices.iter_mut().for_each(|v| *v *= s);
        out.transforms.iter_mut().for_each(|v| *v *= s);
        Ok(out)
    }

    /// Appends the objects of `other` after the objects of `self`.
    pub fn combine(&self, other: &TriScene) -> Result<TriScene> {
        let nv = self.vertices.len();
        let no = self.num_objects();
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut triangles = self.triangles.clone();
        triangles.extend(other.triangles.iter().map(|t| t.map(|v| v + nv)));
        let mut object_id = self.object_id.clone();
        object_id.extend(other.object_id.iter().map(|o| o + no));
        let mut scene = TriScene::new(vertices, triangles, object_id)?;
        scene.transforms = self.transforms.iter().chain(&other.transforms).copied().collect();
        Ok(scene)
    }

    /// Smallest vertex-to-vertex distance between two distinct objects.
    ///
    /// For faceted convex bodies facing each other with a vertex this equals the
    /// surface gap; otherwise it is an upper bound on it.
    pub fn vertex_gap(&self) -> Option<f64> {
        let sets: Vec<Vec<usize>> = (0..self.num_objects()).map(|o| self.object_vertices(o)).collect();
        let mut best: Option<f64> = None;
        for a in 0..sets.len() {
            for b in a + 1..sets.len() {
                for &i in &sets[a] {
                    for &j in &sets[b] {
                        let d = (self.vertices[i] - self.vertices[j]).norm();
                        best = Some(best.map_or(d, |m: f64| m.min(d)));
                    }
                }
            }
        }
        best
    }
}
