use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Rotation3, Unit, Vector3};

use super::{Point, TriScene};
use crate::{Error, Result};

/// Icosphere: an icosahedron subdivided `subdivisions` times with every vertex
/// projected onto the sphere. Two opposite vertices sit on the ±x axis so that
/// spheres placed side by side along x face each other with a vertex.
pub fn generate_sphere(radius: f64, subdivisions: u32) -> Result<TriScene> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!("sphere radius must be positive, got {radius}")));
    }
    let (mut verts, mut tris) = icosahedron();
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        for &[a, b, c] in &tris {
            let mut midpoint = |i: usize, j: usize| -> usize {
                *mid.entry((i.min(j), i.max(j))).or_insert_with(|| {
                    verts.push(((verts[i] + verts[j]) * 0.5).normalize());
                    verts.len() - 1
                })
            };
            let (ab, bc, ca) = (midpoint(a, b), midpoint(b, c), midpoint(c, a));
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    // poles on ±x
    let verts: Vec<Point> = verts.iter().map(|v| Point::new(v.z, v.x, v.y) * radius).collect();
    let tris = orient_outward(&verts, tris);
    let n = tris.len();
    TriScene::new(verts, tris, vec![0; n])
}

fn icosahedron() -> (Vec<Point>, Vec<[usize; 3]>) {
    let h = 1.0 / 5f64.sqrt();
    let s = 2.0 * h;
    let mut v = vec![Point::new(0.0, 0.0, 1.0)];
    for k in 0..5 {
        let a = 2.0 * PI * k as f64 / 5.0;
        v.push(Point::new(s * a.cos(), s * a.sin(), h));
    }
    for k in 0..5 {
        let a = 2.0 * PI * k as f64 / 5.0 + PI / 5.0;
        v.push(Point::new(s * a.cos(), s * a.sin(), -h));
    }
    v.push(Point::new(0.0, 0.0, -1.0));
    let mut t = Vec::with_capacity(20);
    for k in 0..5 {
        let (u0, u1) = (1 + k, 1 + (k + 1) % 5);
        let (l0, l1) = (6 + k, 6 + (k + 1) % 5);
        t.push([0, u0, u1]);
        t.push([u0, l0, u1]);
        t.push([u1, l0, l1]);
        t.push([11, l1, l0]);
    }
    (v, t)
}

/// Flips triangles of a convex, origin-containing surface so normals point outward.
fn orient_outward(verts: &[Point], tris: Vec<[usize; 3]>) -> Vec<[usize; 3]> {
    let centre = verts.iter().sum::<Point>() / verts.len() as f64;
    tris.into_iter()
        .map(|[a, b, c]| {
            let n = (verts[b] - verts[a]).cross(&(verts[c] - verts[a]));
            let m = (verts[a] + verts[b] + verts[c]) / 3.0 - centre;
            if n.dot(&m) < 0.0 {
                [a, c, b]
            } else {
                [a, b, c]
            }
        })
        .collect()
}

/// Capsule (cylinder with hemispherical caps) along +z, centred at the origin.
///
/// The angular step is `π / (4 * resolution)` both in latitude (so each cap has
/// `2 * resolution` bands) and in azimuth (`8 * resolution` segments); cylinder
/// rings are spaced close to the matching arc length.
pub fn generate_capsule(total_length: f64, radius: f64, resolution: u32) -> Result<TriScene> {
    generate_capsule_along(total_length, radius, resolution, Vector3::z())
}

/// Capsule whose axis is the given direction.
pub fn generate_capsule_along(
    total_length: f64,
    radius: f64,
    resolution: u32,
    axis: Vector3<f64>,
) -> Result<TriScene> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!("capsule radius must be positive, got {radius}")));
    }
    if !(total_length >= 2.0 * radius) {
        return Err(Error::InvalidArgument(format!(
            "capsule length {total_length} is shorter than its diameter {}",
            2.0 * radius
        )));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("capsule resolution must be at least 1".into()));
    }
    let axis = Unit::try_new(axis, 1e-12)
        .ok_or_else(|| Error::InvalidArgument("capsule axis must be nonzero".into()))?;

    let bands = 2 * resolution as usize;
    let n_phi = 4 * bands;
    let dtheta = PI / (2.0 * bands as f64);
    let half_cyl = 0.5 * total_length - radius;
    let n_cyl = if half_cyl > 0.0 {
        ((2.0 * half_cyl) / (radius * dtheta)).round().max(1.0) as usize
    } else {
        0
    };

    // (ring radius, z) from the top tip downwards, excluding the two poles
    let mut rings: Vec<(f64, f64)> = Vec::new();
    for j in 1..=bands {
        let th = j as f64 * dtheta;
        rings.push((radius * th.sin(), half_cyl + radius * th.cos()));
    }
    for k in 1..=n_cyl {
        rings.push((radius, half_cyl - 2.0 * half_cyl * k as f64 / n_cyl as f64));
    }
    for j in 1..bands {
        let th = PI / 2.0 + j as f64 * dtheta;
        rings.push((radius * th.sin(), -half_cyl + radius * th.cos()));
    }

    let mut verts = vec![Point::new(0.0, 0.0, half_cyl + radius)];
    for &(rr, z) in &rings {
        for i in 0..n_phi {
            let a = 2.0 * PI * i as f64 / n_phi as f64;
            verts.push(Point::new(rr * a.cos(), rr * a.sin(), z));
        }
    }
    verts.push(Point::new(0.0, 0.0, -half_cyl - radius));
    let bottom = verts.len() - 1;
    let ring = |r: usize, i: usize| 1 + r * n_phi + i % n_phi;

    let mut tris = Vec::new();
    for i in 0..n_phi {
        tris.push([0, ring(0, i), ring(0, i + 1)]);
    }
    for r in 0..rings.len() - 1 {
        for i in 0..n_phi {
            let (a, b) = (ring(r, i), ring(r, i + 1));
            let (c, d) = (ring(r + 1, i), ring(r + 1, i + 1));
            tris.push([a, c, b]);
            tris.push([b, c, d]);
        }
    }
    let last = rings.len() - 1;
    for i in 0..n_phi {
        tris.push([bottom, ring(last, i + 1), ring(last, i)]);
    }

    let tris = orient_outward(&verts, tris);
    let rot = Rotation3::rotation_between(&Vector3::z(), &axis)
        .unwrap_or_else(|| Rotation3::from_axis_angle(&Vector3::x_axis(), PI));
    let verts: Vec<Point> = verts.iter().map(|v| rot * v).collect();
    let n = tris.len();
    TriScene::new(verts, tris, vec![0; n])
}

/// Flat open square of side `side` in the z = 0 plane, centred at the origin,
/// made of `2 * resolution²` triangles with normals along +z.
pub fn generate_plate(side: f64, resolution: u32) -> Result<TriScene> {
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::InvalidArgument(format!("plate side must be positive, got {side}")));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("plate resolution must be at least 1".into()));
    }
    let n = resolution as usize;
    let step = side / n as f64;
    let mut verts = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            verts.push(Point::new(-0.5 * side + i as f64 * step, -0.5 * side + j as f64 * step, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut tris = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let m = tris.len();
    TriScene::new(verts, tris, vec![0; m])
}

/// Two identical spheres on the x axis with surface-to-surface gap `gap`.
///
/// Icosphere vertices sit on the x axis, so the facing surfaces meet
/// vertex to vertex and the mesh gap equals `gap`.
pub fn sphere_pair(radius: f64, gap: f64, subdivisions: u32) -> Result<TriScene> {
    if !(gap > 0.0) {
        return Err(Error::InvalidArgument(format!("gap must be positive, got {gap}")));
    }
    let a = generate_sphere(radius, subdivisions)?;
    let b = a.translate_object(0, Point::new(2.0 * radius + gap, 0.0, 0.0))?;
    a.combine(&b)
}

/// Icosphere whose vertices are pulled towards the pole `pole` (any nonzero
/// vector): the polar angle θ from the pole becomes `π (θ/π)^grading`.
///
/// Topology is that of [`generate_sphere`]; `grading = 1` reproduces it.
/// Near the pole edges shrink by roughly `(θ/π)^(grading-1)`, which resolves
/// a narrow gap without refining the whole surface.
pub fn generate_graded_sphere(radius: f64, subdivisions: u32, pole: Vector3<f64>, grading: f64) -> Result<TriScene> {
    if !(grading >= 1.0) || !grading.is_finite() {
        return Err(Error::InvalidArgument(format!("grading must be ≥ 1, got {grading}")));
    }
    let p = Unit::try_new(pole, 1e-12)
        .ok_or_else(|| Error::InvalidArgument("grading pole must be a nonzero vector".into()))?;
    let base = generate_sphere(radius, subdivisions)?;
    let verts = base
        .vertices()
        .iter()
        .map(|v| {
            let n = v / radius;
            let c = n.dot(&p).clamp(-1.0, 1.0);
            let perp = n - p.into_inner() * c;
            let norm = perp.norm();
            if norm < 1e-14 {
                return *v;
            }
            let theta = PI * (c.acos() / PI).powf(grading);
            (p.into_inner() * theta.cos() + perp / norm * theta.sin()) * radius
        })
        .collect();
    TriScene::new(verts, base.triangles().to_vec(), base.object_ids().to_vec())
}

/// [`sphere_pair`] with each sphere graded towards the other.
pub fn graded_sphere_pair(radius: f64, gap: f64, subdivisions: u32, grading: f64) -> Result<TriScene> {
    if !(gap > 0.0) {
        return Err(Error::InvalidArgument(format!("gap must be positive, got {gap}")));
    }
    let a = generate_graded_sphere(radius, subdivisions, Vector3::x(), grading)?;
    let b = generate_graded_sphere(radius, subdivisions, -Vector3::x(), grading)?
        .translate_object(0, Point::new(2.0 * radius + gap, 0.0, 0.0))?;
    a.combine(&b)
}

/// Two parallel capsules with axes along z, separated along x by a
/// surface-to-surface gap `gap`.
pub fn capsule_pair(total_length: f64, radius: f64, gap: f64, resolution: u32) -> Result<TriScene> {
    if !(gap > 0.0) {
        return Err(Error::InvalidArgument(format!("gap must be positive, got {gap}")));
    }
    let a = generate_capsule(total_length, radius, resolution)?;
    let b = a.translate_object(0, Point::new(2.0 * radius + gap, 0.0, 0.0))?;
    a.combine(&b)
}
