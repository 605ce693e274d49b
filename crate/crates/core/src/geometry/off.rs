//! OFF mesh files.
//!
//! Faces are written as `3 a b c k`, where the trailing integer `k` is the
//! object id. On input a face line with exactly one trailing integer uses it as
//! the object id; faces without extra columns (or with colour columns) belong
//! to object 0.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Point, TriScene};
use crate::{Error, Result};

pub fn parse_off(text: &str) -> Result<TriScene> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let parse_err = |line: usize, msg: String| Error::Parse { line, msg };

    let (line, header) = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
    let counts_src = match header.strip_prefix("OFF") {
        Some(rest) => rest.trim(),
        None => return Err(parse_err(line, format!("expected 'OFF' header, found '{header}'"))),
    };
    let (count_line, counts) = if counts_src.is_empty() {
        lines.next().ok_or_else(|| parse_err(line, "missing element counts".into()))?
    } else {
        (line, counts_src)
    };
    let nums: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(count_line, format!("bad element counts: {e}")))?;
    if nums.len() < 2 {
        return Err(parse_err(count_line, "expected vertex and face counts".into()));
    }
    let (nv, nf) = (nums[0], nums[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(count_line, format!("expected {nv} vertices")))?;
        let c: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(line, format!("bad vertex: {e}")))?;
        if c.len() != 3 || c.iter().any(|x| !x.is_finite()) {
            return Err(parse_err(line, "vertex needs three finite coordinates".into()));
        }
        vertices.push(Point::new(c[0], c[1], c[2]));
    }

    let mut triangles = Vec::with_capacity(nf);
    let mut objects = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(count_line, format!("expected {nf} faces")))?;
        let tok: Vec<&str> = l.split_whitespace().collect();
        let n: usize = tok
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(line, "bad face vertex count".into()))?;
        if n != 3 {
            return Err(parse_err(line, format!("only triangles are supported, found {n}-gon")));
        }
        if tok.len() < 4 {
            return Err(parse_err(line, "face lists fewer than 3 vertices".into()));
        }
        let mut tri = [0usize; 3];
        for k in 0..3 {
            tri[k] = tok[1 + k]
                .parse()
                .map_err(|e| parse_err(line, format!("bad face index: {e}")))?;
            if tri[k] >= nv {
                return Err(parse_err(line, format!("face index {} out of range", tri[k])));
            }
        }
        let object = match tok.len() - 4 {
            1 => tok[4]
                .parse()
                .map_err(|e| parse_err(line, format!("bad object id: {e}")))?,
            _ => 0,
        };
        triangles.push(tri);
        objects.push(object);
    }
    TriScene::new(vertices, triangles, objects)
}

pub fn write_off(scene: &TriScene) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "OFF");
    let _ = writeln!(out, "{} {} 0", scene.vertices().len(), scene.num_triangles());
    for v in scene.vertices() {
        let _ = writeln!(out, "{:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for (t, tri) in scene.triangles().iter().enumerate() {
        let _ = writeln!(out, "3 {} {} {} {}", tri[0], tri[1], tri[2], scene.object_of(t));
    }
    out
}

pub fn load_off(path: impl AsRef<Path>) -> Result<TriScene> {
    parse_off(&fs::read_to_string(path)?)
}

/// Loads one file per object and stacks them in order.
pub fn load_off_objects<P: AsRef<Path>>(paths: &[P]) -> Result<TriScene> {
    let mut scene: Option<TriScene> = None;
    for p in paths {
        let next = load_off(p)?;
        scene = Some(match scene {
            None => next,
            Some(s) => s.combine(&next)?,
        });
    }
    scene.ok_or_else(|| Error::InvalidArgument("no OFF files given".into()))
}

pub fn save_off(scene: &TriScene, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_off(scene))?;
    Ok(())
}
