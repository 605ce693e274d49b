//! RWG current basis on interior edges and pulse charge basis on patches.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::geometry::TriScene;
use crate::{Error, Result};

/// One RWG function: the interior edge `v0 -> v1` shared by two patches.
///
/// On the plus patch `Λ = (r - p⁺) / (2A⁺)`, on the minus patch
/// `Λ = (p⁻ - r) / (2A⁻)`, with `p±` the vertices opposite the edge. The
/// function is not normalized by the edge length, so `∇·Λ = ±1/A±` and the
/// incidence matrix is integer valued.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RwgEdge {
    pub v0: usize,
    pub v1: usize,
    pub plus: usize,
    pub minus: usize,
    pub plus_free: usize,
    pub minus_free: usize,
    pub object: usize,
}

/// The half of an RWG function living on one patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfBasis {
    pub edge: usize,
    /// +1 on the plus patch, -1 on the minus patch.
    pub sign: i8,
    pub free_vertex: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RwgBasis {
    edges: Vec<RwgEdge>,
    num_patches: usize,
    halves: Vec<Vec<HalfBasis>>,
    edge_ranges: Vec<Range<usize>>,
    patch_ranges: Vec<Range<usize>>,
}

/// Builds the RWG basis of a scene. Edges are ordered by object, then by vertex pair.
pub fn build_basis(scene: &TriScene) -> Result<RwgBasis> {
    let census = scene.census()?;
    let tris = scene.triangles();
    let opposite = |t: usize, a: usize, b: usize| -> usize {
        *tris[t].iter().find(|&&v| v != a && v != b).expect("edge vertices belong to the triangle")
    };

    let mut edges: Vec<RwgEdge> = census
        .interior
        .iter()
        .map(|e| RwgEdge {
            v0: e.v0,
            v1: e.v1,
            plus: e.forward,
            minus: e.backward,
            plus_free: opposite(e.forward, e.v0, e.v1),
            minus_free: opposite(e.backward, e.v0, e.v1),
            object: scene.object_of(e.forward),
        })
        .collect();
    if edges.is_empty() {
        return Err(Error::NoInteriorEdges);
    }
    edges.sort_by_key(|e| (e.object, e.v0, e.v1));

    let k = scene.num_objects();
    let mut edge_ranges = Vec::with_capacity(k);
    for o in 0..k {
        let start = edges.partition_point(|e| e.object < o);
        let end = edges.partition_point(|e| e.object <= o);
        if start == end {
            return Err(Error::InvalidArgument(format!("object {o} has no interior edges")));
        }
        edge_ranges.push(start..end);
    }
    let patch_ranges = (0..k).map(|o| scene.object_triangles(o)).collect();

    let mut halves = vec![Vec::new(); scene.num_triangles()];
    for (n, e) in edges.iter().enumerate() {
        halves[e.plus].push(HalfBasis { edge: n, sign: 1, free_vertex: e.plus_free });
        halves[e.minus].push(HalfBasis { edge: n, sign: -1, free_vertex: e.minus_free });
    }

    Ok(RwgBasis {
        edges,
        num_patches: scene.num_triangles(),
        halves,
        edge_ranges,
        patch_ranges,
    })
}

impl RwgBasis {
    pub fn edges(&self) -> &[RwgEdge] {
        &self.edges
    }

    /// Number of RWG functions `e`.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of patches `p`.
    pub fn num_patches(&self) -> usize {
        self.num_patches
    }

    pub fn num_objects(&self) -> usize {
        self.edge_ranges.len()
    }

    /// RWG halves supported on patch `t` (at most three).
    pub fn halves(&self, t: usize) -> &[HalfBasis] {
        &self.halves[t]
    }

    pub fn edge_range(&self, object: usize) -> Range<usize> {
        self.edge_ranges[object].clone()
    }

    pub fn patch_range(&self, object: usize) -> Range<usize> {
        self.patch_ranges[object].clone()
    }

    pub fn edge_object(&self, n: usize) -> usize {
        self.edges[n].object
    }

    pub fn patch_object(&self, t: usize) -> usize {
        self.patch_ranges.partition_point(|r| r.end <= t)
    }

    /// Dense `p × e` incidence matrix: `+1` at the plus patch, `-1` at the minus patch.
    pub fn incidence_matrix(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.num_patches, self.edges.len());
        for (n, e) in self.edges.iter().enumerate() {
            d[(e.plus, n)] = 1.0;
            d[(e.minus, n)] = -1.0;
        }
        d
    }
}
