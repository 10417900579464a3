//! Closed triangulated surfaces and their discrete operators.
//!
//! Vertices live in ℝ^d (d ≥ 2). Most meshes are embedded in ℝ³; the flat
//! torus is embedded in ℝ⁴ so that it is intrinsically flat.

pub mod eigen;
pub mod generate;
pub mod io;
pub mod operators;
pub mod pipeline;

use std::collections::HashMap;

use thiserror::Error;

/// Faces with area at most this fraction of the mean area are degenerate.
pub const DEGENERATE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh has no faces")]
    Empty,

    #[error("vertices must have at least 2 coordinates, got {0}")]
    BadDimension(usize),

    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinite { vertex: usize },

    #[error("face {face} references vertex {vertex}, but there are only {count} vertices")]
    IndexOutOfRange {
        face: usize,
        vertex: usize,
        count: usize,
    },

    #[error("face {face} repeats a vertex")]
    RepeatedVertex { face: usize },

    #[error("vertex {vertex} is not used by any face")]
    UnreferencedVertex { vertex: usize },

    #[error("open surface: edge ({a}, {b}) belongs to a single face")]
    OpenBoundary { a: usize, b: usize },

    #[error("non-manifold edge ({a}, {b}) is shared by {count} faces")]
    NonManifoldEdge { a: usize, b: usize, count: usize },

    #[error("non-manifold vertex {vertex}: its faces do not form a single fan")]
    NonManifoldVertex { vertex: usize },

    #[error("surface is not orientable (conflict at face {face})")]
    NonOrientable { face: usize },

    #[error("mesh has {components} connected components")]
    Disconnected { components: usize },

    #[error("face {face} is degenerate (area {area:.3e})")]
    DegenerateFace { face: usize, area: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A validated, consistently oriented, closed, connected triangle mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    dim: usize,
    coords: Vec<f64>,
    faces: Vec<[usize; 3]>,
    flipped: usize,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let coords = vertices.into_iter().flatten().collect();
        Self::from_coords(3, coords, faces)
    }

    /// `coords` holds the vertices row by row, `dim` numbers each.
    pub fn from_coords(
        dim: usize,
        coords: Vec<f64>,
        faces: Vec<[usize; 3]>,
    ) -> Result<Self, MeshError> {
        if dim < 2 {
            return Err(MeshError::BadDimension(dim));
        }
        if coords.len() % dim != 0 {
            return Err(MeshError::Parse {
                line: 0,
                message: format!("{} coordinates do not split into rows of {dim}", coords.len()),
            });
        }
        let mut mesh = TriangleMesh {
            dim,
            coords,
            faces,
            flipped: 0,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&mut self) -> Result<(), MeshError> {
        let nv = self.vertex_count();
        if self.faces.is_empty() {
            return Err(MeshError::Empty);
        }
        if let Some(v) = (0..nv).find(|&v| self.point(v).iter().any(|x| !x.is_finite())) {
            return Err(MeshError::NonFinite { vertex: v });
        }
        let mut used = vec![false; nv];
        for (f, face) in self.faces.iter().enumerate() {
            for &v in face {
                if v >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        face: f,
                        vertex: v,
                        count: nv,
                    });
                }
                used[v] = true;
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(MeshError::RepeatedVertex { face: f });
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(MeshError::UnreferencedVertex { vertex: v });
        }

        let edges = self.edge_faces();
        let mut keys: Vec<_> = edges.keys().copied().collect();
        keys.sort_unstable();
        for &(a, b) in &keys {
            match edges[&(a, b)].len() {
                2 => {}
                1 => return Err(MeshError::OpenBoundary { a, b }),
                count => return Err(MeshError::NonManifoldEdge { a, b, count }),
            }
        }

        self.orient(&edges)?;
        self.check_vertex_fans()?;

        let areas: Vec<f64> = (0..self.faces.len()).map(|f| self.face_area(f)).collect();
        let mean = areas.iter().sum::<f64>() / areas.len() as f64;
        if let Some(f) = areas.iter().position(|&a| !(a > DEGENERATE_TOL * mean)) {
            return Err(MeshError::DegenerateFace {
                face: f,
                area: areas[f],
            });
        }
        Ok(())
    }

    /// Undirected edge → faces using it, with `true` when the face runs
    /// from the smaller to the larger index.
    fn edge_faces(&self) -> HashMap<(usize, usize), Vec<(usize, bool)>> {
        let mut map: HashMap<(usize, usize), Vec<(usize, bool)>> =
            HashMap::with_capacity(self.faces.len() * 3 / 2);
        for (f, face) in self.faces.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (face[i], face[(i + 1) % 3]);
                map.entry((a.min(b), a.max(b))).or_default().push((f, a < b));
            }
        }
        map
    }

    /// Propagates a consistent orientation from face 0; in ℝ³ the result is
    /// made outward (positive signed volume).
    fn orient(&mut self, edges: &HashMap<(usize, usize), Vec<(usize, bool)>>) -> Result<(), MeshError> {
        let nf = self.faces.len();
        let mut flip: Vec<Option<bool>> = vec![None; nf];
        let mut components = 0;
        let mut queue = std::collections::VecDeque::new();
        for seed in 0..nf {
            if flip[seed].is_some() {
                continue;
            }
            components += 1;
            flip[seed] = Some(false);
            queue.push_back(seed);
            while let Some(f) = queue.pop_front() {
                let face = self.faces[f];
                for i in 0..3 {
                    let (a, b) = (face[i], face[(i + 1) % 3]);
                    let key = (a.min(b), a.max(b));
                    let eff_f = (a < b) ^ flip[f].unwrap();
                    for &(g, dir_g) in &edges[&key] {
                        if g == f {
                            continue;
                        }
                        let want = !eff_f ^ dir_g;
                        match flip[g] {
                            None => {
                                flip[g] = Some(want);
                                queue.push_back(g);
                            }
                            Some(have) if have != want => {
                                return Err(MeshError::NonOrientable { face: g });
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
        if components > 1 {
            return Err(MeshError::Disconnected { components });
        }
        let mut flip: Vec<bool> = flip.into_iter().map(|f| f.unwrap()).collect();
        if self.dim == 3 {
            let mut volume = 0.0;
            for (face, &fl) in self.faces.iter().zip(&flip) {
                let [p, q, r] = face.map(|v| self.point(v));
                let det = p[0] * (q[1] * r[2] - q[2] * r[1]) - p[1] * (q[0] * r[2] - q[2] * r[0])
                    + p[2] * (q[0] * r[1] - q[1] * r[0]);
                volume += if fl { -det } else { det };
            }
            if volume < 0.0 {
                flip.iter_mut().for_each(|f| *f = !*f);
            }
        }
        for (face, fl) in self.faces.iter_mut().zip(&flip) {
            if *fl {
                face.swap(1, 2);
            }
        }
        self.flipped = flip.iter().filter(|f| **f).count();
        Ok(())
    }

    fn check_vertex_fans(&self) -> Result<(), MeshError> {
        let nv = self.vertex_count();
        // Each oriented face (v, a, b) contributes the link edge a → b at v.
        let mut link: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
        for face in &self.faces {
            for i in 0..3 {
                link[face[i]].push((face[(i + 1) % 3], face[(i + 2) % 3]));
            }
        }
        for (v, edges) in link.iter().enumerate() {
            let next: HashMap<usize, usize> = edges.iter().copied().collect();
            if next.len() != edges.len() {
                return Err(MeshError::NonManifoldVertex { vertex: v });
            }
            let start = edges[0].0;
            let mut cur = start;
            let mut steps = 0;
            loop {
                cur = next[&cur];
                steps += 1;
                if cur == start || steps > edges.len() {
                    break;
                }
            }
            if steps != edges.len() {
                return Err(MeshError::NonManifoldVertex { vertex: v });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Every edge has two faces, so E = 3F/2.
    pub fn edge_count(&self) -> usize {
        self.faces.len() * 3 / 2
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    pub fn point(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Number of input faces whose orientation was reversed during validation.
    pub fn flipped_faces(&self) -> usize {
        self.flipped
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        let u = diff(self.point(b), self.point(a));
        let w = diff(self.point(c), self.point(a));
        0.5 * cross_norm(&u, &w)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let mut total = 0.0;
        for face in &self.faces {
            for i in 0..3 {
                total += norm(&diff(self.point(face[i]), self.point(face[(i + 1) % 3])));
            }
        }
        // Each edge is visited from both of its faces.
        total / (3 * self.faces.len()) as f64
    }

    /// The same mesh with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> TriangleMesh {
        TriangleMesh {
            dim: self.dim,
            coords: self.coords.iter().map(|x| x * factor).collect(),
            faces: self.faces.clone(),
            flipped: self.flipped,
        }
    }
}

pub(crate) fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// |u × w| in any dimension, via the Gram determinant.
pub(crate) fn cross_norm(u: &[f64], w: &[f64]) -> f64 {
    let uu = dot(u, u);
    let ww = dot(w, w);
    let uw = dot(u, w);
    (uu * ww - uw * uw).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
        (
            vec![[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]],
            vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
        )
    }

    #[test]
    fn tetrahedron_is_valid() {
        let (v, f) = tetra();
        let m = TriangleMesh::new(v, f).unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.flipped_faces(), 0);
    }

    #[test]
    fn orientation_is_repaired() {
        let (v, mut f) = tetra();
        f[2].swap(0, 1);
        let m = TriangleMesh::new(v.clone(), f).unwrap();
        assert_eq!(m.flipped_faces(), 1);
        let good = TriangleMesh::new(v, tetra().1).unwrap();
        for (a, b) in m.faces().iter().zip(good.faces()) {
            let rot = |x: [usize; 3]| [[x[0], x[1], x[2]], [x[1], x[2], x[0]], [x[2], x[0], x[1]]];
            assert!(rot(*a).contains(b));
        }
    }

    #[test]
    fn inward_orientation_is_turned_outward() {
        let (v, f) = tetra();
        let inward: Vec<_> = f.iter().map(|t| [t[0], t[2], t[1]]).collect();
        let m = TriangleMesh::new(v, inward).unwrap();
        assert_eq!(m.flipped_faces(), 4);
    }

    #[test]
    fn open_surface_names_the_edge() {
        let (v, mut f) = tetra();
        f.pop();
        let err = TriangleMesh::new(v, f).unwrap_err();
        assert!(matches!(err, MeshError::OpenBoundary { .. }), "{err}");
    }

    #[test]
    fn unreferenced_and_out_of_range() {
        let (mut v, f) = tetra();
        v.push([0.0, 0.0, 5.0]);
        assert_eq!(
            TriangleMesh::new(v, f.clone()).unwrap_err(),
            MeshError::UnreferencedVertex { vertex: 4 }
        );
        let (v, mut f) = tetra();
        f[1][2] = 9;
        assert_eq!(
            TriangleMesh::new(v, f).unwrap_err(),
            MeshError::IndexOutOfRange {
                face: 1,
                vertex: 9,
                count: 4
            }
        );
    }

    #[test]
    fn two_tetrahedra_are_disconnected() {
        let (mut v, mut f) = tetra();
        let (v2, f2) = tetra();
        v.extend(v2.iter().map(|p| [p[0] + 5.0, p[1], p[2]]));
        f.extend(f2.iter().map(|t| t.map(|i| i + 4)));
        assert_eq!(
            TriangleMesh::new(v, f).unwrap_err(),
            MeshError::Disconnected { components: 2 }
        );
    }

    #[test]
    fn pinched_vertex_is_rejected() {
        // A triangular tube with both ends coned off to the same apex 6.
        let mut v = Vec::new();
        for z in [0.0, 1.0] {
            for k in 0..3 {
                let t = k as f64 * 2.0 * std::f64::consts::PI / 3.0;
                v.push([t.cos(), t.sin(), z]);
            }
        }
        v.push([0.0, 0.0, 0.5]);
        let mut f = Vec::new();
        for k in 0..3 {
            let k1 = (k + 1) % 3;
            f.push([k, k1, k1 + 3]);
            f.push([k, k1 + 3, k + 3]);
            f.push([k1, k, 6]);
            f.push([k + 3, k1 + 3, 6]);
        }
        assert_eq!(
            TriangleMesh::new(v, f).unwrap_err(),
            MeshError::NonManifoldVertex { vertex: 6 }
        );
    }

    #[test]
    fn degenerate_face_is_rejected() {
        let (mut v, f) = tetra();
        v[3] = [0.0, 0.0, 0.0];
        v[0] = [0.0, 0.0, 0.0];
        assert!(TriangleMesh::new(v, f).is_err());
    }

    #[test]
    fn scaling_multiplies_areas() {
        let (v, f) = tetra();
        let m = TriangleMesh::new(v, f).unwrap();
        let s = m.scaled(3.0);
        assert!((s.total_area() - 9.0 * m.total_area()).abs() < 1e-12);
    }
}
