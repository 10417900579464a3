//! Built-in deterministic meshes.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::TriangleMesh;
use crate::error::{OmegaError, Result};

/// Unit-circumradius regular icosahedron.
pub fn icosahedron() -> TriangleMesh {
    let (v, f) = icosahedron_raw();
    TriangleMesh::new(v, f).expect("icosahedron is a valid mesh")
}

fn icosahedron_raw() -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (raw.iter().map(|p| normalized(*p)).collect(), faces)
}

/// Unit regular octahedron.
pub fn octahedron() -> TriangleMesh {
    let v = vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let f = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    TriangleMesh::new(v, f).expect("octahedron is a valid mesh")
}

fn normalized(p: [f64; 3]) -> [f64; 3] {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}

/// Unit sphere vertices and faces after `subdiv` midpoint subdivisions of the
/// icosahedron, with new vertices pushed to the sphere: 10·4^s + 2 vertices.
fn unit_icosphere(subdiv: u32) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let (mut verts, mut faces) = icosahedron_raw();
    for _ in 0..subdiv {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let mut mid = |i: usize, j: usize| {
                *midpoint.entry((i.min(j), i.max(j))).or_insert_with(|| {
                    let (p, q) = (verts[i], verts[j]);
                    verts.push(normalized([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                    verts.len() - 1
                })
            };
            let ab = mid(a, b);
            let bc = mid(b, c);
            let ca = mid(c, a);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (verts, faces)
}

pub fn icosphere(subdiv: u32, radius: f64) -> Result<TriangleMesh> {
    let (v, f) = unit_icosphere(subdiv);
    let v = v.into_iter().map(|p| p.map(|x| x * radius)).collect();
    Ok(TriangleMesh::new(v, f)?)
}

/// Icosphere with the coordinates scaled by the semi-axes.
pub fn ellipsoid(subdiv: u32, axes: [f64; 3]) -> Result<TriangleMesh> {
    let (v, f) = unit_icosphere(subdiv);
    let v = v
        .into_iter()
        .map(|p| [p[0] * axes[0], p[1] * axes[1], p[2] * axes[2]])
        .collect();
    Ok(TriangleMesh::new(v, f)?)
}

/// Centres of the two blob bumps. They are a quarter turn apart, so the
/// surface has no axis of rotational symmetry.
pub const BLOB_CENTERS: [[f64; 3]; 2] = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];

/// Default bump height as a fraction of the bump radius.
pub const BLOB_HEIGHT: f64 = 0.5;

/// Unit icosphere with two radial bumps of angular radius `eps`:
/// r = 1 + height·eps·(1 − (θ/eps)²)³ within angle eps of each centre.
/// `eps = 0` gives the plain icosphere.
pub fn blob_sphere(subdiv: u32, eps: f64, height: f64) -> Result<TriangleMesh> {
    let (v, f) = unit_icosphere(subdiv);
    let v = v
        .into_iter()
        .map(|p| {
            let mut r = 1.0;
            if eps > 0.0 {
                for c in BLOB_CENTERS {
                    let cos = (p[0] * c[0] + p[1] * c[1] + p[2] * c[2]).clamp(-1.0, 1.0);
                    let theta = cos.acos();
                    if theta < eps {
                        r += height * eps * (1.0 - (theta / eps).powi(2)).powi(3);
                    }
                }
            }
            p.map(|x| x * r)
        })
        .collect();
    Ok(TriangleMesh::new(v, f)?)
}

/// Clifford torus (R₁cos θ, R₁sin θ, R₂cos φ, R₂sin φ) ⊂ ℝ⁴ on an n₁ × n₂
/// grid. Its induced metric is flat, and so is the triangulation: every
/// grid cell is a rectangle split along a diagonal.
pub fn flat_torus(n1: usize, n2: usize, r1: f64, r2: f64) -> Result<TriangleMesh> {
    if n1 < 3 || n2 < 3 {
        return Err(OmegaError::invalid(
            "flat torus needs at least 3 samples per direction",
        ));
    }
    let mut coords = Vec::with_capacity(n1 * n2 * 4);
    for i in 0..n1 {
        let th = 2.0 * PI * i as f64 / n1 as f64;
        for j in 0..n2 {
            let ph = 2.0 * PI * j as f64 / n2 as f64;
            coords.extend([r1 * th.cos(), r1 * th.sin(), r2 * ph.cos(), r2 * ph.sin()]);
        }
    }
    let idx = |i: usize, j: usize| (i % n1) * n2 + (j % n2);
    let mut faces = Vec::with_capacity(2 * n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    Ok(TriangleMesh::from_coords(4, coords, faces)?)
}
