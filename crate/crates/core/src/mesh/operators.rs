//! Cotangent stiffness, lumped mixed-Voronoi mass, angle-defect curvature,
//! and the curvature-weighted stiffness.

use std::f64::consts::PI;

use nalgebra_sparse::{CooMatrix, CscMatrix};
use serde::Serialize;

use super::{cross_norm, diff, dot, TriangleMesh};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Diagnostic {
    /// The mixed-Voronoi area at this vertex was not positive; the
    /// barycentric area (one third of the incident face areas) was used.
    BarycentricFallback { vertex: usize, mixed_area: f64 },
}

#[derive(Clone, Debug)]
pub struct MeshOperators {
    /// Cotangent stiffness L.
    pub stiffness: CscMatrix<f64>,
    /// Diagonal of the lumped mass matrix M.
    pub mass: Vec<f64>,
    /// 2π minus the sum of incident angles, per vertex.
    pub angle_defect: Vec<f64>,
    /// Gaussian curvature K_v = defect_v / M_vv.
    pub curvature: Vec<f64>,
    /// L_K: each face's cotangent contribution weighted by the mean K of its vertices.
    pub weighted_stiffness: CscMatrix<f64>,
    pub diagnostics: Vec<Diagnostic>,
    face_cot: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
}

/// Per-face geometry: cotangents and angles at the three corners, and the area.
fn face_geometry(mesh: &TriangleMesh, face: [usize; 3]) -> ([f64; 3], [f64; 3], f64) {
    let p = face.map(|v| mesh.point(v));
    let mut cot = [0.0; 3];
    let mut ang = [0.0; 3];
    let u = diff(p[1], p[0]);
    let w = diff(p[2], p[0]);
    let twice_area = cross_norm(&u, &w);
    for i in 0..3 {
        let a = diff(p[(i + 1) % 3], p[i]);
        let b = diff(p[(i + 2) % 3], p[i]);
        let d = dot(&a, &b);
        cot[i] = d / twice_area;
        ang[i] = twice_area.atan2(d);
    }
    (cot, ang, 0.5 * twice_area)
}

impl MeshOperators {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let nv = mesh.vertex_count();
        let faces = mesh.faces().to_vec();
        let mut face_cot = Vec::with_capacity(faces.len());
        let mut mixed = vec![0.0; nv];
        let mut bary = vec![0.0; nv];
        let mut angle_sum = vec![0.0; nv];

        for &face in &faces {
            let (cot, ang, area) = face_geometry(mesh, face);
            let obtuse = ang.iter().position(|&a| a > PI / 2.0);
            for i in 0..3 {
                let v = face[i];
                angle_sum[v] += ang[i];
                bary[v] += area / 3.0;
                mixed[v] += match obtuse {
                    None => {
                        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                        let pij = diff(mesh.point(face[j]), mesh.point(v));
                        let pik = diff(mesh.point(face[k]), mesh.point(v));
                        (dot(&pij, &pij) * cot[k] + dot(&pik, &pik) * cot[j]) / 8.0
                    }
                    Some(o) if o == i => area / 2.0,
                    Some(_) => area / 4.0,
                };
            }
            face_cot.push(cot);
        }

        let mut diagnostics = Vec::new();
        let mass: Vec<f64> = (0..nv)
            .map(|v| {
                if mixed[v] > 0.0 {
                    mixed[v]
                } else {
                    diagnostics.push(Diagnostic::BarycentricFallback {
                        vertex: v,
                        mixed_area: mixed[v],
                    });
                    bary[v]
                }
            })
            .collect();
        let angle_defect: Vec<f64> = angle_sum.iter().map(|s| 2.0 * PI - s).collect();
        let curvature: Vec<f64> = angle_defect.iter().zip(&mass).map(|(d, m)| d / m).collect();

        let mut ops = MeshOperators {
            stiffness: CscMatrix::zeros(nv, nv),
            mass,
            angle_defect,
            curvature,
            weighted_stiffness: CscMatrix::zeros(nv, nv),
            diagnostics,
            face_cot,
            faces,
        };
        ops.stiffness = ops.stiffness_with_face_weights(&vec![1.0; ops.faces.len()]);
        let kbar = ops.face_mean_curvature(&ops.curvature);
        ops.weighted_stiffness = ops.stiffness_with_face_weights(&kbar);
        ops
    }

    pub fn vertex_count(&self) -> usize {
        self.mass.len()
    }

    /// Mean of the three vertex values on each face.
    pub fn face_mean_curvature(&self, vertex_values: &[f64]) -> Vec<f64> {
        self.faces
            .iter()
            .map(|f| (vertex_values[f[0]] + vertex_values[f[1]] + vertex_values[f[2]]) / 3.0)
            .collect()
    }

    /// Σ_T w_T · (cotangent stiffness of T).
    pub fn stiffness_with_face_weights(&self, weights: &[f64]) -> CscMatrix<f64> {
        let n = self.vertex_count();
        let mut coo = CooMatrix::new(n, n);
        for ((face, cot), w) in self.faces.iter().zip(&self.face_cot).zip(weights) {
            for i in 0..3 {
                // Corner i faces the edge (j, k).
                let (a, b) = (face[(i + 1) % 3], face[(i + 2) % 3]);
                let c = 0.5 * w * cot[i];
                coo.push(a, b, -c);
                coo.push(b, a, -c);
                coo.push(a, a, c);
                coo.push(b, b, c);
            }
        }
        CscMatrix::from(&coo)
    }

    /// |Σ defect − 2πχ|.
    pub fn gauss_bonnet_error(&self, euler_characteristic: i64) -> f64 {
        (self.angle_defect.iter().sum::<f64>() - 2.0 * PI * euler_characteristic as f64).abs()
    }

    pub fn total_area(&self) -> f64 {
        self.mass.iter().sum()
    }
}

/// y = A x for a sparse symmetric or general A.
pub fn spmv(a: &CscMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    for (j, col) in a.col_iter().enumerate() {
        let xj = x[j];
        for (&i, &v) in col.row_indices().iter().zip(col.values()) {
            y[i] += v * xj;
        }
    }
    y
}
