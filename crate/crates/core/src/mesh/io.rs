//! OFF (including nOFF) and OBJ geometry.

use std::fmt::Write as _;
use std::path::Path;

use super::{MeshError, TriangleMesh};
use crate::error::{OmegaError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(MeshFormat::Off),
            "obj" => Some(MeshFormat::Obj),
            _ => None,
        }
    }
}

/// Reads and validates a mesh; `format` defaults to the file extension.
pub fn load_mesh(path: &Path, format: Option<MeshFormat>) -> Result<TriangleMesh> {
    let format = format.or_else(|| MeshFormat::from_path(path)).ok_or_else(|| {
        OmegaError::invalid(format!("cannot infer mesh format of {}", path.display()))
    })?;
    let text = std::fs::read_to_string(path)?;
    let mesh = match format {
        MeshFormat::Off => parse_off(&text)?,
        MeshFormat::Obj => parse_obj(&text)?,
    };
    Ok(mesh)
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_off(text: &str) -> std::result::Result<TriangleMesh, MeshError> {
    let tokens: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .flat_map(|(i, line)| {
            let line = line.split('#').next().unwrap_or("");
            line.split_whitespace().map(move |t| (i + 1, t))
        })
        .collect();
    let last_line = text.lines().count().max(1);
    let mut pos = 0;
    let mut next = |what: &str| -> std::result::Result<(usize, &str), MeshError> {
        let tok = tokens
            .get(pos)
            .copied()
            .ok_or_else(|| parse_err(last_line, format!("unexpected end of file reading {what}")));
        pos += 1;
        tok
    };
    fn number<T: std::str::FromStr>(
        (line, t): (usize, &str),
        what: &str,
    ) -> std::result::Result<T, MeshError> {
        t.parse().map_err(|_| parse_err(line, format!("bad {what} '{t}'")))
    }

    let (line, header) = next("header")?;
    let dim = match header {
        "OFF" => 3,
        "nOFF" => number(next("dimension")?, "dimension")?,
        other => return Err(parse_err(line, format!("expected OFF header, found '{other}'"))),
    };
    let nv: usize = number(next("vertex count")?, "vertex count")?;
    let nf: usize = number(next("face count")?, "face count")?;
    let _edges: usize = number(next("edge count")?, "edge count")?;

    let mut coords = Vec::with_capacity(nv * dim);
    for _ in 0..nv * dim {
        coords.push(number::<f64>(next("vertex coordinates")?, "coordinate")?);
    }
    let mut faces = Vec::with_capacity(nf);
    let mut prev_line = 0;
    for f in 0..nf {
        // Anything after the indices on a face line (colours) is skipped.
        let mut tok = next("faces")?;
        while tok.0 == prev_line {
            tok = next("faces")?;
        }
        let line = tok.0;
        let k: usize = number(tok, "face size")?;
        if k != 3 {
            return Err(parse_err(
                line,
                format!("face {f} has {k} vertices; only triangles are supported"),
            ));
        }
        let mut face = [0usize; 3];
        for slot in &mut face {
            let tok = next("face indices")?;
            if tok.0 != line {
                return Err(parse_err(line, format!("face {f} is truncated")));
            }
            *slot = number(tok, "vertex index")?;
        }
        faces.push(face);
        prev_line = line;
    }
    TriangleMesh::from_coords(dim, coords, faces)
}

pub fn parse_obj(text: &str) -> std::result::Result<TriangleMesh, MeshError> {
    let mut coords = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut parts = content.split_whitespace();
        match parts.next() {
            Some("v") => {
                let xyz: Vec<&str> = parts.collect();
                if xyz.len() < 3 {
                    return Err(parse_err(line, "vertex needs three coordinates"));
                }
                for t in &xyz[..3] {
                    coords.push(
                        t.parse::<f64>()
                            .map_err(|_| parse_err(line, format!("bad coordinate '{t}'")))?,
                    );
                }
            }
            Some("f") => {
                let nv = coords.len() / 3;
                let refs: Vec<&str> = parts.collect();
                if refs.len() != 3 {
                    return Err(parse_err(
                        line,
                        format!("face has {} vertices; only triangles are supported", refs.len()),
                    ));
                }
                let mut face = [0usize; 3];
                for (slot, r) in face.iter_mut().zip(&refs) {
                    let idx = r.split('/').next().unwrap_or("");
                    let k: i64 = idx
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad vertex reference '{r}'")))?;
                    let resolved = match k {
                        k if k > 0 => k - 1,
                        k if k < 0 => nv as i64 + k,
                        _ => return Err(parse_err(line, "vertex index 0 is invalid")),
                    };
                    if resolved < 0 {
                        return Err(parse_err(line, format!("vertex reference '{r}' is out of range")));
                    }
                    *slot = resolved as usize;
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    TriangleMesh::from_coords(3, coords, faces)
}

pub fn write_off(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    if mesh.dim() == 3 {
        out.push_str("OFF\n");
    } else {
        let _ = writeln!(out, "nOFF\n{}", mesh.dim());
    }
    let _ = writeln!(out, "{} {} {}", mesh.vertex_count(), mesh.face_count(), mesh.edge_count());
    for v in 0..mesh.vertex_count() {
        let row: Vec<String> = mesh.point(v).iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    out
}

/// OBJ output; only meaningful for meshes in ℝ³.
pub fn write_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    for v in 0..mesh.vertex_count() {
        let p = mesh.point(v);
        let _ = writeln!(out, "v {:?} {:?} {:?}", p[0], p[1], p.get(2).copied().unwrap_or(0.0));
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}
