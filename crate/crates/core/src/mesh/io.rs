//! Mesh file ingestion (OBJ / STL / PLY) and OBJ output.
//!
//! Positions are parsed as 64-bit reals. Texture and normal records are
//! ignored; polygons with more than three sides are fan-triangulated.

use super::TriangleMesh;
use crate::geom::Point;
use crate::{Error, Result};
use std::io::Read;
use std::path::Path;

/// What happened while loading a mesh file.
#[derive(Debug, Default, Clone)]
pub struct LoadReport {
    /// Indices (in input face order) of zero-area faces dropped at load.
    pub dropped_faces: Vec<usize>,
    /// Number of quads and higher polygons that were fan-triangulated.
    pub fan_triangulated: usize,
}

/// Load a triangle mesh from `.obj`, `.stl` (binary or ASCII) or `.ply`
/// (ASCII). The format is chosen by file extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<(TriangleMesh, LoadReport)> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    match ext.as_str() {
        "obj" => parse_obj(&bytes),
        "stl" => parse_stl(&bytes),
        "ply" => parse_ply(&bytes),
        other => Err(Error::Mesh(format!(
            "unsupported mesh format '.{other}' (expected .obj, .stl or .ply)"
        ))),
    }
}

fn finish(
    vertices: Vec<Point>,
    faces: Vec<[u32; 3]>,
    fan_triangulated: usize,
) -> Result<(TriangleMesh, LoadReport)> {
    let (mesh, dropped_faces) = TriangleMesh::from_parts(vertices, faces)?;
    Ok((
        mesh,
        LoadReport {
            dropped_faces,
            fan_triangulated,
        },
    ))
}

fn parse_obj(bytes: &[u8]) -> Result<(TriangleMesh, LoadReport)> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::Mesh("OBJ file is not valid UTF-8".into()))?;
    let mut vertices: Vec<Point> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut fan = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut coord = [0.0f64; 3];
                for c in &mut coord {
                    *c = it
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| Error::Mesh(format!("bad vertex at line {}", lineno + 1)))?;
                }
                vertices.push(Point::new(coord[0], coord[1], coord[2]));
            }
            Some("f") => {
                let mut idx = Vec::with_capacity(4);
                for tok in it {
                    let first = tok.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|_| Error::Mesh(format!("bad face index at line {}", lineno + 1)))?;
                    let resolved = if i > 0 {
                        (i - 1) as u32
                    } else if i < 0 {
                        (vertices.len() as i64 + i) as u32
                    } else {
                        return Err(Error::Mesh(format!("face index 0 at line {}", lineno + 1)));
                    };
                    idx.push(resolved);
                }
                if idx.len() < 3 {
                    return Err(Error::Mesh(format!(
                        "face with fewer than 3 vertices at line {}",
                        lineno + 1
                    )));
                }
                if idx.len() > 3 {
                    fan += 1;
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    finish(vertices, faces, fan)
}

fn parse_stl(bytes: &[u8]) -> Result<(TriangleMesh, LoadReport)> {
    // Binary STL: 80-byte header + u32 count + 50 bytes per facet. Files can
    // begin with "solid" in either form, so decide by the size equation.
    let is_binary = bytes.len() >= 84 && {
        let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
        bytes.len() == 84 + n * 50
    };
    let raw_tris = if is_binary {
        parse_stl_binary(bytes)?
    } else {
        parse_stl_ascii(bytes)?
    };
    // STL stores bare triangles; weld identical coordinates into indices.
    let mut vertices: Vec<Point> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut lookup: std::collections::HashMap<[u64; 3], u32> = std::collections::HashMap::new();
    for tri in raw_tris {
        let mut f = [0u32; 3];
        for (k, p) in tri.iter().enumerate() {
            let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
            f[k] = *lookup.entry(key).or_insert_with(|| {
                vertices.push(*p);
                (vertices.len() - 1) as u32
            });
        }
        faces.push(f);
    }
    finish(vertices, faces, 0)
}

fn parse_stl_binary(bytes: &[u8]) -> Result<Vec<[Point; 3]>> {
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let mut tris = Vec::with_capacity(n);
    for i in 0..n {
        let base = 84 + i * 50 + 12; // skip the normal
        let mut tri = [Point::origin(); 3];
        for (v, t) in tri.iter_mut().enumerate() {
            let off = base + v * 12;
            let x = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
            let y = f32::from_le_bytes(bytes[off + 4..off + 8].try_into().unwrap());
            let z = f32::from_le_bytes(bytes[off + 8..off + 12].try_into().unwrap());
            *t = Point::new(x as f64, y as f64, z as f64);
        }
        tris.push(tri);
    }
    Ok(tris)
}

fn parse_stl_ascii(bytes: &[u8]) -> Result<Vec<[Point; 3]>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::Mesh("ASCII STL is not valid UTF-8".into()))?;
    let mut tris = Vec::new();
    let mut current: Vec<Point> = Vec::new();
    for line in text.lines() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("vertex") => {
                let mut c = [0.0f64; 3];
                for v in &mut c {
                    *v = it
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| Error::Mesh("bad STL vertex".into()))?;
                }
                current.push(Point::new(c[0], c[1], c[2]));
            }
            Some("endfacet") => {
                if current.len() != 3 {
                    return Err(Error::Mesh("STL facet without exactly 3 vertices".into()));
                }
                tris.push([current[0], current[1], current[2]]);
                current.clear();
            }
            _ => {}
        }
    }
    Ok(tris)
}

fn parse_ply(bytes: &[u8]) -> Result<(TriangleMesh, LoadReport)> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::Mesh("only ASCII PLY is supported".into()))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(Error::Mesh("missing 'ply' magic".into()));
    }
    let mut n_vertices = 0usize;
    let mut n_faces = 0usize;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut in_vertex_element = false;
    for line in lines.by_ref() {
        let line = line.trim();
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["format", kind, ..] => {
                if *kind != "ascii" {
                    return Err(Error::Mesh("only ASCII PLY is supported".into()));
                }
            }
            ["element", "vertex", n] => {
                n_vertices = n.parse().map_err(|_| Error::Mesh("bad vertex count".into()))?;
                in_vertex_element = true;
            }
            ["element", "face", n] => {
                n_faces = n.parse().map_err(|_| Error::Mesh("bad face count".into()))?;
                in_vertex_element = false;
            }
            ["element", ..] => in_vertex_element = false,
            ["property", _ty, name] if in_vertex_element => {
                vertex_props.push((*name).to_string());
            }
            ["end_header"] => break,
            _ => {}
        }
    }
    let pos = |name: &str| vertex_props.iter().position(|p| p == name);
    let (ix, iy, iz) = match (pos("x"), pos("y"), pos("z")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(Error::Mesh("PLY vertex element lacks x/y/z".into())),
    };

    let mut vertices = Vec::with_capacity(n_vertices);
    let mut data_lines = lines.filter(|l| !l.trim().is_empty());
    for _ in 0..n_vertices {
        let line = data_lines
            .next()
            .ok_or_else(|| Error::Mesh("PLY truncated in vertex data".into()))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().unwrap_or(f64::NAN))
            .collect();
        if vals.len() < vertex_props.len() {
            return Err(Error::Mesh("short PLY vertex line".into()));
        }
        vertices.push(Point::new(vals[ix], vals[iy], vals[iz]));
    }
    let mut faces = Vec::with_capacity(n_faces);
    let mut fan = 0usize;
    for _ in 0..n_faces {
        let line = data_lines
            .next()
            .ok_or_else(|| Error::Mesh("PLY truncated in face data".into()))?;
        let vals: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse().unwrap_or(-1))
            .collect();
        if vals.is_empty() || vals[0] < 3 || vals.len() < 1 + vals[0] as usize {
            return Err(Error::Mesh("bad PLY face line".into()));
        }
        let k = vals[0] as usize;
        if k > 3 {
            fan += 1;
        }
        for j in 1..k - 1 {
            faces.push([vals[1] as u32, vals[1 + j] as u32, vals[2 + j] as u32]);
        }
    }
    finish(vertices, faces, fan)
}

/// Write a mesh as ASCII OBJ. Coordinates print in shortest round-trip
/// form, so outputs are byte-stable across runs.
pub fn write_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in mesh.faces() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}
