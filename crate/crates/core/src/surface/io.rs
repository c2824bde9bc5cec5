//! OBJ and OFF reading and writing. Polygons are fan-triangulated.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SurfaceError, TriMesh};
use crate::geom::{Point3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Obj,
    Off,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<MeshFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "off" => Some(MeshFormat::Off),
            _ => None,
        }
    }
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriMesh, SurfaceError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SurfaceError::Io(format!("{}: {e}", path.display())))?;
    parse_mesh(&text, format)
}

pub fn parse_mesh(text: &str, format: MeshFormat) -> Result<TriMesh, SurfaceError> {
    let (v, f) = match format {
        MeshFormat::Obj => parse_obj(text)?,
        MeshFormat::Off => parse_off(text)?,
    };
    if v.is_empty() || f.is_empty() {
        return Err(SurfaceError::EmptyMesh);
    }
    TriMesh::new(v, f)
}

fn malformed(line: usize, message: impl Into<String>) -> SurfaceError {
    SurfaceError::Malformed { line, message: message.into() }
}

fn parse_coords<'a>(mut it: impl Iterator<Item = &'a str>, line: usize) -> Result<Point3, SurfaceError> {
    let mut c = [0.0f64; 3];
    for x in &mut c {
        let tok = it.next().ok_or_else(|| malformed(line, "expected 3 coordinates"))?;
        *x = tok.parse().map_err(|_| malformed(line, format!("bad coordinate `{tok}`")))?;
        if !x.is_finite() {
            return Err(SurfaceError::NonFinite(format!("line {line}")));
        }
    }
    Ok(Vec3::from(c))
}

fn fan(poly: &[usize], faces: &mut Vec<[usize; 3]>) {
    for k in 1..poly.len() - 1 {
        faces.push([poly[0], poly[k], poly[k + 1]]);
    }
}

fn parse_obj(text: &str) -> Result<(Vec<Point3>, Vec<[usize; 3]>), SurfaceError> {
    let mut v = Vec::new();
    let mut f = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut it = content.split_whitespace();
        match it.next() {
            Some("v") => v.push(parse_coords(it, line)?),
            Some("f") => {
                let mut poly = Vec::new();
                for tok in it {
                    let idx = tok.split('/').next().unwrap_or("");
                    let k: i64 = idx.parse().map_err(|_| malformed(line, format!("bad face index `{tok}`")))?;
                    let k = if k < 0 { v.len() as i64 + k } else { k - 1 };
                    if k < 0 || k as usize >= v.len() {
                        return Err(malformed(line, format!("face index {tok} out of range")));
                    }
                    poly.push(k as usize);
                }
                if poly.len() < 3 {
                    return Err(malformed(line, "face with fewer than 3 vertices"));
                }
                fan(&poly, &mut f);
            }
            _ => {}
        }
    }
    Ok((v, f))
}

fn parse_off(text: &str) -> Result<(Vec<Point3>, Vec<[usize; 3]>), SurfaceError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (line, header) = lines.next().ok_or(SurfaceError::EmptyMesh)?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| malformed(line, "missing OFF header"))?
        .trim();
    let (line, counts) = if rest.is_empty() {
        lines.next().ok_or_else(|| malformed(line, "missing counts line"))?
    } else {
        (line, rest)
    };
    let n: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| malformed(line, format!("bad count `{t}`"))))
        .collect::<Result<_, _>>()?;
    if n.len() < 2 {
        return Err(malformed(line, "counts line needs vertex and face counts"));
    }
    let (nv, nf) = (n[0], n[1]);
    let mut v = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines.next().ok_or_else(|| malformed(0, "unexpected end of vertex block"))?;
        v.push(parse_coords(l.split_whitespace(), line)?);
    }
    let mut f = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = lines.next().ok_or_else(|| malformed(0, "unexpected end of face block"))?;
        let toks: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| malformed(line, format!("bad face entry `{t}`"))))
            .collect::<Result<_, _>>()?;
        let k = *toks.first().ok_or_else(|| malformed(line, "empty face"))?;
        if k < 3 || toks.len() < k + 1 {
            return Err(malformed(line, "face needs at least 3 indices"));
        }
        let poly = &toks[1..=k];
        if let Some(bad) = poly.iter().find(|&&i| i >= nv) {
            return Err(malformed(line, format!("face index {bad} out of range")));
        }
        fan(poly, &mut f);
    }
    Ok((v, f))
}

pub fn to_obj(mesh: &TriMesh) -> String {
    let mut s = String::new();
    for p in mesh.vertices() {
        let _ = writeln!(s, "v {:.17e} {:.17e} {:.17e}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn to_off(mesh: &TriMesh) -> String {
    let mut s = format!("OFF\n{} {} 0\n", mesh.vertices().len(), mesh.faces().len());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn write_mesh(mesh: &TriMesh, path: &Path, format: MeshFormat) -> Result<(), SurfaceError> {
    let text = match format {
        MeshFormat::Obj => to_obj(mesh),
        MeshFormat::Off => to_off(mesh),
    };
    std::fs::write(path, text).map_err(|e| SurfaceError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::shapes;

    const CUBE_OBJ: &str = "# unit cube\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n\
        f 1 4 3 2\nf 5 6 7 8\nf 1 2 6 5\nf 2 3 7 6\nf 3 4 8 7\nf 4 1 5 8\n";

    #[test]
    fn obj_cube_quads() {
        let m = parse_mesh(CUBE_OBJ, MeshFormat::Obj).unwrap();
        assert_eq!(m.vertices().len(), 8);
        assert_eq!(m.faces().len(), 12);
        assert!((m.total_area() - 6.0).abs() < 1e-14);
        assert!(m.is_watertight());
    }

    #[test]
    fn obj_slash_and_negative_indices() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2//2 -1\n";
        let m = parse_mesh(text, MeshFormat::Obj).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn out_of_range_index_names_line() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\n\nf 1 2 9\n";
        match parse_mesh(text, MeshFormat::Obj) {
            Err(SurfaceError::Malformed { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let off = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n";
        match parse_mesh(off, MeshFormat::Off) {
            Err(SurfaceError::Malformed { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_finite_and_empty() {
        assert!(matches!(parse_mesh("v 0 0 nan\n", MeshFormat::Obj), Err(SurfaceError::NonFinite(_))));
        assert!(matches!(parse_mesh("# nothing\n", MeshFormat::Obj), Err(SurfaceError::EmptyMesh)));
    }

    #[test]
    fn off_round_trip_of_icosphere() {
        let m = shapes::icosphere(3, 1.0);
        let back = parse_mesh(&to_off(&m), MeshFormat::Off).unwrap();
        assert_eq!(back.faces(), m.faces());
        assert!((back.total_area() - 4.0 * std::f64::consts::PI).abs() < 0.04 * std::f64::consts::PI);
        let back = parse_mesh(&to_obj(&m), MeshFormat::Obj).unwrap();
        assert_eq!(back.vertices(), m.vertices());
    }

    #[test]
    fn off_header_with_counts_and_comments() {
        let off = "OFF 3 1 0 # counts inline\n  0 0 0\n1 0 0 \n\n0 1 0\n4 0 1 2 0\n";
        // a 4-gon with a repeated vertex fans into one good and one degenerate triangle
        let m = parse_mesh(off, MeshFormat::Off).unwrap();
        assert_eq!(m.faces().len(), 1);
        assert_eq!(m.dropped_faces(), 1);
    }
}
