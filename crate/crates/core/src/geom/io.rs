//! Mesh and contour serialization: Wavefront-style `v`/`f` records
//! for meshes, CSV for contour polylines.

use std::io::{BufRead, Write};

use super::{ContourCurve, GeomError, Point3, TriMesh};

/// Writes `v x y z` and `f i j k` records (1-based indices).
pub fn write_obj<W: Write>(mesh: &TriMesh, w: &mut W) -> Result<(), GeomError> {
    for p in mesh.vertices() {
        writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
    }
    for f in mesh.faces() {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

pub fn obj_string(mesh: &TriMesh) -> String {
    let mut buf = Vec::new();
    write_obj(mesh, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("obj output is ascii")
}

/// Reads `v`/`f` records. Faces must be triangles; `vn`, `vt`,
/// comments and empty lines are ignored. Negative (relative) indices
/// are not supported.
pub fn read_obj<R: BufRead>(r: R) -> Result<TriMesh, GeomError> {
    let mut vertices: Vec<Point3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for (ln, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = ln + 1;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in coords.iter_mut() {
                    let tok = it.next().ok_or_else(|| GeomError::ObjParse {
                        line: line_no,
                        reason: "vertex needs 3 coordinates".into(),
                    })?;
                    *c = tok.parse().map_err(|_| GeomError::ObjParse {
                        line: line_no,
                        reason: format!("bad coordinate {tok:?}"),
                    })?;
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut idx: Vec<usize> = Vec::with_capacity(3);
                for tok in it {
                    // Accept "i", "i/t", "i/t/n" forms; only the vertex
                    // index is used.
                    let head = tok.split('/').next().unwrap_or(tok);
                    let i: i64 = head.parse().map_err(|_| GeomError::ObjParse {
                        line: line_no,
                        reason: format!("bad face index {tok:?}"),
                    })?;
                    if i < 1 {
                        return Err(GeomError::ObjParse {
                            line: line_no,
                            reason: format!("face index {i} out of range"),
                        });
                    }
                    idx.push((i - 1) as usize);
                }
                if idx.len() != 3 {
                    return Err(GeomError::ObjParse {
                        line: line_no,
                        reason: format!("face has {} vertices, expected 3", idx.len()),
                    });
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

/// CSV rows `contour_index,t,x,y,z`, one row per contour vertex, `t`
/// being the vertex's normalized arc-length parameter.
pub fn contours_csv(contours: &[(usize, &ContourCurve)]) -> String {
    let mut out = String::from("contour_index,t,x,y,z\n");
    for (index, c) in contours {
        for (vi, p) in c.points().iter().enumerate() {
            let t = c.vertex_param(vi);
            out.push_str(&format!("{index},{t},{},{},{}\n", p.x, p.y, p.z));
        }
    }
    out
}
