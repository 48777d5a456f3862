//! Indexed triangle mesh.

use super::{all_finite, GeomError, Point3, Vec3};

/// Indexed triangle mesh. Construction validates indices and drops
/// degenerate (zero-area or repeated-index) faces, so downstream
/// slicing never sees them.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
}

const DEGENERATE_AREA: f64 = 1e-14;

impl TriMesh {
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self, GeomError> {
        if !all_finite(&vertices) {
            return Err(GeomError::NonFinite);
        }
        let mut kept = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            for &i in f {
                if i >= vertices.len() {
                    return Err(GeomError::FaceIndexOutOfRange {
                        face: fi,
                        index: i,
                        len: vertices.len(),
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                continue;
            }
            let area = triangle_area(&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]);
            if area > DEGENERATE_AREA {
                kept.push(*f);
            }
        }
        Ok(TriMesh { vertices, faces: kept })
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn surface_area(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| triangle_area(&self.vertices[f[0]], &self.vertices[f[1]], &self.vertices[f[2]]))
            .sum()
    }

    /// Min and max of the vertex projections onto `axis`.
    pub fn bounds_along(&self, axis: &Vec3) -> Option<(f64, f64)> {
        let mut it = self.vertices.iter().map(|p| p.coords.dot(axis));
        let first = it.next()?;
        let mut lo = first;
        let mut hi = first;
        for d in it {
            lo = lo.min(d);
            hi = hi.max(d);
        }
        Some((lo, hi))
    }

    /// Axis-aligned bounding box corners `(min, max)`.
    pub fn aabb(&self) -> Option<(Point3, Point3)> {
        let first = *self.vertices.first()?;
        let mut lo = first;
        let mut hi = first;
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Some((lo, hi))
    }
}

pub(crate) fn triangle_area(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

#[cfg(test)]
pub(crate) fn unit_cube() -> TriMesh {
    let v = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(1.0, 1.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(0.0, 0.0, 1.0),
        Point3::new(1.0, 0.0, 1.0),
        Point3::new(1.0, 1.0, 1.0),
        Point3::new(0.0, 1.0, 1.0),
    ];
    let f = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    TriMesh::new(v, f).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn drops_degenerate_faces() {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let m = TriMesh::new(v, vec![[0, 1, 2], [0, 1, 1], [0, 1, 0]]).unwrap();
        assert_eq!(m.faces().len(), 1);
    }

    #[test]
    fn rejects_out_of_range_index() {
        let v = vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)];
        assert!(matches!(
            TriMesh::new(v, vec![[0, 1, 3]]),
            Err(GeomError::FaceIndexOutOfRange { .. })
        ));
    }

    #[test]
    fn cube_area_is_six() {
        assert_relative_eq!(unit_cube().surface_area(), 6.0, epsilon = 1e-12);
    }
}
