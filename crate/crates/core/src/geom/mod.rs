//! Geometry kernel: meshes, planar contours, convex polygon clipping
//! and oriented bounding boxes.
//!
//! Everything is in SI meters. Angles are radians.

mod contour;
mod loft;
mod mesh;
mod obb;
pub mod io;
pub mod poly2;
mod slice;

pub use contour::ContourCurve;
pub use loft::loft_mesh;
pub use mesh::TriMesh;
pub use obb::{min_obb, Obb};
pub use slice::slice_contours;

use thiserror::Error;

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Point2 = nalgebra::Point2<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;

/// Endpoint welding tolerance used when chaining slice segments into
/// contours.
pub const WELD_TOL: f64 = 1e-7;

/// Coplanarity tolerance for contour points against their plane.
pub const PLANE_TOL: f64 = 1e-6;

/// Cross products below this are treated as collinear in 2D
/// orientation tests.
pub const AREA_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("direction vector has near-zero length")]
    DegenerateDirection,
    #[error("face {face} references vertex {index} but mesh has {len} vertices")]
    FaceIndexOutOfRange { face: usize, index: usize, len: usize },
    #[error("need at least 2 guide curves, got {0}")]
    InsufficientGuides(usize),
    #[error("guide {guide} has coincident consecutive points at index {index}")]
    CoincidentGuidePoints { guide: usize, index: usize },
    #[error("coincident consecutive contour points at index {0}")]
    CoincidentPoints(usize),
    #[error("guide {guide} needs at least 2 points, got {len}")]
    GuideTooShort { guide: usize, len: usize },
    #[error("loft needs at least 2 samples per direction, got {0}x{1}")]
    TooFewSamples(usize, usize),
    #[error("slice spacing must be positive, got {0}")]
    NonPositiveSpacing(f64),
    #[error("polyline needs at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("contour point {index} is {dist:.3e} m off its plane")]
    NotCoplanar { index: usize, dist: f64 },
    #[error("polygon is not convex at vertex {0}")]
    NotConvex(usize),
    #[error("polygon is not counter-clockwise (signed area {0:.3e})")]
    NotCounterClockwise(f64),
    #[error("polygon needs at least 3 vertices, got {0}")]
    PolygonTooSmall(usize),
    #[error("empty point set")]
    EmptyPointSet,
    #[error("malformed obj data at line {line}: {reason}")]
    ObjParse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An oriented plane; `normal` is unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub origin: Point3,
    pub normal: Vec3,
}

impl Plane {
    pub fn new(origin: Point3, normal: Vec3) -> Result<Self, GeomError> {
        if !origin.coords.iter().all(|c| c.is_finite()) || !normal.iter().all(|c| c.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        let n = normal.norm();
        if n < 1e-12 {
            return Err(GeomError::DegenerateDirection);
        }
        Ok(Plane { origin, normal: normal / n })
    }

    pub fn signed_distance(&self, p: &Point3) -> f64 {
        (p - self.origin).dot(&self.normal)
    }

    /// Deterministic in-plane orthonormal pair `(u, v)` with
    /// `u x v = normal`.
    pub fn basis(&self) -> (Vec3, Vec3) {
        orthonormal_basis(&self.normal)
    }

    /// Plane coordinates of `p` relative to `origin` (normal component
    /// is dropped).
    pub fn to_uv(&self, p: &Point3) -> Point2 {
        let (u, v) = self.basis();
        let d = p - self.origin;
        Point2::new(d.dot(&u), d.dot(&v))
    }

    pub fn from_uv(&self, q: &Point2) -> Point3 {
        let (u, v) = self.basis();
        self.origin + u * q.x + v * q.y
    }
}

/// Deterministic orthonormal pair `(u, v)` completing a unit `normal`
/// to a right-handed frame. The seed axis is the global basis vector
/// least aligned with the normal, so nearby normals get nearby frames.
pub fn orthonormal_basis(normal: &Vec3) -> (Vec3, Vec3) {
    let a = normal.map(f64::abs);
    let seed = if a.x <= a.y && a.x <= a.z {
        Vec3::x()
    } else if a.y <= a.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let u = seed.cross(normal).normalize();
    let v = normal.cross(&u);
    (u, v)
}

pub(crate) fn all_finite(points: &[Point3]) -> bool {
    points.iter().all(|p| p.coords.iter().all(|c| c.is_finite()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn basis_is_right_handed() {
        for n in [Vec3::x(), Vec3::y(), Vec3::z(), Vec3::new(0.3, -0.5, 0.81)] {
            let n = n.normalize();
            let (u, v) = orthonormal_basis(&n);
            assert_relative_eq!(u.norm(), 1.0, epsilon = 1e-12);
            assert_relative_eq!(u.dot(&n), 0.0, epsilon = 1e-12);
            assert_relative_eq!(u.cross(&v).dot(&n), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn plane_uv_roundtrip() {
        let plane = Plane::new(Point3::new(1.0, 2.0, 3.0), Vec3::new(0.0, 0.0, 2.0)).unwrap();
        let p = Point3::new(1.4, 1.7, 3.0);
        let q = plane.to_uv(&p);
        let back = plane.from_uv(&q);
        assert_relative_eq!((back - p).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn plane_rejects_zero_normal() {
        assert!(Plane::new(Point3::origin(), Vec3::zeros()).is_err());
    }
}
