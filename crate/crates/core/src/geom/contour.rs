//! Planar contour polylines with arc-length parameterization.

use super::{all_finite, GeomError, Plane, Point3, Vec3, PLANE_TOL};

/// A planar polyline (open or closed) parameterized by normalized arc
/// length: `t = 0` is the first vertex, `t = 1` the last (for closed
/// contours `c(0) == c(1)` through the implicit closing segment).
#[derive(Debug, Clone, PartialEq)]
pub struct ContourCurve {
    plane: Plane,
    points: Vec<Point3>,
    /// Arc length from the first vertex to vertex `i`.
    cumulative: Vec<f64>,
    /// Length of the implicit closing segment; zero for open contours.
    closing_len: f64,
    closed: bool,
}

impl ContourCurve {
    /// Builds a contour, validating coplanarity (within [`PLANE_TOL`])
    /// and strictly increasing arc length. For closed contours the
    /// last vertex must not repeat the first; the closing segment is
    /// implicit.
    pub fn new(plane: Plane, points: Vec<Point3>, closed: bool) -> Result<Self, GeomError> {
        if points.len() < 2 {
            return Err(GeomError::TooFewPoints { need: 2, got: points.len() });
        }
        if !all_finite(&points) {
            return Err(GeomError::NonFinite);
        }
        for (i, p) in points.iter().enumerate() {
            let d = plane.signed_distance(p).abs();
            if d > PLANE_TOL {
                return Err(GeomError::NotCoplanar { index: i, dist: d });
            }
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        for i in 1..points.len() {
            let step = (points[i] - points[i - 1]).norm();
            if step <= 0.0 {
                return Err(GeomError::CoincidentPoints(i));
            }
            cumulative.push(cumulative[i - 1] + step);
        }
        let closing_len = if closed {
            let step = (points[0] - points[points.len() - 1]).norm();
            if step <= 0.0 {
                return Err(GeomError::CoincidentPoints(points.len()));
            }
            step
        } else {
            0.0
        };
        Ok(ContourCurve { plane, points, cumulative, closing_len, closed })
    }

    pub fn plane(&self) -> &Plane {
        &self.plane
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn length(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1] + self.closing_len
    }

    /// Normalized arc-length parameter of vertex `i`.
    pub fn vertex_param(&self, i: usize) -> f64 {
        self.cumulative[i] / self.length()
    }

    /// Point at normalized arc length `t`. Open contours clamp `t` to
    /// `[0, 1]`; closed contours wrap it.
    pub fn point_at(&self, t: f64) -> Point3 {
        let (i, j, f) = self.locate(t);
        let a = self.points[i];
        let b = self.points[j];
        a + (b - a) * f
    }

    /// Unit tangent of the segment containing `t`.
    pub fn tangent_at(&self, t: f64) -> Vec3 {
        let (i, j, _) = self.locate(t);
        (self.points[j] - self.points[i]).normalize()
    }

    /// Segment index and local fraction for parameter `t`.
    fn locate(&self, t: f64) -> (usize, usize, f64) {
        let len = self.length();
        let t = if self.closed { t.rem_euclid(1.0) } else { t.clamp(0.0, 1.0) };
        let s = t * len;
        let n = self.points.len();
        // partition_point: first vertex whose cumulative length exceeds s.
        let idx = self.cumulative.partition_point(|&c| c <= s);
        if idx >= n {
            if self.closed {
                let f = (s - self.cumulative[n - 1]) / self.closing_len;
                return (n - 1, 0, f.clamp(0.0, 1.0));
            }
            return (n - 2, n - 1, 1.0);
        }
        if idx == 0 {
            return (0, 1.min(n - 1), 0.0);
        }
        let seg_len = self.cumulative[idx] - self.cumulative[idx - 1];
        (idx - 1, idx, (s - self.cumulative[idx - 1]) / seg_len)
    }
}
