//! 2D polygon helpers: orientation, convexity, convex clipping,
//! hulls. Polygons are open vertex rings (last vertex connects back to
//! the first) and the convex ops expect counter-clockwise winding.

use super::{GeomError, Point2, AREA_TOL};

pub fn signed_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

pub fn area(poly: &[Point2]) -> f64 {
    signed_area(poly).abs()
}

pub fn centroid(poly: &[Point2]) -> Point2 {
    let n = poly.len() as f64;
    let mut c = Point2::origin();
    for p in poly {
        c.x += p.x / n;
        c.y += p.y / n;
    }
    c
}

fn cross(o: &Point2, a: &Point2, b: &Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Checks counter-clockwise convexity; collinear runs are tolerated.
pub fn validate_convex_ccw(poly: &[Point2]) -> Result<(), GeomError> {
    let n = poly.len();
    if n < 3 {
        return Err(GeomError::PolygonTooSmall(n));
    }
    let area = signed_area(poly);
    if area <= AREA_TOL {
        return Err(GeomError::NotCounterClockwise(area));
    }
    // Scale the collinearity tolerance with the polygon size so the
    // test behaves the same at millimeter and meter scales.
    let scale: f64 = poly.iter().map(|p| p.coords.norm()).fold(1.0, f64::max);
    let tol = AREA_TOL * scale * scale;
    for i in 0..n {
        let c = cross(&poly[i], &poly[(i + 1) % n], &poly[(i + 2) % n]);
        if c < -tol {
            return Err(GeomError::NotConvex((i + 1) % n));
        }
    }
    Ok(())
}

/// Intersection of two convex counter-clockwise polygons
/// (Sutherland-Hodgman, clipping `subject` against each edge of
/// `clip`). Returns an empty vec when the intersection is empty or
/// degenerates below three vertices. Both inputs are validated.
pub fn convex_clip(subject: &[Point2], clip: &[Point2]) -> Result<Vec<Point2>, GeomError> {
    validate_convex_ccw(subject)?;
    validate_convex_ccw(clip)?;
    let mut out: Vec<Point2> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        let a = clip[i];
        let b = clip[(i + 1) % n];
        out = clip_against_edge(&out, &a, &b);
        if out.is_empty() {
            return Ok(vec![]);
        }
    }
    let out = dedup_ring(&out, 1e-12);
    if out.len() < 3 || area(&out) <= AREA_TOL {
        return Ok(vec![]);
    }
    Ok(out)
}

/// Keeps the part of `poly` on the left of the directed line `a -> b`.
pub(crate) fn clip_against_edge(poly: &[Point2], a: &Point2, b: &Point2) -> Vec<Point2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let cur = poly[i];
        let nxt = poly[(i + 1) % n];
        let side_cur = cross(a, b, &cur);
        let side_nxt = cross(a, b, &nxt);
        if side_cur >= 0.0 {
            out.push(cur);
        }
        if (side_cur > 0.0 && side_nxt < 0.0) || (side_cur < 0.0 && side_nxt > 0.0) {
            let t = side_cur / (side_cur - side_nxt);
            out.push(Point2::new(
                cur.x + t * (nxt.x - cur.x),
                cur.y + t * (nxt.y - cur.y),
            ));
        }
    }
    out
}

/// Removes consecutive near-duplicate vertices (including the
/// wrap-around pair).
pub fn dedup_ring(poly: &[Point2], tol: f64) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::with_capacity(poly.len());
    for &p in poly {
        if out.last().is_none_or(|q| (p - q).norm() > tol) {
            out.push(p);
        }
    }
    while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= tol {
        out.pop();
    }
    out
}

/// Convex hull via Andrew's monotone chain, counter-clockwise.
/// Collinear input collapses to its two extreme points.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a == b);
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], &p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], &p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// True when `p` is inside or on the boundary of a convex CCW polygon.
pub fn convex_contains(poly: &[Point2], p: &Point2, tol: f64) -> bool {
    let n = poly.len();
    (0..n).all(|i| cross(&poly[i], &poly[(i + 1) % n], p) >= -tol)
}

/// Distance from `p` to the closest polygon edge.
pub fn distance_to_boundary(poly: &[Point2], p: &Point2) -> f64 {
    let n = poly.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        best = best.min(point_segment_distance(p, &a, &b));
    }
    best
}

fn point_segment_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    let q = a + ab * t;
    (p - q).norm()
}
