//! Minimum-volume oriented bounding boxes for layer stacks.
//!
//! One box axis is pinned to the stack axis, so the search reduces to
//! the minimum-area rectangle of the points projected into the cross
//! plane. Rotating calipers over the hull edges is exact for that
//! family.

use super::{orthonormal_basis, poly2, GeomError, Point2, Point3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    pub center: Point3,
    pub axes: [Vec3; 3],
    pub half_extents: [f64; 3],
}

impl Obb {
    /// Full extents (2x half), sorted descending. Useful when
    /// comparing against an envelope whose orientation is free.
    pub fn sorted_extents(&self) -> [f64; 3] {
        let mut e = [
            2.0 * self.half_extents[0],
            2.0 * self.half_extents[1],
            2.0 * self.half_extents[2],
        ];
        e.sort_by(|a, b| b.total_cmp(a));
        e
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents[0] * self.half_extents[1] * self.half_extents[2]
    }

    pub fn contains(&self, p: &Point3, tol: f64) -> bool {
        let d = p - self.center;
        (0..3).all(|k| d.dot(&self.axes[k]).abs() <= self.half_extents[k] + tol)
    }
}

/// Minimum-volume box over `points` with one axis fixed to
/// `stack_axis`. Degenerate inputs (single point, collinear
/// projections) produce zero extents along the missing directions.
pub fn min_obb(points: &[Point3], stack_axis: Vec3) -> Result<Obb, GeomError> {
    if points.is_empty() {
        return Err(GeomError::EmptyPointSet);
    }
    if !super::all_finite(points) {
        return Err(GeomError::NonFinite);
    }
    let n = stack_axis.norm();
    if n < 1e-12 {
        return Err(GeomError::DegenerateDirection);
    }
    let w = stack_axis / n;
    let (u, v) = orthonormal_basis(&w);

    let mut wlo = f64::INFINITY;
    let mut whi = f64::NEG_INFINITY;
    let mut proj: Vec<Point2> = Vec::with_capacity(points.len());
    for p in points {
        let d = p.coords.dot(&w);
        wlo = wlo.min(d);
        whi = whi.max(d);
        proj.push(Point2::new(p.coords.dot(&u), p.coords.dot(&v)));
    }

    let hull = poly2::convex_hull(&proj);
    let rect = match hull.len() {
        0 => unreachable!("non-empty input"),
        1 => Rect2 {
            center: hull[0],
            dir: nalgebra::Vector2::zeros(),
            half: (0.0, 0.0),
        },
        2 => {
            let d = hull[1] - hull[0];
            let len = d.norm();
            let dir = d / len;
            Rect2 {
                center: Point2::from((hull[0].coords + hull[1].coords) * 0.5),
                dir,
                half: (0.5 * len, 0.0),
            }
        }
        _ => min_area_rect(&hull),
    };

    let dir3 = u * rect.dir.x + v * rect.dir.y;
    let a0 = if dir3.norm() < 1e-12 { u } else { dir3.normalize() };
    let a1 = w.cross(&a0);
    let center = Point3::from(
        u * rect.center.x + v * rect.center.y + w * (0.5 * (wlo + whi)),
    );
    Ok(Obb {
        center,
        axes: [a0, a1, w],
        half_extents: [rect.half.0, rect.half.1, 0.5 * (whi - wlo)],
    })
}

struct Rect2 {
    center: Point2,
    dir: nalgebra::Vector2<f64>,
    half: (f64, f64),
}

/// Rotating calipers over hull edges: the minimum-area enclosing
/// rectangle has a side collinear with some hull edge.
fn min_area_rect(hull: &[Point2]) -> Rect2 {
    let n = hull.len();
    let mut best: Option<(f64, Rect2)> = None;
    for i in 0..n {
        let e = hull[(i + 1) % n] - hull[i];
        let len = e.norm();
        if len < 1e-15 {
            continue;
        }
        let dx = e / len;
        let dy = nalgebra::Vector2::new(-dx.y, dx.x);
        let mut alo = f64::INFINITY;
        let mut ahi = f64::NEG_INFINITY;
        let mut blo = f64::INFINITY;
        let mut bhi = f64::NEG_INFINITY;
        for p in hull {
            let a = p.coords.dot(&dx);
            let b = p.coords.dot(&dy);
            alo = alo.min(a);
            ahi = ahi.max(a);
            blo = blo.min(b);
            bhi = bhi.max(b);
        }
        let area = (ahi - alo) * (bhi - blo);
        if best.as_ref().is_none_or(|(ba, _)| area < *ba) {
            let ca = 0.5 * (alo + ahi);
            let cb = 0.5 * (blo + bhi);
            best = Some((
                area,
                Rect2 {
                    center: Point2::from(dx * ca + dy * cb),
                    dir: dx,
                    half: (0.5 * (ahi - alo), 0.5 * (bhi - blo)),
                },
            ));
        }
    }
    best.expect("hull has at least one non-degenerate edge").1
}
