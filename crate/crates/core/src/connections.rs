//! Lap joints between consecutive layers: where an element's footprint
//! crosses one in the layer below, the intersection is the glue/nail
//! area. Nails go inside an inward offset of that area, two per quad
//! on alternating diagonals so consecutive interfaces cross.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::poly2;
use crate::geom::{Plane, Point2, Point3, Vec3};
use crate::layout::Layer;

pub const DEFAULT_EDGE_OFFSET: f64 = 0.019;
pub const DEFAULT_MIN_CLEARANCE: f64 = 0.09;
/// Interface polygons smaller than a square centimeter cannot take a
/// nail and are treated as slivers.
pub const MIN_OVERLAP_AREA: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum ConnectionError {
    #[error("offset distance must be non-negative, got {0}")]
    NegativeOffset(f64),
    #[error("layers {0} and {1} are not adjacent")]
    NotAdjacentLayers(usize, usize),
}

/// One lap between an element of layer `i + 1` and one of layer `i`,
/// expressed on the interface plane between them.
#[derive(Debug, Clone)]
pub struct OverlapRegion {
    pub id: u32,
    /// Lower layer index; the interface sits on top of this layer.
    pub lower_layer: usize,
    pub upper_element: u32,
    pub lower_element: u32,
    pub plane: Plane,
    /// Convex CCW polygon in the interface plane basis.
    pub polygon: Vec<Point2>,
    pub area: f64,
}

impl OverlapRegion {
    pub fn centroid_3d(&self) -> Point3 {
        let c = poly2::centroid(&self.polygon);
        self.plane.from_uv(&c)
    }
}

/// Intersects footprints of every element pair across consecutive
/// layers. The interface plane lies midway between the two layer
/// planes (top of the lower element). Slivers under `min_area` are
/// dropped. Output is ordered by (lower layer, upper element, lower
/// element) and ids follow that order.
pub fn find_overlaps(layers: &[Layer], min_area: f64) -> Vec<OverlapRegion> {
    let mut out = Vec::new();
    let mut id = 0;
    for pair in layers.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        let normal = lo.plane.normal;
        let d_lo = lo.plane.origin.coords.dot(&normal);
        let d_hi = hi.plane.origin.coords.dot(&normal);
        let mid = Point3::from(normal * (0.5 * (d_lo + d_hi)));
        let iface = Plane::new(mid, normal).expect("layer normal is unit");

        for upper in &hi.elements {
            let upper_poly = project_footprint(&upper.footprint, &iface);
            for lower in &lo.elements {
                let lower_poly = project_footprint(&lower.footprint, &iface);
                let clipped = match poly2::convex_clip(&upper_poly, &lower_poly) {
                    Ok(c) => c,
                    Err(e) => {
                        log::warn!(
                            "skipping degenerate footprint pair ({}, {}): {e}",
                            upper.id,
                            lower.id
                        );
                        continue;
                    }
                };
                if clipped.len() < 3 {
                    continue;
                }
                let area = poly2::area(&clipped);
                if area < min_area {
                    continue;
                }
                out.push(OverlapRegion {
                    id,
                    lower_layer: lo.index,
                    upper_element: upper.id,
                    lower_element: lower.id,
                    plane: iface,
                    polygon: clipped,
                    area,
                });
                id += 1;
            }
        }
    }
    out
}

fn project_footprint(footprint: &[Point3; 4], plane: &Plane) -> Vec<Point2> {
    let mut poly: Vec<Point2> = footprint.iter().map(|p| plane.to_uv(p)).collect();
    if poly2::signed_area(&poly) < 0.0 {
        poly.reverse();
    }
    poly
}

/// Shrinks a convex CCW polygon by clipping against each edge pushed
/// inward by `d`. Returns `None` when the region vanishes (too small
/// to hold a fastener at this offset).
pub fn offset_inward(polygon: &[Point2], d: f64) -> Result<Option<Vec<Point2>>, ConnectionError> {
    if d < 0.0 {
        return Err(ConnectionError::NegativeOffset(d));
    }
    if d == 0.0 {
        return Ok(Some(polygon.to_vec()));
    }
    let mut current = polygon.to_vec();
    let n = polygon.len();
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        let edge = b - a;
        let len = edge.norm();
        if len < 1e-12 {
            continue;
        }
        // Inward normal of a CCW edge.
        let inward = nalgebra::Vector2::new(-edge.y, edge.x) / len;
        let shifted_a = a + inward * d;
        let shifted_b = b + inward * d;
        current = clip_half_plane(&current, &shifted_a, &shifted_b);
        if current.len() < 3 {
            return Ok(None);
        }
    }
    if poly2::area(&current) <= 1e-12 {
        return Ok(None);
    }
    Ok(Some(current))
}

fn clip_half_plane(poly: &[Point2], a: &Point2, b: &Point2) -> Vec<Point2> {
    // Keep the left side of a -> b.
    let dir = b - a;
    let side = |p: &Point2| dir.x * (p.y - a.y) - dir.y * (p.x - a.x);
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let cur = poly[i];
        let nxt = poly[(i + 1) % poly.len()];
        let sc = side(&cur);
        let sn = side(&nxt);
        if sc >= 0.0 {
            out.push(cur);
        }
        if (sc > 0.0 && sn < 0.0) || (sc < 0.0 && sn > 0.0) {
            let t = sc / (sc - sn);
            out.push(cur + (nxt - cur) * t);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NailParity {
    Even,
    Odd,
}

#[derive(Debug, Clone)]
pub struct NailPlacement {
    pub overlap_id: u32,
    pub lower_layer: usize,
    pub position: Point3,
    /// Drive direction: the interface normal, pointing down into the
    /// lower element.
    pub direction: Vec3,
    pub parity: NailParity,
}

/// Nail positions for one overlap: vertices of the inward offset
/// polygon taken counter-clockwise starting from the vertex nearest
/// `reference`, keeping even-indexed vertices on even lower layers and
/// odd-indexed on odd ones. A quadrilateral therefore gets the two
/// ends of one diagonal, and the diagonal flips on the next interface.
/// Returns an empty list when the offset polygon vanishes; the caller
/// logs those for hand fastening.
pub fn nail_positions(
    overlap: &OverlapRegion,
    edge_offset: f64,
    reference: &Point3,
) -> Result<Vec<NailPlacement>, ConnectionError> {
    let Some(inset) = offset_inward(&overlap.polygon, edge_offset)? else {
        return Ok(Vec::new());
    };
    let ref_uv = overlap.plane.to_uv(reference);
    let start = inset
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (*a - ref_uv)
                .norm_squared()
                .total_cmp(&(*b - ref_uv).norm_squared())
                .then(a.x.total_cmp(&b.x))
                .then(a.y.total_cmp(&b.y))
        })
        .map(|(i, _)| i)
        .expect("non-empty polygon");

    let keep_even = overlap.lower_layer % 2 == 0;
    let mut out = Vec::new();
    for k in 0..inset.len() {
        if (k % 2 == 0) != keep_even {
            continue;
        }
        let v = inset[(start + k) % inset.len()];
        out.push(NailPlacement {
            overlap_id: overlap.id,
            lower_layer: overlap.lower_layer,
            position: overlap.plane.from_uv(&v),
            direction: -overlap.plane.normal,
            parity: if keep_even { NailParity::Even } else { NailParity::Odd },
        });
    }
    Ok(out)
}

/// All nails for all overlaps, in overlap id order.
pub fn place_nails(
    overlaps: &[OverlapRegion],
    edge_offset: f64,
    reference: &Point3,
) -> Result<Vec<NailPlacement>, ConnectionError> {
    let mut out = Vec::new();
    for ov in overlaps {
        out.extend(nail_positions(ov, edge_offset, reference)?);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ClearanceViolation {
    pub a_overlap: u32,
    pub b_overlap: u32,
    pub a_position: Point3,
    pub b_position: Point3,
    pub distance: f64,
}

/// Flags nail pairs on consecutive interfaces that come closer than
/// `min_clearance` in 3D: a nail driven from above must not land on
/// one below it.
pub fn check_nail_clearance(nails: &[NailPlacement], min_clearance: f64) -> Vec<ClearanceViolation> {
    let mut out = Vec::new();
    for (i, a) in nails.iter().enumerate() {
        for b in nails.iter().skip(i + 1) {
            let layer_gap = a.lower_layer.abs_diff(b.lower_layer);
            if layer_gap != 1 {
                continue;
            }
            let d = (a.position - b.position).norm();
            if d < min_clearance {
                out.push(ClearanceViolation {
                    a_overlap: a.overlap_id,
                    b_overlap: b.overlap_id,
                    a_position: a.position,
                    b_position: b.position,
                    distance: d,
                });
            }
        }
    }
    out
}
