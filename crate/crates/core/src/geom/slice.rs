//! Planar contouring: intersect a mesh with a stack of parallel
//! planes and chain the cut segments into contours.

use std::collections::HashMap;

use super::{
    poly2, ContourCurve, GeomError, Plane, Point2, Point3, TriMesh, Vec3,
    WELD_TOL,
};

/// Planes that graze the mesh boundary closer than this are skipped.
const BOUNDARY_EPS: f64 = 1e-9;

/// Cut segments shorter than the weld tolerance are discarded before
/// chaining.
const MIN_SEG: f64 = WELD_TOL;

/// Slices `mesh` with planes normal to `axis`, spaced `spacing` apart,
/// with the grid shifted by `offset` from the low end of the mesh.
/// Planes tangent to the extremes are skipped. Returned contours are
/// ordered by plane position; contours in the same plane are ordered
/// by their lowest in-plane coordinate. Closed contours run
/// counter-clockwise about the axis; open contours run toward
/// increasing in-plane `u`.
///
/// Junction points where three or more cut segments meet split the
/// chains; the split count is reported through `log::warn`.
pub fn slice_contours(
    mesh: &TriMesh,
    axis: Vec3,
    spacing: f64,
    offset: f64,
) -> Result<Vec<ContourCurve>, GeomError> {
    let n = axis.norm();
    if n < 1e-12 {
        return Err(GeomError::DegenerateDirection);
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(GeomError::NonPositiveSpacing(spacing));
    }
    if !offset.is_finite() {
        return Err(GeomError::NonFinite);
    }
    let axis = axis / n;
    let offset = offset.rem_euclid(spacing);

    let Some((dlo, dhi)) = mesh.bounds_along(&axis) else {
        log::warn!("slice_contours: empty mesh, no contours");
        return Ok(vec![]);
    };

    let mut contours: Vec<(f64, ContourCurve)> = Vec::new();
    let mut junction_splits = 0usize;
    let mut k = 0u32;
    loop {
        let d = dlo + offset + f64::from(k) * spacing;
        if d >= dhi - BOUNDARY_EPS {
            break;
        }
        k += 1;
        if d <= dlo + BOUNDARY_EPS {
            continue;
        }
        let segs = cut_segments(mesh, &axis, d);
        if segs.is_empty() {
            continue;
        }
        let plane = Plane::new(Point3::from(axis * d), axis)?;
        let (chains, junctions) = chain_segments(&segs);
        junction_splits += junctions;
        for chain in chains {
            if chain.points.len() < 2 {
                continue;
            }
            let pts = orient_chain(chain.points, chain.closed, &plane);
            contours.push((d, ContourCurve::new(plane, pts, chain.closed)?));
        }
    }

    if junction_splits > 0 {
        log::warn!("slice_contours: contours split at {junction_splits} junction points");
    }
    if contours.is_empty() {
        log::warn!("slice_contours: no plane intersects the mesh");
    }

    contours.sort_by(|a, b| {
        a.0.total_cmp(&b.0).then_with(|| {
            let ka = sort_key(&a.1);
            let kb = sort_key(&b.1);
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
        })
    });
    Ok(contours.into_iter().map(|(_, c)| c).collect())
}

fn sort_key(c: &ContourCurve) -> (f64, f64) {
    let mut best = (f64::INFINITY, f64::INFINITY);
    for p in c.points() {
        let q = c.plane().to_uv(p);
        if (q.x, q.y) < best {
            best = (q.x, q.y);
        }
    }
    best
}

/// Intersects every face with the plane `dot(p, axis) = d`. Vertices
/// exactly on the plane are nudged to the positive side so each
/// crossing triangle yields exactly one segment and shared edges are
/// never emitted twice.
fn cut_segments(mesh: &TriMesh, axis: &Vec3, d: f64) -> Vec<(Point3, Point3)> {
    let mut segs = Vec::new();
    for f in mesh.faces() {
        let p = [mesh.vertices()[f[0]], mesh.vertices()[f[1]], mesh.vertices()[f[2]]];
        let mut h = [0.0f64; 3];
        for i in 0..3 {
            let v = p[i].coords.dot(axis) - d;
            h[i] = if v == 0.0 { f64::MIN_POSITIVE } else { v };
        }
        let mut ends: Vec<Point3> = Vec::with_capacity(2);
        for i in 0..3 {
            let j = (i + 1) % 3;
            if (h[i] > 0.0) != (h[j] > 0.0) {
                let t = h[i] / (h[i] - h[j]);
                ends.push(p[i] + (p[j] - p[i]) * t);
            }
        }
        if ends.len() == 2 && (ends[1] - ends[0]).norm() > MIN_SEG {
            segs.push((ends[0], ends[1]));
        }
    }
    segs
}

struct Chain {
    points: Vec<Point3>,
    closed: bool,
}

/// Welds segment endpoints within [`WELD_TOL`] and walks maximal
/// chains. Nodes where more than two segments meet are junctions:
/// chains stop there and the count of such splits is returned.
fn chain_segments(segs: &[(Point3, Point3)]) -> (Vec<Chain>, usize) {
    let mut weld = Welder::new(WELD_TOL);
    // node id -> list of (segment index, end index)
    let mut node_of_seg: Vec<[usize; 2]> = Vec::with_capacity(segs.len());
    let mut incident: Vec<Vec<(usize, usize)>> = Vec::new();
    for (si, (a, b)) in segs.iter().enumerate() {
        let na = weld.node(a, &mut incident);
        let nb = weld.node(b, &mut incident);
        node_of_seg.push([na, nb]);
        incident[na].push((si, 0));
        incident[nb].push((si, 1));
    }

    let is_junction: Vec<bool> = incident.iter().map(|v| v.len() > 2).collect();
    let junction_count = is_junction.iter().filter(|&&b| b).count();

    let mut used = vec![false; segs.len()];
    let mut chains = Vec::new();

    // Open chains first: start at nodes of degree 1 or at junctions.
    for start_node in 0..incident.len() {
        if incident[start_node].len() == 2 && !is_junction[start_node] {
            continue;
        }
        for &(si, end) in &incident[start_node] {
            if used[si] {
                continue;
            }
            chains.push(walk(
                si,
                end,
                segs,
                &node_of_seg,
                &incident,
                &is_junction,
                &mut used,
            ));
        }
    }
    // Remaining segments form closed loops.
    for si in 0..segs.len() {
        if !used[si] {
            chains.push(walk(si, 0, segs, &node_of_seg, &incident, &is_junction, &mut used));
        }
    }
    (chains, junction_count)
}

fn walk(
    start_seg: usize,
    start_end: usize,
    segs: &[(Point3, Point3)],
    node_of_seg: &[[usize; 2]],
    incident: &[Vec<(usize, usize)>],
    is_junction: &[bool],
    used: &mut [bool],
) -> Chain {
    let mut points = Vec::new();
    let mut si = start_seg;
    let mut entry = start_end;
    let first_node = node_of_seg[start_seg][start_end];
    points.push(end_point(segs, si, entry));
    loop {
        used[si] = true;
        let exit = 1 - entry;
        points.push(end_point(segs, si, exit));
        let node = node_of_seg[si][exit];
        if node == first_node || is_junction[node] {
            break;
        }
        let next = incident[node]
            .iter()
            .find(|&&(s, _)| s != si && !used[s]);
        match next {
            Some(&(s, e)) => {
                si = s;
                entry = e;
            }
            None => break,
        }
    }
    let closed = node_of_seg[si][1 - entry] == first_node && points.len() > 3;
    let mut chain = Chain { points, closed };
    if chain.closed {
        chain.points.pop();
    }
    chain
}

fn end_point(segs: &[(Point3, Point3)], si: usize, end: usize) -> Point3 {
    if end == 0 {
        segs[si].0
    } else {
        segs[si].1
    }
}

/// Spatial hash welder: points within `tol` of an existing node reuse
/// its id. Neighbor buckets are probed to cope with quantization
/// boundaries.
struct Welder {
    tol: f64,
    buckets: HashMap<(i64, i64, i64), Vec<(Point3, usize)>>,
    count: usize,
}

impl Welder {
    fn new(tol: f64) -> Self {
        Welder { tol, buckets: HashMap::new(), count: 0 }
    }

    fn key(&self, p: &Point3) -> (i64, i64, i64) {
        (
            (p.x / self.tol).round() as i64,
            (p.y / self.tol).round() as i64,
            (p.z / self.tol).round() as i64,
        )
    }

    fn node(&mut self, p: &Point3, incident: &mut Vec<Vec<(usize, usize)>>) -> usize {
        let (kx, ky, kz) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = self.buckets.get(&(kx + dx, ky + dy, kz + dz)) {
                        for (q, id) in list {
                            if (p - q).norm() <= self.tol {
                                return *id;
                            }
                        }
                    }
                }
            }
        }
        let id = self.count;
        self.count += 1;
        self.buckets.entry((kx, ky, kz)).or_default().push((*p, id));
        incident.push(Vec::new());
        id
    }
}

/// Normalizes contour direction and start vertex so reruns and
/// neighboring layers agree: closed contours become counter-clockwise
/// in the plane basis and start at their lexicographically smallest
/// vertex; open contours run toward increasing `u` (then `v`).
fn orient_chain(mut pts: Vec<Point3>, closed: bool, plane: &Plane) -> Vec<Point3> {
    let uv: Vec<Point2> = pts.iter().map(|p| plane.to_uv(p)).collect();
    if closed {
        if poly2::signed_area(&uv) < 0.0 {
            pts.reverse();
        }
        let uv: Vec<Point2> = pts.iter().map(|p| plane.to_uv(p)).collect();
        let start = uv
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        pts.rotate_left(start);
    } else {
        let a = uv[0];
        let b = uv[uv.len() - 1];
        let du = b.x - a.x;
        if du < -1e-12 || (du.abs() <= 1e-12 && b.y < a.y) {
            pts.reverse();
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::mesh::unit_cube;
    use approx::assert_relative_eq;

    #[test]
    fn cube_slices_to_square_perimeters() {
        let cube = unit_cube();
        let contours = slice_contours(&cube, Vec3::z(), 0.5, 0.25).unwrap();
        assert_eq!(contours.len(), 2);
        for c in &contours {
            assert!(c.is_closed());
            assert_relative_eq!(c.length(), 4.0, epsilon = 1e-6);
        }
        assert_relative_eq!(contours[0].points()[0].z, 0.25, epsilon = 1e-9);
        assert_relative_eq!(contours[1].points()[0].z, 0.75, epsilon = 1e-9);
    }

    #[test]
    fn board_thickness_spacing_over_unit_depth() {
        let cube = unit_cube();
        let contours = slice_contours(&cube, Vec3::z(), 0.0381, 0.0).unwrap();
        // floor(1 / 0.0381) = 26 interior planes; the grazing plane at
        // z = 0 is skipped.
        assert_eq!(contours.len(), 26);
    }

    #[test]
    fn open_shell_gives_open_contours() {
        // Half-cylinder shell about the x axis.
        let arc = |x: f64| -> Vec<Point3> {
            (0..48)
                .map(|i| {
                    let th = std::f64::consts::PI * i as f64 / 47.0;
                    Point3::new(x, th.cos(), th.sin())
                })
                .collect()
        };
        let mesh = super::super::loft_mesh(&[arc(0.0), arc(1.0)], 48, 10).unwrap();
        let contours = slice_contours(&mesh, Vec3::x(), 0.25, 0.0).unwrap();
        assert_eq!(contours.len(), 3);
        for c in &contours {
            assert!(!c.is_closed());
            let err = (c.length() - std::f64::consts::PI).abs() / std::f64::consts::PI;
            assert!(err < 0.01, "arc length error {err}");
            // Deterministic direction: endpoint delta is lexicographically
            // positive in the plane basis.
            let (u, v) = c.plane().basis();
            let delta = c.points()[c.points().len() - 1] - c.points()[0];
            let (du, dv) = (delta.dot(&u), delta.dot(&v));
            assert!(du > 1e-9 || (du.abs() <= 1e-9 && dv > 0.0));
        }
    }

    #[test]
    fn grazing_plane_is_skipped() {
        let cube = unit_cube();
        // offset 0 puts a plane exactly at z = 0 and z = 1; both skip.
        let contours = slice_contours(&cube, Vec3::z(), 0.25, 0.0).unwrap();
        assert_eq!(contours.len(), 3);
    }

    #[test]
    fn rejects_bad_spacing() {
        let cube = unit_cube();
        assert!(matches!(
            slice_contours(&cube, Vec3::z(), 0.0, 0.0),
            Err(GeomError::NonPositiveSpacing(_))
        ));
    }

    #[test]
    fn contour_points_lie_on_their_planes() {
        let cube = unit_cube();
        for c in slice_contours(&cube, Vec3::new(0.2, 0.3, 0.9), 0.21, 0.07).unwrap() {
            for p in c.points() {
                assert!(c.plane().signed_distance(p).abs() < 1e-6);
            }
        }
    }
}
