//! Ruled loft through an ordered set of guide polylines.

use super::{all_finite, GeomError, Point3, TriMesh};

/// Lofts a surface through `guides` (ordered polylines). Each guide is
/// resampled at `samples_u` points by arc length; `samples_v` rows are
/// interpolated linearly across the guide sequence and the grid is
/// triangulated. Degenerate triangles (collapsed rows) are dropped by
/// mesh construction.
pub fn loft_mesh(
    guides: &[Vec<Point3>],
    samples_u: usize,
    samples_v: usize,
) -> Result<TriMesh, GeomError> {
    if guides.len() < 2 {
        return Err(GeomError::InsufficientGuides(guides.len()));
    }
    if samples_u < 2 || samples_v < 2 {
        return Err(GeomError::TooFewSamples(samples_u, samples_v));
    }
    let mut resampled: Vec<Vec<Point3>> = Vec::with_capacity(guides.len());
    for (gi, guide) in guides.iter().enumerate() {
        if guide.len() < 2 {
            return Err(GeomError::GuideTooShort { guide: gi, len: guide.len() });
        }
        if !all_finite(guide) {
            return Err(GeomError::NonFinite);
        }
        for i in 1..guide.len() {
            if (guide[i] - guide[i - 1]).norm() <= 0.0 {
                return Err(GeomError::CoincidentGuidePoints { guide: gi, index: i });
            }
        }
        resampled.push(resample_polyline(guide, samples_u));
    }

    let mut vertices = Vec::with_capacity(samples_u * samples_v);
    let rows = samples_v;
    let last_guide = (guides.len() - 1) as f64;
    for r in 0..rows {
        let g = r as f64 / (rows - 1) as f64 * last_guide;
        let i = (g.floor() as usize).min(guides.len() - 2);
        let f = g - i as f64;
        for c in 0..samples_u {
            let a = resampled[i][c];
            let b = resampled[i + 1][c];
            vertices.push(a + (b - a) * f);
        }
    }

    let mut faces = Vec::with_capacity(2 * (rows - 1) * (samples_u - 1));
    let idx = |r: usize, c: usize| r * samples_u + c;
    for r in 0..rows - 1 {
        for c in 0..samples_u - 1 {
            faces.push([idx(r, c), idx(r, c + 1), idx(r + 1, c + 1)]);
            faces.push([idx(r, c), idx(r + 1, c + 1), idx(r + 1, c)]);
        }
    }
    TriMesh::new(vertices, faces)
}

/// Resamples a polyline at `n` points spaced uniformly in arc length,
/// keeping both endpoints exactly.
pub fn resample_polyline(points: &[Point3], n: usize) -> Vec<Point3> {
    debug_assert!(points.len() >= 2 && n >= 2);
    let mut cumulative = Vec::with_capacity(points.len());
    cumulative.push(0.0);
    for i in 1..points.len() {
        cumulative.push(cumulative[i - 1] + (points[i] - points[i - 1]).norm());
    }
    let total = cumulative[cumulative.len() - 1];
    let mut out = Vec::with_capacity(n);
    out.push(points[0]);
    for k in 1..n - 1 {
        let s = k as f64 / (n - 1) as f64 * total;
        let idx = cumulative.partition_point(|&c| c <= s).min(points.len() - 1);
        let seg = cumulative[idx] - cumulative[idx - 1];
        let f = (s - cumulative[idx - 1]) / seg;
        out.push(points[idx - 1] + (points[idx] - points[idx - 1]) * f);
    }
    out.push(points[points.len() - 1]);
    out
}
