//! Layer layout: subdivide each contour into stock-length segments,
//! cull a checkerboard of them so neighboring layers interlock, extend
//! the survivors into overlap, and emit dimensioned elements.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{ContourCurve, Plane, Point3, Vec3};

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("target length must be positive, got {0}")]
    NonPositiveTargetLength(f64),
    #[error("param sequence needs at least 2 values, got {0}")]
    TooFewParams(usize),
    #[error("param sequence must start at 0 and end at 1, got [{0}, {1}]")]
    BadParamEndpoints(f64, f64),
    #[error("param sequence is not strictly increasing at index {0}")]
    NonIncreasingParams(usize),
    #[error("mask override references missing cell (layer {layer}, position {position})")]
    UnknownMaskCell { layer: usize, position: usize },
    #[error("extension must be non-negative, got {0}")]
    NegativeExtension(f64),
    #[error("extension makes segments overlap on contour {contour_index}: {pairs:?}")]
    ExtensionOverlap { contour_index: usize, pairs: Vec<(usize, usize)> },
    #[error("cross section must be positive, got {width} x {depth}")]
    BadCrossSection { width: f64, depth: f64 },
}

/// Subdivision boundaries for one contour: normalized arc-length
/// params, strictly increasing from 0 to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSequence {
    pub contour_index: usize,
    pub values: Vec<f64>,
}

impl ParamSequence {
    pub fn new(contour_index: usize, values: Vec<f64>) -> Result<Self, LayoutError> {
        if values.len() < 2 {
            return Err(LayoutError::TooFewParams(values.len()));
        }
        let first = values[0];
        let last = values[values.len() - 1];
        if first.abs() > 1e-12 || (last - 1.0).abs() > 1e-12 {
            return Err(LayoutError::BadParamEndpoints(first, last));
        }
        for i in 1..values.len() {
            if values[i] <= values[i - 1] {
                return Err(LayoutError::NonIncreasingParams(i));
            }
        }
        let mut values = values;
        values[0] = 0.0;
        let n = values.len();
        values[n - 1] = 1.0;
        Ok(ParamSequence { contour_index, values })
    }

    pub fn segment_count(&self) -> usize {
        self.values.len() - 1
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum Subdivision {
    /// Segment count = round(contour length / target), at least one.
    Uniform { target_len: f64 },
    /// Explicit boundary params, validated like any sequence.
    Explicit { values: Vec<f64> },
}

/// Splits a contour into equal arc-length intervals (or explicit
/// ones). A target longer than the contour produces a single interval
/// and a warning.
pub fn subdivide_contour(
    contour: &ContourCurve,
    contour_index: usize,
    scheme: &Subdivision,
) -> Result<ParamSequence, LayoutError> {
    match scheme {
        Subdivision::Uniform { target_len } => {
            if !(*target_len > 0.0) {
                return Err(LayoutError::NonPositiveTargetLength(*target_len));
            }
            let len = contour.length();
            if *target_len > len {
                log::warn!(
                    "subdivide_contour: target {target_len} m exceeds contour length {len} m, \
                     using a single interval"
                );
            }
            let m = ((len / target_len).round() as usize).max(1);
            let values = (0..=m).map(|i| i as f64 / m as f64).collect();
            ParamSequence::new(contour_index, values)
        }
        Subdivision::Explicit { values } => ParamSequence::new(contour_index, values.clone()),
    }
}

/// One subdivision interval of a contour. `t0`/`t1` are normalized
/// arc-length params; for closed contours an extended segment may
/// carry params outside `[0, 1]` (they wrap).
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub contour_index: usize,
    pub position_index: usize,
    pub t0: f64,
    pub t1: f64,
    pub start: Point3,
    pub end: Point3,
    pub retained: bool,
}

pub fn build_segments(contour: &ContourCurve, params: &ParamSequence) -> Vec<Segment> {
    let mut out = Vec::with_capacity(params.segment_count());
    for j in 0..params.segment_count() {
        let t0 = params.values[j];
        let t1 = params.values[j + 1];
        out.push(Segment {
            contour_index: params.contour_index,
            position_index: j,
            t0,
            t1,
            start: contour.point_at(t0),
            end: contour.point_at(t1),
            retained: true,
        });
    }
    out
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct Mask {
    pub kind: MaskKind,
    /// Per-cell overrides, applied after the base rule.
    #[serde(default)]
    pub overrides: Vec<MaskOverride>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    /// Retain cells with even `layer + position`; the complement is
    /// retained on neighboring layers, which is what makes the laps.
    #[default]
    Checkerboard,
    /// Retain everything (used with mitered, gap-free layers).
    All,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct MaskOverride {
    pub layer: usize,
    pub position: usize,
    pub keep: bool,
}

impl Mask {
    pub fn checkerboard() -> Self {
        Mask::default()
    }

    fn base_keep(&self, layer: usize, position: usize) -> bool {
        match self.kind {
            MaskKind::Checkerboard => (layer + position) % 2 == 0,
            MaskKind::All => true,
        }
    }
}

/// Tags every segment retained or culled. Overrides must reference
/// existing cells.
pub fn apply_mask(segments: &mut [Segment], mask: &Mask) -> Result<(), LayoutError> {
    for s in segments.iter_mut() {
        s.retained = mask.base_keep(s.contour_index, s.position_index);
    }
    for ov in &mask.overrides {
        let hit = segments
            .iter_mut()
            .find(|s| s.contour_index == ov.layer && s.position_index == ov.position);
        match hit {
            Some(s) => s.retained = ov.keep,
            None => {
                return Err(LayoutError::UnknownMaskCell {
                    layer: ov.layer,
                    position: ov.position,
                })
            }
        }
    }
    Ok(())
}

/// Pushes each retained segment's endpoints outward along its contour
/// by `extension` meters of arc. Open contours clamp at their ends;
/// closed contours wrap. Errors when two retained segments of the same
/// contour come to overlap.
pub fn extend_segments(
    retained: &[Segment],
    contour: &ContourCurve,
    extension: f64,
) -> Result<Vec<Segment>, LayoutError> {
    if extension < 0.0 {
        return Err(LayoutError::NegativeExtension(extension));
    }
    let dt = extension / contour.length();
    let mut out: Vec<Segment> = retained
        .iter()
        .map(|s| {
            let (mut t0, mut t1) = (s.t0 - dt, s.t1 + dt);
            if !contour.is_closed() {
                t0 = t0.max(0.0);
                t1 = t1.min(1.0);
            }
            Segment {
                t0,
                t1,
                start: contour.point_at(t0),
                end: contour.point_at(t1),
                retained: true,
                ..*s
            }
        })
        .collect();
    out.sort_by(|a, b| a.t0.total_cmp(&b.t0));

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    const TOL: f64 = 1e-12;
    for w in out.windows(2) {
        if w[1].t0 < w[0].t1 - TOL {
            pairs.push((w[0].position_index, w[1].position_index));
        }
    }
    if contour.is_closed() && out.len() >= 2 {
        let first = &out[0];
        let last = &out[out.len() - 1];
        if first.t0 + 1.0 < last.t1 - TOL {
            pairs.push((last.position_index, first.position_index));
        }
    }
    if let Some(s) = out.iter().find(|s| s.t1 - s.t0 >= 1.0 && contour.is_closed()) {
        pairs.push((s.position_index, s.position_index));
    }
    if !pairs.is_empty() {
        return Err(LayoutError::ExtensionOverlap {
            contour_index: contour_index_of(retained),
            pairs,
        });
    }
    // Restore position order so downstream indexing stays stable.
    out.sort_by_key(|s| s.position_index);
    Ok(out)
}

fn contour_index_of(segs: &[Segment]) -> usize {
    segs.first().map(|s| s.contour_index).unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub width: f64,
    pub depth: f64,
}

impl CrossSection {
    pub fn new(width: f64, depth: f64) -> Result<Self, LayoutError> {
        if !(width > 0.0) || !(depth > 0.0) {
            return Err(LayoutError::BadCrossSection { width, depth });
        }
        Ok(CrossSection { width, depth })
    }

    /// Nominal "two by four": 1.5 x 3.5 inches actual, laid flat so
    /// the wide face is in the layer plane.
    pub fn two_by_four() -> Self {
        CrossSection { width: 0.0889, depth: 0.0381 }
    }
}

/// Element frame: `x` along the axis, `z` the layer normal, `y`
/// completing the right-handed set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub origin: Point3,
    pub x: Vec3,
    pub y: Vec3,
    pub z: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutMode {
    Robotic,
    Manual,
}

/// Where the stock for an element comes from; filled in by allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Unassigned,
    Reclaimed(u32),
    New(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: u32,
    pub layer: usize,
    pub position: usize,
    pub axis: (Point3, Point3),
    pub length: f64,
    pub cross_section: CrossSection,
    pub pose: Pose,
    /// Cut planes at the two ends, normals pointing out of the
    /// element.
    pub cut_start: Plane,
    pub cut_end: Plane,
    pub cut_mode: CutMode,
    pub source: Source,
    /// In-plane corner loop (counter-clockwise about the layer
    /// normal), bounded by the side faces and the cut planes.
    pub footprint: [Point3; 4],
}

impl Element {
    pub fn volume(&self) -> f64 {
        self.length * self.cross_section.width * self.cross_section.depth
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub index: usize,
    pub plane: Plane,
    pub elements: Vec<Element>,
}

/// Turns extended retained segments of one contour into elements.
/// With `miter` set, segments that still share an endpoint get a
/// shared cut plane bisecting the turn angle; everywhere else cuts are
/// perpendicular to the axis. Elements shorter than
/// `manual_cut_threshold` are tagged for manual cutting.
pub fn generate_elements(
    contour: &ContourCurve,
    layer_index: usize,
    segments: &[Segment],
    cross_section: CrossSection,
    miter: bool,
    manual_cut_threshold: f64,
    next_id: &mut u32,
) -> Result<Layer, LayoutError> {
    CrossSection::new(cross_section.width, cross_section.depth)?;
    let plane = *contour.plane();
    let normal = plane.normal;
    let mut elements = Vec::with_capacity(segments.len());

    const ADJ_TOL: f64 = 1e-9;
    let adjacent_dir = |a: &Segment, b: &Segment| -> bool {
        let mut d = (b.t0 - a.t1).abs();
        if contour.is_closed() {
            d = d.min((b.t0 - a.t1 + 1.0).abs()).min((b.t0 - a.t1 - 1.0).abs());
        }
        d <= ADJ_TOL
    };

    for (k, seg) in segments.iter().enumerate() {
        let a = seg.start;
        let b = seg.end;
        let x = (b - a).normalize();
        let z = normal;
        let y = z.cross(&x);
        let length = (b - a).norm();

        let prev = segments
            .iter()
            .enumerate()
            .find(|(kk, p)| *kk != k && adjacent_dir(p, seg))
            .map(|(_, p)| (p.end - p.start).normalize());
        let next = segments
            .iter()
            .enumerate()
            .find(|(kk, n)| *kk != k && adjacent_dir(seg, n))
            .map(|(_, n)| (n.end - n.start).normalize());

        let start_normal = match (miter, prev) {
            (true, Some(dp)) => miter_normal(&dp, &x).map(|n| -n).unwrap_or(-x),
            _ => -x,
        };
        let end_normal = match (miter, next) {
            (true, Some(dn)) => miter_normal(&x, &dn).unwrap_or(x),
            _ => x,
        };

        let cut_start = Plane::new(a, start_normal).expect("unit normal");
        let cut_end = Plane::new(b, end_normal).expect("unit normal");
        let footprint = footprint_corners(&a, &b, &x, &y, cross_section.width, &cut_start, &cut_end);

        let origin = Point3::from((a.coords + b.coords) * 0.5);
        elements.push(Element {
            id: *next_id,
            layer: layer_index,
            position: seg.position_index,
            axis: (a, b),
            length,
            cross_section,
            pose: Pose { origin, x, y, z },
            cut_start,
            cut_end,
            cut_mode: if length < manual_cut_threshold { CutMode::Manual } else { CutMode::Robotic },
            source: Source::Unassigned,
            footprint,
        });
        *next_id += 1;
    }
    Ok(Layer { index: layer_index, plane, elements })
}

/// Plane normal bisecting the turn from direction `d_in` to `d_out`,
/// pointing along travel. Falls back to `None` on a near-reversal,
/// which callers treat as a square cut.
fn miter_normal(d_in: &Vec3, d_out: &Vec3) -> Option<Vec3> {
    let sum = d_in + d_out;
    let n = sum.norm();
    if n < 1e-9 {
        return None;
    }
    Some(sum / n)
}

/// Corner loop of the element footprint: side lines offset `w/2` from
/// the axis intersected with each cut plane.
fn footprint_corners(
    a: &Point3,
    b: &Point3,
    x: &Vec3,
    y: &Vec3,
    width: f64,
    cut_start: &Plane,
    cut_end: &Plane,
) -> [Point3; 4] {
    let hw = 0.5 * width;
    let corner = |base: Point3, cut: &Plane| -> Point3 {
        let denom = x.dot(&cut.normal);
        if denom.abs() < 0.1 {
            // Extreme miter degenerates; treat as square cut.
            return base;
        }
        let s = -(base - cut.origin).dot(&cut.normal) / denom;
        base + x * s
    };
    let a_minus = corner(a - y * hw, cut_start);
    let a_plus = corner(a + y * hw, cut_start);
    let b_minus = corner(b - y * hw, cut_end);
    let b_plus = corner(b + y * hw, cut_end);
    // CCW about z (= normal): -y side runs a -> b, then +y side back.
    [a_minus, b_minus, b_plus, a_plus]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{ContourCurve, Plane};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn xy_plane() -> Plane {
        Plane::new(Point3::origin(), Vec3::z()).unwrap()
    }

    fn straight_contour(len: f64) -> ContourCurve {
        ContourCurve::new(
            xy_plane(),
            vec![Point3::origin(), Point3::new(len, 0.0, 0.0)],
            false,
        )
        .unwrap()
    }

    fn quarter_circle(n: usize) -> ContourCurve {
        let pts: Vec<Point3> = (0..n)
            .map(|i| {
                let th = std::f64::consts::FRAC_PI_2 * i as f64 / (n - 1) as f64;
                Point3::new(th.cos(), th.sin(), 0.0)
            })
            .collect();
        ContourCurve::new(xy_plane(), pts, false).unwrap()
    }

    #[test]
    fn uniform_subdivision_counts() {
        // length 3.2, target 1.0 -> round(3.2) = 3 intervals.
        let c = straight_contour(3.2);
        let p = subdivide_contour(&c, 0, &Subdivision::Uniform { target_len: 1.0 }).unwrap();
        assert_eq!(p.segment_count(), 3);
        assert_eq!(p.values, vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
    }

    #[test]
    fn quarter_circle_target_gives_four_segments() {
        let c = quarter_circle(400);
        let p = subdivide_contour(&c, 0, &Subdivision::Uniform { target_len: 0.4 }).unwrap();
        assert_eq!(p.segment_count(), 4);
    }

    /// Arc-length inversion oracle: measure the arc between successive
    /// boundary points by dense chord sampling; every interval must
    /// carry the same arc length.
    #[test]
    fn uniform_boundaries_are_equal_arc() {
        let c = quarter_circle(800);
        let p = subdivide_contour(&c, 0, &Subdivision::Uniform { target_len: 0.4 }).unwrap();
        let dense_arc = |ta: f64, tb: f64| -> f64 {
            let steps = 4000;
            let mut s = 0.0;
            let mut prev = c.point_at(ta);
            for k in 1..=steps {
                let t = ta + (tb - ta) * k as f64 / steps as f64;
                let q = c.point_at(t);
                s += (q - prev).norm();
                prev = q;
            }
            s
        };
        let expect = c.length() / 4.0;
        for w in p.values.windows(2) {
            let got = dense_arc(w[0], w[1]);
            assert_relative_eq!(got, expect, epsilon = 1e-6);
        }
    }

    #[test]
    fn oversized_target_gives_single_interval() {
        let c = straight_contour(0.5);
        let p = subdivide_contour(&c, 0, &Subdivision::Uniform { target_len: 2.0 }).unwrap();
        assert_eq!(p.segment_count(), 1);
    }

    #[test]
    fn segments_are_chords() {
        let c = straight_contour(2.0);
        let p = ParamSequence::new(0, vec![0.0, 0.5, 1.0]).unwrap();
        let segs = build_segments(&c, &p);
        assert_eq!(segs.len(), 2);
        for s in &segs {
            assert_relative_eq!((s.end - s.start).norm(), 1.0, epsilon = 1e-12);
        }
        assert_eq!(segs[1].position_index, 1);
    }

    #[test]
    fn checkerboard_three_by_three() {
        // Layers 0..3, positions 0..3: retained iff (i + j) even.
        let c = straight_contour(3.0);
        let p = ParamSequence::new(0, vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]).unwrap();
        let mut kept = Vec::new();
        for layer in 0..3usize {
            let mut p = p.clone();
            p.contour_index = layer;
            let mut segs = build_segments(&c, &p);
            apply_mask(&mut segs, &Mask::checkerboard()).unwrap();
            for s in &segs {
                if s.retained {
                    kept.push((layer, s.position_index));
                }
            }
        }
        assert_eq!(kept, vec![(0, 0), (0, 2), (1, 1), (2, 0), (2, 2)]);
    }

    #[test]
    fn mask_override_flips_cell_and_rejects_unknown() {
        let c = straight_contour(2.0);
        let p = ParamSequence::new(0, vec![0.0, 0.5, 1.0]).unwrap();
        let mut segs = build_segments(&c, &p);
        let mask = Mask {
            kind: MaskKind::Checkerboard,
            overrides: vec![MaskOverride { layer: 0, position: 1, keep: true }],
        };
        apply_mask(&mut segs, &mask).unwrap();
        assert!(segs.iter().all(|s| s.retained));

        let bad = Mask {
            kind: MaskKind::Checkerboard,
            overrides: vec![MaskOverride { layer: 0, position: 7, keep: false }],
        };
        assert!(matches!(
            apply_mask(&mut segs, &bad),
            Err(LayoutError::UnknownMaskCell { position: 7, .. })
        ));
    }

    #[test]
    fn extension_grows_half_meter_segment() {
        let c = straight_contour(1.0);
        let p = ParamSequence::new(0, vec![0.0, 0.25, 0.75, 1.0]).unwrap();
        let segs = build_segments(&c, &p);
        let mid = vec![segs[1].clone()];
        let ext = extend_segments(&mid, &c, 0.05).unwrap();
        assert_relative_eq!((ext[0].end - ext[0].start).norm(), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn extension_clamps_at_open_end() {
        let c = straight_contour(1.0);
        let p = ParamSequence::new(0, vec![0.0, 0.5, 1.0]).unwrap();
        let segs = build_segments(&c, &p);
        // Second segment ends at the contour boundary: only the inner
        // side extends.
        let last = vec![segs[1].clone()];
        let ext = extend_segments(&last, &c, 0.05).unwrap();
        assert_relative_eq!((ext[0].end - ext[0].start).norm(), 0.55, epsilon = 1e-12);
    }

    #[test]
    fn extension_overlap_is_detected() {
        let c = straight_contour(1.0);
        let p = ParamSequence::new(0, vec![0.0, 0.5, 1.0]).unwrap();
        let segs = build_segments(&c, &p);
        let err = extend_segments(&segs, &c, 0.05).unwrap_err();
        match err {
            LayoutError::ExtensionOverlap { contour_index: 0, pairs } => {
                assert_eq!(pairs, vec![(0, 1)]);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn closed_contour_extension_wraps() {
        let square = ContourCurve::new(
            xy_plane(),
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            true,
        )
        .unwrap();
        let p = ParamSequence::new(0, vec![0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let segs = build_segments(&square, &p);
        let kept = vec![segs[0].clone()];
        let ext = extend_segments(&kept, &square, 0.1).unwrap();
        // Start wrapped onto the closing edge.
        assert_relative_eq!((ext[0].start - Point3::new(0.0, 0.1, 0.0)).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((ext[0].end - Point3::new(1.0, 0.1, 0.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn element_pose_and_cut_planes_square() {
        let c = straight_contour(0.6);
        let p = ParamSequence::new(0, vec![0.0, 1.0]).unwrap();
        let segs = build_segments(&c, &p);
        let mut id = 0;
        let layer = generate_elements(
            &c,
            0,
            &segs,
            CrossSection::two_by_four(),
            false,
            0.35,
            &mut id,
        )
        .unwrap();
        assert_eq!(layer.elements.len(), 1);
        let e = &layer.elements[0];
        assert_relative_eq!(e.length, 0.6, epsilon = 1e-12);
        assert_eq!(e.cross_section, CrossSection::two_by_four());
        assert_eq!(e.cut_mode, CutMode::Robotic);
        assert_relative_eq!((e.pose.origin - Point3::new(0.3, 0.0, 0.0)).norm(), 0.0);
        assert_relative_eq!((e.pose.x - Vec3::x()).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((e.pose.z - Vec3::z()).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(e.cut_start.normal.dot(&e.pose.x), -1.0, epsilon = 1e-12);
        assert_relative_eq!(e.cut_end.normal.dot(&e.pose.x), 1.0, epsilon = 1e-12);
        // Footprint is the 0.6 x 0.0889 rectangle.
        let area = crate::geom::poly2::area(
            &e.footprint
                .iter()
                .map(|p| crate::geom::Point2::new(p.x, p.y))
                .collect::<Vec<_>>(),
        );
        assert_relative_eq!(area, 0.6 * 0.0889, epsilon = 1e-12);
    }

    #[test]
    fn short_element_is_manual() {
        let c = straight_contour(0.349);
        let p = ParamSequence::new(0, vec![0.0, 1.0]).unwrap();
        let segs = build_segments(&c, &p);
        let mut id = 0;
        let layer =
            generate_elements(&c, 0, &segs, CrossSection::two_by_four(), false, 0.35, &mut id)
                .unwrap();
        assert_eq!(layer.elements[0].cut_mode, CutMode::Manual);
    }

    #[test]
    fn collinear_miter_falls_back_to_square() {
        let c = straight_contour(1.0);
        let p = ParamSequence::new(0, vec![0.0, 0.5, 1.0]).unwrap();
        let segs = build_segments(&c, &p);
        let mut id = 0;
        let layer =
            generate_elements(&c, 0, &segs, CrossSection::two_by_four(), true, 0.35, &mut id)
                .unwrap();
        for e in &layer.elements {
            assert_relative_eq!(e.cut_start.normal.cross(&e.pose.x).norm(), 0.0, epsilon = 1e-12);
            assert_relative_eq!(e.cut_end.normal.cross(&e.pose.x).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn miter_bisects_right_angle() {
        let c = ContourCurve::new(
            xy_plane(),
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
            ],
            false,
        )
        .unwrap();
        let p = ParamSequence::new(0, vec![0.0, 0.5, 1.0]).unwrap();
        let segs = build_segments(&c, &p);
        let mut id = 0;
        let layer =
            generate_elements(&c, 0, &segs, CrossSection::two_by_four(), true, 0.35, &mut id)
                .unwrap();
        let first = &layer.elements[0];
        let second = &layer.elements[1];
        let bis = (Vec3::x() + Vec3::y()).normalize();
        assert_relative_eq!((first.cut_end.normal - bis).norm(), 0.0, epsilon = 1e-12);
        // Shared joint: the two cut planes are the same plane with
        // opposite orientation.
        assert_relative_eq!((second.cut_start.normal + bis).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(
            (first.cut_end.origin - second.cut_start.origin).norm(),
            0.0,
            epsilon = 1e-12
        );
    }

    proptest! {
        /// Extended endpoints stay within `extension` arc length of
        /// the original params, and never leave an open contour.
        #[test]
        fn extension_stays_within_bound(
            ext in 0.0f64..0.2,
            t0 in 0.05f64..0.4,
            span in 0.1f64..0.5,
        ) {
            let c = quarter_circle(200);
            let t1 = (t0 + span).min(0.999);
            let p = ParamSequence::new(0, vec![0.0, t0, t1, 1.0]).unwrap();
            let segs = build_segments(&c, &p);
            let kept = vec![segs[1].clone()];
            let out = extend_segments(&kept, &c, ext).unwrap();
            let s = &out[0];
            let len = c.length();
            prop_assert!(s.t0 >= 0.0 && s.t1 <= 1.0);
            prop_assert!((t0 - s.t0) * len <= ext + 1e-9);
            prop_assert!((s.t1 - t1) * len <= ext + 1e-9);
        }

        /// Masking partitions segments: retained + culled = all, and
        /// the checkerboard keeps exactly the even cells.
        #[test]
        fn checkerboard_partition(layers in 1usize..6, cols in 1usize..9) {
            let c = straight_contour(cols as f64);
            let values: Vec<f64> = (0..=cols).map(|i| i as f64 / cols as f64).collect();
            for layer in 0..layers {
                let p = ParamSequence::new(layer, values.clone()).unwrap();
                let mut segs = build_segments(&c, &p);
                apply_mask(&mut segs, &Mask::checkerboard()).unwrap();
                for s in &segs {
                    prop_assert_eq!(s.retained, (layer + s.position_index) % 2 == 0);
                }
            }
        }
    }
}
