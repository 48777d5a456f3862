//! Pickup-station perception, simulated: fiducial-based rectification,
//! contour simplification, geometric filtering of board candidates,
//! and constrained selection of the board to cut next. Image
//! segmentation is out of scope; contours enter as noisy point lists
//! synthesized from ground-truth boards.

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::geom::{poly2, Point2};

pub const DEFAULT_MIN_ROBOTIC: f64 = 0.350;
/// Slack when matching a pre-cut board against a manual-cut target:
/// the board was cut to length by hand, so its detected length may
/// sit a few millimeters under the target.
pub const MANUAL_SELECT_TOL: f64 = 0.005;

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("homography needs at least 4 correspondences, got {0}")]
    TooFewCorrespondences(usize),
    #[error("degenerate correspondence configuration (rank-deficient system)")]
    DegenerateConfiguration,
    #[error("camera homography is not invertible")]
    SingularCamera,
    #[error("scene needs at least 4 fiducial markers, got {0}")]
    TooFewMarkers(usize),
    #[error("noise sigma must be non-negative, got {0}")]
    NegativeSigma(f64),
    #[error("board {index}: {reason}")]
    BadBoard { index: usize, reason: String },
}

#[derive(Debug, Clone)]
pub struct HomographyEstimate {
    /// Maps source points to destination points, scaled so the
    /// bottom-right entry is 1.
    pub matrix: Matrix3<f64>,
    pub reprojection_rms: f64,
}

pub fn apply_homography(h: &Matrix3<f64>, p: &Point2) -> Point2 {
    let v = h * Vector3::new(p.x, p.y, 1.0);
    Point2::new(v.x / v.z, v.y / v.z)
}

/// Direct linear transform over Hartley-normalized coordinates.
/// `pairs` are (source, destination) points; at least four, no three
/// collinear on either side.
pub fn estimate_homography(pairs: &[(Point2, Point2)]) -> Result<HomographyEstimate, PerceptionError> {
    if pairs.len() < 4 {
        return Err(PerceptionError::TooFewCorrespondences(pairs.len()));
    }
    let t_src = normalizing_transform(pairs.iter().map(|(s, _)| s));
    let t_dst = normalizing_transform(pairs.iter().map(|(_, d)| d));

    let mut rows = Vec::with_capacity(18 * pairs.len());
    for (src, dst) in pairs {
        let s = apply_homography(&t_src, src);
        let d = apply_homography(&t_dst, dst);
        let (x, y, u, v) = (s.x, s.y, d.x, d.y);
        rows.extend_from_slice(&[-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
        rows.extend_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
    }
    let a = DMatrix::from_row_slice(2 * pairs.len(), 9, &rows);

    // Least-squares null direction of A via the spectrum of A^T A
    // (a thin SVD of the 2n x 9 system would not carry the full set
    // of right singular vectors when 2n < 9).
    let eig = nalgebra::SymmetricEigen::new(a.transpose() * &a);
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let largest = eig.eigenvalues[order[8]].max(0.0);
    // The solution is the null direction; a second near-zero
    // eigenvalue means the system does not pin the homography down.
    let second_smallest = eig.eigenvalues[order[1]].max(0.0);
    if !(largest > 0.0) || second_smallest / largest < 1e-12 {
        return Err(PerceptionError::DegenerateConfiguration);
    }
    let h_col = eig.eigenvectors.column(order[0]);
    let h_norm = Matrix3::new(
        h_col[0], h_col[1], h_col[2],
        h_col[3], h_col[4], h_col[5],
        h_col[6], h_col[7], h_col[8],
    );

    let t_dst_inv = t_dst.try_inverse().expect("similarity transform");
    let mut h = t_dst_inv * h_norm * t_src;
    if h[(2, 2)].abs() < 1e-12 * h.norm() {
        return Err(PerceptionError::DegenerateConfiguration);
    }
    h /= h[(2, 2)];

    let mut sq = 0.0;
    for (src, dst) in pairs {
        let p = apply_homography(&h, src);
        sq += (p - dst).norm_squared();
    }
    Ok(HomographyEstimate { matrix: h, reprojection_rms: (sq / pairs.len() as f64).sqrt() })
}

/// Similarity moving the centroid to the origin and the mean distance
/// to sqrt(2).
fn normalizing_transform<'a>(points: impl Iterator<Item = &'a Point2> + Clone) -> Matrix3<f64> {
    let n = points.clone().count() as f64;
    let cx = points.clone().map(|p| p.x).sum::<f64>() / n;
    let cy = points.clone().map(|p| p.y).sum::<f64>() / n;
    let mean_dist = points.map(|p| ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt()).sum::<f64>() / n;
    let s = if mean_dist > 1e-12 { std::f64::consts::SQRT_2 / mean_dist } else { 1.0 };
    Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0)
}

/// Ramer-Douglas-Peucker on an open polyline. Every dropped point
/// stays within `epsilon` of the simplified chain; `epsilon` of zero
/// returns the input unchanged.
pub fn simplify_rdp(points: &[Point2], epsilon: f64) -> Vec<Point2> {
    if epsilon <= 0.0 || points.len() <= 2 {
        return points.to_vec();
    }
    let mut keep = vec![false; points.len()];
    keep[0] = true;
    keep[points.len() - 1] = true;
    rdp_mark(points, 0, points.len() - 1, epsilon, &mut keep);
    points
        .iter()
        .zip(&keep)
        .filter_map(|(p, k)| k.then_some(*p))
        .collect()
}

fn rdp_mark(points: &[Point2], a: usize, b: usize, epsilon: f64, keep: &mut [bool]) {
    if b <= a + 1 {
        return;
    }
    let (mut best, mut best_d) = (a, -1.0);
    for i in a + 1..b {
        let d = segment_distance(&points[i], &points[a], &points[b]);
        if d > best_d {
            best = i;
            best_d = d;
        }
    }
    if best_d >= epsilon {
        keep[best] = true;
        rdp_mark(points, a, best, epsilon, keep);
        rdp_mark(points, best, b, epsilon, keep);
    }
}

fn segment_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 < 1e-24 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// RDP for a closed ring: split at the two farthest-apart vertices,
/// simplify each half, and rejoin.
pub fn simplify_closed(ring: &[Point2], epsilon: f64) -> Vec<Point2> {
    if epsilon <= 0.0 || ring.len() <= 3 {
        return ring.to_vec();
    }
    let (mut bi, mut bj, mut best) = (0, 0, -1.0);
    for i in 0..ring.len() {
        for j in i + 1..ring.len() {
            let d = (ring[i] - ring[j]).norm_squared();
            if d > best {
                (bi, bj, best) = (i, j, d);
            }
        }
    }
    let half_a: Vec<Point2> = ring[bi..=bj].to_vec();
    let mut half_b: Vec<Point2> = ring[bj..].to_vec();
    half_b.extend_from_slice(&ring[..=bi]);

    let sa = simplify_rdp(&half_a, epsilon);
    let sb = simplify_rdp(&half_b, epsilon);
    let mut out = sa;
    out.extend_from_slice(&sb[1..sb.len() - 1]);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueBoard {
    pub length: f64,
    pub width: f64,
    /// Station-frame SE(2) pose of the board center.
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub struct PickupScene {
    pub boards: Vec<TrueBoard>,
    /// Projective map station -> image.
    pub camera: Matrix3<f64>,
    /// Fiducial positions in the station frame; their image positions
    /// are assumed detected exactly.
    pub markers: Vec<Point2>,
    /// Station-frame non-board shapes (debris, shadows) fed through
    /// the same pipeline.
    pub extra_contours: Vec<Vec<Point2>>,
    /// Per-point Gaussian jitter in image coordinates.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Contour samples per board. Coarse on purpose: corner picking
    /// during simplification stays noise-robust when the geometric
    /// drop between neighboring samples dwarfs the jitter.
    pub points_per_contour: usize,
}

impl PickupScene {
    pub fn new(
        boards: Vec<TrueBoard>,
        camera: Matrix3<f64>,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Self, PerceptionError> {
        let scene = PickupScene {
            boards,
            camera,
            markers: Self::default_markers(),
            extra_contours: Vec::new(),
            noise_sigma,
            seed,
            points_per_contour: 16,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Corners of a 2 x 1 m pickup table.
    pub fn default_markers() -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(2.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    pub fn validate(&self) -> Result<(), PerceptionError> {
        if self.noise_sigma < 0.0 {
            return Err(PerceptionError::NegativeSigma(self.noise_sigma));
        }
        if self.markers.len() < 4 {
            return Err(PerceptionError::TooFewMarkers(self.markers.len()));
        }
        if self.camera.try_inverse().is_none() {
            return Err(PerceptionError::SingularCamera);
        }
        for (index, b) in self.boards.iter().enumerate() {
            if !(b.length > 0.0) || !(b.width > 0.0) {
                return Err(PerceptionError::BadBoard {
                    index,
                    reason: format!("non-positive dimensions {} x {}", b.length, b.width),
                });
            }
        }
        // The marker layout must pin the rectification down.
        let pairs: Vec<(Point2, Point2)> = self
            .markers
            .iter()
            .map(|m| (apply_homography(&self.camera, m), *m))
            .collect();
        estimate_homography(&pairs).map(|_| ())
    }

    fn corners(b: &TrueBoard) -> [Point2; 4] {
        let (c, s) = (b.theta.cos(), b.theta.sin());
        let rot = |px: f64, py: f64| {
            Point2::new(b.x + c * px - s * py, b.y + s * px + c * py)
        };
        let (hl, hw) = (0.5 * b.length, 0.5 * b.width);
        [rot(-hl, -hw), rot(hl, -hw), rot(hl, hw), rot(-hl, hw)]
    }

    /// Station-frame contour ring of one board: corners plus edge
    /// samples distributed by edge length. Short edges carry no
    /// interior samples; a mid-edge sample sits only millimeters
    /// behind the corner in the farthest-pair metric and jitter can
    /// promote it, wrecking the simplification.
    fn board_ring(&self, b: &TrueBoard) -> Vec<Point2> {
        let corners = Self::corners(b);
        let perimeter = 2.0 * (b.length + b.width);
        let mut ring = Vec::with_capacity(self.points_per_contour + 4);
        for k in 0..4 {
            let a = corners[k];
            let z = corners[(k + 1) % 4];
            let len = (z - a).norm();
            let n = ((self.points_per_contour as f64 * len / perimeter) as usize).max(1);
            for i in 0..n {
                ring.push(a + (z - a) * (i as f64 / n as f64));
            }
        }
        ring
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionThresholds {
    pub rdp_epsilon: f64,
    pub min_aspect: f64,
    pub min_area: f64,
    pub max_area: f64,
}

impl Default for DetectionThresholds {
    fn default() -> Self {
        DetectionThresholds { rdp_epsilon: 0.01, min_aspect: 3.0, min_area: 0.01, max_area: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoardDetection {
    pub id: u32,
    /// Convex, counter-clockwise, station frame.
    pub contour4: [Point2; 4],
    /// (x, y, theta); theta in [0, pi) since boards are symmetric.
    pub pose: (f64, f64, f64),
    pub length: f64,
    pub width: f64,
}

/// Runs the full detection pipeline on a scene: synthesize image
/// contours from the true boards, rectify them with the homography
/// estimated from the markers, simplify, and keep what looks like a
/// board. Contours that fail any filter are dropped silently; an
/// empty result is valid.
pub fn detect_boards(scene: &PickupScene, thresholds: &DetectionThresholds) -> Vec<BoardDetection> {
    let pairs: Vec<(Point2, Point2)> = scene
        .markers
        .iter()
        .map(|m| (apply_homography(&scene.camera, m), *m))
        .collect();
    let rectify = estimate_homography(&pairs)
        .expect("scene validated: marker layout pins the rectification down")
        .matrix;

    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(scene.seed);
    let normal = Normal::new(0.0, scene.noise_sigma.max(f64::MIN_POSITIVE)).unwrap();
    let mut jitter = |p: Point2| -> Point2 {
        if scene.noise_sigma > 0.0 {
            Point2::new(p.x + normal.sample(&mut rng), p.y + normal.sample(&mut rng))
        } else {
            p
        }
    };

    let mut image_rings: Vec<Vec<Point2>> = Vec::new();
    for b in &scene.boards {
        image_rings.push(
            scene
                .board_ring(b)
                .into_iter()
                .map(|p| jitter(apply_homography(&scene.camera, &p)))
                .collect(),
        );
    }
    for extra in &scene.extra_contours {
        image_rings.push(
            extra
                .iter()
                .map(|p| jitter(apply_homography(&scene.camera, p)))
                .collect(),
        );
    }

    let mut out = Vec::new();
    for ring in &image_rings {
        let station: Vec<Point2> = ring.iter().map(|p| apply_homography(&rectify, p)).collect();
        let simplified = simplify_closed(&station, thresholds.rdp_epsilon);
        if simplified.len() != 4 {
            continue;
        }
        let hull = poly2::convex_hull(&simplified);
        if hull.len() != 4 {
            continue;
        }
        let area = poly2::area(&hull);
        if area < thresholds.min_area || area > thresholds.max_area {
            continue;
        }
        let mids: Vec<Point2> = (0..4)
            .map(|k| nalgebra::center(&hull[k], &hull[(k + 1) % 4]))
            .collect();
        let d02 = mids[2] - mids[0];
        let d13 = mids[3] - mids[1];
        let (length, width, axis) = if d02.norm() >= d13.norm() {
            (d02.norm(), d13.norm(), d02)
        } else {
            (d13.norm(), d02.norm(), d13)
        };
        if width < 1e-9 || length / width < thresholds.min_aspect {
            continue;
        }
        let center = Point2::new(
            hull.iter().map(|p| p.x).sum::<f64>() / 4.0,
            hull.iter().map(|p| p.y).sum::<f64>() / 4.0,
        );
        let theta = axis.y.atan2(axis.x).rem_euclid(std::f64::consts::PI);
        out.push(BoardDetection {
            id: out.len() as u32,
            contour4: [hull[0], hull[1], hull[2], hull[3]],
            pose: (center.x, center.y, theta),
            length,
            width,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    Board { detection: BoardDetection, skip_cut: bool },
    NeedMaterial,
}

/// Score minimized among feasible boards in robotic mode; the default
/// is the offcut left after the cut.
pub type BoardScore = fn(&BoardDetection, f64, f64) -> f64;

pub fn offcut_board_score(d: &BoardDetection, target: f64, kerf: f64) -> f64 {
    d.length - target - kerf
}

pub fn select_board(
    detections: &[BoardDetection],
    target_length: f64,
    kerf: f64,
    min_robotic: f64,
) -> Selection {
    select_board_with(detections, target_length, kerf, min_robotic, offcut_board_score)
}

/// Picks the board to process for one element. Robotic targets
/// (length at least `min_robotic`) need a board covering target plus
/// kerf and take the best score. Shorter targets arrive pre-cut by
/// hand: the saw is skipped and the best match is the detection
/// closest in length, allowing a small undercut. No candidate means
/// the operator must add material.
pub fn select_board_with(
    detections: &[BoardDetection],
    target_length: f64,
    kerf: f64,
    min_robotic: f64,
    score: BoardScore,
) -> Selection {
    let robotic = target_length >= min_robotic;
    let best = if robotic {
        detections
            .iter()
            .filter(|d| d.length >= target_length + kerf)
            .min_by(|a, b| {
                score(a, target_length, kerf)
                    .total_cmp(&score(b, target_length, kerf))
                    .then(a.id.cmp(&b.id))
            })
    } else {
        detections
            .iter()
            .filter(|d| d.length >= target_length - MANUAL_SELECT_TOL)
            .min_by(|a, b| {
                (a.length - target_length)
                    .abs()
                    .total_cmp(&(b.length - target_length).abs())
                    .then(a.id.cmp(&b.id))
            })
    };
    match best {
        Some(d) => Selection::Board { detection: d.clone(), skip_cut: !robotic },
        None => Selection::NeedMaterial,
    }
}

/// Circle ring used to model blob-like false positives.
pub fn circle_contour(center: Point2, radius: f64, n: usize) -> Vec<Point2> {
    (0..n)
        .map(|i| {
            let th = std::f64::consts::TAU * i as f64 / n as f64;
            Point2::new(center.x + radius * th.cos(), center.y + radius * th.sin())
        })
        .collect()
}

pub fn detections_csv(detections: &[BoardDetection]) -> String {
    let mut s = String::from("id,length_m,width_m,x_m,y_m,theta_rad\n");
    for d in detections {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            d.id, d.length, d.width, d.pose.0, d.pose.1, d.pose.2
        ));
    }
    s
}
