//! Closed-loop fabrication simulation. Each element runs through the
//! same cycle as the physical cell: detect and select a board on the
//! pickup station, cut (or skip the cut for hand-prepared short
//! pieces), place at a height planned from the measured state of the
//! layers below, then scan the placed element and feed the
//! measurement back into the model. Stock and cut dimensions carry
//! configurable errors; the simulation exists to measure how placement
//! strategies cope with them.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connections::{find_overlaps, MIN_OVERLAP_AREA};
use crate::inventory::{CutPlan, InventoryBin, Provenance};
use crate::layout::{Element, Layer, Pose};
use crate::perception::{
    detect_boards, select_board, DetectionThresholds, PickupScene, Selection, TrueBoard,
};

pub const DEFAULT_SCAN_STEP: f64 = 0.005;
pub const DEFAULT_SENSOR_SIGMA: f64 = 0.0002;
pub const DEFAULT_JUMP_THRESHOLD: f64 = 0.01;

#[derive(Debug, Error)]
pub enum FabError {
    #[error("distribution parameter must be non-negative, got {0}")]
    NegativeSpread(f64),
    #[error("scan step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("scan path is empty")]
    EmptyPath,
    #[error("profile reconstruction needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("element {0} has no stock assignment in the cut plan")]
    MissingAssignment(u32),
    #[error("cut plan references unknown bin {0}")]
    UnknownBin(u32),
}

/// Symmetric error distribution for one fabrication quantity.
/// Gaussian draws are rejected outside three sigma, so every error is
/// bounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dist {
    Gaussian { mean: f64, sigma: f64 },
    Uniform { half_width: f64 },
}

impl Dist {
    pub fn zero() -> Self {
        Dist::Uniform { half_width: 0.0 }
    }

    pub fn validate(&self) -> Result<(), FabError> {
        let spread = match self {
            Dist::Gaussian { sigma, .. } => *sigma,
            Dist::Uniform { half_width } => *half_width,
        };
        if spread < 0.0 {
            return Err(FabError::NegativeSpread(spread));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Dist::Gaussian { mean, sigma } => *mean == 0.0 && *sigma == 0.0,
            Dist::Uniform { half_width } => *half_width == 0.0,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            Dist::Gaussian { mean, sigma } => {
                if *sigma == 0.0 {
                    return *mean;
                }
                let normal = rand_distr::Normal::new(0.0, *sigma).expect("validated sigma");
                loop {
                    let x = rand_distr::Distribution::sample(&normal, rng);
                    if x.abs() <= 3.0 * sigma {
                        return mean + x;
                    }
                }
            }
            Dist::Uniform { half_width } => {
                if *half_width == 0.0 {
                    0.0
                } else {
                    rng.random_range(-half_width..=*half_width)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceModel {
    pub thickness_dist: Dist,
    pub length_dist: Dist,
    pub seed: u64,
}

impl ToleranceModel {
    pub fn exact(seed: u64) -> Self {
        ToleranceModel { thickness_dist: Dist::zero(), length_dist: Dist::zero(), seed }
    }

    pub fn validate(&self) -> Result<(), FabError> {
        self.thickness_dist.validate()?;
        self.length_dist.validate()
    }

    /// With a fully collapsed model the run is the noise-free fixed
    /// point: stock arrives at the bin's expected length and every cut
    /// lands exactly on target.
    pub fn is_zero(&self) -> bool {
        self.thickness_dist.is_zero() && self.length_dist.is_zero()
    }
}

/// Piecewise-constant height over a scan coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightProfile {
    pub parts: Vec<ProfilePart>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePart {
    pub from: f64,
    pub to: f64,
    pub height: f64,
}

impl HeightProfile {
    pub fn flat(from: f64, to: f64, height: f64) -> Self {
        HeightProfile { parts: vec![ProfilePart { from, to, height }] }
    }

    pub fn height_at(&self, s: f64) -> f64 {
        for p in &self.parts {
            if s >= p.from && s <= p.to {
                return p.height;
            }
        }
        // Off the ends: nearest part wins.
        self.parts
            .iter()
            .min_by(|a, b| {
                let da = (s - a.from).abs().min((s - a.to).abs());
                let db = (s - b.from).abs().min((s - b.to).abs());
                da.total_cmp(&db)
            })
            .map(|p| p.height)
            .unwrap_or(0.0)
    }
}

/// Samples from the line scanner: (position along path, height).
#[derive(Debug, Clone, PartialEq)]
pub struct ScanCloud {
    pub points: Vec<(f64, f64)>,
    pub sensor_sigma: f64,
}

/// Sweeps the displacement sensor over `path` at regular `step`,
/// reading the profile plus Gaussian sensor noise. Deterministic per
/// seed.
pub fn simulate_scan(
    profile: &HeightProfile,
    path: (f64, f64),
    step: f64,
    sensor_sigma: f64,
    seed: u64,
) -> Result<ScanCloud, FabError> {
    if !(step > 0.0) {
        return Err(FabError::NonPositiveStep(step));
    }
    if sensor_sigma < 0.0 {
        return Err(FabError::NegativeSpread(sensor_sigma));
    }
    if !(path.1 > path.0) {
        return Err(FabError::EmptyPath);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let noise = Dist::Gaussian { mean: 0.0, sigma: sensor_sigma };
    let n = ((path.1 - path.0) / step).floor() as usize + 1;
    let points = (0..n)
        .map(|k| {
            let s = path.0 + k as f64 * step;
            (s, profile.height_at(s) + noise.sample(&mut rng))
        })
        .collect();
    Ok(ScanCloud { points, sensor_sigma })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSegment {
    pub from: f64,
    pub to: f64,
    /// Mean fitted height over the cluster.
    pub height: f64,
    pub slope: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedProfile {
    pub segments: Vec<FitSegment>,
    /// Clusters too small to fit that were absorbed by a neighbor.
    pub merged_singletons: usize,
}

impl ReconstructedProfile {
    /// Mean reconstructed height over `[from, to]`, each segment
    /// weighted by its overlap with the interval.
    pub fn weighted_height(&self, from: f64, to: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for seg in &self.segments {
            let w = (seg.to.min(to) - seg.from.max(from)).max(0.0);
            num += w * seg.height;
            den += w;
        }
        if den > 0.0 {
            num / den
        } else {
            // Interval misses every segment; fall back to the plain
            // mean so callers always get a height.
            let n = self.segments.len().max(1) as f64;
            self.segments.iter().map(|s| s.height).sum::<f64>() / n
        }
    }
}

/// Splits the cloud where consecutive samples jump more than
/// `jump_threshold` in height, then fits a least-squares line per
/// cluster. Clusters of a single sample cannot be fit and are merged
/// into the preceding cluster (or the following one at the start).
pub fn reconstruct_profile(
    cloud: &ScanCloud,
    jump_threshold: f64,
) -> Result<ReconstructedProfile, FabError> {
    if cloud.points.len() < 2 {
        return Err(FabError::TooFewSamples(cloud.points.len()));
    }
    let mut clusters: Vec<Vec<(f64, f64)>> = vec![vec![cloud.points[0]]];
    for w in cloud.points.windows(2) {
        if (w[1].1 - w[0].1).abs() > jump_threshold {
            clusters.push(Vec::new());
        }
        clusters.last_mut().unwrap().push(w[1]);
    }

    let mut merged_singletons = 0;
    let mut i = 0;
    while i < clusters.len() {
        if clusters[i].len() < 2 && clusters.len() > 1 {
            let orphan = clusters.remove(i);
            let target = if i > 0 { i - 1 } else { 0 };
            clusters[target].extend(orphan);
            clusters[target].sort_by(|a, b| a.0.total_cmp(&b.0));
            merged_singletons += 1;
        } else {
            i += 1;
        }
    }

    let segments = clusters
        .iter()
        .map(|c| {
            let n = c.len() as f64;
            let ms = c.iter().map(|p| p.0).sum::<f64>() / n;
            let mh = c.iter().map(|p| p.1).sum::<f64>() / n;
            let var = c.iter().map(|p| (p.0 - ms).powi(2)).sum::<f64>();
            let cov = c.iter().map(|p| (p.0 - ms) * (p.1 - mh)).sum::<f64>();
            let slope = if var > 1e-18 { cov / var } else { 0.0 };
            FitSegment {
                from: c.first().unwrap().0,
                to: c.last().unwrap().0,
                height: mh,
                slope,
                samples: c.len(),
            }
        })
        .collect();
    Ok(ReconstructedProfile { segments, merged_singletons })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementMode {
    /// Place at the design pose regardless of what was built below.
    Naive,
    /// Re-target the stacking coordinate from the measured tops of
    /// the supporting elements.
    Adaptive,
}

/// What the model knows about one placed element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsBuiltRecord {
    pub element_id: u32,
    pub layer: usize,
    pub design_bottom: f64,
    pub commanded_bottom: f64,
    pub actual_bottom: f64,
    pub actual_thickness: f64,
    pub actual_length: f64,
    /// Top height fitted from the post-placement scan.
    pub measured_top: f64,
    pub contact_gap: f64,
}

/// Model state accumulated over a run, in fabrication order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AsBuiltState {
    pub records: Vec<AsBuiltRecord>,
    by_id: BTreeMap<u32, usize>,
}

impl AsBuiltState {
    pub fn push(&mut self, rec: AsBuiltRecord) {
        self.by_id.insert(rec.element_id, self.records.len());
        self.records.push(rec);
    }

    pub fn record(&self, element_id: u32) -> Option<&AsBuiltRecord> {
        self.by_id.get(&element_id).map(|&i| &self.records[i])
    }

    pub fn measured_top(&self, element_id: u32) -> Option<f64> {
        self.record(element_id).map(|r| r.measured_top)
    }

    /// Measured top-surface profile of one layer, piecewise over its
    /// elements in fabrication order.
    pub fn layer_tops(&self, layer: usize) -> Vec<(u32, f64)> {
        self.records
            .iter()
            .filter(|r| r.layer == layer)
            .map(|r| (r.element_id, r.measured_top))
            .collect()
    }
}

/// Retargets the element pose for placement. `supports` pairs each
/// supporting element id with the length of footprint overlap; the
/// adaptive stacking coordinate is the overlap-weighted mean of their
/// measured tops (the pose origin sits on the element's bottom face,
/// so the measured thickness enters through the scanned top instead
/// of a half-thickness term). No supports means the element sits on
/// the machined base, which is the design datum.
pub fn plan_placement(
    element: &Element,
    as_built: &AsBuiltState,
    supports: &[(u32, f64)],
    mode: PlacementMode,
) -> Pose {
    let design = element.pose;
    if mode == PlacementMode::Naive {
        return design;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (id, w) in supports {
        if let Some(top) = as_built.measured_top(*id) {
            num += w * top;
            den += w;
        }
    }
    if den <= 0.0 {
        return design;
    }
    let stack = design.z;
    let design_bottom = design.origin.coords.dot(&stack);
    let delta = num / den - design_bottom;
    Pose { origin: design.origin + stack * delta, ..design }
}

#[derive(Debug, Clone, Serialize)]
pub struct FabRecord {
    pub element_id: u32,
    pub layer: usize,
    pub bin_id: u32,
    pub provenance: Provenance,
    pub stock_true_length: f64,
    pub detected_length: f64,
    pub skip_cut: bool,
    pub need_material_events: u32,
    pub design_bottom: f64,
    pub commanded_bottom: f64,
    pub as_built_bottom: f64,
    pub contact_gap: f64,
    pub actual_length: f64,
    pub actual_thickness: f64,
    pub kerf: f64,
    pub offcut: f64,
    pub offcut_returned: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FabSummary {
    pub elements: usize,
    pub robotic_cut_count: usize,
    pub manual_cut_count: usize,
    pub need_material_events: u32,
    pub consumed_stock_m: f64,
    pub kerf_m: f64,
    pub waste_m: f64,
    pub returned_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AbortReason {
    /// Repeated NeedMaterial refills or an emptied bin; the log holds
    /// every element finished before the abort.
    InventoryExhausted { element_id: u32, attempts: u32 },
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortReason::InventoryExhausted { element_id, attempts } => write!(
                f,
                "inventory exhausted at element {element_id} after {attempts} attempt(s)"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct FabricationLog {
    pub records: Vec<FabRecord>,
    pub summary: FabSummary,
    pub aborted: Option<AbortReason>,
}

impl FabricationLog {
    /// Line-delimited export: one JSON object per element record,
    /// then one for the summary.
    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&serde_json::to_string(r).expect("plain fields"));
            s.push('\n');
        }
        s.push_str(&serde_json::to_string(&self.summary).expect("plain fields"));
        s.push('\n');
        s
    }

    pub fn summary_csv(&self) -> String {
        let s = &self.summary;
        format!(
            "elements,robotic_cut_count,manual_cut_count,need_material_events,\
consumed_stock_m,kerf_m,waste_m,returned_m\n{},{},{},{},{},{},{},{}\n",
            s.elements,
            s.robotic_cut_count,
            s.manual_cut_count,
            s.need_material_events,
            s.consumed_stock_m,
            s.kerf_m,
            s.waste_m,
            s.returned_m
        )
    }

    /// Consumed stock minus everything it became; zero up to float
    /// accumulation when the books balance.
    pub fn conservation_residual(&self) -> f64 {
        let used: f64 = self
            .records
            .iter()
            .map(|r| r.actual_length + r.kerf + r.offcut)
            .sum();
        self.summary.consumed_stock_m - used
    }
}

#[derive(Debug, Clone)]
pub struct FabConfig {
    /// Contour jitter on the pickup station camera.
    pub perception_sigma: f64,
    pub thresholds: DetectionThresholds,
    pub scan_step: f64,
    pub sensor_sigma: f64,
    pub jump_threshold: f64,
    pub kerf: f64,
    pub min_usable_offcut: f64,
    /// Targets below this length arrive pre-cut by hand and skip the
    /// saw.
    pub min_robotic: f64,
    /// NeedMaterial refills allowed per element before aborting.
    pub max_refills: u32,
}

impl Default for FabConfig {
    fn default() -> Self {
        FabConfig {
            perception_sigma: 0.0,
            thresholds: DetectionThresholds::default(),
            scan_step: DEFAULT_SCAN_STEP,
            sensor_sigma: DEFAULT_SENSOR_SIGMA,
            jump_threshold: DEFAULT_JUMP_THRESHOLD,
            kerf: crate::inventory::DEFAULT_KERF,
            min_usable_offcut: crate::inventory::DEFAULT_MIN_USABLE_OFFCUT,
            min_robotic: 0.350,
            max_refills: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FabricationRun {
    pub log: FabricationLog,
    pub as_built: AsBuiltState,
}

impl FabricationRun {
    /// Mean absolute contact gap over the elements of the highest
    /// layer; the headline accumulation metric.
    pub fn final_layer_gap(&self) -> f64 {
        let top = self.as_built.records.iter().map(|r| r.layer).max();
        let Some(top) = top else { return 0.0 };
        let gaps: Vec<f64> = self
            .as_built
            .records
            .iter()
            .filter(|r| r.layer == top)
            .map(|r| r.contact_gap.abs())
            .collect();
        gaps.iter().sum::<f64>() / gaps.len() as f64
    }
}

/// Runs the closed loop over a subassembly: layers ascending, elements
/// in position order. Every random draw comes from one stream seeded
/// by the tolerance model, so a run is a pure function of (inputs,
/// seed).
pub fn run_fabrication(
    layers: &[Layer],
    plan: &CutPlan,
    inventory: &[InventoryBin],
    tolerance: &ToleranceModel,
    cfg: &FabConfig,
    mode: PlacementMode,
) -> Result<FabricationRun, FabError> {
    tolerance.validate()?;
    if !(cfg.scan_step > 0.0) {
        return Err(FabError::NonPositiveStep(cfg.scan_step));
    }

    let mut order: Vec<&Layer> = layers.iter().collect();
    order.sort_by_key(|l| l.index);

    let mut bins: BTreeMap<u32, (InventoryBin, Option<u32>)> =
        inventory.iter().map(|b| (b.id, (b.clone(), b.qty))).collect();
    for layer in &order {
        for e in &layer.elements {
            let a = plan
                .assignment_for(e.id)
                .ok_or(FabError::MissingAssignment(e.id))?;
            if !bins.contains_key(&a.bin_id) {
                return Err(FabError::UnknownBin(a.bin_id));
            }
        }
    }

    let elements: BTreeMap<u32, &Element> = order
        .iter()
        .flat_map(|l| l.elements.iter().map(|e| (e.id, e)))
        .collect();
    let mut supports: BTreeMap<u32, Vec<(u32, f64)>> = BTreeMap::new();
    let full: Vec<Layer> = order.iter().map(|l| (*l).clone()).collect();
    for region in find_overlaps(&full, MIN_OVERLAP_AREA) {
        let upper = elements[&region.upper_element];
        let axis_dir = upper.pose.x;
        let (bu, bv) = region.plane.basis();
        let axis_uv = nalgebra::Vector2::new(axis_dir.dot(&bu), axis_dir.dot(&bv));
        let axis_uv = if axis_uv.norm() > 1e-12 { axis_uv.normalize() } else { axis_uv };
        let proj: Vec<f64> = region.polygon.iter().map(|p| p.coords.dot(&axis_uv)).collect();
        let extent = proj.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - proj.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        supports
            .entry(region.upper_element)
            .or_default()
            .push((region.lower_element, extent));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(tolerance.seed);
    let zero_tol = tolerance.is_zero();
    let mut as_built = AsBuiltState::default();
    let mut log = FabricationLog::default();
    let stack = order
        .first()
        .map(|l| l.plane.normal)
        .unwrap_or_else(|| nalgebra::Vector3::z());

    'run: for layer in &order {
        for element in &layer.elements {
            let assignment = plan.assignment_for(element.id).expect("checked above");
            let (bin, remaining) = bins.get_mut(&assignment.bin_id).expect("checked above");
            let manual = element.length < cfg.min_robotic;

            let mut need_events = 0u32;
            let (stock_len, detected_len, skip_cut) = loop {
                if need_events > cfg.max_refills || *remaining == Some(0) {
                    log.aborted = Some(AbortReason::InventoryExhausted {
                        element_id: element.id,
                        attempts: need_events,
                    });
                    break 'run;
                }
                let stock_len = if manual {
                    // Pre-cut by hand to the target length.
                    element.length + tolerance.length_dist.sample(&mut rng)
                } else if zero_tol || bin.max_len - bin.min_len < 1e-12 {
                    bin.expected_len()
                } else {
                    rng.random_range(bin.min_len..bin.max_len)
                };
                let board = TrueBoard {
                    length: stock_len,
                    width: element.cross_section.width,
                    x: 1.0,
                    y: 0.5,
                    theta: 0.15,
                };
                let scene_seed = rng.random::<u64>();
                let scene = PickupScene::new(
                    vec![board],
                    Matrix3::identity(),
                    cfg.perception_sigma,
                    scene_seed,
                )
                .expect("fixed scene layout is valid");
                let detections = detect_boards(&scene, &cfg.thresholds);
                match select_board(&detections, element.length, cfg.kerf, cfg.min_robotic) {
                    Selection::Board { detection, skip_cut } => {
                        break (stock_len, detection.length, skip_cut);
                    }
                    Selection::NeedMaterial => {
                        // Board unusable (or measured short): stage the
                        // next one from the same bin.
                        need_events += 1;
                        log.summary.need_material_events += 1;
                    }
                }
            };

            *remaining = remaining.map(|q| q - 1);

            let actual_thickness =
                element.cross_section.depth + tolerance.thickness_dist.sample(&mut rng);
            let (actual_length, kerf, offcut) = if skip_cut {
                (stock_len, 0.0, 0.0)
            } else {
                let cut = (element.length + tolerance.length_dist.sample(&mut rng))
                    .min(stock_len - cfg.kerf);
                (cut, cfg.kerf, stock_len - cut - cfg.kerf)
            };
            let offcut_returned = !skip_cut && offcut >= cfg.min_usable_offcut;

            let element_supports = supports.get(&element.id).map(Vec::as_slice).unwrap_or(&[]);
            let commanded = plan_placement(element, &as_built, element_supports, mode);
            let design_bottom = element.pose.origin.coords.dot(&stack);
            let commanded_bottom = commanded.origin.coords.dot(&stack);

            // Physical seating: the mean true top of the supports (the
            // base is the design datum). Commanding lower presses the
            // element onto the supports; commanding higher leaves a
            // gap held by the fasteners.
            let mut num = 0.0;
            let mut den = 0.0;
            for (id, w) in element_supports {
                if let Some(r) = as_built.record(*id) {
                    num += w * (r.actual_bottom + r.actual_thickness);
                    den += w;
                }
            }
            let true_support = if den > 0.0 { num / den } else { design_bottom };
            let contact_gap = commanded_bottom - true_support;
            let actual_bottom = commanded_bottom.max(true_support);

            let profile =
                HeightProfile::flat(0.0, actual_length, actual_bottom + actual_thickness);
            let scan_seed = rng.random::<u64>();
            let cloud = simulate_scan(
                &profile,
                (0.0, actual_length),
                cfg.scan_step,
                cfg.sensor_sigma,
                scan_seed,
            )?;
            let fit = reconstruct_profile(&cloud, cfg.jump_threshold)?;
            let measured_top = fit.weighted_height(0.0, actual_length);

            as_built.push(AsBuiltRecord {
                element_id: element.id,
                layer: layer.index,
                design_bottom,
                commanded_bottom,
                actual_bottom,
                actual_thickness,
                actual_length,
                measured_top,
                contact_gap,
            });
            log.records.push(FabRecord {
                element_id: element.id,
                layer: layer.index,
                bin_id: assignment.bin_id,
                provenance: bin.provenance,
                stock_true_length: stock_len,
                detected_length: detected_len,
                skip_cut,
                need_material_events: need_events,
                design_bottom,
                commanded_bottom,
                as_built_bottom: actual_bottom,
                contact_gap,
                actual_length,
                actual_thickness,
                kerf,
                offcut,
                offcut_returned,
            });

            log.summary.elements += 1;
            if skip_cut {
                log.summary.manual_cut_count += 1;
                log.summary.consumed_stock_m += actual_length;
            } else {
                log.summary.robotic_cut_count += 1;
                log.summary.consumed_stock_m += stock_len;
                log.summary.kerf_m += kerf;
                if offcut_returned {
                    log.summary.returned_m += offcut;
                } else {
                    log.summary.waste_m += offcut;
                }
            }
        }
    }

    Ok(FabricationRun { log, as_built })
}
