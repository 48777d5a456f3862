//! End-to-end orchestration: loft, slice, lay out, connect,
//! modularize, allocate, simulate, report. Every artifact write is
//! atomic (temp file plus rename) and every run with the same config
//! and seed produces byte-identical output.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{PipelineConfig, SubdivisionSpec};
use crate::connections::{
    check_nail_clearance, find_overlaps, place_nails, ClearanceViolation, NailParity,
    NailPlacement, OverlapRegion, MIN_OVERLAP_AREA,
};
use crate::fabsim::{run_fabrication, Dist, FabConfig, FabricationRun, ToleranceModel};
use crate::geom::{io, loft_mesh, slice_contours, ContourCurve, TriMesh};
use crate::inventory::{
    allocate, parse_inventory_csv, CutPlan, ElementReq, InventoryBin, Provenance,
};
use crate::layout::{
    apply_mask, build_segments, extend_segments, generate_elements, subdivide_contour, CutMode,
    Layer, Mask, Segment, Source, Subdivision,
};
use crate::modularize::{enforce_envelopes, greedy_partition, Envelope, Subassembly};
use crate::report;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Guides,
    Loft,
    Slice,
    Layout,
    Connections,
    Modularize,
    Allocate,
    Simulate,
    Report,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Guides => "guides",
            Stage::Loft => "loft",
            Stage::Slice => "slice",
            Stage::Layout => "layout",
            Stage::Connections => "connections",
            Stage::Modularize => "modularize",
            Stage::Allocate => "allocate",
            Stage::Simulate => "simulate",
            Stage::Report => "report",
            Stage::Write => "write",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

fn fail(stage: Stage, e: impl fmt::Display) -> PipelineError {
    PipelineError { stage, message: e.to_string() }
}

/// How far to take the pipeline; each level includes everything
/// before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StopAfter {
    Layout,
    Connections,
    Modularize,
    Allocate,
    Simulate,
    Report,
}

/// Everything a run computed. Stages past the requested stop hold
/// their empty defaults.
#[derive(Debug)]
pub struct PipelineRun {
    pub mesh: TriMesh,
    /// (layer index, contour), in slicing order.
    pub contours: Vec<(usize, ContourCurve)>,
    pub layers: Vec<Layer>,
    pub overlaps: Vec<OverlapRegion>,
    pub nails: Vec<NailPlacement>,
    pub clearance_violations: Vec<ClearanceViolation>,
    pub subassemblies: Vec<Subassembly>,
    pub inventory: Vec<InventoryBin>,
    pub plan: Option<CutPlan>,
    /// (subassembly id, simulated build), one per subassembly.
    pub fab: Vec<(u32, FabricationRun)>,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    /// Files written, in write order.
    pub files: Vec<PathBuf>,
}

/// Runs the pipeline through `stop` without touching the filesystem
/// for output (guide and inventory files referenced by the config are
/// still read).
pub fn run_to(config: &PipelineConfig, stop: StopAfter) -> Result<PipelineRun, PipelineError> {
    let mut warnings = Vec::new();

    let guides = crate::config::load_guides(&config.guides).map_err(|e| fail(Stage::Guides, e))?;
    let mesh = loft_mesh(&guides, config.samples_u, config.samples_v)
        .map_err(|e| fail(Stage::Loft, e))?;
    let contours = slice_contours(&mesh, config.slicing.axis, config.slicing.spacing, config.slicing.offset)
        .map_err(|e| fail(Stage::Slice, e))?;

    if (config.slicing.spacing - config.cross_section.depth).abs() > 1e-9 {
        warnings.push(format!(
            "slicing spacing {} m differs from element depth {} m; layers will not stack flush",
            config.slicing.spacing, config.cross_section.depth
        ));
    }

    let (layers, tagged) = build_layers(config, &contours)?;
    let mut run = PipelineRun {
        mesh,
        contours: tagged,
        layers,
        overlaps: Vec::new(),
        nails: Vec::new(),
        clearance_violations: Vec::new(),
        subassemblies: Vec::new(),
        inventory: Vec::new(),
        plan: None,
        fab: Vec::new(),
        warnings,
    };
    if stop < StopAfter::Connections {
        return Ok(run);
    }

    run.overlaps = find_overlaps(&run.layers, MIN_OVERLAP_AREA);
    run.nails = place_nails(&run.overlaps, config.nails.edge_offset, &config.nails.reference)
        .map_err(|e| fail(Stage::Connections, e))?;
    run.clearance_violations = check_nail_clearance(&run.nails, config.nails.min_clearance);
    if !run.clearance_violations.is_empty() {
        run.warnings.push(format!(
            "{} nail pair(s) closer than {} m across consecutive interfaces",
            run.clearance_violations.len(),
            config.nails.min_clearance
        ));
    }
    if stop < StopAfter::Modularize {
        return Ok(run);
    }

    if !run.layers.is_empty() {
        let md = &config.modularize;
        let robot = Envelope::new(md.robot_envelope).map_err(|e| fail(Stage::Modularize, e))?;
        let transport =
            Envelope::new(md.transport_envelope).map_err(|e| fail(Stage::Modularize, e))?;
        let subs = greedy_partition(&run.layers, md.density, md.max_weight_kg)
            .map_err(|e| fail(Stage::Modularize, e))?;
        run.subassemblies =
            enforce_envelopes(&run.layers, subs, robot, transport, md.density, md.max_weight_kg)
                .map_err(|e| fail(Stage::Modularize, e))?;
    }
    if stop < StopAfter::Allocate {
        return Ok(run);
    }

    if let Some(spec) = &config.inventory {
        let text = fs::read_to_string(&spec.file)
            .map_err(|e| fail(Stage::Allocate, format!("{}: {e}", spec.file.display())))?;
        run.inventory = parse_inventory_csv(&text).map_err(|e| fail(Stage::Allocate, e))?;
        let reqs: Vec<ElementReq> = run
            .layers
            .iter()
            .flat_map(|l| &l.elements)
            .map(|e| ElementReq { id: e.id, length: e.length })
            .collect();
        let plan = allocate(&reqs, &run.inventory, spec.kerf, spec.policy)
            .map_err(|e| fail(Stage::Allocate, e))?;
        if !plan.unassigned.is_empty() {
            run.warnings.push(format!(
                "{} element(s) have no feasible stock and stay unassigned",
                plan.unassigned.len()
            ));
        }
        apply_sources(&mut run.layers, &plan, &run.inventory);
        run.plan = Some(plan);
    }
    if stop < StopAfter::Simulate {
        return Ok(run);
    }

    if let (Some(sim), Some(plan)) = (&config.simulate, &run.plan) {
        let spec = config.inventory.as_ref().expect("simulate requires inventory");
        let fab_cfg = FabConfig {
            perception_sigma: sim.perception_sigma,
            scan_step: sim.scan_step,
            sensor_sigma: sim.sensor_sigma,
            jump_threshold: sim.jump_threshold,
            kerf: spec.kerf,
            min_usable_offcut: spec.min_usable_offcut,
            min_robotic: config.manual_cut_threshold,
            max_refills: sim.max_refills,
            ..FabConfig::default()
        };
        for sub in &run.subassemblies {
            let slice: Vec<Layer> = run
                .layers
                .iter()
                .filter(|l| l.index >= sub.layer_from && l.index <= sub.layer_to)
                .cloned()
                .collect();
            let tolerance = ToleranceModel {
                thickness_dist: Dist::Gaussian { mean: 0.0, sigma: sim.thickness_sigma },
                length_dist: Dist::Gaussian { mean: 0.0, sigma: sim.length_sigma },
                seed: config.seed.wrapping_add(sub.id as u64),
            };
            let fab = run_fabrication(&slice, plan, &run.inventory, &tolerance, &fab_cfg, sim.mode)
                .map_err(|e| fail(Stage::Simulate, format!("subassembly {}: {e}", sub.id)))?;
            if let Some(abort) = &fab.log.aborted {
                run.warnings.push(format!("subassembly {} aborted: {abort}", sub.id));
            }
            run.fab.push((sub.id, fab));
        }
    }

    Ok(run)
}

/// Runs through `stop` and writes the artifacts for every completed
/// stage under the config's output directory.
pub fn execute(
    config: &PipelineConfig,
    stop: StopAfter,
) -> Result<(PipelineRun, RunArtifacts), PipelineError> {
    let run = run_to(config, stop)?;
    let artifacts = write_artifacts(config, &run, stop)?;
    Ok((run, artifacts))
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<(PipelineRun, RunArtifacts), PipelineError> {
    execute(config, StopAfter::Report)
}

// ----------------------------------------------------------- layout

/// Groups contours into layers by plane position, subdivides, masks,
/// extends, and emits elements. Contours sharing a plane become one
/// layer; later contours continue the position numbering so mask
/// overrides address unique cells.
fn build_layers(
    config: &PipelineConfig,
    contours: &[ContourCurve],
) -> Result<(Vec<Layer>, Vec<(usize, ContourCurve)>), PipelineError> {
    let axis = config.slicing.axis;
    let tol = config.slicing.spacing * 1e-6;

    let mut groups: Vec<(f64, Vec<&ContourCurve>)> = Vec::new();
    for c in contours {
        let d = c.plane().origin.coords.dot(&axis);
        match groups.last_mut() {
            Some((d0, group)) if (d - *d0).abs() <= tol => group.push(c),
            _ => groups.push((d, vec![c])),
        }
    }

    if let SubdivisionSpec::Explicit { params } = &config.subdivision {
        if params.len() != contours.len() {
            return Err(fail(
                Stage::Layout,
                format!(
                    "subdivision.params has {} sequence(s) for {} contour(s)",
                    params.len(),
                    contours.len()
                ),
            ));
        }
    }

    let n_layers = groups.len();
    for ov in &config.mask.overrides {
        if ov.layer >= n_layers {
            return Err(fail(
                Stage::Layout,
                format!("mask override targets layer {} but only {} exist", ov.layer, n_layers),
            ));
        }
    }

    let mut layers = Vec::with_capacity(n_layers);
    let mut tagged = Vec::with_capacity(contours.len());
    let mut next_id: u32 = 0;
    let mut ordinal = 0usize;
    for (layer_index, (_, group)) in groups.into_iter().enumerate() {
        let mut chains: Vec<(&ContourCurve, Vec<Segment>)> = Vec::new();
        let mut pos_offset = 0usize;
        for contour in group {
            tagged.push((layer_index, contour.clone()));
            let scheme = match &config.subdivision {
                SubdivisionSpec::Uniform { target_len } => {
                    Subdivision::Uniform { target_len: *target_len }
                }
                SubdivisionSpec::Explicit { params } => {
                    Subdivision::Explicit { values: params[ordinal].clone() }
                }
            };
            let seq = subdivide_contour(contour, layer_index, &scheme)
                .map_err(|e| fail(Stage::Layout, format!("contour {ordinal}: {e}")))?;
            let mut segs = build_segments(contour, &seq);
            for s in &mut segs {
                s.position_index += pos_offset;
            }
            pos_offset += segs.len();
            ordinal += 1;
            chains.push((contour, segs));
        }

        let layer_mask = Mask {
            kind: config.mask.kind,
            overrides: config
                .mask
                .overrides
                .iter()
                .filter(|ov| ov.layer == layer_index)
                .copied()
                .collect(),
        };
        let mut all: Vec<Segment> = chains.iter().flat_map(|(_, s)| s.iter().cloned()).collect();
        apply_mask(&mut all, &layer_mask).map_err(|e| fail(Stage::Layout, e))?;

        let mut elements = Vec::new();
        let mut plane = None;
        let mut offset = 0usize;
        for (contour, segs) in &chains {
            let masked = &all[offset..offset + segs.len()];
            offset += segs.len();
            let retained: Vec<Segment> =
                masked.iter().filter(|s| s.retained).cloned().collect();
            if retained.is_empty() {
                plane.get_or_insert(*contour.plane());
                continue;
            }
            let extended = extend_segments(&retained, contour, config.extension)
                .map_err(|e| fail(Stage::Layout, e))?;
            let layer = generate_elements(
                contour,
                layer_index,
                &extended,
                config.cross_section,
                config.miter,
                config.manual_cut_threshold,
                &mut next_id,
            )
            .map_err(|e| fail(Stage::Layout, e))?;
            plane.get_or_insert(layer.plane);
            elements.extend(layer.elements);
        }
        let plane = plane.expect("every layer has at least one contour");
        layers.push(Layer { index: layer_index, plane, elements });
    }
    Ok((layers, tagged))
}

/// Stamps each element's stock source from the cut plan.
fn apply_sources(layers: &mut [Layer], plan: &CutPlan, bins: &[InventoryBin]) {
    let provenance_of = |bin_id: u32| {
        bins.iter().find(|b| b.id == bin_id).map(|b| b.provenance)
    };
    for layer in layers.iter_mut() {
        for e in &mut layer.elements {
            e.source = match plan.assignment_for(e.id) {
                Some(a) => match provenance_of(a.bin_id) {
                    Some(Provenance::Reclaimed) => Source::Reclaimed(a.bin_id),
                    Some(Provenance::New) => Source::New(a.bin_id),
                    None => Source::Unassigned,
                },
                None => Source::Unassigned,
            };
        }
    }
}

// --------------------------------------------------------- artifacts

/// Writes `bytes` via a temp file in the same directory plus a
/// rename, so a crashed run never leaves a half-written artifact.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let err = |e: std::io::Error| fail(Stage::Write, format!("{}: {e}", path.display()));
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(err)?;
        f.write_all(bytes).map_err(err)?;
        f.sync_all().map_err(err)?;
    }
    fs::rename(&tmp, path).map_err(err)
}

fn write_artifacts(
    config: &PipelineConfig,
    run: &PipelineRun,
    stop: StopAfter,
) -> Result<RunArtifacts, PipelineError> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| fail(Stage::Write, format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    let put = |name: &str, bytes: &[u8], files: &mut Vec<PathBuf>| -> Result<(), PipelineError> {
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        files.push(path);
        Ok(())
    };

    put("mesh.obj", io::obj_string(&run.mesh).as_bytes(), &mut files)?;
    let pairs: Vec<(usize, &ContourCurve)> = run.contours.iter().map(|(i, c)| (*i, c)).collect();
    put("contours.csv", io::contours_csv(&pairs).as_bytes(), &mut files)?;
    put("elements.csv", elements_csv(&run.layers).as_bytes(), &mut files)?;

    if stop >= StopAfter::Connections {
        put("nails.csv", nails_csv(&run.nails).as_bytes(), &mut files)?;
    }
    if stop >= StopAfter::Modularize {
        put("subassemblies.csv", subassemblies_csv(&run.subassemblies).as_bytes(), &mut files)?;
    }
    if stop >= StopAfter::Allocate {
        if let Some(plan) = &run.plan {
            put("cutplan.csv", cutplan_csv(plan, &run.layers, &run.inventory).as_bytes(), &mut files)?;
        }
    }
    if stop >= StopAfter::Simulate {
        for (sub_id, fab) in &run.fab {
            put(&format!("fablog_{sub_id}.jsonl"), fab.log.to_jsonl().as_bytes(), &mut files)?;
        }
    }
    if stop >= StopAfter::Report {
        let bundle = report::build_report(config, run);
        put("report.svg", bundle.histogram_svg.as_bytes(), &mut files)?;
        put("report.csv", bundle.metrics_csv.as_bytes(), &mut files)?;
        put("summary.txt", bundle.summary.as_bytes(), &mut files)?;
    }
    Ok(RunArtifacts { out_dir: dir.clone(), files })
}

pub fn elements_csv(layers: &[Layer]) -> String {
    let mut s = String::from(
        "element_id,layer,position,length_m,width_m,depth_m,cut_mode,source,\
         origin_x,origin_y,origin_z,dir_x,dir_y,dir_z\n",
    );
    for l in layers {
        for e in &l.elements {
            let cut = match e.cut_mode {
                CutMode::Robotic => "robotic",
                CutMode::Manual => "manual",
            };
            let source = match e.source {
                Source::Unassigned => "unassigned".to_string(),
                Source::Reclaimed(b) => format!("reclaimed:{b}"),
                Source::New(b) => format!("new:{b}"),
            };
            let o = e.pose.origin;
            let d = e.pose.x;
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                e.id,
                e.layer,
                e.position,
                e.length,
                e.cross_section.width,
                e.cross_section.depth,
                cut,
                source,
                o.x,
                o.y,
                o.z,
                d.x,
                d.y,
                d.z
            ));
        }
    }
    s
}

pub fn nails_csv(nails: &[NailPlacement]) -> String {
    let mut s = String::from("nail,overlap_id,lower_layer,parity,x,y,z,dir_x,dir_y,dir_z\n");
    for (i, n) in nails.iter().enumerate() {
        let parity = match n.parity {
            NailParity::Even => "even",
            NailParity::Odd => "odd",
        };
        s.push_str(&format!(
            "{i},{},{},{parity},{},{},{},{},{},{}\n",
            n.overlap_id,
            n.lower_layer,
            n.position.x,
            n.position.y,
            n.position.z,
            n.direction.x,
            n.direction.y,
            n.direction.z
        ));
    }
    s
}

pub fn subassemblies_csv(subs: &[Subassembly]) -> String {
    let mut s = String::from("sub_id,parent,layer_from,layer_to,weight_kg,extent_a,extent_b,extent_c\n");
    for sub in subs {
        let parent = sub.parent.map(|p| p.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{parent},{},{},{},{},{},{}\n",
            sub.id,
            sub.layer_from,
            sub.layer_to,
            sub.weight_kg,
            sub.extents[0],
            sub.extents[1],
            sub.extents[2]
        ));
    }
    s
}

pub fn cutplan_csv(plan: &CutPlan, layers: &[Layer], bins: &[InventoryBin]) -> String {
    let mut s = String::from("element_id,length_m,bin_id,provenance,expected_offcut_m\n");
    for l in layers {
        for e in &l.elements {
            match plan.assignment_for(e.id) {
                Some(a) => {
                    let prov = bins
                        .iter()
                        .find(|b| b.id == a.bin_id)
                        .map(|b| match b.provenance {
                            Provenance::Reclaimed => "reclaimed",
                            Provenance::New => "new",
                        })
                        .unwrap_or("unknown");
                    s.push_str(&format!(
                        "{},{},{},{prov},{}\n",
                        e.id, e.length, a.bin_id, a.expected_offcut
                    ));
                }
                None => s.push_str(&format!("{},{},,,\n", e.id, e.length)),
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{
        GuideSource, InventorySpec, ModularizeSpec, NailSpec, SimulateSpec, SlicingSpec,
    };
    use crate::fabsim::PlacementMode;
    use crate::geom::{Point3, Vec3};
    use crate::inventory::Policy;
    use crate::layout::{CrossSection, MaskKind, MaskOverride};

    fn tmp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("relam-pipeline-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    /// Two straight rails lofted into a vertical band, sliced into
    /// four layers of one open contour each.
    fn band_config(dir: &Path) -> PipelineConfig {
        PipelineConfig {
            seed: 11,
            output_dir: dir.join("out"),
            guides: GuideSource::Inline(vec![
                vec![Point3::new(0.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0)],
                vec![Point3::new(0.0, 0.0, 5.0 * 0.0381), Point3::new(2.0, 0.0, 5.0 * 0.0381)],
            ]),
            samples_u: 9,
            samples_v: 3,
            slicing: SlicingSpec {
                axis: Vec3::new(0.0, 0.0, 1.0),
                spacing: 0.0381,
                offset: 0.0,
            },
            subdivision: SubdivisionSpec::Uniform { target_len: 0.5 },
            mask: Mask { kind: MaskKind::Checkerboard, overrides: vec![] },
            cross_section: CrossSection::two_by_four(),
            extension: 0.0889,
            miter: false,
            manual_cut_threshold: 0.35,
            nails: NailSpec {
                edge_offset: 0.019,
                min_clearance: 0.09,
                reference: Point3::new(0.0, 0.0, 0.0),
            },
            modularize: ModularizeSpec {
                robot_envelope: [2.5, 1.2, 1.05],
                transport_envelope: [1.1, 2.6, 1.1],
                max_weight_kg: 100.0,
                density: 450.0,
            },
            inventory: None,
            simulate: None,
        }
    }

    fn write_inventory(dir: &Path) -> PathBuf {
        let path = dir.join("inventory.csv");
        let bins = [
            InventoryBin::reclaimed(0, 0.55, 0.8, 200).unwrap(),
            InventoryBin::new_stock(1, 2.44, None).unwrap(),
        ];
        fs::write(&path, crate::inventory::inventory_csv(&bins)).unwrap();
        path
    }

    #[test]
    fn band_runs_to_elements() {
        let dir = tmp_dir("band");
        let cfg = band_config(&dir);
        let run = run_to(&cfg, StopAfter::Layout).unwrap();
        assert_eq!(run.layers.len(), 4);
        // 2 m / 0.5 m target = 4 positions, checkerboard keeps 2.
        for l in &run.layers {
            assert_eq!(l.elements.len(), 2);
        }
        let ids: Vec<u32> =
            run.layers.iter().flat_map(|l| &l.elements).map(|e| e.id).collect();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        assert_eq!(ids, sorted);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn full_run_writes_every_artifact_and_is_deterministic() {
        let dir = tmp_dir("full");
        let mut cfg = band_config(&dir);
        cfg.inventory = Some(InventorySpec {
            file: write_inventory(&dir),
            kerf: 0.004,
            min_usable_offcut: 0.35,
            policy: Policy::GreedyBestFit,
        });
        cfg.simulate = Some(SimulateSpec {
            mode: PlacementMode::Adaptive,
            thickness_sigma: 0.0005,
            length_sigma: 0.001,
            perception_sigma: 0.002,
            sensor_sigma: 0.0002,
            scan_step: 0.005,
            jump_threshold: 0.01,
            max_refills: 8,
        });
        let (run, artifacts) = run_pipeline(&cfg).unwrap();
        assert!(run.plan.is_some());
        assert_eq!(run.fab.len(), run.subassemblies.len());
        for name in
            ["mesh.obj", "contours.csv", "elements.csv", "nails.csv", "subassemblies.csv",
             "cutplan.csv", "report.svg", "report.csv", "summary.txt"]
        {
            assert!(
                artifacts.files.iter().any(|f| f.file_name().unwrap() == name),
                "missing {name}"
            );
        }
        let snapshot: Vec<(PathBuf, Vec<u8>)> = artifacts
            .files
            .iter()
            .map(|f| (f.clone(), fs::read(f).unwrap()))
            .collect();
        let (_, artifacts2) = run_pipeline(&cfg).unwrap();
        assert_eq!(artifacts.files, artifacts2.files);
        for (path, bytes) in &snapshot {
            assert_eq!(&fs::read(path).unwrap(), bytes, "{} changed between runs", path.display());
        }
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn nail_and_cutplan_ids_resolve_to_elements() {
        let dir = tmp_dir("ids");
        let mut cfg = band_config(&dir);
        cfg.inventory = Some(InventorySpec {
            file: write_inventory(&dir),
            kerf: 0.004,
            min_usable_offcut: 0.35,
            policy: Policy::GreedyBestFit,
        });
        let (run, _) = execute(&cfg, StopAfter::Allocate).unwrap();
        let ids: std::collections::BTreeSet<u32> =
            run.layers.iter().flat_map(|l| &l.elements).map(|e| e.id).collect();
        for ov in &run.overlaps {
            assert!(ids.contains(&ov.upper_element));
            assert!(ids.contains(&ov.lower_element));
        }
        let plan = run.plan.as_ref().unwrap();
        for a in &plan.assignments {
            assert!(ids.contains(&a.element_id));
            assert!(run.inventory.iter().any(|b| b.id == a.bin_id));
        }
        for n in &run.nails {
            assert!(run.overlaps.iter().any(|ov| ov.id == n.overlap_id));
        }
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn mask_override_off_the_grid_is_a_layout_error() {
        let dir = tmp_dir("mask");
        let mut cfg = band_config(&dir);
        cfg.mask.overrides = vec![MaskOverride { layer: 99, position: 0, keep: false }];
        let err = run_to(&cfg, StopAfter::Layout).unwrap_err();
        assert_eq!(err.stage, Stage::Layout);
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn spacing_depth_mismatch_is_surfaced() {
        let dir = tmp_dir("warn");
        let mut cfg = band_config(&dir);
        cfg.slicing.spacing = 0.05;
        cfg.guides = GuideSource::Inline(vec![
            vec![Point3::new(0.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0)],
            vec![Point3::new(0.0, 0.0, 0.2), Point3::new(2.0, 0.0, 0.2)],
        ]);
        let run = run_to(&cfg, StopAfter::Layout).unwrap();
        assert!(run.warnings.iter().any(|w| w.contains("differs from element depth")));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn missing_inventory_file_fails_in_the_allocate_stage() {
        let dir = tmp_dir("noinv");
        let mut cfg = band_config(&dir);
        cfg.inventory = Some(InventorySpec {
            file: dir.join("nope.csv"),
            kerf: 0.004,
            min_usable_offcut: 0.35,
            policy: Policy::GreedyBestFit,
        });
        let err = run_to(&cfg, StopAfter::Allocate).unwrap_err();
        assert_eq!(err.stage, Stage::Allocate);
        let _ = fs::remove_dir_all(&dir);
    }
}
