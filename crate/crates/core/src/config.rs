//! Pipeline configuration: one TOML document, validated and
//! normalized to SI meters.
//!
//! The file may declare `units = "mm"`; every length-valued field is
//! then scaled on load. Densities (kg/m^3) and weights (kg) are never
//! scaled. Paths are resolved against the directory the config was
//! loaded from. External data keeps its own units regardless of the
//! config: inventory CSV columns are millimeters, guide CSV columns
//! are meters (both say so in their headers).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fabsim::PlacementMode;
use crate::geom::{Point3, Vec3};
use crate::inventory::{self, Policy};
use crate::layout::{CrossSection, Mask, MaskKind, MaskOverride};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {reason}")]
    Read { path: PathBuf, reason: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), reason: reason.into() }
}

/// Guide curves for the loft: inline point lists or a CSV file with
/// `curve,x_m,y_m,z_m` rows.
#[derive(Debug, Clone, PartialEq)]
pub enum GuideSource {
    Inline(Vec<Vec<Point3>>),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlicingSpec {
    /// Slicing direction; normalized on load.
    pub axis: Vec3,
    pub spacing: f64,
    /// Shift of the first plane from the low end of the mesh.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubdivisionSpec {
    Uniform { target_len: f64 },
    /// One normalized parameter sequence per contour, in slicing
    /// order.
    Explicit { params: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NailSpec {
    pub edge_offset: f64,
    pub min_clearance: f64,
    /// Traversal start for the offset-polygon walk; also the
    /// every-nail order anchor.
    pub reference: Point3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModularizeSpec {
    pub robot_envelope: [f64; 3],
    pub transport_envelope: [f64; 3],
    pub max_weight_kg: f64,
    /// Timber density, kg/m^3.
    pub density: f64,
}

impl Default for ModularizeSpec {
    fn default() -> Self {
        ModularizeSpec {
            robot_envelope: [2.5, 1.2, 1.05],
            transport_envelope: [1.1, 2.6, 1.1],
            max_weight_kg: 100.0,
            density: 450.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InventorySpec {
    pub file: PathBuf,
    pub kerf: f64,
    pub min_usable_offcut: f64,
    pub policy: Policy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSpec {
    pub mode: PlacementMode,
    pub thickness_sigma: f64,
    pub length_sigma: f64,
    /// Contour jitter on the pickup station camera, image units.
    pub perception_sigma: f64,
    pub sensor_sigma: f64,
    pub scan_step: f64,
    pub jump_threshold: f64,
    pub max_refills: u32,
}

/// Validated configuration, all lengths in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub guides: GuideSource,
    pub samples_u: usize,
    pub samples_v: usize,
    pub slicing: SlicingSpec,
    pub subdivision: SubdivisionSpec,
    pub mask: Mask,
    pub cross_section: CrossSection,
    pub extension: f64,
    pub miter: bool,
    pub manual_cut_threshold: f64,
    pub nails: NailSpec,
    pub modularize: ModularizeSpec,
    pub inventory: Option<InventorySpec>,
    pub simulate: Option<SimulateSpec>,
}

// ---------------------------------------------------------------- raw

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    units: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<String>,
    guides: Option<RawGuides>,
    slicing: Option<RawSlicing>,
    subdivision: Option<RawSubdivision>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mask: Option<RawMask>,
    elements: Option<RawElements>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nails: Option<RawNails>,
    #[serde(skip_serializing_if = "Option::is_none")]
    modularize: Option<RawModularize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inventory: Option<RawInventory>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulate: Option<RawSimulate>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGuides {
    #[serde(skip_serializing_if = "Option::is_none")]
    file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    curves: Option<Vec<Vec<[f64; 3]>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples_u: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples_v: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlicing {
    axis: Option<[f64; 3]>,
    spacing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    offset: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubdivision {
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_len: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMask {
    #[serde(default)]
    kind: MaskKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    overrides: Vec<MaskOverride>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawCrossSection {
    Name(String),
    Dims { width: f64, depth: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElements {
    cross_section: Option<RawCrossSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    extension: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    miter: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    manual_cut_threshold: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNails {
    #[serde(skip_serializing_if = "Option::is_none")]
    edge_offset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_clearance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<[f64; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModularize {
    #[serde(skip_serializing_if = "Option::is_none")]
    robot_envelope: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transport_envelope: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_weight_kg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInventory {
    file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kerf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_usable_offcut: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    policy: Option<Policy>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulate {
    #[serde(skip_serializing_if = "Option::is_none")]
    enabled: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<PlacementMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    thickness_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    length_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    perception_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sensor_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scan_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    jump_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_refills: Option<u32>,
}

// --------------------------------------------------------- normalize

fn require_positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn require_nonnegative(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be non-negative, got {v}")))
    }
}

fn join_base(base: &Path, raw: &str) -> PathBuf {
    let p = PathBuf::from(raw);
    if p.is_absolute() || base.as_os_str().is_empty() {
        p
    } else {
        base.join(p)
    }
}

/// Parses and validates a config document. Relative paths inside it
/// are resolved against `base_dir` (pass an empty path to keep them
/// as written).
pub fn parse_config(text: &str, base_dir: &Path) -> Result<PipelineConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;

    let scale = match raw.units.as_deref() {
        None | Some("m") => 1.0,
        Some("mm") => 1e-3,
        Some(u) => return Err(invalid("units", format!("unknown unit {u:?}, want \"m\" or \"mm\""))),
    };
    let len = |v: f64| v * scale;

    let g = raw.guides.unwrap_or_default();
    let guides = match (&g.file, &g.curves) {
        (Some(_), Some(_)) => {
            return Err(invalid("guides", "give either file or curves, not both"))
        }
        (Some(f), None) => GuideSource::File(join_base(base_dir, f)),
        (None, Some(curves)) => {
            if curves.len() < 2 {
                return Err(invalid("guides.curves", "a loft needs at least two guide curves"));
            }
            GuideSource::Inline(
                curves
                    .iter()
                    .map(|c| c.iter().map(|p| Point3::new(len(p[0]), len(p[1]), len(p[2]))).collect())
                    .collect(),
            )
        }
        (None, None) => return Err(invalid("guides", "missing guide curves (file or curves)")),
    };
    let samples_u = g.samples_u.unwrap_or(64);
    let samples_v = g.samples_v.unwrap_or(8);
    if samples_u < 2 {
        return Err(invalid("guides.samples_u", "need at least 2 samples along the guides"));
    }
    if samples_v < 2 {
        return Err(invalid("guides.samples_v", "need at least 2 samples across the guides"));
    }

    let s = raw.slicing.ok_or_else(|| invalid("slicing", "missing section"))?;
    let axis = s.axis.unwrap_or([0.0, 0.0, 1.0]);
    let axis = Vec3::new(axis[0], axis[1], axis[2]);
    if axis.norm() < 1e-12 {
        return Err(invalid("slicing.axis", "axis must be a nonzero direction"));
    }
    let slicing = SlicingSpec {
        axis: axis.normalize(),
        spacing: require_positive(
            "slicing.spacing",
            len(s.spacing.ok_or_else(|| invalid("slicing.spacing", "missing"))?),
        )?,
        offset: len(s.offset.unwrap_or(0.0)),
    };

    let sub = raw.subdivision.ok_or_else(|| invalid("subdivision", "missing section"))?;
    let subdivision = match sub.mode.as_deref().unwrap_or("uniform") {
        "uniform" => SubdivisionSpec::Uniform {
            target_len: require_positive(
                "subdivision.target_len",
                len(sub.target_len.ok_or_else(|| {
                    invalid("subdivision.target_len", "required for uniform mode")
                })?),
            )?,
        },
        "explicit" => {
            let params = sub
                .params
                .ok_or_else(|| invalid("subdivision.params", "required for explicit mode"))?;
            if params.is_empty() {
                return Err(invalid("subdivision.params", "need at least one sequence"));
            }
            SubdivisionSpec::Explicit { params }
        }
        m => {
            return Err(invalid(
                "subdivision.mode",
                format!("unknown mode {m:?}, want \"uniform\" or \"explicit\""),
            ))
        }
    };

    let m = raw.mask.unwrap_or_default();
    let mask = Mask { kind: m.kind, overrides: m.overrides };

    let e = raw.elements.ok_or_else(|| invalid("elements", "missing section"))?;
    let cross_section = match e.cross_section {
        None => CrossSection::two_by_four(),
        Some(RawCrossSection::Name(name)) => match name.as_str() {
            "2x4" => CrossSection::two_by_four(),
            other => {
                return Err(invalid(
                    "elements.cross_section",
                    format!("unknown section {other:?}, want \"2x4\" or {{ width, depth }}"),
                ))
            }
        },
        Some(RawCrossSection::Dims { width, depth }) => {
            CrossSection::new(len(width), len(depth)).map_err(|e| {
                invalid("elements.cross_section", e.to_string())
            })?
        }
    };
    let extension = require_nonnegative("elements.extension", len(e.extension.unwrap_or(0.0889)))?;
    let miter = e.miter.unwrap_or(true);
    let manual_cut_threshold = require_nonnegative(
        "elements.manual_cut_threshold",
        len(e.manual_cut_threshold.unwrap_or(0.350)),
    )?;

    let n = raw.nails.unwrap_or(RawNails { edge_offset: None, min_clearance: None, reference: None });
    let reference = n.reference.unwrap_or([0.0; 3]);
    let nails = NailSpec {
        edge_offset: require_positive("nails.edge_offset", len(n.edge_offset.unwrap_or(0.019)))?,
        min_clearance: require_nonnegative(
            "nails.min_clearance",
            len(n.min_clearance.unwrap_or(0.09)),
        )?,
        reference: Point3::new(len(reference[0]), len(reference[1]), len(reference[2])),
    };

    let defaults = ModularizeSpec::default();
    let md = raw.modularize.unwrap_or(RawModularize {
        robot_envelope: None,
        transport_envelope: None,
        max_weight_kg: None,
        density: None,
    });
    let scale3 = |v: [f64; 3]| [len(v[0]), len(v[1]), len(v[2])];
    let modularize = ModularizeSpec {
        robot_envelope: md.robot_envelope.map(scale3).unwrap_or(defaults.robot_envelope),
        transport_envelope: md
            .transport_envelope
            .map(scale3)
            .unwrap_or(defaults.transport_envelope),
        max_weight_kg: require_positive(
            "modularize.max_weight_kg",
            md.max_weight_kg.unwrap_or(defaults.max_weight_kg),
        )?,
        density: require_positive("modularize.density", md.density.unwrap_or(defaults.density))?,
    };
    for (name, env) in [
        ("modularize.robot_envelope", &modularize.robot_envelope),
        ("modularize.transport_envelope", &modularize.transport_envelope),
    ] {
        if env.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(invalid(name, format!("extents must be positive, got {env:?}")));
        }
    }

    let inventory = match raw.inventory {
        None => None,
        Some(inv) => {
            let file = inv.file.ok_or_else(|| invalid("inventory.file", "missing"))?;
            if file.is_empty() {
                return Err(invalid("inventory.file", "empty path"));
            }
            Some(InventorySpec {
                file: join_base(base_dir, &file),
                kerf: require_nonnegative(
                    "inventory.kerf",
                    len(inv.kerf.unwrap_or(inventory::DEFAULT_KERF / scale)),
                )?,
                min_usable_offcut: require_nonnegative(
                    "inventory.min_usable_offcut",
                    len(inv.min_usable_offcut.unwrap_or(inventory::DEFAULT_MIN_USABLE_OFFCUT / scale)),
                )?,
                policy: inv.policy.unwrap_or(Policy::GreedyBestFit),
            })
        }
    };

    let simulate = match raw.simulate {
        None => None,
        Some(sim) if !sim.enabled.unwrap_or(true) => None,
        Some(sim) => {
            if inventory.is_none() {
                return Err(invalid(
                    "inventory",
                    "simulation draws stock from an inventory; add an [inventory] section",
                ));
            }
            Some(SimulateSpec {
                mode: sim.mode.unwrap_or(PlacementMode::Adaptive),
                thickness_sigma: require_nonnegative(
                    "simulate.thickness_sigma",
                    len(sim.thickness_sigma.unwrap_or(0.0005 / scale)),
                )?,
                length_sigma: require_nonnegative(
                    "simulate.length_sigma",
                    len(sim.length_sigma.unwrap_or(0.001 / scale)),
                )?,
                perception_sigma: require_nonnegative(
                    "simulate.perception_sigma",
                    len(sim.perception_sigma.unwrap_or(0.002 / scale)),
                )?,
                sensor_sigma: require_nonnegative(
                    "simulate.sensor_sigma",
                    len(sim.sensor_sigma.unwrap_or(0.0002 / scale)),
                )?,
                scan_step: require_positive(
                    "simulate.scan_step",
                    len(sim.scan_step.unwrap_or(0.005 / scale)),
                )?,
                jump_threshold: require_positive(
                    "simulate.jump_threshold",
                    len(sim.jump_threshold.unwrap_or(0.01 / scale)),
                )?,
                max_refills: sim.max_refills.unwrap_or(8),
            })
        }
    };

    Ok(PipelineConfig {
        seed: raw.seed.unwrap_or(0),
        output_dir: join_base(base_dir, raw.output_dir.as_deref().unwrap_or("out")),
        guides,
        samples_u,
        samples_v,
        slicing,
        subdivision,
        mask,
        cross_section,
        extension,
        miter,
        manual_cut_threshold,
        nails,
        modularize,
        inventory,
        simulate,
    })
}

/// Reads and parses a config file; relative paths resolve against its
/// directory.
pub fn load_config(path: &Path) -> Result<PipelineConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::Read { path: path.to_path_buf(), reason: e.to_string() })?;
    parse_config(&text, path.parent().unwrap_or_else(|| Path::new("")))
}

/// Serializes a config back to TOML, always in meters. Feeding the
/// result through [`parse_config`] with an empty base dir reproduces
/// the value exactly.
pub fn emit_config(c: &PipelineConfig) -> String {
    let (file, curves) = match &c.guides {
        GuideSource::File(p) => (Some(p.to_string_lossy().into_owned()), None),
        GuideSource::Inline(cs) => (
            None,
            Some(cs.iter().map(|c| c.iter().map(|p| [p.x, p.y, p.z]).collect()).collect()),
        ),
    };
    let (mode, target_len, params) = match &c.subdivision {
        SubdivisionSpec::Uniform { target_len } => ("uniform", Some(*target_len), None),
        SubdivisionSpec::Explicit { params } => ("explicit", None, Some(params.clone())),
    };
    let raw = RawConfig {
        units: Some("m".to_string()),
        seed: Some(c.seed),
        output_dir: Some(c.output_dir.to_string_lossy().into_owned()),
        guides: Some(RawGuides {
            file,
            curves,
            samples_u: Some(c.samples_u),
            samples_v: Some(c.samples_v),
        }),
        slicing: Some(RawSlicing {
            axis: Some([c.slicing.axis.x, c.slicing.axis.y, c.slicing.axis.z]),
            spacing: Some(c.slicing.spacing),
            offset: Some(c.slicing.offset),
        }),
        subdivision: Some(RawSubdivision {
            mode: Some(mode.to_string()),
            target_len,
            params,
        }),
        mask: Some(RawMask { kind: c.mask.kind, overrides: c.mask.overrides.clone() }),
        elements: Some(RawElements {
            cross_section: Some(RawCrossSection::Dims {
                width: c.cross_section.width,
                depth: c.cross_section.depth,
            }),
            extension: Some(c.extension),
            miter: Some(c.miter),
            manual_cut_threshold: Some(c.manual_cut_threshold),
        }),
        nails: Some(RawNails {
            edge_offset: Some(c.nails.edge_offset),
            min_clearance: Some(c.nails.min_clearance),
            reference: Some([c.nails.reference.x, c.nails.reference.y, c.nails.reference.z]),
        }),
        modularize: Some(RawModularize {
            robot_envelope: Some(c.modularize.robot_envelope),
            transport_envelope: Some(c.modularize.transport_envelope),
            max_weight_kg: Some(c.modularize.max_weight_kg),
            density: Some(c.modularize.density),
        }),
        inventory: c.inventory.as_ref().map(|inv| RawInventory {
            file: Some(inv.file.to_string_lossy().into_owned()),
            kerf: Some(inv.kerf),
            min_usable_offcut: Some(inv.min_usable_offcut),
            policy: Some(inv.policy),
        }),
        simulate: c.simulate.as_ref().map(|sim| RawSimulate {
            enabled: Some(true),
            mode: Some(sim.mode),
            thickness_sigma: Some(sim.thickness_sigma),
            length_sigma: Some(sim.length_sigma),
            perception_sigma: Some(sim.perception_sigma),
            sensor_sigma: Some(sim.sensor_sigma),
            scan_step: Some(sim.scan_step),
            jump_threshold: Some(sim.jump_threshold),
            max_refills: Some(sim.max_refills),
        }),
    };
    toml::to_string_pretty(&raw).expect("config serializes")
}

// ------------------------------------------------------- guide files

/// Reads guide curves from `curve,x_m,y_m,z_m` rows. Curve indices
/// must start at 0 and be contiguous; points stay in row order.
pub fn parse_guides_csv(text: &str) -> Result<Vec<Vec<Point3>>, ConfigError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut curves: Vec<Vec<Point3>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let fail =
            |reason: String| invalid("guides.file", format!("line {line}: {reason}"));
        let rec = rec.map_err(|e| fail(e.to_string()))?;
        if rec.len() != 4 {
            return Err(fail(format!("expected 4 fields, got {}", rec.len())));
        }
        let idx: usize = rec[0].parse().map_err(|_| fail(format!("bad curve index {:?}", &rec[0])))?;
        let mut coord = [0.0; 3];
        for (k, c) in coord.iter_mut().enumerate() {
            *c = rec[k + 1]
                .parse()
                .map_err(|_| fail(format!("bad coordinate {:?}", &rec[k + 1])))?;
        }
        if idx == curves.len() {
            curves.push(Vec::new());
        } else if idx > curves.len() {
            return Err(fail(format!("curve index {idx} skips ahead; indices must be contiguous")));
        }
        curves[idx].push(Point3::new(coord[0], coord[1], coord[2]));
    }
    if curves.len() < 2 {
        return Err(invalid("guides.file", "a loft needs at least two guide curves"));
    }
    Ok(curves)
}

pub fn guides_csv(curves: &[Vec<Point3>]) -> String {
    let mut s = String::from("curve,x_m,y_m,z_m\n");
    for (i, c) in curves.iter().enumerate() {
        for p in c {
            s.push_str(&format!("{i},{},{},{}\n", p.x, p.y, p.z));
        }
    }
    s
}

/// Resolves the guide source to point lists, reading the CSV when the
/// config referenced a file.
pub fn load_guides(source: &GuideSource) -> Result<Vec<Vec<Point3>>, ConfigError> {
    match source {
        GuideSource::Inline(curves) => Ok(curves.clone()),
        GuideSource::File(path) => {
            let text = fs::read_to_string(path).map_err(|e| ConfigError::Read {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            parse_guides_csv(&text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"
        [guides]
        curves = [[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]], [[0.0, 0.0, 1.0], [2.0, 0.0, 1.0]]]

        [slicing]
        spacing = 0.0381

        [subdivision]
        target_len = 0.3

        [elements]
    "#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL, Path::new("")).unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.cross_section, CrossSection::two_by_four());
        assert_eq!(c.mask.kind, MaskKind::Checkerboard);
        assert!(c.inventory.is_none());
        assert!(c.simulate.is_none());
        assert_eq!(c.nails.edge_offset, 0.019);
        assert_eq!(c.modularize.max_weight_kg, 100.0);
    }

    #[test]
    fn millimeter_units_scale_lengths_only() {
        let mm = r#"
            units = "mm"
            [guides]
            curves = [[[0.0, 0.0, 0.0], [2000.0, 0.0, 0.0]], [[0.0, 0.0, 1000.0], [2000.0, 0.0, 1000.0]]]
            [slicing]
            spacing = 38.1
            [subdivision]
            target_len = 300.0
            [elements]
            cross_section = { width = 88.9, depth = 38.1 }
            extension = 88.9
            manual_cut_threshold = 350.0
            [modularize]
            density = 450.0
            max_weight_kg = 100.0
        "#;
        let c = parse_config(mm, Path::new("")).unwrap();
        assert!((c.slicing.spacing - 0.0381).abs() < 1e-12);
        assert!((c.cross_section.width - 0.0889).abs() < 1e-12);
        assert!((c.manual_cut_threshold - 0.35).abs() < 1e-12);
        match c.guides {
            GuideSource::Inline(ref curves) => {
                assert!((curves[0][1].x - 2.0).abs() < 1e-12);
            }
            _ => panic!("inline guides expected"),
        }
        assert_eq!(c.modularize.density, 450.0);
        assert_eq!(c.modularize.max_weight_kg, 100.0);
    }

    #[test]
    fn simulate_without_inventory_names_the_missing_section() {
        let doc = format!("{MINIMAL}\n[simulate]\nenabled = true\n");
        match parse_config(&doc, Path::new("")) {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "inventory"),
            other => panic!("expected invalid-config error, got {other:?}"),
        }
    }

    #[test]
    fn disabled_simulate_block_is_dropped() {
        let doc = format!("{MINIMAL}\n[simulate]\nenabled = false\n");
        let c = parse_config(&doc, Path::new("")).unwrap();
        assert!(c.simulate.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let doc = format!("{MINIMAL}\nnot_a_key = 3\n");
        assert!(matches!(parse_config(&doc, Path::new("")), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn relative_paths_resolve_against_base_dir() {
        let doc = r#"
            [guides]
            file = "guides.csv"
            [slicing]
            spacing = 0.0381
            [subdivision]
            target_len = 0.3
            [elements]
            [inventory]
            file = "inv.csv"
        "#;
        let c = parse_config(doc, Path::new("/tmp/job")).unwrap();
        assert_eq!(c.guides, GuideSource::File(PathBuf::from("/tmp/job/guides.csv")));
        assert_eq!(c.inventory.unwrap().file, PathBuf::from("/tmp/job/inv.csv"));
    }

    #[test]
    fn guides_csv_roundtrip() {
        let curves = vec![
            vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.5, 0.25, 0.0)],
            vec![Point3::new(0.0, 0.0, 1.2), Point3::new(1.5, 0.25, 1.2)],
        ];
        let text = guides_csv(&curves);
        assert_eq!(parse_guides_csv(&text).unwrap(), curves);
    }

    #[test]
    fn guides_csv_rejects_index_gaps() {
        let text = "curve,x_m,y_m,z_m\n0,0,0,0\n2,1,0,0\n";
        assert!(parse_guides_csv(text).is_err());
    }

    fn sample_config() -> PipelineConfig {
        PipelineConfig {
            seed: 7,
            output_dir: PathBuf::from("out"),
            guides: GuideSource::File(PathBuf::from("guides.csv")),
            samples_u: 80,
            samples_v: 4,
            slicing: SlicingSpec {
                axis: Vec3::new(0.0, 0.0, 1.0),
                spacing: 0.0381,
                offset: 0.01,
            },
            subdivision: SubdivisionSpec::Uniform { target_len: 0.25 },
            mask: Mask {
                kind: MaskKind::Checkerboard,
                overrides: vec![MaskOverride { layer: 0, position: 1, keep: true }],
            },
            cross_section: CrossSection::two_by_four(),
            extension: 0.0889,
            miter: true,
            manual_cut_threshold: 0.35,
            nails: NailSpec {
                edge_offset: 0.019,
                min_clearance: 0.09,
                reference: Point3::new(0.0, -1.0, 0.0),
            },
            modularize: ModularizeSpec {
                robot_envelope: [2.5, 1.2, 1.05],
                transport_envelope: [1.1, 2.6, 1.1],
                max_weight_kg: 100.0,
                density: 800.0,
            },
            inventory: Some(InventorySpec {
                file: PathBuf::from("inventory.csv"),
                kerf: 0.004,
                min_usable_offcut: 0.35,
                policy: Policy::GreedyBestFit,
            }),
            simulate: Some(SimulateSpec {
                mode: PlacementMode::Adaptive,
                thickness_sigma: 0.0005,
                length_sigma: 0.001,
                perception_sigma: 0.002,
                sensor_sigma: 0.0002,
                scan_step: 0.005,
                jump_threshold: 0.01,
                max_refills: 8,
            }),
        }
    }

    #[test]
    fn emit_parse_roundtrip_is_exact() {
        let c = sample_config();
        let text = emit_config(&c);
        let back = parse_config(&text, Path::new("")).unwrap();
        assert_eq!(back, c);
    }

    proptest! {
        #[test]
        fn roundtrip_over_scalar_fields(
            seed in any::<u64>(),
            spacing in 1e-3..0.5f64,
            offset in 0.0..0.1f64,
            target in 0.05..2.0f64,
            ext in 0.0..0.2f64,
            density in 100.0..1200.0f64,
            miter in any::<bool>(),
            inline in any::<bool>(),
        ) {
            let mut c = sample_config();
            c.seed = seed;
            c.slicing.spacing = spacing;
            c.slicing.offset = offset;
            c.subdivision = SubdivisionSpec::Uniform { target_len: target };
            c.extension = ext;
            c.modularize.density = density;
            c.miter = miter;
            if inline {
                c.guides = GuideSource::Inline(vec![
                    vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.5, 0.0)],
                    vec![Point3::new(0.0, 0.0, 1.0), Point3::new(1.0, 0.5, 1.0)],
                ]);
            }
            let back = parse_config(&emit_config(&c), Path::new("")).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
