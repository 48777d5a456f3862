//! Shared synthetic fixtures: small assemblies with hand-checkable
//! structure used across tests, plus the bundled demo job. None of
//! them reproduce a built structure; they are stand-ins with the same
//! statistical shape.

use std::fs;
use std::path::Path;

use crate::config::{
    emit_config, guides_csv, GuideSource, InventorySpec, ModularizeSpec, NailSpec,
    PipelineConfig, SimulateSpec, SlicingSpec, SubdivisionSpec,
};
use crate::fabsim::PlacementMode;
use crate::geom::{ContourCurve, Plane, Point3, Vec3};
use crate::inventory::{
    allocate, inventory_csv, CutPlan, ElementReq, InventoryBin, Policy,
};
use crate::layout::{
    apply_mask, build_segments, generate_elements, subdivide_contour, CrossSection, Layer, Mask,
    MaskKind, Subdivision,
};

pub const ELEMENT_DEPTH: f64 = 0.0381;
pub const ELEMENT_WIDTH: f64 = 0.0889;

fn single_line_layer(
    a: Point3,
    b: Point3,
    layer_index: usize,
    scheme: &Subdivision,
    next_id: &mut u32,
) -> Layer {
    let z = a.z;
    let plane = Plane::new(Point3::new(0.0, 0.0, z), Vec3::z()).unwrap();
    let contour = ContourCurve::new(plane, vec![a, b], false).unwrap();
    let params = subdivide_contour(&contour, layer_index, scheme).unwrap();
    let mut segments = build_segments(&contour, &params);
    apply_mask(&mut segments, &Mask { kind: MaskKind::All, overrides: vec![] }).unwrap();
    generate_elements(
        &contour,
        layer_index,
        &segments,
        CrossSection::new(ELEMENT_WIDTH, ELEMENT_DEPTH).unwrap(),
        false,
        0.35,
        next_id,
    )
    .unwrap()
}

/// Stack of single 2 m elements whose direction alternates between x
/// and y by layer, so every consecutive pair crosses in one square
/// lap at the origin.
pub fn crossing_stack(n_layers: usize) -> Vec<Layer> {
    let mut next_id = 0;
    let mut layers = Vec::new();
    for i in 0..n_layers {
        let z = i as f64 * ELEMENT_DEPTH;
        let (a, b) = if i % 2 == 0 {
            (Point3::new(-1.0, 0.0, z), Point3::new(1.0, 0.0, z))
        } else {
            (Point3::new(0.0, -1.0, z), Point3::new(0.0, 1.0, z))
        };
        layers.push(single_line_layer(
            a,
            b,
            i,
            &Subdivision::Uniform { target_len: 2.5 },
            &mut next_id,
        ));
    }
    layers
}

/// Stack of identical single elements along x, one per layer: a tall
/// thin tower whose bounding box grows only in the stacking direction.
pub fn straight_stack(n_layers: usize, length: f64) -> Vec<Layer> {
    let mut next_id = 0;
    (0..n_layers)
        .map(|i| {
            let z = i as f64 * ELEMENT_DEPTH;
            single_line_layer(
                Point3::new(0.0, 0.0, z),
                Point3::new(length, 0.0, z),
                i,
                &Subdivision::Explicit { values: vec![0.0, 1.0] },
                &mut next_id,
            )
        })
        .collect()
}

/// One straight element per layer, with each layer's length chosen so
/// it weighs exactly `weights[k]` kg at the given density.
pub fn weighted_stack(weights: &[f64], density: f64) -> Vec<Layer> {
    let area = ELEMENT_WIDTH * ELEMENT_DEPTH;
    let mut next_id = 0;
    weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let z = i as f64 * ELEMENT_DEPTH;
            single_line_layer(
                Point3::new(0.0, 0.0, z),
                Point3::new(w / (density * area), 0.0, z),
                i,
                &Subdivision::Explicit { values: vec![0.0, 1.0] },
                &mut next_id,
            )
        })
        .collect()
}

/// Greedy cut plan over every element of `layers`.
pub fn quick_plan(layers: &[Layer], inventory: &[InventoryBin], kerf: f64) -> CutPlan {
    let reqs: Vec<ElementReq> = layers
        .iter()
        .flat_map(|l| l.elements.iter().map(|e| ElementReq { id: e.id, length: e.length }))
        .collect();
    allocate(&reqs, inventory, kerf, Policy::GreedyBestFit).unwrap()
}

// -------------------------------------------------------- demo vault

pub const VAULT_SEED: u64 = 7;
pub const VAULT_DENSITY: f64 = 750.0;
const VAULT_RADIUS: f64 = 6.0;
const VAULT_THETA: (f64, f64) = (4.0, 12.0);
const VAULT_DEPTH_Y: f64 = 2.3;

/// One flank of a shallow barrel vault: an arc in the xz plane swept
/// straight along y. Slicing by z gives one straight contour line per
/// layer, so every lap is a clean rectangle and stacked laps are
/// nearly congruent.
pub fn vault_guides() -> Vec<Vec<Point3>> {
    let n = 81;
    let arc = |y: f64| -> Vec<Point3> {
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                let theta = (VAULT_THETA.0 + t * (VAULT_THETA.1 - VAULT_THETA.0)).to_radians();
                Point3::new(VAULT_RADIUS * theta.cos(), y, VAULT_RADIUS * theta.sin())
            })
            .collect()
    };
    vec![arc(0.0), arc(VAULT_DEPTH_Y)]
}

/// Two reclaimed length classes (one for the extended interior
/// elements, one for the clamped end pieces) plus unlimited new stock
/// as fallback.
pub fn vault_inventory() -> Vec<InventoryBin> {
    vec![
        InventoryBin::reclaimed(0, 0.38, 0.48, 96).unwrap(),
        InventoryBin::reclaimed(1, 0.29, 0.36, 30).unwrap(),
        InventoryBin::new_stock(9, 2.44, None).unwrap(),
    ]
}

/// The demo job configuration. `base_dir` is where `guides.csv` and
/// `inventory.csv` live (see [`write_vault_fixture`]); output goes to
/// `base_dir/out`.
pub fn vault_config(base_dir: &Path) -> PipelineConfig {
    PipelineConfig {
        seed: VAULT_SEED,
        output_dir: base_dir.join("out"),
        guides: GuideSource::File(base_dir.join("guides.csv")),
        samples_u: 81,
        samples_v: 3,
        slicing: SlicingSpec { axis: Vec3::z(), spacing: ELEMENT_DEPTH, offset: 0.0 },
        subdivision: SubdivisionSpec::Uniform { target_len: 0.19 },
        mask: Mask { kind: MaskKind::Checkerboard, overrides: vec![] },
        cross_section: CrossSection::new(ELEMENT_WIDTH, ELEMENT_DEPTH).unwrap(),
        extension: 0.0889,
        miter: true,
        manual_cut_threshold: 0.35,
        // Stacked congruent laps at one-element layer pitch cap the
        // achievable nail spacing near 50 mm, so the demo checks a
        // tighter clearance than the free-standing default.
        nails: NailSpec {
            edge_offset: 0.019,
            min_clearance: 0.04,
            reference: Point3::new(0.0, 0.0, 0.0),
        },
        modularize: ModularizeSpec {
            robot_envelope: [2.5, 1.2, 1.05],
            transport_envelope: [1.1, 2.6, 1.1],
            max_weight_kg: 100.0,
            density: VAULT_DENSITY,
        },
        inventory: Some(InventorySpec {
            file: base_dir.join("inventory.csv"),
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

/// Writes the demo job to `dir`: `config.toml` (with relative data
/// paths, so the bundle is relocatable), `guides.csv`, and
/// `inventory.csv`.
pub fn write_vault_fixture(dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut config = vault_config(Path::new(""));
    config.output_dir = "out".into();
    fs::write(dir.join("config.toml"), emit_config(&config))?;
    fs::write(dir.join("guides.csv"), guides_csv(&vault_guides()))?;
    fs::write(dir.join("inventory.csv"), inventory_csv(&vault_inventory()))?;
    Ok(())
}

// -------------------------------------------- engineered edge cases

/// Density for the envelope-violation tower; light enough that the
/// weight pass leaves one tall run for the envelope pass to split.
pub const VIOLATION_DENSITY: f64 = 120.0;

/// 33 stacked 2.4 m elements: passes the weight cap as a single run
/// but exceeds the 1.1 m envelope extent, forcing a parent/child
/// split.
pub fn envelope_violation_layers() -> Vec<Layer> {
    straight_stack(33, 2.4)
}

/// Element lengths with exactly 89 of 1000 (8.9%) below the 0.35 m
/// manual-cut threshold, mirroring a realistic short-stock tail.
pub fn proportion_lengths() -> Vec<f64> {
    (0..1000)
        .map(|k| {
            if k % 11 == 5 && k < 979 {
                0.28 + 0.02 * (k % 4) as f64
            } else {
                0.45 + 0.01 * (k % 8) as f64
            }
        })
        .collect()
}

/// One layer holding all 1000 proportion elements end to end along a
/// straight contour.
pub fn proportion_layers() -> Vec<Layer> {
    let lengths = proportion_lengths();
    let total: f64 = lengths.iter().sum();
    let mut cum = Vec::with_capacity(lengths.len() + 1);
    let mut acc = 0.0;
    cum.push(0.0);
    for l in &lengths {
        acc += l;
        cum.push(acc / total);
    }
    *cum.last_mut().unwrap() = 1.0;

    let plane = Plane::new(Point3::origin(), Vec3::z()).unwrap();
    let contour = ContourCurve::new(
        plane,
        vec![Point3::origin(), Point3::new(total, 0.0, 0.0)],
        false,
    )
    .unwrap();
    let params = subdivide_contour(&contour, 0, &Subdivision::Explicit { values: cum }).unwrap();
    let mut segments = build_segments(&contour, &params);
    apply_mask(&mut segments, &Mask { kind: MaskKind::All, overrides: vec![] }).unwrap();
    let mut next_id = 0;
    let layer = generate_elements(
        &contour,
        0,
        &segments,
        CrossSection::new(ELEMENT_WIDTH, ELEMENT_DEPTH).unwrap(),
        false,
        0.35,
        &mut next_id,
    )
    .unwrap();
    vec![layer]
}

pub fn proportion_inventory() -> Vec<InventoryBin> {
    vec![InventoryBin::new_stock(0, 0.6, None).unwrap()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::CutMode;

    #[test]
    fn crossing_stack_has_one_element_per_layer() {
        let layers = crossing_stack(4);
        assert_eq!(layers.len(), 4);
        for (i, l) in layers.iter().enumerate() {
            assert_eq!(l.index, i);
            assert_eq!(l.elements.len(), 1);
            assert!((l.elements[0].length - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn proportion_fixture_has_exactly_89_short_elements() {
        let lengths = proportion_lengths();
        assert_eq!(lengths.len(), 1000);
        assert_eq!(lengths.iter().filter(|l| **l < 0.35).count(), 89);

        let layers = proportion_layers();
        let elements: Vec<_> = layers.iter().flat_map(|l| &l.elements).collect();
        assert_eq!(elements.len(), 1000);
        let manual = elements.iter().filter(|e| e.cut_mode == CutMode::Manual).count();
        assert_eq!(manual, 89);
        for (e, want) in elements.iter().zip(&lengths) {
            assert!((e.length - want).abs() < 1e-9, "element {} length drifted", e.id);
        }
    }

    #[test]
    fn violation_tower_is_light_but_tall() {
        let layers = envelope_violation_layers();
        let weight = crate::modularize::subassembly_weight(&layers, VIOLATION_DENSITY);
        assert!(weight < 100.0);
        let obb = crate::modularize::run_obb(&layers).unwrap();
        assert!(obb.sorted_extents()[1] > 1.1);
    }

    #[test]
    fn bundled_vault_fixture_matches_the_generator() {
        let bundled = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/vault");
        let fresh = std::env::temp_dir()
            .join(format!("relam-fixture-sync-{}", std::process::id()));
        let _ = fs::remove_dir_all(&fresh);
        write_vault_fixture(&fresh).unwrap();
        for name in ["config.toml", "guides.csv", "inventory.csv"] {
            let want = fs::read(fresh.join(name)).unwrap();
            let got = fs::read(bundled.join(name))
                .unwrap_or_else(|e| panic!("bundled fixture file {name} unreadable: {e}"));
            assert_eq!(got, want, "{name} is out of sync; rerun write_vault_fixture");
        }
        fs::remove_dir_all(&fresh).unwrap();
    }
}
