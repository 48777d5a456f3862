//! Splits the layer stack into liftable, transportable subassemblies:
//! contiguous runs of layers bounded by a weight cap, then re-split
//! wherever a run's tight bounding box exceeds what the robot cell and
//! the truck can take.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{min_obb, Obb, Point3};
use crate::layout::Layer;

pub const DEFAULT_MAX_WEIGHT_KG: f64 = 100.0;

#[derive(Debug, Error)]
pub enum ModularizeError {
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("weight cap must be positive, got {0}")]
    NonPositiveWeightCap(f64),
    #[error("no layers to partition")]
    NoLayers,
    #[error("layer {layer} alone weighs {weight_kg:.3} kg, over the {cap_kg:.3} kg cap")]
    LayerTooHeavy { layer: usize, weight_kg: f64, cap_kg: f64 },
    #[error(
        "layer {layer} alone has extents {extents:?} m, outside the envelope {envelope:?} m"
    )]
    LayerTooBig { layer: usize, extents: [f64; 3], envelope: [f64; 3] },
    #[error("envelope extents must be positive, got {0:?}")]
    BadEnvelope([f64; 3]),
}

/// Box limits as full extents. Compared with candidate boxes after
/// sorting both descending, which lets a subassembly ride in any
/// orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope(pub [f64; 3]);

impl Envelope {
    pub fn new(extents: [f64; 3]) -> Result<Self, ModularizeError> {
        if extents.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(ModularizeError::BadEnvelope(extents));
        }
        let mut e = extents;
        e.sort_by(|a, b| b.total_cmp(a));
        Ok(Envelope(e))
    }

    /// Tightest common envelope of the robot-cell box and the
    /// transport box: componentwise minimum of the sorted extents.
    pub fn intersect(&self, other: &Envelope) -> Envelope {
        Envelope([
            self.0[0].min(other.0[0]),
            self.0[1].min(other.0[1]),
            self.0[2].min(other.0[2]),
        ])
    }

    pub fn admits(&self, sorted_extents: &[f64; 3]) -> bool {
        (0..3).all(|k| sorted_extents[k] <= self.0[k] + 1e-9)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Subassembly {
    pub id: u32,
    /// Id of the weight-pass subassembly this one was split from, if
    /// the envelope pass had to divide it.
    pub parent: Option<u32>,
    /// Inclusive layer range.
    pub layer_from: usize,
    pub layer_to: usize,
    pub weight_kg: f64,
    /// Full extents of the tight bounding box, sorted descending.
    pub extents: [f64; 3],
}

pub fn subassembly_weight(layers: &[Layer], density: f64) -> f64 {
    layers
        .iter()
        .flat_map(|l| &l.elements)
        .map(|e| e.volume() * density)
        .sum()
}

fn layer_weight(layer: &Layer, density: f64) -> f64 {
    layer.elements.iter().map(|e| e.volume() * density).sum()
}

/// Corner cloud of a layer run: each element footprint plus its copy
/// shifted one element depth along the layer normal.
fn run_points(layers: &[Layer]) -> Vec<Point3> {
    let mut pts = Vec::new();
    for l in layers {
        for e in &l.elements {
            let lift = l.plane.normal * e.cross_section.depth;
            for c in &e.footprint {
                pts.push(*c);
                pts.push(c + lift);
            }
        }
    }
    pts
}

pub fn run_obb(layers: &[Layer]) -> Option<Obb> {
    let pts = run_points(layers);
    let normal = layers.first()?.plane.normal;
    min_obb(&pts, normal).ok()
}

/// Longest-feasible-prefix partition of `0..n` into contiguous runs.
/// `Err(i)` means item `i` is infeasible on its own.
fn greedy_runs(n: usize, feasible: impl Fn(usize, usize) -> bool) -> Result<Vec<(usize, usize)>, usize> {
    let mut runs = Vec::new();
    let mut start = 0;
    while start < n {
        if !feasible(start, start + 1) {
            return Err(start);
        }
        let mut end = start + 1;
        while end < n && feasible(start, end + 1) {
            end += 1;
        }
        runs.push((start, end));
        start = end;
    }
    Ok(runs)
}

/// Weight-cap pass: walks up the stack accumulating layers until the
/// next one would push a run over `max_weight_kg`. Greedy longest
/// prefixes minimize the number of runs for contiguous partitions.
pub fn greedy_partition(
    layers: &[Layer],
    density: f64,
    max_weight_kg: f64,
) -> Result<Vec<Subassembly>, ModularizeError> {
    if !(density > 0.0) {
        return Err(ModularizeError::NonPositiveDensity(density));
    }
    if !(max_weight_kg > 0.0) {
        return Err(ModularizeError::NonPositiveWeightCap(max_weight_kg));
    }
    if layers.is_empty() {
        return Err(ModularizeError::NoLayers);
    }
    let weights: Vec<f64> = layers.iter().map(|l| layer_weight(l, density)).collect();
    let mut prefix = vec![0.0];
    for w in &weights {
        prefix.push(prefix.last().unwrap() + w);
    }
    let runs = greedy_runs(layers.len(), |a, b| prefix[b] - prefix[a] <= max_weight_kg)
        .map_err(|i| ModularizeError::LayerTooHeavy {
            layer: layers[i].index,
            weight_kg: weights[i],
            cap_kg: max_weight_kg,
        })?;

    let mut out = Vec::with_capacity(runs.len());
    for (id, (a, b)) in runs.into_iter().enumerate() {
        let slice = &layers[a..b];
        let extents = run_obb(slice).map(|o| o.sorted_extents()).unwrap_or([0.0; 3]);
        out.push(Subassembly {
            id: id as u32,
            parent: None,
            layer_from: layers[a].index,
            layer_to: layers[b - 1].index,
            weight_kg: prefix[b] - prefix[a],
            extents,
        });
    }
    Ok(out)
}

/// Envelope pass: any subassembly whose box exceeds the common
/// envelope of `robot_box` and `transport_box` is re-partitioned with
/// the weight cap and the box check applied together. Children record
/// the id of the subassembly they were split from; ids of split-off
/// children continue after the weight-pass ids.
pub fn enforce_envelopes(
    layers: &[Layer],
    subs: Vec<Subassembly>,
    robot_box: Envelope,
    transport_box: Envelope,
    density: f64,
    max_weight_kg: f64,
) -> Result<Vec<Subassembly>, ModularizeError> {
    let envelope = robot_box.intersect(&transport_box);
    let index_of = |layer_index: usize| -> usize {
        layers
            .iter()
            .position(|l| l.index == layer_index)
            .expect("subassembly references a known layer")
    };

    let mut next_id = subs.iter().map(|s| s.id + 1).max().unwrap_or(0);
    let mut out = Vec::with_capacity(subs.len());
    for sub in subs {
        if envelope.admits(&sub.extents) {
            out.push(sub);
            continue;
        }
        let a = index_of(sub.layer_from);
        let b = index_of(sub.layer_to) + 1;
        let slice = &layers[a..b];
        let weights: Vec<f64> = slice.iter().map(|l| layer_weight(l, density)).collect();
        let mut prefix = vec![0.0];
        for w in &weights {
            prefix.push(prefix.last().unwrap() + w);
        }
        let feasible = |i: usize, j: usize| -> bool {
            if prefix[j] - prefix[i] > max_weight_kg {
                return false;
            }
            match run_obb(&slice[i..j]) {
                Some(obb) => envelope.admits(&obb.sorted_extents()),
                None => true,
            }
        };
        let runs = greedy_runs(slice.len(), feasible).map_err(|i| {
            let extents =
                run_obb(&slice[i..i + 1]).map(|o| o.sorted_extents()).unwrap_or([0.0; 3]);
            if weights[i] > max_weight_kg {
                ModularizeError::LayerTooHeavy {
                    layer: slice[i].index,
                    weight_kg: weights[i],
                    cap_kg: max_weight_kg,
                }
            } else {
                ModularizeError::LayerTooBig { layer: slice[i].index, extents, envelope: envelope.0 }
            }
        })?;
        for (i, j) in runs {
            let child = &slice[i..j];
            let extents = run_obb(child).map(|o| o.sorted_extents()).unwrap_or([0.0; 3]);
            out.push(Subassembly {
                id: next_id,
                parent: Some(sub.id),
                layer_from: child[0].index,
                layer_to: child[child.len() - 1].index,
                weight_kg: prefix[j] - prefix[i],
                extents,
            });
            next_id += 1;
        }
    }
    out.sort_by_key(|s| s.layer_from);
    Ok(out)
}
