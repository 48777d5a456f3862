//! Stock assignment against a binned inventory. Reclaimed boards are
//! sorted into length-range bins rather than digitized one by one, so
//! feasibility is judged at the range minimum (guaranteed to fit) and
//! expected offcut at the range midpoint. New stock has an exact
//! length and backstops whatever the reclaimed bins cannot serve.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_KERF: f64 = 0.004;
pub const DEFAULT_MIN_USABLE_OFFCUT: f64 = 0.350;
/// Branch-and-bound instance cap.
pub const EXACT_MAX_ELEMENTS: usize = 12;
pub const EXACT_MAX_BINS: usize = 12;

const FEAS_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("kerf must be non-negative, got {0}")]
    NegativeKerf(f64),
    #[error("element {id} has non-positive length {length}")]
    BadElementLength { id: u32, length: f64 },
    #[error("bin {id}: {reason}")]
    BadBin { id: u32, reason: String },
    #[error("duplicate bin id {0}")]
    DuplicateBin(u32),
    #[error(
        "exact allocation capped at {max_elements} elements x {max_bins} bins, got {elements} x {bins}"
    )]
    ExactTooLarge { elements: usize, bins: usize, max_elements: usize, max_bins: usize },
    #[error("no assignment in plan for element {0}")]
    UnknownAssignment(u32),
    #[error("unknown element {0}")]
    UnknownElement(u32),
    #[error("cut for element {element_id}: stock {actual} m shorter than required {required} m")]
    CutTooShort { element_id: u32, actual: f64, required: f64 },
    #[error("inventory csv line {line}: {reason}")]
    CsvParse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Reclaimed,
    New,
}

/// A length-range bin of interchangeable boards. `qty: None` marks
/// unlimited new stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventoryBin {
    pub id: u32,
    pub min_len: f64,
    pub max_len: f64,
    pub qty: Option<u32>,
    pub provenance: Provenance,
}

impl InventoryBin {
    pub fn reclaimed(id: u32, min_len: f64, max_len: f64, qty: u32) -> Result<Self, InventoryError> {
        if !(min_len > 0.0) || !(max_len > min_len) || !max_len.is_finite() {
            return Err(InventoryError::BadBin {
                id,
                reason: format!("need 0 < min < max, got [{min_len}, {max_len}]"),
            });
        }
        Ok(InventoryBin { id, min_len, max_len, qty: Some(qty), provenance: Provenance::Reclaimed })
    }

    pub fn new_stock(id: u32, nominal: f64, qty: Option<u32>) -> Result<Self, InventoryError> {
        if !(nominal > 0.0) || !nominal.is_finite() {
            return Err(InventoryError::BadBin {
                id,
                reason: format!("need positive nominal length, got {nominal}"),
            });
        }
        Ok(InventoryBin { id, min_len: nominal, max_len: nominal, qty, provenance: Provenance::New })
    }

    /// Board length assumed when estimating offcut: the range
    /// midpoint (the nominal length for new stock).
    pub fn expected_len(&self) -> f64 {
        0.5 * (self.min_len + self.max_len)
    }

    /// Guaranteed fit: even the shortest board in the bin covers the
    /// element plus the saw kerf.
    pub fn feasible(&self, length: f64, kerf: f64) -> bool {
        length + kerf <= self.min_len + FEAS_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementReq {
    pub id: u32,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    GreedyBestFit,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub element_id: u32,
    pub bin_id: u32,
    pub expected_offcut: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutPlan {
    /// Sorted by element id.
    pub assignments: Vec<Assignment>,
    pub unassigned: Vec<u32>,
    pub reclaimed_count: usize,
    pub new_count: usize,
    /// Total expected offcut across all assignments.
    pub waste_m: f64,
}

impl CutPlan {
    pub fn assignment_for(&self, element_id: u32) -> Option<&Assignment> {
        self.assignments
            .binary_search_by_key(&element_id, |a| a.element_id)
            .ok()
            .map(|i| &self.assignments[i])
    }
}

/// Per-assignment cost, minimized. The default estimates the offcut
/// left after the cut.
pub type ScoreFn = fn(&InventoryBin, f64, f64) -> f64;

pub fn expected_offcut_score(bin: &InventoryBin, length: f64, kerf: f64) -> f64 {
    bin.expected_len() - (length + kerf)
}

pub fn allocate(
    elements: &[ElementReq],
    inventory: &[InventoryBin],
    kerf: f64,
    policy: Policy,
) -> Result<CutPlan, InventoryError> {
    allocate_with_score(elements, inventory, kerf, policy, expected_offcut_score)
}

/// Assigns stock to elements. Both policies put reclaimed stock
/// first and fall back to new stock, leaving an element unassigned
/// only when nothing fits; greedy processes elements longest-first
/// taking the best-scoring feasible bin, exact branch-and-bounds the
/// lexicographic objective (fewest unassigned, most reclaimed, least
/// total score).
pub fn allocate_with_score(
    elements: &[ElementReq],
    inventory: &[InventoryBin],
    kerf: f64,
    policy: Policy,
    score: ScoreFn,
) -> Result<CutPlan, InventoryError> {
    if kerf < 0.0 {
        return Err(InventoryError::NegativeKerf(kerf));
    }
    for e in elements {
        if !(e.length > 0.0) || !e.length.is_finite() {
            return Err(InventoryError::BadElementLength { id: e.id, length: e.length });
        }
    }
    let mut seen = BTreeMap::new();
    for b in inventory {
        if seen.insert(b.id, ()).is_some() {
            return Err(InventoryError::DuplicateBin(b.id));
        }
        if !(b.min_len > 0.0) || b.max_len < b.min_len {
            return Err(InventoryError::BadBin {
                id: b.id,
                reason: format!("invalid range [{}, {}]", b.min_len, b.max_len),
            });
        }
    }
    match policy {
        Policy::GreedyBestFit => Ok(allocate_greedy(elements, inventory, kerf, score)),
        Policy::Exact => allocate_exact(elements, inventory, kerf, score),
    }
}

fn build_plan(
    elements: &[ElementReq],
    inventory: &[InventoryBin],
    choice: &[Option<usize>],
    order: &[usize],
    kerf: f64,
) -> CutPlan {
    let mut assignments = Vec::new();
    let mut unassigned = Vec::new();
    let (mut reclaimed_count, mut new_count, mut waste_m) = (0, 0, 0.0);
    for (slot, &ei) in order.iter().enumerate() {
        let e = &elements[ei];
        match choice[slot] {
            Some(bi) => {
                let bin = &inventory[bi];
                let offcut = bin.expected_len() - (e.length + kerf);
                match bin.provenance {
                    Provenance::Reclaimed => reclaimed_count += 1,
                    Provenance::New => new_count += 1,
                }
                waste_m += offcut;
                assignments.push(Assignment {
                    element_id: e.id,
                    bin_id: bin.id,
                    expected_offcut: offcut,
                });
            }
            None => unassigned.push(e.id),
        }
    }
    assignments.sort_by_key(|a| a.element_id);
    unassigned.sort_unstable();
    CutPlan { assignments, unassigned, reclaimed_count, new_count, waste_m }
}

fn longest_first(elements: &[ElementReq]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..elements.len()).collect();
    order.sort_by(|&a, &b| {
        elements[b]
            .length
            .total_cmp(&elements[a].length)
            .then(elements[a].id.cmp(&elements[b].id))
    });
    order
}

fn allocate_greedy(
    elements: &[ElementReq],
    inventory: &[InventoryBin],
    kerf: f64,
    score: ScoreFn,
) -> CutPlan {
    let order = longest_first(elements);
    let mut remaining: Vec<Option<u32>> = inventory.iter().map(|b| b.qty).collect();
    let mut choice = vec![None; elements.len()];

    for (slot, &ei) in order.iter().enumerate() {
        let e = &elements[ei];
        let pick = |want: Provenance, remaining: &[Option<u32>]| -> Option<usize> {
            inventory
                .iter()
                .enumerate()
                .filter(|(bi, b)| {
                    b.provenance == want
                        && remaining[*bi].map_or(true, |q| q > 0)
                        && b.feasible(e.length, kerf)
                })
                .min_by(|(_, a), (_, b)| {
                    score(a, e.length, kerf)
                        .total_cmp(&score(b, e.length, kerf))
                        .then(a.id.cmp(&b.id))
                })
                .map(|(bi, _)| bi)
        };
        let bi = pick(Provenance::Reclaimed, &remaining).or_else(|| pick(Provenance::New, &remaining));
        if let Some(bi) = bi {
            if let Some(q) = remaining[bi].as_mut() {
                *q -= 1;
            }
            choice[slot] = Some(bi);
        }
    }
    build_plan(elements, inventory, &choice, &order, kerf)
}

/// Lexicographic objective value: fewer unassigned, then more
/// reclaimed, then lower total score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub unassigned: u32,
    pub reclaimed: u32,
    pub total_score: f64,
}

impl Objective {
    fn key(&self) -> (u32, i64, f64) {
        (self.unassigned, -(self.reclaimed as i64), self.total_score)
    }

    pub fn better_than(&self, other: &Objective) -> bool {
        let (a, b) = (self.key(), other.key());
        a.0 < b.0 || (a.0 == b.0 && (a.1 < b.1 || (a.1 == b.1 && a.2 < b.2 - 1e-12)))
    }
}

pub fn plan_objective(plan: &CutPlan) -> Objective {
    Objective {
        unassigned: plan.unassigned.len() as u32,
        reclaimed: plan.reclaimed_count as u32,
        total_score: plan.waste_m,
    }
}

fn allocate_exact(
    elements: &[ElementReq],
    inventory: &[InventoryBin],
    kerf: f64,
    score: ScoreFn,
) -> Result<CutPlan, InventoryError> {
    if elements.len() > EXACT_MAX_ELEMENTS || inventory.len() > EXACT_MAX_BINS {
        return Err(InventoryError::ExactTooLarge {
            elements: elements.len(),
            bins: inventory.len(),
            max_elements: EXACT_MAX_ELEMENTS,
            max_bins: EXACT_MAX_BINS,
        });
    }
    let order = longest_first(elements);
    let n = order.len();

    // Feasible bins per slot, reclaimed first then ascending score:
    // good incumbents arrive early and sharpen the bound.
    let options: Vec<Vec<usize>> = order
        .iter()
        .map(|&ei| {
            let e = &elements[ei];
            let mut opts: Vec<usize> = (0..inventory.len())
                .filter(|&bi| inventory[bi].feasible(e.length, kerf))
                .collect();
            opts.sort_by(|&a, &b| {
                let (ba, bb) = (&inventory[a], &inventory[b]);
                (ba.provenance == Provenance::New)
                    .cmp(&(bb.provenance == Provenance::New))
                    .then(score(ba, elements[ei].length, kerf).total_cmp(&score(
                        bb,
                        elements[ei].length,
                        kerf,
                    )))
                    .then(ba.id.cmp(&bb.id))
            });
            opts
        })
        .collect();
    // Optimistic per-slot minimum score, for the suffix bound.
    let min_score: Vec<f64> = order
        .iter()
        .zip(&options)
        .map(|(&ei, opts)| {
            opts.iter()
                .map(|&bi| score(&inventory[bi], elements[ei].length, kerf))
                .fold(f64::INFINITY, f64::min)
                .min(0.0)
        })
        .collect();
    let mut suffix_min: Vec<f64> = vec![0.0; n + 1];
    for k in (0..n).rev() {
        suffix_min[k] = suffix_min[k + 1] + min_score[k];
    }

    struct Search<'a> {
        elements: &'a [ElementReq],
        inventory: &'a [InventoryBin],
        order: &'a [usize],
        options: &'a [Vec<usize>],
        suffix_min: &'a [f64],
        kerf: f64,
        score: ScoreFn,
        remaining: Vec<Option<u32>>,
        choice: Vec<Option<usize>>,
        best: Option<(Objective, Vec<Option<usize>>)>,
    }

    impl Search<'_> {
        fn run(&mut self, k: usize, cur: Objective) {
            let n = self.order.len();
            if let Some((best, _)) = &self.best {
                let bound = Objective {
                    unassigned: cur.unassigned,
                    reclaimed: cur.reclaimed + (n - k) as u32,
                    total_score: cur.total_score + self.suffix_min[k],
                };
                if !bound.better_than(best) {
                    return;
                }
            }
            if k == n {
                if self.best.as_ref().map_or(true, |(b, _)| cur.better_than(b)) {
                    self.best = Some((cur, self.choice.clone()));
                }
                return;
            }
            let e = &self.elements[self.order[k]];
            for &bi in &self.options[k] {
                if let Some(0) = self.remaining[bi] {
                    continue;
                }
                let bin = &self.inventory[bi];
                if let Some(q) = self.remaining[bi].as_mut() {
                    *q -= 1;
                }
                self.choice[k] = Some(bi);
                let next = Objective {
                    unassigned: cur.unassigned,
                    reclaimed: cur.reclaimed
                        + u32::from(bin.provenance == Provenance::Reclaimed),
                    total_score: cur.total_score + (self.score)(bin, e.length, self.kerf),
                };
                self.run(k + 1, next);
                self.choice[k] = None;
                if let Some(q) = self.remaining[bi].as_mut() {
                    *q += 1;
                }
            }
            // Leaving the element unassigned is always a branch; the
            // unassigned-count head of the objective keeps it honest.
            self.run(k + 1, Objective { unassigned: cur.unassigned + 1, ..cur });
        }
    }

    let mut search = Search {
        elements,
        inventory,
        order: &order,
        options: &options,
        suffix_min: &suffix_min,
        kerf,
        score,
        remaining: inventory.iter().map(|b| b.qty).collect(),
        choice: vec![None; n],
        best: None,
    };
    search.run(0, Objective { unassigned: 0, reclaimed: 0, total_score: 0.0 });
    let (_, choice) = search.best.expect("search visits at least the all-unassigned leaf");
    Ok(build_plan(elements, inventory, &choice, &order, kerf))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActualCut {
    pub element_id: u32,
    pub actual_stock_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OffcutFate {
    Returned { bin_id: u32 },
    Waste,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffcutOutcome {
    pub element_id: u32,
    pub offcut: f64,
    pub fate: OffcutFate,
}

/// Feeds real cut results back into the inventory: offcuts at least
/// `min_usable` long go into a matching reclaimed bin (created on a
/// 0.1 m grid when none exists), shorter ones are waste.
pub fn offcut_return(
    plan: &CutPlan,
    elements: &[ElementReq],
    cuts: &[ActualCut],
    inventory: &mut Vec<InventoryBin>,
    kerf: f64,
    min_usable: f64,
) -> Result<Vec<OffcutOutcome>, InventoryError> {
    let mut out = Vec::with_capacity(cuts.len());
    for cut in cuts {
        let e = elements
            .iter()
            .find(|e| e.id == cut.element_id)
            .ok_or(InventoryError::UnknownElement(cut.element_id))?;
        plan.assignment_for(cut.element_id)
            .ok_or(InventoryError::UnknownAssignment(cut.element_id))?;
        let required = e.length + kerf;
        if cut.actual_stock_length + FEAS_TOL < required {
            return Err(InventoryError::CutTooShort {
                element_id: cut.element_id,
                actual: cut.actual_stock_length,
                required,
            });
        }
        let offcut = cut.actual_stock_length - required;
        let fate = if offcut >= min_usable {
            let bin_id = return_to_bin(inventory, offcut);
            OffcutFate::Returned { bin_id }
        } else {
            OffcutFate::Waste
        };
        out.push(OffcutOutcome { element_id: cut.element_id, offcut, fate });
    }
    Ok(out)
}

/// Adds one board of length `offcut` to the first reclaimed bin whose
/// range contains it (lowest id), creating a 0.1 m grid bin when none
/// does.
pub fn return_to_bin(inventory: &mut Vec<InventoryBin>, offcut: f64) -> u32 {
    let hit = inventory
        .iter_mut()
        .filter(|b| {
            b.provenance == Provenance::Reclaimed && b.min_len <= offcut && offcut <= b.max_len
        })
        .min_by_key(|b| b.id);
    if let Some(bin) = hit {
        if let Some(q) = bin.qty.as_mut() {
            *q += 1;
        }
        return bin.id;
    }
    let id = inventory.iter().map(|b| b.id + 1).max().unwrap_or(0);
    let lo = (offcut / 0.1).floor() * 0.1;
    let bin = InventoryBin {
        id,
        min_len: lo,
        max_len: lo + 0.1,
        qty: Some(1),
        provenance: Provenance::Reclaimed,
    };
    inventory.push(bin);
    id
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationReport {
    pub total_elements: usize,
    pub reclaimed_count: usize,
    pub new_count: usize,
    pub unassigned: usize,
    /// Reclaimed share of all assigned elements; 0 when nothing is
    /// assigned.
    pub reclaimed_ratio: f64,
    pub manual_count: usize,
    pub manual_threshold: f64,
    pub histogram_bin_width: f64,
    /// (bucket lower edge, element count), ascending, empty buckets
    /// omitted.
    pub histogram: Vec<(f64, usize)>,
    pub total_expected_offcut: f64,
}

pub fn allocation_report(
    plan: &CutPlan,
    elements: &[ElementReq],
    histogram_bin_width: f64,
    manual_threshold: f64,
) -> AllocationReport {
    let mut buckets: BTreeMap<i64, usize> = BTreeMap::new();
    let mut manual_count = 0;
    for e in elements {
        // Nudge so lengths sitting on a bucket edge (0.3 / 0.1 is
        // just below 3.0 in floats) land in the upper bucket.
        *buckets.entry((e.length / histogram_bin_width + 1e-9).floor() as i64).or_default() += 1;
        if e.length < manual_threshold {
            manual_count += 1;
        }
    }
    let assigned = plan.reclaimed_count + plan.new_count;
    AllocationReport {
        total_elements: elements.len(),
        reclaimed_count: plan.reclaimed_count,
        new_count: plan.new_count,
        unassigned: plan.unassigned.len(),
        reclaimed_ratio: if assigned == 0 {
            0.0
        } else {
            plan.reclaimed_count as f64 / assigned as f64
        },
        manual_count,
        manual_threshold,
        histogram_bin_width,
        histogram: buckets
            .into_iter()
            .map(|(k, v)| (((k as f64 * histogram_bin_width) * 1e9).round() / 1e9, v))
            .collect(),
        total_expected_offcut: plan.waste_m,
    }
}

/// Reads `bin_id,min_mm,max_mm,qty,provenance` rows. Lengths are
/// millimeters; `qty` accepts `unlimited`/`inf` for new stock.
pub fn parse_inventory_csv(text: &str) -> Result<Vec<InventoryBin>, InventoryError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| InventoryError::CsvParse { line, reason: e.to_string() })?;
        let fail = |reason: String| InventoryError::CsvParse { line, reason };
        if rec.len() != 5 {
            return Err(fail(format!("expected 5 fields, got {}", rec.len())));
        }
        let id: u32 = rec[0].parse().map_err(|_| fail(format!("bad bin_id {:?}", &rec[0])))?;
        let min_mm: f64 = rec[1].parse().map_err(|_| fail(format!("bad min_mm {:?}", &rec[1])))?;
        let max_mm: f64 = rec[2].parse().map_err(|_| fail(format!("bad max_mm {:?}", &rec[2])))?;
        let qty = match &rec[3] {
            "unlimited" | "inf" => None,
            s => Some(s.parse::<u32>().map_err(|_| fail(format!("bad qty {s:?}")))?),
        };
        let provenance = match &rec[4] {
            "reclaimed" => Provenance::Reclaimed,
            "new" => Provenance::New,
            s => return Err(fail(format!("bad provenance {s:?}, want reclaimed|new"))),
        };
        if provenance == Provenance::Reclaimed && qty.is_none() {
            return Err(fail("reclaimed bins need a finite qty".into()));
        }
        let (min_len, max_len) = (min_mm / 1000.0, max_mm / 1000.0);
        if !(min_len > 0.0) || max_len < min_len {
            return Err(fail(format!("invalid range [{min_mm}, {max_mm}] mm")));
        }
        out.push(InventoryBin { id, min_len, max_len, qty, provenance });
    }
    Ok(out)
}

pub fn inventory_csv(bins: &[InventoryBin]) -> String {
    let mut s = String::from("bin_id,min_mm,max_mm,qty,provenance\n");
    for b in bins {
        let qty = b.qty.map_or("unlimited".to_string(), |q| q.to_string());
        let prov = match b.provenance {
            Provenance::Reclaimed => "reclaimed",
            Provenance::New => "new",
        };
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            b.id,
            b.min_len * 1000.0,
            b.max_len * 1000.0,
            qty,
            prov
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn bin(id: u32, min: f64, max: f64, qty: u32) -> InventoryBin {
        InventoryBin::reclaimed(id, min, max, qty).unwrap()
    }

    #[test]
    fn pessimistic_feasibility_falls_through_to_new() {
        let elements = [ElementReq { id: 0, length: 0.45 }];
        let inv = [bin(0, 0.4, 0.5, 10), InventoryBin::new_stock(9, 2.44, None).unwrap()];
        let plan = allocate(&elements, &inv, 0.005, Policy::GreedyBestFit).unwrap();
        assert_eq!(plan.assignments[0].bin_id, 9);
        assert_eq!(plan.reclaimed_count, 0);
        assert_eq!(plan.new_count, 1);

        let only_reclaimed = [bin(0, 0.4, 0.5, 10)];
        let plan = allocate(&elements, &only_reclaimed, 0.005, Policy::GreedyBestFit).unwrap();
        assert_eq!(plan.unassigned, vec![0]);
    }

    #[test]
    fn expected_offcut_uses_range_midpoint() {
        let elements = [ElementReq { id: 0, length: 0.35 }];
        let inv = [bin(0, 0.4, 0.5, 1)];
        let plan = allocate(&elements, &inv, 0.005, Policy::GreedyBestFit).unwrap();
        assert_relative_eq!(plan.assignments[0].expected_offcut, 0.095, epsilon = 1e-12);
        assert_relative_eq!(plan.waste_m, 0.095, epsilon = 1e-12);
    }

    #[test]
    fn greedy_prefers_reclaimed_and_best_fit() {
        let elements = [ElementReq { id: 0, length: 0.30 }];
        let inv = [
            bin(0, 0.4, 0.5, 1),
            bin(1, 0.31, 0.35, 1),
            InventoryBin::new_stock(9, 0.305, None).unwrap(),
        ];
        let plan = allocate(&elements, &inv, 0.004, Policy::GreedyBestFit).unwrap();
        // New stock would leave almost nothing over, but reclaimed
        // wins by policy; among reclaimed the tighter bin wins.
        assert_eq!(plan.assignments[0].bin_id, 1);
    }

    #[test]
    fn greedy_consumes_quantities() {
        let elements =
            [ElementReq { id: 0, length: 0.39 }, ElementReq { id: 1, length: 0.30 }];
        let inv = [bin(0, 0.4, 0.5, 1), InventoryBin::new_stock(9, 2.44, None).unwrap()];
        let plan = allocate(&elements, &inv, 0.004, Policy::GreedyBestFit).unwrap();
        // Longest first takes the single reclaimed board.
        assert_eq!(plan.assignment_for(0).unwrap().bin_id, 0);
        assert_eq!(plan.assignment_for(1).unwrap().bin_id, 9);
    }

    #[test]
    fn exact_rejects_oversized_instances() {
        let elements: Vec<ElementReq> =
            (0..13).map(|i| ElementReq { id: i, length: 0.4 }).collect();
        let inv = [bin(0, 0.5, 0.6, 20)];
        assert!(matches!(
            allocate(&elements, &inv, 0.004, Policy::Exact),
            Err(InventoryError::ExactTooLarge { elements: 13, .. })
        ));
    }

    /// Plain depth-first enumeration of every assignment, the
    /// reference the branch-and-bound must match.
    fn exhaustive_best(
        elements: &[ElementReq],
        inventory: &[InventoryBin],
        kerf: f64,
    ) -> Objective {
        fn rec(
            k: usize,
            elements: &[ElementReq],
            inventory: &[InventoryBin],
            kerf: f64,
            remaining: &mut Vec<Option<u32>>,
            cur: Objective,
            best: &mut Option<Objective>,
        ) {
            if k == elements.len() {
                if best.map_or(true, |b| cur.better_than(&b)) {
                    *best = Some(cur);
                }
                return;
            }
            let e = &elements[k];
            for bi in 0..inventory.len() {
                let b = &inventory[bi];
                if !b.feasible(e.length, kerf) || remaining[bi] == Some(0) {
                    continue;
                }
                if let Some(q) = remaining[bi].as_mut() {
                    *q -= 1;
                }
                let next = Objective {
                    unassigned: cur.unassigned,
                    reclaimed: cur.reclaimed
                        + u32::from(b.provenance == Provenance::Reclaimed),
                    total_score: cur.total_score + expected_offcut_score(b, e.length, kerf),
                };
                rec(k + 1, elements, inventory, kerf, remaining, next, best);
                if let Some(q) = remaining[bi].as_mut() {
                    *q += 1;
                }
            }
            rec(
                k + 1,
                elements,
                inventory,
                kerf,
                remaining,
                Objective { unassigned: cur.unassigned + 1, ..cur },
                best,
            );
        }
        let mut remaining: Vec<Option<u32>> = inventory.iter().map(|b| b.qty).collect();
        let mut best = None;
        rec(
            0,
            elements,
            inventory,
            kerf,
            &mut remaining,
            Objective { unassigned: 0, reclaimed: 0, total_score: 0.0 },
            &mut best,
        );
        best.unwrap()
    }

    fn random_instance(rng: &mut ChaCha12Rng, max_n: usize, max_b: usize) -> (Vec<ElementReq>, Vec<InventoryBin>) {
        let n = rng.random_range(1..=max_n);
        let b = rng.random_range(1..=max_b);
        let elements = (0..n)
            .map(|i| ElementReq { id: i as u32, length: rng.random_range(0.25..1.2) })
            .collect();
        let bins = (0..b)
            .map(|i| {
                if rng.random_range(0..4) == 0 {
                    InventoryBin::new_stock(
                        i as u32,
                        rng.random_range(0.9..2.5),
                        Some(rng.random_range(1..=2)),
                    )
                    .unwrap()
                } else {
                    let lo = rng.random_range(0.2..1.1);
                    bin(i as u32, lo, lo + rng.random_range(0.05..0.3), rng.random_range(1..=2))
                }
            })
            .collect();
        (elements, bins)
    }

    #[test]
    fn exact_matches_exhaustive_on_small_instances() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..50 {
            let (elements, bins) = random_instance(&mut rng, 6, 6);
            let plan = allocate(&elements, &bins, 0.004, Policy::Exact).unwrap();
            let got = plan_objective(&plan);
            let want = exhaustive_best(&elements, &bins, 0.004);
            assert_eq!(got.unassigned, want.unassigned);
            assert_eq!(got.reclaimed, want.reclaimed);
            assert!((got.total_score - want.total_score).abs() < 1e-9, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn offcut_return_rebins_or_wastes() {
        let elements = [ElementReq { id: 0, length: 0.5 }, ElementReq { id: 1, length: 0.6 }];
        let mut inv = vec![bin(0, 0.4, 0.5, 5), InventoryBin::new_stock(9, 2.44, None).unwrap()];
        let plan = allocate(&elements, &inv, 0.004, Policy::GreedyBestFit).unwrap();
        let cuts = [
            // Element 0 cut from a 0.91 m board: offcut 0.406 goes
            // back to the 400..500 mm bin.
            ActualCut { element_id: 0, actual_stock_length: 0.91 },
            // Element 1 from 0.71 m: offcut 0.106 is waste.
            ActualCut { element_id: 1, actual_stock_length: 0.71 },
        ];
        let before_qty = inv[0].qty.unwrap();
        let out = offcut_return(&plan, &elements, &cuts, &mut inv, 0.004, 0.350).unwrap();
        assert_eq!(out[0].fate, OffcutFate::Returned { bin_id: 0 });
        assert_relative_eq!(out[0].offcut, 0.406, epsilon = 1e-12);
        assert_eq!(out[1].fate, OffcutFate::Waste);
        assert_eq!(inv[0].qty.unwrap(), before_qty + 1);
    }

    #[test]
    fn unmatched_offcut_creates_grid_bin() {
        let elements = [ElementReq { id: 0, length: 0.5 }];
        let mut inv = vec![InventoryBin::new_stock(9, 2.44, None).unwrap()];
        let plan = allocate(&elements, &inv, 0.004, Policy::GreedyBestFit).unwrap();
        let cuts = [ActualCut { element_id: 0, actual_stock_length: 2.44 }];
        let out = offcut_return(&plan, &elements, &cuts, &mut inv, 0.004, 0.350).unwrap();
        // Offcut 1.936 lands in a fresh 1.9..2.0 bin.
        let OffcutFate::Returned { bin_id } = out[0].fate else {
            panic!("expected return")
        };
        let b = inv.iter().find(|b| b.id == bin_id).unwrap();
        assert_relative_eq!(b.min_len, 1.9, epsilon = 1e-9);
        assert_relative_eq!(b.max_len, 2.0, epsilon = 1e-9);
        assert_eq!(b.qty, Some(1));
        assert_eq!(b.provenance, Provenance::Reclaimed);
    }

    #[test]
    fn short_stock_for_cut_is_an_error() {
        let elements = [ElementReq { id: 0, length: 0.5 }];
        let mut inv = vec![bin(0, 0.5, 0.6, 5), InventoryBin::new_stock(9, 2.44, None).unwrap()];
        let plan = allocate(&elements, &inv, 0.004, Policy::GreedyBestFit).unwrap();
        let cuts = [ActualCut { element_id: 0, actual_stock_length: 0.5 }];
        assert!(matches!(
            offcut_return(&plan, &elements, &cuts, &mut inv, 0.004, 0.350),
            Err(InventoryError::CutTooShort { element_id: 0, .. })
        ));
    }

    /// Chained cuts from one board, each offcut feeding the next cut:
    /// lengths, kerfs, waste, and the final return must add back to
    /// the original board.
    #[test]
    fn chained_cuts_conserve_material() {
        let kerf = 0.004;
        let board = 2.44;
        let lengths = [0.55, 0.48, 0.42, 0.37, 0.31];
        let mut stock = board;
        let mut consumed = 0.0;
        let mut waste = 0.0;
        let mut returned = 0.0;
        for (i, len) in lengths.iter().enumerate() {
            let elements = [ElementReq { id: i as u32, length: *len }];
            let mut inv = vec![InventoryBin::new_stock(9, stock, Some(1)).unwrap()];
            let plan = allocate(&elements, &inv, kerf, Policy::GreedyBestFit).unwrap();
            let cuts = [ActualCut { element_id: i as u32, actual_stock_length: stock }];
            let out = offcut_return(&plan, &elements, &cuts, &mut inv, kerf, 0.350).unwrap();
            consumed += len + kerf;
            match out[0].fate {
                OffcutFate::Returned { .. } => {
                    stock = out[0].offcut;
                    returned = out[0].offcut;
                }
                OffcutFate::Waste => {
                    waste += out[0].offcut;
                    returned = 0.0;
                    break;
                }
            }
        }
        assert!((consumed + waste + returned - board).abs() < 1e-9);
    }

    #[test]
    fn report_ratio_and_manual_count() {
        let elements = [
            ElementReq { id: 0, length: 0.45 },
            ElementReq { id: 1, length: 0.30 },
            ElementReq { id: 2, length: 0.47 },
        ];
        let inv = [bin(0, 0.5, 0.6, 10)];
        let plan = allocate(&elements, &inv, 0.004, Policy::GreedyBestFit).unwrap();
        let rep = allocation_report(&plan, &elements, 0.1, 0.35);
        assert_eq!(rep.reclaimed_count, 3);
        assert_relative_eq!(rep.reclaimed_ratio, 1.0);
        assert_eq!(rep.manual_count, 1);
        // 0.45 and 0.47 share the 0.4 bucket.
        assert_eq!(rep.histogram, vec![(0.3, 1), (0.4, 2)]);

        let empty = allocate(&[], &inv, 0.004, Policy::GreedyBestFit).unwrap();
        let rep = allocation_report(&empty, &[], 0.1, 0.35);
        assert_eq!(rep.total_elements, 0);
        assert_eq!(rep.reclaimed_ratio, 0.0);
        assert!(rep.histogram.is_empty());
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let bins = vec![
            bin(0, 0.4, 0.5, 120),
            bin(1, 0.5, 0.6, 80),
            InventoryBin::new_stock(9, 2.44, None).unwrap(),
        ];
        let text = inventory_csv(&bins);
        let parsed = parse_inventory_csv(&text).unwrap();
        assert_eq!(parsed, bins);

        let bad = "bin_id,min_mm,max_mm,qty,provenance\n0,400,500,12,salvage\n";
        match parse_inventory_csv(bad) {
            Err(InventoryError::CsvParse { line: 2, reason }) => {
                assert!(reason.contains("salvage"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let unlimited_reclaimed = "bin_id,min_mm,max_mm,qty,provenance\n0,400,500,inf,reclaimed\n";
        assert!(parse_inventory_csv(unlimited_reclaimed).is_err());
    }

    proptest! {
        /// Greedy plans are well-formed: injective, within quantities,
        /// non-negative offcuts, and never new stock while a feasible
        /// reclaimed board remains at the end.
        #[test]
        fn greedy_plan_is_well_formed(seed in 0u64..300) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let (elements, bins) = random_instance(&mut rng, 10, 8);
            let plan = allocate(&elements, &bins, 0.004, Policy::GreedyBestFit).unwrap();

            let mut seen = std::collections::BTreeSet::new();
            let mut used: BTreeMap<u32, u32> = BTreeMap::new();
            for a in &plan.assignments {
                prop_assert!(seen.insert(a.element_id));
                prop_assert!(a.expected_offcut >= -1e-12);
                *used.entry(a.bin_id).or_default() += 1;
            }
            for b in &bins {
                if let Some(q) = b.qty {
                    prop_assert!(used.get(&b.id).copied().unwrap_or(0) <= q);
                }
            }
            prop_assert_eq!(
                plan.assignments.len() + plan.unassigned.len(),
                elements.len()
            );
            prop_assert_eq!(plan.reclaimed_count + plan.new_count, plan.assignments.len());
        }

        /// Exact is never worse than greedy on the shared objective.
        #[test]
        fn exact_dominates_greedy(seed in 0u64..150) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xa5a5);
            let (elements, bins) = random_instance(&mut rng, 7, 7);
            let g = plan_objective(&allocate(&elements, &bins, 0.004, Policy::GreedyBestFit).unwrap());
            let x = plan_objective(&allocate(&elements, &bins, 0.004, Policy::Exact).unwrap());
            prop_assert!(!g.better_than(&x), "greedy {g:?} beat exact {x:?}");
        }
    }
}
