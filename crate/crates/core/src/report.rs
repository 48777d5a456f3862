//! Run report: an element-length histogram as a standalone SVG, a
//! key/value metrics CSV, and a plain-text summary. Everything is
//! generated from in-memory run state with stable formatting, so a
//! repeated run reproduces the report byte for byte.

use std::fmt::Write as _;

use crate::config::PipelineConfig;
use crate::layout::CutMode;
use crate::pipeline::PipelineRun;

pub const HISTOGRAM_BIN_WIDTH: f64 = 0.1;

#[derive(Debug)]
pub struct ReportBundle {
    pub histogram_svg: String,
    pub metrics_csv: String,
    pub summary: String,
}

pub fn build_report(config: &PipelineConfig, run: &PipelineRun) -> ReportBundle {
    let lengths: Vec<f64> = run
        .layers
        .iter()
        .flat_map(|l| &l.elements)
        .map(|e| e.length)
        .collect();
    let hist = length_histogram(&lengths, HISTOGRAM_BIN_WIDTH);
    ReportBundle {
        histogram_svg: histogram_svg(&hist, HISTOGRAM_BIN_WIDTH),
        metrics_csv: metrics_csv(run),
        summary: summary_text(config, run),
    }
}

/// Counts lengths into `bin_width` buckets. Buckets between the first
/// and last occupied one are kept even when empty, so the bars sit on
/// a contiguous axis; the counts always sum to `lengths.len()`.
pub fn length_histogram(lengths: &[f64], bin_width: f64) -> Vec<(f64, usize)> {
    assert!(bin_width > 0.0, "bin width must be positive");
    if lengths.is_empty() {
        return Vec::new();
    }
    // Same edge nudge as the allocation report: a length sitting on a
    // bucket boundary belongs to the upper bucket.
    let bucket = |len: f64| (len / bin_width + 1e-9).floor() as i64;
    let lo = lengths.iter().copied().map(bucket).min().unwrap();
    let hi = lengths.iter().copied().map(bucket).max().unwrap();
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for l in lengths {
        counts[(bucket(*l) - lo) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| ((((lo + i as i64) as f64) * bin_width * 1e9).round() / 1e9, c))
        .collect()
}

/// Renders the histogram as a self-contained SVG. An empty histogram
/// still yields a valid document stating there is nothing to plot.
pub fn histogram_svg(hist: &[(f64, usize)], bin_width: f64) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(s, "  <rect width=\"{W}\" height=\"{H}\" fill=\"#ffffff\"/>");
    let _ = writeln!(
        s,
        "  <text x=\"{:.1}\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\">element length distribution (bin {bin_width} m)</text>",
        W / 2.0
    );
    if hist.is_empty() {
        let _ = writeln!(
            s,
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"12\" fill=\"#666666\">no elements</text>",
            W / 2.0,
            H / 2.0
        );
        s.push_str("</svg>\n");
        return s;
    }

    let (left, right, top, bottom) = (52.0, 16.0, 34.0, 42.0);
    let plot_w = W - left - right;
    let plot_h = H - top - bottom;
    let max = hist.iter().map(|(_, c)| *c).max().unwrap().max(1);
    let bar_w = plot_w / hist.len() as f64;

    let _ = writeln!(
        s,
        "  <line x1=\"{left}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#222222\"/>",
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    let _ = writeln!(
        s,
        "  <line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{:.2}\" stroke=\"#222222\"/>",
        top + plot_h
    );
    let _ = writeln!(
        s,
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" \
         font-size=\"11\">{max}</text>",
        left - 6.0,
        top + 4.0
    );
    let _ = writeln!(
        s,
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" \
         font-size=\"11\">0</text>",
        left - 6.0,
        top + plot_h + 4.0
    );

    for (i, (edge, count)) in hist.iter().enumerate() {
        let h = plot_h * (*count as f64) / (max as f64);
        let x = left + bar_w * i as f64;
        let y = top + plot_h - h;
        let _ = writeln!(
            s,
            "  <rect class=\"bar\" x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"#4a7a8c\"><title>{edge} m: {count}</title></rect>",
            x + 1.0,
            y,
            (bar_w - 2.0).max(0.5),
            h
        );
        let _ = writeln!(
            s,
            "  <text x=\"{:.2}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"10\">{edge}</text>",
            x,
            top + plot_h + 14.0
        );
    }
    let last_edge = (hist.last().unwrap().0 * 1e9 + bin_width * 1e9).round() / 1e9;
    let _ = writeln!(
        s,
        "  <text x=\"{:.2}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"10\">{last_edge}</text>",
        left + plot_w,
        top + plot_h + 14.0
    );
    let _ = writeln!(
        s,
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"11\">length (m)</text>",
        left + plot_w / 2.0,
        H - 8.0
    );
    s.push_str("</svg>\n");
    s
}

fn element_counts(run: &PipelineRun) -> (usize, usize, usize, f64) {
    let mut manual = 0;
    let mut robotic = 0;
    let mut timber = 0.0;
    for e in run.layers.iter().flat_map(|l| &l.elements) {
        match e.cut_mode {
            CutMode::Manual => manual += 1,
            CutMode::Robotic => robotic += 1,
        }
        timber += e.length;
    }
    (manual + robotic, manual, robotic, timber)
}

pub fn metrics_csv(run: &PipelineRun) -> String {
    let (elements, manual, robotic, timber) = element_counts(run);
    let mut s = String::from("key,value\n");
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k},{v}");
    };
    kv("layers", run.layers.len().to_string());
    kv("contours", run.contours.len().to_string());
    kv("elements", elements.to_string());
    kv("manual_elements", manual.to_string());
    kv("robotic_elements", robotic.to_string());
    kv("total_timber_m", timber.to_string());
    kv("overlaps", run.overlaps.len().to_string());
    kv("nails", run.nails.len().to_string());
    kv("clearance_violations", run.clearance_violations.len().to_string());
    kv("subassemblies", run.subassemblies.len().to_string());
    match &run.plan {
        Some(p) => {
            kv("reclaimed", p.reclaimed_count.to_string());
            kv("new", p.new_count.to_string());
            kv("unassigned", p.unassigned.len().to_string());
            let assigned = p.reclaimed_count + p.new_count;
            let ratio =
                if assigned == 0 { 0.0 } else { p.reclaimed_count as f64 / assigned as f64 };
            kv("reclaimed_ratio", ratio.to_string());
            kv("expected_offcut_m", p.waste_m.to_string());
        }
        None => {
            kv("reclaimed", "0".into());
            kv("new", "0".into());
            kv("unassigned", "0".into());
            kv("reclaimed_ratio", "0".into());
            kv("expected_offcut_m", "0".into());
        }
    }
    kv("fab_runs", run.fab.len().to_string());
    kv(
        "fab_aborted",
        run.fab.iter().filter(|(_, f)| f.log.aborted.is_some()).count().to_string(),
    );
    let sum =
        |f: fn(&crate::fabsim::FabSummary) -> f64| -> f64 {
            run.fab.iter().map(|(_, r)| f(&r.log.summary)).sum()
        };
    kv(
        "fab_need_material_events",
        run.fab
            .iter()
            .map(|(_, r)| r.log.summary.need_material_events)
            .sum::<u32>()
            .to_string(),
    );
    kv("fab_consumed_m", sum(|s| s.consumed_stock_m).to_string());
    kv("fab_kerf_m", sum(|s| s.kerf_m).to_string());
    kv("fab_waste_m", sum(|s| s.waste_m).to_string());
    kv("fab_returned_m", sum(|s| s.returned_m).to_string());
    kv("warnings", run.warnings.len().to_string());
    s
}

pub fn summary_text(config: &PipelineConfig, run: &PipelineRun) -> String {
    let (elements, manual, robotic, timber) = element_counts(run);
    let mut s = String::new();
    let _ = writeln!(s, "assembly summary");
    let _ = writeln!(s, "================");
    let _ = writeln!(s, "seed:              {}", config.seed);
    let _ = writeln!(s, "layers:            {}", run.layers.len());
    let _ = writeln!(s, "contours:          {}", run.contours.len());
    let _ = writeln!(s, "elements:          {elements} ({manual} manual, {robotic} robotic)");
    let _ = writeln!(s, "total timber:      {timber:.3} m");
    let _ = writeln!(s, "overlaps:          {}", run.overlaps.len());
    let _ = writeln!(s, "nails:             {}", run.nails.len());
    let _ = writeln!(s, "clearance issues:  {}", run.clearance_violations.len());
    let _ = writeln!(s, "subassemblies:     {}", run.subassemblies.len());
    for sub in &run.subassemblies {
        let parent = match sub.parent {
            Some(p) => format!(" (split from {p})"),
            None => String::new(),
        };
        let _ = writeln!(
            s,
            "  sub {}: layers {}-{}, {:.1} kg, box {:.2} x {:.2} x {:.2} m{parent}",
            sub.id, sub.layer_from, sub.layer_to, sub.weight_kg, sub.extents[0], sub.extents[1],
            sub.extents[2]
        );
    }
    match &run.plan {
        Some(p) => {
            let assigned = p.reclaimed_count + p.new_count;
            let ratio =
                if assigned == 0 { 0.0 } else { 100.0 * p.reclaimed_count as f64 / assigned as f64 };
            let _ = writeln!(s, "stock:");
            let _ = writeln!(
                s,
                "  reclaimed {} / new {} / unassigned {} ({ratio:.1}% reclaimed)",
                p.reclaimed_count,
                p.new_count,
                p.unassigned.len()
            );
            let _ = writeln!(s, "  expected offcut {:.3} m", p.waste_m);
        }
        None => {
            let _ = writeln!(s, "stock:             not allocated");
        }
    }
    if run.fab.is_empty() {
        let _ = writeln!(s, "simulation:        not run");
    } else {
        let _ = writeln!(s, "simulation:        {} run(s)", run.fab.len());
        for (id, fab) in &run.fab {
            let sm = &fab.log.summary;
            let status = match &fab.log.aborted {
                Some(reason) => format!("aborted: {reason}"),
                None => "complete".to_string(),
            };
            let _ = writeln!(
                s,
                "  sub {id}: {} element(s), {} refill event(s), consumed {:.3} m, \
                 waste {:.3} m, returned {:.3} m, final-layer gap {:.2} mm, {status}",
                sm.elements,
                sm.need_material_events,
                sm.consumed_stock_m,
                sm.waste_m,
                sm.returned_m,
                1000.0 * fab.final_layer_gap()
            );
        }
    }
    if run.warnings.is_empty() {
        let _ = writeln!(s, "warnings:          none");
    } else {
        let _ = writeln!(s, "warnings:          {}", run.warnings.len());
        for w in &run.warnings {
            let _ = writeln!(s, "  - {w}");
        }
    }
    s
}
