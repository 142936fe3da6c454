//! Result files: power CSV, run manifest and an optional SVG chart.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::run::{ScenarioReport, Variant};
use crate::harness::scenario::Scenario;

pub const CSV_HEADER: &str = "delta_star,variant,power,mc_se,replications";

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NA".into()
    } else {
        format!("{x:.6}")
    }
}

pub fn results_csv(report: &ScenarioReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.delta_star,
            r.variant.name(),
            fmt_num(r.power),
            fmt_num(r.monte_carlo_se),
            r.replications
        );
    }
    out
}

/// Resolved parameters, seed and per-row diagnostics. Contains nothing that
/// depends on the thread count.
pub fn manifest(scenario: &Scenario, report: &ScenarioReport) -> Result<String> {
    let mut out = String::from("# resolved scenario\n");
    out.push_str(&scenario.to_text());
    out.push_str("\n# resolved trait models\n");
    for (i, spec) in scenario.trait_specs()?.iter().enumerate() {
        let _ = writeln!(out, "trait_{} = {:?}", i + 1, spec);
    }
    out.push_str("\n# diagnostics: delta_star variant tested failed nonconverged\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "diag = {} {} {} {} {}",
            r.delta_star,
            r.variant.name(),
            r.replications,
            r.failures,
            r.nonconverged
        );
    }
    for (s, n) in &report.strategy_counts {
        let _ = writeln!(out, "strategy_used = {} {}", s.name(), n);
    }
    let _ = writeln!(out, "dropped_offspring = {}", report.dropped_offspring);
    Ok(out)
}

/// Power against δ* for the three variants, with ±2 SE whiskers.
pub fn power_svg(scenario: &Scenario, report: &ScenarioReport) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (60.0, 150.0, 30.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let (xmin, xmax) = scenario
        .delta_stars
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let span = if xmax > xmin { xmax - xmin } else { 1.0 };
    let sx = |x: f64| left + (x - xmin) / span * pw;
    let sy = |y: f64| top + (1.0 - y.clamp(0.0, 1.0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        left + pw / 2.0,
        escape(&scenario.name)
    );
    for i in 0..=5 {
        let y = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{left}" x2="{0}" y1="{1:.1}" y2="{1:.1}" stroke="#ddd"/><text x="{2}" y="{3:.1}" text-anchor="end">{4:.1}</text>"##,
            left + pw,
            sy(y),
            left - 6.0,
            sy(y) + 4.0,
            y
        );
    }
    for &x in &scenario.delta_stars {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            sx(x),
            top + ph + 18.0,
            x
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">normalized LD (delta*)</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {}) rotate(-90)" text-anchor="middle">power</text>"#,
        top + ph / 2.0
    );

    let colors = [(Variant::NoMissing, "green"), (Variant::Imputed, "blue"), (Variant::Deleted, "red")];
    for (li, (variant, color)) in colors.iter().enumerate() {
        let pts: Vec<_> = report
            .rows
            .iter()
            .filter(|r| r.variant == *variant && !r.power.is_nan())
            .collect();
        let path: Vec<String> = pts
            .iter()
            .map(|r| format!("{:.1},{:.1}", sx(r.delta_star), sy(r.power)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for r in &pts {
            let (x, lo, hi) = (
                sx(r.delta_star),
                sy(r.power - 2.0 * r.monte_carlo_se),
                sy(r.power + 2.0 * r.monte_carlo_se),
            );
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.1}" cy="{:.1}" r="3" fill="{color}"/><line x1="{x:.1}" x2="{x:.1}" y1="{lo:.1}" y2="{hi:.1}" stroke="{color}"/>"#,
                sy(r.power)
            );
        }
        let ly = top + 10.0 + 20.0 * li as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" x2="{1}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{2}" y="{3}">{4}</text>"#,
            left + pw + 12.0,
            left + pw + 36.0,
            left + pw + 42.0,
            ly + 4.0,
            variant.name()
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// File names written by [`write_results`].
pub const RESULTS_FILE: &str = "power.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const CHART_FILE: &str = "power.svg";

/// Writes the CSV and manifest (and the chart if `svg`) into `dir`,
/// creating it when needed.
pub fn write_results(dir: &Path, scenario: &Scenario, report: &ScenarioReport, svg: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(path, e))
    };
    write(RESULTS_FILE, results_csv(report))?;
    write(MANIFEST_FILE, manifest(scenario, report)?)?;
    if svg {
        write(CHART_FILE, power_svg(scenario, report))?;
    }
    Ok(())
}
