//! Minimal SVG line charts of experiment tables. CSV stays the contract; these are a
//! convenience for eyeballing a run.

use std::fmt::Write as _;

use crate::output::{Report, Table};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// One named polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Renders `series` on shared linear axes.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let finite = series
        .iter()
        .flat_map(|s| &s.points)
        .filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<polyline points="{m},{t} {m},{b} {r},{b}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{xv:.3}</text>"#,
            px(xv),
            HEIGHT - MARGIN + 16.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{yv:.3}</text>"#,
            MARGIN - 6.0,
            py(yv) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">{}</text>"#,
        escape(y_label),
        y = HEIGHT / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly:.1}" fill="{color}" text-anchor="end">{}</text>"#,
            WIDTH - MARGIN,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Rows of `table` whose `key` column equals `value`, as `(x, y)` pairs of two numeric columns.
fn pairs(table: &Table, key: Option<(&str, &str)>, x: &str, y: &str) -> Vec<(f64, f64)> {
    let idx = |c: &str| table.columns.iter().position(|n| n == c);
    let (Some(xi), Some(yi)) = (idx(x), idx(y)) else {
        return Vec::new();
    };
    let filter = key.and_then(|(k, v)| idx(k).map(|i| (i, v)));
    table
        .rows
        .iter()
        .filter(|r| filter.map_or(true, |(i, v)| r[i] == v))
        .filter_map(|r| Some((r[xi].parse().ok()?, r[yi].parse().ok()?)))
        .collect()
}

fn distinct(table: &Table, column: &str) -> Vec<String> {
    let Some(i) = table.columns.iter().position(|n| n == column) else {
        return Vec::new();
    };
    let mut out: Vec<String> = Vec::new();
    for r in &table.rows {
        if !out.contains(&r[i]) {
            out.push(r[i].clone());
        }
    }
    out
}

/// Empirical CDF of `|est - truth|` (or of an error column) per method.
fn error_cdf(
    table: &Table,
    error: impl Fn(&[(f64, f64)]) -> Vec<f64>,
    x: &str,
    y: &str,
) -> Vec<Series> {
    distinct(table, "method")
        .into_iter()
        .map(|m| {
            let mut e = error(&pairs(table, Some(("method", &m)), x, y));
            e.sort_by(f64::total_cmp);
            let n = e.len() as f64;
            Series {
                points: e
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (v, (i + 1) as f64 / n))
                    .collect(),
                name: m,
            }
        })
        .collect()
}

fn abs_error(p: &[(f64, f64)]) -> Vec<f64> {
    p.iter().map(|(t, e)| (e - t).abs()).collect()
}

/// Charts for the experiments that have a natural one, as `(file name, svg)`.
pub fn charts(experiment: &str, report: &Report) -> Vec<(String, String)> {
    let t = |f: &str| report.table(f);
    let mut out = Vec::new();
    match experiment {
        "ranging" => {
            if let Some(tab) = t("ranging.csv") {
                let s = error_cdf(tab, abs_error, "truth_range_m", "est_range_m");
                out.push((
                    "ranging_cdf.svg",
                    line_chart("Ranging error", "error (m)", "CDF", &s),
                ));
            }
        }
        "velocity" => {
            if let Some(tab) = t("velocity.csv") {
                let s = error_cdf(tab, abs_error, "truth_velocity_mps", "est_velocity_mps");
                out.push((
                    "velocity_cdf.svg",
                    line_chart("Velocity error", "error (m/s)", "CDF", &s),
                ));
            }
        }
        "localization" => {
            if let Some(tab) = t("localization.csv") {
                let s = error_cdf(tab, |p| p.iter().map(|q| q.1).collect(), "trial", "error_m");
                out.push((
                    "localization_cdf.svg",
                    line_chart("Localization error", "error (m)", "CDF", &s),
                ));
            }
        }
        "los-dominance" => {
            if let Some(tab) = t("los_dominance.csv") {
                let s = vec![
                    Series {
                        name: "model".into(),
                        points: pairs(tab, None, "offset_m", "model_ratio_db"),
                    },
                    Series {
                        name: "simulated".into(),
                        points: pairs(tab, None, "offset_m", "simulated_ratio_db"),
                    },
                ];
                out.push((
                    "los_dominance.svg",
                    line_chart(
                        "Reflection to direct power",
                        "offset from link (m)",
                        "ratio (dB)",
                        &s,
                    ),
                ));
            }
        }
        "phase-offsets" => {
            if let Some(tab) = t("phase_offsets.csv") {
                let s: Vec<Series> = ["bistatic", "monostatic"]
                    .iter()
                    .map(|link| Series {
                        name: link.to_string(),
                        points: pairs(tab, Some(("link", link)), "symbol", "phase_rad")
                            .into_iter()
                            .enumerate()
                            .map(|(i, (_, phase))| (i as f64, phase))
                            .collect(),
                    })
                    .collect();
                out.push((
                    "phase_offsets.svg",
                    line_chart("CSI phase of one subcarrier", "sample", "phase (rad)", &s),
                ));
            }
        }
        "cancellation-budget" => {
            if let Some(tab) = t("cancellation_budget.csv") {
                let s: Vec<Series> = ["first_stage_db", "analog_db", "digital_db", "total_db"]
                    .iter()
                    .map(|c| Series {
                        name: c.to_string(),
                        points: pairs(tab, None, "scene", c),
                    })
                    .collect();
                out.push((
                    "cancellation_budget.svg",
                    line_chart("Leakage suppression", "scene", "dB", &s),
                ));
            }
        }
        "stft-irregular" => {
            if let Some(tab) = t("stft_spectrogram.csv") {
                let s: Vec<Series> = distinct(tab, "method")
                    .into_iter()
                    .map(|m| {
                        let times = pairs(tab, Some(("method", &m)), "time_s", "freq_hz");
                        let powers = pairs(tab, Some(("method", &m)), "freq_hz", "power");
                        let mut peaks: Vec<(f64, f64, f64)> = Vec::new();
                        for ((time, freq), (_, power)) in times.into_iter().zip(powers) {
                            match peaks.last_mut() {
                                Some(last) if last.0 == time => {
                                    if power > last.2 {
                                        *last = (time, freq, power);
                                    }
                                }
                                _ => peaks.push((time, freq, power)),
                            }
                        }
                        Series {
                            name: m,
                            points: peaks.into_iter().map(|(t, f, _)| (t, f)).collect(),
                        }
                    })
                    .collect();
                out.push((
                    "stft_peaks.svg",
                    line_chart(
                        "Strongest Doppler per frame",
                        "time (s)",
                        "Doppler (Hz)",
                        &s,
                    ),
                ));
            }
        }
        _ => {}
    }
    out.into_iter().map(|(f, s)| (f.to_string(), s)).collect()
}
