use std::fmt::Write as _;

use anyhow::{Context, Result};

use neuroeval_core::protocols::{Difficulty, Technique};
use neuroeval_core::session::{load_events, Construct, LevelSpan};

use crate::calibrate::{calibrated_config, stage_manifest};
use crate::common::{read_csv, GAMES};
use crate::evaluate::{load_error_proportions, load_index_summaries};
use crate::layout::{participant_tag, StudyLayout, REPORT};
use neuroeval_core::stats::{mean, sample_sd};

pub const SMOOTHING_SEC: f64 = 60.0;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 300.0;
const MARGIN: f64 = 50.0;

/// Mean of the values whose timestamps fall in `(t_i - window, t_i]`.
pub fn trailing_mean(t: &[f64], v: &[f64], window_sec: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut start = 0;
    let mut sum = 0.0;
    for i in 0..t.len() {
        sum += v[i];
        while t[start] <= t[i] - window_sec {
            sum -= v[start];
            start += 1;
        }
        out.push(sum / (i + 1 - start) as f64);
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn level_fill(d: &str) -> &'static str {
    match d.parse::<Difficulty>() {
        Ok(Difficulty::Easy) => "#e3f2e1",
        Ok(Difficulty::Medium) => "#fdf3d0",
        Ok(Difficulty::Hard) => "#fde0c5",
        Ok(Difficulty::Ultra) => "#f8cfcf",
        Err(_) => "#eeeeee",
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
}

/// Index in `[-1, 1]` over time, one shaded band per level.
pub fn timeseries_svg(title: &str, t: &[f64], v: &[f64], spans: &[LevelSpan], duration_sec: f64) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let dur = duration_sec.max(t.last().copied().unwrap_or(0.0)).max(1.0);
    let x = |s: f64| MARGIN + s / dur * (WIDTH - 2.0 * MARGIN);
    let y = |val: f64| MARGIN + (1.0 - val) / 2.0 * (HEIGHT - 2.0 * MARGIN);
    for s in spans {
        let _ = writeln!(
            out,
            r#"<rect class="level" data-difficulty="{}" x="{:.2}" y="{MARGIN}" width="{:.2}" height="{}" fill="{}"/>"#,
            escape(&s.difficulty),
            x(s.start_sec),
            (x(s.end_sec) - x(s.start_sec)).max(0.0),
            HEIGHT - 2.0 * MARGIN,
            level_fill(&s.difficulty)
        );
    }
    for (val, label) in [(1.0, "+1"), (0.0, "0"), (-1.0, "-1")] {
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#bbbbbb" stroke-width="0.5"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{label}</text>"##,
            y(val),
            WIDTH - MARGIN,
            y(val),
            MARGIN - 4.0,
            y(val) + 3.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">time (s)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    if !t.is_empty() {
        let pts: Vec<String> = t.iter().zip(v).map(|(a, b)| format!("{:.2},{:.2}", x(*a), y(*b))).collect();
        let _ = writeln!(out, r##"<polyline fill="none" stroke="#1f4e9c" stroke-width="1.2" points="{}"/>"##, pts.join(" "));
    }
    out.push_str("</svg>\n");
    out
}

/// Bars with one-SD whiskers on a `[lo, hi]` axis.
pub fn bars_svg(title: &str, labels: &[String], means: &[f64], sds: &[f64], lo: f64, hi: f64) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let n = labels.len().max(1) as f64;
    let slot = (WIDTH - 2.0 * MARGIN) / n;
    let y = |val: f64| MARGIN + (hi - val.clamp(lo, hi)) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);
    let base = y(lo.max(0.0).min(hi));
    let _ = writeln!(out, r##"<line x1="{MARGIN}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="#444444"/>"##, WIDTH - MARGIN);
    for (i, label) in labels.iter().enumerate() {
        let cx = MARGIN + slot * (i as f64 + 0.5);
        let top = y(means[i]);
        let _ = writeln!(
            out,
            r##"<rect class="bar" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#6d8fc7"/>"##,
            cx - slot * 0.35,
            top.min(base),
            slot * 0.7,
            (top - base).abs()
        );
        if sds[i].is_finite() {
            let _ = writeln!(
                out,
                r##"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="#222222"/>"##,
                y(means[i] - sds[i]),
                y(means[i] + sds[i])
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{:.2}" font-family="sans-serif" font-size="9" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN + 14.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn write(path: &std::path::Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Smoothed workload timelines per participant and game, plus per-condition
/// bar charts for every scored construct.
pub fn cmd_report(layout: &StudyLayout) -> Result<Vec<std::path::PathBuf>> {
    let ids = layout.participants()?;
    let dir = layout.ensure_dir(REPORT)?;
    let mut written = Vec::new();
    for &id in &ids {
        for g in GAMES {
            let ip = layout.index(id, g, Construct::Workload);
            if !ip.is_file() {
                continue;
            }
            let (_, rows) = read_csv(&ip)?;
            let t: Vec<f64> = rows.iter().map(|r| r[0].parse()).collect::<std::result::Result<_, _>>()?;
            let v: Vec<f64> = rows.iter().map(|r| r[1].parse()).collect::<std::result::Result<_, _>>()?;
            let log = load_events(layout.events(id, g))?;
            let smooth = trailing_mean(&t, &v, SMOOTHING_SEC);
            let title = format!("{} {} workload index ({SMOOTHING_SEC:.0} s trailing mean)", participant_tag(id), g.as_str());
            let path = dir.join(format!("{}_{}_workload.svg", participant_tag(id), g.as_str()));
            write(&path, &timeseries_svg(&title, &t, &smooth, &log.level_spans(), log.last_time()))?;
            written.push(path);
        }
    }
    let mut labels = Vec::new();
    for t in Technique::ALL {
        for d in Difficulty::ALL {
            labels.push(format!("{} {}", t.as_str(), d.as_str()));
        }
    }
    for c in [Construct::Workload, Construct::Attention] {
        if !ids.iter().all(|&id| GAMES.iter().all(|&g| layout.index(id, g, c).is_file())) {
            continue;
        }
        let s = load_index_summaries(layout, &ids, c)?;
        let mut means = Vec::new();
        let mut sds = Vec::new();
        for t in Technique::ALL {
            for d in Difficulty::ALL {
                let xs: Vec<f64> = s.iter().map(|x| x.by_level[t.index()][d.index()]).collect();
                means.push(mean(&xs));
                sds.push(sample_sd(&xs));
            }
        }
        let path = dir.join(format!("{}_means.svg", c.as_str()));
        write(&path, &bars_svg(&format!("mean {c} index by condition"), &labels, &means, &sds, -1.0, 1.0))?;
        written.push(path);
    }
    if ids.iter().all(|&id| layout.error_counts(id).is_file()) {
        let p = load_error_proportions(layout, &ids)?;
        let cols: Vec<Vec<f64>> = (0..2).map(|k| p.iter().map(|x| x[k]).collect()).collect();
        let path = dir.join("error_means.svg");
        write(
            &path,
            &bars_svg(
                "proportion of interactions labeled erroneous",
                &Technique::ALL.iter().map(|t| t.as_str().to_string()).collect::<Vec<_>>(),
                &cols.iter().map(|c| mean(c)).collect::<Vec<_>>(),
                &cols.iter().map(|c| sample_sd(c)).collect::<Vec<_>>(),
                0.0,
                0.5,
            ),
        )?;
        written.push(path);
    }
    stage_manifest(layout, "report", REPORT, &calibrated_config(layout)?)?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trailing_mean_uses_half_open_window() {
        let t = [0.0, 30.0, 60.0, 61.0, 200.0];
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        let m = trailing_mean(&t, &v, 60.0);
        assert_eq!(m, vec![1.0, 1.5, 2.5, 3.0, 5.0]);
    }

    #[test]
    fn constant_input_stays_constant() {
        let t: Vec<f64> = (0..500).map(f64::from).collect();
        let m = trailing_mean(&t, &vec![0.25; 500], 60.0);
        assert!(m.iter().all(|&x| (x - 0.25).abs() < 1e-12));
    }
}
