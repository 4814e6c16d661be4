use anyhow::{bail, Result};

use neuroeval_core::constructs::{summarize_indices, ConditionSummary, IndexSeries};
use neuroeval_core::protocols::{Difficulty, Technique};
use neuroeval_core::session::{load_events, Construct};
use neuroeval_core::stats::{fdr_bh, mean, paired_t, rm_anova_two, sample_sd, wilcoxon_signed_rank, PairedSample, Tail};

use crate::calibrate::{calibrated_config, stage_manifest};
use crate::common::{num, read_csv, write_csv, GAMES};
use crate::layout::{participant_tag, StudyLayout, REPORT};

pub const FDR_Q: f64 = 0.05;

/// One line of the long-format evaluation table.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub construct: String,
    pub analysis: &'static str,
    pub term: String,
    pub statistic: &'static str,
    pub value: String,
}

impl Row {
    fn new(construct: &str, analysis: &'static str, term: impl Into<String>, statistic: &'static str, value: impl Into<String>) -> Self {
        Self {
            construct: construct.into(),
            analysis,
            term: term.into(),
            statistic,
            value: value.into(),
        }
    }

    /// Numeric value, `None` for `NA` or non-numeric cells.
    pub fn number(&self) -> Option<f64> {
        self.value.parse().ok()
    }
}

pub fn find<'a>(rows: &'a [Row], construct: &str, analysis: &str, term: &str, statistic: &str) -> Option<&'a Row> {
    rows.iter()
        .find(|r| r.construct == construct && r.analysis == analysis && r.term == term && r.statistic == statistic)
}

fn cell(t: Technique, d: Difficulty) -> String {
    format!("{}:{}", t.as_str(), d.as_str())
}

/// Per-participant condition means of one index construct.
pub fn load_index_summaries(layout: &StudyLayout, ids: &[usize], c: Construct) -> Result<Vec<ConditionSummary>> {
    let mut needed = Vec::new();
    for &id in ids {
        for g in GAMES {
            needed.push((id, layout.index(id, g, c)));
            needed.push((id, layout.events(id, g)));
        }
    }
    layout.require(&needed)?;
    let mut out = Vec::with_capacity(ids.len());
    let mut missing = Vec::new();
    for &id in ids {
        let mut series = Vec::with_capacity(2);
        let mut logs = Vec::with_capacity(2);
        for g in GAMES {
            let (_, rows) = read_csv(&layout.index(id, g, c))?;
            let mut s = IndexSeries {
                construct: c,
                t_sec: Vec::with_capacity(rows.len()),
                values: Vec::with_capacity(rows.len()),
                removed: 0,
            };
            for r in rows {
                if r.len() != 2 {
                    bail!("{}: malformed row {r:?}", layout.index(id, g, c).display());
                }
                s.t_sec.push(r[0].parse()?);
                s.values.push(r[1].parse()?);
            }
            series.push(s);
            logs.push(load_events(layout.events(id, g))?);
        }
        let summary = summarize_indices(&[series[0].clone(), series[1].clone()], [&logs[0], &logs[1]]);
        for t in Technique::ALL {
            for d in Difficulty::ALL {
                if !summary.by_level[t.index()][d.index()].is_finite() {
                    missing.push(format!("{} x {}", participant_tag(id), cell(t, d)));
                }
            }
        }
        out.push(summary);
    }
    if !missing.is_empty() {
        bail!("incomplete {c} design, no index values for:\n  {}", missing.join("\n  "));
    }
    Ok(out)
}

/// Error proportions per participant, `[keyboard, touch]`.
pub fn load_error_proportions(layout: &StudyLayout, ids: &[usize]) -> Result<Vec<[f64; 2]>> {
    let needed: Vec<_> = ids.iter().map(|&id| (id, layout.error_counts(id))).collect();
    layout.require(&needed)?;
    ids.iter()
        .map(|&id| {
            let (_, rows) = read_csv(&layout.error_counts(id))?;
            let mut p = [f64::NAN; 2];
            for r in rows {
                if let Some(k) = GAMES.iter().position(|g| g.as_str() == r[0]) {
                    p[k] = r[3].parse()?;
                }
            }
            if p.iter().any(|v| !v.is_finite()) {
                bail!("{}: error counts lack a game session", participant_tag(id));
            }
            Ok(p)
        })
        .collect()
}

fn mean_sd_rows(rows: &mut Vec<Row>, c: &str, term: String, xs: &[f64]) {
    rows.push(Row::new(c, "means", term.clone(), "mean", num(mean(xs))));
    rows.push(Row::new(c, "means", term, "sd", num(sample_sd(xs))));
}

fn t_rows(rows: &mut Vec<Row>, c: &str, analysis: &'static str, terms: Vec<String>, pairs: Vec<(Vec<f64>, Vec<f64>)>) -> Result<()> {
    let tests: Vec<_> = pairs
        .into_iter()
        .map(|(a, b)| PairedSample::new(a, b).and_then(|s| paired_t(&s)).ok())
        .collect();
    let ps: Vec<f64> = tests.iter().map(|t| t.as_ref().map_or(1.0, |t| t.p)).collect();
    let fdr = fdr_bh(&ps, FDR_Q);
    for (k, term) in terms.into_iter().enumerate() {
        match &tests[k] {
            Some(t) => {
                rows.push(Row::new(c, analysis, term.clone(), "t", num(t.t)));
                rows.push(Row::new(c, analysis, term.clone(), "df", num(t.df)));
                rows.push(Row::new(c, analysis, term.clone(), "p", num(t.p)));
                rows.push(Row::new(c, analysis, term.clone(), "p_fdr", num(fdr.adjusted[k])));
                rows.push(Row::new(c, analysis, term, "rejected", fdr.rejected[k].to_string()));
            }
            None => rows.push(Row::new(c, analysis, term, "t", "NA")),
        }
    }
    Ok(())
}

/// Condition means, technique x difficulty ANOVA and FDR-corrected
/// post-hoc t-tests of one index construct.
pub fn index_rows(c: Construct, s: &[ConditionSummary]) -> Result<Vec<Row>> {
    let name = c.as_str();
    let mut rows = Vec::new();
    for t in Technique::ALL {
        mean_sd_rows(&mut rows, name, t.as_str().into(), &s.iter().map(|x| x.by_technique[t.index()]).collect::<Vec<_>>());
        for d in Difficulty::ALL {
            let xs: Vec<f64> = s.iter().map(|x| x.by_level[t.index()][d.index()]).collect();
            mean_sd_rows(&mut rows, name, cell(t, d), &xs);
        }
    }
    let table: Vec<Vec<Vec<f64>>> = s.iter().map(|x| x.by_level.iter().map(|r| r.to_vec()).collect()).collect();
    let effects = rm_anova_two(&table)?;
    for (term, e) in ["technique", "difficulty", "technique:difficulty"].iter().zip(&effects) {
        rows.push(Row::new(name, "anova", *term, "F", num(e.f)));
        rows.push(Row::new(name, "anova", *term, "df_effect", num(e.df_effect)));
        rows.push(Row::new(name, "anova", *term, "df_error", num(e.df_error)));
        rows.push(Row::new(name, "anova", *term, "p", num(e.p)));
    }

    let by_difficulty = |d: Difficulty| -> Vec<f64> { s.iter().map(|x| (x.by_level[0][d.index()] + x.by_level[1][d.index()]) / 2.0).collect() };
    let mut terms = Vec::new();
    let mut pairs = Vec::new();
    for (i, a) in Difficulty::ALL.iter().enumerate() {
        for b in &Difficulty::ALL[i + 1..] {
            terms.push(format!("{}-{}", a.as_str(), b.as_str()));
            pairs.push((by_difficulty(*a), by_difficulty(*b)));
        }
    }
    t_rows(&mut rows, name, "posthoc_difficulty", terms, pairs)?;
    let terms = Difficulty::ALL.iter().map(|d| d.as_str().to_string()).collect();
    let pairs = Difficulty::ALL
        .iter()
        .map(|d| {
            (
                s.iter().map(|x| x.by_level[0][d.index()]).collect(),
                s.iter().map(|x| x.by_level[1][d.index()]).collect(),
            )
        })
        .collect();
    t_rows(&mut rows, name, "posthoc_technique", terms, pairs)?;
    Ok(rows)
}

/// Error-proportion means and the one-tailed Wilcoxon test of touch
/// exceeding keyboard.
pub fn error_rows(p: &[[f64; 2]]) -> Vec<Row> {
    let mut rows = Vec::new();
    let kb: Vec<f64> = p.iter().map(|x| x[0]).collect();
    let tc: Vec<f64> = p.iter().map(|x| x[1]).collect();
    mean_sd_rows(&mut rows, "error", "keyboard".into(), &kb);
    mean_sd_rows(&mut rows, "error", "touch".into(), &tc);
    let term = "touch>keyboard";
    match PairedSample::new(kb, tc).and_then(|s| wilcoxon_signed_rank(&s, Tail::Greater)) {
        Ok(w) => {
            rows.push(Row::new("error", "wilcoxon", term, "w_plus", num(w.w_plus)));
            rows.push(Row::new("error", "wilcoxon", term, "n", w.n.to_string()));
            rows.push(Row::new("error", "wilcoxon", term, "p", num(w.p)));
            rows.push(Row::new("error", "wilcoxon", term, "exact", w.exact.to_string()));
        }
        Err(_) => rows.push(Row::new("error", "wilcoxon", term, "p", "NA")),
    }
    rows
}

fn calibration_rows(layout: &StudyLayout, c: Construct) -> Result<Vec<Row>> {
    let path = layout.cv_report(c);
    if !path.is_file() {
        return Ok(Vec::new());
    }
    let (header, rows) = read_csv(&path)?;
    let col = header.iter().position(|h| h == "mean_auroc").unwrap_or(header.len() - 1);
    let aucs: Vec<f64> = rows.iter().map(|r| r[col].parse()).collect::<std::result::Result<_, _>>()?;
    Ok(vec![
        Row::new(c.as_str(), "calibration", "auroc", "mean", num(mean(&aucs))),
        Row::new(c.as_str(), "calibration", "auroc", "sd", num(sample_sd(&aucs))),
        Row::new(c.as_str(), "calibration", "auroc", "n", aucs.len().to_string()),
    ])
}

pub fn cmd_evaluate(layout: &StudyLayout, constructs: &[Construct]) -> Result<Vec<Row>> {
    let ids = layout.participants()?;
    if ids.len() < 2 {
        bail!("evaluation needs at least 2 participants");
    }
    let mut rows = Vec::new();
    for &c in constructs {
        rows.extend(calibration_rows(layout, c)?);
        if c == Construct::Error {
            rows.extend(error_rows(&load_error_proportions(layout, &ids)?));
        } else {
            rows.extend(index_rows(c, &load_index_summaries(layout, &ids, c)?)?);
        }
    }
    rows.push(Row::new("all", "note", "anova", "sphericity", "uncorrected"));
    layout.ensure_dir(REPORT)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.construct.clone(), r.analysis.into(), r.term.clone(), r.statistic.into(), r.value.clone()])
        .collect();
    write_csv(&layout.evaluation(), &["construct", "analysis", "term", "statistic", "value"], &table)?;
    stage_manifest(layout, "evaluate", REPORT, &calibrated_config(layout)?)?;
    Ok(rows)
}
