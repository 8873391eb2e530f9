//! Markdown report with SVG figures regenerated from each run's CSVs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::ExperimentKind;
use super::fit::Histogram;
use super::record::RunRecord;
use super::svg::{self, Panel, Series};
use super::table::Table;
use crate::error::{Error, Result};

/// A record together with the directory holding its files.
#[derive(Clone, Debug)]
pub struct ReportEntry {
    pub record: RunRecord,
    pub dir: PathBuf,
}

impl ReportEntry {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Self {
            record: RunRecord::load(&dir.join("record.json"))?,
            dir: dir.to_path_buf(),
        })
    }
}

fn read(dir: &Path, name: &str) -> Option<Table> {
    Table::read(&dir.join(name)).ok()
}

fn distinct(values: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// `(file stem, svg)` figures for one run.
fn figures(entry: &ReportEntry) -> Vec<(String, String)> {
    let dir = &entry.dir;
    let mut out = Vec::new();
    match entry.record.config.kind {
        ExperimentKind::SgdVsPde => {
            if let Some(evo) = read(dir, "evolution.csv") {
                out.push(("evolution".into(), svg::evolution_panels(&evo)));
            }
            if let Some(t) = read(dir, "w2.csv") {
                if let (Some(d), Some(time), Some(w2)) = (t.column("delta"), t.column("t"), t.column("w2_r1")) {
                    let series = distinct(&d)
                        .into_iter()
                        .enumerate()
                        .map(|(k, dv)| Series {
                            name: format!("Δ={dv}"),
                            points: (0..t.len()).filter(|&i| d[i] == dv).map(|i| (time[i], w2[i])).collect(),
                            dashed: false,
                            color: k,
                        })
                        .collect();
                    let panel = Panel {
                        title: "W2 between SGD and PDE radii".into(),
                        x_label: "t".into(),
                        y_label: "W2(r1)".into(),
                        series,
                        ..Panel::default()
                    };
                    out.push(("w2".into(), svg::line_chart(&panel)));
                }
            }
        }
        ExperimentKind::ConvergenceScaling => {
            if let Some(t) = read(dir, "summary.csv") {
                if let (Some(n), Some(m)) = (t.column("n"), t.column("median_w2")) {
                    let panel = Panel {
                        title: "final-time W2 vs width".into(),
                        x_label: "N".into(),
                        y_label: "median W2".into(),
                        log_x: true,
                        log_y: true,
                        series: vec![Series::new("median", n.into_iter().zip(m).collect())],
                    };
                    out.push(("w2_ladder".into(), svg::line_chart(&panel)));
                }
            }
        }
        ExperimentKind::Prop1Gap => {
            if let Some(t) = read(dir, "gap.csv") {
                if let (Some(n), Some(mc), Some(ex)) = (t.column("n"), t.column("mc_gap"), t.column("exact_gap")) {
                    let panel = Panel {
                        title: "finite-width gap".into(),
                        x_label: "N".into(),
                        y_label: "gap".into(),
                        log_x: true,
                        log_y: true,
                        series: vec![
                            Series::new("Monte Carlo", n.iter().copied().zip(mc).collect()),
                            Series {
                                name: "bracket / N".into(),
                                points: n.into_iter().zip(ex).collect(),
                                dashed: true,
                                color: 1,
                            },
                        ],
                    };
                    out.push(("gap".into(), svg::line_chart(&panel)));
                }
            }
        }
        ExperimentKind::HoeffdingTable => {
            if let Some(t) = read(dir, "replicates.csv") {
                if let (Some(row), Some(p)) = (t.column("row"), t.column("p_value")) {
                    let series = distinct(&row)
                        .into_iter()
                        .enumerate()
                        .filter_map(|(k, r)| {
                            let ps: Vec<f64> = (0..t.len()).filter(|&i| row[i] == r).map(|i| p[i]).collect();
                            Histogram::with_range(&ps, 10, 0.0, 1.0)
                                .ok()
                                .map(|h| svg::histogram_series(&format!("row {r}"), &h, k))
                        })
                        .collect();
                    let panel = Panel {
                        title: "Hoeffding p-values".into(),
                        x_label: "p".into(),
                        y_label: "density".into(),
                        series,
                        ..Panel::default()
                    };
                    out.push(("p_values".into(), svg::line_chart(&panel)));
                }
            }
        }
        ExperimentKind::TheoreticalWeights => {
            if let Some(t) = read(dir, "densities.csv") {
                if let (Some(stage), Some(lo), Some(hi), Some(d)) =
                    (t.text_column("stage"), t.column("bin_lo"), t.column("bin_hi"), t.column("density"))
                {
                    let mut names: Vec<String> = Vec::new();
                    for s in &stage {
                        if !names.contains(s) {
                            names.push(s.clone());
                        }
                    }
                    let panels: Vec<Panel> = names
                        .iter()
                        .enumerate()
                        .map(|(k, name)| {
                            let idx: Vec<usize> = (0..t.len()).filter(|&i| &stage[i] == name).collect();
                            let mut edges: Vec<f64> = idx.iter().map(|&i| lo[i]).collect();
                            if let Some(&last) = idx.last() {
                                edges.push(hi[last]);
                            }
                            let h = Histogram {
                                edges,
                                density: idx.iter().map(|&i| d[i]).collect(),
                            };
                            Panel {
                                title: name.clone(),
                                x_label: "r".into(),
                                y_label: "density".into(),
                                series: vec![svg::histogram_series(name, &h, k)],
                                ..Panel::default()
                            }
                        })
                        .collect();
                    out.push(("densities".into(), svg::panels(&panels, 2)));
                }
            }
        }
        ExperimentKind::StaticsGrid => {
            if let Some(t) = read(dir, "statics.csv") {
                if let Some(r) = t.column("r") {
                    let series = ["q_plus", "q_minus", "psi_inf"]
                        .iter()
                        .enumerate()
                        .map(|(k, c)| Series {
                            name: (*c).into(),
                            points: r.iter().copied().zip(t.column(c).unwrap_or_default()).collect(),
                            dashed: false,
                            color: k,
                        })
                        .collect();
                    let panel = Panel {
                        title: "reduced functionals".into(),
                        x_label: "r".into(),
                        y_label: "value".into(),
                        series,
                        ..Panel::default()
                    };
                    out.push(("statics".into(), svg::line_chart(&panel)));
                }
            }
        }
    }
    out
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes `report.md` and its figures into `out_dir`; returns the report path.
pub fn emit_report(entries: &[ReportEntry], out_dir: &Path) -> Result<PathBuf> {
    if entries.is_empty() {
        return Err(Error::config("a report needs at least one run record"));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut md = String::from("# mflab report\n");
    for (i, e) in entries.iter().enumerate() {
        let r = &e.record;
        let _ = writeln!(md, "\n## {}. {} (`{}`)\n", i + 1, r.config.name, r.config.kind.name());
        let _ = writeln!(md, "| field | value |\n|---|---|");
        let _ = writeln!(md, "| seed | {} |", r.config.seed);
        let _ = writeln!(md, "| input hash | `{}` |", r.input_hash);
        let _ = writeln!(md, "| wall time (s) | {:.1} |", r.finished - r.started);
        let _ = writeln!(md, "| interrupted | {} |", r.interrupted);
        let _ = writeln!(md, "| files | {} |", r.files.len());
        if !r.metrics.is_empty() {
            let _ = writeln!(md, "\n| metric | value |\n|---|---|");
            for (k, v) in &r.metrics {
                let _ = writeln!(md, "| {k} | {v:.6} |");
            }
        }
        if !r.notes.is_empty() {
            md.push('\n');
            for (k, v) in &r.notes {
                let _ = writeln!(md, "- {k}: {v}");
            }
        }
        for (stem, svg_text) in figures(e) {
            let file = format!("{:02}_{}_{}.svg", i + 1, slug(&r.config.name), stem);
            std::fs::write(out_dir.join(&file), svg_text)?;
            let _ = writeln!(md, "\n![{stem}]({file})");
        }
    }
    let path = out_dir.join("report.md");
    std::fs::write(&path, md)?;
    Ok(path)
}
