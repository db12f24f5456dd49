//! Deterministic report and CSV serialization.
//!
//! Reports are UTF-8 structured text with a stable key order; identical
//! inputs produce byte-identical files. Wall-clock timings are kept on the
//! in-memory report only and never written, so files stay reproducible.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::grid::{BoxSet, Grid};
use crate::interval::Interval;
use crate::persistence::SweepRow;
use crate::relation::BoxRelation;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    Set,
    Relation,
}

/// One executed command: a title plus ordered key/value lines.
#[derive(Debug, Clone)]
pub struct CommandReport {
    pub index: usize,
    pub title: String,
    pub lines: Vec<(String, String)>,
    /// Some(false) when an `expect=` assertion failed.
    pub pass: Option<bool>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub scenario: String,
    pub bounds: Vec<Interval>,
    pub divisions: Vec<usize>,
    pub widths: Vec<f64>,
    pub seed: u64,
    pub commands: Vec<CommandReport>,
    /// Named elements written alongside the report, for later rendering.
    pub elements: Vec<(String, ElementKind, String)>,
}

impl ScenarioReport {
    pub fn failed_expectations(&self) -> usize {
        self.commands
            .iter()
            .filter(|c| c.pass == Some(false))
            .count()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("relkit report\n");
        push_kv(&mut out, "version", VERSION);
        push_kv(&mut out, "scenario", &self.scenario);
        push_kv(&mut out, "grid.bounds", &fmt_rect(&self.bounds));
        push_kv(
            &mut out,
            "grid.divisions",
            &join(self.divisions.iter().map(|d| d.to_string())),
        );
        push_kv(
            &mut out,
            "grid.h",
            &join(self.widths.iter().map(|w| fmt_f64(*w))),
        );
        push_kv(&mut out, "seed", &self.seed.to_string());
        push_kv(&mut out, "commands", &self.commands.len().to_string());
        for cmd in &self.commands {
            out.push('\n');
            out.push_str(&format!("[{}] {}\n", cmd.index, cmd.title));
            for (k, v) in &cmd.lines {
                push_kv(&mut out, k, v);
            }
            if let Some(pass) = cmd.pass {
                push_kv(&mut out, "pass", if pass { "true" } else { "false" });
            }
        }
        if !self.elements.is_empty() {
            out.push('\n');
            out.push_str("[elements]\n");
            for (name, kind, file) in &self.elements {
                let kind = match kind {
                    ElementKind::Set => "set",
                    ElementKind::Relation => "relation",
                };
                push_kv(&mut out, &format!("element.{name}.kind"), kind);
                push_kv(&mut out, &format!("element.{name}.file"), file);
            }
        }
        out
    }
}

fn push_kv(out: &mut String, key: &str, value: &str) {
    out.push_str(key);
    out.push_str(" = ");
    out.push_str(value);
    out.push('\n');
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(",")
}

/// Shortest round-trip decimal form; deterministic across runs and thread
/// counts.
pub fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

pub fn fmt_rect(rect: &[Interval]) -> String {
    rect.iter()
        .map(|iv| format!("[{},{}]", fmt_f64(iv.lo), fmt_f64(iv.hi)))
        .collect::<Vec<_>>()
        .join("x")
}

pub fn summarize_set(set: &BoxSet) -> String {
    match set.bounding_rect() {
        Some(rect) => format!("{} boxes in {}", set.len(), fmt_rect(&rect)),
        None => "0 boxes".to_string(),
    }
}

/// Box-set CSV: one multi-index per line with the box's real bounds.
pub fn boxset_csv(set: &BoxSet) -> String {
    let grid = set.grid();
    let dim = grid.dim();
    let mut out = String::new();
    for k in 0..dim {
        out.push_str(&format!("i{k},"));
    }
    out.push_str(
        &(0..dim)
            .map(|k| format!("lo{k},hi{k}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    for &id in set.boxes() {
        let multi = grid.to_multi(id);
        let rect = grid.box_rect(id);
        let mut cols: Vec<String> = multi.iter().map(|i| i.to_string()).collect();
        for iv in &rect {
            cols.push(fmt_f64(iv.lo));
            cols.push(fmt_f64(iv.hi));
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

/// Parse a box-set CSV back against the same grid.
pub fn parse_boxset_csv(grid: &Arc<Grid>, text: &str) -> Result<BoxSet> {
    let dim = grid.dim();
    let mut boxes = BTreeSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < dim {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected at least {dim} index columns"),
            });
        }
        let mut multi = Vec::with_capacity(dim);
        for c in &cols[..dim] {
            multi.push(c.trim().parse::<usize>().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad index `{c}`"),
            })?);
        }
        for (k, &i) in multi.iter().enumerate() {
            if i >= grid.divisions()[k] {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("index {i} out of range on axis {k}"),
                });
            }
        }
        boxes.insert(grid.from_multi(&multi));
    }
    BoxSet::from_boxes(grid, boxes)
}

/// Relation CSV: source then target multi-indices per pair.
pub fn relation_csv(rel: &BoxRelation) -> String {
    let grid = rel.grid();
    let dim = grid.dim();
    let mut out = String::new();
    let mut header: Vec<String> = (0..dim).map(|k| format!("src{k}")).collect();
    header.extend((0..dim).map(|k| format!("dst{k}")));
    out.push_str(&header.join(","));
    out.push('\n');
    for &(a, b) in rel.pairs() {
        let mut cols: Vec<String> = grid.to_multi(a).iter().map(|i| i.to_string()).collect();
        cols.extend(grid.to_multi(b).iter().map(|i| i.to_string()));
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_relation_csv(grid: &Arc<Grid>, text: &str) -> Result<BoxRelation> {
    let dim = grid.dim();
    let mut pairs = BTreeSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 2 * dim {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected {} columns", 2 * dim),
            });
        }
        let parse = |c: &str| -> Result<usize> {
            c.trim().parse::<usize>().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad index `{c}`"),
            })
        };
        let src: Vec<usize> = cols[..dim].iter().map(|c| parse(c)).collect::<Result<_>>()?;
        let dst: Vec<usize> = cols[dim..].iter().map(|c| parse(c)).collect::<Result<_>>()?;
        pairs.insert((grid.from_multi(&src), grid.from_multi(&dst)));
    }
    BoxRelation::from_pairs(grid, pairs)
}

/// Sweep CSV: one row per parameter value with the enclosure summary.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let dim = rows
        .first()
        .map(|r| r.enclosure.grid().dim())
        .unwrap_or(1);
    let mut header = vec!["value".to_string(), "admitted".to_string(), "radius".to_string()];
    for k in 0..dim {
        header.push(format!("bbox_lo{k}"));
        header.push(format!("bbox_hi{k}"));
    }
    header.push("boxes".to_string());
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let mut cols = vec![
            fmt_f64(row.value),
            row.admitted.to_string(),
            fmt_f64(row.radius),
        ];
        match row.enclosure.bounding_rect() {
            Some(rect) => {
                for iv in &rect {
                    cols.push(fmt_f64(iv.lo));
                    cols.push(fmt_f64(iv.hi));
                }
            }
            None => {
                for _ in 0..dim {
                    cols.push(String::new());
                    cols.push(String::new());
                }
            }
        }
        cols.push(row.enclosure.len().to_string());
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

/// Write via a temporary file in the same directory, then rename, so a
/// command either publishes its whole output or nothing.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp: PathBuf = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Minimal reader for report files: enough to reload grid and elements for
/// the render subcommand.
#[derive(Debug, Clone)]
pub struct ReportIndex {
    pub scenario: String,
    pub bounds: Vec<(f64, f64)>,
    pub divisions: Vec<usize>,
    pub elements: Vec<(String, ElementKind, String)>,
}

pub fn parse_report_index(text: &str) -> Result<ReportIndex> {
    let mut scenario = String::new();
    let mut bounds = Vec::new();
    let mut divisions = Vec::new();
    let mut elements: Vec<(String, ElementKind, String)> = Vec::new();
    let mut kinds: Vec<(String, ElementKind)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let Some((key, value)) = line.split_once(" = ") else {
            continue;
        };
        match key {
            "scenario" => scenario = value.to_string(),
            "grid.bounds" => {
                bounds = crate::scenario::parse_rect(value)
                    .map_err(|e| Error::Parse {
                        line: idx + 1,
                        message: e.to_string(),
                    })?
                    .iter()
                    .map(|iv| (iv.lo, iv.hi))
                    .collect();
            }
            "grid.divisions" => {
                divisions = value
                    .split(',')
                    .map(|d| {
                        d.trim().parse::<usize>().map_err(|_| Error::Parse {
                            line: idx + 1,
                            message: format!("bad division `{d}`"),
                        })
                    })
                    .collect::<Result<_>>()?;
            }
            _ => {
                if let Some(rest) = key.strip_prefix("element.") {
                    if let Some(name) = rest.strip_suffix(".kind") {
                        let kind = match value {
                            "set" => ElementKind::Set,
                            "relation" => ElementKind::Relation,
                            other => {
                                return Err(Error::Parse {
                                    line: idx + 1,
                                    message: format!("unknown element kind `{other}`"),
                                })
                            }
                        };
                        kinds.push((name.to_string(), kind));
                    } else if let Some(name) = rest.strip_suffix(".file") {
                        let kind = kinds
                            .iter()
                            .find(|(n, _)| n == name)
                            .map(|(_, k)| k.clone())
                            .ok_or_else(|| Error::Parse {
                                line: idx + 1,
                                message: format!("element `{name}` has no kind line"),
                            })?;
                        elements.push((name.to_string(), kind, value.to_string()));
                    }
                }
            }
        }
    }
    if bounds.is_empty() || divisions.is_empty() {
        return Err(Error::Spec("report is missing grid metadata".into()));
    }
    Ok(ReportIndex {
        scenario,
        bounds,
        divisions,
        elements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn boxset_csv_roundtrip() {
        let g = Grid::new(vec![(0.0, 3.0), (0.0, 3.0)], vec![30, 30]).unwrap();
        let s = g
            .cover(&[Interval::new(1.0, 2.0), Interval::new(0.5, 1.5)])
            .unwrap();
        let csv = boxset_csv(&s);
        let back = parse_boxset_csv(&g, &csv).unwrap();
        assert_eq!(back, s);
        assert!(csv.starts_with("i0,i1,lo0,hi0,lo1,hi1\n"));
    }

    #[test]
    fn relation_csv_roundtrip() {
        let g = Grid::new(vec![(0.0, 1.0)], vec![10]).unwrap();
        let rel = BoxRelation::identity(&g);
        let back = parse_relation_csv(&g, &relation_csv(&rel)).unwrap();
        assert_eq!(back.pairs(), rel.pairs());
    }

    #[test]
    fn report_text_is_stable() {
        let g = Grid::new(vec![(-5.0, 5.0)], vec![400]).unwrap();
        let rep = ScenarioReport {
            scenario: "t".into(),
            bounds: g.bounds().to_vec(),
            divisions: g.divisions().to_vec(),
            widths: g.widths().to_vec(),
            seed: 0,
            commands: vec![CommandReport {
                index: 1,
                title: "block-check rel=f set=B".into(),
                lines: vec![("certified".into(), "true".into())],
                pass: Some(true),
                elapsed: Duration::from_millis(3),
            }],
            elements: vec![("B".into(), ElementKind::Set, "t_B.boxset.csv".into())],
        };
        let a = rep.to_text();
        let b = rep.to_text();
        assert_eq!(a, b);
        assert!(a.contains("grid.h = 0.025"));
        assert!(!a.contains("elapsed"), "timings must not be serialized");
        let idx = parse_report_index(&a).unwrap();
        assert_eq!(idx.divisions, vec![400]);
        assert_eq!(idx.elements.len(), 1);
    }
}
