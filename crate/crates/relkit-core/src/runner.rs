//! Scenario execution: rasterize, run commands in order, write artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::attractor;
use crate::error::{Error, Result};
use crate::finite::{self, SuiteConfig};
use crate::grid::{BoxSet, Grid};
use crate::persistence;
use crate::relation::BoxRelation;
use crate::render::{self, RenderElement};
use crate::report::{
    boxset_csv, fmt_f64, fmt_rect, relation_csv, summarize_set, sweep_csv, write_atomic,
    CommandReport, ElementKind, ScenarioReport,
};
use crate::scenario::{Command, Scenario, SetDef};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        RunOptions {
            out_dir: out_dir.into(),
            seed: 0,
        }
    }
}

/// Execute every command of a scenario and write the report, CSVs and SVGs
/// under `out_dir/<scenario-name>/`. Returns the in-memory report; the
/// number of failed `expect=` assertions decides the process exit code.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<ScenarioReport> {
    scenario.validate()?;
    let grid = Grid::new(
        scenario.bounds.iter().map(|&(lo, hi)| (lo, hi)).collect(),
        scenario.divisions.clone(),
    )?;
    let dir = scenario
        .output
        .as_ref()
        .map(|o| opts.out_dir.join(o))
        .unwrap_or_else(|| opts.out_dir.clone())
        .join(&scenario.name);

    let mut rasters: BTreeMap<String, BoxRelation> = BTreeMap::new();
    for (name, spec) in &scenario.relations {
        if spec.free_params().is_empty() {
            rasters.insert(name.clone(), spec.rasterize(&grid)?);
        }
    }
    let mut sets: BTreeMap<String, BoxSet> = BTreeMap::new();
    for (name, def) in &scenario.sets {
        let set = match def {
            SetDef::Full => grid.full(),
            SetDef::Rects(rects) => {
                let mut acc = grid.empty_set();
                for rect in rects {
                    acc = acc.union(&grid.cover(rect)?)?;
                }
                acc
            }
        };
        sets.insert(name.clone(), set);
    }
    let raster = |name: &str| -> Result<&BoxRelation> {
        rasters
            .get(name)
            .ok_or_else(|| Error::Spec(format!("relation `{name}` has unbound parameters")))
    };
    let boxset = |name: &str| -> Result<&BoxSet> {
        sets.get(name).ok_or_else(|| Error::Unresolved(name.into()))
    };

    let mut report = ScenarioReport {
        scenario: scenario.name.clone(),
        bounds: grid.bounds().to_vec(),
        divisions: grid.divisions().to_vec(),
        widths: grid.widths().to_vec(),
        seed: opts.seed,
        commands: Vec::new(),
        elements: Vec::new(),
    };

    for (idx, command) in scenario.commands.iter().enumerate() {
        let index = idx + 1;
        let started = Instant::now();
        let mut lines: Vec<(String, String)> = Vec::new();
        let mut pass: Option<bool> = None;
        let title;
        match command {
            Command::BlockCheck { rel, set, expect } => {
                title = format!("block-check rel={rel} set={set}");
                let verdict = attractor::is_attractor_block(raster(rel)?, boxset(set)?)?;
                lines.push(("certified".into(), verdict.is_block.to_string()));
                lines.push(("witnesses".into(), verdict.witnesses.len().to_string()));
                for (i, &(p, q)) in verdict.witnesses.iter().take(3).enumerate() {
                    lines.push((
                        format!("witness.{i}"),
                        format!(
                            "{} -> {}",
                            fmt_rect(&grid.box_rect(p)),
                            fmt_rect(&grid.box_rect(q))
                        ),
                    ));
                }
                if !verdict.is_block {
                    lines.push((
                        "note".into(),
                        "not certified at this resolution; retry with divisions x2".into(),
                    ));
                }
                if let Some(e) = expect {
                    lines.push(("expect".into(), e.to_string()));
                    pass = Some(*e == verdict.is_block);
                }
            }
            Command::Omega { rel, set } => {
                title = format!("omega rel={rel} set={set}");
                let res = attractor::omega_limit(raster(rel)?, boxset(set)?)?;
                lines.push(("stabilized".into(), res.stabilized.to_string()));
                lines.push(("transient".into(), res.transient.to_string()));
                lines.push(("limit".into(), summarize_set(&res.limit)));
                let label = format!("{}_omega_{index}", scenario.name);
                let file = format!("{label}.boxset.csv");
                write_atomic(&dir.join(&file), &boxset_csv(&res.limit))?;
                lines.push(("file".into(), file.clone()));
                report.elements.push((label, ElementKind::Set, file));
            }
            Command::Radius { rel, set, expect } => {
                title = format!("radius rel={rel} set={set}");
                let r = raster(rel)?;
                let b = boxset(set)?;
                let radius = persistence::separation_radius(r, b)?;
                let h = grid.h_max();
                lines.push(("radius".into(), fmt_f64(radius)));
                lines.push((
                    "error-bar".into(),
                    format!("[{},{}]", fmt_f64(radius), fmt_f64(radius + 2.0 * h)),
                ));
                if let Some((lo, hi)) = expect {
                    lines.push(("expect".into(), format!("[{},{}]", fmt_f64(*lo), fmt_f64(*hi))));
                    pass = Some(radius >= *lo && radius <= *hi);
                }
            }
            Command::Perturb {
                base,
                set,
                with,
                expect,
            } => {
                title = format!("perturb base={base} set={set} with={with}");
                let rep =
                    persistence::perturbation_report(raster(base)?, boxset(set)?, raster(with)?)?;
                lines.push(("radius".into(), fmt_f64(rep.radius)));
                lines.push(("admitted".into(), rep.admitted.to_string()));
                if let Some(a) = &rep.perturbed_attractor {
                    lines.push(("attractor".into(), summarize_set(a)));
                    lines.push(("contained".into(), rep.contained.to_string()));
                } else {
                    lines.push(("witnesses".into(), rep.witnesses.len().to_string()));
                }
                if let Some(e) = expect {
                    lines.push((
                        "expect".into(),
                        if *e { "admitted" } else { "rejected" }.to_string(),
                    ));
                    pass = Some(*e == rep.admitted);
                }
            }
            Command::Sweep {
                family,
                param,
                set,
                values,
            } => {
                title = format!("sweep family={family} param={param} set={set}");
                let spec = scenario.relation(family)?;
                let rows = persistence::parameter_sweep(spec, param, boxset(set)?, values)?;
                let admitted: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.admitted)
                    .map(|r| r.value)
                    .collect();
                lines.push(("values".into(), rows.len().to_string()));
                lines.push(("admitted".into(), admitted.len().to_string()));
                if let (Some(first), Some(last)) = (admitted.first(), admitted.last()) {
                    lines.push((
                        "admitted-range".into(),
                        format!("[{},{}]", fmt_f64(*first), fmt_f64(*last)),
                    ));
                }
                let file = format!("{}_sweep_{index}.csv", scenario.name);
                write_atomic(&dir.join(&file), &sweep_csv(&rows))?;
                lines.push(("file".into(), file));
            }
            Command::Oracle {
                n_max,
                trials,
                seed,
                mutate,
            } => {
                title = format!("oracle n-max={n_max} trials={trials}");
                let mut config = SuiteConfig::new(*n_max, *trials, seed.unwrap_or(opts.seed));
                config.mutation = *mutate;
                let suite = finite::theorem_suite(&config)?;
                lines.push(("seed".into(), config.seed.to_string()));
                lines.push((
                    "mutation".into(),
                    match config.mutation {
                        None => "none".into(),
                        Some(finite::Mutation::DropInvariance) => "drop-invariance".to_string(),
                    },
                ));
                for (k, label) in ["T1", "T2", "T3", "T4"].iter().enumerate() {
                    lines.push((format!("checks.{label}"), suite.checks[k].to_string()));
                }
                lines.push(("failures".into(), suite.failures.len().to_string()));
                if let Some(f) = suite.first_counterexample() {
                    lines.push((
                        "first-counterexample".into(),
                        format!("trial {} {}: {}", f.trial, f.check, f.detail),
                    ));
                }
                // an unmutated oracle run is itself an assertion
                if mutate.is_none() {
                    pass = Some(suite.passed());
                }
            }
            Command::Render {
                name,
                sets: set_names,
                relations: rel_names,
                forbidden,
            } => {
                title = format!("render name={name}");
                let mut elements = Vec::new();
                for s in set_names {
                    elements.push(RenderElement::Set {
                        name: s.clone(),
                        set: boxset(s)?.clone(),
                    });
                }
                for r in rel_names {
                    elements.push(RenderElement::Relation {
                        name: r.clone(),
                        rel: raster(r)?.clone(),
                    });
                }
                if let Some(f) = forbidden {
                    elements.push(RenderElement::Forbidden {
                        name: format!("{f} x comp"),
                        set: boxset(f)?.clone(),
                    });
                }
                let svg = render::render_svg(&grid, &elements)?;
                let file = format!("{}_{name}.svg", scenario.name);
                write_atomic(&dir.join(&file), &svg)?;
                lines.push(("file".into(), file));
                // export the referenced elements for standalone re-rendering
                for s in set_names {
                    let label = format!("{name}_{s}");
                    let file = format!("{label}.boxset.csv");
                    write_atomic(&dir.join(&file), &boxset_csv(boxset(s)?))?;
                    report.elements.push((label, ElementKind::Set, file));
                }
                for r in rel_names {
                    let label = format!("{name}_{r}");
                    let file = format!("{label}.relation.csv");
                    write_atomic(&dir.join(&file), &relation_csv(raster(r)?))?;
                    report.elements.push((label, ElementKind::Relation, file));
                }
            }
        }
        report.commands.push(CommandReport {
            index,
            title,
            lines,
            pass,
            elapsed: started.elapsed(),
        });
    }

    write_atomic(&dir.join("report.txt"), &report.to_text())?;
    Ok(report)
}

/// Load a report file and re-render one named element into an SVG next to
/// the report.
pub fn render_report_element(report_path: &Path, element: &str) -> Result<PathBuf> {
    let text = std::fs::read_to_string(report_path)?;
    let index = crate::report::parse_report_index(&text)?;
    let grid = Grid::new(index.bounds.clone(), index.divisions.clone())?;
    let dir = report_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let (name, kind, file) = index
        .elements
        .iter()
        .find(|(n, _, _)| n == element)
        .ok_or_else(|| Error::Unresolved(element.to_string()))?;
    let csv = std::fs::read_to_string(dir.join(file))?;
    let el = match kind {
        ElementKind::Set => RenderElement::Set {
            name: name.clone(),
            set: crate::report::parse_boxset_csv(&grid, &csv)?,
        },
        ElementKind::Relation => RenderElement::Relation {
            name: name.clone(),
            rel: crate::report::parse_relation_csv(&grid, &csv)?,
        },
    };
    let svg = render::render_svg(&grid, &[el])?;
    let out = dir.join(format!("{element}.svg"));
    write_atomic(&out, &svg)?;
    Ok(out)
}

/// Convenience entry point: load a scenario file and run it.
pub fn run_scenario_file(path: &Path, opts: &RunOptions) -> Result<ScenarioReport> {
    let scenario = Scenario::load(path)?;
    run_scenario(&scenario, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_scenario() -> Scenario {
        let text = r#"
scenario block_demo
grid [-5,5] / 400
relation f = map "(x - 1) * 0.5"
relation e = empty
set B = rects [-1.2,-0.8]
block-check rel=f set=B expect=true
omega rel=f set=B
radius rel=f set=B
perturb base=f set=B with=e expect=admitted
render name=phase sets=B relations=f forbidden=B
"#;
        let dir = std::env::temp_dir().join("relkit_runner_test_src");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("block_demo.scn");
        std::fs::write(&path, text).unwrap();
        Scenario::load(&path).unwrap()
    }

    #[test]
    fn runs_and_writes_reports() {
        let scenario = sample_scenario();
        let out = std::env::temp_dir().join("relkit_runner_test_out");
        let _ = std::fs::remove_dir_all(&out);
        let report = run_scenario(&scenario, &RunOptions::new(&out)).unwrap();
        assert_eq!(report.failed_expectations(), 0);
        let report_path = out.join("block_demo").join("report.txt");
        assert!(report_path.exists());
        let text = std::fs::read_to_string(&report_path).unwrap();
        assert!(text.contains("certified = true"));
        assert!(text.contains("admitted = true"));
        // the omega element can be re-rendered from the report alone
        let omega_el = report
            .elements
            .iter()
            .find(|(n, _, _)| n.contains("omega"))
            .unwrap()
            .0
            .clone();
        let svg_path = render_report_element(&report_path, &omega_el).unwrap();
        assert!(svg_path.exists());
    }

    #[test]
    fn failed_expectation_is_counted() {
        let mut scenario = sample_scenario();
        scenario.commands = vec![Command::BlockCheck {
            rel: "f".into(),
            set: "B".into(),
            expect: Some(false),
        }];
        let out = std::env::temp_dir().join("relkit_runner_test_out2");
        let _ = std::fs::remove_dir_all(&out);
        let report = run_scenario(&scenario, &RunOptions::new(&out)).unwrap();
        assert_eq!(report.failed_expectations(), 1);
    }
}
