//! Scenario files: a line-oriented text format plus an equivalent JSON tree.
//!
//! A scenario declares one grid, named relations, named box sets, and a
//! command list executed in order. Relation definitions may reference
//! previously defined relations by name; references resolve at parse time.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::finite::Mutation;
use crate::interval::Interval;
use crate::relation::{RelationSpec, SpecKind};

#[derive(Debug, Clone)]
pub enum SetDef {
    Rects(Vec<Vec<Interval>>),
    Full,
}

#[derive(Debug, Clone)]
pub enum Command {
    BlockCheck {
        rel: String,
        set: String,
        expect: Option<bool>,
    },
    Omega {
        rel: String,
        set: String,
    },
    Radius {
        rel: String,
        set: String,
        expect: Option<(f64, f64)>,
    },
    Perturb {
        base: String,
        set: String,
        with: String,
        /// expected admission verdict
        expect: Option<bool>,
    },
    Sweep {
        family: String,
        param: String,
        set: String,
        values: Vec<f64>,
    },
    Oracle {
        n_max: usize,
        trials: usize,
        seed: Option<u64>,
        mutate: Option<Mutation>,
    },
    Render {
        name: String,
        sets: Vec<String>,
        relations: Vec<String>,
        forbidden: Option<String>,
    },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub bounds: Vec<(f64, f64)>,
    pub divisions: Vec<usize>,
    pub relations: Vec<(String, RelationSpec)>,
    pub sets: Vec<(String, SetDef)>,
    pub commands: Vec<Command>,
    pub output: Option<String>,
}

impl Scenario {
    pub fn relation(&self, name: &str) -> Result<&RelationSpec> {
        self.relations
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::Unresolved(name.to_string()))
    }

    pub fn set(&self, name: &str) -> Result<&SetDef> {
        self.sets
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::Unresolved(name.to_string()))
    }

    /// Check that every name referenced by a command resolves.
    pub fn validate(&self) -> Result<()> {
        for cmd in &self.commands {
            match cmd {
                Command::BlockCheck { rel, set, .. }
                | Command::Omega { rel, set }
                | Command::Radius { rel, set, .. } => {
                    self.relation(rel)?;
                    self.set(set)?;
                }
                Command::Perturb {
                    base, set, with, ..
                } => {
                    self.relation(base)?;
                    self.relation(with)?;
                    self.set(set)?;
                }
                Command::Sweep {
                    family,
                    param,
                    set,
                    ..
                } => {
                    let spec = self.relation(family)?;
                    let free = spec.free_params();
                    if free != vec![param.clone()] {
                        return Err(Error::Spec(format!(
                            "sweep family `{family}` must have exactly the free parameter `{param}`, found {free:?}"
                        )));
                    }
                    self.set(set)?;
                }
                Command::Oracle { .. } => {}
                Command::Render {
                    sets,
                    relations,
                    forbidden,
                    ..
                } => {
                    for s in sets {
                        self.set(s)?;
                    }
                    for r in relations {
                        self.relation(r)?;
                    }
                    if let Some(f) = forbidden {
                        self.set(f)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Load from a file; `.json` selects the JSON form, anything else the
    /// line-oriented text form.
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".to_string());
        let scenario = if path.extension().is_some_and(|e| e == "json") {
            parse_json(&text, &stem)?
        } else {
            parse_text(&text, &stem)?
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Expand `lo:step:hi` or a comma list into explicit values.
pub fn parse_values(spec: &str) -> Result<Vec<f64>> {
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Spec(format!("range `{spec}` is not lo:step:hi")));
        }
        let lo: f64 = num(parts[0])?;
        let step: f64 = num(parts[1])?;
        let hi: f64 = num(parts[2])?;
        if step <= 0.0 || hi < lo {
            return Err(Error::Spec(format!("bad range `{spec}`")));
        }
        let count = ((hi - lo) / step).round() as usize + 1;
        Ok((0..count)
            .map(|k| lo + k as f64 * step)
            .filter(|v| *v <= hi + step * 1e-9)
            .collect())
    } else {
        spec.split(',').map(num).collect()
    }
}

fn num(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Spec(format!("bad number `{s}`")))
}

/// Parse `[a,b]` or `[a,b]x[c,d]` into per-axis intervals.
pub fn parse_rect(s: &str) -> Result<Vec<Interval>> {
    let mut out = Vec::new();
    for part in s.split('x') {
        let part = part.trim();
        let inner = part
            .strip_prefix('[')
            .and_then(|p| p.strip_suffix(']'))
            .ok_or_else(|| Error::Spec(format!("bad interval `{part}`")))?;
        let mut nums = inner.split(',');
        let lo = num(nums.next().unwrap_or(""))?;
        let hi = num(
            nums.next()
                .ok_or_else(|| Error::Spec(format!("interval `{part}` needs two endpoints")))?,
        )?;
        if nums.next().is_some() {
            return Err(Error::Spec(format!("interval `{part}` has extra entries")));
        }
        if lo > hi {
            return Err(Error::Spec(format!("interval `{part}` reversed")));
        }
        out.push(Interval::new(lo, hi));
    }
    Ok(out)
}

fn split_key_values(tokens: &[&str]) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for t in tokens {
        if let Some((k, v)) = t.split_once('=') {
            out.insert(k.to_string(), v.to_string());
        }
    }
    out
}

struct LineParser<'a> {
    name: String,
    bounds: Option<Vec<(f64, f64)>>,
    divisions: Option<Vec<usize>>,
    params: BTreeMap<String, f64>,
    relations: Vec<(String, RelationSpec)>,
    sets: Vec<(String, SetDef)>,
    commands: Vec<Command>,
    output: Option<String>,
    line_no: usize,
    src: &'a str,
}

fn parse_text(text: &str, default_name: &str) -> Result<Scenario> {
    let mut p = LineParser {
        name: default_name.to_string(),
        bounds: None,
        divisions: None,
        params: BTreeMap::new(),
        relations: Vec::new(),
        sets: Vec::new(),
        commands: Vec::new(),
        output: None,
        line_no: 0,
        src: "",
    };
    for (idx, raw) in text.lines().enumerate() {
        p.line_no = idx + 1;
        p.src = raw;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        p.parse_line(line)?;
    }
    let bounds = p
        .bounds
        .ok_or_else(|| Error::Spec("scenario missing a grid line".into()))?;
    let divisions = p.divisions.unwrap();
    Ok(Scenario {
        name: p.name,
        bounds,
        divisions,
        relations: p.relations,
        sets: p.sets,
        commands: p.commands,
        output: p.output,
    })
}

impl LineParser<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line_no,
            message: message.into(),
        }
    }

    fn lookup_relation(&self, name: &str) -> Result<RelationSpec> {
        self.relations
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.clone())
            .ok_or_else(|| self.err(format!("relation `{name}` not defined above")))
    }

    fn parse_line(&mut self, line: &str) -> Result<()> {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "scenario" => {
                self.name = tokens
                    .get(1)
                    .ok_or_else(|| self.err("scenario needs a name"))?
                    .to_string();
            }
            "grid" => {
                // grid [a,b]x[c,d] / 10x20
                let rest = line["grid".len()..].trim();
                let (brect, divs) = rest
                    .split_once('/')
                    .ok_or_else(|| self.err("grid needs `bounds / divisions`"))?;
                let rect =
                    parse_rect(brect.trim()).map_err(|e| self.err(format!("grid bounds: {e}")))?;
                let divisions: Vec<usize> = divs
                    .trim()
                    .split('x')
                    .map(|d| {
                        d.trim()
                            .parse::<usize>()
                            .map_err(|_| self.err(format!("bad division count `{d}`")))
                    })
                    .collect::<Result<_>>()?;
                self.bounds = Some(rect.iter().map(|iv| (iv.lo, iv.hi)).collect());
                self.divisions = Some(divisions);
            }
            "param" => {
                // param name = value
                let rest = line["param".len()..].trim();
                let (name, value) = rest
                    .split_once('=')
                    .ok_or_else(|| self.err("param needs `name = value`"))?;
                let v = num(value).map_err(|e| self.err(e.to_string()))?;
                self.params.insert(name.trim().to_string(), v);
            }
            "relation" => self.parse_relation(line)?,
            "set" => self.parse_set(line)?,
            "output" => {
                self.output = Some(
                    tokens
                        .get(1)
                        .ok_or_else(|| self.err("output needs a directory"))?
                        .to_string(),
                );
            }
            "block-check" | "omega" | "radius" | "perturb" | "sweep" | "oracle" | "render" => {
                self.parse_command(tokens[0], &tokens[1..])?
            }
            other => return Err(self.err(format!("unknown directive `{other}`"))),
        }
        Ok(())
    }

    fn grid_dim(&self) -> Result<usize> {
        self.bounds
            .as_ref()
            .map(|b| b.len())
            .ok_or_else(|| self.err("grid must be declared first"))
    }

    fn parse_relation(&mut self, line: &str) -> Result<()> {
        let rest = line["relation".len()..].trim();
        let (name, rhs) = rest
            .split_once('=')
            .ok_or_else(|| self.err("relation needs `name = definition`"))?;
        let name = name.trim().to_string();
        let rhs = rhs.trim();
        let dim = self.grid_dim()?;
        let spec = if let Some(body) = rhs.strip_prefix("map") {
            // quoted expressions then optional key=value bindings
            let mut exprs = Vec::new();
            let mut cursor = body.trim();
            while let Some(start) = cursor.find('"') {
                let after = &cursor[start + 1..];
                let end = after
                    .find('"')
                    .ok_or_else(|| self.err("unterminated expression string"))?;
                exprs.push(
                    Expr::parse(&after[..end], dim).map_err(|e| self.err(e.to_string()))?,
                );
                cursor = &after[end + 1..];
            }
            if exprs.is_empty() {
                return Err(self.err("map needs at least one quoted expression"));
            }
            let mut spec = RelationSpec::map(exprs);
            spec.params.extend(self.params.clone());
            for (k, v) in split_key_values(&cursor.split_whitespace().collect::<Vec<_>>()) {
                spec.params
                    .insert(k, num(&v).map_err(|e| self.err(e.to_string()))?);
            }
            spec
        } else if let Some(body) = rhs.strip_prefix("boxes") {
            let mut pairs = Vec::new();
            for tok in body.split_whitespace() {
                let (src, dst) = tok
                    .split_once("->")
                    .ok_or_else(|| self.err(format!("box pair `{tok}` needs `src->dst`")))?;
                pairs.push((
                    parse_rect(src).map_err(|e| self.err(e.to_string()))?,
                    parse_rect(dst).map_err(|e| self.err(e.to_string()))?,
                ));
            }
            if pairs.is_empty() {
                return Err(self.err("boxes needs at least one rectangle pair"));
            }
            RelationSpec::new(SpecKind::BoxUnion(pairs))
        } else if let Some(body) = rhs.strip_prefix("transpose") {
            let inner = self.lookup_relation(body.trim())?;
            RelationSpec::new(SpecKind::Transpose(Box::new(inner)))
        } else if let Some(body) = rhs.strip_prefix("union") {
            let parts: Vec<RelationSpec> = body
                .split_whitespace()
                .map(|n| self.lookup_relation(n))
                .collect::<Result<_>>()?;
            if parts.len() < 2 {
                return Err(self.err("union needs at least two relations"));
            }
            RelationSpec::new(SpecKind::Union(parts))
        } else if let Some(body) = rhs.strip_prefix("bloat") {
            let toks: Vec<&str> = body.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(self.err("bloat needs `relation epsilon`"));
            }
            let inner = self.lookup_relation(toks[0])?;
            let eps = num(toks[1]).map_err(|e| self.err(e.to_string()))?;
            RelationSpec::new(SpecKind::Bloat(Box::new(inner), eps))
        } else if rhs == "identity" {
            RelationSpec::identity()
        } else if rhs == "empty" {
            RelationSpec::empty()
        } else {
            return Err(self.err(format!("unknown relation form `{rhs}`")));
        };
        self.relations.push((name, spec));
        Ok(())
    }

    fn parse_set(&mut self, line: &str) -> Result<()> {
        let rest = line["set".len()..].trim();
        let (name, rhs) = rest
            .split_once('=')
            .ok_or_else(|| self.err("set needs `name = definition`"))?;
        let name = name.trim().to_string();
        let rhs = rhs.trim();
        let def = if rhs == "full" {
            SetDef::Full
        } else if let Some(body) = rhs.strip_prefix("rects") {
            let rects: Vec<Vec<Interval>> = body
                .split_whitespace()
                .map(|tok| parse_rect(tok).map_err(|e| self.err(e.to_string())))
                .collect::<Result<_>>()?;
            if rects.is_empty() {
                return Err(self.err("rects needs at least one rectangle"));
            }
            SetDef::Rects(rects)
        } else {
            return Err(self.err(format!("unknown set form `{rhs}`")));
        };
        self.sets.push((name, def));
        Ok(())
    }

    fn parse_command(&mut self, verb: &str, args: &[&str]) -> Result<()> {
        let kv = split_key_values(args);
        let get = |key: &str| -> Result<String> {
            kv.get(key)
                .cloned()
                .ok_or_else(|| self.err(format!("{verb} needs `{key}=`")))
        };
        let cmd = match verb {
            "block-check" => Command::BlockCheck {
                rel: get("rel")?,
                set: get("set")?,
                expect: match kv.get("expect").map(String::as_str) {
                    None => None,
                    Some("true") => Some(true),
                    Some("false") => Some(false),
                    Some(other) => {
                        return Err(self.err(format!("expect must be true|false, got `{other}`")))
                    }
                },
            },
            "omega" => Command::Omega {
                rel: get("rel")?,
                set: get("set")?,
            },
            "radius" => Command::Radius {
                rel: get("rel")?,
                set: get("set")?,
                expect: match kv.get("expect") {
                    None => None,
                    Some(r) => {
                        let iv = parse_rect(r).map_err(|e| self.err(e.to_string()))?;
                        if iv.len() != 1 {
                            return Err(self.err("radius expect must be one interval"));
                        }
                        Some((iv[0].lo, iv[0].hi))
                    }
                },
            },
            "perturb" => Command::Perturb {
                base: get("base")?,
                set: get("set")?,
                with: get("with")?,
                expect: match kv.get("expect").map(String::as_str) {
                    None => None,
                    Some("admitted") => Some(true),
                    Some("rejected") => Some(false),
                    Some(other) => {
                        return Err(
                            self.err(format!("expect must be admitted|rejected, got `{other}`"))
                        )
                    }
                },
            },
            "sweep" => Command::Sweep {
                family: get("family")?,
                param: get("param")?,
                set: get("set")?,
                values: parse_values(&get("values")?).map_err(|e| self.err(e.to_string()))?,
            },
            "oracle" => Command::Oracle {
                n_max: get("n-max")?
                    .parse()
                    .map_err(|_| self.err("bad n-max"))?,
                trials: get("trials")?
                    .parse()
                    .map_err(|_| self.err("bad trials"))?,
                seed: match kv.get("seed") {
                    None => None,
                    Some(s) => Some(s.parse().map_err(|_| self.err("bad seed"))?),
                },
                mutate: match kv.get("mutate").map(String::as_str) {
                    None => None,
                    Some("drop-invariance") => Some(Mutation::DropInvariance),
                    Some(other) => {
                        return Err(self.err(format!("unknown mutation `{other}`")))
                    }
                },
            },
            "render" => Command::Render {
                name: get("name")?,
                sets: kv
                    .get("sets")
                    .map(|s| s.split(',').map(str::to_string).collect())
                    .unwrap_or_default(),
                relations: kv
                    .get("relations")
                    .map(|s| s.split(',').map(str::to_string).collect())
                    .unwrap_or_default(),
                forbidden: kv.get("forbidden").cloned(),
            },
            _ => unreachable!(),
        };
        self.commands.push(cmd);
        Ok(())
    }
}

// ---- JSON form ----

#[derive(Deserialize)]
struct ScenarioDoc {
    name: Option<String>,
    grid: GridDoc,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    #[serde(default)]
    relations: Vec<RelationDoc>,
    #[serde(default)]
    sets: Vec<SetDocJson>,
    #[serde(default)]
    commands: Vec<CommandDoc>,
    output: Option<String>,
}

#[derive(Deserialize)]
struct GridDoc {
    bounds: Vec<[f64; 2]>,
    divisions: Vec<usize>,
}

#[derive(Deserialize)]
struct RelationDoc {
    name: String,
    map: Option<Vec<String>>,
    boxes: Option<Vec<BoxPairDoc>>,
    transpose: Option<String>,
    union: Option<Vec<String>>,
    bloat: Option<BloatDoc>,
    #[serde(default)]
    identity: bool,
    #[serde(default)]
    empty: bool,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct BoxPairDoc {
    src: Vec<[f64; 2]>,
    dst: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
struct BloatDoc {
    of: String,
    eps: f64,
}

#[derive(Deserialize)]
struct SetDocJson {
    name: String,
    rects: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    full: bool,
}

#[derive(Deserialize)]
struct CommandDoc {
    op: String,
    rel: Option<String>,
    set: Option<String>,
    base: Option<String>,
    with: Option<String>,
    family: Option<String>,
    param: Option<String>,
    values: Option<Vec<f64>>,
    expect: Option<serde_json::Value>,
    n_max: Option<usize>,
    trials: Option<usize>,
    seed: Option<u64>,
    mutate: Option<String>,
    name: Option<String>,
    sets: Option<Vec<String>>,
    relations: Option<Vec<String>>,
    forbidden: Option<String>,
}

fn to_rect(axes: &[[f64; 2]]) -> Vec<Interval> {
    axes.iter().map(|[lo, hi]| Interval::new(*lo, *hi)).collect()
}

fn parse_json(text: &str, default_name: &str) -> Result<Scenario> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let dim = doc.grid.bounds.len();
    let mut relations: Vec<(String, RelationSpec)> = Vec::new();
    let lookup = |rels: &[(String, RelationSpec)], name: &str| -> Result<RelationSpec> {
        rels.iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.clone())
            .ok_or_else(|| Error::Unresolved(name.to_string()))
    };
    for r in &doc.relations {
        let mut spec = if let Some(exprs) = &r.map {
            let parsed: Vec<Expr> = exprs
                .iter()
                .map(|e| Expr::parse(e, dim))
                .collect::<Result<_>>()?;
            RelationSpec::map(parsed)
        } else if let Some(pairs) = &r.boxes {
            RelationSpec::new(SpecKind::BoxUnion(
                pairs
                    .iter()
                    .map(|p| (to_rect(&p.src), to_rect(&p.dst)))
                    .collect(),
            ))
        } else if let Some(name) = &r.transpose {
            RelationSpec::new(SpecKind::Transpose(Box::new(lookup(&relations, name)?)))
        } else if let Some(names) = &r.union {
            RelationSpec::new(SpecKind::Union(
                names
                    .iter()
                    .map(|n| lookup(&relations, n))
                    .collect::<Result<_>>()?,
            ))
        } else if let Some(b) = &r.bloat {
            RelationSpec::new(SpecKind::Bloat(Box::new(lookup(&relations, &b.of)?), b.eps))
        } else if r.identity {
            RelationSpec::identity()
        } else if r.empty {
            RelationSpec::empty()
        } else {
            return Err(Error::Spec(format!(
                "relation `{}` has no recognized form",
                r.name
            )));
        };
        spec.params.extend(doc.params.clone());
        spec.params.extend(r.params.clone());
        relations.push((r.name.clone(), spec));
    }
    let sets = doc
        .sets
        .iter()
        .map(|s| {
            let def = if s.full {
                SetDef::Full
            } else if let Some(rects) = &s.rects {
                SetDef::Rects(rects.iter().map(|r| to_rect(r)).collect())
            } else {
                return Err(Error::Spec(format!("set `{}` has no form", s.name)));
            };
            Ok((s.name.clone(), def))
        })
        .collect::<Result<Vec<_>>>()?;
    let commands = doc
        .commands
        .iter()
        .map(|c| {
            let need = |opt: &Option<String>, what: &str| -> Result<String> {
                opt.clone()
                    .ok_or_else(|| Error::Spec(format!("{} needs `{what}`", c.op)))
            };
            Ok(match c.op.as_str() {
                "block-check" => Command::BlockCheck {
                    rel: need(&c.rel, "rel")?,
                    set: need(&c.set, "set")?,
                    expect: c.expect.as_ref().and_then(|v| v.as_bool()),
                },
                "omega" => Command::Omega {
                    rel: need(&c.rel, "rel")?,
                    set: need(&c.set, "set")?,
                },
                "radius" => Command::Radius {
                    rel: need(&c.rel, "rel")?,
                    set: need(&c.set, "set")?,
                    expect: c.expect.as_ref().and_then(|v| {
                        let arr = v.as_array()?;
                        Some((arr.first()?.as_f64()?, arr.get(1)?.as_f64()?))
                    }),
                },
                "perturb" => Command::Perturb {
                    base: need(&c.base, "base")?,
                    set: need(&c.set, "set")?,
                    with: need(&c.with, "with")?,
                    expect: c.expect.as_ref().and_then(|v| match v.as_str() {
                        Some("admitted") => Some(true),
                        Some("rejected") => Some(false),
                        _ => v.as_bool(),
                    }),
                },
                "sweep" => Command::Sweep {
                    family: need(&c.family, "family")?,
                    param: need(&c.param, "param")?,
                    set: need(&c.set, "set")?,
                    values: c.values.clone().unwrap_or_default(),
                },
                "oracle" => Command::Oracle {
                    n_max: c
                        .n_max
                        .ok_or_else(|| Error::Spec("oracle needs n_max".into()))?,
                    trials: c
                        .trials
                        .ok_or_else(|| Error::Spec("oracle needs trials".into()))?,
                    seed: c.seed,
                    mutate: match c.mutate.as_deref() {
                        None => None,
                        Some("drop-invariance") => Some(Mutation::DropInvariance),
                        Some(other) => {
                            return Err(Error::Spec(format!("unknown mutation `{other}`")))
                        }
                    },
                },
                "render" => Command::Render {
                    name: need(&c.name, "name")?,
                    sets: c.sets.clone().unwrap_or_default(),
                    relations: c.relations.clone().unwrap_or_default(),
                    forbidden: c.forbidden.clone(),
                },
                other => return Err(Error::Spec(format!("unknown command `{other}`"))),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Scenario {
        name: doc.name.unwrap_or_else(|| default_name.to_string()),
        bounds: doc.grid.bounds.iter().map(|[lo, hi]| (*lo, *hi)).collect(),
        divisions: doc.grid.divisions,
        relations,
        sets,
        commands,
        output: doc.output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
# affine contraction with an interval block
scenario affine_block
grid [-5,5] / 400
relation f = map "(x - 1) * 0.5"
relation e = empty
relation fat = bloat f 0.1
set B = rects [-1.2,-0.8]
block-check rel=f set=B expect=true
omega rel=f set=B
radius rel=f set=B
perturb base=f set=B with=e expect=admitted
render name=phase sets=B relations=f forbidden=B
"#;

    #[test]
    fn parses_sample_text() {
        let s = parse_text(SAMPLE, "fallback").unwrap();
        assert_eq!(s.name, "affine_block");
        assert_eq!(s.bounds, vec![(-5.0, 5.0)]);
        assert_eq!(s.divisions, vec![400]);
        assert_eq!(s.relations.len(), 3);
        assert_eq!(s.sets.len(), 1);
        assert_eq!(s.commands.len(), 5);
        s.validate().unwrap();
    }

    #[test]
    fn undefined_reference_fails_validation() {
        let text = "grid [0,1] / 10\nblock-check rel=f set=B\n";
        let s = parse_text(text, "t").unwrap();
        assert!(matches!(s.validate(), Err(Error::Unresolved(_))));
    }

    #[test]
    fn parse_error_carries_line() {
        let text = "grid [0,1] / 10\nrelation f = frobnicate\n";
        match parse_text(text, "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn forward_reference_in_bloat_fails() {
        let text = "grid [0,1] / 10\nrelation g = bloat f 0.1\nrelation f = identity\n";
        assert!(parse_text(text, "t").is_err());
    }

    #[test]
    fn values_range_expansion() {
        let v = parse_values("-1.3:0.01:-0.7").unwrap();
        assert_eq!(v.len(), 61);
        assert!((v[0] + 1.3).abs() < 1e-12);
        assert!((v[60] + 0.7).abs() < 1e-9);
        let w = parse_values("3.8,4.0,4.2").unwrap();
        assert_eq!(w, vec![3.8, 4.0, 4.2]);
    }

    #[test]
    fn json_equivalent_parses() {
        let json = r#"{
            "name": "affine_block",
            "grid": {"bounds": [[-5, 5]], "divisions": [400]},
            "relations": [
                {"name": "f", "map": ["(x - 1) * 0.5"]},
                {"name": "e", "empty": true}
            ],
            "sets": [{"name": "B", "rects": [[[-1.2, -0.8]]]}],
            "commands": [
                {"op": "block-check", "rel": "f", "set": "B", "expect": true},
                {"op": "perturb", "base": "f", "set": "B", "with": "e", "expect": "admitted"}
            ]
        }"#;
        let s = parse_json(json, "x").unwrap();
        assert_eq!(s.name, "affine_block");
        assert_eq!(s.commands.len(), 2);
        s.validate().unwrap();
        match &s.commands[1] {
            Command::Perturb { expect, .. } => assert_eq!(*expect, Some(true)),
            _ => panic!("wrong command"),
        }
    }

    #[test]
    fn two_dim_rect_syntax() {
        let r = parse_rect("[0,1]x[2,3]").unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[1].lo, 2.0);
        let text = "grid [0,3]x[0,3] / 30x30\nset B = rects [1,2]x[1,2]\n";
        let s = parse_text(text, "t").unwrap();
        assert_eq!(s.divisions, vec![30, 30]);
        assert_eq!(s.sets.len(), 1);
    }
}
