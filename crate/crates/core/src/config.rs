//! Plain-text configuration: `[section]` headers followed by `key = value`
//! lines. `#` starts a comment.
//!
//! ```text
//! [experiment]
//! n = 2
//! subgroup = full
//! T-grid = 50 100 200 400
//! basepoints = inf 0 1/3
//! region-file = regions.txt
//!
//! [region]
//! name = inner
//! arc = -1 1
//!
//! [region]
//! name = outer
//! wrap = 1 -1
//! ```
//!
//! Region stanzas take `arc = lo hi` (bounds may be `-inf`/`inf`),
//! `arc = full`, `wrap = from to` for the arc through infinity, or
//! `cap = angle x1 .. xn` with the angle in radians or suffixed `deg`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::boundary::{Arc, Cap, Region};
use crate::error::{Error, Result};
use crate::experiment::{ExperimentConfig, NamedRegion};
use crate::lattice::SubgroupSpec;

#[derive(Clone, Debug, PartialEq)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Clone, Debug, PartialEq)]
struct Stanza {
    section: String,
    line: usize,
    entries: Vec<Entry>,
}

fn parse_stanzas(text: &str) -> Result<Vec<Stanza>> {
    let mut out: Vec<Stanza> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            out.push(Stanza {
                section: name.trim().to_owned(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::parse(line, format!("expected key = value, found {content:?}")));
        };
        let Some(stanza) = out.last_mut() else {
            return Err(Error::parse(line, "key outside of a [section]"));
        };
        stanza.entries.push(Entry {
            key: key.trim().to_owned(),
            value: value.trim().to_owned(),
            line,
        });
    }
    Ok(out)
}

fn parse_bound(s: &str, line: usize) -> Result<f64> {
    match s {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::parse(line, format!("bad number {s:?}"))),
    }
}

fn parse_angle(s: &str, line: usize) -> Result<f64> {
    let (num, scale) = match s.strip_suffix("deg") {
        Some(deg) => (deg, std::f64::consts::PI / 180.0),
        None => (s, 1.0),
    };
    Ok(parse_bound(num, line)? * scale)
}

fn region_from_stanza(stanza: &Stanza) -> Result<NamedRegion> {
    let mut name = None;
    let mut arcs = Vec::new();
    let mut caps = Vec::new();
    for e in &stanza.entries {
        let parts: Vec<&str> = e.value.split_whitespace().collect();
        let with_line = |err: Error| match err {
            Error::Parse { .. } => err,
            other => Error::parse(e.line, other.to_string()),
        };
        match e.key.as_str() {
            "name" => name = Some(e.value.clone()),
            "arc" if parts == ["full"] => arcs.push(Arc::Full),
            "arc" if parts.len() == 2 => arcs.push(Arc::Interval {
                lo: parse_bound(parts[0], e.line)?,
                hi: parse_bound(parts[1], e.line)?,
            }),
            "wrap" if parts.len() == 2 => arcs.push(Arc::ThroughInfinity {
                from: parse_bound(parts[0], e.line)?,
                to: parse_bound(parts[1], e.line)?,
            }),
            "cap" if parts.len() >= 3 => {
                let angle = parse_angle(parts[0], e.line)?;
                let axis = parts[1..]
                    .iter()
                    .map(|p| parse_bound(p, e.line))
                    .collect::<Result<Vec<f64>>>()?;
                caps.push(Cap::new(&axis, angle).map_err(with_line)?);
            }
            "arc" | "wrap" | "cap" => {
                return Err(Error::parse(e.line, format!("malformed {} = {}", e.key, e.value)));
            }
            other => return Err(Error::parse(e.line, format!("unknown region key {other:?}"))),
        }
    }
    let name = name.ok_or_else(|| Error::parse(stanza.line, "region without a name"))?;
    let region = match (arcs.is_empty(), caps.is_empty()) {
        (false, true) => Region::arcs(arcs),
        (true, false) => Region::caps(caps),
        (true, true) => return Err(Error::parse(stanza.line, format!("region {name} is empty"))),
        (false, false) => {
            return Err(Error::parse(stanza.line, format!("region {name} mixes arcs and caps")));
        }
    };
    let region = region.map_err(|e| Error::parse(stanza.line, e.to_string()))?;
    NamedRegion::new(name, region).map_err(|e| Error::parse(stanza.line, e.to_string()))
}

/// Reads every `[region]` stanza.
pub fn parse_regions(text: &str) -> Result<Vec<NamedRegion>> {
    parse_stanzas(text)?
        .iter()
        .filter(|s| s.section == "region")
        .map(region_from_stanza)
        .collect()
}

/// Values from an experiment file. Basepoints stay textual until the
/// dimension is resolved.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    pub n: Option<usize>,
    pub subgroup: Option<SubgroupSpec>,
    pub t_grid: Option<Vec<f64>>,
    pub basepoints: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub ceiling: Option<u64>,
    pub format: Option<String>,
    pub output: Option<PathBuf>,
    /// Resolved against the directory of the config file.
    pub region_file: Option<PathBuf>,
    pub regions: Vec<NamedRegion>,
}

pub fn parse_subgroup(s: &str) -> Result<SubgroupSpec> {
    match s {
        "full" => Ok(SubgroupSpec::Full),
        q => SubgroupSpec::principal(
            q.parse()
                .map_err(|_| Error::invalid(format!("subgroup must be full or a modulus, got {q:?}")))?,
        ),
    }
}

/// Parses a list of radii separated by whitespace or commas.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad radius {p:?} in T grid")))
        })
        .collect()
}

pub fn parse_config(text: &str, base_dir: &Path) -> Result<ConfigFile> {
    let mut cfg = ConfigFile::default();
    for stanza in parse_stanzas(text)? {
        match stanza.section.as_str() {
            "region" => cfg.regions.push(region_from_stanza(&stanza)?),
            "experiment" => {
                for e in &stanza.entries {
                    let v = e.value.as_str();
                    let wrap = |err: Error| Error::parse(e.line, err.to_string());
                    let num = |what: &str| Error::parse(e.line, format!("bad {what} {v:?}"));
                    match e.key.as_str() {
                        "n" => cfg.n = Some(v.parse().map_err(|_| num("dimension"))?),
                        "subgroup" => cfg.subgroup = Some(parse_subgroup(v).map_err(wrap)?),
                        "T-grid" | "t-grid" => cfg.t_grid = Some(parse_grid(v).map_err(wrap)?),
                        "basepoints" | "basepoint" => {
                            cfg.basepoints = Some(v.split_whitespace().map(str::to_owned).collect())
                        }
                        "seed" => cfg.seed = Some(v.parse().map_err(|_| num("seed"))?),
                        "threads" => cfg.threads = Some(v.parse().map_err(|_| num("thread count"))?),
                        "ceiling" => cfg.ceiling = Some(v.parse().map_err(|_| num("ceiling"))?),
                        "format" => cfg.format = Some(v.to_owned()),
                        "out" => cfg.output = Some(base_dir.join(v)),
                        "region-file" => cfg.region_file = Some(base_dir.join(v)),
                        other => return Err(Error::parse(e.line, format!("unknown experiment key {other:?}"))),
                    }
                }
            }
            other => return Err(Error::parse(stanza.line, format!("unknown section [{other}]"))),
        }
    }
    Ok(cfg)
}

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

/// Region stanza text; parses back to the same region.
pub fn render_region(r: &NamedRegion) -> String {
    let mut out = format!("[region]\nname = {}\n", r.name);
    match &r.region {
        Region::CircleArcs(arcs) => {
            for a in arcs {
                let _ = match *a {
                    Arc::Interval { lo, hi } => writeln!(out, "arc = {} {}", fmt_bound(lo), fmt_bound(hi)),
                    Arc::ThroughInfinity { from, to } => writeln!(out, "wrap = {from} {to}"),
                    Arc::Full => writeln!(out, "arc = full"),
                };
            }
        }
        Region::Caps(caps) => {
            for c in caps {
                let axis: Vec<String> = c.axis().iter().map(f64::to_string).collect();
                let _ = writeln!(out, "cap = {} {}", c.angle(), axis.join(" "));
            }
        }
    }
    out
}

/// Canonical text of a resolved configuration. Hashing this identifies a run.
pub fn render_config(c: &ExperimentConfig) -> String {
    let grid: Vec<String> = c.t_grid.iter().map(f64::to_string).collect();
    let bps: Vec<String> = c.basepoints.iter().map(ToString::to_string).collect();
    let subgroup = match c.subgroup {
        SubgroupSpec::Full => "full".to_owned(),
        SubgroupSpec::PrincipalCongruence { q } => q.to_string(),
    };
    let mut out = String::from("[experiment]\n");
    let _ = writeln!(out, "n = {}", c.n);
    let _ = writeln!(out, "subgroup = {subgroup}");
    let _ = writeln!(out, "T-grid = {}", grid.join(" "));
    let _ = writeln!(out, "basepoints = {}", bps.join(" "));
    let _ = writeln!(out, "seed = {}", c.seed);
    let _ = writeln!(out, "ceiling = {}", c.ceiling);
    for r in &c.regions {
        out.push('\n');
        out.push_str(&render_region(r));
    }
    out
}
