use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use orbitcount_core::boundary::{measure_caps, measure_circle, CapMeasureOptions, Region};
use orbitcount_core::config::{parse_config, parse_grid, parse_regions, parse_subgroup, render_config, ConfigFile};
use orbitcount_core::ergodic::{ergodic_average, left_haar_average, nu_integral, CosetPoint, DomainBox, TestFunction};
use orbitcount_core::experiment::{estimate_covolume, fit_exponent, run_count, Basepoint, ExperimentConfig};
use orbitcount_core::haar::{rho_ball_volume, Chirality};
use orbitcount_core::lattice::{Enumerator, SubgroupSpec, DEFAULT_CEILING};
use orbitcount_core::report::{
    emit_report, read_csv, read_json, write_ergodic_csv, write_rows_json, write_volume_csv, ErgodicRow, ReportFormat,
    RunMetadata, VolumeRow,
};
use orbitcount_core::{CountTable, Error, GroupElement, Result};

use crate::{CountArgs, EnumerateArgs, ErgodicArgs, MeasureArgs, ReportArgs, VolumeArgs};

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub fn init_threads(threads: Option<usize>) -> Result<()> {
    match threads {
        Some(0) => Err(invalid("--threads must be at least 1")),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Numeric(e.to_string())),
        None => Ok(()),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn default_grid(n: usize) -> Vec<f64> {
    match n {
        2 => vec![50.0, 100.0, 200.0, 400.0],
        3 => vec![4.0, 6.0, 8.0, 10.0, 12.0],
        _ => vec![2.0, 3.0, 4.0],
    }
}

pub fn enumerate(a: EnumerateArgs) -> Result<()> {
    let spec = parse_subgroup(&a.subgroup)?;
    let e = Enumerator::new(a.n, a.t, spec)?.with_ceiling(a.ceiling.unwrap_or(DEFAULT_CEILING));
    let mut out = open_output(a.out.as_deref())?;
    let mut failure = None;
    let total = e.for_each(|g| {
        if failure.is_none() {
            if let Err(err) = writeln!(out, "{g}") {
                failure = Some(err);
            }
        }
    })?;
    if let Some(err) = failure {
        return Err(err.into());
    }
    out.flush()?;
    info!("{total} elements with norm below {}", a.t);
    Ok(())
}

/// File values first, then command-line overrides.
fn resolve_count(a: &CountArgs, threads: Option<usize>) -> Result<(ExperimentConfig, ReportFormat, Option<PathBuf>)> {
    let file = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let base = path.parent().unwrap_or(Path::new("."));
            parse_config(&text, base)?
        }
        None => ConfigFile::default(),
    };
    let n = a.n.or(file.n).unwrap_or(2);
    let t_grid = match &a.t_grid {
        Some(s) => parse_grid(s)?,
        None => file.t_grid.clone().unwrap_or_else(|| default_grid(n)),
    };
    let mut regions = match &a.region_file {
        Some(p) => parse_regions(&fs::read_to_string(p)?)?,
        None => match &file.region_file {
            Some(p) => parse_regions(&fs::read_to_string(p)?)?,
            None => Vec::new(),
        },
    };
    regions.extend(file.regions.iter().cloned());

    let mut config = ExperimentConfig::new(n, t_grid, regions);
    config.subgroup = match &a.subgroup {
        Some(s) => parse_subgroup(s)?,
        None => file.subgroup.unwrap_or(SubgroupSpec::Full),
    };
    let bps: Option<Vec<String>> = if a.basepoints.is_empty() {
        file.basepoints.clone()
    } else {
        Some(a.basepoints.clone())
    };
    if let Some(bps) = bps {
        config.basepoints = bps.iter().map(|s| Basepoint::parse(s, n)).collect::<Result<_>>()?;
    }
    config.seed = a.seed.or(file.seed).unwrap_or(0);
    config.threads = threads.or(file.threads);
    if let Some(c) = a.ceiling.or(file.ceiling) {
        config.ceiling = c;
    }
    let format: ReportFormat = a
        .format
        .as_deref()
        .or(file.format.as_deref())
        .unwrap_or("csv")
        .parse()?;
    let output = a.out.clone().or(file.output);
    config.validate()?;
    Ok((config, format, output))
}

pub fn count(a: CountArgs, threads: Option<usize>) -> Result<()> {
    let (config, format, output) = resolve_count(&a, threads)?;
    let rendered = render_config(&config);
    info!("resolved configuration:\n{rendered}");
    let table = run_count(&config)?;
    for (t, bp, residual) in table.partition_residuals() {
        if residual != 0 {
            info!("regions at T = {t}, basepoint {bp} leave {residual} orbit points uncovered");
        }
    }
    let meta = RunMetadata::new(&rendered, config.seed);
    let mut out = open_output(output.as_deref())?;
    emit_report(&mut out, &table, format, &meta)?;
    out.flush()?;
    Ok(())
}

fn parse_cone(s: &str) -> Result<Vec<f64>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| invalid(format!("bad cone parameter {p:?}")))
        })
        .collect()
}

pub fn volume(a: VolumeArgs) -> Result<()> {
    let format: ReportFormat = a.format.parse()?;
    let grid = parse_grid(&a.t_grid)?;
    let cones = parse_cone(&a.c)?;
    let mut rows = Vec::new();
    for &t in &grid {
        for &c in &cones {
            let v = rho_ball_volume(a.n, t, c)?;
            rows.push(VolumeRow {
                n: a.n,
                t,
                c,
                value: v.value,
                error: v.quadrature_error,
            });
        }
    }
    let mut out = open_output(a.out.as_deref())?;
    match format {
        ReportFormat::Csv => write_volume_csv(&mut out, &rows)?,
        ReportFormat::Json => {
            let text = format!("volume n = {} T-grid = {} C = {}\n", a.n, a.t_grid, a.c);
            write_rows_json(&mut out, &rows, &RunMetadata::new(&text, 0))?
        }
    }
    out.flush()?;
    Ok(())
}

pub fn measure(a: MeasureArgs) -> Result<()> {
    let regions = parse_regions(&fs::read_to_string(&a.region_file)?)?;
    if regions.is_empty() {
        return Err(invalid(format!("no [region] stanzas in {}", a.region_file.display())));
    }
    let opts = CapMeasureOptions {
        seed: a.seed,
        batch: a.samples,
        ..CapMeasureOptions::default()
    };
    let mut out = open_output(a.out.as_deref())?;
    writeln!(out, "region,measure,error_bound")?;
    for r in &regions {
        let m = match &r.region {
            Region::CircleArcs(_) if a.n == 2 => measure_circle(&r.region)?,
            Region::Caps(_) => measure_caps(&r.region, a.n, &opts)?,
            _ => return Err(Error::VariantMismatch),
        };
        writeln!(out, "{},{},{}", r.name, m.value, m.error_bound)?;
    }
    out.flush()?;
    Ok(())
}

fn parse_floats(s: &str, len: usize, what: &str) -> Result<Vec<f64>> {
    let v = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("bad {what} {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if v.len() != len {
        return Err(invalid(format!("{what} needs {len} comma separated values, got {s:?}")));
    }
    Ok(v)
}

pub fn ergodic(a: ErgodicArgs) -> Result<()> {
    let format: ReportFormat = a.format.parse()?;
    let grid = parse_grid(&a.t_grid)?;
    let b = parse_floats(&a.region, 4, "box")?;
    let region = DomainBox::new(b[0], b[1], b[2], b[3])?;
    let f = match a.function.as_str() {
        "indicator" => TestFunction::IndicatorBox { region },
        "bump" => TestFunction::ContinuousBump { region },
        other => {
            return Err(invalid(format!(
                "unknown test function {other:?}, expected indicator or bump"
            )))
        }
    };
    let chirality: Chirality = a.chirality.parse()?;
    let y = match a.basepoint.as_str() {
        "identity" => CosetPoint::identity(),
        s => CosetPoint::new(GroupElement::from_row_major(
            2,
            &parse_floats(s, 4, "basepoint matrix")?,
        )?)?,
    };
    let nu = nu_integral(&f, a.nu_samples.unwrap_or(a.samples), a.seed)?;
    let mut rows = Vec::new();
    for &t in &grid {
        let est = match chirality {
            Chirality::Right => ergodic_average(&y, &f, t, a.samples, a.seed)?,
            Chirality::Left => left_haar_average(&y, &f, t, a.samples, a.seed)?,
        };
        info!("T = {t}: {:.5} +- {:.5}", est.value, est.std_error);
        rows.push(ErgodicRow {
            t,
            estimate: est.value,
            std_error: est.std_error,
            nu_value: nu.value,
        });
    }
    let mut out = open_output(a.out.as_deref())?;
    match format {
        ReportFormat::Csv => write_ergodic_csv(&mut out, &rows)?,
        ReportFormat::Json => {
            let text = format!(
                "ergodic T-grid = {} samples = {} box = {} function = {} chirality = {} basepoint = {}\n",
                a.t_grid, a.samples, a.region, a.function, a.chirality, a.basepoint
            );
            write_rows_json(&mut out, &rows, &RunMetadata::new(&text, a.seed))?
        }
    }
    out.flush()?;
    Ok(())
}

pub fn report(a: ReportArgs) -> Result<()> {
    let format: ReportFormat = a.format.parse()?;
    let mut text = String::new();
    BufReader::new(File::open(&a.input)?).read_to_string(&mut text)?;
    let (table, meta) = if text.trim_start().starts_with('{') {
        let r = read_json(text.as_bytes())?;
        (CountTable { rows: r.rows }, r.metadata)
    } else {
        let table = read_csv(text.as_bytes())?;
        if format == ReportFormat::Json {
            warn!("CSV input carries no run metadata; the JSON header describes the input file only");
        }
        (table, RunMetadata::new(&format!("report {}\n", a.input.display()), 0))
    };
    table.check_monotone()?;
    if a.summary {
        summarize(&table, a.n);
    }
    let mut out = open_output(a.out.as_deref())?;
    emit_report(&mut out, &table, format, &meta)?;
    out.flush()?;
    Ok(())
}

fn summarize(table: &CountTable, n: Option<usize>) {
    match fit_exponent(table) {
        Ok(fit) => eprintln!(
            "exponent fit: slope {:.4}, r^2 {:.6} over {} radii",
            fit.slope, fit.r2, fit.points
        ),
        Err(e) => eprintln!("exponent fit unavailable: {e}"),
    }
    if let Some(n) = n {
        match estimate_covolume(table, n) {
            Ok(est) => {
                for (bp, e) in est {
                    eprintln!("covolume estimate at T = {}, basepoint {bp}: {:.6}", e.t, e.value);
                }
            }
            Err(e) => eprintln!("covolume estimate unavailable: {e}"),
        }
    }
}
