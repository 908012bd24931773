//! Orbit counting experiments: one enumeration pass at the largest radius,
//! bucketed into every grid radius, basepoint and region.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::boundary::{
    act_circle, measure_caps, measure_circle, parse_circle_point, BoundaryPoint, CapMeasureOptions, CircleBasepoint,
    Membership, ProjectivePoint, Region,
};
use crate::error::{Error, Result};
use crate::haar::gamma_n;
use crate::lattice::{
    Enumerator, LatticeElement, NormBound, SubgroupSpec, DEFAULT_CEILING, MAX_ENUM_DIM, MIN_ENUM_DIM,
};

/// Name of the whole-space row emitted for every radius and basepoint.
pub const WHOLE_SPACE: &str = "X";

/// Starting point of the orbit on the boundary.
#[derive(Clone, Debug, PartialEq)]
pub enum Basepoint {
    Circle(CircleBasepoint),
    /// Homogeneous coordinates of a point of P^{n-1}, as given.
    Projective(Vec<f64>),
}

impl Basepoint {
    /// Parses `inf`, `p/q` or a decimal for `n = 2`, and colon or comma
    /// separated homogeneous coordinates (`1:0:0`) otherwise.
    pub fn parse(s: &str, n: usize) -> Result<Self> {
        if n == 2 {
            return Ok(Self::Circle(parse_circle_point(s)?));
        }
        let coords = s
            .split([':', ','])
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("bad coordinate {c:?} in basepoint {s}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if coords.len() != n {
            return Err(Error::invalid(format!(
                "basepoint {s} has {} coordinates, expected {n}",
                coords.len()
            )));
        }
        ProjectivePoint::new(&coords)?;
        Ok(Self::Projective(coords))
    }

    /// `infinity` on the circle, `e_1` in projective space.
    pub fn default_for(n: usize) -> Self {
        if n == 2 {
            Self::Circle(CircleBasepoint::Rational(crate::boundary::RationalPoint::infinity()))
        } else {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            Self::Projective(e)
        }
    }

    fn group_dim(&self) -> usize {
        match self {
            Self::Circle(_) => 2,
            Self::Projective(v) => v.len(),
        }
    }

    /// Classifies `gamma . x0`; rational circle points are handled exactly.
    fn classify(&self, g: &LatticeElement, region: &Region) -> Result<Membership> {
        match self {
            Self::Circle(CircleBasepoint::Rational(p)) => {
                let e = g.entries();
                region.classify_rational(p.act(e[0], e[1], e[2], e[3]))
            }
            Self::Circle(CircleBasepoint::Real(x)) => {
                let y = act_circle(&g.to_group_element(), crate::boundary::CirclePoint::Finite(*x))?;
                region.classify(&BoundaryPoint::Circle(y))
            }
            Self::Projective(v) => {
                let n = v.len();
                let image: Vec<f64> = (0..n)
                    .map(|i| (0..n).map(|j| g.get(i, j) as f64 * v[j]).sum())
                    .collect();
                region.classify_vector(&image)
            }
        }
    }
}

impl fmt::Display for Basepoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Circle(p) => write!(f, "{p}"),
            Self::Projective(v) => {
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(":")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedRegion {
    pub name: String,
    pub region: Region,
}

impl NamedRegion {
    pub fn new(name: impl Into<String>, region: Region) -> Result<Self> {
        let name = name.into();
        check_label(&name)?;
        if name == WHOLE_SPACE {
            return Err(Error::invalid(format!("region name {WHOLE_SPACE} is reserved")));
        }
        Ok(Self { name, region })
    }
}

fn check_label(name: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(|c| c == ',' || c == '"' || c.is_whitespace()) {
        return Err(Error::invalid(format!(
            "region name {name:?} must be non-empty without commas, quotes or whitespace"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub subgroup: SubgroupSpec,
    pub t_grid: Vec<f64>,
    pub basepoints: Vec<Basepoint>,
    pub regions: Vec<NamedRegion>,
    pub seed: u64,
    /// Worker threads; `Some(1)` runs the sequential enumerator.
    pub threads: Option<usize>,
    pub ceiling: u64,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(n: usize, t_grid: Vec<f64>, regions: Vec<NamedRegion>) -> Self {
        Self {
            n,
            subgroup: SubgroupSpec::Full,
            t_grid,
            basepoints: vec![Basepoint::default_for(n)],
            regions,
            seed: 0,
            threads: None,
            ceiling: DEFAULT_CEILING,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_ENUM_DIM..=MAX_ENUM_DIM).contains(&self.n) {
            return Err(Error::Dimension {
                n: self.n,
                min: MIN_ENUM_DIM,
                max: MAX_ENUM_DIM,
            });
        }
        for t in &self.t_grid {
            NormBound::from_radius(*t)?;
        }
        if self.t_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("T grid must be strictly ascending"));
        }
        if self.regions.is_empty() {
            return Err(Error::invalid("at least one region is required"));
        }
        if self.basepoints.is_empty() {
            return Err(Error::invalid("at least one basepoint is required"));
        }
        for (i, r) in self.regions.iter().enumerate() {
            if r.region.group_dim() != self.n {
                return Err(Error::VariantMismatch);
            }
            if self.regions[..i].iter().any(|o| o.name == r.name) {
                return Err(Error::invalid(format!("duplicate region name {}", r.name)));
            }
        }
        if self.basepoints.iter().any(|b| b.group_dim() != self.n) {
            return Err(Error::VariantMismatch);
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("thread count must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub region: String,
    pub basepoint: String,
    pub count: u64,
    /// Orbit points on the region's boundary. On the whole-space row: points
    /// in no listed region's interior.
    pub boundary_hits: u64,
    pub ratio: f64,
    pub m_omega: f64,
    pub deviation: f64,
    /// `None` while no lattice point lies below `T`.
    pub covolume_est: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    pub rows: Vec<CountRow>,
}

impl CountTable {
    /// Whole-space rows of one basepoint (the first when `None`), by radius.
    pub fn whole_space(&self, basepoint: Option<&str>) -> Vec<&CountRow> {
        let bp = basepoint
            .map(str::to_owned)
            .or_else(|| self.rows.first().map(|r| r.basepoint.clone()));
        self.rows
            .iter()
            .filter(|r| r.region == WHOLE_SPACE && Some(&r.basepoint) == bp.as_ref())
            .collect()
    }

    pub fn get(&self, t: f64, region: &str, basepoint: &str) -> Option<&CountRow> {
        self.rows
            .iter()
            .find(|r| r.t == t && r.region == region && r.basepoint == basepoint)
    }

    /// Counts never decrease with the radius for a fixed region and basepoint.
    pub fn check_monotone(&self) -> Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            let earlier = self.rows[..i]
                .iter()
                .filter(|o| o.region == r.region && o.basepoint == r.basepoint && o.t < r.t);
            for o in earlier {
                if o.count > r.count {
                    return Err(Error::Numeric(format!(
                        "count of {} at {} drops from {} (T = {}) to {} (T = {})",
                        r.region, r.basepoint, o.count, o.t, r.count, r.t
                    )));
                }
            }
        }
        Ok(())
    }

    /// `N_T(X) - sum of region counts - uncovered points`, per radius and
    /// basepoint. Zero everywhere when the regions partition the space.
    pub fn partition_residuals(&self) -> Vec<(f64, String, i128)> {
        self.rows
            .iter()
            .filter(|r| r.region == WHOLE_SPACE)
            .map(|x| {
                let parts: i128 = self
                    .rows
                    .iter()
                    .filter(|r| r.region != WHOLE_SPACE && r.t == x.t && r.basepoint == x.basepoint)
                    .map(|r| r.count as i128)
                    .sum();
                (
                    x.t,
                    x.basepoint.clone(),
                    x.count as i128 - parts - x.boundary_hits as i128,
                )
            })
            .collect()
    }
}

/// `gamma_n T^{n^2-n} / N`, in log space.
pub fn covolume_estimate(n: usize, t: f64, count: u64) -> Result<f64> {
    if count == 0 {
        return Err(Error::invalid(format!("no lattice points below T = {t}")));
    }
    let nf = n as f64;
    Ok((gamma_n(n)?.ln() + (nf * nf - nf) * t.ln() - (count as f64).ln()).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovolumeEstimate {
    pub t: f64,
    pub value: f64,
}

/// Covolume estimates from the whole-space rows of every basepoint.
pub fn estimate_covolume(table: &CountTable, n: usize) -> Result<Vec<(String, CovolumeEstimate)>> {
    table
        .rows
        .iter()
        .filter(|r| r.region == WHOLE_SPACE)
        .map(|r| {
            Ok((
                r.basepoint.clone(),
                CovolumeEstimate {
                    t: r.t,
                    value: covolume_estimate(n, r.t, r.count)?,
                },
            ))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least-squares slope of `log N_T(X)` against `log T`.
pub fn fit_exponent(table: &CountTable) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> = table
        .whole_space(None)
        .into_iter()
        .filter(|r| r.count > 0)
        .map(|r| (r.t.ln(), (r.count as f64).ln()))
        .collect();
    fit_line(&pts)
}

pub(crate) fn fit_line(pts: &[(f64, f64)]) -> Result<ExponentFit> {
    if pts.len() < 3 {
        return Err(Error::invalid(format!(
            "degenerate grid: {} points with nonzero counts, need 3",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::invalid("degenerate grid: all radii coincide"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(ExponentFit {
        slope,
        intercept: my - slope * mx,
        r2,
        points: pts.len(),
    })
}

/// Per-worker tallies. Layout `[radius][basepoint][region]`.
#[derive(Clone)]
struct Tally {
    regions: usize,
    basepoints: usize,
    total: Vec<u64>,
    inside: Vec<u64>,
    boundary: Vec<u64>,
    uncovered: Vec<u64>,
}

impl Tally {
    fn new(radii: usize, basepoints: usize, regions: usize) -> Self {
        Self {
            regions,
            basepoints,
            total: vec![0; radii],
            inside: vec![0; radii * basepoints * regions],
            boundary: vec![0; radii * basepoints * regions],
            uncovered: vec![0; radii * basepoints],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        let add = |a: &mut Vec<u64>, b: &[u64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.total, &other.total);
        add(&mut self.inside, &other.inside);
        add(&mut self.boundary, &other.boundary);
        add(&mut self.uncovered, &other.uncovered);
        self
    }
}

struct Bucketer<'a> {
    bounds: Vec<NormBound>,
    config: &'a ExperimentConfig,
}

impl Bucketer<'_> {
    fn add(&self, tally: &mut Tally, g: &LatticeElement) -> Result<()> {
        let norm = g.norm_sq();
        let Some(k) = self.bounds.iter().position(|b| b.admits(norm)) else {
            return Ok(());
        };
        tally.total[k] += 1;
        for (b, bp) in self.config.basepoints.iter().enumerate() {
            let mut covered = false;
            for (r, region) in self.config.regions.iter().enumerate() {
                let idx = (k * tally.basepoints + b) * tally.regions + r;
                match bp.classify(g, &region.region)? {
                    Membership::Inside => {
                        tally.inside[idx] += 1;
                        covered = true;
                    }
                    Membership::Boundary => tally.boundary[idx] += 1,
                    Membership::Outside => {}
                }
            }
            if !covered {
                tally.uncovered[k * tally.basepoints + b] += 1;
            }
        }
        Ok(())
    }
}

fn region_measure(region: &Region, n: usize, seed: u64) -> Result<f64> {
    match region {
        Region::CircleArcs(_) => Ok(measure_circle(region)?.value),
        Region::Caps(_) => {
            let opts = CapMeasureOptions {
                seed,
                ..Default::default()
            };
            Ok(measure_caps(region, n, &opts)?.value)
        }
    }
}

/// Counts orbit points `gamma . x0` in every region for every grid radius.
pub fn run_count(config: &ExperimentConfig) -> Result<CountTable> {
    config.validate()?;
    if config.t_grid.is_empty() {
        return Ok(CountTable::default());
    }
    let t_max = *config.t_grid.last().expect("non-empty grid");
    let enumerator = Enumerator::new(config.n, t_max, config.subgroup)?.with_ceiling(config.ceiling);
    let bucketer = Bucketer {
        bounds: config
            .t_grid
            .iter()
            .map(|t| NormBound::from_radius(*t))
            .collect::<Result<_>>()?,
        config,
    };
    let (radii, nb, nr) = (config.t_grid.len(), config.basepoints.len(), config.regions.len());
    let empty = || Tally::new(radii, nb, nr);

    let tally = match config.threads {
        Some(1) => {
            let mut tally = empty();
            let mut failure = None;
            enumerator.for_each(|g| {
                if failure.is_none() {
                    if let Err(e) = bucketer.add(&mut tally, g) {
                        failure = Some(e);
                    }
                }
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            tally
        }
        threads => {
            let run = || {
                enumerator.par_fold(
                    || (empty(), None::<Error>),
                    |(tally, failure), g| {
                        if failure.is_none() {
                            *failure = bucketer.add(tally, g).err();
                        }
                    },
                    |(a, ea), (b, eb)| (a.merge(b), ea.or(eb)),
                )
            };
            let (tally, failure) = match threads {
                Some(k) => rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build()
                    .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
                    .install(run)?,
                None => run()?,
            };
            if let Some(e) = failure {
                return Err(e);
            }
            tally
        }
    };

    let measures: Vec<f64> = config
        .regions
        .iter()
        .map(|r| region_measure(&r.region, config.n, config.seed))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(radii * nb * (nr + 1));
    let mut total = 0u64;
    let mut inside = vec![0u64; nb * nr];
    let mut boundary = vec![0u64; nb * nr];
    let mut uncovered = vec![0u64; nb];
    for (k, &t) in config.t_grid.iter().enumerate() {
        // prefix sums: radius k contains every element bucketed at or below k
        total += tally.total[k];
        for i in 0..nb * nr {
            inside[i] += tally.inside[k * nb * nr + i];
            boundary[i] += tally.boundary[k * nb * nr + i];
        }
        for b in 0..nb {
            uncovered[b] += tally.uncovered[k * nb + b];
        }
        let covolume = if total == 0 {
            None
        } else {
            Some(covolume_estimate(config.n, t, total)?)
        };
        for (b, bp) in config.basepoints.iter().enumerate() {
            let label = bp.to_string();
            rows.push(CountRow {
                t,
                region: WHOLE_SPACE.to_owned(),
                basepoint: label.clone(),
                count: total,
                boundary_hits: uncovered[b],
                ratio: if total == 0 { 0.0 } else { 1.0 },
                m_omega: 1.0,
                deviation: if total == 0 { 1.0 } else { 0.0 },
                covolume_est: covolume,
            });
            for (r, region) in config.regions.iter().enumerate() {
                let count = inside[b * nr + r];
                let ratio = if total == 0 { 0.0 } else { count as f64 / total as f64 };
                rows.push(CountRow {
                    t,
                    region: region.name.clone(),
                    basepoint: label.clone(),
                    count,
                    boundary_hits: boundary[b * nr + r],
                    ratio,
                    m_omega: measures[r],
                    deviation: (ratio - measures[r]).abs(),
                    covolume_est: covolume,
                });
            }
        }
    }
    let table = CountTable { rows };
    table.check_monotone()?;
    Ok(table)
}
