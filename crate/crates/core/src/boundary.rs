//! Boundary spaces on which SL(n,R) acts: the extended real line (n = 2, by
//! fractional linear maps) and projective space P^{n-1} (standard linear
//! action). Regions are finite unions of open arcs or of antipodal caps, and
//! `m` is the rotation-invariant probability measure.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::group::GroupElement;

/// Relative tolerance under which a floating point orbit point is declared to
/// sit on a region boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Point of the extended real line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CirclePoint {
    Finite(f64),
    Infinity,
}

/// Point of `R u {infinity}` with integer homogeneous coordinates `num / den`;
/// `den = 0` is infinity. Normalised so `den >= 0` and `gcd = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RationalPoint {
    num: i128,
    den: i128,
}

impl RationalPoint {
    pub fn new(num: i128, den: i128) -> Result<Self> {
        if num == 0 && den == 0 {
            return Err(Error::invalid("0/0 is not a point of the extended line"));
        }
        let g = gcd(num, den);
        let (mut num, mut den) = (num / g, den / g);
        if den < 0 || (den == 0 && num < 0) {
            num = -num;
            den = -den;
        }
        Ok(Self { num, den })
    }

    pub fn infinity() -> Self {
        Self { num: 1, den: 0 }
    }

    pub fn num(&self) -> i128 {
        self.num
    }

    pub fn den(&self) -> i128 {
        self.den
    }

    pub fn is_infinite(&self) -> bool {
        self.den == 0
    }

    /// `(a x + b) / (c x + d)` in homogeneous integer coordinates.
    pub fn act(&self, a: i64, b: i64, c: i64, d: i64) -> Self {
        let num = a as i128 * self.num + b as i128 * self.den;
        let den = c as i128 * self.num + d as i128 * self.den;
        // det = 1 keeps (num, den) coprime
        if den < 0 || (den == 0 && num < 0) {
            Self { num: -num, den: -den }
        } else {
            Self { num, den }
        }
    }

    pub fn to_circle_point(&self) -> CirclePoint {
        if self.den == 0 {
            CirclePoint::Infinity
        } else {
            CirclePoint::Finite(self.num as f64 / self.den as f64)
        }
    }
}

impl fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.num, self.den) {
            (_, 0) => f.write_str("inf"),
            (p, 1) => write!(f, "{p}"),
            (p, q) => write!(f, "{p}/{q}"),
        }
    }
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Exact comparison of `num / den` (`den > 0`) with a finite double.
fn cmp_rational(num: i128, den: i128, e: f64) -> Ordering {
    debug_assert!(den > 0 && e.is_finite());
    if e == 0.0 {
        return num.cmp(&0);
    }
    let bits = e.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i128;
    let (mant, exp) = if raw_exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1i128 << 52), raw_exp - 1075)
    };
    let mant = if e < 0.0 { -mant } else { mant };
    // compare num with mant * 2^exp * den
    let rhs = mant.checked_mul(den);
    let exact = match rhs {
        Some(rhs) if exp >= 0 => {
            if exp < 64 {
                rhs.checked_mul(1i128 << exp).map(|r| num.cmp(&r))
            } else {
                None
            }
        }
        Some(rhs) => {
            let k = (-exp) as u32;
            if k < 100 {
                num.checked_mul(1i128 << k).map(|l| l.cmp(&rhs))
            } else {
                None
            }
        }
        None => None,
    };
    exact.unwrap_or_else(|| (num as f64 / den as f64).total_cmp(&e))
}

/// Unit vector in R^n up to sign; canonical representative has its first
/// non-negligible coordinate positive.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectivePoint(Vec<f64>);

impl ProjectivePoint {
    pub fn new(v: &[f64]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid("projective point needs a nonzero finite vector"));
        }
        let mut u: Vec<f64> = v.iter().map(|x| x / norm).collect();
        if let Some(first) = u.iter().find(|x| x.abs() > BOUNDARY_TOLERANCE) {
            if *first < 0.0 {
                u.iter_mut().for_each(|x| *x = -*x);
            }
        }
        Ok(Self(u))
    }

    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::invalid("basis index out of range"));
        }
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        Self::new(&v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryPoint {
    Circle(CirclePoint),
    Projective(ProjectivePoint),
}

/// `(a x + b) / (c x + d)`; infinity maps to `a / c`, poles map to infinity.
pub fn act_circle(g: &GroupElement, x: CirclePoint) -> Result<CirclePoint> {
    if g.dim() != 2 {
        return Err(Error::VariantMismatch);
    }
    let m = g.matrix();
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    Ok(match x {
        CirclePoint::Infinity => {
            if c == 0.0 {
                CirclePoint::Infinity
            } else {
                CirclePoint::Finite(a / c)
            }
        }
        CirclePoint::Finite(x) => {
            let den = c * x + d;
            if den == 0.0 {
                CirclePoint::Infinity
            } else {
                CirclePoint::Finite((a * x + b) / den)
            }
        }
    })
}

/// `g v / |g v|`, canonical sign.
pub fn act_projective(g: &GroupElement, p: &ProjectivePoint) -> Result<ProjectivePoint> {
    if g.dim() != p.dim() {
        return Err(Error::VariantMismatch);
    }
    ProjectivePoint::new(&g.matrix().mul_vec(p.coords()))
}

/// Open arc of the extended line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Arc {
    /// `(lo, hi)`, `lo < hi`; `lo` may be `-inf` and `hi` may be `+inf`
    /// (infinity itself is then a boundary point, not a member).
    Interval { lo: f64, hi: f64 },
    /// `{x > from} u {infinity} u {x < to}` with finite `to <= from`.
    ThroughInfinity { from: f64, to: f64 },
    /// The whole extended line.
    Full,
}

impl Arc {
    fn validate(&self) -> Result<()> {
        match *self {
            Arc::Interval { lo, hi } => {
                if lo.is_nan() || hi.is_nan() || !(lo < hi) || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                    return Err(Error::invalid(format!("invalid arc ({lo}, {hi})")));
                }
            }
            Arc::ThroughInfinity { from, to } => {
                if !from.is_finite() || !to.is_finite() || to > from {
                    return Err(Error::invalid(format!(
                        "arc through infinity needs finite to <= from, got from {from}, to {to}"
                    )));
                }
            }
            Arc::Full => {}
        }
        Ok(())
    }

    /// `m(arc) = (1/pi) int dt / (1 + t^2)`.
    pub fn measure(&self) -> f64 {
        match *self {
            Arc::Interval { lo, hi } => (hi.atan() - lo.atan()) / PI,
            Arc::ThroughInfinity { from, to } => 1.0 - (from.atan() - to.atan()) / PI,
            Arc::Full => 1.0,
        }
    }

    /// Angular parametrisation `x -> atan x` on a circle of length pi:
    /// (start, length).
    fn angular(&self) -> (f64, f64) {
        match *self {
            Arc::Interval { lo, hi } => (lo.atan(), hi.atan() - lo.atan()),
            Arc::ThroughInfinity { from, to } => (from.atan(), PI - (from.atan() - to.atan())),
            Arc::Full => (-FRAC_PI_2, PI),
        }
    }

    fn classify_real(&self, x: CirclePoint) -> Membership {
        let near = |a: f64, b: f64| (a - b).abs() <= BOUNDARY_TOLERANCE * a.abs().max(b.abs()).max(1.0);
        match (*self, x) {
            (Arc::Full, _) => Membership::Inside,
            (Arc::Interval { lo, hi }, CirclePoint::Infinity) => {
                if lo == f64::NEG_INFINITY || hi == f64::INFINITY {
                    Membership::Boundary
                } else {
                    Membership::Outside
                }
            }
            (Arc::Interval { lo, hi }, CirclePoint::Finite(x)) => {
                if (lo.is_finite() && near(x, lo)) || (hi.is_finite() && near(x, hi)) {
                    Membership::Boundary
                } else if lo < x && x < hi {
                    Membership::Inside
                } else {
                    Membership::Outside
                }
            }
            (Arc::ThroughInfinity { .. }, CirclePoint::Infinity) => Membership::Inside,
            (Arc::ThroughInfinity { from, to }, CirclePoint::Finite(x)) => {
                if near(x, from) || near(x, to) {
                    Membership::Boundary
                } else if x > from || x < to {
                    Membership::Inside
                } else {
                    Membership::Outside
                }
            }
        }
    }

    fn classify_rational(&self, p: RationalPoint) -> Membership {
        if p.is_infinite() {
            return self.classify_real(CirclePoint::Infinity);
        }
        let (num, den) = (p.num, p.den);
        let side = |e: f64| -> Ordering {
            if e == f64::INFINITY {
                Ordering::Less
            } else if e == f64::NEG_INFINITY {
                Ordering::Greater
            } else {
                cmp_rational(num, den, e)
            }
        };
        match *self {
            Arc::Full => Membership::Inside,
            Arc::Interval { lo, hi } => match (side(lo), side(hi)) {
                (Ordering::Equal, _) | (_, Ordering::Equal) => Membership::Boundary,
                (Ordering::Greater, Ordering::Less) => Membership::Inside,
                _ => Membership::Outside,
            },
            Arc::ThroughInfinity { from, to } => match (side(from), side(to)) {
                (Ordering::Equal, _) | (_, Ordering::Equal) => Membership::Boundary,
                (Ordering::Greater, _) | (_, Ordering::Less) => Membership::Inside,
                _ => Membership::Outside,
            },
        }
    }
}

/// Antipodal cap `{x : |<x, axis>| > cos angle}` in P^{n-1}.
#[derive(Clone, Debug, PartialEq)]
pub struct Cap {
    axis: Vec<f64>,
    angle: f64,
}

impl Cap {
    pub fn new(axis: &[f64], angle: f64) -> Result<Self> {
        if !(angle > 0.0 && angle < FRAC_PI_2) {
            return Err(Error::invalid(format!("cap angle must lie in (0, pi/2), got {angle}")));
        }
        let axis = ProjectivePoint::new(axis)?.0;
        Ok(Self { axis, angle })
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Closed form on P^2: the two antipodal caps cover `2 * 2 pi (1 - cos a)`
    /// of the sphere's `4 pi`.
    pub fn measure_p2(&self) -> f64 {
        1.0 - self.angle.cos()
    }

    fn classify(&self, v: &[f64]) -> Membership {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let dot = v.iter().zip(&self.axis).map(|(a, b)| a * b).sum::<f64>().abs() / norm;
        let c = self.angle.cos();
        if (dot - c).abs() <= BOUNDARY_TOLERANCE {
            Membership::Boundary
        } else if dot > c {
            Membership::Inside
        } else {
            Membership::Outside
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Outside,
    /// On the boundary to working precision; counted as outside and tallied.
    Boundary,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    CircleArcs(Vec<Arc>),
    Caps(Vec<Cap>),
}

impl Region {
    pub fn arcs(arcs: Vec<Arc>) -> Result<Self> {
        if arcs.is_empty() {
            return Err(Error::invalid("region needs at least one arc"));
        }
        for a in &arcs {
            a.validate()?;
        }
        let ang: Vec<(f64, f64)> = arcs.iter().map(Arc::angular).collect();
        for i in 0..ang.len() {
            for j in i + 1..ang.len() {
                if arcs_overlap(ang[i], ang[j]) {
                    return Err(Error::invalid(format!("arcs {i} and {j} overlap")));
                }
            }
        }
        Ok(Region::CircleArcs(arcs))
    }

    pub fn caps(caps: Vec<Cap>) -> Result<Self> {
        if caps.is_empty() {
            return Err(Error::invalid("region needs at least one cap"));
        }
        let n = caps[0].axis.len();
        if caps.iter().any(|c| c.axis.len() != n) {
            return Err(Error::invalid("caps of one region must share a dimension"));
        }
        for i in 0..caps.len() {
            for j in i + 1..caps.len() {
                let cos: f64 = caps[i].axis.iter().zip(&caps[j].axis).map(|(a, b)| a * b).sum();
                let sep = cos.abs().min(1.0).acos();
                if sep < caps[i].angle + caps[j].angle {
                    return Err(Error::invalid(format!("caps {i} and {j} overlap")));
                }
            }
        }
        Ok(Region::Caps(caps))
    }

    /// Dimension of the ambient matrix group this region lives under.
    pub fn group_dim(&self) -> usize {
        match self {
            Region::CircleArcs(_) => 2,
            Region::Caps(c) => c[0].axis.len(),
        }
    }

    pub fn classify(&self, x: &BoundaryPoint) -> Result<Membership> {
        match (self, x) {
            (Region::CircleArcs(arcs), BoundaryPoint::Circle(p)) => {
                Ok(fold_membership(arcs.iter().map(|a| a.classify_real(*p))))
            }
            (Region::Caps(caps), BoundaryPoint::Projective(p)) => {
                if p.dim() != caps[0].axis.len() {
                    return Err(Error::VariantMismatch);
                }
                Ok(fold_membership(caps.iter().map(|c| c.classify(p.coords()))))
            }
            _ => Err(Error::VariantMismatch),
        }
    }

    /// Exact classification of a rational point of the extended line.
    pub fn classify_rational(&self, p: RationalPoint) -> Result<Membership> {
        match self {
            Region::CircleArcs(arcs) => Ok(fold_membership(arcs.iter().map(|a| a.classify_rational(p)))),
            Region::Caps(_) => Err(Error::VariantMismatch),
        }
    }

    /// Classification of an unnormalised vector of R^n as a point of P^{n-1}.
    pub fn classify_vector(&self, v: &[f64]) -> Result<Membership> {
        match self {
            Region::Caps(caps) if caps[0].axis.len() == v.len() => {
                Ok(fold_membership(caps.iter().map(|c| c.classify(v))))
            }
            _ => Err(Error::VariantMismatch),
        }
    }
}

fn fold_membership<I: Iterator<Item = Membership>>(parts: I) -> Membership {
    let mut out = Membership::Outside;
    for m in parts {
        match m {
            Membership::Inside => return Membership::Inside,
            Membership::Boundary => out = Membership::Boundary,
            Membership::Outside => {}
        }
    }
    out
}

fn arcs_overlap((a, la): (f64, f64), (b, lb): (f64, f64)) -> bool {
    let d = (b - a).rem_euclid(PI);
    let e = (a - b).rem_euclid(PI);
    let eps = 1e-15;
    d + eps < la || e + eps < lb || (d.abs() < eps && la > 0.0 && lb > 0.0)
}

/// `r` is in the region, boundary excluded.
pub fn contains(r: &Region, x: &BoundaryPoint) -> Result<bool> {
    Ok(r.classify(x)? == Membership::Inside)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureValue {
    pub value: f64,
    /// Zero for closed forms; three standard errors for Monte Carlo.
    pub error_bound: f64,
}

/// Exact arctan measure of a union of disjoint arcs.
pub fn measure_circle(r: &Region) -> Result<MeasureValue> {
    match r {
        Region::CircleArcs(arcs) => Ok(MeasureValue {
            value: arcs.iter().map(Arc::measure).sum::<f64>().clamp(0.0, 1.0),
            error_bound: 0.0,
        }),
        Region::Caps(_) => Err(Error::VariantMismatch),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CapMeasureOptions {
    pub seed: u64,
    /// Samples drawn per batch; also the total when no target is set.
    pub batch: u64,
    /// Stop once the three-sigma bound falls below this value.
    pub target_error: Option<f64>,
    pub max_samples: u64,
    /// Use Monte Carlo even where a closed form exists.
    pub force_monte_carlo: bool,
}

impl Default for CapMeasureOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            batch: 1_000_000,
            target_error: None,
            max_samples: 100_000_000,
            force_monte_carlo: false,
        }
    }
}

/// Rotation-invariant measure of a union of caps in P^{n-1}. Closed form for
/// n = 3, otherwise Monte Carlo over Gaussian-normalised sphere samples.
pub fn measure_caps(r: &Region, n: usize, opts: &CapMeasureOptions) -> Result<MeasureValue> {
    let Region::Caps(caps) = r else {
        return Err(Error::VariantMismatch);
    };
    if n < 2 || caps[0].axis.len() != n {
        return Err(Error::invalid(format!(
            "caps live in R^{}, not R^{n}",
            caps[0].axis.len()
        )));
    }
    if n == 3 && !opts.force_monte_carlo {
        return Ok(MeasureValue {
            value: caps.iter().map(Cap::measure_p2).sum::<f64>().min(1.0),
            error_bound: 0.0,
        });
    }
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let mut hits = 0u64;
    let mut total = 0u64;
    let mut v = vec![0.0; n];
    let batch = opts.batch.max(1);
    loop {
        for _ in 0..batch {
            sample_sphere(&mut rng, &mut v);
            if caps.iter().any(|c| c.classify(&v) == Membership::Inside) {
                hits += 1;
            }
        }
        total += batch;
        let p = hits as f64 / total as f64;
        let bound = 3.0 * (p * (1.0 - p) / total as f64).sqrt();
        match opts.target_error {
            None => {
                return Ok(MeasureValue {
                    value: p,
                    error_bound: bound,
                })
            }
            Some(target) if bound <= target => {
                return Ok(MeasureValue {
                    value: p,
                    error_bound: bound,
                })
            }
            Some(target) if total + batch > opts.max_samples => {
                return Err(Error::SampleBudget {
                    requested: target,
                    achieved: bound,
                    budget: opts.max_samples,
                })
            }
            Some(_) => {}
        }
    }
}

/// Uniform point of the unit sphere (normalised standard Gaussian).
pub fn sample_sphere<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut norm_sq = 0.0;
        for x in out.iter_mut() {
            *x = StandardNormal.sample(rng);
            norm_sq += *x * *x;
        }
        if norm_sq > 1e-300 {
            let norm = norm_sq.sqrt();
            out.iter_mut().for_each(|x| *x /= norm);
            return;
        }
    }
}

/// Parses a point of the extended line: `inf`, `p/q`, or a decimal.
pub fn parse_circle_point(s: &str) -> Result<CircleBasepoint> {
    let s = s.trim();
    match s {
        "inf" | "infinity" | "∞" => return Ok(CircleBasepoint::Rational(RationalPoint::infinity())),
        _ => {}
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: i128 = p
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad numerator in {s}")))?;
        let q: i128 = q
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad denominator in {s}")))?;
        return Ok(CircleBasepoint::Rational(RationalPoint::new(p, q)?));
    }
    if let Ok(p) = s.parse::<i128>() {
        return Ok(CircleBasepoint::Rational(RationalPoint::new(p, 1)?));
    }
    let x: f64 = s
        .parse()
        .map_err(|_| Error::invalid(format!("cannot parse point {s}")))?;
    if !x.is_finite() {
        return Err(Error::invalid(format!("cannot parse point {s}")));
    }
    Ok(CircleBasepoint::Real(x))
}

/// Basepoint on the extended line: exact when rational.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CircleBasepoint {
    Rational(RationalPoint),
    Real(f64),
}

impl fmt::Display for CircleBasepoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircleBasepoint::Rational(r) => write!(f, "{r}"),
            CircleBasepoint::Real(x) => write!(f, "{x}"),
        }
    }
}
