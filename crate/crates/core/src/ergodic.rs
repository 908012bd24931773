//! Monte Carlo averages of test functions on SL(2,Z)\SL(2,R) along Haar
//! balls of the Borel group, and the matching integrals against the
//! normalised invariant measure.
//!
//! A coset `y = Gamma g` is represented by `g` together with the reduced image
//! of `g . i`. Test functions only depend on that image, so
//! `f(y b^{-1}) = f(reduce((g b^{-1}) . i))`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{random_group_element, BorelCoords, GroupElement};
use crate::haar::{Chirality, HaarBallSampler, SamplerStats};
use crate::modular::{in_fundamental_domain, mobius, reduce_modular};

/// Independent generator streams per estimate. Fixed so results do not
/// depend on the thread count.
pub const SHARDS: usize = 64;

/// Tolerance for the fundamental-domain check on reduced points.
pub const DOMAIN_TOLERANCE: f64 = 1e-9;

/// Hyperbolic area of the fundamental domain.
pub const DOMAIN_AREA: f64 = std::f64::consts::FRAC_PI_3;

#[derive(Clone, Debug, PartialEq)]
pub struct CosetPoint {
    representative: GroupElement,
    reduced_z: Complex64,
}

impl CosetPoint {
    pub fn new(g: GroupElement) -> Result<Self> {
        if g.dim() != 2 {
            return Err(Error::Dimension {
                n: g.dim(),
                min: 2,
                max: 2,
            });
        }
        let z = mobius(entries(&g), Complex64::i());
        let reduced_z = reduce_modular(z)?.z;
        Ok(Self {
            representative: g,
            reduced_z,
        })
    }

    /// The coset of the identity, whose orbit under the unipotent upper
    /// triangular group is periodic.
    pub fn identity() -> Self {
        Self::new(GroupElement::identity(2).expect("n = 2 is supported")).expect("identity is valid")
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Result<Self> {
        Self::new(random_group_element(2, rng)?)
    }

    pub fn representative(&self) -> &GroupElement {
        &self.representative
    }

    pub fn reduced_z(&self) -> Complex64 {
        self.reduced_z
    }

    /// Reduced image of `(g b^{-1}) . i`. Uses `b^{-1} . i = -t + i e^{-2s}`.
    pub fn translate(&self, b: &BorelCoords) -> Result<Complex64> {
        let s = b.s()[0];
        let w = Complex64::new(-b.t()[0], (-2.0 * s).exp());
        Ok(reduce_modular(mobius(entries(&self.representative), w))?.z)
    }
}

fn entries(g: &GroupElement) -> [f64; 4] {
    let m = g.matrix();
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

/// Axis-parallel box `(re_min, re_max) x (im_min, im_max)` inside the
/// fundamental domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl DomainBox {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let all_finite = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite());
        if !all_finite || re_min > re_max || im_min > im_max {
            return Err(Error::invalid("box bounds must be finite and ordered"));
        }
        if re_min < -0.5 || re_max > 0.5 {
            return Err(Error::invalid("box must satisfy |Re z| <= 1/2"));
        }
        // the lowest edge must clear the unit circle
        let closest = if re_min <= 0.0 && re_max >= 0.0 {
            0.0
        } else {
            re_min.abs().min(re_max.abs())
        };
        if closest * closest + im_min * im_min < 1.0 {
            return Err(Error::invalid("box dips below the unit circle"));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    /// `|Re z| < 1/2, 1 < Im z < 2`.
    pub fn standard() -> Self {
        Self::new(-0.5, 0.5, 1.0, 2.0).expect("valid box")
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re > self.re_min && z.re < self.re_max && z.im > self.im_min && z.im < self.im_max
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    Constant {
        value: f64,
    },
    /// Indicator of the open box.
    IndicatorBox {
        region: DomainBox,
    },
    /// Product of tent functions, 1 at the centre of the box and 0 on its edges.
    ContinuousBump {
        region: DomainBox,
    },
}

impl TestFunction {
    pub fn standard_box() -> Self {
        Self::IndicatorBox {
            region: DomainBox::standard(),
        }
    }

    /// Evaluates at a reduced point.
    pub fn eval(&self, z: Complex64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::IndicatorBox { region } => {
                if region.contains(z) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::ContinuousBump { region } => {
                if !region.contains(z) {
                    return 0.0;
                }
                let tent = |v: f64, lo: f64, hi: f64| {
                    let half = 0.5 * (hi - lo);
                    (1.0 - (v - 0.5 * (lo + hi)).abs() / half).max(0.0)
                };
                tent(z.re, region.re_min, region.re_max) * tent(z.im, region.im_min, region.im_max)
            }
        }
    }
}

/// Streaming mean and variance that can be merged in any grouping.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Self {
            count,
            mean: self.mean + d * w,
            m2: self.m2 + other.m2 + d * d * self.count as f64 * w,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl Estimate {
    fn from_acc(acc: &MeanAccumulator) -> Self {
        Self {
            value: acc.mean(),
            std_error: acc.std_error(),
            samples: acc.count(),
        }
    }
}

fn shard_rng(seed: u64, shard: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    rng
}

fn shard_sizes(samples: u64) -> impl IndexedParallelIterator<Item = (usize, u64)> {
    let base = samples / SHARDS as u64;
    let extra = samples % SHARDS as u64;
    (0..SHARDS)
        .into_par_iter()
        .map(move |k| (k, base + u64::from((k as u64) < extra)))
}

/// Runs `body` on every shard and merges the shard results in shard order.
fn sharded<T, F>(samples: u64, seed: u64, body: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> Result<T> + Sync,
{
    shard_sizes(samples)
        .map(|(k, count)| body(&mut shard_rng(seed, k), count))
        .collect()
}

fn haar_average(
    y: &CosetPoint,
    f: &TestFunction,
    t: f64,
    samples: u64,
    seed: u64,
    chirality: Chirality,
) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let sampler = HaarBallSampler::new(2, t, chirality)?;
    let shards = sharded(samples, seed, |rng, count| {
        let mut acc = MeanAccumulator::default();
        let mut stats = SamplerStats::default();
        for _ in 0..count {
            let b = sampler.sample_counted(rng, &mut stats)?;
            let z = y.translate(&b)?;
            debug_assert!(in_fundamental_domain(z, DOMAIN_TOLERANCE));
            acc.push(f.eval(z));
        }
        Ok((acc, stats))
    })?;
    let (acc, stats) = shards.into_iter().fold(
        (MeanAccumulator::default(), SamplerStats::default()),
        |(a, s), (b, t)| (a.merge(b), s.merge(t)),
    );
    stats.warn_if_inefficient();
    Ok(Estimate::from_acc(&acc))
}

/// Average of `f(y b^{-1})` over `b` drawn from the right Haar measure of
/// the ball `||b|| < T`.
pub fn ergodic_average(y: &CosetPoint, f: &TestFunction, t: f64, samples: u64, seed: u64) -> Result<Estimate> {
    haar_average(y, f, t, samples, seed, Chirality::Right)
}

/// The same average under the left Haar measure. At `y = CosetPoint::identity()`
/// it tends to 0 for compactly supported `f`.
pub fn left_haar_average(y: &CosetPoint, f: &TestFunction, t: f64, samples: u64, seed: u64) -> Result<Estimate> {
    haar_average(y, f, t, samples, seed, Chirality::Left)
}

/// Integral of `f` against the normalised invariant measure, by Monte Carlo
/// over the fundamental domain.
///
/// With `w = 1/y` the measure `dx dy / y^2` becomes `dx dw`, and the domain is
/// `|x| <= 1/2, 0 < w < 1/sqrt(1 - x^2)`, inside the box `w < 2/sqrt(3)`.
pub fn nu_integral(f: &TestFunction, samples: u64, seed: u64) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let w_max = 2.0 / 3f64.sqrt();
    let shards = sharded(samples, seed, |rng, count| {
        let mut acc = MeanAccumulator::default();
        while acc.count() < count {
            let x: f64 = rng.random_range(-0.5..=0.5);
            let w: f64 = w_max * (1.0 - rng.random::<f64>());
            if w * w * (1.0 - x * x) >= 1.0 {
                continue;
            }
            acc.push(f.eval(Complex64::new(x, 1.0 / w)));
        }
        Ok(acc)
    })?;
    let acc = shards
        .into_iter()
        .fold(MeanAccumulator::default(), MeanAccumulator::merge);
    Ok(Estimate::from_acc(&acc))
}
