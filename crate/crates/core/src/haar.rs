//! Haar volumes of norm balls in the positive Borel group and samplers for the
//! right and left Haar measures restricted to those balls.
//!
//! The right Haar measure is `e^{2 delta(s)} ds dt` and the left one `ds dt`.
//! Integrating out the unipotent coordinates over the ellipsoid
//! `sum_{i<j} e^{2 s_i} t_ij^2 < T^2 - N(s)` leaves the `(n-1)`-dimensional
//! marginal
//!
//! ```text
//! c_n (T^2 - N(s))^{n(n-1)/4} e^{+-delta(s)},   c_n = pi^{m/2} / Gamma(1 + m/2),  m = n(n-1)/2
//! ```
//!
//! with `+` for the right measure and `-` for the left one. All powers of `T`
//! are handled in log space.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::group::{check_dim, pair_count, BorelCoords};
use crate::quadrature::{integrate_seeded, QuadOptions};

/// Acceptance rate under which the rejection sampler logs a warning.
pub const LOW_ACCEPTANCE: f64 = 1e-4;

/// `gamma_n = pi^{n(n-1)/4} / (2^{n-1} Gamma((n^2-n+2)/2)) prod_{k=1}^{n-1} Gamma((n-k)/2)`,
/// the leading coefficient of the Haar volume of the norm ball.
pub fn gamma_n(n: usize) -> Result<f64> {
    if !(2..=10).contains(&n) {
        return Err(Error::Dimension { n, min: 2, max: 10 });
    }
    let nf = n as f64;
    let mut log = nf * (nf - 1.0) / 4.0 * PI.ln() - (nf - 1.0) * 2f64.ln() - ln_gamma((nf * nf - nf + 2.0) / 2.0);
    for k in 1..n {
        log += ln_gamma((nf - k as f64) / 2.0);
    }
    Ok(log.exp())
}

/// `ln c_n`, the log volume of the unit ball in `R^{n(n-1)/2}`.
fn log_unit_ball(n: usize) -> f64 {
    let m = pair_count(n) as f64;
    m / 2.0 * PI.ln() - ln_gamma(1.0 + m / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeResult {
    pub value: f64,
    pub quadrature_error: f64,
    pub t: f64,
    /// Cone parameter; `-inf` for the whole ball.
    pub c: f64,
    pub n: usize,
}

impl VolumeResult {
    /// `value / T^{n^2 - n}`.
    pub fn normalized(&self) -> f64 {
        let nf = self.n as f64;
        (self.value.ln() - (nf * nf - nf) * self.t.ln()).exp()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VolumeOptions {
    pub quad: QuadOptions,
    /// Equal splits per axis of the initial box (n >= 3).
    pub initial_splits: usize,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        Self {
            quad: QuadOptions {
                rel_tol: 1e-10,
                abs_tol: 1e-14,
                max_evals: 4_000_000,
            },
            initial_splits: 8,
        }
    }
}

/// Right Haar volume of `B_T^C = {a(s) n(t) : ||a(s) n(t)|| < T, s_i > C for i < n}`.
/// `c = f64::NEG_INFINITY` gives the whole ball `B_T`.
pub fn rho_ball_volume(n: usize, t: f64, c: f64) -> Result<VolumeResult> {
    rho_ball_volume_with(n, t, c, &VolumeOptions::default())
}

pub fn rho_ball_volume_with(n: usize, t: f64, c: f64, opts: &VolumeOptions) -> Result<VolumeResult> {
    check_dim(n)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("T must be positive and finite, got {t}")));
    }
    if c.is_nan() || c == f64::INFINITY {
        return Err(Error::invalid("cone parameter must be finite or -inf"));
    }
    let empty = VolumeResult {
        value: 0.0,
        quadrature_error: 0.0,
        t,
        c,
        n,
    };
    // N(s) >= n on the trace-zero hyperplane
    if t * t <= n as f64 {
        return Ok(empty);
    }
    let log_t = t.ln();
    let nf = n as f64;
    let scale = nf * nf - nf;
    let p = pair_count(n) as f64 / 2.0;

    // integrand normalised by T^{n^2-n}
    let integrand = |free: &[f64]| -> f64 {
        let mut sum = 0.0;
        let mut delta = 0.0;
        let mut last = 0.0;
        for (i, s) in free.iter().enumerate() {
            sum += (2.0 * (s - log_t)).exp();
            delta += (n - 1 - i) as f64 * s;
            last -= s;
        }
        sum += (2.0 * (last - log_t)).exp();
        if sum >= 1.0 {
            return 0.0;
        }
        // (T^2 - N)^p = T^{2p} (1 - N/T^2)^p with 2p = n(n-1)/2
        (p * (-sum).ln_1p() + delta - scale / 2.0 * log_t).exp()
    };

    let (lower, upper) = if n == 2 {
        // exact support: e^{2s} + e^{-2s} < T^2
        let edge = 0.5 * (t * t / 2.0).acosh();
        (vec![(-edge).max(c)], vec![edge])
    } else {
        let floor = -(nf - 1.0) * log_t;
        (vec![floor.max(c); n - 1], vec![log_t; n - 1])
    };
    if lower.iter().zip(&upper).any(|(l, u)| l >= u) {
        return Ok(empty);
    }
    let splits = if n == 2 { 1 } else { opts.initial_splits };
    let res = integrate_seeded(integrand, &lower, &upper, splits, opts.quad);
    let log_front = log_unit_ball(n) + scale * log_t;
    let value = res.value * log_front.exp();
    let error = res.error * log_front.exp();
    if !res.converged && res.error > 1e-4 * res.value.abs() && res.error > 1e-12 {
        return Err(Error::Quadrature { value, error });
    }
    Ok(VolumeResult {
        value,
        quadrature_error: error,
        t,
        c,
        n,
    })
}

/// Share of the ball's right Haar volume carried by the cone `s_i > C`.
pub fn cone_fraction(n: usize, t: f64, c: f64) -> Result<f64> {
    if !c.is_finite() {
        return Err(Error::invalid("cone parameter must be finite"));
    }
    let cone = rho_ball_volume(n, t, c)?;
    let whole = rho_ball_volume(n, t, f64::NEG_INFINITY)?;
    if whole.value == 0.0 {
        return Ok(0.0);
    }
    Ok((cone.value / whole.value).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chirality {
    /// `e^{2 delta(s)} ds dt`
    Right,
    /// `ds dt`
    Left,
}

impl std::str::FromStr for Chirality {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "right" => Ok(Self::Right),
            "left" => Ok(Self::Left),
            other => Err(Error::invalid(format!("chirality must be left or right, got {other}"))),
        }
    }
}

/// Draws from a Haar measure of the Borel group restricted to `||b|| < T`.
///
/// The envelope matches the exponential factor of the marginal exactly. For
/// the right measure each free exponent is `s_i = log T - E_i / (n - 1 - i)`.
/// For the left measure, `delta(s)` is the sum of the partial sums
/// `sigma_j = s_1 + .. + s_j`, each bounded below by `-(n - j) log T`, so
/// `sigma_j = -(n - j) log T + E_j`. A proposal is accepted with probability
/// `(1 - N(s)/T^2)^{n(n-1)/4}` and the unipotent part is then uniform in its
/// ellipsoid.
#[derive(Clone, Debug)]
pub struct HaarBallSampler {
    n: usize,
    t: f64,
    chirality: Chirality,
    log_t: f64,
    half_pairs: f64,
    max_attempts: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SamplerStats {
    pub proposals: u64,
    pub accepted: u64,
}

impl SamplerStats {
    pub fn acceptance(&self) -> f64 {
        if self.proposals == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            proposals: self.proposals + other.proposals,
            accepted: self.accepted + other.accepted,
        }
    }

    /// Logs a warning when the acceptance rate drops below [`LOW_ACCEPTANCE`].
    pub fn warn_if_inefficient(&self) {
        if self.proposals > 0 && self.acceptance() < LOW_ACCEPTANCE {
            log::warn!(
                "Haar ball sampler acceptance {:.2e} below {LOW_ACCEPTANCE:e} ({} of {} proposals)",
                self.acceptance(),
                self.accepted,
                self.proposals
            );
        }
    }
}

impl HaarBallSampler {
    pub fn new(n: usize, t: f64, chirality: Chirality) -> Result<Self> {
        check_dim(n)?;
        if !(t * t > n as f64) || !t.is_finite() {
            return Err(Error::invalid(format!(
                "the ball ||b|| < {t} is empty for n = {n} (need T > sqrt(n))"
            )));
        }
        Ok(Self {
            n,
            t,
            chirality,
            log_t: t.ln(),
            half_pairs: pair_count(n) as f64 / 2.0,
            max_attempts: 1 << 40,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.t
    }

    pub fn chirality(&self) -> Chirality {
        self.chirality
    }

    /// Unnormalised density of the free exponents `s_1..s_{n-1}`, divided
    /// by `T^{n(n-1)/2}`.
    pub fn marginal_density(&self, free: &[f64]) -> f64 {
        let n = self.n;
        let mut ratio = 0.0;
        let mut delta = 0.0;
        let mut last = 0.0;
        for (i, s) in free.iter().enumerate() {
            ratio += (2.0 * (s - self.log_t)).exp();
            delta += (n - 1 - i) as f64 * s;
            last -= s;
        }
        ratio += (2.0 * (last - self.log_t)).exp();
        if ratio >= 1.0 {
            return 0.0;
        }
        let sign = match self.chirality {
            Chirality::Right => 1.0,
            Chirality::Left => -1.0,
        };
        (self.half_pairs * (-ratio).ln_1p() + sign * delta).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BorelCoords> {
        let mut stats = SamplerStats::default();
        self.sample_counted(rng, &mut stats)
    }

    pub fn sample_counted<R: Rng + ?Sized>(&self, rng: &mut R, stats: &mut SamplerStats) -> Result<BorelCoords> {
        let n = self.n;
        let nf = n as f64;
        let mut s = vec![0.0; n];
        for _ in 0..self.max_attempts {
            stats.proposals += 1;
            let mut last = 0.0;
            let mut ratio = 0.0;
            let mut prev = 0.0;
            for i in 0..n - 1 {
                let e: f64 = Exp1.sample(rng);
                s[i] = match self.chirality {
                    Chirality::Right => self.log_t - e / (n - 1 - i) as f64,
                    Chirality::Left => {
                        // partial sum sigma_{i+1} = s_1 + .. + s_{i+1}
                        let sigma = -(nf - 1.0 - i as f64) * self.log_t + e;
                        let si = sigma - prev;
                        prev = sigma;
                        si
                    }
                };
                last -= s[i];
                ratio += (2.0 * (s[i] - self.log_t)).exp();
            }
            s[n - 1] = last;
            ratio += (2.0 * (last - self.log_t)).exp();
            if ratio >= 1.0 {
                continue;
            }
            let accept = (self.half_pairs * (-ratio).ln_1p()).exp();
            let u: f64 = rng.random();
            if u >= accept {
                continue;
            }
            stats.accepted += 1;
            let t = self.unipotent_part(&s, ratio, rng);
            // s was built with s_n = -sum, so the trace check cannot fail
            return BorelCoords::new(s, t);
        }
        Err(Error::Numeric(format!(
            "Haar ball sampler exhausted {} proposals",
            self.max_attempts
        )))
    }

    /// Uniform point of `sum e^{2 s_i} t_ij^2 < T^2 - N(s)`.
    fn unipotent_part<R: Rng + ?Sized>(&self, s: &[f64], ratio: f64, rng: &mut R) -> Vec<f64> {
        let n = self.n;
        let m = pair_count(n);
        let mut z: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        let u: f64 = rng.random();
        let radius = u.powf(1.0 / m as f64) / norm;
        // sqrt(T^2 - N) = T sqrt(1 - ratio)
        let room = self.t * (1.0 - ratio).sqrt();
        let mut k = 0;
        for i in 0..n {
            let scale = room * (-s[i]).exp() * radius;
            for _ in i + 1..n {
                z[k] *= scale;
                k += 1;
            }
        }
        z
    }
}

/// `sample_haar_ball` as a free function.
pub fn sample_haar_ball<R: Rng + ?Sized>(sampler: &HaarBallSampler, rng: &mut R) -> Result<BorelCoords> {
    sampler.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::borel_norm_sq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gamma_values() {
        assert!((gamma_n(2).unwrap() - PI / 2.0).abs() < 1e-12);
        assert!((gamma_n(3).unwrap() - PI * PI / 24.0).abs() < 1e-12);
        for n in 2..=10 {
            let g = gamma_n(n).unwrap();
            assert!(g.is_finite() && g > 0.0);
        }
        assert!(gamma_n(1).is_err());
        assert!(gamma_n(11).is_err());
    }

    #[test]
    fn empty_ball() {
        let v = rho_ball_volume(2, 1.4, f64::NEG_INFINITY).unwrap();
        assert_eq!(v.value, 0.0);
        let v = rho_ball_volume(2, 2f64.sqrt() + 1e-12, f64::NEG_INFINITY).unwrap();
        assert!(v.value < 1e-9);
        let v = rho_ball_volume(3, 1.5, f64::NEG_INFINITY).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn n2_volume_asymptotics() {
        let v = rho_ball_volume(2, 1e3, f64::NEG_INFINITY).unwrap();
        let ratio = v.normalized();
        assert!(((ratio - PI / 2.0) / (PI / 2.0)).abs() < 0.01, "{ratio}");
        assert!(v.quadrature_error <= 1e-8 * v.value);
    }

    #[test]
    fn cone_fraction_examples() {
        let t = 100.0;
        let f = cone_fraction(2, t, -t.ln() - 1.0).unwrap();
        assert!((f - 1.0).abs() < 1e-9);
        let low = cone_fraction(2, 1e2, 0.0).unwrap();
        let high = cone_fraction(2, 1e4, 0.0).unwrap();
        assert!(high > low);
        assert!(cone_fraction(2, 1e6, 0.0).unwrap() >= 0.99);
        assert!(cone_fraction(2, 1e2, f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn samples_stay_in_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=4 {
            for chirality in [Chirality::Right, Chirality::Left] {
                let t = 3.0 * n as f64;
                let sampler = HaarBallSampler::new(n, t, chirality).unwrap();
                for _ in 0..2000 {
                    let b = sampler.sample(&mut rng).unwrap();
                    assert!(borel_norm_sq(&b) < t * t);
                }
            }
        }
        assert!(HaarBallSampler::new(2, 1.4, Chirality::Right).is_err());
    }

    #[test]
    fn acceptance_matches_volume_ratio() {
        // right sampler acceptance is gamma_n (n-1)! / c_n asymptotically: pi/4 at n = 2
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sampler = HaarBallSampler::new(2, 1e3, Chirality::Right).unwrap();
        let mut stats = SamplerStats::default();
        for _ in 0..100_000 {
            sampler.sample_counted(&mut rng, &mut stats).unwrap();
        }
        assert!((stats.acceptance() - PI / 4.0).abs() < 0.01, "{stats:?}");
    }
}
