//! Reduction of points of the upper half plane into the standard fundamental
//! domain `|Re z| <= 1/2, |z| >= 1` of SL(2,Z).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Maximum number of translation/inversion rounds before giving up.
pub const MAX_REDUCTION_STEPS: usize = 10_000;

/// Points with `|z|^2 >= 1 - UNIT_SLACK` are not inverted, so rounding cannot
/// make the reduction bounce on the unit circle.
const UNIT_SLACK: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModularStep {
    /// `z -> z + k`
    Translate(i64),
    /// `z -> -1/z`
    Invert,
}

impl ModularStep {
    pub fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Self::Translate(k) => z + k as f64,
            Self::Invert => -z.inv(),
        }
    }

    pub fn inverse(self) -> Self {
        match self {
            Self::Translate(k) => Self::Translate(-k),
            Self::Invert => Self::Invert,
        }
    }

    fn matrix(self) -> [i64; 4] {
        match self {
            Self::Translate(k) => [1, k, 0, 1],
            Self::Invert => [0, -1, 1, 0],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub z: Complex64,
    /// Steps in the order they were applied to the input.
    pub word: Vec<ModularStep>,
}

impl Reduction {
    pub fn word_length(&self) -> usize {
        self.word.len()
    }

    /// Undoes the word, mapping the reduced point back to the input.
    pub fn replay_inverse(&self, z: Complex64) -> Complex64 {
        self.word.iter().rev().fold(z, |w, step| step.inverse().apply(w))
    }

    /// Applies the word to an arbitrary point.
    pub fn replay(&self, z: Complex64) -> Complex64 {
        self.word.iter().fold(z, |w, step| step.apply(w))
    }

    /// The element of SL(2,Z) (row major, up to sign) carrying the input to
    /// the reduced point. Saturates rather than overflowing on huge words.
    pub fn matrix(&self) -> [i64; 4] {
        self.word.iter().fold([1, 0, 0, 1], |acc, step| {
            let m = step.matrix();
            [
                m[0].saturating_mul(acc[0]).saturating_add(m[1].saturating_mul(acc[2])),
                m[0].saturating_mul(acc[1]).saturating_add(m[1].saturating_mul(acc[3])),
                m[2].saturating_mul(acc[0]).saturating_add(m[3].saturating_mul(acc[2])),
                m[2].saturating_mul(acc[1]).saturating_add(m[3].saturating_mul(acc[3])),
            ]
        })
    }
}

/// Alternates integer translations and `z -> -1/z` until `z` lies in the
/// closed fundamental domain.
pub fn reduce_modular(z: Complex64) -> Result<Reduction> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::invalid(format!("{z} is not in the upper half plane")));
    }
    let mut z = z;
    let mut word = Vec::new();
    for _ in 0..MAX_REDUCTION_STEPS {
        let k = z.re.round();
        if k != 0.0 {
            if k.abs() >= 9.0e15 {
                return Err(Error::Numeric(format!("translation {k} is not representable")));
            }
            let step = ModularStep::Translate(-(k as i64));
            z = step.apply(z);
            word.push(step);
        }
        if z.norm_sqr() >= 1.0 - UNIT_SLACK {
            return Ok(Reduction { z, word });
        }
        z = ModularStep::Invert.apply(z);
        word.push(ModularStep::Invert);
    }
    Err(Error::Degenerate {
        steps: MAX_REDUCTION_STEPS,
    })
}

/// Whether `z` lies in the closed fundamental domain up to `tol`.
pub fn in_fundamental_domain(z: Complex64, tol: f64) -> bool {
    z.im > 0.0 && z.re.abs() <= 0.5 + tol && z.norm_sqr() >= 1.0 - tol
}

/// Möbius action of a real 2x2 matrix (row major) on the upper half plane.
pub fn mobius(m: [f64; 4], z: Complex64) -> Complex64 {
    (z * m[0] + m[1]) / (z * m[2] + m[3])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn already_reduced() {
        let r = reduce_modular(c(0.0, 2.0)).unwrap();
        assert_eq!(r.z, c(0.0, 2.0));
        assert_eq!(r.word_length(), 0);
    }

    #[test]
    fn single_translation() {
        let r = reduce_modular(c(2.0, 2.0)).unwrap();
        assert!((r.z - c(0.0, 2.0)).norm() < 1e-15);
        assert_eq!(r.word, vec![ModularStep::Translate(-2)]);
    }

    #[test]
    fn inversion_and_replay() {
        let z = c(0.0, 0.25);
        let r = reduce_modular(z).unwrap();
        assert!((r.z - c(0.0, 4.0)).norm() < 1e-12);
        assert!((r.replay_inverse(r.z) - z).norm() < 1e-10);
        let m = r.matrix();
        assert_eq!(m[0] * m[3] - m[1] * m[2], 1);
        let w = mobius(m.map(|v| v as f64), z);
        assert!((w - r.z).norm() < 1e-12);
    }

    #[test]
    fn deep_point() {
        let z = c(0.3137, 1e-7);
        let r = reduce_modular(z).unwrap();
        assert!(in_fundamental_domain(r.z, 1e-9));
        assert!((r.replay_inverse(r.z) - z).norm() < 1e-10);
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(reduce_modular(c(0.0, -1.0)).is_err());
        assert!(reduce_modular(c(f64::NAN, 1.0)).is_err());
    }
}
