//! Adaptive cubature over axis-aligned boxes.
//!
//! One dimension uses a Gauss-Kronrod (7, 15) pair; two or more dimensions use
//! the Genz-Malik degree-7 rule with its embedded degree-5 rule for the error
//! estimate. In both cases the region with the largest error is bisected until
//! the tolerance or the evaluation budget is reached. Regions are refined in
//! batches evaluated in parallel; the batch composition and the order in which
//! results are folded back depend only on the error values, so the result is
//! identical for any thread count.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 0.0,
            max_evals: 5_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
struct Region {
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: f64,
    error: f64,
    split_dim: usize,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Region {}
impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Region {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: Fn(&[f64]) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(&[c]);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = h * XGK[k];
        let pair = f(&[c - dx]) + f(&[c + dx]);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Genz-Malik rule on the box; returns (degree-7 value, error, split dimension).
fn genz_malik<F: Fn(&[f64]) -> f64>(f: &F, lower: &[f64], upper: &[f64]) -> (f64, f64, usize) {
    let d = lower.len();
    let df = d as f64;
    let lambda2 = (9.0f64 / 70.0).sqrt();
    let lambda4 = (9.0f64 / 10.0).sqrt();
    let lambda5 = (9.0f64 / 19.0).sqrt();
    let w1 = (12824.0 - 9120.0 * df + 400.0 * df * df) / 19683.0;
    let w2 = 980.0 / 6561.0;
    let w3 = (1820.0 - 400.0 * df) / 19683.0;
    let w4 = 200.0 / 19683.0;
    let w5 = 6859.0 / 19683.0 / 2f64.powi(d as i32);
    let v1 = (729.0 - 950.0 * df + 50.0 * df * df) / 729.0;
    let v2 = 245.0 / 486.0;
    let v3 = (265.0 - 100.0 * df) / 1458.0;
    let v4 = 25.0 / 729.0;

    let centre: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect();
    let half: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| 0.5 * (u - l)).collect();
    let volume: f64 = half.iter().map(|h| 2.0 * h).product();

    let mut x = centre.clone();
    let f0 = f(&x);
    let mut sum2 = 0.0;
    let mut sum3 = 0.0;
    let mut best = (f64::NEG_INFINITY, 0);
    for i in 0..d {
        x[i] = centre[i] - lambda2 * half[i];
        let a = f(&x);
        x[i] = centre[i] + lambda2 * half[i];
        let b = f(&x);
        x[i] = centre[i] - lambda4 * half[i];
        let c = f(&x);
        x[i] = centre[i] + lambda4 * half[i];
        let e = f(&x);
        x[i] = centre[i];
        sum2 += a + b;
        sum3 += c + e;
        let diff = ((a + b - 2.0 * f0) - (c + e - 2.0 * f0) / 7.0).abs();
        if diff > best.0 {
            best = (diff, i);
        }
    }
    let mut sum4 = 0.0;
    for i in 0..d {
        for j in i + 1..d {
            for (si, sj) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
                x[i] = centre[i] + si * lambda4 * half[i];
                x[j] = centre[j] + sj * lambda4 * half[j];
                sum4 += f(&x);
            }
            x[i] = centre[i];
            x[j] = centre[j];
        }
    }
    let mut sum5 = 0.0;
    for mask in 0..(1usize << d) {
        for i in 0..d {
            let sign = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            x[i] = centre[i] + sign * lambda5 * half[i];
        }
        sum5 += f(&x);
    }
    let r7 = volume * (w1 * f0 + w2 * sum2 + w3 * sum3 + w4 * sum4 + w5 * sum5);
    let r5 = volume * (v1 * f0 + v2 * sum2 + v3 * sum3 + v4 * sum4);
    (r7, (r7 - r5).abs(), best.1)
}

/// Regions bisected per refinement round.
const REFINE_BATCH: usize = 16;

fn evaluations_per_region(d: usize) -> usize {
    if d == 1 {
        15
    } else {
        1 + 4 * d + 2 * d * (d - 1) + (1 << d)
    }
}

fn evaluate<F: Fn(&[f64]) -> f64>(f: &F, lower: Vec<f64>, upper: Vec<f64>) -> Region {
    if lower.len() == 1 {
        let (value, error) = gauss_kronrod(f, lower[0], upper[0]);
        Region {
            lower,
            upper,
            value,
            error,
            split_dim: 0,
        }
    } else {
        let (value, error, split_dim) = genz_malik(f, &lower, &upper);
        Region {
            lower,
            upper,
            value,
            error,
            split_dim,
        }
    }
}

fn bisect(r: &Region) -> [(Vec<f64>, Vec<f64>); 2] {
    let k = r.split_dim;
    let mid = 0.5 * (r.lower[k] + r.upper[k]);
    let mut left_upper = r.upper.clone();
    left_upper[k] = mid;
    let mut right_lower = r.lower.clone();
    right_lower[k] = mid;
    [(r.lower.clone(), left_upper), (right_lower, r.upper.clone())]
}

/// Integrates `f` over the box `[lower, upper]`.
pub fn integrate<F>(f: F, lower: &[f64], upper: &[f64], opts: QuadOptions) -> QuadResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    integrate_seeded(f, lower, upper, 1, opts)
}

/// As [`integrate`], with the box first cut into `initial_splits` equal
/// parts along every axis. Helps when the mass sits in a corner of a large box.
pub fn integrate_seeded<F>(f: F, lower: &[f64], upper: &[f64], initial_splits: usize, opts: QuadOptions) -> QuadResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = lower.len();
    assert!(d >= 1 && d == upper.len(), "box dimensions must agree");
    let per_region = evaluations_per_region(d);
    let parts = initial_splits.max(1);

    let mut boxes = vec![(Vec::new(), Vec::new())];
    for k in 0..d {
        let width = (upper[k] - lower[k]) / parts as f64;
        boxes = boxes
            .into_iter()
            .flat_map(|(lo, hi): (Vec<f64>, Vec<f64>)| {
                (0..parts).map(move |p| {
                    let mut lo = lo.clone();
                    let mut hi = hi.clone();
                    lo.push(lower[k] + width * p as f64);
                    hi.push(if p + 1 == parts {
                        upper[k]
                    } else {
                        lower[k] + width * (p + 1) as f64
                    });
                    (lo, hi)
                })
            })
            .collect();
    }

    let seeded: Vec<Region> = boxes.into_par_iter().map(|(lo, hi)| evaluate(&f, lo, hi)).collect();
    let mut evaluations = per_region * seeded.len();
    let mut value: f64 = seeded.iter().map(|r| r.value).sum();
    let mut error: f64 = seeded.iter().map(|r| r.error).sum();
    let mut heap: BinaryHeap<Region> = seeded.into_iter().collect();

    let batch = REFINE_BATCH;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= tol {
            return QuadResult {
                value,
                error,
                evaluations,
                converged: true,
            };
        }
        if evaluations + 2 * per_region > opts.max_evals {
            return QuadResult {
                value,
                error,
                evaluations,
                converged: false,
            };
        }
        let take = batch.min((opts.max_evals - evaluations) / (2 * per_region)).max(1);
        let mut worst = Vec::with_capacity(take);
        while worst.len() < take {
            match heap.pop() {
                Some(r) => worst.push(r),
                None => break,
            }
        }
        let children: Vec<Region> = worst
            .par_iter()
            .flat_map_iter(bisect)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(lo, hi)| evaluate(&f, lo, hi))
            .collect();
        for r in &worst {
            value -= r.value;
            error -= r.error;
        }
        for c in children {
            value += c.value;
            error += c.error;
            evaluations += per_region;
            heap.push(c);
        }
        // running sums drift; resum exactly every so often
        if evaluations % (per_region * 4096) < per_region * 2 * take {
            value = heap.iter().map(|r| r.value).sum();
            error = heap.iter().map(|r| r.error).sum();
        }
    }
}
