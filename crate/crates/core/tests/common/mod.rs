//! Oracles shared by the integration suites. Each one is written
//! independently of the library code it checks.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Determinant by cofactor expansion along the first row.
pub fn det(n: usize, m: &[i64]) -> i128 {
    if n == 1 {
        return m[0] as i128;
    }
    let mut total = 0i128;
    for col in 0..n {
        if m[col] == 0 {
            continue;
        }
        let minor: Vec<i64> = (1..n)
            .flat_map(|r| (0..n).filter(move |&c| c != col).map(move |c| (r, c)))
            .map(|(r, c)| m[r * n + c])
            .collect();
        let sign = if col % 2 == 0 { 1 } else { -1 };
        total += sign * m[col] as i128 * det(n - 1, &minor);
    }
    total
}

/// Every integer matrix with entries in `[-T, T]`, determinant 1 and
/// `sum g_ij^2 < T^2`, sorted lexicographically. Exhaustive; only for small
/// `n` and `T`.
pub fn brute_force(n: usize, t: f64) -> Vec<Vec<i64>> {
    let bound = t.floor() as i64;
    let side = (2 * bound + 1) as u64;
    let cells = n * n;
    let mut out = Vec::new();
    let mut m = vec![0i64; cells];
    for code in 0..side.pow(cells as u32) {
        let mut c = code;
        for x in m.iter_mut() {
            *x = (c % side) as i64 - bound;
            c /= side;
        }
        let norm: i64 = m.iter().map(|x| x * x).sum();
        if (norm as f64) < t * t && det(n, &m) == 1 {
            out.push(m.clone());
        }
    }
    out.sort();
    out
}

/// `Gamma(k / 2)` for a positive integer `k`, from factorials and the
/// double factorial identity `Gamma(j + 1/2) = (2j-1)!! sqrt(pi) / 2^j`.
pub fn gamma_half(k: u32) -> f64 {
    if k.is_multiple_of(2) {
        (1..k / 2).map(f64::from).product()
    } else {
        let j = (k - 1) / 2;
        let odd: f64 = (0..j).map(|i| f64::from(2 * i + 1)).product();
        odd * PI.sqrt() / 2f64.powi(j as i32)
    }
}

/// The volume constant evaluated as a plain product, no log-gamma.
pub fn gamma_constant_direct(n: u32) -> f64 {
    let num = PI.powf(f64::from(n * (n - 1)) / 4.0);
    let den = 2f64.powi(n as i32 - 1) * gamma_half(n * n - n + 2);
    (1..n).map(|k| gamma_half(n - k)).product::<f64>() * num / den
}
