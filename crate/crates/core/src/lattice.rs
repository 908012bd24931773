//! Enumeration of `{gamma in Gamma : ||gamma|| < T}` for `Gamma = SL(n,Z)` or a
//! principal congruence subgroup.
//!
//! Depth-first search over the entries of rows `1..n-1` with the partial sum of
//! squares as pruning bound and a primitivity (gcd) test on every completed row
//! and on the minors of completed row blocks. The last row is not searched: it
//! solves the linear equation `sum_j cof_j x_j = 1` whose coefficients are the
//! cofactors of the first `n - 1` rows. Its innermost coordinate runs along an
//! arithmetic progression clipped to the exact interval allowed by the norm.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{GroupElement, Matrix};

pub const MIN_ENUM_DIM: usize = 2;
pub const MAX_ENUM_DIM: usize = 4;
pub const DEFAULT_CEILING: u64 = 100_000_000;
/// Entries are bounded by `T`; keeping `T < 2^30` keeps every cofactor
/// computation exact in `i128`.
pub const MAX_RADIUS: f64 = (1u64 << 30) as f64;

/// Integer `n x n` matrix with determinant exactly 1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeElement {
    n: usize,
    entries: [i64; MAX_ENUM_DIM * MAX_ENUM_DIM],
}

impl LatticeElement {
    /// Validates the determinant exactly.
    pub fn from_row_major(n: usize, entries: &[i64]) -> Result<Self> {
        check_enum_dim(n)?;
        if entries.len() != n * n {
            return Err(Error::invalid(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        let mut e = Self {
            n,
            entries: [0; MAX_ENUM_DIM * MAX_ENUM_DIM],
        };
        e.entries[..n * n].copy_from_slice(entries);
        let det = e.det();
        if det != 1 {
            return Err(Error::NotUnimodular { det: det as f64 });
        }
        Ok(e)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries[..self.n * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn norm_sq(&self) -> u64 {
        self.entries().iter().map(|x| (x * x) as u64).sum()
    }

    pub fn det(&self) -> i128 {
        let n = self.n;
        let rows: Vec<usize> = (0..n).collect();
        let cols: Vec<usize> = (0..n).collect();
        minor_det(&self.entries, n, &rows, &cols)
    }

    pub fn to_matrix(&self) -> Matrix {
        let data: Vec<f64> = self.entries().iter().map(|&x| x as f64).collect();
        Matrix::from_row_major(self.n, &data).expect("enumeration dimension is a valid matrix dimension")
    }

    pub fn to_group_element(&self) -> GroupElement {
        GroupElement::new(self.to_matrix()).expect("integer matrix with det 1")
    }
}

impl fmt::Debug for LatticeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LatticeElement{:?}", self.entries())
    }
}

impl fmt::Display for LatticeElement {
    /// Dump format: row-major, space separated.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, x) in self.entries().iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

fn check_enum_dim(n: usize) -> Result<()> {
    if (MIN_ENUM_DIM..=MAX_ENUM_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::Dimension {
            n,
            min: MIN_ENUM_DIM,
            max: MAX_ENUM_DIM,
        })
    }
}

/// Which lattice is enumerated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SubgroupSpec {
    #[default]
    Full,
    /// `{gamma : gamma = I mod q}`.
    PrincipalCongruence { q: u32 },
}

impl SubgroupSpec {
    pub fn principal(q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::invalid(format!("congruence modulus must be >= 2, got {q}")));
        }
        Ok(Self::PrincipalCongruence { q })
    }

    /// Modulus of the congruence condition, 1 for the full group.
    pub fn modulus(&self) -> i64 {
        match self {
            Self::Full => 1,
            Self::PrincipalCongruence { q } => *q as i64,
        }
    }

    pub fn contains(&self, g: &LatticeElement) -> bool {
        let q = self.modulus();
        let n = g.dim();
        (0..n).all(|i| (0..n).all(|j| (g.get(i, j) - (i == j) as i64).rem_euclid(q) == 0))
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Full => Ok(()),
            Self::PrincipalCongruence { q } => Self::principal(*q).map(|_| ()),
        }
    }
}

impl fmt::Display for SubgroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Full => f.write_str("full"),
            Self::PrincipalCongruence { q } => write!(f, "gamma({q})"),
        }
    }
}

/// Exact integer form of the strict bound `sum g_ij^2 < T^2`.
///
/// `T` is an IEEE double, hence a dyadic rational, so `T^2` is computed exactly
/// in `u128` and the largest admissible integer sum of squares is
/// `ceil(T^2) - 1`. A sum equal to `T^2` (possible only when `T^2` is an
/// integer) is excluded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormBound {
    max_sq: u64,
}

impl NormBound {
    pub fn from_radius(t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() || t >= MAX_RADIUS {
            return Err(Error::invalid(format!(
                "norm bound T must satisfy 0 < T < 2^30, got {t}"
            )));
        }
        Ok(Self {
            max_sq: ceil_square(t) - 1,
        })
    }

    /// Largest admissible integer sum of squares.
    pub fn max_sq(&self) -> u64 {
        self.max_sq
    }

    #[inline]
    pub fn admits(&self, norm_sq: u64) -> bool {
        norm_sq <= self.max_sq
    }
}

/// `ceil(t^2)` computed exactly for a positive finite double below 2^30.
fn ceil_square(t: f64) -> u64 {
    let bits = t.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if raw_exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), raw_exp - 1075)
    };
    // t = mant * 2^exp, t^2 = mant^2 * 2^(2 exp)
    let sq = (mant as u128) * (mant as u128);
    let shift = 2 * exp;
    if shift >= 0 {
        (sq << shift) as u64
    } else {
        let k = (-shift) as u32;
        if k >= 127 {
            return 1;
        }
        let denom = 1u128 << k;
        ((sq + denom - 1) >> k) as u64
    }
}

pub(crate) fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

fn gcd128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Returns `(g, x)` with `a x = g mod m`, `g = gcd(a, m)`, `m > 0`.
fn inverse_part(a: i128, m: i128) -> (i128, i128) {
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    (old_r, old_s)
}

fn isqrt(v: u64) -> u64 {
    let mut r = (v as f64).sqrt() as u64;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

/// Determinant of the submatrix on `rows x cols` of a row-major `stride`-wide array.
fn minor_det(entries: &[i64], stride: usize, rows: &[usize], cols: &[usize]) -> i128 {
    match rows.len() {
        0 => 1,
        1 => entries[rows[0] * stride + cols[0]] as i128,
        2 => {
            let a = entries[rows[0] * stride + cols[0]] as i128;
            let b = entries[rows[0] * stride + cols[1]] as i128;
            let c = entries[rows[1] * stride + cols[0]] as i128;
            let d = entries[rows[1] * stride + cols[1]] as i128;
            a * d - b * c
        }
        k => {
            let mut total = 0i128;
            let mut sub = [0usize; MAX_ENUM_DIM];
            for (idx, &c) in cols.iter().enumerate() {
                let a = entries[rows[0] * stride + c] as i128;
                if a == 0 {
                    continue;
                }
                let mut m = 0;
                for &other in cols.iter() {
                    if other != c {
                        sub[m] = other;
                        m += 1;
                    }
                }
                let d = minor_det(entries, stride, &rows[1..], &sub[..k - 1]);
                if idx % 2 == 0 {
                    total += a * d;
                } else {
                    total -= a * d;
                }
            }
            total
        }
    }
}

/// gcd of all `k x k` minors of the first `k` rows; 1 iff the rows extend to a
/// unimodular matrix.
fn leading_minors_gcd(entries: &[i64], n: usize, k: usize) -> i128 {
    let rows: Vec<usize> = (0..k).collect();
    let mut g = 0i128;
    let mut cols = vec![0usize; k];
    fn rec(entries: &[i64], n: usize, rows: &[usize], cols: &mut [usize], depth: usize, start: usize, g: &mut i128) {
        if *g == 1 {
            return;
        }
        if depth == cols.len() {
            *g = gcd128(*g, minor_det(entries, n, rows, cols));
            return;
        }
        for c in start..n {
            cols[depth] = c;
            rec(entries, n, rows, cols, depth + 1, c + 1, g);
        }
    }
    rec(entries, n, &rows, &mut cols, 0, 0, &mut g);
    g
}

/// Streams the lattice elements of norm below `T`.
#[derive(Clone, Debug)]
pub struct Enumerator {
    n: usize,
    bound: NormBound,
    spec: SubgroupSpec,
    ceiling: u64,
}

impl Enumerator {
    pub fn new(n: usize, t: f64, spec: SubgroupSpec) -> Result<Self> {
        check_enum_dim(n)?;
        spec.validate()?;
        Ok(Self {
            n,
            bound: NormBound::from_radius(t)?,
            spec,
            ceiling: DEFAULT_CEILING,
        })
    }

    /// Maximum number of elements before [`Error::BudgetExceeded`].
    pub fn with_ceiling(mut self, ceiling: u64) -> Self {
        self.ceiling = ceiling;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bound(&self) -> NormBound {
        self.bound
    }

    pub fn spec(&self) -> SubgroupSpec {
        self.spec
    }

    /// Visits every element once, in lexicographic row-major order.
    /// Returns the number of elements visited.
    pub fn for_each<F: FnMut(&LatticeElement)>(&self, mut visit: F) -> Result<u64> {
        let counter = AtomicU64::new(0);
        let mut search = Search::new(self, &counter);
        search.run_all(&mut visit)?;
        Ok(counter.load(Ordering::Relaxed))
    }

    pub fn collect(&self) -> Result<Vec<LatticeElement>> {
        let mut out = Vec::new();
        self.for_each(|g| out.push(*g))?;
        Ok(out)
    }

    pub fn count(&self) -> Result<u64> {
        self.for_each(|_| {})
    }

    /// Parallel fold: the search tree is split by first row, each worker folds
    /// its subtrees into its own accumulator, and accumulators are merged.
    /// Visiting order is unspecified; `merge` must be commutative and
    /// associative for the result to be deterministic.
    pub fn par_fold<S, I, F, M>(&self, identity: I, fold: F, merge: M) -> Result<S>
    where
        S: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, &LatticeElement) + Sync + Send,
        M: Fn(S, S) -> S + Sync + Send,
    {
        let counter = AtomicU64::new(0);
        let roots = Search::new(self, &counter).first_rows();
        roots
            .par_iter()
            .try_fold(&identity, |mut acc, root| {
                let mut search = Search::new(self, &counter);
                search.run_from_root(root, &mut |g: &LatticeElement| fold(&mut acc, g))?;
                Ok::<S, Error>(acc)
            })
            .try_reduce(&identity, |a, b| Ok(merge(a, b)))
    }

    /// Parallel count.
    pub fn par_count(&self) -> Result<u64> {
        self.par_fold(|| 0u64, |c, _| *c += 1, |a, b| a + b)
    }
}

/// Elements of `Gamma` with `||gamma|| < T`.
pub fn enumerate_lattice(n: usize, t: f64, spec: SubgroupSpec) -> Result<Vec<LatticeElement>> {
    Enumerator::new(n, t, spec)?.collect()
}

/// `N_T(X) = |{gamma in Gamma : ||gamma|| < T}|`.
pub fn count_norm_ball(n: usize, t: f64, spec: SubgroupSpec) -> Result<u64> {
    Enumerator::new(n, t, spec)?.count()
}

struct Search<'a> {
    n: usize,
    max_sq: u64,
    q: i64,
    ceiling: u64,
    counter: &'a AtomicU64,
    entries: [i64; MAX_ENUM_DIM * MAX_ENUM_DIM],
    last_rows: Vec<[i64; MAX_ENUM_DIM]>,
}

impl<'a> Search<'a> {
    fn new(e: &Enumerator, counter: &'a AtomicU64) -> Self {
        Self {
            n: e.n,
            max_sq: e.bound.max_sq,
            q: e.spec.modulus(),
            ceiling: e.ceiling,
            counter,
            entries: [0; MAX_ENUM_DIM * MAX_ENUM_DIM],
            last_rows: Vec::new(),
        }
    }

    /// Smallest value `>= lo` congruent to `target` mod `q`.
    #[inline]
    fn first_in_class(&self, lo: i64, target: i64) -> i64 {
        lo + (target - lo).rem_euclid(self.q)
    }

    /// Every row after row `row` needs at least one nonzero entry.
    #[inline]
    fn reserve_after(&self, row: usize) -> u64 {
        (self.n - 1 - row) as u64
    }

    /// Admissible first rows, lexicographically ordered.
    fn first_rows(&mut self) -> Vec<[i64; MAX_ENUM_DIM]> {
        let mut roots = Vec::new();
        self.first_rows_rec(0, 0, &mut roots);
        roots
    }

    fn first_rows_rec(&mut self, col: usize, used: u64, out: &mut Vec<[i64; MAX_ENUM_DIM]>) {
        let n = self.n;
        if col == n {
            let g = self.entries[..n].iter().fold(0, |g, &x| gcd(g, x));
            if g == 1 {
                let mut row = [0; MAX_ENUM_DIM];
                row[..n].copy_from_slice(&self.entries[..n]);
                out.push(row);
            }
            return;
        }
        let Some(rem) = self.max_sq.checked_sub(used + self.reserve_after(0)) else {
            return;
        };
        let m = isqrt(rem) as i64;
        let target = (col == 0) as i64;
        let mut x = self.first_in_class(-m, target);
        while x <= m {
            self.entries[col] = x;
            self.first_rows_rec(col + 1, used + (x * x) as u64, out);
            x += self.q;
        }
        self.entries[col] = 0;
    }

    fn run_all<F: FnMut(&LatticeElement)>(&mut self, visit: &mut F) -> Result<()> {
        for root in self.first_rows() {
            self.run_from_root(&root, visit)?;
        }
        Ok(())
    }

    fn run_from_root<F: FnMut(&LatticeElement)>(&mut self, root: &[i64; MAX_ENUM_DIM], visit: &mut F) -> Result<()> {
        let n = self.n;
        self.entries[..n].copy_from_slice(&root[..n]);
        let used: u64 = root[..n].iter().map(|x| (x * x) as u64).sum();
        self.fill(n, used, visit)
    }

    /// Fills entry `pos` (row-major) of rows `1..n-1`.
    fn fill<F: FnMut(&LatticeElement)>(&mut self, pos: usize, used: u64, visit: &mut F) -> Result<()> {
        let n = self.n;
        let row = pos / n;
        let col = pos % n;
        if row == n - 1 {
            return self.solve_last_row(used, visit);
        }
        if col == 0 && row > 0 {
            // row `row - 1` just completed
            let prev = &self.entries[(row - 1) * n..row * n];
            if prev.iter().fold(0, |g, &x| gcd(g, x)) != 1 {
                return Ok(());
            }
            // the cofactor gcd of the last block is tested in solve_last_row
            if row >= 2 && row < n - 1 && leading_minors_gcd(&self.entries, n, row) != 1 {
                return Ok(());
            }
        }
        let Some(rem) = self.max_sq.checked_sub(used + self.reserve_after(row)) else {
            return Ok(());
        };
        let m = isqrt(rem) as i64;
        let target = (row == col) as i64;
        let mut x = self.first_in_class(-m, target);
        while x <= m {
            self.entries[pos] = x;
            self.fill(pos + 1, used + (x * x) as u64, visit)?;
            x += self.q;
        }
        self.entries[pos] = 0;
        Ok(())
    }

    fn solve_last_row<F: FnMut(&LatticeElement)>(&mut self, used: u64, visit: &mut F) -> Result<()> {
        let n = self.n;
        let last = n - 1;
        {
            let prev = &self.entries[(last - 1) * n..last * n];
            if prev.iter().fold(0, |g, &x| gcd(g, x)) != 1 {
                return Ok(());
            }
        }
        let Some(budget) = self.max_sq.checked_sub(used) else {
            return Ok(());
        };
        if budget == 0 {
            return Ok(());
        }
        // det = sum_j x_j * cof[j]
        let mut cof = [0i128; MAX_ENUM_DIM];
        let rows: Vec<usize> = (0..last).collect();
        let mut cols = [0usize; MAX_ENUM_DIM];
        for j in 0..n {
            let mut m = 0;
            for c in 0..n {
                if c != j {
                    cols[m] = c;
                    m += 1;
                }
            }
            let d = minor_det(&self.entries, n, &rows, &cols[..n - 1]);
            cof[j] = if (last + j).is_multiple_of(2) { d } else { -d };
        }
        let g = cof[..n].iter().fold(0, |g, &c| gcd128(g, c));
        if g != 1 {
            return Ok(());
        }
        let pivot = (0..n).max_by_key(|&j| cof[j].abs()).expect("n >= 2");
        let free: Vec<usize> = (0..n).filter(|&j| j != pivot).collect();
        let mut x = [0i64; MAX_ENUM_DIM];
        self.last_rows.clear();
        let mut solutions = std::mem::take(&mut self.last_rows);
        self.last_row_rec(&cof, pivot, &free, 0, 1, budget, &mut x, &mut solutions);
        solutions.sort_unstable();
        let mut out = LatticeElement {
            n,
            entries: self.entries,
        };
        for sol in &solutions {
            out.entries[last * n..n * n].copy_from_slice(&sol[..n]);
            if self.q > 1 && !(0..n).all(|j| (sol[j] - (j == last) as i64).rem_euclid(self.q) == 0) {
                continue;
            }
            let seen = self.counter.fetch_add(1, Ordering::Relaxed) + 1;
            if seen > self.ceiling {
                return Err(Error::BudgetExceeded { limit: self.ceiling });
            }
            debug_assert_eq!(out.det(), 1);
            visit(&out);
        }
        self.last_rows = solutions;
        Ok(())
    }

    /// Enumerates the outer free coordinates of the last row, then solves the
    /// innermost free coordinate and the pivot together.
    #[allow(clippy::too_many_arguments)]
    fn last_row_rec(
        &self,
        cof: &[i128; MAX_ENUM_DIM],
        pivot: usize,
        free: &[usize],
        depth: usize,
        rhs: i128,
        budget: u64,
        x: &mut [i64; MAX_ENUM_DIM],
        out: &mut Vec<[i64; MAX_ENUM_DIM]>,
    ) {
        if depth + 1 < free.len() {
            let j = free[depth];
            let m = isqrt(budget) as i64;
            let mut v = -m;
            while v <= m {
                x[j] = v;
                let rest = budget - (v * v) as u64;
                self.last_row_rec(cof, pivot, free, depth + 1, rhs - cof[j] * v as i128, rest, x, out);
                v += 1;
            }
            x[j] = 0;
            return;
        }
        // cof[inner] * a + cof[pivot] * b = rhs, a^2 + b^2 <= budget
        let inner = free[depth];
        let wq = cof[inner];
        let wp = cof[pivot];
        debug_assert!(wp != 0);
        let g2 = gcd128(wq, wp);
        if rhs % g2 != 0 {
            return;
        }
        let step = (wp / g2).abs();
        let base = if step == 1 {
            0
        } else {
            // (wq/g2) a = rhs/g2 mod step
            let (_, inv) = inverse_part(wq / g2, step);
            ((rhs / g2).rem_euclid(step) * inv.rem_euclid(step)).rem_euclid(step)
        };
        // Exact interval of a: (wp^2 + wq^2) a^2 - 2 rhs wq a + rhs^2 - budget wp^2 <= 0
        let a2 = (wp * wp + wq * wq) as f64;
        let disc = (budget as f64) * a2 - (rhs * rhs) as f64;
        if disc < -1.0 {
            return;
        }
        let half = (wp.abs() as f64) * disc.max(0.0).sqrt() / a2;
        let centre = (rhs as f64) * (wq as f64) / a2;
        let lo = (centre - half).floor() as i128 - 1;
        let hi = (centre + half).ceil() as i128 + 1;
        let mut a = lo + (base - lo).rem_euclid(step);
        while a <= hi {
            let num = rhs - wq * a;
            debug_assert_eq!(num % wp, 0);
            let b = num / wp;
            if a * a + b * b <= budget as i128 {
                x[inner] = a as i64;
                x[pivot] = b as i64;
                out.push(*x);
            }
            a += step;
        }
        x[inner] = 0;
        x[pivot] = 0;
    }
}

/// Writes elements in the dump format: one per line, row-major integers.
pub fn write_dump<W: Write>(mut out: W, elements: &[LatticeElement]) -> Result<()> {
    for g in elements {
        writeln!(out, "{g}")?;
    }
    Ok(())
}

/// Parses the dump format; blank lines and `#` comments are skipped.
pub fn read_dump<R: BufRead>(input: R, n: usize) -> Result<Vec<LatticeElement>> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let values = trimmed
            .split_whitespace()
            .map(|tok| tok.parse::<i64>().map_err(|e| Error::parse(idx + 1, e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let g = LatticeElement::from_row_major(n, &values).map_err(|e| Error::parse(idx + 1, e.to_string()))?;
        out.push(g);
    }
    Ok(out)
}
