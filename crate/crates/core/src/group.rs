//! Real matrices in SL(n,R), the Frobenius norm, and the Iwasawa / Borel
//! coordinates `g = k a(s) n(t)` used by every other module.
//!
//! Matrices are stored row-major in a fixed `MAX_DIM x MAX_DIM` stack array so
//! that the hot loops (sampling, actions) never allocate.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 6;

/// Tolerance on `|det g - 1|` accepted when building a [`GroupElement`].
pub const DET_TOLERANCE: f64 = 1e-9;
/// Tolerance on `sum(s)` accepted for diagonal exponents.
pub const TRACE_TOLERANCE: f64 = 1e-12;
/// Largest diagonal exponent accepted by [`n_of_s`].
pub const MAX_EXPONENT: f64 = 300.0;

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if (MIN_DIM..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::Dimension {
            n,
            min: MIN_DIM,
            max: MAX_DIM,
        })
    }
}

/// Square real matrix of dimension `n <= MAX_DIM`.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix {
    n: usize,
    data: [f64; MAX_DIM * MAX_DIM],
}

impl Matrix {
    pub fn zeros(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            n,
            data: [0.0; MAX_DIM * MAX_DIM],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        Ok(m)
    }

    /// Builds a matrix from `n*n` row-major entries.
    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(n)?;
        if entries.len() != n * n {
            return Err(Error::invalid(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = entries[i * n + j];
            }
        }
        Ok(m)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(values.len())?;
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.n;
        (0..n * n).map(|k| self[(k / n, k % n)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out[(i, j)] = self[(j, i)];
            }
        }
        out
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        debug_assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = Matrix {
            n,
            data: [0.0; MAX_DIM * MAX_DIM],
        };
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn scale(&self, c: f64) -> Matrix {
        let mut out = *self;
        out.data.iter_mut().for_each(|x| *x *= c);
        out
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        let mut out = *self;
        out.data.iter_mut().zip(rhs.data.iter()).for_each(|(a, b)| *a += b);
        out
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        self.add(&rhs.scale(-1.0))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> f64 {
        let n = self.n;
        let mut a = *self;
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[(x, col)].abs().total_cmp(&a[(y, col)].abs()))
                .unwrap_or(col);
            if a[(pivot, col)] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    let tmp = a[(col, j)];
                    a[(col, j)] = a[(pivot, j)];
                    a[(pivot, j)] = tmp;
                }
                det = -det;
            }
            let p = a[(col, col)];
            det *= p;
            for r in col + 1..n {
                let f = a[(r, col)] / p;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[(r, j)] -= f * a[(col, j)];
                }
            }
        }
        det
    }

    /// Matrix exponential by scaling and squaring of a truncated Taylor series.
    pub fn exp(&self) -> Matrix {
        let norm = self.frobenius_norm();
        let mut squarings = 0;
        let mut scaled = *self;
        if norm > 0.25 {
            squarings = (norm / 0.25).log2().ceil() as u32;
            scaled = self.scale(0.5f64.powi(squarings as i32));
        }
        let id = Matrix::identity(self.n).expect("dimension already checked");
        let mut sum = id;
        let mut term = id;
        for k in 1..=20 {
            term = term.mul(&scaled).scale(1.0 / k as f64);
            sum = sum.add(&term);
        }
        for _ in 0..squarings {
            sum = sum.mul(&sum);
        }
        sum
    }

    /// QR factorisation with `R` having a strictly positive diagonal.
    ///
    /// Householder reflections, followed by a sign flip of matching columns of
    /// `Q` and rows of `R`. Fails if the matrix is singular to working precision.
    pub fn qr_positive(&self) -> Result<(Matrix, Matrix)> {
        let n = self.n;
        let mut r = *self;
        let mut q = Matrix::identity(n)?;
        let scale = self.frobenius_norm().max(f64::MIN_POSITIVE);
        for k in 0..n.saturating_sub(1) {
            let mut v = [0.0; MAX_DIM];
            let mut norm_sq = 0.0;
            for i in k..n {
                v[i] = r[(i, k)];
                norm_sq += v[i] * v[i];
            }
            let norm = norm_sq.sqrt();
            if norm == 0.0 {
                continue;
            }
            let alpha = if v[k] > 0.0 { -norm } else { norm };
            v[k] -= alpha;
            let v_norm_sq: f64 = (k..n).map(|i| v[i] * v[i]).sum();
            if v_norm_sq == 0.0 {
                continue;
            }
            // R <- H R
            for j in 0..n {
                let dot: f64 = (k..n).map(|i| v[i] * r[(i, j)]).sum();
                let f = 2.0 * dot / v_norm_sq;
                for i in k..n {
                    r[(i, j)] -= f * v[i];
                }
            }
            // Q <- Q H
            for i in 0..n {
                let dot: f64 = (k..n).map(|j| q[(i, j)] * v[j]).sum();
                let f = 2.0 * dot / v_norm_sq;
                for j in k..n {
                    q[(i, j)] -= f * v[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                r[(i, j)] = 0.0;
            }
            let d = r[(i, i)];
            if d.abs() <= 1e-14 * scale {
                return Err(Error::Numeric("matrix is singular to working precision".into()));
            }
            if d < 0.0 {
                for j in 0..n {
                    r[(i, j)] = -r[(i, j)];
                    q[(j, i)] = -q[(j, i)];
                }
            }
        }
        Ok((q, r))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * MAX_DIM + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * MAX_DIM + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<f64>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)]).collect())
            .collect();
        f.debug_struct("Matrix")
            .field("n", &self.n)
            .field("rows", &rows)
            .finish()
    }
}

/// Element of SL(n,R): a real matrix whose determinant is 1 up to [`DET_TOLERANCE`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement(Matrix);

impl GroupElement {
    pub fn new(m: Matrix) -> Result<Self> {
        let det = m.det();
        if (det - 1.0).abs() > DET_TOLERANCE {
            return Err(Error::NotUnimodular { det });
        }
        Ok(Self(m))
    }

    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_row_major(n, entries)?)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Ok(Self(Matrix::identity(n)?))
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.n
    }

    pub fn mul(&self, rhs: &GroupElement) -> GroupElement {
        GroupElement(self.0.mul(&rhs.0))
    }

    /// Inverse via the adjugate for n = 2 and via the Iwasawa factors otherwise.
    pub fn inverse(&self) -> Result<GroupElement> {
        let m = &self.0;
        if m.n == 2 {
            let inv = Matrix::from_row_major(2, &[m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]])?;
            return Ok(GroupElement(inv));
        }
        let iw = iwasawa_decompose(self)?;
        let b_inv = iw.b.inverse_matrix();
        Ok(GroupElement(b_inv.mul(&iw.k.transpose())))
    }
}

/// Frobenius norm `(sum g_ij^2)^(1/2)`.
pub fn frobenius_norm(g: &GroupElement) -> f64 {
    g.0.frobenius_norm()
}

/// Iterates the strictly-upper-triangular index pairs `(i, j)`, `i < j`, in
/// row-major order. This is the layout of every `t` vector in the crate.
pub fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

pub fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    // pairs in rows before i, plus offset inside row i
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Coordinates `(s, t)` of `b = a(s) n(t)` in the identity component of the
/// upper triangular group.
#[derive(Clone, Debug, PartialEq)]
pub struct BorelCoords {
    s: Vec<f64>,
    t: Vec<f64>,
}

impl BorelCoords {
    pub fn new(s: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        let n = s.len();
        check_dim(n)?;
        check_traceless(&s)?;
        if t.len() != pair_count(n) {
            return Err(Error::invalid(format!(
                "expected {} unipotent coordinates for n = {n}, got {}",
                pair_count(n),
                t.len()
            )));
        }
        Ok(Self { s, t })
    }

    /// Builds coordinates from the first `n - 1` exponents; `s_n = -sum`.
    pub fn from_free(free: &[f64], t: Vec<f64>) -> Result<Self> {
        let mut s = free.to_vec();
        s.push(-free.iter().sum::<f64>());
        Self::new(s, t)
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            s: vec![0.0; n],
            t: vec![0.0; pair_count(n)],
        })
    }

    pub fn dim(&self) -> usize {
        self.s.len()
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn t_at(&self, i: usize, j: usize) -> f64 {
        self.t[pair_index(self.dim(), i, j)]
    }

    /// The matrix `a(s) n(t)`: row `i` of `n(t)` scaled by `e^{s_i}`.
    pub fn to_matrix(&self) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros(n).expect("dimension checked at construction");
        for i in 0..n {
            let e = self.s[i].exp();
            m[(i, i)] = e;
            for j in i + 1..n {
                m[(i, j)] = e * self.t_at(i, j);
            }
        }
        m
    }

    pub fn to_group_element(&self) -> GroupElement {
        GroupElement(self.to_matrix())
    }

    /// `(a(s) n(t))^{-1} = n(t)^{-1} a(-s)`, by back substitution on the
    /// unipotent factor.
    pub fn inverse_matrix(&self) -> Matrix {
        let n = self.dim();
        let mut u = Matrix::identity(n).expect("dimension checked at construction");
        for i in 0..n {
            for j in i + 1..n {
                u[(i, j)] = self.t_at(i, j);
            }
        }
        // Solve U X = I for the upper unipotent U.
        let mut inv = Matrix::identity(n).expect("dimension checked at construction");
        for col in 0..n {
            for i in (0..n).rev() {
                let mut v = if i == col { 1.0 } else { 0.0 };
                for k in i + 1..n {
                    v -= u[(i, k)] * inv[(k, col)];
                }
                inv[(i, col)] = v;
            }
        }
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] *= (-self.s[j]).exp();
            }
        }
        inv
    }
}

fn check_traceless(s: &[f64]) -> Result<()> {
    let sum: f64 = s.iter().sum();
    if sum.abs() > TRACE_TOLERANCE {
        return Err(Error::invalid(format!(
            "diagonal exponents must sum to zero, got sum {sum:e}"
        )));
    }
    Ok(())
}

/// Iwasawa factors `g = k a(s) n(t)` with `k` in SO(n).
#[derive(Clone, Debug, PartialEq)]
pub struct IwasawaCoords {
    pub k: Matrix,
    pub b: BorelCoords,
}

impl IwasawaCoords {
    pub fn reconstruct(&self) -> Matrix {
        self.k.mul(&self.b.to_matrix())
    }
}

/// Unique decomposition `g = k a(s) n(t)` with positive diagonal `a(s)`.
pub fn iwasawa_decompose(g: &GroupElement) -> Result<IwasawaCoords> {
    let n = g.dim();
    let (q, r) = g
        .matrix()
        .qr_positive()
        .map_err(|e| Error::Numeric(format!("Iwasawa decomposition of a det-1 matrix: {e}")))?;
    let mut s: Vec<f64> = (0..n).map(|i| r[(i, i)].ln()).collect();
    // det g = 1 only up to DET_TOLERANCE; project onto sum(s) = 0.
    let mean = s.iter().sum::<f64>() / n as f64;
    s.iter_mut().for_each(|x| *x -= mean);
    let t: Vec<f64> = upper_pairs(n).map(|(i, j)| r[(i, j)] / r[(i, i)]).collect();
    Ok(IwasawaCoords {
        k: q,
        b: BorelCoords { s, t },
    })
}

/// Positive roots `alpha_ij(s) = s_i - s_j`, `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RootData {
    pub n: usize,
}

impl RootData {
    pub fn new(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self { n })
    }

    /// `s_i - s_j` for any ordered pair; antisymmetric in `(i, j)`.
    pub fn alpha(&self, s: &[f64], i: usize, j: usize) -> f64 {
        s[i] - s[j]
    }

    /// Values of all positive roots in [`upper_pairs`] order.
    pub fn positive_roots(&self, s: &[f64]) -> Vec<f64> {
        upper_pairs(self.n).map(|(i, j)| s[i] - s[j]).collect()
    }
}

/// `delta(s) = sum_k (n - k) s_k` (1-based `k`), half the sum of positive roots.
pub fn delta(s: &[f64]) -> Result<f64> {
    check_traceless(s)?;
    let n = s.len();
    Ok(s.iter().enumerate().map(|(k, x)| (n - 1 - k) as f64 * x).sum())
}

/// `N(s) = sum_i e^{2 s_i}`.
pub fn n_of_s(s: &[f64]) -> Result<f64> {
    if let Some(max) = s.iter().copied().reduce(f64::max) {
        if !(max <= MAX_EXPONENT) {
            return Err(Error::invalid(format!(
                "exponent {max} exceeds the supported range (<= {MAX_EXPONENT})"
            )));
        }
    }
    Ok(s.iter().map(|x| (2.0 * x).exp()).sum())
}

/// `||a(s) n(t)||^2 = sum_i e^{2 s_i} + sum_{i<j} e^{2 s_i} t_ij^2`.
pub fn borel_norm_sq(b: &BorelCoords) -> f64 {
    let n = b.dim();
    let mut total = 0.0;
    for i in 0..n {
        let e2 = (2.0 * b.s[i]).exp();
        let mut row = 1.0;
        for j in i + 1..n {
            let t = b.t_at(i, j);
            row += t * t;
        }
        total += e2 * row;
    }
    total
}

/// Conjugation `a(s) n(t) a(s)^{-1} = n({e^{s_i - s_j} t_ij})`.
pub fn adjoint_a_on_n(s: &[f64], t: &[f64]) -> Result<Vec<f64>> {
    let n = s.len();
    check_dim(n)?;
    if t.len() != pair_count(n) {
        return Err(Error::invalid("unipotent coordinate count does not match n"));
    }
    Ok(upper_pairs(n)
        .zip(t)
        .map(|((i, j), tij)| (s[i] - s[j]).exp() * tij)
        .collect())
}

/// `exp(X)` for a random traceless `X` with off-trace entries uniform in
/// `[-1, 1]`. Well conditioned; used to drive property tests.
pub fn random_group_element<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<GroupElement> {
    let mut x = Matrix::zeros(n)?;
    let unit = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
    for i in 0..n {
        for j in 0..n {
            x[(i, j)] = unit.sample(rng);
        }
    }
    let tr = x.trace() / n as f64;
    for i in 0..n {
        x[(i, i)] -= tr;
    }
    GroupElement::new(x.exp())
}

/// Haar-distributed element of SO(n).
///
/// Gaussian matrix, QR with positive diagonal (Haar on O(n)), then the first
/// column is negated when the determinant is -1.
pub fn haar_special_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Matrix> {
    loop {
        let mut g = Matrix::zeros(n)?;
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = StandardNormal.sample(rng);
            }
        }
        let Ok((mut q, _)) = g.qr_positive() else {
            continue;
        };
        if q.det() < 0.0 {
            for i in 0..n {
                q[(i, 0)] = -q[(i, 0)];
            }
        }
        return Ok(q);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn norm_of_identity() {
        let id2 = GroupElement::identity(2).unwrap();
        let id3 = GroupElement::identity(3).unwrap();
        assert!((frobenius_norm(&id2) - 2f64.sqrt()).abs() < 1e-15);
        assert!((frobenius_norm(&id3) - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn norm_of_diagonal_element() {
        let l2 = 2f64.ln();
        let b = BorelCoords::new(vec![l2, -l2], vec![0.0]).unwrap();
        let g = b.to_group_element();
        assert!((frobenius_norm(&g) - 4.25f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_unimodular() {
        let m = Matrix::diagonal(&[2.0, 1.0]).unwrap();
        assert!(matches!(GroupElement::new(m), Err(Error::NotUnimodular { .. })));
        assert!(Matrix::zeros(7).is_err());
        assert!(Matrix::zeros(1).is_err());
    }

    #[test]
    fn pair_index_matches_iteration_order() {
        for n in MIN_DIM..=MAX_DIM {
            for (k, (i, j)) in upper_pairs(n).enumerate() {
                assert_eq!(pair_index(n, i, j), k);
            }
            assert_eq!(upper_pairs(n).count(), pair_count(n));
        }
    }

    #[test]
    fn iwasawa_of_identity() {
        let iw = iwasawa_decompose(&GroupElement::identity(3).unwrap()).unwrap();
        assert_eq!(iw.k, Matrix::identity(3).unwrap());
        assert!(iw.b.s().iter().all(|x| x.abs() < 1e-15));
        assert!(iw.b.t().iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn iwasawa_of_borel_element_is_itself() {
        let b = BorelCoords::from_free(&[0.4, -0.1], vec![1.5, -2.0, 0.25]).unwrap();
        let iw = iwasawa_decompose(&b.to_group_element()).unwrap();
        let id = Matrix::identity(3).unwrap();
        assert!(iw.k.sub(&id).frobenius_norm() < 1e-12);
        for (x, y) in iw.b.s().iter().zip(b.s()) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in iw.b.t().iter().zip(b.t()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn iwasawa_reconstructs_random_elements() {
        let mut rng = rng();
        for n in MIN_DIM..=MAX_DIM {
            for _ in 0..200 {
                let g = random_group_element(n, &mut rng).unwrap();
                let iw = iwasawa_decompose(&g).unwrap();
                let err = iw.reconstruct().sub(g.matrix()).frobenius_norm();
                assert!(err < 1e-10, "n = {n}, err = {err}");
                let ktk = iw.k.transpose().mul(&iw.k);
                assert!(ktk.sub(&Matrix::identity(n).unwrap()).frobenius_norm() < 1e-9);
                assert!((iw.k.det() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn singular_matrix_fails_qr() {
        let m = Matrix::from_row_major(2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(m.qr_positive(), Err(Error::Numeric(_))));
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(delta(&[0.7, -0.7]).unwrap(), 0.7);
        assert_eq!(delta(&[1.0, 0.0, -1.0]).unwrap(), 2.0);
        assert!(delta(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn delta_is_half_sum_of_positive_roots() {
        let s = [0.3, -1.2, 0.5, 0.4];
        let roots = RootData::new(4).unwrap().positive_roots(&s);
        let half: f64 = roots.iter().sum::<f64>() / 2.0;
        assert!((delta(&s).unwrap() - half).abs() < 1e-12);
    }

    #[test]
    fn roots_are_antisymmetric() {
        let r = RootData::new(3).unwrap();
        let s = [0.2, 0.9, -1.1];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(r.alpha(&s, i, j), -r.alpha(&s, j, i));
            }
        }
    }

    #[test]
    fn n_of_s_examples() {
        assert_eq!(n_of_s(&[0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(n_of_s(&[0.0, 0.0, 0.0]).unwrap(), 3.0);
        let lt = 50f64.ln();
        let expected = (2.0 * lt - 2.0).exp() + (2.0 - 2.0 * lt).exp();
        assert!((n_of_s(&[lt - 1.0, 1.0 - lt]).unwrap() - expected).abs() < 1e-12);
        assert!(n_of_s(&[301.0, -301.0]).is_err());
    }

    #[test]
    fn n_of_s_partial_derivatives() {
        let s = [0.3, -0.1, -0.2];
        let h = 1e-6;
        for i in 0..3 {
            let mut up = s;
            let mut dn = s;
            up[i] += h;
            dn[i] -= h;
            let fd = (n_of_s(&up).unwrap() - n_of_s(&dn).unwrap()) / (2.0 * h);
            let exact = 2.0 * (2.0 * s[i]).exp();
            assert!(fd > 0.0);
            assert!(((fd - exact) / exact).abs() < 1e-6);
        }
    }

    #[test]
    fn borel_norm_examples() {
        let b = BorelCoords::identity(2).unwrap();
        assert_eq!(borel_norm_sq(&b), 2.0);
        let b = BorelCoords::new(vec![0.0, 0.0], vec![3.0]).unwrap();
        assert_eq!(borel_norm_sq(&b), 11.0);
    }

    #[test]
    fn adjoint_examples() {
        let t = [0.5, -1.0, 2.0];
        assert_eq!(adjoint_a_on_n(&[0.0; 3], &t).unwrap(), t.to_vec());
        let out = adjoint_a_on_n(&[1.0, -1.0], &[1.0]).unwrap();
        assert!((out[0] - 2f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn borel_inverse() {
        let b = BorelCoords::from_free(&[0.4, -0.1, 0.2], vec![1.5, -2.0, 0.25, 0.1, 0.0, -0.3]).unwrap();
        let prod = b.to_matrix().mul(&b.inverse_matrix());
        assert!(prod.sub(&Matrix::identity(4).unwrap()).frobenius_norm() < 1e-12);
        let g = b.to_group_element();
        let inv = g.inverse().unwrap();
        assert!(g.mul(&inv).matrix().sub(&Matrix::identity(4).unwrap()).frobenius_norm() < 1e-10);
    }

    #[test]
    fn haar_so_n_is_special_orthogonal() {
        let mut rng = rng();
        for n in MIN_DIM..=MAX_DIM {
            let k = haar_special_orthogonal(n, &mut rng).unwrap();
            assert!((k.det() - 1.0).abs() < 1e-12);
            let ktk = k.transpose().mul(&k);
            assert!(ktk.sub(&Matrix::identity(n).unwrap()).frobenius_norm() < 1e-12);
        }
    }
}
