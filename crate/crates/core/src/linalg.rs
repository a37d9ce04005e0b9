//! Dense linear algebra for systems of up to three unknowns.
//!
//! Everything in this crate works with hyperbolic systems of size n ≤ 3
//! (scalar conservation laws, 2×2 demonstration systems, and the 3×3
//! reduced gas-dynamics system), so matrices and vectors are fixed-capacity
//! stack values: no allocation in the per-seed hot loops.
//!
//! Eigen machinery:
//! - eigenvalues are roots of the characteristic polynomial (closed form for
//!   n ≤ 2, trigonometric Cardano plus Newton polish for n = 3), returned in
//!   strictly descending order;
//! - right eigenvectors come from a full-pivot null-space solve refined by
//!   shifted inverse iteration;
//! - left eigenvectors are rows of the inverse of the right-eigenvector
//!   matrix, which makes the biorthogonality relation η_i·ξ^j = δ_ij hold to
//!   solver precision by construction.

use crate::error::{Error, Result};

/// Maximum supported system size.
pub const MAX_N: usize = 3;

/// Eigenvalue separations below this are treated as loss of strict
/// hyperbolicity.
pub const HYPERBOLICITY_GAP_FLOOR: f64 = 1e-10;

/// Fixed-capacity column vector of dimension `n ≤ MAX_N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VecN {
    n: usize,
    v: [f64; MAX_N],
}

impl VecN {
    /// Zero vector of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1 && n <= MAX_N, "dimension {n} out of range");
        VecN { n, v: [0.0; MAX_N] }
    }

    /// Builds a vector from a slice.
    pub fn from_slice(s: &[f64]) -> Self {
        let mut out = Self::zeros(s.len());
        out.v[..s.len()].copy_from_slice(s);
        out
    }

    /// Dimension.
    pub fn len(&self) -> usize {
        self.n
    }

    /// True when the dimension is zero (never, by construction).
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Component access.
    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        self.v[i]
    }

    /// Component write access.
    #[inline]
    pub fn set(&mut self, i: usize, value: f64) {
        debug_assert!(i < self.n);
        self.v[i] = value;
    }

    /// Contents as a slice of length `n`.
    pub fn as_slice(&self) -> &[f64] {
        &self.v[..self.n]
    }

    /// Euclidean dot product.
    #[inline]
    pub fn dot(&self, other: &VecN) -> f64 {
        debug_assert_eq!(self.n, other.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            acc += self.v[i] * other.v[i];
        }
        acc
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Maximum absolute component.
    pub fn norm_inf(&self) -> f64 {
        self.as_slice().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Multiplies every component by `s`.
    pub fn scale(&self, s: f64) -> VecN {
        let mut out = *self;
        for i in 0..self.n {
            out.v[i] *= s;
        }
        out
    }

    /// Componentwise sum.
    pub fn add(&self, other: &VecN) -> VecN {
        debug_assert_eq!(self.n, other.n);
        let mut out = *self;
        for i in 0..self.n {
            out.v[i] += other.v[i];
        }
        out
    }

    /// Componentwise difference.
    pub fn sub(&self, other: &VecN) -> VecN {
        debug_assert_eq!(self.n, other.n);
        let mut out = *self;
        for i in 0..self.n {
            out.v[i] -= other.v[i];
        }
        out
    }
}

/// Fixed-capacity row-major square matrix of dimension `n ≤ MAX_N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatN {
    n: usize,
    a: [f64; MAX_N * MAX_N],
}

impl MatN {
    /// Zero matrix of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1 && n <= MAX_N, "dimension {n} out of range");
        MatN {
            n,
            a: [0.0; MAX_N * MAX_N],
        }
    }

    /// Identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from row slices.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "row {i} has wrong length");
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry access.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n && j < self.n);
        self.a[i * MAX_N + j]
    }

    /// Entry write access.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.a[i * MAX_N + j] = value;
    }

    /// Row `i` as a vector.
    pub fn row(&self, i: usize) -> VecN {
        let mut out = VecN::zeros(self.n);
        for j in 0..self.n {
            out.set(j, self.get(i, j));
        }
        out
    }

    /// Column `j` as a vector.
    pub fn col(&self, j: usize) -> VecN {
        let mut out = VecN::zeros(self.n);
        for i in 0..self.n {
            out.set(i, self.get(i, j));
        }
        out
    }

    /// Matrix–vector product `A x`.
    pub fn mul_vec(&self, x: &VecN) -> VecN {
        debug_assert_eq!(self.n, x.n);
        let mut out = VecN::zeros(self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for j in 0..self.n {
                acc += self.get(i, j) * x.get(j);
            }
            out.set(i, acc);
        }
        out
    }

    /// Row-vector–matrix product `xᵀ A`.
    pub fn vec_mul(&self, x: &VecN) -> VecN {
        debug_assert_eq!(self.n, x.n);
        let mut out = VecN::zeros(self.n);
        for j in 0..self.n {
            let mut acc = 0.0;
            for i in 0..self.n {
                acc += x.get(i) * self.get(i, j);
            }
            out.set(j, acc);
        }
        out
    }

    /// Componentwise difference.
    pub fn sub(&self, other: &MatN) -> MatN {
        debug_assert_eq!(self.n, other.n);
        let mut out = *self;
        for k in 0..MAX_N * MAX_N {
            out.a[k] -= other.a[k];
        }
        out
    }

    /// Multiplies every entry by `s`.
    pub fn scale(&self, s: f64) -> MatN {
        let mut out = *self;
        for k in 0..MAX_N * MAX_N {
            out.a[k] *= s;
        }
        out
    }

    /// Maximum absolute entry.
    pub fn norm_inf(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    ///
    /// Returns `None` when a pivot degenerates (singular to machine
    /// precision).
    pub fn solve(&self, b: &VecN) -> Option<VecN> {
        let n = self.n;
        let mut a = *self;
        let mut rhs = *b;
        let mut perm = [0usize; MAX_N];
        for (i, p) in perm.iter_mut().enumerate().take(n) {
            *p = i;
        }
        for col in 0..n {
            // Partial pivot: largest remaining entry in this column.
            let mut pivot_row = col;
            let mut pivot_val = a.get(perm[col], col).abs();
            for r in (col + 1)..n {
                let v = a.get(perm[r], col).abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = r;
                }
            }
            if pivot_val < f64::MIN_POSITIVE.sqrt() {
                return None;
            }
            perm.swap(col, pivot_row);
            let prow = perm[col];
            let inv_p = 1.0 / a.get(prow, col);
            for r in (col + 1)..n {
                let row = perm[r];
                let factor = a.get(row, col) * inv_p;
                if factor != 0.0 {
                    for c in col..n {
                        a.set(row, c, a.get(row, c) - factor * a.get(prow, c));
                    }
                    rhs.set(row, rhs.get(row) - factor * rhs.get(prow));
                }
            }
        }
        let mut x = VecN::zeros(n);
        for col in (0..n).rev() {
            let row = perm[col];
            let mut acc = rhs.get(row);
            for c in (col + 1)..n {
                acc -= a.get(row, c) * x.get(c);
            }
            x.set(col, acc / a.get(row, col));
        }
        Some(x)
    }

    /// Matrix inverse via column-by-column solves.
    pub fn inverse(&self) -> Option<MatN> {
        let n = self.n;
        let mut out = MatN::zeros(n);
        for j in 0..n {
            let mut e = VecN::zeros(n);
            e.set(j, 1.0);
            let col = self.solve(&e)?;
            for i in 0..n {
                out.set(i, j, col.get(i));
            }
        }
        Some(out)
    }
}

/// Real eigenvalues of `a` in strictly descending order.
///
/// Fails with [`Error::NotStrictlyHyperbolic`] when the spectrum is complex
/// or two eigenvalues are closer than [`HYPERBOLICITY_GAP_FLOOR`].
pub fn eigenvalues_desc(a: &MatN) -> Result<VecN> {
    let n = a.dim();
    let mut lam = VecN::zeros(n);
    match n {
        1 => lam.set(0, a.get(0, 0)),
        2 => {
            let tr = a.get(0, 0) + a.get(1, 1);
            let det = a.get(0, 0) * a.get(1, 1) - a.get(0, 1) * a.get(1, 0);
            let disc = tr * tr - 4.0 * det;
            if disc <= 0.0 {
                return Err(Error::NotStrictlyHyperbolic {
                    gap: disc.max(0.0).sqrt(),
                    floor: HYPERBOLICITY_GAP_FLOOR,
                });
            }
            let s = disc.sqrt();
            lam.set(0, 0.5 * (tr + s));
            lam.set(1, 0.5 * (tr - s));
        }
        3 => {
            let roots = cubic_roots_desc(a)?;
            for (i, r) in roots.iter().enumerate() {
                lam.set(i, *r);
            }
        }
        _ => unreachable!("dimension bounded by MAX_N"),
    }
    // Enforce the strict gap.
    for i in 1..n {
        let gap = lam.get(i - 1) - lam.get(i);
        if gap < HYPERBOLICITY_GAP_FLOOR {
            return Err(Error::NotStrictlyHyperbolic {
                gap,
                floor: HYPERBOLICITY_GAP_FLOOR,
            });
        }
    }
    Ok(lam)
}

/// Characteristic polynomial of a 3×3 matrix: λ³ − c2·λ² + c1·λ − c0.
fn char_poly_coeffs(a: &MatN) -> (f64, f64, f64) {
    let c2 = a.get(0, 0) + a.get(1, 1) + a.get(2, 2);
    let m01 = a.get(0, 0) * a.get(1, 1) - a.get(0, 1) * a.get(1, 0);
    let m02 = a.get(0, 0) * a.get(2, 2) - a.get(0, 2) * a.get(2, 0);
    let m12 = a.get(1, 1) * a.get(2, 2) - a.get(1, 2) * a.get(2, 1);
    let c1 = m01 + m02 + m12;
    let c0 = a.get(0, 0) * (a.get(1, 1) * a.get(2, 2) - a.get(1, 2) * a.get(2, 1))
        - a.get(0, 1) * (a.get(1, 0) * a.get(2, 2) - a.get(1, 2) * a.get(2, 0))
        + a.get(0, 2) * (a.get(1, 0) * a.get(2, 1) - a.get(1, 1) * a.get(2, 0));
    (c2, c1, c0)
}

/// Three real roots of the characteristic polynomial, descending.
fn cubic_roots_desc(a: &MatN) -> Result<[f64; 3]> {
    let (c2, c1, c0) = char_poly_coeffs(a);
    // Depressed cubic y³ + p·y + q with λ = y + c2/3.
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = -c0 + c1 * shift - 2.0 * shift * shift * shift;
    // Three distinct real roots require p < 0 (pairwise-gap identity
    // p = −[(λ₁−λ₂)² + (λ₁−λ₃)² + (λ₂−λ₃)²]/6) and |cos argument| ≤ 1.
    let scale = a.norm_inf().max(1.0);
    if p >= 0.0 {
        return Err(Error::NotStrictlyHyperbolic {
            gap: 0.0,
            floor: HYPERBOLICITY_GAP_FLOOR,
        });
    }
    let m = 2.0 * (-p / 3.0).sqrt();
    let mut cos_arg = 3.0 * q / (p * m);
    if cos_arg.abs() > 1.0 + 1e-9 {
        // Complex conjugate pair in the spectrum.
        return Err(Error::NotStrictlyHyperbolic {
            gap: 0.0,
            floor: HYPERBOLICITY_GAP_FLOOR,
        });
    }
    cos_arg = cos_arg.clamp(-1.0, 1.0);
    let theta = cos_arg.acos();
    let mut roots = [0.0f64; 3];
    for (k, root) in roots.iter_mut().enumerate() {
        let y = m * ((theta - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos();
        *root = y + shift;
    }
    // Newton polish against the full characteristic polynomial.
    for root in roots.iter_mut() {
        for _ in 0..2 {
            let x = *root;
            let f = ((x - c2) * x + c1) * x - c0;
            let df = (3.0 * x - 2.0 * c2) * x + c1;
            if df.abs() > f64::MIN_POSITIVE.sqrt() {
                let step = f / df;
                if step.abs() < 0.5 * scale {
                    *root = x - step;
                }
            }
        }
    }
    roots.sort_by(|x, y| y.partial_cmp(x).expect("eigenvalues are finite"));
    Ok(roots)
}

/// Right eigenvector of `a` for eigenvalue `lambda`, refined by shifted
/// inverse iteration and normalized to unit Euclidean length.
pub fn right_eigenvector(a: &MatN, lambda: f64) -> Result<VecN> {
    let n = a.dim();
    let scale = a.norm_inf().max(1.0);
    // Initial guess: null-space direction of (A − λI) by full-pivot
    // elimination.
    let shifted = a.sub(&MatN::identity(n).scale(lambda));
    let mut guess = null_direction(&shifted);
    // Inverse iteration with a slightly detuned shift so the solve stays
    // nonsingular while hugely amplifying the λ-eigendirection.
    let detune = lambda + scale * 3e-12 + 1e-300;
    let iter_mat = a.sub(&MatN::identity(n).scale(detune));
    for _ in 0..3 {
        match iter_mat.solve(&guess) {
            Some(next) => {
                let norm = next.norm();
                if !norm.is_finite() || norm == 0.0 {
                    break;
                }
                guess = next.scale(1.0 / norm);
            }
            None => break,
        }
    }
    let norm = guess.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::NotStrictlyHyperbolic {
            gap: 0.0,
            floor: HYPERBOLICITY_GAP_FLOOR,
        });
    }
    let v = guess.scale(1.0 / norm);
    // Consistency: residual must be tiny relative to the matrix scale.
    let residual = a.mul_vec(&v).sub(&v.scale(lambda)).norm_inf();
    if residual > 1e-8 * scale {
        return Err(Error::NotStrictlyHyperbolic {
            gap: residual,
            floor: HYPERBOLICITY_GAP_FLOOR,
        });
    }
    Ok(v)
}

/// Best-effort null-space direction of a (numerically singular) matrix via
/// full-pivot Gaussian elimination.
fn null_direction(m: &MatN) -> VecN {
    let n = m.dim();
    let mut a = *m;
    let mut row_perm = [0usize; MAX_N];
    let mut col_perm = [0usize; MAX_N];
    for i in 0..n {
        row_perm[i] = i;
        col_perm[i] = i;
    }
    let rank_limit = n - 1;
    for step in 0..rank_limit {
        // Full pivot over the remaining block.
        let (mut best_r, mut best_c, mut best_v) = (step, step, -1.0f64);
        for r in step..n {
            for c in step..n {
                let v = a.get(row_perm[r], col_perm[c]).abs();
                if v > best_v {
                    best_v = v;
                    best_r = r;
                    best_c = c;
                }
            }
        }
        row_perm.swap(step, best_r);
        col_perm.swap(step, best_c);
        let prow = row_perm[step];
        let pcol = col_perm[step];
        let pivot = a.get(prow, pcol);
        if pivot.abs() < f64::MIN_POSITIVE.sqrt() {
            break;
        }
        for r in (step + 1)..n {
            let row = row_perm[r];
            let factor = a.get(row, pcol) / pivot;
            if factor != 0.0 {
                for c in step..n {
                    let col = col_perm[c];
                    a.set(row, col, a.get(row, col) - factor * a.get(prow, col));
                }
            }
        }
    }
    // Free variable: the last permuted column. Back-substitute the rest.
    let mut x = VecN::zeros(n);
    x.set(col_perm[n - 1], 1.0);
    for step in (0..rank_limit).rev() {
        let row = row_perm[step];
        let pcol = col_perm[step];
        let mut acc = 0.0;
        for c in (step + 1)..n {
            let col = col_perm[c];
            acc -= a.get(row, col) * x.get(col);
        }
        let pivot = a.get(row, pcol);
        if pivot.abs() >= f64::MIN_POSITIVE.sqrt() {
            x.set(pcol, acc / pivot);
        }
    }
    let norm = x.norm();
    if norm > 0.0 && norm.is_finite() {
        x.scale(1.0 / norm)
    } else {
        let mut fallback = VecN::zeros(n);
        fallback.set(0, 1.0);
        fallback
    }
}
