//! Complex linear algebra substrate and deterministic randomness.
//!
//! Provides the handful of numerical primitives everything else builds on:
//!
//! - [`ComplexMatrix`]: dense, row-major complex matrices with multiply,
//!   adjoint, and Kronecker product ([`kron`]).
//! - [`StateVector`]: the 2^m amplitude vector of an m-qubit register.
//! - [`herm_eig`]: Hermitian eigendecomposition via complex Householder
//!   tridiagonalization plus implicit QL with Wilkinson shifts. Dimensions
//!   stay at or below 256 (8 qubits), so a dense O(n^3) solver with good
//!   constants is the right tool.
//! - [`pinv_sqrt`]: the inverse square root on the support of a PSD matrix,
//!   the workhorse of pretty-good-measurement construction.
//! - [`expectation`]: real quadratic forms ⟨ψ|O|ψ⟩ for Hermitian O.
//! - [`Rng`]: ChaCha12 behind a tiny facade with documented, frozen
//!   float/integer derivations so that results are bit-reproducible across
//!   platforms and releases.

use alloc::vec;
use alloc::vec::Vec;

pub use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[allow(unused_imports)]
use num_traits::Float;

/// Errors from the linear-algebra layer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QmathError {
    /// A matrix required to be Hermitian failed the symmetry check.
    #[error("matrix is not Hermitian (max asymmetry {max_asymmetry:.3e})")]
    NotHermitian { max_asymmetry: f64 },
    /// A matrix required to be PSD has an eigenvalue below -tol.
    #[error("matrix has negative eigenvalue {eigenvalue:.3e} (tol {tol:.3e})")]
    NegativeEigenvalue { eigenvalue: f64, tol: f64 },
    /// Operand dimensions are incompatible.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Dense complex matrix in row-major order.
///
/// Entry `(r, c)` lives at `entries[r * cols + c]`. All operations are pure;
/// values are immutable in practice once built.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Creates a matrix from row-major entries.
    ///
    /// Returns `DimensionMismatch` when the entry count is not rows * cols.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self, QmathError> {
        if entries.len() != rows * cols {
            return Err(QmathError::DimensionMismatch {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        Ok(Self { rows, cols, entries })
    }

    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    /// Identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Row count.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Column count.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major entry slice.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Entry at `(r, c)`.
    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.cols + c]
    }

    /// Sets the entry at `(r, c)`.
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.entries[r * self.cols + c] = v;
    }

    /// Matrix product `self * rhs`.
    ///
    /// Returns `DimensionMismatch` when inner dimensions differ.
    pub fn mul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, QmathError> {
        if self.cols != rhs.rows {
            return Err(QmathError::DimensionMismatch { expected: self.cols, got: rhs.rows });
        }
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        // i-k-j loop order keeps the inner traversal contiguous in both
        // rhs and out.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let rhs_row = &rhs.entries[k * rhs.cols..(k + 1) * rhs.cols];
                let out_row = &mut out.entries[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>, QmathError> {
        if self.cols != v.len() {
            return Err(QmathError::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for r in 0..self.rows {
            let row = &self.entries[r * self.cols..(r + 1) * self.cols];
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(v) {
                acc += a * b;
            }
            out[r] = acc;
        }
        Ok(out)
    }

    /// Largest |entry(i,j) - conj(entry(j,i))| over all pairs, 0 for square
    /// Hermitian matrices.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in 0..self.cols {
                let d = (self.get(r, c) - self.get(c, r).conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Hermitian check within `tol` (square shape required).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.rows == self.cols && self.max_asymmetry() <= tol
    }

    /// Frobenius norm of `self - rhs`; infinity when shapes differ.
    pub fn frobenius_distance(&self, rhs: &ComplexMatrix) -> f64 {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return f64::INFINITY;
        }
        let mut sum = 0.0;
        for (a, b) in self.entries.iter().zip(&rhs.entries) {
            sum += (a - b).norm_sqr();
        }
        sum.sqrt()
    }

    /// Adds `scale * |v⟩⟨v|` in place; used to accumulate density matrices.
    ///
    /// Returns `DimensionMismatch` when `v` does not match the dimension.
    pub fn add_scaled_outer(&mut self, v: &[Complex64], scale: f64) -> Result<(), QmathError> {
        if self.rows != v.len() || self.cols != v.len() {
            return Err(QmathError::DimensionMismatch { expected: self.rows, got: v.len() });
        }
        for r in 0..self.rows {
            let vr = v[r] * scale;
            let row = &mut self.entries[r * self.cols..(r + 1) * self.cols];
            for (o, &vc) in row.iter_mut().zip(v) {
                *o += vr * vc.conj();
            }
        }
        Ok(())
    }
}

/// Normalized amplitude vector of an `m`-qubit register.
///
/// Amplitude `k` multiplies the computational basis state whose bits read
/// qubit 0 first (qubit 0 is the most significant bit of the index).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateVector {
    qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Creates a state from `2^m` amplitudes.
    ///
    /// Returns `DimensionMismatch` when the length is not a power of two.
    /// Normalization (Σ|a|² = 1 within 1e-10) is the caller's contract and
    /// is preserved by every operation in this crate that produces states.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self, QmathError> {
        let n = amplitudes.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(QmathError::DimensionMismatch {
                expected: n.max(1).next_power_of_two(),
                got: n,
            });
        }
        let qubits = n.trailing_zeros() as usize;
        Ok(Self { qubits, amplitudes })
    }

    /// Number of qubits `m`.
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    /// Dimension `2^m`.
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Amplitude slice of length `2^m`.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Mutable amplitude slice; callers must preserve normalization.
    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    /// Σ|amplitude|².
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Inner product ⟨self|rhs⟩ (conjugate-linear in `self`).
    pub fn inner(&self, rhs: &StateVector) -> Result<Complex64, QmathError> {
        if self.dim() != rhs.dim() {
            return Err(QmathError::DimensionMismatch { expected: self.dim(), got: rhs.dim() });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.amplitudes.iter().zip(&rhs.amplitudes) {
            acc += a.conj() * b;
        }
        Ok(acc)
    }
}

/// Kronecker product of two matrices.
///
/// Output entry `(a_r * b.rows + b_r, a_c * b.cols + b_c)` equals
/// `a(a_r, a_c) * b(b_r, b_c)`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ar in 0..a.rows() {
        for ac in 0..a.cols() {
            let scale = a.get(ar, ac);
            if scale == Complex64::new(0.0, 0.0) {
                continue;
            }
            for br in 0..b.rows() {
                for bc in 0..b.cols() {
                    out.set(ar * b.rows() + br, ac * b.cols() + bc, scale * b.get(br, bc));
                }
            }
        }
    }
    out
}

/// Symmetry tolerance for accepting a matrix as Hermitian.
const HERMITIAN_TOL: f64 = 1e-12;

/// Iteration cap per eigenvalue in the QL sweep; far beyond what 256x256
/// well-conditioned Hermitian matrices need.
const MAX_QL_ITERATIONS: usize = 64;

/// Hermitian eigendecomposition.
///
/// Returns eigenvalues in ascending order and the unitary matrix whose
/// columns are the matching eigenvectors, so that
/// `h = V · diag(λ) · V†` within 1e-9 Frobenius for well-scaled inputs.
///
/// Algorithm: complex Householder reduction to Hermitian tridiagonal form, a
/// diagonal phase similarity making the subdiagonal real and nonnegative,
/// then implicit QL with Wilkinson shifts accumulating the rotations.
///
/// Returns `NotHermitian` when `entry(i,j) != conj(entry(j,i))` beyond 1e-12,
/// scaled by the largest entry magnitude.
pub fn herm_eig(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix), QmathError> {
    if h.rows() != h.cols() {
        return Err(QmathError::DimensionMismatch { expected: h.rows(), got: h.cols() });
    }
    let n = h.rows();
    let scale = h
        .entries()
        .iter()
        .map(|e| e.norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let asym = h.max_asymmetry();
    if asym > HERMITIAN_TOL * scale {
        return Err(QmathError::NotHermitian { max_asymmetry: asym });
    }
    if n == 0 {
        return Ok((Vec::new(), ComplexMatrix::zeros(0, 0)));
    }

    let mut a = h.clone();
    let mut q = ComplexMatrix::identity(n);

    // Householder reduction: after step k, column k has a single (complex)
    // subdiagonal entry and a is still Hermitian.
    for k in 0..n.saturating_sub(2) {
        let mut norm_sqr = 0.0;
        for r in k + 1..n {
            norm_sqr += a.get(r, k).norm_sqr();
        }
        let norm = norm_sqr.sqrt();
        if norm <= f64::MIN_POSITIVE {
            continue;
        }
        let x0 = a.get(k + 1, k);
        // alpha = -phase(x0) * ||x|| avoids cancellation in u = x - alpha e0.
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        let mut u = vec![Complex64::new(0.0, 0.0); n];
        for r in k + 1..n {
            u[r] = a.get(r, k);
        }
        u[k + 1] -= alpha;
        let unorm_sqr: f64 = u.iter().map(|c| c.norm_sqr()).sum();
        if unorm_sqr <= f64::MIN_POSITIVE {
            continue;
        }
        let unorm = unorm_sqr.sqrt();
        for c in u.iter_mut() {
            *c /= unorm;
        }
        // a <- P a P with P = I - 2 u u†, exploiting Hermitian symmetry:
        // w = a u; t = u† w; a -= 2 u w† + 2 w u† - 4 t u u† (rank-2 update).
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        for r in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in k + 1..n {
                acc += a.get(r, c) * u[c];
            }
            w[r] = acc;
        }
        let mut t = Complex64::new(0.0, 0.0);
        for r in k + 1..n {
            t += u[r].conj() * w[r];
        }
        for r in 0..n {
            // v = w - t u keeps the update expressible as a symmetric rank-2
            // correction a -= 2 u v† + 2 v u†.
            w[r] -= t * u[r];
        }
        for r in 0..n {
            for c in 0..n {
                let delta = u[r] * w[c].conj() + w[r] * u[c].conj();
                let v = a.get(r, c) - delta * 2.0;
                a.set(r, c, v);
            }
        }
        // q <- q P accumulates the similarity.
        for r in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in k + 1..n {
                acc += q.get(r, c) * u[c];
            }
            for c in k + 1..n {
                let v = q.get(r, c) - acc * u[c].conj() * 2.0;
                q.set(r, c, v);
            }
        }
    }

    // Diagonal phase similarity: make every subdiagonal entry real >= 0.
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    let mut ph = vec![Complex64::new(1.0, 0.0); n];
    d[0] = a.get(0, 0).re;
    for i in 1..n {
        let sub = a.get(i, i - 1);
        let mag = sub.norm();
        // d_i = phase(T_{i,i-1}) * d_{i-1} turns conj(d_i) T_{i,i-1} d_{i-1}
        // into |T_{i,i-1}|.
        ph[i] = if mag > 0.0 { (sub / mag) * ph[i - 1] } else { ph[i - 1] };
        e[i - 1] = mag;
        d[i] = a.get(i, i).re;
    }
    for r in 0..n {
        for c in 0..n {
            let v = q.get(r, c) * ph[c];
            q.set(r, c, v);
        }
    }

    // Implicit QL with Wilkinson shifts on the real tridiagonal (d, e);
    // plane rotations are real, applied to the complex eigenvector columns.
    let eps = f64::EPSILON;
    // Global scale floor for the deflation test: without it, exactly-zero
    // diagonal runs (rank-deficient inputs) never deflate their tiny
    // residual couplings. Dropping e ≤ eps·anorm shifts eigenvalues by at
    // most eps·anorm, well inside the advertised accuracy.
    let anorm = (0..n)
        .map(|i| d[i].abs() + e[i].abs())
        .fold(0.0f64, f64::max);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * (dd + anorm) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            // Convergence is quadratic; hitting the cap indicates NaN input.
            debug_assert!(iter <= MAX_QL_ITERATIONS, "QL sweep failed to converge");
            if iter > MAX_QL_ITERATIONS {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let qi = q.get(k, i);
                    let qi1 = q.get(k, i + 1);
                    q.set(k, i + 1, qi * s + qi1 * c);
                    q.set(k, i, qi * c - qi1 * s);
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // Ascending eigenvalue order, columns permuted to match.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(core::cmp::Ordering::Equal));
    let vals: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vecs = ComplexMatrix::zeros(n, n);
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..n {
            vecs.set(r, new_c, q.get(r, old_c));
        }
    }
    Ok((vals, vecs))
}

/// Inverse square root on the support of a Hermitian PSD matrix.
///
/// Eigenvalues above `tol` map to λ^{-1/2}; eigenvalues in `[-tol, tol]` are
/// treated as zero (outside the support). A `tol` that is not finite and
/// positive is replaced by the scale-free default `1e-10 * max|λ|`.
///
/// Returns `NegativeEigenvalue` when any eigenvalue is below `-tol`, and
/// propagates `NotHermitian` from the decomposition.
pub fn pinv_sqrt(h: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix, QmathError> {
    let (vals, vecs) = herm_eig(h)?;
    let max_abs = vals.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    let tol = if tol.is_finite() && tol > 0.0 { tol } else { 1e-10 * max_abs };
    if let Some(&bad) = vals.iter().find(|&&v| v < -tol) {
        return Err(QmathError::NegativeEigenvalue { eigenvalue: bad, tol });
    }
    let n = vals.len();
    let mut out = ComplexMatrix::zeros(n, n);
    for (j, &lambda) in vals.iter().enumerate() {
        if lambda <= tol {
            continue;
        }
        let f = 1.0 / lambda.sqrt();
        for r in 0..n {
            let vr = vecs.get(r, j) * f;
            for c in 0..n {
                let add = vr * vecs.get(c, j).conj();
                let v = out.get(r, c) + add;
                out.set(r, c, v);
            }
        }
    }
    Ok(out)
}

/// Real expectation value ⟨ψ|obs|ψ⟩ of a Hermitian observable.
///
/// The imaginary residual of the quadratic form is checked to be below
/// 1e-10 (scaled) in debug builds and discarded.
///
/// Returns `DimensionMismatch` when the observable does not match the state
/// dimension.
pub fn expectation(state: &StateVector, obs: &ComplexMatrix) -> Result<f64, QmathError> {
    if obs.rows() != state.dim() || obs.cols() != state.dim() {
        return Err(QmathError::DimensionMismatch { expected: state.dim(), got: obs.rows() });
    }
    let ov = obs.mul_vec(state.amplitudes())?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in state.amplitudes().iter().zip(&ov) {
        acc += a.conj() * b;
    }
    debug_assert!(
        acc.im.abs() <= 1e-10 * acc.re.abs().max(1.0),
        "imaginary residual {} too large; observable is not Hermitian",
        acc.im
    );
    Ok(acc.re)
}

/// SplitMix64 step, the key-expansion primitive for [`Rng`].
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic random generator: ChaCha12 keyed by SplitMix64 expansion of
/// a 64-bit seed.
///
/// Reproducibility contract (frozen, documented):
///
/// - The 256-bit ChaCha key is the little-endian concatenation of four
///   SplitMix64 outputs seeded by the u64 seed.
/// - Independent streams for parallel work come from [`Rng::stream`], which
///   reuses the key and sets the ChaCha stream id to
///   `(purpose << 32) | index`; streams never overlap.
/// - `uniform()` is `(next_u64() >> 11) * 2^-53`, uniform on [0, 1).
/// - `below(n)` uses widening-multiply rejection, unbiased for any `n > 0`.
///
/// Identical seeds therefore reproduce identical draw sequences on every
/// platform, independent of any external library's distribution internals.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha12Rng,
    seed: u64,
}

impl Rng {
    /// Creates the root generator for `seed` (stream 0).
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut sm).to_le_bytes());
        }
        Self { inner: ChaCha12Rng::from_seed(key), seed }
    }

    /// The seed this generator (and all its streams) was built from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives the independent stream `(purpose, index)` of the same seed.
    ///
    /// Streams are stateless to derive: any `(seed, purpose, index)` triple
    /// names the same sequence regardless of what has been drawn elsewhere.
    pub fn stream(&self, purpose: u32, index: u32) -> Self {
        let mut rng = Rng::new(self.seed);
        rng.inner.set_stream(((purpose as u64) << 32) | index as u64);
        rng
    }

    /// Next raw 64-bit draw.
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform f64 on [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }

    /// Uniform f64 on [lo, hi).
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [0, n), unbiased; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) is undefined");
        // Lemire's widening-multiply method with rejection.
        let mut x = self.next_u64();
        let mut m = (x as u128) * (n as u128);
        let mut lo = m as u64;
        if lo < n {
            let threshold = n.wrapping_neg() % n;
            while lo < threshold {
                x = self.next_u64();
                m = (x as u128) * (n as u128);
                lo = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}
