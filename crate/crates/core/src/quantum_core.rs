//! Dense complex matrices and the Born rule for one and two qubits.
//!
//! Two-qubit operators use the basis ordering `|00⟩, |01⟩, |10⟩, |11⟩` with
//! particle 1 as the left tensor factor, so `kron(E, F)` acts as `E` on
//! particle 1 and `F` on particle 2.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance for algebraic identities (Hermiticity, trace, completeness).
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Tolerance for positivity checks and probability clamping.
pub const PROB_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square matrix of complex numbers, stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from rows, rejecting ragged or non-finite input.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        let len: usize = rows.iter().map(Vec::len).sum();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::NotSquare { rows: dim, len });
        }
        let data: Vec<Complex64> = rows.into_iter().flatten().collect();
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ComplexMatrix { dim, data })
    }

    /// Builds a matrix from real rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Outer product `|v⟩⟨v|`.
    pub fn outer(v: &[Complex64]) -> Self {
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_dim(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_dim(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scale(&self, factor: f64) -> ComplexMatrix {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Largest entrywise deviation from the conjugate transpose.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Eigenvalues of a Hermitian matrix in ascending order.
    ///
    /// 2×2 matrices use the trace/determinant closed form; larger ones go
    /// through cyclic Jacobi on the real symmetric embedding
    /// `[[Re H, -Im H], [Im H, Re H]]`, whose spectrum is that of `H` with
    /// every eigenvalue doubled.
    pub fn hermitian_eigenvalues(&self, tol: f64) -> Result<Vec<f64>> {
        let deviation = self.hermiticity_error();
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        if self.dim == 1 {
            return Ok(vec![self.data[0].re]);
        }
        if self.dim == 2 {
            let a = self[(0, 0)].re;
            let d = self[(1, 1)].re;
            let off = (self[(0, 1)] + self[(1, 0)].conj()) * 0.5;
            let half_gap = (0.25 * (a - d) * (a - d) + off.norm_sqr()).sqrt();
            let mid = 0.5 * (a + d);
            return Ok(vec![mid - half_gap, mid + half_gap]);
        }

        let n = self.dim;
        let m = 2 * n;
        let mut s = vec![0.0f64; m * m];
        for i in 0..n {
            for j in 0..n {
                // symmetrize so tiny anti-Hermitian noise cannot leak in
                let h = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                s[i * m + j] = h.re;
                s[(i + n) * m + (j + n)] = h.re;
                s[(i + n) * m + j] = h.im;
                s[i * m + (j + n)] = -h.im;
            }
        }
        jacobi_eigenvalues(&mut s, m);
        let mut all: Vec<f64> = (0..m).map(|i| s[i * m + i]).collect();
        all.sort_by(f64::total_cmp);
        Ok(all.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
    }

    fn check_same_dim(&self, other: &ComplexMatrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    fn zip_with(
        &self,
        other: &ComplexMatrix,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> ComplexMatrix {
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

fn jacobi_eigenvalues(s: &mut [f64], m: usize) {
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut scale = 0.0;
        for i in 0..m {
            for j in 0..m {
                let v = s[i * m + j] * s[i * m + j];
                if i == j {
                    scale += v;
                } else {
                    off += v;
                }
            }
        }
        if off <= 1e-30 * scale.max(1e-300) {
            return;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = s[p * m + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = s[p * m + p];
                let aqq = s[q * m + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..m {
                    let akp = s[k * m + p];
                    let akq = s[k * m + q];
                    s[k * m + p] = c * akp - sn * akq;
                    s[k * m + q] = sn * akp + c * akq;
                }
                for k in 0..m {
                    let apk = s[p * m + k];
                    let aqk = s[q * m + k];
                    s[p * m + k] = c * apk - sn * aqk;
                    s[q * m + k] = sn * apk + c * aqk;
                }
            }
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Pauli matrices `(σx, σy, σz)`.
pub fn pauli() -> [ComplexMatrix; 3] {
    let i = Complex64::new(0.0, 1.0);
    let sx = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
    let sy = ComplexMatrix::from_rows(vec![vec![ZERO, -i], vec![i, ZERO]]).unwrap();
    let sz = ComplexMatrix::diag(&[1.0, -1.0]);
    [sx, sy, sz]
}

/// Kronecker product; block `(i, j)` of the result is `a[i][j] · b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim, b.dim);
    let n = na * nb;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..na {
        for j in 0..na {
            let aij = a[(i, j)];
            for k in 0..nb {
                for l in 0..nb {
                    out[(i * nb + k, j * nb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Conjugate transpose.
pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.dim;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out[(j, i)] = a[(i, j)].conj();
        }
    }
    out
}

pub fn trace(a: &ComplexMatrix) -> Complex64 {
    (0..a.dim).map(|i| a[(i, i)]).sum()
}

/// True iff every eigenvalue of the Hermitian matrix `a` is at least `-tol`.
///
/// Fails with [`Error::NotHermitian`] when `a` deviates from its conjugate
/// transpose by more than `tol`.
pub fn is_psd(a: &ComplexMatrix, tol: f64) -> Result<bool> {
    let eigs = a.hermitian_eigenvalues(tol)?;
    Ok(eigs.iter().all(|&e| e >= -tol))
}

/// A two-qubit density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.dim() != 4 {
            return Err(Error::InvalidState(format!(
                "expected a 4x4 matrix, got {}x{}",
                matrix.dim(),
                matrix.dim()
            )));
        }
        let deviation = matrix.hermiticity_error();
        if deviation > ALGEBRA_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {deviation:e})"
            )));
        }
        let tr = trace(&matrix);
        if (tr - ONE).norm() > ALGEBRA_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = matrix.hermitian_eigenvalues(ALGEBRA_TOL)?[0];
        if min < -PROB_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        Ok(DensityOperator { matrix })
    }

    /// Pure state `|ψ⟩⟨ψ|` from an (unnormalized) amplitude vector.
    pub fn from_pure(amplitudes: &[Complex64; 4]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite state vector".into()));
        }
        let v: Vec<Complex64> = amplitudes.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&v))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// The singlet `(|01⟩ − |10⟩)/√2`.
pub fn singlet() -> DensityOperator {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi = [ZERO, Complex64::new(h, 0.0), Complex64::new(-h, 0.0), ZERO];
    DensityOperator::from_pure(&psi).expect("singlet is a valid state")
}

/// `I4 / 4`.
pub fn maximally_mixed() -> DensityOperator {
    DensityOperator::new(ComplexMatrix::identity(4).scale(0.25))
        .expect("maximally mixed state is valid")
}

/// `|00⟩⟨00|`.
pub fn product_00() -> DensityOperator {
    DensityOperator::new(ComplexMatrix::diag(&[1.0, 0.0, 0.0, 0.0]))
        .expect("|00> is a valid state")
}

/// Random mixed two-qubit state `G G† / tr(G G†)` with `G` having
/// independent entries uniform in `[-1, 1] + i[-1, 1]`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R) -> DensityOperator {
    loop {
        let mut g = ComplexMatrix::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                g[(i, j)] = Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
            }
        }
        let gg = g.matmul(&dagger(&g)).expect("same dimension");
        let tr = trace(&gg).re;
        if tr < 1e-6 {
            continue;
        }
        let mut rho = gg.scale(1.0 / tr);
        // scrub rounding so the Hermiticity check sees an exact Hermitian matrix
        for i in 0..4 {
            rho[(i, i)].im = 0.0;
            for j in (i + 1)..4 {
                rho[(j, i)] = rho[(i, j)].conj();
            }
        }
        if let Ok(state) = DensityOperator::new(rho) {
            return state;
        }
    }
}

/// `Re tr(ρ E)`, clamped to `[0, 1]` when within [`PROB_TOL`] of the boundary.
///
/// `effect` must be a 4×4 positive operator bounded by the identity.
pub fn born_probability(rho: &DensityOperator, effect: &ComplexMatrix) -> Result<f64> {
    if effect.dim() != 4 {
        return Err(Error::DimensionMismatch {
            left: 4,
            right: effect.dim(),
        });
    }
    let eigs = effect
        .hermitian_eigenvalues(PROB_TOL)
        .map_err(|e| Error::InvalidEffect(e.to_string()))?;
    let (lo, hi) = (eigs[0], eigs[eigs.len() - 1]);
    if lo < -PROB_TOL || hi > 1.0 + PROB_TOL {
        return Err(Error::InvalidEffect(format!(
            "eigenvalues must lie in [0, 1], got [{lo:e}, {hi:e}]"
        )));
    }
    born_value(rho, effect)
}

/// Born rule without the effect validation; used on hot paths where the
/// effect is already known to be a valid product of POVM elements.
pub(crate) fn born_value(rho: &DensityOperator, effect: &ComplexMatrix) -> Result<f64> {
    let value = trace_of_product(rho.matrix(), effect);
    if value.im.abs() > PROB_TOL {
        return Err(Error::ComplexProbability { imag: value.im });
    }
    clamp_probability(value.re, PROB_TOL)
}

pub(crate) fn clamp_probability(p: f64, tol: f64) -> Result<f64> {
    if !p.is_finite() || p < -tol || p > 1.0 + tol {
        return Err(Error::ProbabilityOutOfRange { value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}

/// `tr(a · b)` without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.dim;
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}
