//! Complex dense linear algebra primitives shared by the rest of the crate.
//!
//! Everything here operates on dynamically sized matrices of `Complex<f64>`.
//! The workhorses are the Hermitian eigendecomposition and the PSD inverse
//! square root built on it, which later modules use to whiten interference
//! plus noise, plus a null-space projector for shaping artificial noise and
//! a circularly symmetric complex Gaussian sampler for channels and noise.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use thiserror::Error;

/// Dense complex matrix with dynamic dimensions.
pub type CMatrix = DMatrix<Complex<f64>>;
/// Dense complex column vector with dynamic dimension.
pub type CVector = DVector<Complex<f64>>;

/// Relative tolerance for accepting a matrix as Hermitian.
const HERMITIAN_REL_TOL: f64 = 1e-12;
/// Relative tolerance below which a negative eigenvalue means "not PSD"
/// rather than rounding noise.
const PSD_REL_TOL: f64 = 1e-10;
/// Relative singular-value cutoff for declaring a channel matrix
/// rank-deficient.
const RANK_REL_TOL: f64 = 1e-10;
/// Relative eigenvalue floor applied inside [`inv_sqrt_psd`] on top of the
/// caller's absolute floor, guarding against division blow-up when the
/// smallest eigenvalue underflows.
const FLOOR_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max|A - A^H| = {deviation:.3e} exceeds tolerance")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },
    #[error("matrix is rank deficient: singular value ratio {ratio:.3e}")]
    RankDeficient { ratio: f64 },
    #[error("a {rows}x{cols} matrix with rows >= cols has no null space to project onto")]
    NoNullSpace { rows: usize, cols: usize },
    #[error("complex Gaussian variance must be finite and non-negative, got {variance}")]
    NegativeVariance { variance: f64 },
}

/// Eigendecomposition of a Hermitian matrix, `A = U diag(values) U^H`.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Real eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors, ordered to match
    /// `values`.
    pub vectors: CMatrix,
}

fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn hermitian_deviation(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut dev: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            dev = dev.max((a[(r, c)] - a[(c, r)].conj()).norm());
        }
    }
    dev
}

/// Eigendecomposition for Hermitian matrices with eigenvalues sorted
/// ascending.
///
/// The input is checked against `max|A - A^H| <= 1e-12 * max|A|` and then
/// explicitly symmetrized as `(A + A^H)/2` before factorization, so tiny
/// asymmetries from accumulated rounding cannot leak into the eigenvectors.
///
/// # Errors
///
/// [`NumericsError::NotSquare`] or [`NumericsError::NotHermitian`] when the
/// input fails the preconditions.
pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEig, NumericsError> {
    if a.nrows() != a.ncols() {
        return Err(NumericsError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let deviation = hermitian_deviation(a);
    if deviation > HERMITIAN_REL_TOL * max_abs(a) {
        return Err(NumericsError::NotHermitian { deviation });
    }
    let sym = (a + a.adjoint()).unscale(2.0);
    let eig = SymmetricEigen::new(sym);

    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("eigenvalues of a Hermitian matrix are finite reals")
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEig { values, vectors })
}

/// Inverse symmetric square root of a positive semidefinite Hermitian
/// matrix: returns `B` with `B A B = I`.
///
/// Eigenvalues are floored at `max(eps, 1e-12 * max(lambda))` before taking
/// `lambda^{-1/2}`, so a caller-supplied `eps` bounds the amplification a
/// nearly singular input can produce. With the floor inactive the result is
/// the exact matrix power `A^{-1/2}`; the symmetric root (rather than a
/// triangular factor) matters because callers apply the same `B` to signal
/// and noise alike.
///
/// # Errors
///
/// Propagates the Hermitian checks of [`hermitian_eig`], and returns
/// [`NumericsError::NotPsd`] when an eigenvalue is more negative than
/// rounding can explain or when the spectrum has no positive part to invert.
pub fn inv_sqrt_psd(a: &CMatrix, eps: f64) -> Result<CMatrix, NumericsError> {
    let eig = hermitian_eig(a)?;
    let lambda_min = *eig.values.first().expect("matrix dimensions are >= 1");
    let lambda_max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    if lambda_min < -PSD_REL_TOL * lambda_max {
        return Err(NumericsError::NotPsd {
            min_eigenvalue: lambda_min,
        });
    }
    let floor = eps.max(FLOOR_REL_TOL * lambda_max);
    if floor <= 0.0 {
        return Err(NumericsError::NotPsd {
            min_eigenvalue: lambda_min,
        });
    }
    let mut scaled = eig.vectors.clone();
    for (k, &lambda) in eig.values.iter().enumerate() {
        scaled.column_mut(k).scale_mut(1.0 / lambda.max(floor).sqrt());
    }
    let b = scaled * eig.vectors.adjoint();
    let bh = b.adjoint();
    Ok((b + bh).unscale(2.0))
}

/// Orthogonal projector onto the null space of a wide full-row-rank matrix,
/// `P = I - H^H (H H^H)^{-1} H`.
///
/// Computed through the eigendecomposition of the Gram matrix `H H^H`,
/// whose eigenvalues are the squared singular values of `H`; their ratio
/// doubles as the rank check.
///
/// # Errors
///
/// [`NumericsError::NoNullSpace`] when `H` has at least as many rows as
/// columns, [`NumericsError::RankDeficient`] when the singular value ratio
/// falls below `1e-10`.
pub fn null_space_projector(h: &CMatrix) -> Result<CMatrix, NumericsError> {
    let (rows, cols) = h.shape();
    if rows >= cols {
        return Err(NumericsError::NoNullSpace { rows, cols });
    }
    let gram = h * h.adjoint();
    let eig = hermitian_eig(&gram).expect("Gram matrix H H^H is Hermitian by construction");
    let lambda_min = *eig.values.first().expect("Gram matrix is at least 1x1");
    let lambda_max = *eig.values.last().expect("Gram matrix is at least 1x1");
    let ratio = if lambda_max > 0.0 {
        (lambda_min.max(0.0) / lambda_max).sqrt()
    } else {
        0.0
    };
    if ratio < RANK_REL_TOL {
        return Err(NumericsError::RankDeficient { ratio });
    }
    let mut scaled = eig.vectors.clone();
    for (k, &lambda) in eig.values.iter().enumerate() {
        scaled.column_mut(k).scale_mut(1.0 / lambda);
    }
    let gram_inv = scaled * eig.vectors.adjoint();
    let p = CMatrix::identity(cols, cols) - h.adjoint() * gram_inv * h;
    let ph = p.adjoint();
    Ok((p + ph).unscale(2.0))
}

/// Fills a slice with i.i.d. circularly symmetric complex Gaussian entries
/// of the given total variance.
///
/// For `z ~ CN(0, v)` the squared magnitude is exponential with mean `v`
/// and the phase is uniform, so each entry is drawn in polar form as
/// `sqrt(-v ln U1) * exp(i 2 pi U2)`; this is the Box-Muller transform with
/// both outputs kept as the real and imaginary parts.
pub(crate) fn fill_complex_gaussian<R: Rng + ?Sized>(
    rng: &mut R,
    out: &mut [Complex<f64>],
    variance: f64,
) {
    for z in out {
        let u1 = 1.0 - rng.gen::<f64>();
        let u2 = rng.gen::<f64>();
        let radius = (-variance * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        *z = Complex::new(radius * c, radius * s);
    }
}

/// Draws a vector with i.i.d. `CN(0, variance)` entries, the real and
/// imaginary parts each carrying `variance/2`.
///
/// # Errors
///
/// [`NumericsError::NegativeVariance`] when `variance` is negative or not
/// finite.
pub fn sample_complex_gaussian<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    variance: f64,
) -> Result<CVector, NumericsError> {
    if !variance.is_finite() || variance < 0.0 {
        return Err(NumericsError::NegativeVariance { variance });
    }
    assert!(dim >= 1, "complex Gaussian vector needs at least one entry");
    let mut out = CVector::zeros(dim);
    fill_complex_gaussian(rng, out.as_mut_slice(), variance);
    Ok(out)
}
