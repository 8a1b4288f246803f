//! Tolerance-controlled subspace arithmetic.
//!
//! Every geometric check in this crate reduces to questions about linear
//! subspaces of a tangent space: kernels of momentum differentials, orbit
//! tangents, k-orthogonal complements, quotient representatives. This module
//! fixes one rank policy for all of them: rank decisions are made on singular
//! values with a relative threshold, and subspace equality is decided by
//! principal angles.
//!
//! The zero subspace (`dim == 0`) is a first-class value so that set
//! identities hold without special cases.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::Real;

/// Numerical thresholds for rank and equality decisions.
///
/// `rank_rel` is relative: singular values below `rank_rel * σ_max` are
/// treated as zero. `eq_abs` bounds the sine of the largest principal angle
/// in containment and equality tests.
#[derive(Clone, Copy, Debug)]
pub struct Tolerance<T: Real> {
    pub rank_rel: T,
    pub eq_abs: T,
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Self {
            rank_rel: T::of(1e-9),
            eq_abs: T::of(1e-9),
        }
    }
}

impl<T: Real> Tolerance<T> {
    pub fn new(rank_rel: T, eq_abs: T) -> Result<Self> {
        if rank_rel <= T::zero() || eq_abs <= T::zero() {
            return Err(Error::Precondition(
                "tolerances must be strictly positive".into(),
            ));
        }
        Ok(Self { rank_rel, eq_abs })
    }
}

/// An `r`-dimensional linear subspace of `R^n`, stored as an `n × r` matrix
/// with orthonormal columns. `r == 0` is the zero subspace.
#[derive(Clone, Debug)]
pub struct Subspace<T: Real> {
    basis: DMatrix<T>,
}

impl<T: Real> Subspace<T> {
    /// The zero subspace of `R^n`.
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    /// All of `R^n`.
    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// The span of a single vector (zero subspace if the vector vanishes).
    pub fn line(v: &DVector<T>, tol: &Tolerance<T>) -> Result<Self> {
        Self::span(&DMatrix::from_column_slice(v.len(), 1, v.as_slice()), tol)
    }

    /// Column span of an arbitrary `n × m` matrix.
    ///
    /// Singular values below `rank_rel * σ_max` are treated as zero; the
    /// returned basis consists of the corresponding left singular vectors, so
    /// the result is deterministic for a fixed input.
    pub fn span(columns: &DMatrix<T>, tol: &Tolerance<T>) -> Result<Self> {
        Self::span_scaled(columns, T::zero(), tol)
    }

    /// Like [`Subspace::span`], but with an external reference scale: the
    /// rank threshold becomes `rank_rel * max(σ_max, scale)`. Use this when
    /// the input may be numerically zero relative to a known natural scale
    /// (e.g. residuals of projections of unit vectors), where a purely
    /// relative threshold would keep noise directions.
    ///
    /// Rank revelation is done by column-pivoted QR: the pivoted diagonal of
    /// `R` is non-increasing in magnitude, so the rank is the longest prefix
    /// above the threshold and the basis is the corresponding `Q` columns.
    pub fn span_scaled(columns: &DMatrix<T>, scale: T, tol: &Tolerance<T>) -> Result<Self> {
        if columns.nrows() == 0 {
            return Err(Error::Precondition("ambient dimension must be >= 1".into()));
        }
        if columns.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if columns.ncols() == 0 {
            return Ok(Self::zero(columns.nrows()));
        }
        let qr = columns.clone().col_piv_qr();
        let r = qr.r();
        let diag: Vec<T> = (0..r.nrows().min(r.ncols()))
            .map(|i| r[(i, i)].abs())
            .collect();
        let d_max = diag.iter().copied().fold(T::zero(), |a, b| a.max(b));
        if d_max == T::zero() {
            return Ok(Self::zero(columns.nrows()));
        }
        let threshold = tol.rank_rel * d_max.max(scale);
        let rank = diag.iter().take_while(|&&d| d > threshold).count();
        let q = qr.q();
        Ok(Self {
            basis: q.columns(0, rank).into_owned(),
        })
    }

    /// Builds a subspace from a matrix whose columns are already orthonormal.
    pub fn from_orthonormal(basis: DMatrix<T>) -> Result<Self> {
        if basis.nrows() == 0 {
            return Err(Error::Precondition("ambient dimension must be >= 1".into()));
        }
        if basis.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let r = basis.ncols();
        let gram = basis.transpose() * &basis;
        let deviation = (&gram - DMatrix::<T>::identity(r, r)).abs().max();
        if deviation > T::of(1e-12) {
            return Err(Error::Precondition(format!(
                "basis columns are not orthonormal (deviation {:.3e})",
                deviation.as_f64()
            )));
        }
        Ok(Self { basis })
    }

    /// Null space `{v : Av = 0}` of an `m × n` matrix.
    pub fn kernel(a: &DMatrix<T>, tol: &Tolerance<T>) -> Result<Self> {
        Self::kernel_scaled(a, T::zero(), tol)
    }

    /// Like [`Subspace::kernel`], but with an external reference scale (see
    /// [`Subspace::span_scaled`]): a matrix that is numerically zero relative
    /// to `scale` has full kernel.
    ///
    /// The kernel is the orthogonal complement of the row space. The row
    /// space carries the rank decision; the complement is then read off the
    /// residual projector `I - BBᵀ`, whose singular values are exactly 0 and
    /// 1, so that second rank decision is unconditionally well separated.
    pub fn kernel_scaled(a: &DMatrix<T>, scale: T, tol: &Tolerance<T>) -> Result<Self> {
        if a.ncols() == 0 {
            return Err(Error::Precondition("ambient dimension must be >= 1".into()));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let n = a.ncols();
        if a.nrows() == 0 {
            return Ok(Self::full(n));
        }
        let rowspace = Self::span_scaled(&a.transpose(), scale, tol)?;
        if rowspace.is_zero() {
            return Ok(Self::full(n));
        }
        let projector =
            DMatrix::identity(n, n) - rowspace.basis() * rowspace.basis().transpose();
        let kernel = Self::span_scaled(&projector, T::one(), tol)?;
        debug_assert_eq!(kernel.dim(), n - rowspace.dim());
        Ok(kernel)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    /// Orthonormal basis matrix (`ambient_dim × dim`).
    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    /// Orthogonal projection of `v` onto this subspace.
    pub fn project(&self, v: &DVector<T>) -> DVector<T> {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Coordinates of `v` in the subspace basis (orthogonal projection
    /// expressed in `R^dim`).
    pub fn coords(&self, v: &DVector<T>) -> DVector<T> {
        self.basis.transpose() * v
    }

    fn check_ambient(&self, other: &Self) -> Result<()> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::AmbientMismatch {
                left: self.ambient_dim(),
                right: other.ambient_dim(),
            });
        }
        Ok(())
    }

    /// `U + V`: span of the union of the bases.
    pub fn sum(&self, other: &Self, tol: &Tolerance<T>) -> Result<Self> {
        self.check_ambient(other)?;
        let mut cols = DMatrix::zeros(self.ambient_dim(), self.dim() + other.dim());
        cols.view_mut((0, 0), (self.ambient_dim(), self.dim()))
            .copy_from(&self.basis);
        cols.view_mut((0, self.dim()), (self.ambient_dim(), other.dim()))
            .copy_from(&other.basis);
        Self::span(&cols, tol)
    }

    /// `U ∩ V`.
    ///
    /// A vector lies in the intersection iff it can be written as `U a = V b`;
    /// such pairs `(a, -b)` form the kernel of `[U | V]`, so one rank decision
    /// on that stacked matrix settles the intersection.
    pub fn intersect(&self, other: &Self, tol: &Tolerance<T>) -> Result<Self> {
        self.check_ambient(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(self.ambient_dim()));
        }
        let n = self.ambient_dim();
        let mut stacked = DMatrix::zeros(n, self.dim() + other.dim());
        stacked
            .view_mut((0, 0), (n, self.dim()))
            .copy_from(&self.basis);
        stacked
            .view_mut((0, self.dim()), (n, other.dim()))
            .copy_from(&other.basis);
        let pair_kernel = Self::kernel(&stacked, tol)?;
        if pair_kernel.is_zero() {
            return Ok(Self::zero(n));
        }
        // Map each kernel pair back through U; the image spans U ∩ V.
        let a_part = pair_kernel.basis.rows(0, self.dim()).into_owned();
        Self::span(&(&self.basis * a_part), tol)
    }

    /// Sine of the largest principal angle of `other` measured against this
    /// subspace; zero iff `other ⊆ self` exactly.
    pub fn containment_residual(&self, other: &Self) -> T {
        if other.is_zero() {
            return T::zero();
        }
        if self.is_zero() {
            return T::one();
        }
        let residual = &other.basis - &self.basis * (self.basis.transpose() * &other.basis);
        // σ_max via the (small) Gram matrix; its symmetric eigenproblem is
        // better behaved than a bidiagonal SVD on exactly rank-deficient input.
        let gram = residual.transpose() * residual;
        let lambda_max = gram
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(T::zero(), |a, b| a.max(b));
        lambda_max.max(T::zero()).sqrt()
    }

    /// `other ⊆ self` up to `eq_abs`.
    pub fn contains(&self, other: &Self, tol: &Tolerance<T>) -> Result<bool> {
        self.check_ambient(other)?;
        Ok(self.containment_residual(other) <= tol.eq_abs)
    }

    /// Whether `v` lies in the subspace up to `eq_abs` (relative to `‖v‖`).
    pub fn contains_vector(&self, v: &DVector<T>, tol: &Tolerance<T>) -> bool {
        let norm = v.norm();
        if norm == T::zero() {
            return true;
        }
        (v - self.project(v)).norm() <= tol.eq_abs * norm
    }

    /// Symmetric equality residual: the larger of the two containment
    /// residuals (sines of principal angles).
    pub fn equality_residual(&self, other: &Self) -> T {
        self.containment_residual(other)
            .max(other.containment_residual(self))
    }

    /// Subspace equality: equal dimensions and mutual containment.
    pub fn equal_to(&self, other: &Self, tol: &Tolerance<T>) -> Result<bool> {
        self.check_ambient(other)?;
        Ok(self.dim() == other.dim() && self.equality_residual(other) <= tol.eq_abs)
    }

    /// Orthogonal complement of `self` inside `u`: the unique `Q` with
    /// `Q ⟂ self`, `Q ⊆ u` and `Q ⊕ self = u`. Requires `self ⊆ u`.
    pub fn complement_in(&self, u: &Self, tol: &Tolerance<T>) -> Result<Self> {
        self.check_ambient(u)?;
        if !u.contains(self, tol)? {
            return Err(Error::Precondition(
                "complement_in requires the first subspace to lie inside the second".into(),
            ));
        }
        if self.is_zero() {
            return Ok(u.clone());
        }
        let projected = &u.basis - &self.basis * (self.basis.transpose() * &u.basis);
        // Residuals of unit columns: rank-decide against scale 1, not against
        // whatever noise survives when self == u.
        let q = Self::span_scaled(&projected, T::one(), tol)?;
        if q.dim() != u.dim() - self.dim() {
            return Err(Error::Precondition(format!(
                "complement dimension {} does not match {} - {}",
                q.dim(),
                u.dim(),
                self.dim()
            )));
        }
        Ok(q)
    }

    /// Orthogonal complement of `self` in the ambient space.
    pub fn orthogonal_complement(&self, tol: &Tolerance<T>) -> Result<Self> {
        self.complement_in(&Self::full(self.ambient_dim()), tol)
    }
}

/// Minimum-norm least-squares solution of `A x = b` for a possibly
/// rank-deficient `A`.
///
/// The system is first restricted to the row space of `A` (one rank decision
/// via [`Subspace::span_scaled`]), where it has full column rank; the reduced
/// problem is solved by plain QR. The result lies in the row space, hence is
/// orthogonal to `ker A`, which characterizes the minimum-norm solution. The
/// caller decides what residual `‖Ax - b‖` is acceptable.
pub fn min_norm_lstsq<T: Real>(
    a: &DMatrix<T>,
    b: &DVector<T>,
    tol: &Tolerance<T>,
) -> Result<DVector<T>> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let rowspace = Subspace::span_scaled(&a.transpose(), T::zero(), tol)?;
    if rowspace.is_zero() {
        return Ok(DVector::zeros(a.ncols()));
    }
    let reduced = a * rowspace.basis();
    let qr = reduced.qr();
    let rhs = qr.q().transpose() * b;
    let y = qr
        .r()
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::Precondition("rank-reduced system is singular".into()))?;
    Ok(rowspace.basis() * y)
}
