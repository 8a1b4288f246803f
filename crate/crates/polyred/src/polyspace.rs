//! Polysymplectic vector spaces.
//!
//! A family of `k` skew bilinear forms `(ω¹, …, ωᵏ)` on `R^n` is
//! polysymplectic when the kernels intersect trivially,
//! `∩_A ker ω^A = {0}`. Unlike the symplectic case (`k = 1`), the
//! k-orthogonal complement is not an involution: `W ⊆ (W^{⊥,k})^{⊥,k}`
//! always, but equality can fail, and that failure is exactly what breaks
//! the naive reduction argument.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::subspace::{Subspace, Tolerance};
use crate::Real;

/// Absolute skewness slack allowed on construction, relative to the largest
/// entry of the form.
const SKEW_TOL: f64 = 1e-12;

/// `k` skew bilinear forms on one ambient space, `ω^A(u, v) = uᵀ Ω^A v`.
///
/// The family is *not* required to be polysymplectic; degenerate families are
/// legitimate values (they appear as reduced structures when the reduction
/// conditions fail). Use [`PolySymplecticSpace`] for the nondegenerate case.
#[derive(Clone, Debug)]
pub struct FormFamily<T: Real> {
    n: usize,
    omegas: Vec<DMatrix<T>>,
}

impl<T: Real> FormFamily<T> {
    /// Validates skewness (entries of `Ω + Ωᵀ` within `1e-12` of zero,
    /// relative to the largest entry) and stores the exactly skew part
    /// `(Ω - Ωᵀ)/2` of each form.
    pub fn new(omegas: Vec<DMatrix<T>>) -> Result<Self> {
        let Some(first) = omegas.first() else {
            return Err(Error::Precondition("form family needs k >= 1".into()));
        };
        let n = first.nrows();
        if n == 0 {
            return Err(Error::Precondition("ambient dimension must be >= 1".into()));
        }
        let mut skewed = Vec::with_capacity(omegas.len());
        for omega in &omegas {
            if omega.nrows() != n || omega.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: omega.nrows().max(omega.ncols()),
                });
            }
            if omega.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteInput);
            }
            let scale = omega.abs().max().max(T::one());
            let deviation = (omega + omega.transpose()).abs().max();
            if deviation > T::of(SKEW_TOL) * scale {
                return Err(Error::NotSkew {
                    deviation: deviation.as_f64(),
                });
            }
            skewed.push((omega - omega.transpose()) * T::of(0.5));
        }
        Ok(Self { n, omegas: skewed })
    }

    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of forms.
    pub fn k(&self) -> usize {
        self.omegas.len()
    }

    pub fn omega(&self, a: usize) -> &DMatrix<T> {
        &self.omegas[a]
    }

    pub fn omegas(&self) -> &[DMatrix<T>] {
        &self.omegas
    }

    /// Largest absolute entry over the whole family; the natural scale for
    /// kernel rank decisions.
    pub fn scale(&self) -> T {
        self.omegas
            .iter()
            .map(|o| o.abs().max())
            .fold(T::zero(), |a, b| a.max(b))
            .max(T::one())
    }

    /// Evaluates `ω^A(u, v)`.
    pub fn eval(&self, a: usize, u: &DVector<T>, v: &DVector<T>) -> T {
        (u.transpose() * &self.omegas[a] * v)[(0, 0)]
    }

    /// `∩_A ker Ω^A`, the common kernel of the family.
    pub fn common_kernel(&self, tol: &Tolerance<T>) -> Result<Subspace<T>> {
        let scale = self.scale();
        let mut acc = Subspace::full(self.n);
        for omega in &self.omegas {
            let ker = Subspace::kernel_scaled(omega, scale, tol)?;
            acc = acc.intersect(&ker, tol)?;
        }
        Ok(acc)
    }
}

/// Returns whether the family is polysymplectic: `∩_A ker ω^A = {0}`.
pub fn verify_polysymplectic<T: Real>(forms: &FormFamily<T>, tol: &Tolerance<T>) -> Result<bool> {
    Ok(forms.common_kernel(tol)?.is_zero())
}

/// A form family whose kernels intersect trivially.
#[derive(Clone, Debug)]
pub struct PolySymplecticSpace<T: Real> {
    forms: FormFamily<T>,
}

impl<T: Real> PolySymplecticSpace<T> {
    pub fn new(forms: FormFamily<T>, tol: &Tolerance<T>) -> Result<Self> {
        let kernel_dim = forms.common_kernel(tol)?.dim();
        if kernel_dim != 0 {
            return Err(Error::Precondition(format!(
                "family is degenerate: common kernel has dimension {kernel_dim}"
            )));
        }
        Ok(Self { forms })
    }

    pub fn forms(&self) -> &FormFamily<T> {
        &self.forms
    }

    /// The canonical model on `R^{m(k+1)}` with coordinates
    /// `(q¹..q^m, p¹₁..p¹_m, …, pᵏ₁..pᵏ_m)` and `ω^A = dqⁱ ∧ dp^A_i`.
    pub fn canonical(m: usize, k: usize) -> Self {
        let forms = FormFamily::new(canonical_forms(m, k)).expect("canonical forms are skew");
        Self { forms }
    }
}

/// The matrices of the canonical forms `ω^A = dqⁱ ∧ dp^A_i` on `R^{m(k+1)}`.
pub fn canonical_forms<T: Real>(m: usize, k: usize) -> Vec<DMatrix<T>> {
    let n = m * (k + 1);
    (0..k)
        .map(|a| {
            let mut omega = DMatrix::zeros(n, n);
            for i in 0..m {
                let q = i;
                let p = m * (a + 1) + i;
                omega[(q, p)] = T::one();
                omega[(p, q)] = -T::one();
            }
            omega
        })
        .collect()
}

/// The k-orthogonal complement
/// `W^{⊥,k} = {v : ω^A(v, w) = 0 for all w ∈ W and all A}`.
///
/// Computed as the kernel of one stacked constraint matrix with `k · dim W`
/// rows, so a single rank decision settles it.
pub fn k_orthogonal<T: Real>(
    w: &Subspace<T>,
    forms: &FormFamily<T>,
    tol: &Tolerance<T>,
) -> Result<Subspace<T>> {
    if w.ambient_dim() != forms.n() {
        return Err(Error::AmbientMismatch {
            left: w.ambient_dim(),
            right: forms.n(),
        });
    }
    if w.is_zero() {
        return Ok(Subspace::full(forms.n()));
    }
    // ω^A(v, w_j) = vᵀ Ω^A w_j: each constraint row is (Ω^A w_j)ᵀ.
    let mut constraints = DMatrix::zeros(forms.k() * w.dim(), forms.n());
    for (a, omega) in forms.omegas().iter().enumerate() {
        let block = omega * w.basis();
        constraints
            .view_mut((a * w.dim(), 0), (w.dim(), forms.n()))
            .copy_from(&block.transpose());
    }
    Subspace::kernel_scaled(&constraints, forms.scale(), tol)
}

/// The musical map `♭_ω(v₁, …, v_k) = Σ_A i_{v_A} ω^A`, returned as the
/// coefficient vector of the covector `w ↦ Σ_A v_Aᵀ Ω^A w`.
pub fn flat<T: Real>(vectors: &[DVector<T>], forms: &FormFamily<T>) -> Result<DVector<T>> {
    if vectors.len() != forms.k() {
        return Err(Error::DimensionMismatch {
            expected: forms.k(),
            got: vectors.len(),
        });
    }
    let mut covector = DVector::zeros(forms.n());
    for (v, omega) in vectors.iter().zip(forms.omegas()) {
        if v.len() != forms.n() {
            return Err(Error::DimensionMismatch {
                expected: forms.n(),
                got: v.len(),
            });
        }
        covector += omega.transpose() * v;
    }
    Ok(covector)
}

/// The matrix of `♭_ω` acting on stacked k-tuples: an `n × nk` matrix whose
/// `A`-th block is `(Ω^A)ᵀ`.
pub fn flat_matrix<T: Real>(forms: &FormFamily<T>) -> DMatrix<T> {
    let (n, k) = (forms.n(), forms.k());
    let mut m = DMatrix::zeros(n, n * k);
    for (a, omega) in forms.omegas().iter().enumerate() {
        m.view_mut((0, a * n), (n, n)).copy_from(&omega.transpose());
    }
    m
}

/// Whether `♯_ω : v ↦ (i_v ω¹, …, i_v ωᵏ)` is injective. This is equivalent
/// to the family being polysymplectic, since `ker ♯_ω = ∩_A ker ω^A`.
pub fn sharp_injectivity<T: Real>(forms: &FormFamily<T>, tol: &Tolerance<T>) -> Result<bool> {
    let (n, k) = (forms.n(), forms.k());
    let mut stacked = DMatrix::zeros(n * k, n);
    for (a, omega) in forms.omegas().iter().enumerate() {
        stacked.view_mut((a * n, 0), (n, n)).copy_from(omega);
    }
    Ok(Subspace::kernel_scaled(&stacked, forms.scale(), tol)?.is_zero())
}

/// Pullback of a skew form to a subspace: `BᵀΩB` for the orthonormal basis
/// `B` of `W`.
pub fn restrict_form<T: Real>(omega: &DMatrix<T>, w: &Subspace<T>) -> Result<DMatrix<T>> {
    if w.ambient_dim() != omega.nrows() {
        return Err(Error::AmbientMismatch {
            left: w.ambient_dim(),
            right: omega.nrows(),
        });
    }
    Ok(w.basis().transpose() * omega * w.basis())
}

/// Quotient of a single skew form by its kernel.
///
/// Returns `(K, Ω̃)` where `K = ker Ω` and `Ω̃` is the induced form on the
/// orthonormal complement of `K`, expressed in that complement basis. The
/// induced form is nondegenerate and satisfies the pullback identity
/// `ω̃([u], [v]) = ω(u, v)` where `[u]` are complement coordinates.
pub fn quotient_form<T: Real>(
    omega: &DMatrix<T>,
    tol: &Tolerance<T>,
) -> Result<(Subspace<T>, DMatrix<T>)> {
    let scale = omega.abs().max().max(T::one());
    let kernel = Subspace::kernel_scaled(omega, scale, tol)?;
    let complement = kernel.orthogonal_complement(tol)?;
    let reduced = restrict_form(omega, &complement)?;
    Ok((kernel, reduced))
}
