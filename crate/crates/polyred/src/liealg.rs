//! Lie algebra and group machinery.
//!
//! Algebras are given by structure constants `c[a][b][e]` with
//! `[e_a, e_b] = Σ_e c[a][b][e] e_e`; group-level operations (exponential,
//! coadjoint action) are provided for `SO(3)` and abelian `R^d`, which is all
//! the concrete models need.
//!
//! Sign conventions, fixed once here:
//! * `(ad*_ξ μ)(η) = μ([ξ, η])`;
//! * infinitesimal generators are `ξ_M(x) = d/dt|₀ Φ(exp(tξ), x)`, so that
//!   `d/dt|₀ Coad(exp(tξ), μ) = -ad*_ξ μ` and for `so(3)` the generator of
//!   the coadjoint action at `π` is `ξ × π`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::subspace::{Subspace, Tolerance};
use crate::Real;

/// Validation slack for structure-constant identities.
const ALGEBRA_TOL: f64 = 1e-12;
/// Validation slack for group-element orthogonality.
const GROUP_TOL: f64 = 1e-10;

/// A finite-dimensional real Lie algebra given by structure constants, with
/// an optional inner product (used as the left-invariant metric restricted to
/// the algebra, inducing the musical maps on `g` and `g*`).
#[derive(Clone, Debug)]
pub struct LieAlgebraData<T: Real> {
    d: usize,
    /// `c[a][b][e]`: coefficient of `e_e` in `[e_a, e_b]`.
    c: Vec<Vec<Vec<T>>>,
    metric: Option<DMatrix<T>>,
}

impl<T: Real> LieAlgebraData<T> {
    /// Validates antisymmetry and the Jacobi identity on all basis triples.
    pub fn new(c: Vec<Vec<Vec<T>>>, metric: Option<DMatrix<T>>) -> Result<Self> {
        let d = c.len();
        if d == 0 {
            return Err(Error::InvalidLieAlgebra("dimension must be >= 1".into()));
        }
        if c.iter().any(|row| row.len() != d)
            || c.iter().flatten().any(|entry| entry.len() != d)
        {
            return Err(Error::InvalidLieAlgebra(
                "structure constants must be d × d × d".into(),
            ));
        }
        let slack = T::of(ALGEBRA_TOL);
        for a in 0..d {
            for b in 0..d {
                for e in 0..d {
                    if (c[a][b][e] + c[b][a][e]).abs() > slack {
                        return Err(Error::InvalidLieAlgebra(format!(
                            "antisymmetry fails at ({a},{b},{e})"
                        )));
                    }
                }
            }
        }
        let algebra = Self { d, c, metric: None };
        // Jacobi: [e_a,[e_b,e_c]] + [e_b,[e_c,e_a]] + [e_c,[e_a,e_b]] = 0.
        for a in 0..d {
            for b in 0..d {
                for cc in 0..d {
                    let mut total = DVector::<T>::zeros(d);
                    total += algebra.bracket(&basis_vec(d, a), &algebra.bracket(&basis_vec(d, b), &basis_vec(d, cc))?)?;
                    total += algebra.bracket(&basis_vec(d, b), &algebra.bracket(&basis_vec(d, cc), &basis_vec(d, a))?)?;
                    total += algebra.bracket(&basis_vec(d, cc), &algebra.bracket(&basis_vec(d, a), &basis_vec(d, b))?)?;
                    if total.abs().max() > slack {
                        return Err(Error::InvalidLieAlgebra(format!(
                            "Jacobi identity fails on basis triple ({a},{b},{cc})"
                        )));
                    }
                }
            }
        }
        let metric = match metric {
            None => None,
            Some(m) => {
                if m.nrows() != d || m.ncols() != d {
                    return Err(Error::InvalidLieAlgebra("metric must be d × d".into()));
                }
                if (&m - m.transpose()).abs().max() > slack {
                    return Err(Error::InvalidLieAlgebra("metric must be symmetric".into()));
                }
                let eigen = m.clone().symmetric_eigen();
                if eigen.eigenvalues.iter().any(|&l| l <= T::zero()) {
                    return Err(Error::InvalidLieAlgebra(
                        "metric must be positive definite".into(),
                    ));
                }
                Some(m)
            }
        };
        Ok(Self { metric, ..algebra })
    }

    /// `so(3)` with the cross-product bracket, optionally carrying a metric.
    pub fn so3_with_metric(metric: Option<DMatrix<T>>) -> Self {
        let mut c = vec![vec![vec![T::zero(); 3]; 3]; 3];
        // Levi-Civita: [e_a, e_b] = ε_{abe} e_e.
        let eps: [(usize, usize, usize, f64); 6] = [
            (0, 1, 2, 1.0),
            (1, 2, 0, 1.0),
            (2, 0, 1, 1.0),
            (1, 0, 2, -1.0),
            (2, 1, 0, -1.0),
            (0, 2, 1, -1.0),
        ];
        for (a, b, e, s) in eps {
            c[a][b][e] = T::of(s);
        }
        Self::new(c, metric).expect("so(3) structure constants are valid")
    }

    pub fn so3() -> Self {
        Self::so3_with_metric(None)
    }

    /// The abelian algebra `R^d` (all brackets vanish).
    pub fn abelian(d: usize) -> Self {
        let c = vec![vec![vec![T::zero(); d]; d]; d];
        Self::new(c, None).expect("abelian structure constants are valid")
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn metric(&self) -> Option<&DMatrix<T>> {
        self.metric.as_ref()
    }

    /// `[x, y]` via the structure constants.
    pub fn bracket(&self, x: &DVector<T>, y: &DVector<T>) -> Result<DVector<T>> {
        if x.len() != self.d || y.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len().max(y.len()),
            });
        }
        let mut out = DVector::zeros(self.d);
        for a in 0..self.d {
            if x[a] == T::zero() {
                continue;
            }
            for b in 0..self.d {
                if y[b] == T::zero() {
                    continue;
                }
                for e in 0..self.d {
                    out[e] += self.c[a][b][e] * x[a] * y[b];
                }
            }
        }
        Ok(out)
    }

    /// Matrix of `ad_ξ : y ↦ [ξ, y]`.
    pub fn ad_matrix(&self, xi: &DVector<T>) -> Result<DMatrix<T>> {
        if xi.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: xi.len(),
            });
        }
        let mut m = DMatrix::zeros(self.d, self.d);
        for a in 0..self.d {
            for b in 0..self.d {
                for e in 0..self.d {
                    m[(e, b)] += self.c[a][b][e] * xi[a];
                }
            }
        }
        Ok(m)
    }

    /// `ad*_ξ μ`, the covector `η ↦ μ([ξ, η])`; equals `(ad_ξ)ᵀ μ` in the
    /// dual basis. For `so(3)` this is `μ × ξ`.
    pub fn ad_star(&self, xi: &DVector<T>, mu: &DVector<T>) -> Result<DVector<T>> {
        Ok(self.ad_matrix(xi)?.transpose() * mu)
    }

    /// Matrix of `ξ ↦ ad*_ξ μ` for fixed `μ`.
    pub fn ad_star_matrix_in_xi(&self, mu: &DVector<T>) -> Result<DMatrix<T>> {
        if mu.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: mu.len(),
            });
        }
        // (ad*_ξ μ)_b = Σ_{a,e} c[a][b][e] ξ_a μ_e.
        let mut m = DMatrix::zeros(self.d, self.d);
        for a in 0..self.d {
            for b in 0..self.d {
                for e in 0..self.d {
                    m[(b, a)] += self.c[a][b][e] * mu[e];
                }
            }
        }
        Ok(m)
    }

    /// The isotropy subalgebra of a k-tuple of covectors under `Coad^k`:
    /// `{ξ : ad*_ξ μ_A = 0 for all A}`, the intersection of the single-μ
    /// isotropies, computed as one stacked kernel.
    pub fn isotropy_subalgebra(
        &self,
        mus: &[DVector<T>],
        tol: &Tolerance<T>,
    ) -> Result<Subspace<T>> {
        if mus.is_empty() {
            return Ok(Subspace::full(self.d));
        }
        let mut stacked = DMatrix::zeros(self.d * mus.len(), self.d);
        let mut scale = T::one();
        for (i, mu) in mus.iter().enumerate() {
            scale = scale.max(mu.abs().max());
            stacked
                .view_mut((i * self.d, 0), (self.d, self.d))
                .copy_from(&self.ad_star_matrix_in_xi(mu)?);
        }
        Subspace::kernel_scaled(&stacked, scale, tol)
    }

    /// Infinitesimal generator of `Coad^k` at `ν = (ν₁, …, ν_k)`:
    /// componentwise `-ad*_ξ ν_A`. For `so(3)` this is `(ξ×ν₁, …, ξ×ν_k)`.
    pub fn coadjoint_generator(
        &self,
        xi: &DVector<T>,
        nus: &[DVector<T>],
    ) -> Result<Vec<DVector<T>>> {
        nus.iter().map(|nu| Ok(-self.ad_star(xi, nu)?)).collect()
    }

    /// The `kd × d` matrix whose column `a` is the stacked generator of the
    /// basis element `e_a` at `ν`.
    pub fn coadjoint_generator_matrix(&self, nus: &[DVector<T>]) -> Result<DMatrix<T>> {
        let k = nus.len();
        let mut m = DMatrix::zeros(k * self.d, self.d);
        for a in 0..self.d {
            let gen = self.coadjoint_generator(&basis_vec(self.d, a), nus)?;
            for (i, g) in gen.iter().enumerate() {
                m.view_mut((i * self.d, a), (self.d, 1)).copy_from(g);
            }
        }
        Ok(m)
    }
}

fn basis_vec<T: Real>(d: usize, a: usize) -> DVector<T> {
    let mut v = DVector::zeros(d);
    v[a] = T::one();
    v
}

/// A rotation matrix, validated to satisfy `RᵀR = I` and `det R = +1`.
#[derive(Clone, Debug)]
pub struct GroupElementSO3<T: Real> {
    r: Matrix3<T>,
}

impl<T: Real> GroupElementSO3<T> {
    pub fn new(r: Matrix3<T>) -> Result<Self> {
        let slack = T::of(GROUP_TOL);
        let dev = (r.transpose() * r - Matrix3::identity()).abs().max();
        if dev > slack {
            return Err(Error::InvalidGroupElement(format!(
                "RᵀR differs from identity by {:.3e}",
                dev.as_f64()
            )));
        }
        if (r.determinant() - T::one()).abs() > slack {
            return Err(Error::InvalidGroupElement("det R must be +1".into()));
        }
        Ok(Self { r })
    }

    pub fn identity() -> Self {
        Self {
            r: Matrix3::identity(),
        }
    }

    pub fn matrix(&self) -> &Matrix3<T> {
        &self.r
    }

    pub fn inverse(&self) -> Self {
        Self {
            r: self.r.transpose(),
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        // Composition of validated rotations stays within the validation
        // slack; no re-check needed.
        Self {
            r: self.r * other.r,
        }
    }

    /// Nearest rotation matrix in the Frobenius sense (polar projection).
    pub fn polar_project(m: &Matrix3<T>) -> Result<Self> {
        let svd = m.svd(true, true);
        let u = svd.u.expect("svd with u");
        let v_t = svd.v_t.expect("svd with v_t");
        let mut r = u * v_t;
        if r.determinant() < T::zero() {
            // Flip the least-significant singular direction.
            let mut u = u;
            let col = u.column(2) * -T::one();
            u.set_column(2, &col);
            r = u * v_t;
        }
        Self::new(r)
    }
}

/// `hat : R³ → so(3)`, `hat(x) y = x × y`.
pub fn so3_hat<T: Real>(x: &Vector3<T>) -> Matrix3<T> {
    Matrix3::new(
        T::zero(),
        -x[2],
        x[1],
        x[2],
        T::zero(),
        -x[0],
        -x[1],
        x[0],
        T::zero(),
    )
}

/// Inverse of [`so3_hat`]; requires the input to be skew within `1e-12`.
pub fn so3_vee<T: Real>(m: &Matrix3<T>) -> Result<Vector3<T>> {
    let dev = (m + m.transpose()).abs().max();
    if dev > T::of(ALGEBRA_TOL) * m.abs().max().max(T::one()) {
        return Err(Error::NotSkew {
            deviation: dev.as_f64(),
        });
    }
    Ok(Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]))
}

/// Rodrigues exponential: rotation by angle `‖x‖` about `x/‖x‖`, with the
/// second-order series of the coefficients near `‖x‖ = 0`.
pub fn exp_so3<T: Real>(x: &Vector3<T>) -> GroupElementSO3<T> {
    let theta2 = x.norm_squared();
    let theta = theta2.sqrt();
    let k = so3_hat(x);
    let (a, b) = if theta < T::of(1e-4) {
        // sin θ / θ and (1 - cos θ) / θ² to second order in θ².
        (
            T::one() - theta2 / T::of(6.0) + theta2 * theta2 / T::of(120.0),
            T::of(0.5) - theta2 / T::of(24.0) + theta2 * theta2 / T::of(720.0),
        )
    } else {
        (theta.sin() / theta, (T::one() - theta.cos()) / theta2)
    };
    let r = Matrix3::identity() + k * a + k * k * b;
    GroupElementSO3 { r }
}

/// Group elements of the models: `SO(3)` or abelian `R^d` (whose coadjoint
/// action is trivial).
#[derive(Clone, Debug)]
pub enum GroupElement<T: Real> {
    So3(GroupElementSO3<T>),
    Abelian(DVector<T>),
}

/// Coadjoint action `Coad(g, μ) = μ ∘ Ad_{g⁻¹}`. Under the `so(3)* ≅ R³`
/// identification this is `μ ↦ R μ`; for abelian groups it is the identity.
pub fn coad<T: Real>(g: &GroupElement<T>, mu: &DVector<T>) -> Result<DVector<T>> {
    match g {
        GroupElement::So3(rot) => {
            if mu.len() != 3 {
                return Err(Error::DimensionMismatch {
                    expected: 3,
                    got: mu.len(),
                });
            }
            let v = rot.matrix() * Vector3::new(mu[0], mu[1], mu[2]);
            Ok(DVector::from_column_slice(v.as_slice()))
        }
        GroupElement::Abelian(_) => Ok(mu.clone()),
    }
}

/// Componentwise coadjoint action on a k-tuple.
pub fn coad_k<T: Real>(g: &GroupElement<T>, mus: &[DVector<T>]) -> Result<Vec<DVector<T>>> {
    mus.iter().map(|mu| coad(g, mu)).collect()
}
