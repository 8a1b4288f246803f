//! Concrete Hamiltonian polysymplectic G-spaces.
//!
//! Each model produces [`GSpaceSnapshot`]s at chosen points:
//!
//! * [`LinearAction::covelocity_snapshot`] — the canonical covelocity space
//!   over `Q = R^m` with the lift of an affine-linear base action
//!   (translations, rotations, or the trivial action) and the momentum map
//!   `J^A(q, p)(ξ) = p^A(ξ_Q(q))`;
//! * [`product_model_snapshot`] — two copies of `T*R²` with
//!   `ω^A = pr_A^* ω`, either under the diagonal translation action (the
//!   configuration on which the double-complement claim fails with
//!   dimensions 1 vs 2) or under the product group acting factorwise (where
//!   both reduction conditions hold);
//! * [`group_covelocity_snapshot`] — the left-trivialized model
//!   `G × (g*)^k` with `J(g, ν) = Coad^k_g ν`;
//! * [`k_coadjoint_orbit_forms`] — the tangent space and form family of a
//!   k-coadjoint orbit at a point, from the closed-form pairing
//!   `ω^A(ξ_gen, η_gen) = -ν_A[ξ, η]`;
//! * [`classify_kks_so3`] — the three `SO(3)` orbit types (point, sphere,
//!   full group) with their explicit reduced forms.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;

use crate::error::{Error, Result};
use crate::liealg::{coad_k, exp_so3, GroupElement, LieAlgebraData};
use crate::polyspace::{canonical_forms, FormFamily};
use crate::reduction::GSpaceSnapshot;
use crate::subspace::{min_norm_lstsq, Subspace, Tolerance};
use crate::Real;

/// A point of the covelocity space over `R^m`: base coordinates plus `k`
/// covectors.
#[derive(Clone, Debug)]
pub struct CovelocityPoint<T: Real> {
    pub q: DVector<T>,
    pub ps: Vec<DVector<T>>,
}

impl<T: Real> CovelocityPoint<T> {
    pub fn new(q: DVector<T>, ps: Vec<DVector<T>>) -> Result<Self> {
        if ps.iter().any(|p| p.len() != q.len())
            || !q.iter().all(|x| x.is_finite())
            || ps.iter().any(|p| p.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self { q, ps })
    }

    pub fn k(&self) -> usize {
        self.ps.len()
    }
}

/// An affine-linear action of a Lie group on `R^m`, given per algebra basis
/// element `e_a` by `ξ_Q(q) = A_a q + b_a`. This is the data needed to lift
/// the action to covelocities: the lifted generator on `(q, p¹, …, pᵏ)` is
/// `(A_a q + b_a; -A_aᵀ p¹; …; -A_aᵀ pᵏ)`.
#[derive(Clone, Debug)]
pub struct LinearAction<T: Real> {
    algebra: LieAlgebraData<T>,
    base_dim: usize,
    linear_parts: Vec<DMatrix<T>>,
    translations: Vec<DVector<T>>,
}

impl<T: Real> LinearAction<T> {
    pub fn new(
        algebra: LieAlgebraData<T>,
        base_dim: usize,
        linear_parts: Vec<DMatrix<T>>,
        translations: Vec<DVector<T>>,
    ) -> Result<Self> {
        let d = algebra.dim();
        if linear_parts.len() != d || translations.len() != d {
            return Err(Error::UnsupportedAction(
                "need one generator (linear part and translation) per basis element".into(),
            ));
        }
        if linear_parts
            .iter()
            .any(|m| m.nrows() != base_dim || m.ncols() != base_dim)
            || translations.iter().any(|b| b.len() != base_dim)
        {
            return Err(Error::UnsupportedAction(
                "generator shapes must match the base dimension".into(),
            ));
        }
        Ok(Self {
            algebra,
            base_dim,
            linear_parts,
            translations,
        })
    }

    /// The action of the trivial group (one generator, identically zero).
    pub fn trivial(base_dim: usize) -> Self {
        Self::new(
            LieAlgebraData::abelian(1),
            base_dim,
            vec![DMatrix::zeros(base_dim, base_dim)],
            vec![DVector::zeros(base_dim)],
        )
        .expect("trivial action data is consistent")
    }

    /// Translations of `R^m` along the given directions (abelian group).
    pub fn translations(base_dim: usize, directions: Vec<DVector<T>>) -> Result<Self> {
        let d = directions.len();
        Self::new(
            LieAlgebraData::abelian(d),
            base_dim,
            vec![DMatrix::zeros(base_dim, base_dim); d],
            directions,
        )
    }

    /// The rotation action of `SO(3)` on `R³`: `ξ_Q(q) = ξ × q`. This action
    /// is not infinitesimally free (ξ ∥ q generates nothing), so sampled
    /// points must avoid configurations that degenerate the momentum rank;
    /// in particular q = 0.
    pub fn rotations_so3() -> Self {
        let hats = (0..3)
            .map(|a| {
                let mut e = Vector3::zeros();
                e[a] = T::one();
                let h = crate::liealg::so3_hat(&e);
                DMatrix::from_fn(3, 3, |i, j| h[(i, j)])
            })
            .collect();
        Self::new(
            LieAlgebraData::so3(),
            3,
            hats,
            vec![DVector::zeros(3); 3],
        )
        .expect("rotation action data is consistent")
    }

    pub fn algebra(&self) -> &LieAlgebraData<T> {
        &self.algebra
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    /// `ξ_Q(q)` for the basis element `e_a`.
    pub fn base_generator(&self, a: usize, q: &DVector<T>) -> DVector<T> {
        &self.linear_parts[a] * q + &self.translations[a]
    }

    /// The momentum value `μ_A = J^A(q, p) ∈ g*`, with components
    /// `p^A(ξ_Q(q))` over the algebra basis.
    pub fn momentum_value(&self, point: &CovelocityPoint<T>, a: usize) -> DVector<T> {
        DVector::from_fn(self.algebra.dim(), |b, _| {
            self.base_generator(b, &point.q).dot(&point.ps[a])
        })
    }

    /// Snapshot of the lifted action on `(T¹_k)* R^m` at `point`, with the
    /// canonical forms `ω^A = dqⁱ ∧ dp^A_i` and the exact differentials of
    /// `J^A(q, p)(ξ) = p^A(ξ_Q(q))`.
    pub fn covelocity_snapshot(
        &self,
        point: &CovelocityPoint<T>,
        tol: &Tolerance<T>,
    ) -> Result<GSpaceSnapshot<T>> {
        if point.q.len() != self.base_dim {
            return Err(Error::UnsupportedAction(format!(
                "point lives on R^{} but the action is on R^{}",
                point.q.len(),
                self.base_dim
            )));
        }
        let m = self.base_dim;
        let k = point.k();
        if k == 0 {
            return Err(Error::Precondition("need k >= 1 covectors".into()));
        }
        let d = self.algebra.dim();
        let n = m * (k + 1);

        let forms = FormFamily::new(canonical_forms(m, k))?;

        let mut generators = DMatrix::zeros(n, d);
        for a in 0..d {
            let mut column = DVector::zeros(n);
            column.rows_mut(0, m).copy_from(&self.base_generator(a, &point.q));
            for slot in 0..k {
                let lifted = -self.linear_parts[a].transpose() * &point.ps[slot];
                column.rows_mut(m * (slot + 1), m).copy_from(&lifted);
            }
            generators.set_column(a, &column);
        }

        let mut momentum_jacobians = Vec::with_capacity(k);
        for slot in 0..k {
            // d of q ↦ p^A(A_a q + b_a): A_aᵀ p^A in q, ξ_Q(q) in p^A.
            let mut jac = DMatrix::zeros(d, n);
            for a in 0..d {
                let dq = self.linear_parts[a].transpose() * &point.ps[slot];
                jac.view_mut((a, 0), (1, m)).copy_from(&dq.transpose());
                let dp = self.base_generator(a, &point.q);
                jac.view_mut((a, m * (slot + 1)), (1, m))
                    .copy_from(&dp.transpose());
            }
            momentum_jacobians.push(jac);
        }

        let isotropies: Result<Vec<Subspace<T>>> = (0..k)
            .map(|slot| {
                let mu = self.momentum_value(point, slot);
                self.algebra.isotropy_subalgebra(&[mu], tol)
            })
            .collect();

        GSpaceSnapshot::new(forms, momentum_jacobians, generators, isotropies?, tol)
    }
}

/// Which group acts on the product of two copies of `T*R²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductConfig {
    /// `(R, +)` translating `q¹` in both factors simultaneously.
    Diagonal,
    /// `R²`, each factor translated by its own component.
    ProductGroup,
}

/// Factor layout: `(q¹, q², p₁, p₂)`; the product space stacks two factors
/// into `R⁸`. The factor momentum for the `q¹` translation is `p₁`.
const FACTOR_DIM: usize = 4;
const P1: usize = 2;

fn factor_symplectic<T: Real>() -> DMatrix<T> {
    let mut omega = DMatrix::zeros(FACTOR_DIM, FACTOR_DIM);
    for i in 0..2 {
        omega[(i, i + 2)] = T::one();
        omega[(i + 2, i)] = -T::one();
    }
    omega
}

/// Snapshot of the product model `M = T*R² × T*R²` with `ω^A = pr_A^* ω`.
///
/// Both configurations share the forms; they differ in the group. The
/// snapshot is point-independent because the actions are translations and
/// the factor momentum `p₁` is linear; the interesting structure is entirely
/// in the generators and jacobians.
pub fn product_model_snapshot<T: Real>(
    config: ProductConfig,
    tol: &Tolerance<T>,
) -> Result<GSpaceSnapshot<T>> {
    let n = 2 * FACTOR_DIM;
    let factor = factor_symplectic::<T>();
    let mut omega1 = DMatrix::zeros(n, n);
    omega1
        .view_mut((0, 0), (FACTOR_DIM, FACTOR_DIM))
        .copy_from(&factor);
    let mut omega2 = DMatrix::zeros(n, n);
    omega2
        .view_mut((FACTOR_DIM, FACTOR_DIM), (FACTOR_DIM, FACTOR_DIM))
        .copy_from(&factor);
    let forms = FormFamily::new(vec![omega1, omega2])?;

    match config {
        ProductConfig::Diagonal => {
            // One generator ∂_{q¹} ⊕ ∂_{q¹}; J^A = p₁ of factor A.
            let mut generators = DMatrix::zeros(n, 1);
            generators[(0, 0)] = T::one();
            generators[(FACTOR_DIM, 0)] = T::one();
            let mut jac1 = DMatrix::zeros(1, n);
            jac1[(0, P1)] = T::one();
            let mut jac2 = DMatrix::zeros(1, n);
            jac2[(0, FACTOR_DIM + P1)] = T::one();
            GSpaceSnapshot::new(
                forms,
                vec![jac1, jac2],
                generators,
                vec![Subspace::full(1), Subspace::full(1)],
                tol,
            )
        }
        ProductConfig::ProductGroup => {
            let mut generators = DMatrix::zeros(n, 2);
            generators[(0, 0)] = T::one();
            generators[(FACTOR_DIM, 1)] = T::one();
            let mut jac1 = DMatrix::zeros(2, n);
            jac1[(0, P1)] = T::one();
            let mut jac2 = DMatrix::zeros(2, n);
            jac2[(1, FACTOR_DIM + P1)] = T::one();
            GSpaceSnapshot::new(
                forms,
                vec![jac1, jac2],
                generators,
                vec![Subspace::full(2), Subspace::full(2)],
                tol,
            )
        }
    }
}

/// A point of `J⁻¹(μ)` in the product model: the `p₁` coordinates are pinned
/// to `μ`, everything else is drawn from the unit cube.
pub fn sample_product_level_point<T: Real>(
    mu: (T, T),
    rng: &mut impl Rng,
) -> DVector<T> {
    let mut x = DVector::from_fn(2 * FACTOR_DIM, |_, _| T::of(rng.random_range(-1.0..1.0)));
    x[P1] = mu.0;
    x[FACTOR_DIM + P1] = mu.1;
    x
}

/// A point of the left-trivialized group model `G × (g*)^k`.
#[derive(Clone, Debug)]
pub struct GroupModelPoint<T: Real> {
    pub g: GroupElement<T>,
    pub nus: Vec<DVector<T>>,
}

/// Snapshot of the group model at `(g, ν₁, …, ν_k)` in left-trivialized
/// coordinates `(ξ; β₁, …, β_k) ∈ g × (g*)^k`.
///
/// The form is `ω^A((ξ, β), (η, γ)) = γ_A(ξ) - β_A(η) + ν_A([ξ, η])`; the
/// left-translation generators are `(Ad_{g⁻¹} ξ; 0; …; 0)`; the momentum
/// differential is `T J^A(η, β) = Coad_g(β_A - ad*_η ν_A)`, which is the
/// closed form of differentiating `J^A(g, ν) = Coad_g ν_A`.
pub fn group_covelocity_snapshot<T: Real>(
    algebra: &LieAlgebraData<T>,
    point: &GroupModelPoint<T>,
    tol: &Tolerance<T>,
) -> Result<GSpaceSnapshot<T>> {
    let d = algebra.dim();
    let k = point.nus.len();
    if k == 0 {
        return Err(Error::Precondition("need k >= 1 momenta".into()));
    }
    if point.nus.iter().any(|nu| nu.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: point.nus.iter().map(|nu| nu.len()).max().unwrap_or(0),
        });
    }
    let n = d * (k + 1);

    // Matrices of Coad_g and Ad_{g⁻¹} on the identified algebra/dual.
    let (coad_matrix, ad_inv_matrix) = match &point.g {
        GroupElement::So3(rot) => {
            if d != 3 {
                return Err(Error::InvalidGroupElement(
                    "SO(3) element with a non-3-dimensional algebra".into(),
                ));
            }
            let r = DMatrix::from_fn(3, 3, |i, j| rot.matrix()[(i, j)]);
            (r.clone(), r.transpose())
        }
        GroupElement::Abelian(_) => (DMatrix::identity(d, d), DMatrix::identity(d, d)),
    };

    let mut omegas = Vec::with_capacity(k);
    for slot in 0..k {
        let mut omega = DMatrix::zeros(n, n);
        // ν_A[ξ, η] block on g × g.
        for a in 0..d {
            for b in 0..d {
                let mut ea = DVector::zeros(d);
                ea[a] = T::one();
                let mut eb = DVector::zeros(d);
                eb[b] = T::one();
                omega[(a, b)] = point.nus[slot].dot(&algebra.bracket(&ea, &eb)?);
            }
        }
        // γ_A(ξ) - β_A(η) pairing between the g block and the β_A block.
        let offset = d * (slot + 1);
        for i in 0..d {
            omega[(i, offset + i)] = T::one();
            omega[(offset + i, i)] = -T::one();
        }
        omegas.push(omega);
    }
    let forms = FormFamily::new(omegas)?;

    let mut generators = DMatrix::zeros(n, d);
    generators
        .view_mut((0, 0), (d, d))
        .copy_from(&ad_inv_matrix);

    let mut momentum_jacobians = Vec::with_capacity(k);
    for slot in 0..k {
        let mut jac = DMatrix::zeros(d, n);
        let eta_block = -&coad_matrix * algebra.ad_star_matrix_in_xi(&point.nus[slot])?;
        jac.view_mut((0, 0), (d, d)).copy_from(&eta_block);
        jac.view_mut((0, d * (slot + 1)), (d, d))
            .copy_from(&coad_matrix);
        momentum_jacobians.push(jac);
    }

    let isotropies: Result<Vec<Subspace<T>>> = (0..k)
        .map(|slot| {
            let mu = &coad_matrix * &point.nus[slot];
            algebra.isotropy_subalgebra(&[mu], tol)
        })
        .collect();

    GSpaceSnapshot::new(forms, momentum_jacobians, generators, isotropies?, tol)
}

/// The momentum value `J(g, ν) = Coad^k_g ν` of a group-model point.
pub fn group_momentum<T: Real>(point: &GroupModelPoint<T>) -> Result<Vec<DVector<T>>> {
    coad_k(&point.g, &point.nus)
}

/// Samples a point of `J⁻¹(μ)` in the `SO(3)` group model through the
/// closed-form parametrization `g ↦ (g, Coad^k_{g⁻¹} μ)`.
pub fn sample_group_level_point<T: Real>(
    mu: &[DVector<T>],
    rng: &mut impl Rng,
) -> Result<GroupModelPoint<T>> {
    let axis = Vector3::new(
        T::of(rng.random_range(-1.0..1.0)),
        T::of(rng.random_range(-1.0..1.0)),
        T::of(rng.random_range(-1.0..1.0)),
    ) * T::of(rng.random_range(0.0..3.0));
    let g = exp_so3(&axis);
    let inv = GroupElement::So3(g.inverse());
    let nus = coad_k(&inv, mu)?;
    Ok(GroupModelPoint {
        g: GroupElement::So3(g),
        nus,
    })
}

/// Residual of the Gram-matrix membership test for a k-coadjoint `SO(3)`
/// orbit: largest deviation of `ν_A·ν_B` from its value at the seed.
pub fn orbit_membership_residual<T: Real>(seed: &[DVector<T>], nus: &[DVector<T>]) -> T {
    let mut worst = T::zero();
    for a in 0..seed.len() {
        for b in 0..seed.len() {
            worst = worst.max((nus[a].dot(&nus[b]) - seed[a].dot(&seed[b])).abs());
        }
    }
    worst
}

/// Tangent space and form family of a k-coadjoint orbit at `ν`.
#[derive(Clone, Debug)]
pub struct OrbitStructure<T: Real> {
    /// Orthonormal tangent basis inside `(g*)^k ≅ R^{kd}`.
    pub tangent: Subspace<T>,
    /// Form matrices in the tangent basis.
    pub forms: Vec<DMatrix<T>>,
    /// Largest pairing of a generator-kernel direction against the forms;
    /// the closed-form pairing is well defined iff this vanishes.
    pub well_defined_residual: T,
}

/// Builds the orbit tangent (the span of the coadjoint generators) and
/// evaluates the forms through `ω^A(ξ_gen, η_gen) = -ν_A[ξ, η]`, pulling
/// each tangent basis vector back to a generator representative.
pub fn k_coadjoint_orbit_forms<T: Real>(
    algebra: &LieAlgebraData<T>,
    nus: &[DVector<T>],
    tol: &Tolerance<T>,
) -> Result<OrbitStructure<T>> {
    let d = algebra.dim();
    let k = nus.len();
    if k == 0 {
        return Err(Error::Precondition("need k >= 1 momenta".into()));
    }
    let gen = algebra.coadjoint_generator_matrix(nus)?;
    let scale = gen.abs().max().max(T::one());
    let tangent = Subspace::span_scaled(&gen, scale, tol)?;

    // Well-definedness: representatives differ by the generator kernel, so
    // ν_A[ζ, η] must vanish for kernel directions ζ.
    let kernel = Subspace::kernel_scaled(&gen, scale, tol)?;
    let mut residual = T::zero();
    if !kernel.is_zero() {
        for j in 0..kernel.dim() {
            let zeta = kernel.basis().column(j).into_owned();
            for nu in nus {
                for b in 0..d {
                    let mut eb = DVector::zeros(d);
                    eb[b] = T::one();
                    residual = residual.max(nu.dot(&algebra.bracket(&zeta, &eb)?).abs());
                }
            }
        }
    }

    // Preimages of the tangent basis under the generator map.
    let mut preimages = Vec::with_capacity(tangent.dim());
    for j in 0..tangent.dim() {
        let t = tangent.basis().column(j).into_owned();
        let xi = min_norm_lstsq(&gen, &t, tol)?;
        preimages.push(xi);
    }

    let mut forms = Vec::with_capacity(k);
    for nu in nus {
        let mut omega = DMatrix::zeros(tangent.dim(), tangent.dim());
        for i in 0..tangent.dim() {
            for j in 0..tangent.dim() {
                omega[(i, j)] = -nu.dot(&algebra.bracket(&preimages[i], &preimages[j])?);
            }
        }
        // The pairing is skew up to roundoff; store the skew part exactly.
        omega = (&omega - omega.transpose()) * T::of(0.5);
        forms.push(omega);
    }

    Ok(OrbitStructure {
        tangent,
        forms,
        well_defined_residual: residual,
    })
}

/// Classification of the 2-coadjoint `SO(3)` orbit through `(π⁰₁, π⁰₂)`.
#[derive(Clone, Debug)]
pub enum KksSo3<T: Real> {
    /// Both seeds vanish: the orbit is a point.
    PointOrbit,
    /// Linearly dependent seeds: the orbit is the sphere of radius
    /// `‖base‖`. When `swapped` is false, `π⁰₂ = λ₀ π⁰₁` and the forms on
    /// tangent vectors `u, v` of the sphere are
    /// `ω¹(π)(u, v) = -π·(u×v)` and `ω² = λ₀ ω¹`; when `swapped` is true the
    /// roles of the two slots are exchanged (`π⁰₁ = λ₀ π⁰₂`).
    Sphere { lambda0: T, radius: T, swapped: bool },
    /// Independent seeds: the orbit is diffeomorphic to `SO(3)` and the
    /// forms are left-invariant, determined by their identity values
    /// `ω^A(Id)(ξ̂, η̂) = -π⁰_A·(ξ×η)`.
    LeftInvariant {
        pi1: Vector3<T>,
        pi2: Vector3<T>,
    },
}

/// Seeds count as dependent when the sine of their angle is below this.
const KKS_DEPENDENT_SIN: f64 = 1e-9;
/// Seeds count as zero below this norm.
const KKS_ZERO_NORM: f64 = 1e-12;

/// Distinguishes the three orbit types of the 2-coadjoint `SO(3)` action.
pub fn classify_kks_so3<T: Real>(pi1: &Vector3<T>, pi2: &Vector3<T>) -> KksSo3<T> {
    let (n1, n2) = (pi1.norm(), pi2.norm());
    let zero = T::of(KKS_ZERO_NORM);
    if n1 <= zero && n2 <= zero {
        return KksSo3::PointOrbit;
    }
    if n1 <= zero {
        // π⁰₁ = 0 · π⁰₂: degenerate dependent pair with the roles swapped.
        return KksSo3::Sphere {
            lambda0: T::zero(),
            radius: n2,
            swapped: true,
        };
    }
    if n2 <= zero {
        return KksSo3::Sphere {
            lambda0: T::zero(),
            radius: n1,
            swapped: false,
        };
    }
    let sin_angle = pi1.cross(pi2).norm() / (n1 * n2);
    if sin_angle < T::of(KKS_DEPENDENT_SIN) {
        let lambda0 = pi1.dot(pi2) / (n1 * n1);
        KksSo3::Sphere {
            lambda0,
            radius: n1,
            swapped: false,
        }
    } else {
        KksSo3::LeftInvariant {
            pi1: *pi1,
            pi2: *pi2,
        }
    }
}

impl<T: Real> KksSo3<T> {
    /// Sphere-case form `ω^A(π)(u, v)` on tangent vectors `u, v ⟂ π` of the
    /// sphere through `π ≠ 0`: `-λ_A π·(u×v)/‖π‖²` with `λ = (1, λ₀)` (or
    /// swapped). The `‖π‖²` normalization makes the value agree with the
    /// generator pairing `-ν_A[ξ, η]` at every radius; on the unit sphere it
    /// is the plain triple product `-λ_A π·(u×v)`.
    pub fn sphere_form(&self, a: usize, pi: &Vector3<T>, u: &Vector3<T>, v: &Vector3<T>) -> Result<T> {
        let KksSo3::Sphere {
            lambda0, swapped, ..
        } = self
        else {
            return Err(Error::Precondition("not a sphere orbit".into()));
        };
        let norm_squared = pi.norm_squared();
        if norm_squared == T::zero() {
            return Err(Error::Precondition("sphere point must be nonzero".into()));
        }
        let base = -pi.dot(&u.cross(v)) / norm_squared;
        let factor = match (a, swapped) {
            (0, false) | (1, true) => T::one(),
            (1, false) | (0, true) => *lambda0,
            _ => {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    got: a,
                })
            }
        };
        Ok(base * factor)
    }

    /// Full-group case: `ω^A` evaluated on left-trivialized tangent vectors
    /// (algebra elements); by left invariance the group point is immaterial.
    pub fn left_invariant_form(&self, a: usize, xi: &Vector3<T>, eta: &Vector3<T>) -> Result<T> {
        let KksSo3::LeftInvariant { pi1, pi2 } = self else {
            return Err(Error::Precondition("not a full-group orbit".into()));
        };
        let seed = match a {
            0 => pi1,
            1 => pi2,
            _ => {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    got: a,
                })
            }
        };
        Ok(-seed.dot(&xi.cross(eta)))
    }
}

/// Samples a covelocity point with unit-cube coordinates; with
/// `avoid_origin`, the base point is pushed away from `q = 0` (needed for
/// rotation actions, which degenerate there).
pub fn sample_covelocity_point<T: Real>(
    m: usize,
    k: usize,
    avoid_origin: bool,
    rng: &mut impl Rng,
) -> CovelocityPoint<T> {
    let mut q = DVector::from_fn(m, |_, _| T::of(rng.random_range(-1.0..1.0)));
    if avoid_origin && q.norm() < T::of(0.5) {
        let shift = T::of(1.5);
        for i in 0..m {
            q[i] += shift;
        }
    }
    let ps = (0..k)
        .map(|_| DVector::from_fn(m, |_, _| T::of(rng.random_range(-1.0..1.0))))
        .collect();
    CovelocityPoint { q, ps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::GroupElementSO3;
    use crate::reduction::{
        check_double_complement_claim, check_momentum_lemma, check_reduction_conditions,
        level_set_tangent, orbit_tangent, reduced_forms,
    };
    use crate::polyspace::verify_polysymplectic;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerance<f64> {
        Tolerance::default()
    }

    fn rv3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
        Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
    }

    fn dv(v: &Vector3<f64>) -> DVector<f64> {
        DVector::from_column_slice(v.as_slice())
    }

    #[test]
    fn trivial_action_snapshot_is_inert() {
        let action = LinearAction::<f64>::trivial(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let point = sample_covelocity_point(1, 2, false, &mut rng);
        let s = action.covelocity_snapshot(&point, &tol()).unwrap();
        assert_eq!(s.n(), 3);
        assert!(s.generators().abs().max() == 0.0);
        assert!(s.momentum_jacobian(0).abs().max() == 0.0);
        assert!(verify_polysymplectic(s.forms(), &tol()).unwrap());
    }

    #[test]
    fn translation_snapshot_momentum_is_p1() {
        // Q = R², G = (R,+) translating q¹: J^A = p^A₁ and
        // ker ω^A(α) is the vertical of the other copy.
        let action = LinearAction::<f64>::translations(
            2,
            vec![DVector::from_vec(vec![1.0, 0.0])],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let point = sample_covelocity_point(2, 2, false, &mut rng);
        let s = action.covelocity_snapshot(&point, &tol()).unwrap();
        // J^A = p^A·e₁: jacobian row has a single 1 at the p^A₁ slot.
        let jac = s.momentum_jacobian(0);
        assert_eq!(jac[(0, 2)], 1.0);
        assert_eq!(jac.abs().sum(), 1.0);
        let ker = Subspace::kernel(s.forms().omega(0), &tol()).unwrap();
        assert_eq!(ker.dim(), 2);
        // Momentum value equals p¹₁.
        let mu = action.momentum_value(&point, 0);
        assert!((mu[0] - point.ps[0][0]).abs() < 1e-15);
    }

    #[test]
    fn rotation_snapshot_satisfies_momentum_invariant() {
        // Q = R³, G = SO(3): the snapshot constructor checks Gᵀ Ω^A = TJ^A;
        // also cross-check the jacobian against central finite differences
        // of J^A(q, p) = q × p^A.
        let action = LinearAction::<f64>::rotations_so3();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let point = sample_covelocity_point(3, 2, true, &mut rng);
            let s = action.covelocity_snapshot(&point, &tol()).unwrap();
            assert_eq!(s.n(), 9);

            let h = 1e-6;
            let jac = s.momentum_jacobian(0);
            for coord in 0..9 {
                let eval = |delta: f64| {
                    let mut q = point.q.clone();
                    let mut ps = point.ps.clone();
                    if coord < 3 {
                        q[coord] += delta;
                    } else {
                        ps[(coord - 3) / 3][(coord - 3) % 3] += delta;
                    }
                    let p = CovelocityPoint::new(q, ps).unwrap();
                    action.momentum_value(&p, 0)
                };
                let fd = (eval(h) - eval(-h)) / (2.0 * h);
                for row in 0..3 {
                    assert!((jac[(row, coord)] - fd[row]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn rotation_model_conditions_hold_at_generic_points() {
        let action = LinearAction::<f64>::rotations_so3();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let point = sample_covelocity_point(3, 2, true, &mut rng);
            let s = action.covelocity_snapshot(&point, &tol()).unwrap();
            let report = check_reduction_conditions(&s, &tol()).unwrap();
            assert!(report.conditions_hold());
            assert!(report.routes_agree);
            let lemma = check_momentum_lemma(&s, &tol()).unwrap();
            assert!(lemma.passed());
        }
    }

    #[test]
    fn translation_model_conditions_hold() {
        // Infinitesimally free translations on R³ with k = 2.
        let action = LinearAction::<f64>::translations(
            3,
            vec![
                DVector::from_vec(vec![1.0, 0.0, 0.0]),
                DVector::from_vec(vec![0.0, 1.0, 0.0]),
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let point = sample_covelocity_point(3, 2, false, &mut rng);
            let s = action.covelocity_snapshot(&point, &tol()).unwrap();
            let report = check_reduction_conditions(&s, &tol()).unwrap();
            assert!(report.conditions_hold());
            assert!(report.routes_agree);
        }
    }

    #[test]
    fn diagonal_product_dimensions() {
        // The counterexample configuration: level tangent is 6-dimensional,
        // the G_μ orbit is a line, and the characteristic intersection is a
        // plane, so the double-complement claim fails with dims 1 vs 2.
        let s = product_model_snapshot::<f64>(ProductConfig::Diagonal, &tol()).unwrap();
        let level = level_set_tangent(&s, &tol()).unwrap();
        assert_eq!(level.dim(), 6);
        let orbit = orbit_tangent(&s, s.isotropy_joint(), &tol()).unwrap();
        assert_eq!(orbit.dim(), 1);

        let lemma = check_momentum_lemma(&s, &tol()).unwrap();
        assert!(lemma.passed());

        let claim = check_double_complement_claim(&s, &tol()).unwrap();
        assert!(!claim.holds());
        assert_eq!(claim.claim.lhs_dim, 1);
        assert_eq!(claim.claim.rhs_dim, 2);
        // Containment still holds.
        assert!(claim.containment_residual < 1e-12);

        // Condition two fails; the reduced family on the 5-dimensional
        // quotient is degenerate.
        let report = check_reduction_conditions(&s, &tol()).unwrap();
        assert!(report.condition_one.iter().all(|c| c.equal));
        assert!(!report.condition_two.equal);
        assert!(report.routes_agree);
        let reduced = reduced_forms(&s, &tol()).unwrap();
        assert_eq!(reduced.dim(), 5);
        assert!(!reduced.diagnostics.polysymplectic);
    }

    #[test]
    fn product_forms_are_polysymplectic_in_both_configs() {
        for config in [ProductConfig::Diagonal, ProductConfig::ProductGroup] {
            let s = product_model_snapshot::<f64>(config, &tol()).unwrap();
            assert!(verify_polysymplectic(s.forms(), &tol()).unwrap());
        }
    }

    #[test]
    fn orbit_sits_inside_characteristic_inside_level() {
        // T_x(G_μ·x) ⊆ ∩_A ker (i*ω^A)(x) ⊆ T_x J⁻¹(μ) on every model,
        // whether or not the reduction conditions hold.
        use crate::reduction::characteristic_distribution;
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut snapshots = vec![
            product_model_snapshot::<f64>(ProductConfig::Diagonal, &tol()).unwrap(),
            product_model_snapshot::<f64>(ProductConfig::ProductGroup, &tol()).unwrap(),
        ];
        let algebra = LieAlgebraData::<f64>::so3();
        let mu = vec![
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
        ];
        let point = sample_group_level_point(&mu, &mut rng).unwrap();
        snapshots.push(group_covelocity_snapshot(&algebra, &point, &tol()).unwrap());
        for s in &snapshots {
            let level = level_set_tangent(s, &tol()).unwrap();
            let orbit = orbit_tangent(s, s.isotropy_joint(), &tol()).unwrap();
            let (characteristic, _) = characteristic_distribution(s, &tol()).unwrap();
            assert!(characteristic.contains(&orbit, &tol()).unwrap());
            assert!(level.contains(&characteristic, &tol()).unwrap());
        }
    }

    #[test]
    fn product_group_reduces_cleanly() {
        let s = product_model_snapshot::<f64>(ProductConfig::ProductGroup, &tol()).unwrap();
        let claim = check_double_complement_claim(&s, &tol()).unwrap();
        assert!(claim.holds());
        let report = check_reduction_conditions(&s, &tol()).unwrap();
        assert!(report.conditions_hold());
        assert!(report.routes_agree);
        let reduced = reduced_forms(&s, &tol()).unwrap();
        assert_eq!(reduced.dim(), 4);
        assert!(reduced.diagnostics.polysymplectic);
        assert!(reduced.diagnostics.well_defined_residual < 1e-12);
        assert!(reduced.diagnostics.pullback_residual < 1e-12);
    }

    #[test]
    fn k1_cotangent_lift_satisfies_double_complement_claim() {
        // Classical symplectic case: one factor, one form.
        let action = LinearAction::<f64>::translations(
            2,
            vec![DVector::from_vec(vec![1.0, 0.0])],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let point = sample_covelocity_point(2, 1, false, &mut rng);
        let s = action.covelocity_snapshot(&point, &tol()).unwrap();
        let claim = check_double_complement_claim(&s, &tol()).unwrap();
        assert!(claim.holds());
    }

    #[test]
    fn group_model_momentum_invariant_and_equivariance() {
        let algebra = LieAlgebraData::<f64>::so3();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mu = vec![dv(&rv3(&mut rng)), dv(&rv3(&mut rng))];
            let point = sample_group_level_point(&mu, &mut rng).unwrap();
            // Constructor validates Gᵀ Ω = TJ.
            let s = group_covelocity_snapshot(&algebra, &point, &tol()).unwrap();
            assert_eq!(s.n(), 9);

            // J(point) recovers μ.
            let j = group_momentum(&point).unwrap();
            for (ja, mua) in j.iter().zip(&mu) {
                assert!((ja - mua).abs().max() < 1e-12);
            }

            // Equivariance: J(h·(g, ν)) = Coad_h J(g, ν), acting h on the
            // left leaves ν untouched.
            let h = exp_so3(&rv3(&mut rng));
            let GroupElement::So3(g) = &point.g else { unreachable!() };
            let moved = GroupModelPoint {
                g: GroupElement::So3(h.compose(g)),
                nus: point.nus.clone(),
            };
            let j_moved = group_momentum(&moved).unwrap();
            let j_expected = coad_k(&GroupElement::So3(h), &j).unwrap();
            for (a, b) in j_moved.iter().zip(&j_expected) {
                assert!((a - b).abs().max() < 1e-12);
            }
        }
    }

    #[test]
    fn group_model_jacobian_matches_finite_differences() {
        // The closed-form TJ against central differences through the
        // parametrization (g exp(tη), ν + tβ).
        let algebra = LieAlgebraData::<f64>::so3();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mu = vec![dv(&rv3(&mut rng)), dv(&rv3(&mut rng))];
        let point = sample_group_level_point(&mu, &mut rng).unwrap();
        let s = group_covelocity_snapshot(&algebra, &point, &tol()).unwrap();
        let GroupElement::So3(g) = &point.g else { unreachable!() };

        let h = 1e-6;
        for slot in 0..2 {
            let jac = s.momentum_jacobian(slot);
            for coord in 0..9 {
                let eval = |delta: f64| -> DVector<f64> {
                    let mut nus = point.nus.clone();
                    let g_moved = if coord < 3 {
                        let mut eta = Vector3::zeros();
                        eta[coord] = delta;
                        g.compose(&exp_so3(&eta))
                    } else {
                        let slot_idx = (coord - 3) / 3;
                        nus[slot_idx][(coord - 3) % 3] += delta;
                        g.clone()
                    };
                    let moved = GroupModelPoint {
                        g: GroupElement::So3(g_moved),
                        nus,
                    };
                    group_momentum(&moved).unwrap()[slot].clone()
                };
                let fd = (eval(h) - eval(-h)) / (2.0 * h);
                for row in 0..3 {
                    assert!(
                        (jac[(row, coord)] - fd[row]).abs() < 1e-8,
                        "slot {slot} row {row} coord {coord}"
                    );
                }
            }
        }
    }

    #[test]
    fn group_model_level_set_is_group_dimensional() {
        let algebra = LieAlgebraData::<f64>::so3();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mu = vec![
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
        ];
        let point = sample_group_level_point(&mu, &mut rng).unwrap();
        let s = group_covelocity_snapshot(&algebra, &point, &tol()).unwrap();
        let level = level_set_tangent(&s, &tol()).unwrap();
        assert_eq!(level.dim(), 3);
        // Left translations are free: the full orbit has the group dimension.
        let full_orbit = orbit_tangent(&s, &Subspace::full(3), &tol()).unwrap();
        assert_eq!(full_orbit.dim(), 3);
        assert!(check_momentum_lemma(&s, &tol()).unwrap().passed());
        // Independent pair: trivial joint isotropy, quotient dim 3.
        assert!(s.isotropy_joint().is_zero());
        let report = check_reduction_conditions(&s, &tol()).unwrap();
        assert!(report.conditions_hold());
        let reduced = reduced_forms(&s, &tol()).unwrap();
        assert_eq!(reduced.dim(), 3);
        assert!(reduced.diagnostics.polysymplectic);
    }

    #[test]
    fn step1_dimension_counts() {
        use crate::reduction::step1_quotient;
        // k = 1 cotangent lift of a free translation on R²: the classical
        // reduced space has dim = 2·dim Q - 2·dim G = 2.
        let action = LinearAction::<f64>::translations(
            2,
            vec![DVector::from_vec(vec![1.0, 0.0])],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let point = sample_covelocity_point(2, 1, false, &mut rng);
        let s = action.covelocity_snapshot(&point, &tol()).unwrap();
        let v = step1_quotient(&s, 0, &tol()).unwrap();
        assert_eq!(v.dim(), 2);
        assert!(v.generator_orthogonal_identity);

        // Product-group model: V_A is the factor-A reduced space, dim 2.
        let s = product_model_snapshot::<f64>(ProductConfig::ProductGroup, &tol()).unwrap();
        for a in 0..2 {
            let v = step1_quotient(&s, a, &tol()).unwrap();
            assert_eq!(v.dim(), 2);
            assert_eq!(v.dim_ker_momentum, 7);
            assert_eq!(v.dim_ker_form, 4);
            assert_eq!(v.dim_isotropy_image, 1);
        }
    }

    #[test]
    fn group_model_dependent_pair_reduces_to_sphere() {
        let algebra = LieAlgebraData::<f64>::so3();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mu = vec![
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
            DVector::from_vec(vec![0.0, 0.0, 2.0]),
        ];
        let point = sample_group_level_point(&mu, &mut rng).unwrap();
        let s = group_covelocity_snapshot(&algebra, &point, &tol()).unwrap();
        // g_μ is the rotation axis through μ: one-dimensional.
        assert_eq!(s.isotropy_joint().dim(), 1);
        let reduced = reduced_forms(&s, &tol()).unwrap();
        assert_eq!(reduced.dim(), 2);
        assert!(reduced.diagnostics.polysymplectic);
        assert!(reduced.diagnostics.conditions.conditions_hold());
    }

    #[test]
    fn orbit_forms_k1_sphere() {
        // ν = (0, 0, r): tangent spanned by the e₁/e₂ generators and the
        // form matrix in the generator basis is r times the area matrix.
        let algebra = LieAlgebraData::<f64>::so3();
        let r = 1.7;
        let nus = vec![DVector::from_vec(vec![0.0, 0.0, r])];
        let orbit = k_coadjoint_orbit_forms(&algebra, &nus, &tol()).unwrap();
        assert_eq!(orbit.tangent.dim(), 2);
        assert!(orbit.well_defined_residual < 1e-12);
        let omega = &orbit.forms[0];
        // Nondegenerate 2×2 skew with |entry| giving the symplectic scale.
        assert!(omega[(0, 1)].abs() > 0.0);
        assert!((omega[(0, 1)] + omega[(1, 0)]).abs() < 1e-14);

        // Direct generator pairing: ω(ξ_gen, η_gen) = -ν·(ξ×η) for ξ = e₁,
        // η = e₂ gives -r.
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let g1 = algebra.coadjoint_generator(&e1, &nus).unwrap()[0].clone();
        let g2 = algebra.coadjoint_generator(&e2, &nus).unwrap()[0].clone();
        let c1 = orbit.tangent.coords(&g1);
        let c2 = orbit.tangent.coords(&g2);
        let value = (c1.transpose() * omega * c2)[(0, 0)];
        assert!((value - (-r)).abs() < 1e-12);
    }

    #[test]
    fn orbit_forms_zero_point() {
        let algebra = LieAlgebraData::<f64>::so3();
        let nus = vec![DVector::zeros(3), DVector::zeros(3)];
        let orbit = k_coadjoint_orbit_forms(&algebra, &nus, &tol()).unwrap();
        assert!(orbit.tangent.is_zero());
    }

    #[test]
    fn orbit_forms_independent_pair_polysymplectic() {
        let algebra = LieAlgebraData::<f64>::so3();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let nus = vec![dv(&rv3(&mut rng)), dv(&rv3(&mut rng))];
            if nus[0].cross(&nus[1]).norm() < 0.1 {
                continue;
            }
            let orbit = k_coadjoint_orbit_forms(&algebra, &nus, &tol()).unwrap();
            assert_eq!(orbit.tangent.dim(), 3);
            let family = FormFamily::new(orbit.forms.clone()).unwrap();
            assert!(verify_polysymplectic(&family, &tol()).unwrap());
        }
    }

    #[test]
    fn kks_classification_cases() {
        let z = Vector3::<f64>::zeros();
        assert!(matches!(classify_kks_so3(&z, &z), KksSo3::PointOrbit));

        let p1 = Vector3::<f64>::new(0.0, 0.0, 1.0);
        let p2 = Vector3::<f64>::new(0.0, 0.0, 2.0);
        match classify_kks_so3(&p1, &p2) {
            KksSo3::Sphere {
                lambda0,
                radius,
                swapped,
            } => {
                assert!((lambda0 - 2.0).abs() < 1e-14);
                assert!((radius - 1.0).abs() < 1e-14);
                assert!(!swapped);
            }
            other => panic!("expected sphere, got {other:?}"),
        }

        // Swapped degenerate pair.
        match classify_kks_so3(&z, &p2) {
            KksSo3::Sphere { swapped, .. } => assert!(swapped),
            other => panic!("expected swapped sphere, got {other:?}"),
        }

        let q1 = Vector3::new(1.0, 2.0, 3.0);
        let q2 = Vector3::new(0.0, 1.0, 0.0);
        assert!(matches!(
            classify_kks_so3(&q1, &q2),
            KksSo3::LeftInvariant { .. }
        ));
    }

    #[test]
    fn kks_sphere_form_values() {
        // π⁰₁ = e₃, λ₀ = 2; at π = e₁ with u = e₂, v = e₃:
        // ω¹ = -π·(u×v) = -1, ω² = -2.
        let case = classify_kks_so3(
            &Vector3::<f64>::new(0.0, 0.0, 1.0),
            &Vector3::<f64>::new(0.0, 0.0, 2.0),
        );
        let pi = Vector3::new(1.0, 0.0, 0.0);
        let u = Vector3::new(0.0, 1.0, 0.0);
        let v = Vector3::new(0.0, 0.0, 1.0);
        assert!((case.sphere_form(0, &pi, &u, &v).unwrap() + 1.0).abs() < 1e-15);
        assert!((case.sphere_form(1, &pi, &u, &v).unwrap() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn kks_sphere_form_agrees_with_orbit_pairing_at_any_radius() {
        // At ν = (π, λ₀π) the orbit tangent is {(u, λ₀u) : u ⟂ π} and the
        // machinery value on lifted tangents must match the evaluator.
        let algebra = LieAlgebraData::<f64>::so3();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for &r in &[1.0, 0.6, 2.5] {
            let seed1 = Vector3::new(0.0, 0.0, r);
            let lambda0 = 2.0;
            let case = classify_kks_so3(&seed1, &(seed1 * lambda0));
            for _ in 0..10 {
                let g = exp_so3(&rv3(&mut rng));
                let pi = g.matrix() * seed1;
                let project = |w: Vector3<f64>| w - pi * (pi.dot(&w) / pi.norm_squared());
                let u = project(rv3(&mut rng));
                let v = project(rv3(&mut rng));

                let nus = vec![dv(&pi), dv(&(pi * lambda0))];
                let orbit = k_coadjoint_orbit_forms(&algebra, &nus, &tol()).unwrap();
                let lift = |w: &Vector3<f64>| {
                    let mut t = DVector::zeros(6);
                    t.rows_mut(0, 3).copy_from(&dv(w));
                    t.rows_mut(3, 3).copy_from(&dv(&(w * lambda0)));
                    orbit.tangent.coords(&t)
                };
                let (cu, cv) = (lift(&u), lift(&v));
                for a in 0..2 {
                    let via_orbit = (cu.transpose() * &orbit.forms[a] * &cv)[(0, 0)];
                    let via_case = case.sphere_form(a, &pi, &u, &v).unwrap();
                    assert!(
                        (via_orbit - via_case).abs() < 1e-12,
                        "radius {r}, slot {a}: {via_orbit} vs {via_case}"
                    );
                }
            }
        }
    }

    #[test]
    fn kks_left_invariant_identity_values() {
        // π⁰₁ = (1,2,3), π⁰₂ = (0,1,0): the identity values are read off
        // -π⁰_A·(ξ×η) on the hat basis.
        let case = classify_kks_so3(
            &Vector3::<f64>::new(1.0, 2.0, 3.0),
            &Vector3::<f64>::new(0.0, 1.0, 0.0),
        );
        let e1 = Vector3::new(1.0, 0.0, 0.0);
        let e2 = Vector3::new(0.0, 1.0, 0.0);
        let e3 = Vector3::new(0.0, 0.0, 1.0);
        assert!((case.left_invariant_form(0, &e1, &e2).unwrap() + 3.0).abs() < 1e-15);
        assert!((case.left_invariant_form(0, &e2, &e3).unwrap() + 1.0).abs() < 1e-15);
        assert!((case.left_invariant_form(0, &e3, &e1).unwrap() + 2.0).abs() < 1e-15);
        assert!(case.left_invariant_form(1, &e1, &e2).unwrap().abs() < 1e-15);
        assert!(case.left_invariant_form(1, &e2, &e3).unwrap().abs() < 1e-15);
        assert!((case.left_invariant_form(1, &e3, &e1).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn orbit_membership_residual_detects_outliers() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let seed = vec![dv(&rv3(&mut rng)), dv(&rv3(&mut rng))];
        let g = GroupElement::So3(exp_so3(&rv3(&mut rng)));
        let moved = coad_k(&g, &seed).unwrap();
        assert!(orbit_membership_residual(&seed, &moved) < 1e-13);
        let mut off = moved.clone();
        off[0][0] += 0.1;
        assert!(orbit_membership_residual(&seed, &off) > 1e-3);
    }

    #[test]
    fn group_model_identity_point_has_canonical_pairing() {
        // g = I, ν = 0: the bracket block vanishes and only the pairing
        // blocks survive.
        let algebra = LieAlgebraData::<f64>::so3();
        let point = GroupModelPoint {
            g: GroupElement::So3(GroupElementSO3::identity()),
            nus: vec![DVector::zeros(3), DVector::zeros(3)],
        };
        let s = group_covelocity_snapshot(&algebra, &point, &tol()).unwrap();
        let omega = s.forms().omega(0);
        // g-g block zero.
        assert!(omega.view((0, 0), (3, 3)).abs().max() == 0.0);
        // Pairing block identity.
        assert!(
            (omega.view((0, 3), (3, 3)) - DMatrix::<f64>::identity(3, 3))
                .abs()
                .max()
                == 0.0
        );
    }
}
