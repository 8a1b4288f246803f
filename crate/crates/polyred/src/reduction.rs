//! Pointwise reduction checks.
//!
//! Everything here operates on a [`GSpaceSnapshot`]: the complete linear data
//! of a Hamiltonian polysymplectic G-space at one point `x` of a momentum
//! level set `J⁻¹(μ)`. The checks cover, in order:
//!
//! * the orbit-momentum lemma: `T_x(G_μ·x) = T_x(G·x) ∩ T_x J⁻¹(μ)` and
//!   `T_x J⁻¹(μ) = T_x^{⊥,k}(G·x)`;
//! * the incorrect double-complement claim
//!   `T_x(G_μ·x) = T_x^{⊥,k}(G·x) ∩ T_x^{⊥,k}(J⁻¹(μ))`, which holds for
//!   `k = 1` but fails in general — the diagonal product model exhibits a
//!   strict containment;
//! * the two conditions under which the quotient inherits a polysymplectic
//!   structure, each evaluated twice: directly as subspace identities, and
//!   through the rank/kernel behaviour of the comparison maps `π̃^A` into the
//!   per-form symplectic quotients `V_A`;
//! * the construction of the reduced form family on an orthonormal
//!   representative of `T_x J⁻¹(μ) / T_x(G_μ·x)`.
//!
//! A failed condition is a structured diagnostic, not an error: the reduction
//! still proceeds and exhibits the resulting degeneracy.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::polyspace::{self, FormFamily};
use crate::subspace::{Subspace, Tolerance};
use crate::Real;

/// Slack for the snapshot consistency invariants, relative to the data scale.
const SNAPSHOT_TOL: f64 = 1e-9;

/// All pointwise data of a Hamiltonian polysymplectic G-space at a point
/// `x ∈ J⁻¹(μ)`:
///
/// * `forms` — the `k` skew matrices `ω^A(x)` on `T_xM ≅ R^n`;
/// * `momentum_jacobians[A]` — the `d × n` matrix of `T_xJ^A`, row `a` being
///   the differential of `x ↦ J^A(x)(e_a)`;
/// * `generators` — the `n × d` matrix whose column `a` is the infinitesimal
///   generator `(e_a)_M(x)`;
/// * `isotropy_components[A]` — the subalgebra `g_{μ_A} ⊆ R^d` at
///   `μ_A = J^A(x)`.
///
/// Construction validates the momentum compatibility `Gᵀ Ω^A = Jac^A` (the
/// matrix form of `i_{ξ_M} ω^A = dĴ^A_ξ`) and that isotropy generators are
/// tangent to the level set (`Jac^A · G · g_{μ_A} = 0`, the pointwise trace
/// of equivariance). The joint isotropy `g_μ = ∩_A g_{μ_A}` is computed here.
#[derive(Clone, Debug)]
pub struct GSpaceSnapshot<T: Real> {
    forms: FormFamily<T>,
    momentum_jacobians: Vec<DMatrix<T>>,
    generators: DMatrix<T>,
    isotropy_components: Vec<Subspace<T>>,
    isotropy_joint: Subspace<T>,
}

impl<T: Real> GSpaceSnapshot<T> {
    pub fn new(
        forms: FormFamily<T>,
        momentum_jacobians: Vec<DMatrix<T>>,
        generators: DMatrix<T>,
        isotropy_components: Vec<Subspace<T>>,
        tol: &Tolerance<T>,
    ) -> Result<Self> {
        let n = forms.n();
        let k = forms.k();
        if momentum_jacobians.len() != k || isotropy_components.len() != k {
            return Err(Error::InconsistentSnapshot(format!(
                "need {k} momentum jacobians and isotropy subalgebras"
            )));
        }
        if generators.nrows() != n {
            return Err(Error::InconsistentSnapshot(
                "generator matrix must have n rows".into(),
            ));
        }
        let d = generators.ncols();
        for jac in &momentum_jacobians {
            if jac.nrows() != d || jac.ncols() != n {
                return Err(Error::InconsistentSnapshot(
                    "momentum jacobians must be d × n".into(),
                ));
            }
        }
        for iso in &isotropy_components {
            if iso.ambient_dim() != d {
                return Err(Error::InconsistentSnapshot(
                    "isotropy subalgebras live in R^d".into(),
                ));
            }
        }
        if generators.iter().any(|x| !x.is_finite())
            || momentum_jacobians
                .iter()
                .any(|j| j.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::NonFiniteInput);
        }

        let scale = forms
            .scale()
            .max(generators.abs().max())
            .max(
                momentum_jacobians
                    .iter()
                    .map(|j| j.abs().max())
                    .fold(T::zero(), |a, b| a.max(b)),
            )
            .max(T::one());
        let slack = T::of(SNAPSHOT_TOL) * scale;

        for (a, jac) in momentum_jacobians.iter().enumerate() {
            let deviation = (generators.transpose() * forms.omega(a) - jac).abs().max();
            if deviation > slack {
                return Err(Error::InconsistentSnapshot(format!(
                    "momentum compatibility Gᵀ Ω^{a} = TJ^{a} fails by {:.3e}",
                    deviation.as_f64()
                )));
            }
            let iso = &isotropy_components[a];
            if !iso.is_zero() {
                let deviation = (jac * (&generators * iso.basis())).abs().max();
                if deviation > slack {
                    return Err(Error::InconsistentSnapshot(format!(
                        "isotropy generators of component {a} are not tangent \
                         to the level set (residual {:.3e})",
                        deviation.as_f64()
                    )));
                }
            }
        }

        let mut isotropy_joint = Subspace::full(d);
        for iso in &isotropy_components {
            isotropy_joint = isotropy_joint.intersect(iso, tol)?;
        }

        Ok(Self {
            forms,
            momentum_jacobians,
            generators,
            isotropy_components,
            isotropy_joint,
        })
    }

    pub fn n(&self) -> usize {
        self.forms.n()
    }

    pub fn k(&self) -> usize {
        self.forms.k()
    }

    pub fn algebra_dim(&self) -> usize {
        self.generators.ncols()
    }

    pub fn forms(&self) -> &FormFamily<T> {
        &self.forms
    }

    pub fn momentum_jacobian(&self, a: usize) -> &DMatrix<T> {
        &self.momentum_jacobians[a]
    }

    pub fn generators(&self) -> &DMatrix<T> {
        &self.generators
    }

    pub fn isotropy_component(&self, a: usize) -> &Subspace<T> {
        &self.isotropy_components[a]
    }

    /// `g_μ = ∩_A g_{μ_A}`.
    pub fn isotropy_joint(&self) -> &Subspace<T> {
        &self.isotropy_joint
    }

    fn jacobian_scale(&self) -> T {
        self.momentum_jacobians
            .iter()
            .map(|j| j.abs().max())
            .fold(T::zero(), |a, b| a.max(b))
            .max(T::one())
    }

    fn generator_scale(&self) -> T {
        self.generators.abs().max().max(T::one())
    }

    /// `ker T_xJ^A` for a single component.
    pub fn momentum_kernel(&self, a: usize, tol: &Tolerance<T>) -> Result<Subspace<T>> {
        Subspace::kernel_scaled(&self.momentum_jacobians[a], self.jacobian_scale(), tol)
    }
}

/// `T_x J⁻¹(μ) = ∩_A ker T_xJ^A`, computed as one stacked kernel.
pub fn level_set_tangent<T: Real>(
    s: &GSpaceSnapshot<T>,
    tol: &Tolerance<T>,
) -> Result<Subspace<T>> {
    let (n, k, d) = (s.n(), s.k(), s.algebra_dim());
    let mut stacked = DMatrix::zeros(k * d, n);
    for (a, jac) in s.momentum_jacobians.iter().enumerate() {
        stacked.view_mut((a * d, 0), (d, n)).copy_from(jac);
    }
    Subspace::kernel_scaled(&stacked, s.jacobian_scale(), tol)
}

/// `T_x(H·x)` for a subalgebra `h ⊆ g`: the span of the generators applied to
/// a basis of `h`.
pub fn orbit_tangent<T: Real>(
    s: &GSpaceSnapshot<T>,
    subalgebra: &Subspace<T>,
    tol: &Tolerance<T>,
) -> Result<Subspace<T>> {
    if subalgebra.ambient_dim() != s.algebra_dim() {
        return Err(Error::AmbientMismatch {
            left: subalgebra.ambient_dim(),
            right: s.algebra_dim(),
        });
    }
    if subalgebra.is_zero() {
        return Ok(Subspace::zero(s.n()));
    }
    Subspace::span_scaled(
        &(&s.generators * subalgebra.basis()),
        s.generator_scale(),
        tol,
    )
}

/// Outcome of one subspace identity, with dimensions and the symmetric
/// principal-angle residual.
#[derive(Clone, Debug)]
pub struct SubspaceComparison<T: Real> {
    pub name: String,
    pub lhs_dim: usize,
    pub rhs_dim: usize,
    pub residual: T,
    pub equal: bool,
}

impl<T: Real> SubspaceComparison<T> {
    fn of(
        name: impl Into<String>,
        lhs: &Subspace<T>,
        rhs: &Subspace<T>,
        tol: &Tolerance<T>,
    ) -> Self {
        let residual = lhs.equality_residual(rhs);
        Self {
            name: name.into(),
            lhs_dim: lhs.dim(),
            rhs_dim: rhs.dim(),
            residual,
            equal: lhs.dim() == rhs.dim() && residual <= tol.eq_abs,
        }
    }
}

/// Report of the orbit-momentum lemma.
#[derive(Clone, Debug)]
pub struct MomentumLemmaReport<T: Real> {
    /// `T_x(G_μ·x) = T_x(G·x) ∩ T_x J⁻¹(μ)`.
    pub orbit_intersection: SubspaceComparison<T>,
    /// `T_x J⁻¹(μ) = T_x^{⊥,k}(G·x)`.
    pub level_is_k_orthogonal: SubspaceComparison<T>,
}

impl<T: Real> MomentumLemmaReport<T> {
    pub fn passed(&self) -> bool {
        self.orbit_intersection.equal && self.level_is_k_orthogonal.equal
    }
}

/// Verifies both items of the orbit-momentum lemma as subspace equalities.
pub fn check_momentum_lemma<T: Real>(
    s: &GSpaceSnapshot<T>,
    tol: &Tolerance<T>,
) -> Result<MomentumLemmaReport<T>> {
    let level = level_set_tangent(s, tol)?;
    let full_orbit = orbit_tangent(s, &Subspace::full(s.algebra_dim()), tol)?;
    let mu_orbit = orbit_tangent(s, s.isotropy_joint(), tol)?;

    let item1 = SubspaceComparison::of(
        "momentum_lemma_orbit_intersection",
        &mu_orbit,
        &full_orbit.intersect(&level, tol)?,
        tol,
    );
    let item2 = SubspaceComparison::of(
        "momentum_lemma_level_is_k_orthogonal",
        &level,
        &polyspace::k_orthogonal(&full_orbit, s.forms(), tol)?,
        tol,
    );
    Ok(MomentumLemmaReport {
        orbit_intersection: item1,
        level_is_k_orthogonal: item2,
    })
}

/// Report of the double-complement claim.
#[derive(Clone, Debug)]
pub struct DoubleComplementClaimReport<T: Real> {
    /// `T_x(G_μ·x)` against `T_x^{⊥,k}(G·x) ∩ T_x^{⊥,k}(J⁻¹(μ))`.
    pub claim: SubspaceComparison<T>,
    /// The left side is always contained in the right side.
    pub containment_residual: T,
}

impl<T: Real> DoubleComplementClaimReport<T> {
    pub fn holds(&self) -> bool {
        self.claim.equal
    }
}

/// Evaluates the claim `T_x(G_μ·x) = T_x^{⊥,k}(G·x) ∩ T_x^{⊥,k}(J⁻¹(μ))`.
///
/// For `k = 1` (symplectic) snapshots this is a theorem; for `k ≥ 2` only the
/// containment `⊆` survives, and on the diagonal product model the dimensions
/// differ, which is exactly why the naive quotient fails to inherit a
/// polysymplectic structure.
pub fn check_double_complement_claim<T: Real>(
    s: &GSpaceSnapshot<T>,
    tol: &Tolerance<T>,
) -> Result<DoubleComplementClaimReport<T>> {
    let level = level_set_tangent(s, tol)?;
    let full_orbit = orbit_tangent(s, &Subspace::full(s.algebra_dim()), tol)?;
    let mu_orbit = orbit_tangent(s, s.isotropy_joint(), tol)?;

    let rhs = polyspace::k_orthogonal(&full_orbit, s.forms(), tol)?
        .intersect(&polyspace::k_orthogonal(&level, s.forms(), tol)?, tol)?;
    Ok(DoubleComplementClaimReport {
        containment_residual: rhs.containment_residual(&mu_orbit),
        claim: SubspaceComparison::of("double_complement_claim", &mu_orbit, &rhs, tol),
    })
}

/// The characteristic distribution `∩_A ker (i*ω^A)(x)` of the level set,
/// computed two independent ways: from the restricted forms directly, and as
/// `T_xS ∩ T_x^{⊥,k}S`. Both are returned for cross-checking.
pub fn characteristic_distribution<T: Real>(
    s: &GSpaceSnapshot<T>,
    tol: &Tolerance<T>,
) -> Result<(Subspace<T>, Subspace<T>)> {
    let level = level_set_tangent(s, tol)?;
    if level.is_zero() {
        return Ok((Subspace::zero(s.n()), Subspace::zero(s.n())));
    }
    // Route 1: common kernel of the pulled-back forms, lifted back.
    let restricted: Result<Vec<DMatrix<T>>> = s
        .forms()
        .omegas()
        .iter()
        .map(|o| polyspace::restrict_form(o, &level))
        .collect();
    let restricted = FormFamily::new(restricted?)?;
    let common = restricted.common_kernel(tol)?;
    let lifted = if common.is_zero() {
        Subspace::zero(s.n())
    } else {
        Subspace::span_scaled(&(level.basis() * common.basis()), T::one(), tol)?
    };
    // Route 2: intersection with the k-orthogonal complement.
    let ortho = level.intersect(&polyspace::k_orthogonal(&level, s.forms(), tol)?, tol)?;
    Ok((lifted, ortho))
}

/// Report of the two reduction conditions, each evaluated along two routes.
#[derive(Clone, Debug)]
pub struct ConditionsReport<T: Real> {
    /// Per-A identity `ker T_xJ^A = T_xJ⁻¹(μ) + ker ω^A(x) + T_x(G_{μ_A}·x)`.
    pub condition_one: Vec<SubspaceComparison<T>>,
    /// `T_x(G_μ·x) = ∩_B (ker ω^B(x) + T_x(G_{μ_B}·x)) ∩ T_xJ⁻¹(μ)`.
    pub condition_two: SubspaceComparison<T>,
    /// Per-A surjectivity of the comparison map `π̃^A` onto `V_A`.
    pub epimorphism: Vec<bool>,
    /// Dimension of `∩_A ker π̃^A` on the quotient representative.
    pub kernel_intersection_dim: usize,
    /// Whether the subspace route and the map route agree on every item.
    pub routes_agree: bool,
}

impl<T: Real> ConditionsReport<T> {
    /// Both conditions hold (subspace route).
    pub fn conditions_hold(&self) -> bool {
        self.condition_one.iter().all(|c| c.equal) && self.condition_two.equal
    }
}

/// Evaluates the reduction conditions.
///
/// Route one states them as subspace identities. Route two builds, for each
/// `A`, the linear map `π̃^A` from the quotient representative of
/// `T_xJ⁻¹(μ)/T_x(G_μ·x)` into the symplectic quotient `V_A` of
/// [`step1_quotient`], and checks that it is an epimorphism and that the
/// kernels intersect trivially. The two routes are equivalent; the report
/// records whether they agreed numerically.
pub fn check_reduction_conditions<T: Real>(
    s: &GSpaceSnapshot<T>,
    tol: &Tolerance<T>,
) -> Result<ConditionsReport<T>> {
    let level = level_set_tangent(s, tol)?;
    let mu_orbit = orbit_tangent(s, s.isotropy_joint(), tol)?;
    let form_scale = s.forms().scale();

    let mut condition_one = Vec::with_capacity(s.k());
    let mut meet: Option<Subspace<T>> = None;
    for a in 0..s.k() {
        let ker_momentum = s.momentum_kernel(a, tol)?;
        let ker_form = Subspace::kernel_scaled(s.forms().omega(a), form_scale, tol)?;
        let orbit_a = orbit_tangent(s, s.isotropy_component(a), tol)?;
        let rhs = level.sum(&ker_form, tol)?.sum(&orbit_a, tol)?;
        condition_one.push(SubspaceComparison::of(
            format!("MW_cond_1[A={a}]"),
            &ker_momentum,
            &rhs,
            tol,
        ));
        let summand = ker_form.sum(&orbit_a, tol)?;
        meet = Some(match meet {
            None => summand,
            Some(m) => m.intersect(&summand, tol)?,
        });
    }
    let meet = meet.expect("k >= 1").intersect(&level, tol)?;
    let condition_two =
        SubspaceComparison::of("MW_cond_2", &mu_orbit, &meet, tol);

    // Map route: surjectivity and kernels of the comparison maps.
    let quotient_rep = mu_orbit.complement_in(&level, tol)?;
    let mut epimorphism = Vec::with_capacity(s.k());
    let mut kernel_meet = Subspace::full(quotient_rep.dim().max(1));
    let quotient_is_zero = quotient_rep.is_zero();
    for a in 0..s.k() {
        let step1 = step1_quotient(s, a, tol)?;
        if quotient_is_zero {
            // The zero space surjects only onto a zero-dimensional V_A.
            epimorphism.push(step1.dim() == 0);
            continue;
        }
        if step1.dim() == 0 {
            // Everything maps onto the zero space; the kernel is all of the
            // quotient representative.
            epimorphism.push(true);
            continue;
        }
        let map = &step1.map_from_ambient * quotient_rep.basis();
        let rank = Subspace::span_scaled(&map, T::one(), tol)?.dim();
        epimorphism.push(rank == step1.dim());
        let kernel = Subspace::kernel_scaled(&map, T::one(), tol)?;
        kernel_meet = kernel_meet.intersect(&kernel, tol)?;
    }
    let kernel_intersection_dim = if quotient_is_zero { 0 } else { kernel_meet.dim() };

    let routes_agree = condition_one
        .iter()
        .zip(&epimorphism)
        .all(|(c, &e)| c.equal == e)
        && (condition_two.equal == (kernel_intersection_dim == 0));

    Ok(ConditionsReport {
        condition_one,
        condition_two,
        epimorphism,
        kernel_intersection_dim,
        routes_agree,
    })
}

/// The symplectic quotient `V_A` of one momentum component:
/// `(ker T_xJ^A / ker ω^A(x)) / {[ξ_M(x)] : ξ ∈ g_{μ_A}}` with its induced
/// nondegenerate form.
#[derive(Clone, Debug)]
pub struct Step1Quotient<T: Real> {
    /// Induced form on `V_A`, in the orthonormal representative basis.
    pub form: DMatrix<T>,
    /// Coordinates map `dim V_A × n`; meaningful on `ker T_xJ^A`.
    pub map_from_ambient: DMatrix<T>,
    pub dim_ker_momentum: usize,
    pub dim_ker_form: usize,
    /// Dimension of `{[ξ_M(x)] : ξ ∈ g_{μ_A}}` inside the first quotient.
    pub dim_isotropy_image: usize,
    /// Whether `ker T_xJ^A / ker ω^A` equals the symplectic orthogonal of
    /// `{[ξ_M] : ξ ∈ g}` inside `T_xM / ker ω^A(x)`.
    pub generator_orthogonal_identity: bool,
}

impl<T: Real> Step1Quotient<T> {
    pub fn dim(&self) -> usize {
        self.form.nrows()
    }
}

/// Builds `V_A` and verifies it is symplectic.
///
/// Quotients are represented by orthonormal complements: the class of
/// `v ∈ ker T_xJ^A` has coordinates `Q₁ᵀ v` where `Q₁` is the complement of
/// `ker ω^A` inside `ker T_xJ^A`, and the second quotient projects those
/// coordinates off the image of the `g_{μ_A}` generators. The induced form is
/// well defined because that image is exactly the kernel of the restricted
/// form, and the result must be nondegenerate; a degenerate outcome means the
/// snapshot data were inconsistent beyond tolerance.
pub fn step1_quotient<T: Real>(
    s: &GSpaceSnapshot<T>,
    a: usize,
    tol: &Tolerance<T>,
) -> Result<Step1Quotient<T>> {
    let form_scale = s.forms().scale();
    let ker_momentum = s.momentum_kernel(a, tol)?;
    let ker_form = Subspace::kernel_scaled(s.forms().omega(a), form_scale, tol)?;
    if !ker_momentum.contains(&ker_form, tol)? {
        return Err(Error::InconsistentSnapshot(format!(
            "ker ω^{a}(x) is not contained in ker T_xJ^{a}"
        )));
    }
    let q1 = ker_form.complement_in(&ker_momentum, tol)?;

    // Image of the g_{μ_A} generators in the first quotient's coordinates.
    let iso = s.isotropy_component(a);
    let iso_image = if iso.is_zero() || q1.is_zero() {
        Subspace::zero(q1.dim().max(1))
    } else {
        Subspace::span_scaled(
            &(q1.basis().transpose() * (&s.generators * iso.basis())),
            T::one(),
            tol,
        )?
    };

    let restricted = polyspace::restrict_form(s.forms().omega(a), &q1)?;
    let (form, map_from_ambient, dim_isotropy_image) = if q1.is_zero() {
        (DMatrix::zeros(0, 0), DMatrix::zeros(0, s.n()), 0)
    } else {
        let rep = iso_image.complement_in(&Subspace::full(q1.dim()), tol)?;
        let form = rep.basis().transpose() * &restricted * rep.basis();
        let map = rep.basis().transpose() * q1.basis().transpose();
        (form, map, iso_image.dim())
    };

    if form.nrows() > 0 && !Subspace::kernel_scaled(&form, form_scale, tol)?.is_zero() {
        return Err(Error::InconsistentSnapshot(format!(
            "induced form on V_{a} is degenerate"
        )));
    }

    // Identity behind the construction: inside T_xM / ker ω^A, the image of
    // ker T_xJ^A is the symplectic orthogonal of the full generator image.
    let q0 = ker_form.complement_in(&Subspace::full(s.n()), tol)?;
    let generator_orthogonal_identity = if q0.is_zero() {
        true
    } else {
        let omega0 = polyspace::restrict_form(s.forms().omega(a), &q0)?;
        let gen_classes =
            Subspace::span_scaled(&(q0.basis().transpose() * &s.generators), T::one(), tol)?;
        let ortho = if gen_classes.is_zero() {
            Subspace::full(q0.dim())
        } else {
            let constraints = (&omega0 * gen_classes.basis()).transpose();
            Subspace::kernel_scaled(&constraints.into_owned(), form_scale, tol)?
        };
        let momentum_classes = Subspace::span_scaled(
            &(q0.basis().transpose() * ker_momentum.basis()),
            T::one(),
            tol,
        )?;
        ortho.equal_to(&momentum_classes, tol)?
    };

    Ok(Step1Quotient {
        form,
        map_from_ambient,
        dim_ker_momentum: ker_momentum.dim(),
        dim_ker_form: ker_form.dim(),
        dim_isotropy_image,
        generator_orthogonal_identity,
    })
}

/// Diagnostics attached to a [`ReducedSpace`].
#[derive(Clone, Debug)]
pub struct ReducedDiagnostics<T: Real> {
    /// Containment residual of `T_x(G_μ·x)` inside `T_xJ⁻¹(μ)`.
    pub orbit_in_level_residual: T,
    /// Largest `|ω^A(w, ℓ)|` over orbit directions `w` and level directions
    /// `ℓ`; the reduced forms are well defined iff this vanishes.
    pub well_defined_residual: T,
    /// Largest entry of `Lᵀ Ω^A L - (Qᵀ L)ᵀ Ω_red^A (Qᵀ L)` over `A`: the
    /// pullback identity on the whole level tangent at once.
    pub pullback_residual: T,
    /// Whether the reduced family is polysymplectic.
    pub polysymplectic: bool,
    /// The reduction conditions evaluated at this snapshot.
    pub conditions: ConditionsReport<T>,
}

/// The quotient `T_xJ⁻¹(μ) / T_x(G_μ·x)` with its reduced form family.
#[derive(Clone, Debug)]
pub struct ReducedSpace<T: Real> {
    pub level_tangent: Subspace<T>,
    pub orbit_tangent: Subspace<T>,
    /// Orthonormal representative of the quotient inside the level tangent.
    pub quotient_basis: Subspace<T>,
    /// The matrices `ω_μ^A` in the quotient basis.
    pub reduced: Vec<DMatrix<T>>,
    pub diagnostics: ReducedDiagnostics<T>,
}

impl<T: Real> ReducedSpace<T> {
    pub fn dim(&self) -> usize {
        self.quotient_basis.dim()
    }

    /// The reduced family as a [`FormFamily`]; `None` for a zero-dimensional
    /// quotient.
    pub fn family(&self) -> Option<FormFamily<T>> {
        if self.dim() == 0 {
            return None;
        }
        FormFamily::new(self.reduced.clone()).ok()
    }
}

/// Builds the reduced form family on the quotient representative.
///
/// The reduced matrices are `ω_μ^A[i][j] = ω^A(q_i, q_j)` over the quotient
/// basis vectors. Well-definedness (`ω^A(w, ℓ) = 0` for orbit `w`, level `ℓ`)
/// and the pullback identity are measured and reported, not assumed; if the
/// reduction conditions fail, the reduced family simply comes out degenerate
/// and the diagnostics say so.
pub fn reduced_forms<T: Real>(
    s: &GSpaceSnapshot<T>,
    tol: &Tolerance<T>,
) -> Result<ReducedSpace<T>> {
    let conditions = check_reduction_conditions(s, tol)?;
    let level = level_set_tangent(s, tol)?;
    let orbit = orbit_tangent(s, s.isotropy_joint(), tol)?;
    let orbit_in_level_residual = level.containment_residual(&orbit);
    let quotient_basis = orbit.complement_in(&level, tol)?;

    let mut well_defined_residual = T::zero();
    let mut reduced = Vec::with_capacity(s.k());
    for omega in s.forms().omegas() {
        if !orbit.is_zero() && !level.is_zero() {
            let cross = (orbit.basis().transpose() * omega * level.basis())
                .abs()
                .max();
            well_defined_residual = well_defined_residual.max(cross);
        }
        reduced.push(quotient_basis.basis().transpose() * omega * quotient_basis.basis());
    }

    // Pullback identity over the whole level tangent: congruence through the
    // quotient coordinates must reproduce the restricted forms.
    let mut pullback_residual = T::zero();
    if !level.is_zero() {
        let coords = quotient_basis.basis().transpose() * level.basis();
        for (omega, red) in s.forms().omegas().iter().zip(&reduced) {
            let direct = level.basis().transpose() * omega * level.basis();
            let through_quotient = coords.transpose() * red * &coords;
            pullback_residual = pullback_residual.max((direct - through_quotient).abs().max());
        }
    }

    let polysymplectic = if quotient_basis.is_zero() {
        true
    } else {
        let family = FormFamily::new(reduced.clone())?;
        polyspace::verify_polysymplectic(&family, tol)?
    };

    Ok(ReducedSpace {
        level_tangent: level,
        orbit_tangent: orbit,
        quotient_basis,
        reduced,
        diagnostics: ReducedDiagnostics {
            orbit_in_level_residual,
            well_defined_residual,
            pullback_residual,
            polysymplectic,
            conditions,
        },
    })
}
