//! Hamiltonian polysymplectic dynamics.
//!
//! The dynamical object is a k-vector field `(X₁, …, X_k)` solving
//! `Σ_A i_{X_A} ω^A = dH`. Solutions are not unique; [`solve_hamiltonian_field`]
//! returns the minimum-norm one, while the group model has the explicit
//! closed-form field `X^H_A(g, ν) = (♭⁻¹ν_A; ad*_{♭⁻¹ν_A}ν₁, …)` for the
//! quadratic Hamiltonian `H = ½ Σ ⟨ν_A, ν_A⟩`. Its projection to the
//! k-coadjoint orbit is the reduced field `X̂_A(ν) = (ad*_{♭⁻¹ν_A}ν_B)_B`.
//!
//! Time integration is classical RK4 on linear states and Munthe-Kaas RK4 on
//! `SO(3) × (g*)^k` states (exponential updates in the algebra with the
//! truncated `dexp⁻¹` corrections, plain RK4 combination on the momenta).

use nalgebra::{DVector, Vector3};

use crate::error::{Error, Result};
use crate::liealg::{exp_so3, GroupElement, GroupElementSO3, LieAlgebraData};
use crate::models::GroupModelPoint;
use crate::polyspace::{flat_matrix, FormFamily};
use crate::subspace::{min_norm_lstsq, Tolerance};
use crate::Real;

/// Minimum-norm solution `(X₁, …, X_k)` of `Σ_A i_{X_A} ω^A = dH`.
///
/// The returned stacked vector is orthogonal to `ker ♭_ω`, which makes it the
/// least-norm solution among all of them. Fails with [`Error::NoSolution`]
/// when `dH` is not in the range of `♭_ω` (possible only for degenerate
/// families): the residual threshold is `eq_abs · (1 + ‖dH‖)`.
pub fn solve_hamiltonian_field<T: Real>(
    forms: &FormFamily<T>,
    dh: &DVector<T>,
    tol: &Tolerance<T>,
) -> Result<Vec<DVector<T>>> {
    if dh.len() != forms.n() {
        return Err(Error::DimensionMismatch {
            expected: forms.n(),
            got: dh.len(),
        });
    }
    let m = flat_matrix(forms);
    let x = min_norm_lstsq(&m, dh, tol)?;
    let residual = (&m * &x - dh).norm();
    if residual > tol.eq_abs * (T::one() + dh.norm()) {
        return Err(Error::NoSolution {
            residual: residual.as_f64(),
        });
    }
    let n = forms.n();
    Ok((0..forms.k())
        .map(|a| x.rows(a * n, n).into_owned())
        .collect())
}

/// Solves `metric · ξ = ν` (the inverse musical map `♭⁻¹` of the metric).
fn flat_inverse<T: Real>(algebra: &LieAlgebraData<T>, nu: &DVector<T>) -> Result<DVector<T>> {
    let metric = algebra
        .metric()
        .ok_or_else(|| Error::Precondition("algebra carries no metric".into()))?;
    let factor = metric
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Precondition("metric is not positive definite".into()))?;
    Ok(factor.solve(nu))
}

/// A left-trivialized group-model tangent vector: the body velocity and the
/// k momentum derivatives.
pub type GroupTangent<T> = (DVector<T>, Vec<DVector<T>>);

/// The explicit group-model field for `H = ½ Σ ⟨ν_A, ν_A⟩`: component `A` is
/// `(♭⁻¹ν_A; ad*_{♭⁻¹ν_A}ν₁, …, ad*_{♭⁻¹ν_A}ν_k)` in left-trivialized
/// coordinates. Each component lies in `ker TJ`, so the flows stay on the
/// momentum level set.
pub fn group_hamiltonian_field<T: Real>(
    algebra: &LieAlgebraData<T>,
    nus: &[DVector<T>],
) -> Result<Vec<GroupTangent<T>>> {
    let mut components = Vec::with_capacity(nus.len());
    for nu_a in nus {
        let xi = flat_inverse(algebra, nu_a)?;
        let nu_dots: Result<Vec<DVector<T>>> =
            nus.iter().map(|nu_b| algebra.ad_star(&xi, nu_b)).collect();
        components.push((xi, nu_dots?));
    }
    Ok(components)
}

/// The reduced field on the k-coadjoint orbit: component `A` at `ν` is
/// `(ad*_{♭⁻¹ν_A}ν₁, …, ad*_{♭⁻¹ν_A}ν_k)`. For `so(3)` with the identity
/// metric the `B`-th block is `ν_B × ν_A`.
pub fn reduced_orbit_field<T: Real>(
    algebra: &LieAlgebraData<T>,
    nus: &[DVector<T>],
    a: usize,
) -> Result<Vec<DVector<T>>> {
    if a >= nus.len() {
        return Err(Error::DimensionMismatch {
            expected: nus.len(),
            got: a,
        });
    }
    let xi = flat_inverse(algebra, &nus[a])?;
    nus.iter().map(|nu_b| algebra.ad_star(&xi, nu_b)).collect()
}

/// A state point for the integrator: either a plain vector or a point of
/// `SO(3) × (R³)^k` (rotation plus `k` momenta).
#[derive(Clone, Debug)]
pub enum State<T: Real> {
    Linear(DVector<T>),
    Group {
        rotation: GroupElementSO3<T>,
        nus: Vec<Vector3<T>>,
    },
}

impl<T: Real> State<T> {
    pub fn is_finite(&self) -> bool {
        match self {
            State::Linear(v) => v.iter().all(|x| x.is_finite()),
            State::Group { rotation, nus } => {
                rotation.matrix().iter().all(|x| x.is_finite())
                    && nus.iter().all(|nu| nu.iter().all(|x| x.is_finite()))
            }
        }
    }

    /// The stacked momenta of a group state, or the vector itself.
    pub fn stacked(&self) -> DVector<T> {
        match self {
            State::Linear(v) => v.clone(),
            State::Group { nus, .. } => stack(nus),
        }
    }
}

fn stack<T: Real>(nus: &[Vector3<T>]) -> DVector<T> {
    let mut v = DVector::zeros(3 * nus.len());
    for (i, nu) in nus.iter().enumerate() {
        for j in 0..3 {
            v[3 * i + j] = nu[j];
        }
    }
    v
}

fn unstack<T: Real>(v: &DVector<T>, k: usize) -> Vec<Vector3<T>> {
    (0..k)
        .map(|i| Vector3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2]))
        .collect()
}

/// One tangent vector of a [`State`], in the matching representation (the
/// group part is left-trivialized).
#[derive(Clone, Debug)]
pub enum StateTangent<T: Real> {
    Linear(DVector<T>),
    Group {
        xi: Vector3<T>,
        nu_dots: Vec<Vector3<T>>,
    },
}

/// A k-vector field as a state evaluator.
pub trait KVectorField<T: Real> {
    fn components(&self) -> usize;
    fn eval(&self, state: &State<T>) -> Result<Vec<StateTangent<T>>>;
}

/// The reduced orbit field as a [`KVectorField`] on stacked linear states.
pub struct ReducedOrbitField<T: Real> {
    algebra: LieAlgebraData<T>,
    k: usize,
}

impl<T: Real> ReducedOrbitField<T> {
    pub fn new(algebra: LieAlgebraData<T>, k: usize) -> Result<Self> {
        if algebra.metric().is_none() {
            return Err(Error::Precondition("algebra carries no metric".into()));
        }
        Ok(Self { algebra, k })
    }
}

impl<T: Real> KVectorField<T> for ReducedOrbitField<T> {
    fn components(&self) -> usize {
        self.k
    }

    fn eval(&self, state: &State<T>) -> Result<Vec<StateTangent<T>>> {
        let State::Linear(v) = state else {
            return Err(Error::Precondition(
                "reduced orbit field expects linear states".into(),
            ));
        };
        let d = self.algebra.dim();
        let nus: Vec<DVector<T>> = (0..self.k).map(|i| v.rows(i * d, d).into_owned()).collect();
        (0..self.k)
            .map(|a| {
                let blocks = reduced_orbit_field(&self.algebra, &nus, a)?;
                let mut out = DVector::zeros(self.k * d);
                for (i, b) in blocks.iter().enumerate() {
                    out.rows_mut(i * d, d).copy_from(b);
                }
                Ok(StateTangent::Linear(out))
            })
            .collect()
    }
}

/// The unreduced group-model field as a [`KVectorField`] on
/// `SO(3) × (R³)^k` states.
pub struct GroupModelField<T: Real> {
    algebra: LieAlgebraData<T>,
    k: usize,
}

impl<T: Real> GroupModelField<T> {
    pub fn new(algebra: LieAlgebraData<T>, k: usize) -> Result<Self> {
        if algebra.dim() != 3 {
            return Err(Error::Precondition(
                "group states are supported for so(3) only".into(),
            ));
        }
        if algebra.metric().is_none() {
            return Err(Error::Precondition("algebra carries no metric".into()));
        }
        Ok(Self { algebra, k })
    }
}

impl<T: Real> KVectorField<T> for GroupModelField<T> {
    fn components(&self) -> usize {
        self.k
    }

    fn eval(&self, state: &State<T>) -> Result<Vec<StateTangent<T>>> {
        let State::Group { nus, .. } = state else {
            return Err(Error::Precondition(
                "group model field expects group states".into(),
            ));
        };
        let nus_d: Vec<DVector<T>> = nus
            .iter()
            .map(|nu| DVector::from_column_slice(nu.as_slice()))
            .collect();
        let components = group_hamiltonian_field(&self.algebra, &nus_d)?;
        Ok(components
            .into_iter()
            .map(|(xi, nu_dots)| StateTangent::Group {
                xi: Vector3::new(xi[0], xi[1], xi[2]),
                nu_dots: nu_dots
                    .iter()
                    .map(|v| Vector3::new(v[0], v[1], v[2]))
                    .collect(),
            })
            .collect())
    }
}

/// Per-step projection applied after each integrator step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    None,
    /// Polar re-orthonormalization of the rotation part of group states.
    So3Polar,
}

/// A fixed-step trajectory.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<State<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn last(&self) -> &State<T> {
        self.states.last().expect("trajectory has initial state")
    }
}

/// Truncated `dexp⁻¹` for the left-trivialized `so(3)` update
/// `u̇ = ξ + ½[u, ξ] + 1/12 [u, [u, ξ]]`; two commutators suffice for a
/// fourth-order method.
fn dexpinv_left<T: Real>(u: &Vector3<T>, xi: &Vector3<T>) -> Vector3<T> {
    let c1 = u.cross(xi);
    let c2 = u.cross(&c1);
    xi + c1 * T::of(0.5) + c2 * T::of(1.0 / 12.0)
}

/// Rotation accumulator `R = anchor · exp(v)`.
///
/// Composing thousands of per-step rotation matrices random-walks the angle
/// by machine epsilon per product, which can drown fourth-order truncation
/// signals. Step increments arrive in the algebra, where accumulation is a
/// compensated vector sum as long as consecutive increments commute with the
/// running sum; the anchor absorbs `exp(v)` only when they genuinely stop
/// commuting (or `v` grows large), which reproduces the plain product there.
struct So3Accumulator<T: Real> {
    anchor: GroupElementSO3<T>,
    v: Vector3<T>,
    compensation: Vector3<T>,
}

impl<T: Real> So3Accumulator<T> {
    fn new(start: GroupElementSO3<T>) -> Self {
        Self {
            anchor: start,
            v: Vector3::zeros(),
            compensation: Vector3::zeros(),
        }
    }

    fn current(&self) -> GroupElementSO3<T> {
        self.anchor.compose(&exp_so3(&self.v))
    }

    fn fold(&mut self) {
        self.anchor = self.current();
        self.v = Vector3::zeros();
        self.compensation = Vector3::zeros();
    }

    fn advance(&mut self, u: &Vector3<T>) {
        // Commuting within roundoff of a compensated sum: the skipped
        // Baker-Campbell-Hausdorff correction ½ v × u is then below the
        // rounding of v + u itself.
        let threshold = T::of(4.0 * f64::EPSILON) * self.v.norm() * u.norm();
        if self.v.cross(u).norm() > threshold {
            self.fold();
        }
        for i in 0..3 {
            let y = u[i] - self.compensation[i];
            let t = self.v[i] + y;
            self.compensation[i] = (t - self.v[i]) - y;
            self.v[i] = t;
        }
        if self.v.norm() > T::of(4.0 * std::f64::consts::PI) {
            self.fold();
        }
    }
}

fn rk4_linear_step<T: Real>(
    field: &dyn KVectorField<T>,
    component: usize,
    y: &DVector<T>,
    dt: T,
) -> Result<DVector<T>> {
    let eval = |v: &DVector<T>| -> Result<DVector<T>> {
        match &field.eval(&State::Linear(v.clone()))?[component] {
            StateTangent::Linear(t) => Ok(t.clone()),
            _ => Err(Error::Precondition("tangent kind mismatch".into())),
        }
    };
    let half = dt * T::of(0.5);
    let k1 = eval(y)?;
    let k2 = eval(&(y + &k1 * half))?;
    let k3 = eval(&(y + &k2 * half))?;
    let k4 = eval(&(y + &k3 * dt))?;
    Ok(y + (k1 + k2 * T::of(2.0) + k3 * T::of(2.0) + k4) * (dt / T::of(6.0)))
}

/// One Munthe-Kaas RK4 step; returns the algebra increment `u` (so that the
/// new rotation is `R·exp(u)`) and the updated momenta.
fn rkmk4_group_step<T: Real>(
    field: &dyn KVectorField<T>,
    component: usize,
    rotation: &GroupElementSO3<T>,
    nus: &[Vector3<T>],
    dt: T,
) -> Result<(Vector3<T>, Vec<Vector3<T>>)> {
    let k = nus.len();
    let eval = |u: &Vector3<T>, nu_shift: &[Vector3<T>]| -> Result<(Vector3<T>, Vec<Vector3<T>>)> {
        let state = State::Group {
            rotation: rotation.compose(&exp_so3(u)),
            nus: nu_shift.to_vec(),
        };
        match &field.eval(&state)?[component] {
            StateTangent::Group { xi, nu_dots } => Ok((dexpinv_left(u, xi), nu_dots.clone())),
            _ => Err(Error::Precondition("tangent kind mismatch".into())),
        }
    };
    let shift = |base: &[Vector3<T>], dots: &[Vector3<T>], factor: T| -> Vec<Vector3<T>> {
        base.iter()
            .zip(dots)
            .map(|(nu, dot)| nu + dot * factor)
            .collect()
    };

    let half = dt * T::of(0.5);
    let zero = Vector3::zeros();
    let (k1x, k1n) = eval(&zero, nus)?;
    let (k2x, k2n) = eval(&(k1x * half), &shift(nus, &k1n, half))?;
    let (k3x, k3n) = eval(&(k2x * half), &shift(nus, &k2n, half))?;
    let (k4x, k4n) = eval(&(k3x * dt), &shift(nus, &k3n, dt))?;

    let sixth = dt / T::of(6.0);
    let u = (k1x + k2x * T::of(2.0) + k3x * T::of(2.0) + k4x) * sixth;
    let new_nus: Vec<Vector3<T>> = (0..k)
        .map(|i| nus[i] + (k1n[i] + k2n[i] * T::of(2.0) + k3n[i] * T::of(2.0) + k4n[i]) * sixth)
        .collect();
    Ok((u, new_nus))
}

/// Integrates the flow of the single component `X_A` of a k-vector field
/// with fixed step `dt` up to `t_end`, recording every step.
pub fn integrate<T: Real>(
    field: &dyn KVectorField<T>,
    component: usize,
    x0: State<T>,
    t_end: T,
    dt: T,
    projection: Projection,
) -> Result<Trajectory<T>> {
    if dt <= T::zero() {
        return Err(Error::Precondition("dt must be positive".into()));
    }
    if component >= field.components() {
        return Err(Error::DimensionMismatch {
            expected: field.components(),
            got: component,
        });
    }
    let steps = (t_end / dt).round().to_usize().ok_or_else(|| {
        Error::Precondition("t_end / dt does not fit in a step count".into())
    })?;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(T::zero());
    states.push(x0.clone());
    let mut current = x0;
    let mut accumulator = match &current {
        State::Group { rotation, .. } => Some(So3Accumulator::new(rotation.clone())),
        State::Linear(_) => None,
    };
    for step in 1..=steps {
        current = match &current {
            State::Linear(y) => State::Linear(rk4_linear_step(field, component, y, dt)?),
            State::Group { rotation, nus } => {
                let (u, nus) = rkmk4_group_step(field, component, rotation, nus, dt)?;
                let acc = accumulator.as_mut().expect("group state has accumulator");
                acc.advance(&u);
                let mut rotation = acc.current();
                if projection == Projection::So3Polar {
                    rotation = GroupElementSO3::polar_project(rotation.matrix())?;
                }
                State::Group { rotation, nus }
            }
        };
        if !current.is_finite() {
            return Err(Error::Diverged { step });
        }
        times.push(T::of(step as f64) * dt);
        states.push(current.clone());
    }
    Ok(Trajectory { times, states })
}

/// Named scalar quantities monitored along a trajectory.
pub trait StateMonitor<T: Real> {
    fn names(&self) -> Vec<String>;
    fn eval(&self, state: &State<T>) -> Result<Vec<T>>;
}

/// Drift report: initial values and the largest deviation from them.
#[derive(Clone, Debug)]
pub struct ConservationReport<T: Real> {
    pub names: Vec<String>,
    pub initial: Vec<T>,
    pub max_drift: Vec<T>,
}

impl<T: Real> ConservationReport<T> {
    pub fn worst_drift(&self) -> T {
        self.max_drift
            .iter()
            .copied()
            .fold(T::zero(), |a, b| a.max(b))
    }
}

/// Evaluates the monitor along the whole trajectory and reports max drift.
pub fn conservation_report<T: Real>(
    trajectory: &Trajectory<T>,
    monitor: &dyn StateMonitor<T>,
) -> Result<ConservationReport<T>> {
    let names = monitor.names();
    let initial = monitor.eval(&trajectory.states[0])?;
    let mut max_drift = vec![T::zero(); initial.len()];
    for state in &trajectory.states[1..] {
        let values = monitor.eval(state)?;
        for (i, v) in values.iter().enumerate() {
            max_drift[i] = max_drift[i].max((*v - initial[i]).abs());
        }
    }
    Ok(ConservationReport {
        names,
        initial,
        max_drift,
    })
}

/// Monitors of the reduced orbit flow: the reduced Hamiltonian
/// `H_μ = ½ Σ ⟨ν_A, ν_A⟩` and all pairwise products `ν_A·ν_B`.
pub struct OrbitInvariants<T: Real> {
    algebra: LieAlgebraData<T>,
    k: usize,
}

impl<T: Real> OrbitInvariants<T> {
    pub fn new(algebra: LieAlgebraData<T>, k: usize) -> Result<Self> {
        if algebra.metric().is_none() {
            return Err(Error::Precondition("algebra carries no metric".into()));
        }
        Ok(Self { algebra, k })
    }

    fn split(&self, state: &State<T>) -> Vec<DVector<T>> {
        let stacked = state.stacked();
        let d = self.algebra.dim();
        (0..self.k)
            .map(|i| stacked.rows(i * d, d).into_owned())
            .collect()
    }
}

impl<T: Real> StateMonitor<T> for OrbitInvariants<T> {
    fn names(&self) -> Vec<String> {
        let mut names = vec!["H_mu".to_string()];
        for a in 0..self.k {
            for b in a..self.k {
                names.push(format!("nu{}_dot_nu{}", a + 1, b + 1));
            }
        }
        names
    }

    fn eval(&self, state: &State<T>) -> Result<Vec<T>> {
        let nus = self.split(state);
        let mut values = Vec::new();
        let mut h = T::zero();
        for nu in &nus {
            h += flat_inverse(&self.algebra, nu)?.dot(nu);
        }
        values.push(h * T::of(0.5));
        for a in 0..self.k {
            for b in a..self.k {
                values.push(nus[a].dot(&nus[b]));
            }
        }
        Ok(values)
    }
}

/// Monitors of the unreduced group flow: the Hamiltonian, the pairwise
/// momenta products, and the momentum residual `‖J(g, ν) - μ‖`.
pub struct GroupLevelInvariants<T: Real> {
    orbit: OrbitInvariants<T>,
    mu: Vec<Vector3<T>>,
}

impl<T: Real> GroupLevelInvariants<T> {
    pub fn new(algebra: LieAlgebraData<T>, mu: Vec<Vector3<T>>) -> Result<Self> {
        let k = mu.len();
        Ok(Self {
            orbit: OrbitInvariants::new(algebra, k)?,
            mu,
        })
    }
}

impl<T: Real> StateMonitor<T> for GroupLevelInvariants<T> {
    fn names(&self) -> Vec<String> {
        let mut names = self.orbit.names();
        names.push("momentum_residual".to_string());
        names
    }

    fn eval(&self, state: &State<T>) -> Result<Vec<T>> {
        let mut values = self.orbit.eval(state)?;
        let State::Group { rotation, nus } = state else {
            return Err(Error::Precondition(
                "group invariants expect group states".into(),
            ));
        };
        let mut residual = T::zero();
        for (nu, mu) in nus.iter().zip(&self.mu) {
            residual += (rotation.matrix() * nu - mu).norm_squared();
        }
        values.push(residual.sqrt());
        Ok(values)
    }
}

/// Result of comparing the projected unreduced flow with the reduced flow.
#[derive(Clone, Debug)]
pub struct CommutationReport<T: Real> {
    /// `sup_t` of the distance between `π_μ`(unreduced state) and the
    /// reduced trajectory, where `π_μ(g) = Coad^k_{g⁻¹} μ`.
    pub sup_discrepancy: T,
    /// `sup_t ‖J(g(t), ν(t)) - μ‖` along the unreduced flow.
    pub momentum_drift: T,
    /// `sup_t` of the distance between the state momenta `ν(t)` and the
    /// reduced trajectory (the other reading of the projection).
    pub sup_state_discrepancy: T,
}

/// Integrates the unreduced group-model flow and the reduced orbit flow from
/// matching initial data and reports the projection discrepancy.
///
/// `point` must lie on `J⁻¹(μ)` within `tol`.
pub fn projection_commutation_check<T: Real>(
    algebra: &LieAlgebraData<T>,
    mu: &[Vector3<T>],
    point: &GroupModelPoint<T>,
    component: usize,
    t_end: T,
    dt: T,
    tol: &Tolerance<T>,
) -> Result<CommutationReport<T>> {
    let k = mu.len();
    let GroupElement::So3(rotation) = &point.g else {
        return Err(Error::Precondition(
            "commutation check runs on the SO(3) model".into(),
        ));
    };
    let nus: Vec<Vector3<T>> = point
        .nus
        .iter()
        .map(|nu| Vector3::new(nu[0], nu[1], nu[2]))
        .collect();
    let mut level_residual = T::zero();
    for (nu, mu_a) in nus.iter().zip(mu) {
        level_residual = level_residual.max((rotation.matrix() * nu - mu_a).norm());
    }
    if level_residual > tol.eq_abs.max(T::of(1e-8)) {
        return Err(Error::Precondition(format!(
            "initial point misses the level set by {:.3e}",
            level_residual.as_f64()
        )));
    }

    let group_field = GroupModelField::new(algebra.clone(), k)?;
    let unreduced = integrate(
        &group_field,
        component,
        State::Group {
            rotation: rotation.clone(),
            nus: nus.clone(),
        },
        t_end,
        dt,
        Projection::So3Polar,
    )?;

    let orbit_field = ReducedOrbitField::new(algebra.clone(), k)?;
    let reduced = integrate(
        &orbit_field,
        component,
        State::Linear(stack(&nus)),
        t_end,
        dt,
        Projection::None,
    )?;

    let mut sup_discrepancy = T::zero();
    let mut momentum_drift = T::zero();
    let mut sup_state_discrepancy = T::zero();
    for (u_state, r_state) in unreduced.states.iter().zip(&reduced.states) {
        let State::Group { rotation, nus } = u_state else {
            unreachable!()
        };
        let reduced_nus = unstack(&r_state.stacked(), k);
        let mut projected_gap = T::zero();
        let mut state_gap = T::zero();
        let mut momentum_gap = T::zero();
        for a in 0..k {
            // π_μ through the group component: Coad_{g⁻¹} μ_A = Rᵀ μ_A.
            let pulled = rotation.matrix().transpose() * mu[a];
            projected_gap += (pulled - reduced_nus[a]).norm_squared();
            state_gap += (nus[a] - reduced_nus[a]).norm_squared();
            momentum_gap += (rotation.matrix() * nus[a] - mu[a]).norm_squared();
        }
        sup_discrepancy = sup_discrepancy.max(projected_gap.sqrt());
        sup_state_discrepancy = sup_state_discrepancy.max(state_gap.sqrt());
        momentum_drift = momentum_drift.max(momentum_gap.sqrt());
    }
    Ok(CommutationReport {
        sup_discrepancy,
        momentum_drift,
        sup_state_discrepancy,
    })
}

/// A sheet `γ(s, t) = F²_t(F¹_s(ν₀))` of composed reduced flows on a
/// 2-coadjoint `SO(3)` orbit, with its diagnostics.
#[derive(Clone, Debug)]
pub struct HarmonicSheet<T: Real> {
    pub s_values: Vec<T>,
    pub t_values: Vec<T>,
    /// `points[i][j]` is the stacked `(ν₁, ν₂)` at `(s_i, t_j)`.
    pub points: Vec<Vec<DVector<T>>>,
    /// `sup` over the grid of `‖F¹_s F²_t(ν₀) - F²_t F¹_s(ν₀)‖`.
    pub commutator_sup: T,
    /// `sup` over the grid of `‖X̂₂ - λ₀ X̂₁‖` when the seeds are dependent
    /// with ratio `λ₀`; `None` for independent seeds.
    pub proportionality_residual: Option<T>,
    /// Discrete Dirichlet energy of the sheet.
    pub dirichlet_energy: T,
}

/// Rectangular lattice of a composed-flow sheet.
#[derive(Clone, Copy, Debug)]
pub struct SheetGrid<T: Real> {
    pub ns: usize,
    pub nt: usize,
    pub ds: T,
    pub dt: T,
}

/// Builds the sheet on `grid`, integrating each lattice edge with RK4
/// substeps of size at most `dt_int`.
///
/// When the two seeds are dependent (`π₂ = λ₀ π₁`) the two fields are exactly
/// proportional and the composed flows commute up to integrator error; for
/// independent seeds the commutator is simply measured and reported.
pub fn harmonic_sheet<T: Real>(
    algebra: &LieAlgebraData<T>,
    pi1: &Vector3<T>,
    pi2: &Vector3<T>,
    grid: &SheetGrid<T>,
    dt_int: T,
) -> Result<HarmonicSheet<T>> {
    let (ns, nt, ds, dt_grid) = (grid.ns, grid.nt, grid.ds, grid.dt);
    if ns < 2 || nt < 2 {
        return Err(Error::Precondition("grid needs at least 2 × 2 nodes".into()));
    }
    let field = ReducedOrbitField::new(algebra.clone(), 2)?;
    let nu0 = stack(&[*pi1, *pi2]);

    let flow = |component: usize, from: &DVector<T>, span: T| -> Result<DVector<T>> {
        if span == T::zero() {
            return Ok(from.clone());
        }
        let steps = (span / dt_int).ceil().to_usize().unwrap_or(1).max(1);
        let dt = span / T::of(steps as f64);
        let mut y = from.clone();
        for _ in 0..steps {
            y = rk4_linear_step(&field, component, &y, dt)?;
        }
        Ok(y)
    };

    let s_values: Vec<T> = (0..ns).map(|i| T::of(i as f64) * ds).collect();
    let t_values: Vec<T> = (0..nt).map(|j| T::of(j as f64) * dt_grid).collect();

    // March along s once, then along t from every s-node; the reversed
    // composition is built the same way for the commutator estimate.
    let mut s_line = Vec::with_capacity(ns);
    s_line.push(nu0.clone());
    for i in 1..ns {
        s_line.push(flow(0, &s_line[i - 1], ds)?);
    }
    let mut points = Vec::with_capacity(ns);
    for start in &s_line {
        let mut row = Vec::with_capacity(nt);
        row.push(start.clone());
        for j in 1..nt {
            let prev: &DVector<T> = &row[j - 1];
            row.push(flow(1, prev, dt_grid)?);
        }
        points.push(row);
    }

    let mut t_line = Vec::with_capacity(nt);
    t_line.push(nu0.clone());
    for j in 1..nt {
        t_line.push(flow(1, &t_line[j - 1], dt_grid)?);
    }
    let mut commutator_sup = T::zero();
    for (j, start) in t_line.iter().enumerate() {
        let mut current = start.clone();
        for i in 0..ns {
            if i > 0 {
                current = flow(0, &current, ds)?;
            }
            commutator_sup = commutator_sup.max((&current - &points[i][j]).norm());
        }
    }

    // Dependent seeds: the fields are proportional; measure the residual.
    let proportionality_residual = {
        let cross = pi1.cross(pi2).norm();
        let scale = pi1.norm() * pi2.norm();
        if pi1.norm() > T::zero() && cross <= T::of(1e-9) * scale.max(T::one()) {
            let lambda0 = pi1.dot(pi2) / pi1.norm_squared();
            let mut worst = T::zero();
            for row in &points {
                for p in row {
                    let nus = [p.rows(0, 3).into_owned(), p.rows(3, 3).into_owned()];
                    let x1 = reduced_orbit_field(algebra, &nus, 0)?;
                    let x2 = reduced_orbit_field(algebra, &nus, 1)?;
                    for (b1, b2) in x1.iter().zip(&x2) {
                        worst = worst.max((b2 - b1 * lambda0).abs().max());
                    }
                }
            }
            Some(worst)
        } else {
            None
        }
    };

    let mut dirichlet_energy = T::zero();
    for i in 0..ns {
        for j in 0..nt {
            let mut density = T::zero();
            if i + 1 < ns {
                density += ((&points[i + 1][j] - &points[i][j]) / ds).norm_squared();
            }
            if j + 1 < nt {
                density += ((&points[i][j + 1] - &points[i][j]) / dt_grid).norm_squared();
            }
            dirichlet_energy += density * T::of(0.5) * ds * dt_grid;
        }
    }

    Ok(HarmonicSheet {
        s_values,
        t_values,
        points,
        commutator_sup,
        proportionality_residual,
        dirichlet_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{group_covelocity_snapshot, sample_group_level_point};
    use nalgebra::DMatrix;
    use crate::polyspace::canonical_forms;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerance<f64> {
        Tolerance::default()
    }

    fn so3_id() -> LieAlgebraData<f64> {
        LieAlgebraData::so3_with_metric(Some(DMatrix::identity(3, 3)))
    }

    fn rv3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
        Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
    }

    #[test]
    fn solve_zero_hamiltonian_gives_zero_field() {
        let forms = FormFamily::new(canonical_forms::<f64>(2, 2)).unwrap();
        let x = solve_hamiltonian_field(&forms, &DVector::zeros(6), &tol()).unwrap();
        assert!(x.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn solve_canonical_min_norm_solution() {
        // Canonical n = 3 with dH = α dq + β dp¹ + γ dp²: the constraints
        // are X₁_q = β, X₂_q = γ, X₁_{p¹} + X₂_{p²} = -α, and minimality
        // splits -α evenly with no spurious components.
        let forms = FormFamily::new(canonical_forms::<f64>(1, 2)).unwrap();
        let (alpha, beta, gamma) = (0.7, -1.3, 0.4);
        let dh = DVector::from_vec(vec![alpha, beta, gamma]);
        let x = solve_hamiltonian_field(&forms, &dh, &tol()).unwrap();
        let expected1 = DVector::from_vec(vec![beta, -alpha / 2.0, 0.0]);
        let expected2 = DVector::from_vec(vec![gamma, 0.0, -alpha / 2.0]);
        assert!((x[0].clone() - expected1).norm() < 1e-12);
        assert!((x[1].clone() - expected2).norm() < 1e-12);
    }

    #[test]
    fn solve_random_families_least_squares_oracle() {
        // Independent oracle: normal equations on the full flat matrix,
        // x* = Mᵀ(MMᵀ)⁻¹ dH. The solver must reproduce it and any solution
        // difference must lie in ker ♭.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let n = 4;
            let l = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
                + DMatrix::<f64>::identity(n, n) * 2.0;
            let omegas: Vec<DMatrix<f64>> = canonical_forms::<f64>(2, 1)
                .iter()
                .chain(canonical_forms::<f64>(2, 1).iter())
                .map(|o| l.transpose() * o * &l)
                .collect();
            // Perturb the second form so the family is genuinely k = 2.
            let mut omegas = omegas;
            omegas[1] = &omegas[1] * 0.5;
            let forms = FormFamily::new(omegas).unwrap();
            let dh = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));

            let x = solve_hamiltonian_field(&forms, &dh, &tol()).unwrap();
            let stacked = {
                let mut v = DVector::zeros(2 * n);
                v.rows_mut(0, n).copy_from(&x[0]);
                v.rows_mut(n, n).copy_from(&x[1]);
                v
            };
            let m = flat_matrix(&forms);
            let residual = (&m * &stacked - &dh).norm();
            assert!(residual < 1e-10 * (1.0 + dh.norm()));

            let gram = &m * m.transpose();
            let oracle = m.transpose()
                * gram
                    .cholesky()
                    .expect("full-rank flat matrix")
                    .solve(&dh);
            assert!((&stacked - &oracle).norm() < 1e-8);

            // Orthogonality to ker ♭.
            let kernel = crate::subspace::Subspace::kernel_scaled(&m, forms.scale(), &tol())
                .unwrap();
            if !kernel.is_zero() {
                let overlap = (kernel.basis().transpose() * &stacked).norm();
                assert!(overlap < 1e-9 * stacked.norm().max(1.0));
            }
        }
    }

    #[test]
    fn solve_reports_no_solution_outside_range() {
        // Two equal degenerate forms with kernel ∂p²; dH = dp² is not in the
        // range of ♭.
        let omega = canonical_forms::<f64>(1, 2).swap_remove(0);
        let forms = FormFamily::new(vec![omega.clone(), omega]).unwrap();
        let dh = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!(matches!(
            solve_hamiltonian_field(&forms, &dh, &tol()),
            Err(Error::NoSolution { .. })
        ));
    }

    #[test]
    fn group_field_vanishes_at_zero_momenta() {
        let algebra = so3_id();
        let nus = vec![DVector::zeros(3), DVector::zeros(3)];
        let field = group_hamiltonian_field(&algebra, &nus).unwrap();
        for (xi, dots) in &field {
            assert!(xi.norm() == 0.0);
            assert!(dots.iter().all(|d| d.norm() == 0.0));
        }
    }

    #[test]
    fn group_field_example_values() {
        // so(3), identity metric, ν₁ = e₁, ν₂ = e₂, component A = 1:
        // ξ = e₁ and the momenta derivatives are (0, ν₂ × ν₁) = (0, -e₃).
        let algebra = so3_id();
        let nus = vec![
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
        ];
        let field = group_hamiltonian_field(&algebra, &nus).unwrap();
        let (xi, nu_dots) = &field[0];
        assert!((xi - &nus[0]).norm() < 1e-15);
        assert!(nu_dots[0].norm() < 1e-15);
        assert!((nu_dots[1].clone() - DVector::from_vec(vec![0.0, 0.0, -1.0])).norm() < 1e-15);
    }

    #[test]
    fn group_field_solves_hamilton_equation() {
        // Σ_A i_{X_A} ω^A = dH against the snapshot's analytic forms, where
        // dH(η, β) = Σ_A ⟨ν_A, β_A⟩ in left trivialization.
        let algebra = so3_id();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let mu = vec![
                DVector::from_column_slice(rv3(&mut rng).as_slice()),
                DVector::from_column_slice(rv3(&mut rng).as_slice()),
            ];
            let point = sample_group_level_point(&mu, &mut rng).unwrap();
            let s = group_covelocity_snapshot(&algebra, &point, &tol()).unwrap();
            let field = group_hamiltonian_field(&algebra, &point.nus).unwrap();

            // Stack each component into ambient coordinates (ξ; β₁, β₂).
            let stack_component = |(xi, dots): &(DVector<f64>, Vec<DVector<f64>>)| {
                let mut v = DVector::zeros(9);
                v.rows_mut(0, 3).copy_from(xi);
                v.rows_mut(3, 3).copy_from(&dots[0]);
                v.rows_mut(6, 3).copy_from(&dots[1]);
                v
            };
            let x: Vec<DVector<f64>> = field.iter().map(stack_component).collect();
            let lhs = crate::polyspace::flat(&x, s.forms()).unwrap();
            // dH = (0; ν₁; ν₂) with the identity metric.
            let mut dh = DVector::zeros(9);
            dh.rows_mut(3, 3).copy_from(&point.nus[0]);
            dh.rows_mut(6, 3).copy_from(&point.nus[1]);
            assert!((lhs - dh).norm() < 1e-10);

            // ker TJ annihilation: T J(X^H_A) = 0.
            for xa in &x {
                for slot in 0..2 {
                    assert!((s.momentum_jacobian(slot) * xa).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn reduced_field_vanishes_on_equal_momenta() {
        let algebra = so3_id();
        let nu = DVector::from_vec(vec![0.4, -0.2, 0.9]);
        let nus = vec![nu.clone(), nu];
        for a in 0..2 {
            let field = reduced_orbit_field(&algebra, &nus, a).unwrap();
            assert!(field.iter().all(|b| b.norm() < 1e-15));
        }
        // Component A of field A is always zero (self cross product).
        let nus = vec![
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 0.0, 2.0]),
        ];
        let field = reduced_orbit_field(&algebra, &nus, 0).unwrap();
        assert!(field[0].norm() < 1e-15);
        assert!(field[1].norm() > 0.1);
    }

    #[test]
    fn integrate_zero_field_is_constant() {
        let algebra = so3_id();
        let field = ReducedOrbitField::new(algebra, 2).unwrap();
        let x0 = DVector::from_vec(vec![0.3, 0.0, 0.0, 0.3, 0.0, 0.0]);
        let traj = integrate(
            &field,
            0,
            State::Linear(x0.clone()),
            1.0,
            0.01,
            Projection::None,
        )
        .unwrap();
        assert_eq!(traj.states.len(), 101);
        assert!((traj.last().stacked() - x0).norm() < 1e-15);
    }

    #[test]
    fn reduced_flow_matches_analytic_rotation() {
        // ν₁ = (0, 0, ω₀): flow 1 fixes ν₁ and rotates ν₂ by exp(-t ν̂₁).
        let algebra = so3_id();
        let omega0 = 1.0;
        let nu1 = Vector3::new(0.0, 0.0, omega0);
        let nu2 = Vector3::new(1.0, 0.0, 0.0);
        let field = ReducedOrbitField::new(algebra, 2).unwrap();
        let traj = integrate(
            &field,
            0,
            State::Linear(stack(&[nu1, nu2])),
            1.0,
            1e-3,
            Projection::None,
        )
        .unwrap();
        let end = unstack(&traj.last().stacked(), 2);
        let analytic = exp_so3(&(nu1 * -1.0)).matrix() * nu2;
        assert!((end[0] - nu1).norm() < 1e-14);
        assert!((end[1] - analytic).norm() < 1e-10);
    }

    #[test]
    fn rk4_is_fourth_order_on_rotation_test() {
        let algebra = so3_id();
        let nu1 = Vector3::new(0.0, 0.0, 1.0);
        let nu2 = Vector3::new(1.0, 0.0, 0.0);
        let field = ReducedOrbitField::new(algebra, 2).unwrap();
        let error_at = |dt: f64| {
            let traj = integrate(
                &field,
                0,
                State::Linear(stack(&[nu1, nu2])),
                1.0,
                dt,
                Projection::None,
            )
            .unwrap();
            let end = unstack(&traj.last().stacked(), 2);
            let analytic = exp_so3(&(nu1 * -1.0)).matrix() * nu2;
            (end[1] - analytic).norm()
        };
        let e1 = error_at(0.02);
        let e2 = error_at(0.01);
        let ratio = e1 / e2;
        assert!(
            (8.0..32.0).contains(&ratio),
            "expected ~16x per halving, got {ratio} ({e1:.3e} / {e2:.3e})"
        );
    }

    #[test]
    fn conservation_constant_trajectory_has_zero_drift() {
        let algebra = so3_id();
        let field = ReducedOrbitField::new(algebra.clone(), 2).unwrap();
        let nu = Vector3::new(0.5, 0.1, -0.2);
        let traj = integrate(
            &field,
            0,
            State::Linear(stack(&[nu, nu])),
            0.5,
            0.01,
            Projection::None,
        )
        .unwrap();
        let monitor = OrbitInvariants::new(algebra, 2).unwrap();
        let report = conservation_report(&traj, &monitor).unwrap();
        assert!(report.worst_drift() < 1e-15);
    }

    #[test]
    fn reduced_flow_conserves_orbit_invariants() {
        let algebra = so3_id();
        let field = ReducedOrbitField::new(algebra.clone(), 2).unwrap();
        let nus = [Vector3::new(0.0, 0.0, 1.0), Vector3::new(1.0, 0.0, 0.0)];
        let traj = integrate(
            &field,
            1,
            State::Linear(stack(&nus)),
            5.0,
            1e-3,
            Projection::None,
        )
        .unwrap();
        let monitor = OrbitInvariants::new(algebra, 2).unwrap();
        let report = conservation_report(&traj, &monitor).unwrap();
        assert!(report.worst_drift() < 1e-9, "drift {:?}", report.max_drift);
    }

    #[test]
    fn unreduced_flow_stays_on_the_level_set() {
        // Momentum residual ‖J(g(t), ν(t)) - μ‖ along the unreduced flow is
        // integrator error only.
        let algebra = so3_id();
        let mu = [Vector3::new(0.0, 0.0, 1.0), Vector3::new(1.0, 0.0, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mu_d = vec![
            DVector::from_column_slice(mu[0].as_slice()),
            DVector::from_column_slice(mu[1].as_slice()),
        ];
        let point = sample_group_level_point(&mu_d, &mut rng).unwrap();
        let crate::liealg::GroupElement::So3(g) = &point.g else {
            unreachable!()
        };
        let nus: Vec<Vector3<f64>> = point
            .nus
            .iter()
            .map(|nu| Vector3::new(nu[0], nu[1], nu[2]))
            .collect();
        let field = GroupModelField::new(algebra.clone(), 2).unwrap();
        let traj = integrate(
            &field,
            0,
            State::Group {
                rotation: g.clone(),
                nus,
            },
            1.0,
            1e-3,
            Projection::So3Polar,
        )
        .unwrap();
        let monitor = GroupLevelInvariants::new(algebra, mu.to_vec()).unwrap();
        let report = conservation_report(&traj, &monitor).unwrap();
        assert!(report.worst_drift() < 1e-7, "drift {:?}", report.max_drift);
    }

    #[test]
    fn commutation_trivial_at_zero_momentum() {
        let algebra = so3_id();
        let mu = [Vector3::zeros(), Vector3::zeros()];
        let point = GroupModelPoint {
            g: GroupElement::So3(GroupElementSO3::identity()),
            nus: vec![DVector::zeros(3), DVector::zeros(3)],
        };
        let report =
            projection_commutation_check(&algebra, &mu, &point, 0, 1.0, 0.01, &tol()).unwrap();
        assert!(report.sup_discrepancy < 1e-14);
        assert!(report.momentum_drift < 1e-14);
    }

    #[test]
    fn commutation_check_rejects_off_level_points() {
        let algebra = so3_id();
        let mu = [Vector3::new(0.0, 0.0, 1.0), Vector3::new(1.0, 0.0, 0.0)];
        let point = GroupModelPoint {
            g: GroupElement::So3(GroupElementSO3::identity()),
            nus: vec![
                DVector::from_vec(vec![0.0, 0.0, 5.0]),
                DVector::from_vec(vec![1.0, 0.0, 0.0]),
            ],
        };
        assert!(matches!(
            projection_commutation_check(&algebra, &mu, &point, 0, 1.0, 0.01, &tol()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn commutation_small_discrepancy() {
        let algebra = so3_id();
        let mu = [Vector3::new(0.0, 0.0, 1.0), Vector3::new(1.0, 0.0, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mu_d = vec![
            DVector::from_column_slice(mu[0].as_slice()),
            DVector::from_column_slice(mu[1].as_slice()),
        ];
        let point = sample_group_level_point(&mu_d, &mut rng).unwrap();
        for component in 0..2 {
            let report =
                projection_commutation_check(&algebra, &mu, &point, component, 1.0, 1e-2, &tol())
                    .unwrap();
            assert!(report.sup_discrepancy < 1e-6);
            assert!(report.momentum_drift < 1e-9);
        }
    }

    #[test]
    fn harmonic_sheet_dependent_seeds_commute() {
        // Anisotropic metric so the sphere dynamics is nontrivial.
        let metric = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let algebra = LieAlgebraData::so3_with_metric(Some(metric));
        let pi1 = Vector3::new(0.3, -0.4, 0.85);
        let grid = SheetGrid { ns: 6, nt: 6, ds: 0.1, dt: 0.1 };
        let sheet = harmonic_sheet(&algebra, &pi1, &(pi1 * 2.0), &grid, 1e-3).unwrap();
        let residual = sheet.proportionality_residual.expect("dependent seeds");
        assert!(residual < 1e-14);
        assert!(sheet.commutator_sup < 1e-8);
        assert!(sheet.dirichlet_energy > 0.0);
    }

    #[test]
    fn harmonic_sheet_lambda_one_collapses_to_single_flow() {
        let metric = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let algebra = LieAlgebraData::so3_with_metric(Some(metric));
        let pi1 = Vector3::new(0.3, -0.4, 0.85);
        let grid = SheetGrid { ns: 5, nt: 5, ds: 0.1, dt: 0.1 };
        let sheet = harmonic_sheet(&algebra, &pi1, &pi1, &grid, 1e-2).unwrap();
        // γ(s, t) = γ(s + t, 0): equal fields, identical step sequences.
        for i in 0..5 {
            for j in 0..5 {
                if i + j < 5 {
                    let diff = (&sheet.points[i][j] - &sheet.points[i + j][0]).norm();
                    assert!(diff < 1e-12, "γ({i},{j}) vs γ({},0): {diff:.3e}", i + j);
                }
            }
        }
    }

    #[test]
    fn harmonic_sheet_independent_seeds_reports_commutator() {
        let metric = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let algebra = LieAlgebraData::so3_with_metric(Some(metric));
        let grid = SheetGrid { ns: 5, nt: 5, ds: 0.2, dt: 0.2 };
        let sheet = harmonic_sheet(
            &algebra,
            &Vector3::new(1.0, 0.0, 0.0),
            &Vector3::new(0.0, 0.0, 1.0),
            &grid,
            1e-2,
        )
        .unwrap();
        assert!(sheet.proportionality_residual.is_none());
        // Independent fields genuinely fail to commute.
        assert!(sheet.commutator_sup > 1e-4);
    }

    #[test]
    fn divergence_is_reported_with_step_index() {
        // A field that blows up: ν̇ = ν² componentwise through a fake
        // evaluator.
        struct Explosive;
        impl KVectorField<f64> for Explosive {
            fn components(&self) -> usize {
                1
            }
            fn eval(&self, state: &State<f64>) -> Result<Vec<StateTangent<f64>>> {
                let State::Linear(v) = state else { unreachable!() };
                Ok(vec![StateTangent::Linear(v.map(|x| x * x * 1e3))])
            }
        }
        let result = integrate(
            &Explosive,
            0,
            State::Linear(DVector::from_vec(vec![1.0])),
            10.0,
            0.5,
            Projection::None,
        );
        assert!(matches!(result, Err(Error::Diverged { .. })));
    }
}
