//! Command-line runner for the reduction and dynamics checks.
//!
//! Exit codes: 0 when every expectation of the command is met, 1 when a
//! check fails, 2 on usage or configuration errors.

mod report;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use polyred::dynamics::{
    conservation_report, harmonic_sheet, integrate, projection_commutation_check,
    OrbitInvariants, Projection, ReducedOrbitField, SheetGrid, State, StateMonitor, Trajectory,
};
use polyred::liealg::LieAlgebraData;
use polyred::models::{
    classify_kks_so3, group_covelocity_snapshot, k_coadjoint_orbit_forms,
    product_model_snapshot, sample_covelocity_point, sample_group_level_point, KksSo3,
    LinearAction, ProductConfig,
};
use polyred::polyspace::verify_polysymplectic;
use polyred::reduction::{
    check_double_complement_claim, check_momentum_lemma, check_reduction_conditions, reduced_forms,
    GSpaceSnapshot,
};
use polyred::subspace::{Subspace, Tolerance};
use polyred::polyspace::FormFamily;

use report::{format_f64, CheckRecord, Meta, Report};

#[derive(Parser)]
#[command(
    name = "polyred",
    version,
    about = "Pointwise polysymplectic reduction checks and reduced dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduce the diagonal-product failure of the double-complement
    /// claim, then reduce the product-group variant.
    Counterexample(CounterexampleArgs),
    /// Run the reduction conditions and reduced-form construction on a model.
    Verify(VerifyArgs),
    /// Classify a 2-coadjoint SO(3) orbit and check its reduced forms.
    Kks(KksArgs),
    /// Integrate the reduced orbit flow and the flow-projection commutation
    /// check; optionally export the trajectory as CSV.
    Integrate(IntegrateArgs),
    /// Build a composed-flow sheet on a 2-coadjoint orbit; optionally export
    /// it as CSV.
    Harmonic(HarmonicArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// RNG seed; fixed seed plus fixed configuration gives byte-identical
    /// reports.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of sampled points.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Relative singular-value threshold for rank decisions.
    #[arg(long = "tol-rank", default_value_t = 1e-9)]
    tol_rank: f64,
    /// Principal-angle tolerance for subspace equality.
    #[arg(long = "tol-eq", default_value_t = 1e-9)]
    tol_eq: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Momentum value (one component per factor).
    #[arg(long, default_value = "0.4,-0.7")]
    mu: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Model: group-so3-independent, group-so3-dependent,
    /// covelocity-translation, covelocity-rotation, product-group,
    /// product-diagonal, failing-fixture.
    #[arg(long, default_value = "group-so3-independent")]
    model: String,
    /// Momentum seeds for the group models, as `x,y,z;x,y,z`.
    #[arg(long)]
    mu: Option<String>,
}

#[derive(Args)]
struct KksArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// First orbit seed, `x,y,z`.
    #[arg(long, default_value = "0,0,1")]
    pi1: String,
    /// Second orbit seed, `x,y,z`. Defaults to `lambda0 * pi1`.
    #[arg(long)]
    pi2: Option<String>,
    /// Ratio used when `--pi2` is omitted.
    #[arg(long, default_value_t = 2.0)]
    lambda0: f64,
}

#[derive(Args)]
struct IntegrateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Momentum seeds `x,y,z;x,y,z` defining the orbit and the level set.
    #[arg(long, default_value = "0,0,1;1,0,0")]
    mu: String,
    /// Time step.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Final time of the reduced-flow run.
    #[arg(long = "t-end", default_value_t = 10.0)]
    t_end: f64,
    /// Flow component to integrate (1-based).
    #[arg(long, default_value_t = 1)]
    component: usize,
    /// Write the reduced trajectory to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct HarmonicArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// First orbit seed, `x,y,z`.
    #[arg(long, default_value = "0.3,-0.4,0.85")]
    pi1: String,
    /// Second orbit seed, `x,y,z`. Defaults to `lambda0 * pi1`.
    #[arg(long)]
    pi2: Option<String>,
    /// Ratio used when `--pi2` is omitted.
    #[arg(long, default_value_t = 2.0)]
    lambda0: f64,
    /// Diagonal left-invariant metric `a,b,c`.
    #[arg(long, default_value = "1,2,3")]
    metric: String,
    /// Grid nodes per direction.
    #[arg(long, default_value_t = 20)]
    grid: usize,
    /// Sheet side length in each flow parameter.
    #[arg(long, default_value_t = 1.0)]
    span: f64,
    /// Integrator substep.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Write the sheet to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("POLYRED_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("POLYRED_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    let outcome = match cli.command {
        Command::Counterexample(args) => cmd_counterexample(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Kks(args) => cmd_kks(args),
        Command::Integrate(args) => cmd_integrate(args),
        Command::Harmonic(args) => cmd_harmonic(args),
    };
    match outcome {
        Ok(passed) => ExitCode::from(if passed { 0 } else { 1 }),
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Run(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

enum CliError {
    /// Bad flags or configuration: exit code 2.
    Usage(String),
    /// A computation failed outright: exit code 1.
    Run(String),
}

impl From<polyred::Error> for CliError {
    fn from(e: polyred::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

fn parse_triple(text: &str, flag: &str) -> Result<Vector3<f64>, CliError> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("{flag} expects `x,y,z`, got `{text}`")))?;
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "{flag} expects exactly three components, got {}",
            parts.len()
        )));
    }
    Ok(Vector3::new(parts[0], parts[1], parts[2]))
}

fn parse_triple_pair(text: &str, flag: &str) -> Result<(Vector3<f64>, Vector3<f64>), CliError> {
    let parts: Vec<&str> = text.split(';').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!(
            "{flag} expects `x,y,z;x,y,z`, got `{text}`"
        )));
    }
    Ok((
        parse_triple(parts[0], flag)?,
        parse_triple(parts[1], flag)?,
    ))
}

fn tolerance(common: &CommonArgs) -> Result<Tolerance<f64>, CliError> {
    if common.samples < 1 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    Tolerance::new(common.tol_rank, common.tol_eq)
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn meta(command: &str, common: &CommonArgs) -> Meta {
    let _ = command;
    Meta {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: common.seed,
        samples: common.samples,
        tol_rank: common.tol_rank,
        tol_eq: common.tol_eq,
        parameters: BTreeMap::new(),
        labels: BTreeMap::new(),
    }
}

fn emit(report: &Report, out: &Option<PathBuf>) -> Result<(), CliError> {
    let bytes = report.to_json()?;
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Worst-case aggregate of a named subspace comparison across samples.
struct Aggregate {
    name: String,
    all_equal: bool,
    any_equal: bool,
    worst_residual: f64,
    lhs_dim: usize,
    rhs_dim: usize,
}

impl Aggregate {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            all_equal: true,
            any_equal: false,
            worst_residual: 0.0,
            lhs_dim: 0,
            rhs_dim: 0,
        }
    }

    fn add(&mut self, comparison: &polyred::reduction::SubspaceComparison<f64>) {
        self.all_equal &= comparison.equal;
        self.any_equal |= comparison.equal;
        self.worst_residual = self.worst_residual.max(comparison.residual);
        self.lhs_dim = comparison.lhs_dim;
        self.rhs_dim = comparison.rhs_dim;
    }

    /// Check that the identity held everywhere.
    fn expect_pass(&self) -> CheckRecord {
        CheckRecord::pass_fail(self.name.clone(), self.all_equal)
            .with_dims(self.lhs_dim, self.rhs_dim)
            .with_residual(self.worst_residual)
    }

    /// Check that the identity failed everywhere (counterexample mode).
    fn expect_fail(&self) -> CheckRecord {
        CheckRecord::pass_fail(self.name.clone(), !self.any_equal)
            .with_dims(self.lhs_dim, self.rhs_dim)
            .with_residual(self.worst_residual)
    }
}

fn cmd_counterexample(args: CounterexampleArgs) -> Result<bool, CliError> {
    let tol = tolerance(&args.common)?;
    let mu_parts: Vec<f64> = args
        .mu
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--mu expects `a,b`, got `{}`", args.mu)))?;
    if mu_parts.len() != 2 {
        return Err(CliError::Usage("--mu expects two components".into()));
    }
    let mu = (mu_parts[0], mu_parts[1]);

    struct SampleOutcome {
        lemma: polyred::reduction::MomentumLemmaReport<f64>,
        claim: polyred::reduction::DoubleComplementClaimReport<f64>,
        gap_is_one_vs_two: bool,
    }

    let outcomes: Result<Vec<SampleOutcome>, polyred::Error> = (0..args.common.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(args.common.seed, i);
            let point = polyred::models::sample_product_level_point::<f64>(mu, &mut rng);
            debug_assert!(point.iter().all(|x| x.is_finite()));
            let s = product_model_snapshot::<f64>(ProductConfig::Diagonal, &tol)?;
            let lemma = check_momentum_lemma(&s, &tol)?;
            let claim = check_double_complement_claim(&s, &tol)?;
            let gap_is_one_vs_two = claim.claim.lhs_dim == 1 && claim.claim.rhs_dim == 2;
            Ok(SampleOutcome {
                lemma,
                claim,
                gap_is_one_vs_two,
            })
        })
        .collect();
    let outcomes = outcomes?;

    let mut lemma1 = Aggregate::new("momentum_lemma_orbit_intersection");
    let mut lemma2 = Aggregate::new("momentum_lemma_level_is_k_orthogonal");
    let mut claim = Aggregate::new("double_complement_claim");
    let mut gap_ok = true;
    for o in &outcomes {
        lemma1.add(&o.lemma.orbit_intersection);
        lemma2.add(&o.lemma.level_is_k_orthogonal);
        claim.add(&o.claim.claim);
        gap_ok &= o.gap_is_one_vs_two;
    }

    // The product-group configuration reduces cleanly.
    let s = product_model_snapshot::<f64>(ProductConfig::ProductGroup, &tol)?;
    let conditions = check_reduction_conditions(&s, &tol)?;
    let reduced = reduced_forms(&s, &tol)?;

    let mut checks = vec![
        lemma1.expect_pass(),
        lemma2.expect_pass(),
        claim.expect_fail(),
        CheckRecord::pass_fail("double_complement_dimension_gap_1_vs_2", gap_ok)
            .with_dims(1, 2),
        CheckRecord::pass_fail(
            "product_group_conditions",
            conditions.conditions_hold() && conditions.routes_agree,
        ),
        CheckRecord::pass_fail(
            "product_group_reduced_polysymplectic",
            reduced.dim() == 4 && reduced.diagnostics.polysymplectic,
        )
        .with_value(reduced.dim() as f64),
    ];
    checks.iter_mut().for_each(|_| {});

    let mut meta = meta("counterexample", &args.common);
    meta.parameters.insert("mu_1".into(), mu.0);
    meta.parameters.insert("mu_2".into(), mu.1);
    meta.labels.insert("model".into(), "product-diagonal".into());
    let passed = Report::all_passed(&checks);
    let report = Report {
        command: "counterexample".into(),
        meta,
        checks,
        passed,
    };
    emit(&report, &args.common.out)?;
    Ok(passed)
}

enum VerifyModel {
    GroupSo3 { mu: Vec<DVector<f64>> },
    CovelocityTranslation,
    CovelocityRotation,
    ProductGroup,
    ProductDiagonal,
    FailingFixture,
}

fn failing_fixture(tol: &Tolerance<f64>) -> Result<GSpaceSnapshot<f64>, polyred::Error> {
    let mut omega = DMatrix::<f64>::zeros(3, 3);
    omega[(0, 1)] = 1.0;
    omega[(1, 0)] = -1.0;
    let forms = FormFamily::new(vec![omega.clone(), omega])?;
    GSpaceSnapshot::new(
        forms,
        vec![DMatrix::zeros(1, 3); 2],
        DMatrix::zeros(3, 1),
        vec![Subspace::full(1); 2],
        tol,
    )
}

fn cmd_verify(args: VerifyArgs) -> Result<bool, CliError> {
    let tol = tolerance(&args.common)?;
    let model = match args.model.as_str() {
        "group-so3-independent" | "group-so3-dependent" => {
            let default = if args.model.ends_with("independent") {
                (Vector3::new(0.0, 0.0, 1.0), Vector3::new(1.0, 0.0, 0.0))
            } else {
                (Vector3::new(0.0, 0.0, 1.0), Vector3::new(0.0, 0.0, 2.0))
            };
            let (m1, m2) = match &args.mu {
                Some(text) => parse_triple_pair(text, "--mu")?,
                None => default,
            };
            VerifyModel::GroupSo3 {
                mu: vec![
                    DVector::from_column_slice(m1.as_slice()),
                    DVector::from_column_slice(m2.as_slice()),
                ],
            }
        }
        "covelocity-translation" => VerifyModel::CovelocityTranslation,
        "covelocity-rotation" => VerifyModel::CovelocityRotation,
        "product-group" => VerifyModel::ProductGroup,
        "product-diagonal" => VerifyModel::ProductDiagonal,
        "failing-fixture" => VerifyModel::FailingFixture,
        other => {
            return Err(CliError::Usage(format!("unknown model `{other}`")));
        }
    };

    let algebra = LieAlgebraData::<f64>::so3();
    let translations = LinearAction::<f64>::translations(
        2,
        vec![DVector::from_vec(vec![1.0, 0.0])],
    )
    .map_err(CliError::from)?;
    let rotations = LinearAction::<f64>::rotations_so3();

    let snapshot_at = |i: usize| -> Result<GSpaceSnapshot<f64>, polyred::Error> {
        let mut rng = sample_rng(args.common.seed, i);
        match &model {
            VerifyModel::GroupSo3 { mu } => {
                let point = sample_group_level_point(mu, &mut rng)?;
                group_covelocity_snapshot(&algebra, &point, &tol)
            }
            VerifyModel::CovelocityTranslation => {
                let point = sample_covelocity_point(2, 2, false, &mut rng);
                translations.covelocity_snapshot(&point, &tol)
            }
            VerifyModel::CovelocityRotation => {
                let point = sample_covelocity_point(3, 2, true, &mut rng);
                rotations.covelocity_snapshot(&point, &tol)
            }
            VerifyModel::ProductGroup => product_model_snapshot(ProductConfig::ProductGroup, &tol),
            VerifyModel::ProductDiagonal => {
                product_model_snapshot(ProductConfig::Diagonal, &tol)
            }
            VerifyModel::FailingFixture => failing_fixture(&tol),
        }
    };

    struct SampleOutcome {
        conditions_hold: bool,
        routes_agree: bool,
        cond1_worst: f64,
        cond2: polyred::reduction::SubspaceComparison<f64>,
        lemma_passed: bool,
        reduced_dim: usize,
        reduced_polysymplectic: bool,
        well_defined_residual: f64,
        pullback_residual: f64,
    }

    let outcomes: Result<Vec<SampleOutcome>, polyred::Error> = (0..args.common.samples)
        .into_par_iter()
        .map(|i| {
            let s = snapshot_at(i)?;
            let conditions = check_reduction_conditions(&s, &tol)?;
            let lemma = check_momentum_lemma(&s, &tol)?;
            let reduced = reduced_forms(&s, &tol)?;
            Ok(SampleOutcome {
                conditions_hold: conditions.conditions_hold(),
                routes_agree: conditions.routes_agree,
                cond1_worst: conditions
                    .condition_one
                    .iter()
                    .map(|c| c.residual)
                    .fold(0.0, f64::max),
                cond2: conditions.condition_two,
                lemma_passed: lemma.passed(),
                reduced_dim: reduced.dim(),
                reduced_polysymplectic: reduced.diagnostics.polysymplectic,
                well_defined_residual: reduced.diagnostics.well_defined_residual,
                pullback_residual: reduced.diagnostics.pullback_residual,
            })
        })
        .collect();
    let outcomes = outcomes?;

    let total = outcomes.len();
    let held = outcomes.iter().filter(|o| o.conditions_hold).count();
    let polysymplectic = outcomes
        .iter()
        .filter(|o| o.reduced_polysymplectic)
        .count();
    let checks = vec![
        CheckRecord::pass_fail("reduction_conditions_hold", held == total)
            .with_value(held as f64 / total.max(1) as f64)
            .with_residual(
                outcomes
                    .iter()
                    .map(|o| o.cond1_worst.max(o.cond2.residual))
                    .fold(0.0, f64::max),
            ),
        CheckRecord::pass_fail(
            "dual_route_agreement",
            outcomes.iter().all(|o| o.routes_agree),
        ),
        CheckRecord::pass_fail(
            "momentum_lemma",
            outcomes.iter().all(|o| o.lemma_passed),
        ),
        CheckRecord::pass_fail(
            "reduced_family_polysymplectic",
            polysymplectic == total,
        )
        .with_value(outcomes.first().map(|o| o.reduced_dim as f64).unwrap_or(0.0)),
        CheckRecord::measured(
            "reduced_well_defined_residual",
            outcomes
                .iter()
                .map(|o| o.well_defined_residual)
                .fold(0.0, f64::max),
        ),
        CheckRecord::measured(
            "reduced_pullback_residual",
            outcomes
                .iter()
                .map(|o| o.pullback_residual)
                .fold(0.0, f64::max),
        ),
    ];

    let mut meta = meta("verify", &args.common);
    meta.labels.insert("model".into(), args.model.clone());
    if let VerifyModel::GroupSo3 { mu } = &model {
        meta.labels.insert(
            "mu".into(),
            format!(
                "{},{},{};{},{},{}",
                format_f64(mu[0][0]),
                format_f64(mu[0][1]),
                format_f64(mu[0][2]),
                format_f64(mu[1][0]),
                format_f64(mu[1][1]),
                format_f64(mu[1][2]),
            ),
        );
    }
    let passed = Report::all_passed(&checks);
    let report = Report {
        command: "verify".into(),
        meta,
        checks,
        passed,
    };
    emit(&report, &args.common.out)?;
    Ok(passed)
}

fn cmd_kks(args: KksArgs) -> Result<bool, CliError> {
    let tol = tolerance(&args.common)?;
    let pi1 = parse_triple(&args.pi1, "--pi1")?;
    let pi2 = match &args.pi2 {
        Some(text) => parse_triple(text, "--pi2")?,
        None => pi1 * args.lambda0,
    };
    let case = classify_kks_so3(&pi1, &pi2);
    let algebra = LieAlgebraData::<f64>::so3();

    let mut checks = Vec::new();
    let case_name = match &case {
        KksSo3::PointOrbit => "point",
        KksSo3::Sphere { .. } => "sphere",
        KksSo3::LeftInvariant { .. } => "left-invariant",
    };

    match &case {
        KksSo3::PointOrbit => {
            let orbit = k_coadjoint_orbit_forms(&algebra, &[dv3(&pi1), dv3(&pi2)], &tol)?;
            checks.push(
                CheckRecord::pass_fail("point_orbit_tangent_is_zero", orbit.tangent.is_zero())
                    .with_value(orbit.tangent.dim() as f64),
            );
        }
        KksSo3::Sphere {
            lambda0,
            radius,
            swapped,
        } => {
            // Evaluator against the orbit machinery at sampled points: lift
            // a sphere tangent u to the orbit tangent (u, λ₀u) (or swapped)
            // and compare the pairings.
            let base = if *swapped { pi2 } else { pi1 };
            let mut worst: f64 = 0.0;
            for i in 0..args.common.samples {
                let mut rng = sample_rng(args.common.seed, i);
                let g = polyred::liealg::exp_so3(&random_axis(&mut rng));
                let pi = g.matrix() * base;
                let u = tangent_at(&pi, &mut rng);
                let v = tangent_at(&pi, &mut rng);

                let pair = |w: &Vector3<f64>| {
                    if *swapped {
                        (*w * *lambda0, *w)
                    } else {
                        (*w, *w * *lambda0)
                    }
                };
                let (nu1, nu2) = pair(&pi);
                let orbit =
                    k_coadjoint_orbit_forms(&algebra, &[dv3(&nu1), dv3(&nu2)], &tol)?;
                let lift = |w: &Vector3<f64>| {
                    let (w1, w2) = pair(w);
                    let mut t = DVector::zeros(6);
                    t.rows_mut(0, 3).copy_from(&dv3(&w1));
                    t.rows_mut(3, 3).copy_from(&dv3(&w2));
                    orbit.tangent.coords(&t)
                };
                let (cu, cv) = (lift(&u), lift(&v));
                for a in 0..2 {
                    let via_orbit = (cu.transpose() * &orbit.forms[a] * &cv)[(0, 0)];
                    let via_case = case.sphere_form(a, &pi, &u, &v)?;
                    worst = worst.max((via_case - via_orbit).abs());
                }
            }
            checks.push(
                CheckRecord::pass_fail("sphere_forms_match_orbit_pairing", worst < 1e-10)
                    .with_residual(worst),
            );
            checks.push(CheckRecord::measured("lambda0", *lambda0));
            checks.push(CheckRecord::measured("radius", *radius));
        }
        KksSo3::LeftInvariant { .. } => {
            let orbit = k_coadjoint_orbit_forms(&algebra, &[dv3(&pi1), dv3(&pi2)], &tol)?;
            checks.push(
                CheckRecord::pass_fail("orbit_tangent_dim_3", orbit.tangent.dim() == 3)
                    .with_value(orbit.tangent.dim() as f64),
            );
            let family = FormFamily::new(orbit.forms.clone()).map_err(CliError::from)?;
            checks.push(CheckRecord::pass_fail(
                "orbit_family_polysymplectic",
                verify_polysymplectic(&family, &tol)?,
            ));
            // Identity values against the generator pairing.
            let e = [Vector3::x(), Vector3::y(), Vector3::z()];
            let mut worst: f64 = 0.0;
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                for (a, seed) in [pi1, pi2].iter().enumerate() {
                    let got = case.left_invariant_form(a, &e[i], &e[j])?;
                    let expected = -seed.dot(&e[i].cross(&e[j]));
                    worst = worst.max((got - expected).abs());
                }
            }
            checks.push(
                CheckRecord::pass_fail("identity_values_match", worst < 1e-12)
                    .with_residual(worst),
            );
        }
    }

    let mut meta = meta("kks", &args.common);
    meta.labels.insert("case".into(), case_name.into());
    meta.labels.insert(
        "pi1".into(),
        format!("{},{},{}", format_f64(pi1[0]), format_f64(pi1[1]), format_f64(pi1[2])),
    );
    meta.labels.insert(
        "pi2".into(),
        format!("{},{},{}", format_f64(pi2[0]), format_f64(pi2[1]), format_f64(pi2[2])),
    );
    let passed = Report::all_passed(&checks);
    let report = Report {
        command: "kks".into(),
        meta,
        checks,
        passed,
    };
    emit(&report, &args.common.out)?;
    Ok(passed)
}

fn dv3(v: &Vector3<f64>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

fn random_axis(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    use rand::Rng;
    Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ) * rng.random_range(0.0..3.0)
}

fn tangent_at(pi: &Vector3<f64>, rng: &mut ChaCha8Rng) -> Vector3<f64> {
    use rand::Rng;
    let raw = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let n = pi / pi.norm();
    raw - n * n.dot(&raw)
}

fn write_trajectory_csv(
    path: &PathBuf,
    trajectory: &Trajectory<f64>,
    monitor: &OrbitInvariants<f64>,
) -> Result<(), CliError> {
    let mut out = String::new();
    let k = 2;
    let mut header = vec!["t".to_string()];
    for a in 1..=k {
        for axis in ["x", "y", "z"] {
            header.push(format!("nu{a}{axis}"));
        }
    }
    header.push("H".into());
    for a in 1..=k {
        for b in a..=k {
            header.push(format!("inv_{a}{b}"));
        }
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for (t, state) in trajectory.times.iter().zip(&trajectory.states) {
        let stacked = state.stacked();
        let mut row = vec![format_f64(*t)];
        for v in stacked.iter() {
            row.push(format_f64(*v));
        }
        let invariants = monitor.eval(state).map_err(CliError::from)?;
        for v in invariants {
            row.push(format_f64(v));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn cmd_integrate(args: IntegrateArgs) -> Result<bool, CliError> {
    let tol = tolerance(&args.common)?;
    if args.dt <= 0.0 || args.t_end <= 0.0 {
        return Err(CliError::Usage("--dt and --t-end must be positive".into()));
    }
    if !(1..=2).contains(&args.component) {
        return Err(CliError::Usage("--component must be 1 or 2".into()));
    }
    let (mu1, mu2) = parse_triple_pair(&args.mu, "--mu")?;
    let component = args.component - 1;

    let algebra = LieAlgebraData::so3_with_metric(Some(DMatrix::identity(3, 3)));
    let field = ReducedOrbitField::new(algebra.clone(), 2).map_err(CliError::from)?;
    let monitor = OrbitInvariants::new(algebra.clone(), 2).map_err(CliError::from)?;

    let mut x0 = DVector::zeros(6);
    x0.rows_mut(0, 3).copy_from(&dv3(&mu1));
    x0.rows_mut(3, 3).copy_from(&dv3(&mu2));
    let trajectory = integrate(
        &field,
        component,
        State::Linear(x0),
        args.t_end,
        args.dt,
        Projection::None,
    )
    .map_err(CliError::from)?;
    let drift = conservation_report(&trajectory, &monitor).map_err(CliError::from)?;

    if let Some(path) = &args.csv {
        write_trajectory_csv(path, &trajectory, &monitor)?;
    }

    // Flow-projection commutation over t in [0, 1] from a seeded level-set
    // point.
    let mu = [mu1, mu2];
    let mut rng = sample_rng(args.common.seed, 0);
    let point = sample_group_level_point(&[dv3(&mu1), dv3(&mu2)], &mut rng)
        .map_err(CliError::from)?;
    let commutation = projection_commutation_check(
        &algebra,
        &mu,
        &point,
        component,
        1.0_f64.min(args.t_end),
        args.dt,
        &tol,
    )
    .map_err(CliError::from)?;

    let checks = vec![
        CheckRecord::pass_fail("reduced_invariant_drift", drift.worst_drift() < 1e-8)
            .with_value(drift.worst_drift()),
        CheckRecord::pass_fail(
            "commutation_sup_discrepancy",
            commutation.sup_discrepancy < 1e-6,
        )
        .with_value(commutation.sup_discrepancy),
        CheckRecord::pass_fail("momentum_drift", commutation.momentum_drift < 1e-7)
            .with_value(commutation.momentum_drift),
    ];

    let mut meta = meta("integrate", &args.common);
    meta.parameters.insert("dt".into(), args.dt);
    meta.parameters.insert("t_end".into(), args.t_end);
    meta.parameters
        .insert("component".into(), args.component as f64);
    meta.labels.insert(
        "mu".into(),
        format!(
            "{},{},{};{},{},{}",
            format_f64(mu1[0]),
            format_f64(mu1[1]),
            format_f64(mu1[2]),
            format_f64(mu2[0]),
            format_f64(mu2[1]),
            format_f64(mu2[2]),
        ),
    );
    if let Some(path) = &args.csv {
        meta.labels
            .insert("csv".into(), path.display().to_string());
    }
    let passed = Report::all_passed(&checks);
    let report = Report {
        command: "integrate".into(),
        meta,
        checks,
        passed,
    };
    emit(&report, &args.common.out)?;
    Ok(passed)
}

fn cmd_harmonic(args: HarmonicArgs) -> Result<bool, CliError> {
    if args.grid < 2 {
        return Err(CliError::Usage("--grid must be at least 2".into()));
    }
    if args.dt <= 0.0 || args.span <= 0.0 {
        return Err(CliError::Usage("--dt and --span must be positive".into()));
    }
    let pi1 = parse_triple(&args.pi1, "--pi1")?;
    let pi2 = match &args.pi2 {
        Some(text) => parse_triple(text, "--pi2")?,
        None => pi1 * args.lambda0,
    };
    let metric_diag = parse_triple(&args.metric, "--metric")?;
    if metric_diag.iter().any(|&x| x <= 0.0) {
        return Err(CliError::Usage("--metric entries must be positive".into()));
    }
    let metric = DMatrix::from_diagonal(&DVector::from_vec(vec![
        metric_diag[0],
        metric_diag[1],
        metric_diag[2],
    ]));
    let algebra = LieAlgebraData::so3_with_metric(Some(metric));

    let spacing = args.span / (args.grid - 1) as f64;
    let grid = SheetGrid {
        ns: args.grid,
        nt: args.grid,
        ds: spacing,
        dt: spacing,
    };
    let sheet = harmonic_sheet(&algebra, &pi1, &pi2, &grid, args.dt).map_err(CliError::from)?;

    if let Some(path) = &args.csv {
        let mut out = String::from("s,t,nu1x,nu1y,nu1z,nu2x,nu2y,nu2z\n");
        for (i, s) in sheet.s_values.iter().enumerate() {
            for (j, t) in sheet.t_values.iter().enumerate() {
                let mut row = vec![format_f64(*s), format_f64(*t)];
                for v in sheet.points[i][j].iter() {
                    row.push(format_f64(*v));
                }
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        std::fs::write(path, out)?;
    }

    let mut checks = Vec::new();
    match sheet.proportionality_residual {
        Some(residual) => {
            checks.push(
                CheckRecord::pass_fail("field_proportionality", residual < 1e-14)
                    .with_residual(residual),
            );
            checks.push(
                CheckRecord::pass_fail("sheet_commutator", sheet.commutator_sup < 1e-8)
                    .with_value(sheet.commutator_sup),
            );
        }
        None => {
            checks.push(CheckRecord::measured(
                "sheet_commutator",
                sheet.commutator_sup,
            ));
        }
    }
    checks.push(CheckRecord::measured(
        "dirichlet_energy",
        sheet.dirichlet_energy,
    ));

    let mut meta = meta("harmonic", &args.common);
    meta.parameters.insert("dt".into(), args.dt);
    meta.parameters.insert("span".into(), args.span);
    meta.parameters.insert("grid".into(), args.grid as f64);
    meta.labels.insert(
        "pi1".into(),
        format!("{},{},{}", format_f64(pi1[0]), format_f64(pi1[1]), format_f64(pi1[2])),
    );
    meta.labels.insert(
        "pi2".into(),
        format!("{},{},{}", format_f64(pi2[0]), format_f64(pi2[1]), format_f64(pi2[2])),
    );
    if let Some(path) = &args.csv {
        meta.labels
            .insert("csv".into(), path.display().to_string());
    }
    let passed = Report::all_passed(&checks);
    let report = Report {
        command: "harmonic".into(),
        meta,
        checks,
        passed,
    };
    emit(&report, &args.common.out)?;
    Ok(passed)
}
