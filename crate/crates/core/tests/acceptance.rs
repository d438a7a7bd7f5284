//! Acceptance suite: one test per criterion, each printing a pass line on
//! success (run with `-- --nocapture` to see them alongside the harness
//! output).
//!
//! Criteria 1-3 reproduce the reference decomposition of the trivariate
//! product-pair response under four correlation structures.  Criteria 4-6
//! are randomized oracles: degeneration to the classical decomposition,
//! exact surrogate reproduction, and the invariant suite.  Criterion 7 pins
//! the dimension-reduction evaluation counts.  Criterion 9 checks surrogate
//! sampling statistics.  Criterion 8 (external-process parity) lives in the
//! CLI crate, next to the process protocol it exercises.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use gadd_core::expansion::{assemble_and_solve, assemble_system, classical_add, IntegrationScheme};
use gadd_core::measure::{GaussianMeasure, ProductMeasure, VariableSubset};
use gadd_core::model::{CallableModel, Model, PolynomialModel};
use gadd_core::moments::{expectation, inner_product, Polynomial};
use gadd_core::polybasis::build_basis;
use gadd_core::quadrature::ReductionPlan;
use gadd_core::sensitivity::{indices, unreduced_correlative_index, variance};

const EXACT: IntegrationScheme = IntegrationScheme::Tensor { points: 8 };

fn case_measure(case: usize) -> GaussianMeasure {
    let (r12, r13, r23) = match case {
        1 => (0.0, 0.0, 0.0),
        2 => (0.2, 0.2, 0.2),
        3 => (0.2, 0.4, 0.8),
        4 => (-0.2, 0.4, -0.8),
        _ => unreachable!(),
    };
    GaussianMeasure::validate(DMatrix::from_row_slice(
        3,
        3,
        &[1.0, r12, r13, r12, 1.0, r23, r13, r23, 1.0],
    ))
    .unwrap()
}

fn reference_model() -> PolynomialModel {
    PolynomialModel::quadratic_symmetric([2.0, 1.0, 2.0, 1.0, 2.0, 1.0])
}

fn subset(v: &[usize]) -> VariableSubset {
    VariableSubset::new(v.to_vec()).unwrap()
}

/// Per-case reference data: constant, univariate components as
/// (constant, linear, quadratic) per variable, bivariate components as
/// (constant, x_i^2, x_i x_j, x_j^2) per pair, mean, variance.
struct CaseReference {
    constant: f64,
    univariate: [[f64; 3]; 3],
    bivariate: [[f64; 4]; 3],
    variance: f64,
}

fn case_reference(case: usize) -> CaseReference {
    match case {
        1 => CaseReference {
            constant: 12.0,
            univariate: [[0.0, 4.0, 0.0]; 3],
            bivariate: [[0.0, 0.0, 1.0, 0.0]; 3],
            variance: 51.0,
        },
        2 => CaseReference {
            constant: 63.0 / 5.0,
            univariate: [[-5.0 / 13.0, 4.0, 5.0 / 13.0]; 3],
            bivariate: [[12.0 / 65.0, -5.0 / 26.0, 1.0, -5.0 / 26.0]; 3],
            variance: 1794.0 / 25.0,
        },
        3 => CaseReference {
            constant: 67.0 / 5.0,
            univariate: [
                [-405.0 / 754.0, 4.0, 405.0 / 754.0],
                [-725.0 / 1066.0, 4.0, 725.0 / 1066.0],
                [-990.0 / 1189.0, 4.0, 990.0 / 1189.0],
            ],
            bivariate: [
                [12.0 / 65.0, -5.0 / 26.0, 1.0, -5.0 / 26.0],
                [42.0 / 145.0, -10.0 / 29.0, 1.0, -10.0 / 29.0],
                [36.0 / 205.0, -20.0 / 41.0, 1.0, -20.0 / 41.0],
            ],
            variance: 2514.0 / 25.0,
        },
        4 => CaseReference {
            constant: 57.0 / 5.0,
            univariate: [
                [-115.0 / 754.0, 4.0, 115.0 / 754.0],
                [725.0 / 1066.0, 4.0, -725.0 / 1066.0],
                [170.0 / 1189.0, 4.0, -170.0 / 1189.0],
            ],
            bivariate: [
                [-12.0 / 65.0, 5.0 / 26.0, 1.0, 5.0 / 26.0],
                [42.0 / 145.0, -10.0 / 29.0, 1.0, -10.0 / 29.0],
                [-36.0 / 205.0, 20.0 / 41.0, 1.0, 20.0 / 41.0],
            ],
            variance: 774.0 / 25.0,
        },
        _ => unreachable!(),
    }
}

const PAIRS: [[usize; 2]; 3] = [[1, 2], [1, 3], [2, 3]];

#[test]
fn criterion_1_component_functions_and_moments() {
    let started = Instant::now();
    let model = reference_model();
    for case in 1..=4 {
        let measure = case_measure(case);
        let reference = case_reference(case);
        let exp = assemble_and_solve(&model, &measure, 2, 2, EXACT).unwrap();

        let rel = |got: f64, want: f64| (got - want).abs() <= 1e-9 * want.abs();
        assert!(
            rel(exp.constant(), reference.constant),
            "case {}: constant {} vs {}",
            case,
            exp.constant(),
            reference.constant
        );

        for (i, want) in reference.univariate.iter().enumerate() {
            let y = exp.component_function(&subset(&[i + 1])).unwrap();
            let got = [
                y.coefficient(&[0]),
                y.coefficient(&[1]),
                y.coefficient(&[2]),
            ];
            for (g, w) in got.iter().zip(want.iter()) {
                assert!(
                    (g - w).abs() < 1e-9,
                    "case {} variable {}: {:?} vs {:?}",
                    case,
                    i + 1,
                    got,
                    want
                );
            }
        }
        for (pair, want) in PAIRS.iter().zip(reference.bivariate.iter()) {
            let y = exp.component_function(&subset(pair)).unwrap();
            let got = [
                y.coefficient(&[0, 0]),
                y.coefficient(&[2, 0]),
                y.coefficient(&[1, 1]),
                y.coefficient(&[0, 2]),
            ];
            for (g, w) in got.iter().zip(want.iter()) {
                assert!(
                    (g - w).abs() < 1e-9,
                    "case {} pair {:?}: {:?} vs {:?}",
                    case,
                    pair,
                    got,
                    want
                );
            }
        }

        let sigma2 = variance(&exp).unwrap().total;
        assert!(
            rel(sigma2, reference.variance),
            "case {}: variance {} vs {}",
            case,
            sigma2,
            reference.variance
        );

        // The trivariate component vanishes; visible once the truncation
        // admits trivariate indices.
        let wide = assemble_and_solve(&model, &measure, 3, 3, EXACT).unwrap();
        let y123 = wide.component_function(&subset(&[1, 2, 3])).unwrap();
        for (_, &c) in y123.terms() {
            assert!(
                c.abs() < 1e-9,
                "case {}: trivariate coefficient {}",
                case,
                c
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {:?}", elapsed);
    println!(
        "acceptance criterion 1 (component functions, means, variances; {:?}): PASS",
        elapsed
    );
}

/// Reference triplets (variance-driven, covariance-driven, total) per case,
/// rows ordered X1, X2, X3, (X1,X2), (X1,X3), (X2,X3), (X1,X2,X3).
fn triplet_reference(case: usize) -> [[f64; 3]; 7] {
    match case {
        1 => [
            [0.313725, 0.0, 0.313725],
            [0.313725, 0.0, 0.313725],
            [0.313725, 0.0, 0.313725],
            [0.019608, 0.0, 0.019608],
            [0.019608, 0.0, 0.019608],
            [0.019608, 0.0, 0.019608],
            [0.0, 0.0, 0.0],
        ],
        2 => [
            [0.227088, 0.089780, 0.316868],
            [0.227088, 0.089780, 0.316868],
            [0.227088, 0.089780, 0.316868],
            [0.012349, 0.004116, 0.016465],
            [0.012349, 0.004116, 0.016465],
            [0.012349, 0.004116, 0.016465],
            [0.0, 0.0, 0.0],
        ],
        3 => [
            [0.164847, 0.096992, 0.261839],
            [0.168309, 0.165600, 0.333909],
            [0.172897, 0.202314, 0.375211],
            [0.008812, 0.008812, 0.017624],
            [0.006049, 0.004321, 0.010370],
            [0.000786, 0.000262, 0.001048],
            [0.0, 0.0, 0.0],
        ],
        4 => [
            [0.518299, 0.103039, 0.621337],
            [0.546677, -0.509771, 0.036905],
            [0.518116, -0.201389, 0.316728],
            [0.028623, -0.014311, 0.014311],
            [0.019647, -0.014034, 0.005614],
            [0.002553, 0.002553, 0.005105],
            [0.0, 0.0, 0.0],
        ],
        _ => unreachable!(),
    }
}

#[test]
fn criterion_2_sensitivity_triplets() {
    let started = Instant::now();
    let model = reference_model();
    let subsets: [&[usize]; 7] = [&[1], &[2], &[3], &[1, 2], &[1, 3], &[2, 3], &[1, 2, 3]];
    for case in 1..=4 {
        let exp = assemble_and_solve(&model, &case_measure(case), 2, 2, EXACT).unwrap();
        let report = indices(&exp, 0.99).unwrap();
        let reference = triplet_reference(case);
        for (u, want) in subsets.iter().zip(reference.iter()) {
            let t = report.triplet(&subset(u)).unwrap();
            let got = [t.variance_driven, t.covariance_driven, t.total];
            for (g, w) in got.iter().zip(want.iter()) {
                assert!(
                    (g - w).abs() <= 1e-6,
                    "case {} subset {:?}: {:?} vs {:?}",
                    case,
                    u,
                    got,
                    want
                );
            }
        }
        let (sv, sc) = (report.sum_variance_driven(), report.sum_covariance_driven());
        match case {
            1 => {
                assert!((sv - 1.0).abs() < 1e-9 && sc.abs() < 1e-9);
            }
            2 => {
                assert!((sv - 0.718312).abs() <= 1e-6, "case 2 column sum {}", sv);
                assert!((sc - 0.281688).abs() <= 1e-6, "case 2 column sum {}", sc);
            }
            3 => {
                // Printed at four decimals only.
                assert!((sv - 0.5217).abs() <= 1e-4, "case 3 column sum {}", sv);
                assert!((sc - 0.4783).abs() <= 1e-4, "case 3 column sum {}", sc);
            }
            4 => {
                // The reference prints these at five decimals (the exact
                // values are 1.6339138 / -0.6339138), so the comparison
                // runs at the print's half-ulp.
                assert!((sv - 1.63391).abs() <= 5e-6, "case 4 column sum {}", sv);
                assert!((sc + 0.63391).abs() <= 5e-6, "case 4 column sum {}", sc);
            }
            _ => unreachable!(),
        }
        let total: f64 = report.triplets.iter().map(|t| t.total).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {:?}", elapsed);
    println!(
        "acceptance criterion 2 (sensitivity index triplets; {:?}): PASS",
        elapsed
    );
}

#[test]
fn criterion_3_total_effects_and_ranks() {
    let model = reference_model();
    struct EffectRef {
        values: [f64; 3],
        ranks: [usize; 3],
        tied: bool,
    }
    let references = [
        EffectRef {
            values: [0.352941; 3],
            ranks: [1, 2, 3],
            tied: true,
        },
        EffectRef {
            values: [0.349798; 3],
            ranks: [1, 2, 3],
            tied: true,
        },
        EffectRef {
            values: [0.289833, 0.352581, 0.386628],
            ranks: [3, 2, 1],
            tied: false,
        },
        EffectRef {
            values: [0.641262, 0.056322, 0.327446],
            ranks: [1, 3, 2],
            tied: false,
        },
    ];
    for (case, reference) in (1..=4).zip(references.iter()) {
        let exp = assemble_and_solve(&model, &case_measure(case), 2, 2, EXACT).unwrap();
        let report = indices(&exp, 0.99).unwrap();
        for (e, (&want, &rank)) in report
            .total_effects
            .iter()
            .zip(reference.values.iter().zip(reference.ranks.iter()))
        {
            assert!(
                (e.value - want).abs() <= 1e-6,
                "case {} variable {}: {} vs {}",
                case,
                e.variable,
                e.value,
                want
            );
            assert_eq!(e.tied, reference.tied, "case {} tie flag", case);
            if !reference.tied {
                assert_eq!(e.rank, rank, "case {} variable {} rank", case, e.variable);
            }
        }
    }
    println!("acceptance criterion 3 (total effects and rankings): PASS");
}

/// Random sparse polynomial over `n` variables with terms of at most
/// `max_vars` variables and total degree at most `degree`.
fn random_polynomial(rng: &mut ChaCha12Rng, n: usize, max_vars: usize, degree: u32) -> Polynomial {
    let sub = VariableSubset::full(n);
    let mut poly = Polynomial::constant(sub.clone(), rng.gen_range(-2.0..2.0));
    // A guaranteed linear term keeps the response variance away from zero.
    let mut lead = vec![0u32; n];
    lead[rng.gen_range(0..n)] = 1;
    poly.axpy(
        rng.gen_range(0.5..1.5),
        &Polynomial::monomial(sub.clone(), lead, 1.0).unwrap(),
    );
    for _ in 0..6 {
        let k = rng.gen_range(1..=max_vars.min(n));
        let mut vars: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = rng.gen_range(i..n);
            vars.swap(i, j);
        }
        let mut e = vec![0u32; n];
        let mut budget = degree as i64 - k as i64;
        for &v in &vars[..k] {
            let extra = if budget > 0 {
                rng.gen_range(0..=budget.min(degree as i64 - 1))
            } else {
                0
            };
            budget -= extra;
            e[v] = 1 + extra as u32;
        }
        poly.axpy(
            rng.gen_range(-2.0..2.0),
            &Polynomial::monomial(sub.clone(), e, 1.0).unwrap(),
        );
    }
    poly
}

/// Random well-conditioned covariance with unit-ish diagonal.
fn random_covariance(rng: &mut ChaCha12Rng, n: usize) -> DMatrix<f64> {
    let w = DMatrix::from_fn(n, n + 2, |_, _| rng.gen_range(-1.0..1.0));
    let gram: DMatrix<f64> = &w * w.transpose();
    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            cov[(i, j)] = gram[(i, j)] / (gram[(i, i)] * gram[(j, j)]).sqrt();
        }
    }
    // Blend toward the identity so the correlations stay comfortably away
    // from the singular boundary.
    for i in 0..n {
        for j in 0..n {
            cov[(i, j)] *= 0.7;
        }
        cov[(i, i)] += 0.3;
    }
    cov
}

#[test]
fn criterion_4_diagonal_covariance_degenerates_to_classical() {
    let mut rng = ChaCha12Rng::seed_from_u64(41);
    for trial in 0..20 {
        let n = rng.gen_range(2..=4usize);
        let diag = DMatrix::from_fn(
            n,
            n,
            |i, j| {
                if i == j {
                    rng.gen_range(0.5..2.0)
                } else {
                    0.0
                }
            },
        );
        let measure = GaussianMeasure::validate(diag).unwrap();
        let poly = random_polynomial(&mut rng, n, n, 4);
        let model = PolynomialModel::new(n, poly).unwrap();

        let basis = build_basis(&measure, n, 4).unwrap();
        let system = assemble_system(&model, &basis, EXACT).unwrap();
        for r in 0..basis.len() {
            for c in 0..basis.len() {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!(
                    (system.a[(r, c)] - want).abs() < 1e-12,
                    "trial {}: A[{},{}] = {:e}",
                    trial,
                    r,
                    c,
                    system.a[(r, c)]
                );
            }
        }

        let gen = assemble_and_solve(&model, &measure, n, 4, EXACT).unwrap();
        let cls = classical_add(&model, &measure, n, 4, EXACT).unwrap();
        assert!((gen.constant() - cls.constant()).abs() < 1e-10);
        for (f, &c) in gen.basis().functions().iter().zip(gen.coefficients()) {
            let d = cls.coefficient(f.subset(), f.index()).unwrap();
            assert!(
                (c - d).abs() < 1e-10,
                "trial {}: {} {} coefficient {} vs {}",
                trial,
                f.subset(),
                f.index(),
                c,
                d
            );
        }
    }
    println!("acceptance criterion 4 (classical degeneration, identity system): PASS");
}

#[test]
fn criterion_5_surrogate_reproduces_bivariate_polynomials() {
    let mut rng = ChaCha12Rng::seed_from_u64(55);
    for trial in 0..20 {
        let n = rng.gen_range(2..=5usize);
        let m = rng.gen_range(2..=4u32);
        let measure = GaussianMeasure::validate(random_covariance(&mut rng, n)).unwrap();
        let poly = random_polynomial(&mut rng, n, 2, m);
        let model = PolynomialModel::new(n, poly.clone()).unwrap();
        let exp = assemble_and_solve(&model, &measure, 2.min(n), m, EXACT).unwrap();
        for point in measure.sample(100, 1000 + trial as u64) {
            let x = point.as_slice();
            let y = poly.evaluate(x).unwrap();
            let s = exp.evaluate_surrogate(x).unwrap();
            assert!(
                (s - y).abs() <= 1e-8 * y.abs().max(1.0),
                "trial {} (n = {}, m = {}): surrogate {} vs model {}",
                trial,
                n,
                m,
                s,
                y
            );
        }
    }
    println!("acceptance criterion 5 (exact surrogate reproduction): PASS");
}

#[test]
fn criterion_6_invariant_suite() {
    let mut rng = ChaCha12Rng::seed_from_u64(66);
    for trial in 0..50 {
        let n = rng.gen_range(2..=4usize);
        let m = rng.gen_range(2..=4u32);
        let s = rng.gen_range(1..=2usize.min(n));
        let measure = GaussianMeasure::validate(random_covariance(&mut rng, n)).unwrap();

        let basis = build_basis(&measure, s, m).unwrap();
        for f in basis.functions() {
            let marginal = measure.marginal(f.subset()).unwrap();
            let mean = expectation(f.poly(), &marginal).unwrap();
            assert!(mean.abs() < 1e-10, "trial {}: basis mean {:e}", trial, mean);
            assert!(
                (f.norm_check() - 1.0).abs() < 1e-10,
                "trial {}: norm {}",
                trial,
                f.norm_check()
            );
            for g in basis.functions() {
                if g.subset().is_proper_subset_of(f.subset()) {
                    let ip = inner_product(f.poly(), g.poly(), &marginal).unwrap();
                    assert!(ip.abs() < 1e-8, "trial {}: basis hierarchy {:e}", trial, ip);
                }
            }
        }

        let poly = random_polynomial(&mut rng, n, s, m);
        let model = PolynomialModel::new(n, poly).unwrap();
        let exp = assemble_and_solve(&model, &measure, s, m, EXACT).unwrap();

        // Component zero means and hierarchical orthogonality.
        for u in exp.basis().subsets() {
            let y_u = exp.component_function(u).unwrap();
            if y_u.is_zero() {
                continue;
            }
            let marginal = measure.marginal(u).unwrap();
            let mean = expectation(&y_u, &marginal).unwrap();
            assert!(
                mean.abs() < 1e-9,
                "trial {}: component mean {:e}",
                trial,
                mean
            );
            for v in exp.basis().subsets() {
                if v.is_proper_subset_of(u) {
                    let y_v = exp.component_function(v).unwrap();
                    if y_v.is_zero() {
                        continue;
                    }
                    let ip = inner_product(&y_u, &y_v, &marginal).unwrap();
                    assert!(
                        ip.abs() < 1e-8,
                        "trial {}: component hierarchy {:e}",
                        trial,
                        ip
                    );
                }
            }
        }

        // Index sums and the unreduced correlative equivalence.
        let report = match indices(&exp, 0.99) {
            Ok(r) => r,
            Err(gadd_core::GaddError::DegenerateResponse { .. }) => continue,
            Err(e) => panic!("trial {}: {}", trial, e),
        };
        let total: f64 = report.triplets.iter().map(|t| t.total).sum();
        assert!(
            (total - 1.0).abs() < 1e-9,
            "trial {}: index sum {}",
            trial,
            total
        );
        for t in &report.triplets {
            assert!(t.variance_driven >= -1e-15);
            if t.subset.len() <= s {
                let unreduced = unreduced_correlative_index(&exp, &t.subset).unwrap();
                assert!(
                    (unreduced - t.covariance_driven).abs() < 1e-9,
                    "trial {}: correlative index {} vs {}",
                    trial,
                    unreduced,
                    t.covariance_driven
                );
            }
        }
    }
    println!("acceptance criterion 6 (invariant suite, 50 randomized draws): PASS");
}

#[test]
fn criterion_7_reduction_evaluation_counts() {
    let n_dim = 20;
    let cov = DMatrix::from_fn(n_dim, n_dim, |i, j| {
        0.04 * (-((i as f64 - j as f64).abs()) / 4.0).exp()
    });
    let measure = GaussianMeasure::validate(cov).unwrap();
    let pm = ProductMeasure::joint(measure.full_marginal());
    let model = CallableModel::new(n_dim, |x: &[f64]| {
        Ok(x.iter().map(|v| (1.0 + v).ln_1p().abs() + v * v).sum())
    });
    for (points, expected) in [(3usize, 801u64), (5, 3121)] {
        let plan = ReductionPlan::new(n_dim, 2, points).unwrap();
        let before = model.evaluation_count();
        let outcome = plan.integrate(&pm, &model, |_| Ok(1.0)).unwrap();
        assert_eq!(outcome.unique_evaluations as u64, expected);
        assert_eq!(
            model.evaluation_count() - before,
            expected,
            "cache must evaluate each unique point once"
        );
        assert_eq!(plan.expected_unique_evaluations() as u64, expected);
    }
    println!("acceptance criterion 7 (dimension-reduction evaluation counts 801/3121): PASS");
}

#[test]
fn criterion_9_surrogate_sampling_statistics() {
    let measure = case_measure(1);
    let model = reference_model();
    let exp = assemble_and_solve(&model, &measure, 2, 2, EXACT).unwrap();

    let n = 1_000_000usize;
    let samples = measure.sample(n, 909);
    let mut sum = 0.0;
    let mut values = Vec::with_capacity(n);
    for p in &samples {
        let v = exp.evaluate_surrogate(p.as_slice()).unwrap();
        sum += v;
        values.push(v);
    }
    let mean = sum / n as f64;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for v in &values {
        let d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    let var = m2 / (n as f64 - 1.0);
    m4 /= n as f64;

    let se_mean = (var / n as f64).sqrt();
    assert!(
        (mean - 12.0).abs() <= 3.0 * se_mean,
        "sample mean {} vs 12 (3se = {})",
        mean,
        3.0 * se_mean
    );
    let se_var = ((m4 - var * var).max(0.0) / n as f64).sqrt();
    assert!(
        (var - 51.0).abs() <= 3.0 * se_var,
        "sample variance {} vs 51 (3se = {})",
        var,
        3.0 * se_var
    );
    println!("acceptance criterion 9 (surrogate sampling statistics): PASS");
}
