mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use qcmod::block::BlockMatrix;
use qcmod::fractal::{OmegaSet, Word};
use qcmod::lorentz_ideal::{
    ampliation_norm_grouped, lorentz_p1_norm, singular_values, tuple_norm, IdealParameter, NormConvention,
    SingularSpectrum,
};
use qcmod::operator_model::{ampliate, discretize, ModelSpec, Multiplicity};
use qcmod::qc_estimator::{
    conditional_expectation, estimate_upper, evaluate, cell_projection, refine_candidate, ContractionCandidate,
    EstimatorOptions, StepSchedule, Xi,
};

const PS: [f64; 4] = [1.0, LOG4_LOG3, 2.0, f64::INFINITY];

fn param(i: usize) -> IdealParameter {
    IdealParameter::new(PS[i % PS.len()]).unwrap()
}

fn norm(x: &DMatrix<f64>, p: IdealParameter) -> f64 {
    lorentz_p1_norm(&singular_values(x).unwrap(), p)
}

fn spectrum_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..10.0f64, 0..20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lorentz_norm_matches_jacobi_oracle(seed in any::<u64>(), r in 1usize..10, c in 1usize..10, pi in 0usize..4) {
        let x = random_matrix(&mut rng(seed), r, c);
        let p = param(pi);
        let expected = oracle_lorentz(&jacobi_singular_values(&x), p.value());
        prop_assert!((norm(&x, p) - expected).abs() <= 1e-10 * expected.max(1.0));
    }

    #[test]
    fn triangle_and_homogeneity(seed in any::<u64>(), n in 1usize..12, pi in 0usize..4, t in -5.0..5.0f64) {
        let mut g = rng(seed);
        let (x, y) = (random_matrix(&mut g, n, n), random_matrix(&mut g, n, n));
        let p = param(pi);
        prop_assert!(norm(&(&x + &y), p) <= norm(&x, p) + norm(&y, p) + 1e-8);
        prop_assert!((norm(&(&x * t), p) - t.abs() * norm(&x, p)).abs() <= 1e-8 * (1.0 + norm(&x, p)));
    }

    #[test]
    fn grouped_ampliation_is_kronecker(seed in any::<u64>(), n in 1usize..8, m in 1usize..4, pi in 0usize..4) {
        let x = random_matrix(&mut rng(seed), n, n);
        let p = param(pi);
        let grouped = ampliation_norm_grouped(&singular_values(&x).unwrap(), m, p).unwrap();
        let direct = oracle_lorentz(&jacobi_singular_values(&kron_identity(&x, m)), p.value());
        prop_assert!((grouped - direct).abs() <= 1e-8 * direct.max(1.0));
    }

    #[test]
    fn ampliation_lower_bound(values in spectrum_strategy(), m in 1usize..5, pi in 0usize..4) {
        let s = SingularSpectrum::new(values).unwrap();
        let p = param(pi);
        let lhs = ampliation_norm_grouped(&s, m, p).unwrap();
        prop_assert!(lhs >= p.ampliation_factor(m) * lorentz_p1_norm(&s, p) - 1e-10);
    }

    #[test]
    fn direct_sum_bracket(a in spectrum_strategy(), b in spectrum_strategy(), pi in 0usize..4) {
        let p = param(pi);
        let sa = SingularSpectrum::new(a).unwrap();
        let sb = SingularSpectrum::new(b).unwrap();
        let (na, nb) = (lorentz_p1_norm(&sa, p), lorentz_p1_norm(&sb, p));
        let sum = lorentz_p1_norm(&SingularSpectrum::merge([sa, sb]), p);
        prop_assert!(sum >= na.max(nb) - 1e-10);
        prop_assert!(sum <= na + nb + 1e-10);
    }

    #[test]
    fn tilde_norm_rotation_invariant(seed in any::<u64>(), n in 1usize..8, theta in 0.0..6.3f64, pi in 0usize..4) {
        let mut g = rng(seed);
        let (a, b) = (random_symmetric(&mut g, n), random_symmetric(&mut g, n));
        let (c, s) = (theta.cos(), theta.sin());
        let rotated = [&a * c + &b * s, &b * c - &a * s];
        let p = param(pi);
        let before = tuple_norm(&[a, b], p, NormConvention::Tilde).unwrap();
        let after = tuple_norm(&rotated, p, NormConvention::Tilde).unwrap();
        prop_assert!((before - after).abs() <= 1e-9 * before.max(1.0));
    }

    #[test]
    fn tuple_norms_match_oracle(seed in any::<u64>(), n in 1usize..8, pi in 0usize..4) {
        let mut g = rng(seed);
        let tuple = [random_matrix(&mut g, n, n), random_matrix(&mut g, n, n)];
        let p = param(pi);
        let max = tuple_norm(&tuple, p, NormConvention::Max).unwrap();
        let tilde = tuple_norm(&tuple, p, NormConvention::Tilde).unwrap();
        prop_assert!((max - oracle_tuple_max(&tuple, p.value())).abs() <= 1e-9 * max.max(1.0));
        prop_assert!((tilde - oracle_tuple_tilde(&tuple, p.value())).abs() <= 1e-9 * tilde.max(1.0));
    }

    #[test]
    fn conditional_expectation_properties(seed in any::<u64>(), n in 1usize..5, m in 2usize..4) {
        let mut g = rng(seed);
        let h = random_matrix(&mut g, n * m, n * m);
        let psd = &h * h.transpose();
        let b = BlockMatrix::from_dense(psd.clone()).unwrap();
        let phi = conditional_expectation(&b, m).unwrap();
        let twice = conditional_expectation(&phi, m).unwrap();
        prop_assert!(twice.max_abs_diff(&phi).unwrap() <= 1e-12 * psd.amax().max(1.0));
        prop_assert!((phi.trace() - psd.trace()).abs() <= 1e-10 * psd.trace().max(1.0));
        let (lo, _) = phi.eigenvalue_range();
        prop_assert!(lo >= -1e-10 * psd.amax().max(1.0));
    }

    #[test]
    fn conditional_expectation_matches_group_average(seed in any::<u64>(), n in 1usize..5) {
        let b = random_matrix(&mut rng(seed), 2 * n, 2 * n);
        let phi = conditional_expectation(&BlockMatrix::from_dense(b.clone()).unwrap(), 2).unwrap();
        prop_assert!((phi.to_dense() - group_average_m2(&b)).amax() <= 1e-12);
    }
}

fn square_tau(level: usize) -> qcmod::operator_model::TupleOperator {
    discretize(&default_ifs(), &OmegaSet::whole(), level, &Multiplicity::Uniform(1), 4096).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn symmetrizing_contracts_commutators(seed in any::<u64>(), m in 2usize..4, pi in 0usize..4) {
        let tau = ampliate(&square_tau(2), m).unwrap();
        let d = tau.dim();
        let h = random_symmetric(&mut rng(seed), d);
        let eig = h.symmetric_eigen();
        let vals = eig.eigenvalues.map(|v| 1.0 / (1.0 + (-v).exp()));
        let b = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
        let b = BlockMatrix::from_dense(b).unwrap();
        let phi = conditional_expectation(&b, m).unwrap();
        let p = param(pi);
        for conv in [NormConvention::Max, NormConvention::Tilde] {
            let before = evaluate(&b, &tau, p, conv).unwrap().value;
            let after = evaluate(&phi, &tau, p, conv).unwrap().value;
            prop_assert!(after <= before + 1e-9 * before.max(1.0));
        }
    }

    #[test]
    fn projections_nest(seed in any::<u64>(), level in 0usize..3) {
        let tau = square_tau(3);
        let xi = Xi::Seeded(seed).vector(tau.dim()).unwrap();
        let coarse = cell_projection(&tau, Some(&xi), level).unwrap().into_matrix();
        let fine = cell_projection(&tau, Some(&xi), level + 1).unwrap().into_matrix();
        let product = BlockMatrix::product(&[&fine, &coarse]).unwrap();
        prop_assert!(product.max_abs_diff(&coarse).unwrap() <= 1e-12);
    }

    #[test]
    fn commutator_rank_is_bounded(seed in any::<u64>(), level in 0usize..3) {
        let tau = square_tau(3);
        let xi = Xi::Seeded(seed).vector(tau.dim()).unwrap();
        let cand = cell_projection(&tau, Some(&xi), level).unwrap();
        for c in tau.dense_components() {
            let a = cand.matrix().to_dense();
            let comm = &a * &c - &c * &a;
            let rank = jacobi_singular_values(&comm).iter().filter(|&&s| s > 1e-10).count();
            prop_assert!(rank <= 2 * cand.rank());
        }
    }

    #[test]
    fn refine_never_worsens(seed in any::<u64>(), pi in 0usize..4) {
        let tau = square_tau(2);
        let xi = Xi::Seeded(seed).vector(tau.dim()).unwrap();
        let a0 = cell_projection(&tau, Some(&xi), 1).unwrap();
        let floor = BlockMatrix::zeros(tau.dim());
        let p = param(pi);
        let out = refine_candidate(&tau, p, NormConvention::Max, &a0, &floor, 20, StepSchedule::InverseSqrt(0.05)).unwrap();
        let check = evaluate(out.candidate.matrix(), &tau, p, NormConvention::Max).unwrap().value;
        prop_assert!(out.value <= out.initial);
        prop_assert!((check - out.value).abs() <= 1e-9 * out.initial.max(1.0));
    }

    #[test]
    fn scaling_transports_exactly(first in 1usize..5, second in 1usize..5, pi in 0usize..4) {
        let ifs = default_ifs();
        let p = param(pi);
        let levels = [(1, 2), (2, 3)];
        let word = Word::from_one_based(&[first, second], 4).unwrap();
        let opts = EstimatorOptions::default();
        let whole = ModelSpec::single(ifs.clone(), OmegaSet::whole(), 1, 4096).unwrap();
        let cell = ModelSpec::single(ifs.clone(), OmegaSet::cell(word), 1, 4096).unwrap();
        for conv in [NormConvention::Max, NormConvention::Tilde] {
            let a = estimate_upper(&whole, p, conv, &levels, &opts).unwrap();
            let b = estimate_upper(&cell, p, conv, &levels, &opts).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((y - x / 9.0).abs() <= 1e-10 * x);
            }
        }
    }
}

#[test]
fn operator_norm_decays_with_level() {
    let ifs = default_ifs();
    let tau = square_tau(4);
    let norms: Vec<f64> = (0..4)
        .map(|l| {
            let a = cell_projection(&tau, None, l).unwrap();
            evaluate(a.matrix(), &tau, param(0), NormConvention::Max).unwrap().operator_norm
        })
        .collect();
    for (l, pair) in norms.windows(2).enumerate() {
        assert!(pair[1] < pair[0], "{norms:?}");
        assert!(pair[0] <= 2.0 * ifs.ratio().powi(l as i32) * ifs.diameter() + 1e-12);
    }
}

#[test]
fn candidates_stay_contractions() {
    let tau = square_tau(3);
    for l in 0..4 {
        let a = cell_projection(&tau, None, l).unwrap();
        let (lo, hi) = a.matrix().eigenvalue_range();
        assert!(lo >= -1e-12 && hi <= 1.0 + 1e-12);
        assert!(ContractionCandidate::new(a.matrix().clone(), None).is_ok());
    }
}
