use proptest::prelude::*;

use qhmm::densemath::{ComplexMatrix, DEFAULT_RANK_TOL};
use qhmm::inference::{
    distribution_total, enumerate_distribution, forward, marginalization_trace_residual, next_symbol_distribution,
    viterbi, DEFAULT_ENUM_CAP,
};
use qhmm::models::{random_eligible_qhmm, random_qhmm};
use qhmm::random;
use qhmm::spectral::{hankel, hankel_rank, StringBasis};

fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    (a - b).frobenius_norm() <= tol * (1.0 + a.frobenius_norm().max(b.frobenius_norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matmul_is_associative(seed in any::<u64>(), r in 1usize..5, k in 1usize..5, l in 1usize..5, c in 1usize..5) {
        let mut rng = random::rng(seed);
        let a = random::ginibre(&mut rng, r, k);
        let b = random::ginibre(&mut rng, k, l);
        let d = random::ginibre(&mut rng, l, c);
        prop_assert!(close(&(&(&a * &b) * &d), &(&a * &(&b * &d)), 1e-12));
    }

    #[test]
    fn trace_is_cyclic(seed in any::<u64>(), r in 1usize..5, c in 1usize..5) {
        let mut rng = random::rng(seed);
        let a = random::ginibre(&mut rng, r, c);
        let b = random::ginibre(&mut rng, c, r);
        let ab = (&a * &b).trace().unwrap();
        let ba = (&b * &a).trace().unwrap();
        prop_assert!((ab - ba).norm() <= 1e-12 * (1.0 + ab.norm()));
    }

    #[test]
    fn partial_trace_keeps_the_trace(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4) {
        let mut rng = random::rng(seed);
        let rho = random::density(&mut rng, d1, 0.6);
        let sigma = random::density(&mut rng, d2, 0.5);
        let joint = rho.matrix().kron(sigma.matrix());
        let reduced = joint.partial_trace_second(d1, d2).unwrap();
        prop_assert!((reduced.trace().unwrap().re - 0.3).abs() < 1e-12);
        prop_assert!(close(&reduced, &rho.matrix().scale_re(0.5), 1e-12));
    }

    #[test]
    fn eigenvalues_sum_to_the_trace(seed in any::<u64>(), n in 1usize..6) {
        let g = random::ginibre(&mut random::rng(seed), n, n);
        let h = (&g + &g.adjoint()).scale_re(0.5);
        let sum: f64 = h.hermitian_eigenvalues().unwrap().iter().sum();
        prop_assert!((sum - h.trace().unwrap().re).abs() < 1e-10 * (1.0 + h.frobenius_norm()));
    }

    #[test]
    fn random_channels_preserve_trace(seed in any::<u64>(), din in 1usize..4, dout in 1usize..4, rank in 1usize..3) {
        let mut rng = random::rng(seed);
        let ch = random::channel(&mut rng, din, dout, rank);
        prop_assert!(ch.is_trace_preserving());
        let rho = random::density(&mut rng, din, 1.0);
        prop_assert!((ch.apply(&rho).unwrap().trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sub_tom_products_are_sub_toms(seed in any::<u64>(), n in 1usize..4, m in 1usize..4, p in 1usize..4, d in 1usize..3) {
        let mut rng = random::rng(seed);
        let a = random::sub_tom(&mut rng, m, n, d, d);
        let b = random::sub_tom(&mut rng, p, m, d, d);
        let ba = b.product(&a).unwrap();
        prop_assert!(ba.check().is_ok());
        prop_assert_eq!((ba.out_size(), ba.in_size()), (p, n));
    }

    #[test]
    fn toms_map_vector_states_to_vector_states(seed in any::<u64>(), n in 1usize..4, d in 1usize..4) {
        let mut rng = random::rng(seed);
        let t = random::tom(&mut rng, n, d);
        let alpha = random::vector_state(&mut rng, n, d);
        let out = t.apply(&alpha).unwrap();
        prop_assert!(out.check().is_ok());
        prop_assert!((out.as_sub().total_trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn distributions_sum_to_a_state(seed in any::<u64>(), n in 1usize..4, m in 1usize..4, d in 1usize..3, t in 1usize..4) {
        let model = random_qhmm(n, m, d, seed);
        let dist = enumerate_distribution(&model, t, DEFAULT_ENUM_CAP).unwrap();
        prop_assert_eq!(dist.len(), m.pow(t as u32));
        let total = distribution_total(&dist).unwrap();
        prop_assert!((total.trace().unwrap().re - 1.0).abs() < 1e-9);
        prop_assert!(total.hermitian_eigenvalues().unwrap()[0] > -1e-9);
    }

    #[test]
    fn next_symbol_probabilities_sum_to_one(seed in any::<u64>(), n in 1usize..4, m in 1usize..4, d in 1usize..3) {
        let model = random_qhmm(n, m, d, seed);
        let prefix: Vec<String> = model.alphabet().iter().take(2).cloned().collect();
        let alpha = forward(&model, &prefix).unwrap().alpha;
        let p = next_symbol_distribution(&model, &alpha).unwrap();
        prop_assert!((p.values().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.values().all(|&x| x >= -1e-12));
        prop_assert!(marginalization_trace_residual(&model, &prefix).unwrap() < 1e-12);
    }

    #[test]
    fn viterbi_path_reproduces_its_trace(seed in any::<u64>(), n in 1usize..4, m in 1usize..3, d in 1usize..3) {
        let model = random_eligible_qhmm(n, m, d, seed);
        let seq: Vec<String> = (0..4).map(|k| model.alphabet()[k % m].clone()).collect();
        let r = viterbi(&model, &seq).unwrap();
        let mut state = model.pi().parts()[r.path_indices[0]].clone();
        for (k, o) in seq.iter().enumerate() {
            let v = model.symbol_index(o).unwrap();
            state = model.transition(v).entry(r.path_indices[k + 1], r.path_indices[k]).apply(&state).unwrap();
        }
        prop_assert!((state.trace() - r.prob).abs() < 1e-12);
        prop_assert!(r.prob <= forward(&model, &seq).unwrap().prob + 1e-12);
    }

    #[test]
    fn hankel_rows_marginalise(seed in any::<u64>(), n in 1usize..4, m in 1usize..4, d in 1usize..3) {
        let model = random_qhmm(n, m, d, seed);
        let rows = StringBasis::new(model.alphabet(), 2);
        let cols = StringBasis::new(model.alphabet(), 1);
        let h = hankel(&model, &rows, &cols).unwrap();
        for row in &h.values {
            let tail: f64 = row[1..].iter().sum();
            prop_assert!((tail - row[0]).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn hankel_rank_is_monotone_and_bounded(seed in any::<u64>(), n in 1usize..3, m in 1usize..3, d in 1usize..3) {
        let model = random_qhmm(n, m, d, seed);
        let ranks: Vec<usize> = (0..=3).map(|l| hankel_rank(&model, l, DEFAULT_RANK_TOL).unwrap()).collect();
        prop_assert!(ranks.windows(2).all(|w| w[0] <= w[1]), "{:?}", ranks);
        prop_assert!(ranks[3] <= n * d * d, "{:?}", ranks);
    }
}
