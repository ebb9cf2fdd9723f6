use poprec_core::analysis::{dual_optimum, translate_poly, RationalPolynomial};
use poprec_core::inverse::{check_sensitivity_bound, natural_estimator, residual, solve_local_inverse};
use poprec_core::matrices::{build_channel_matrix, canonical_nodes};
use poprec_core::rational::{q, qi};
use poprec_core::types::{xor_mask, CountHistogram, LossySample};
use poprec_core::{BitString, Q};
use proptest::prelude::*;

fn mu_strategy() -> impl Strategy<Value = Q> {
    (1i64..=9).prop_map(|k| q(k, 10))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn duality_and_change_of_basis_agree(n in 0usize..=5, mu in mu_strategy(), e in 1i64..=9) {
        let eps = q(e, 20);
        let direct = solve_local_inverse(n, &mu, &eps).unwrap();
        let r = dual_optimum(n, &mu, &eps, &canonical_nodes(n)).unwrap();
        prop_assert_eq!(&r.primal_value, &direct.sigma);
        prop_assert_eq!(&r.dual_value, &direct.sigma);
        let a = build_channel_matrix(n, &mu).unwrap();
        let v = poprec_core::matrices::EstimatorVector::new(r.v.clone());
        prop_assert!(residual(&a, &v).unwrap() <= eps);
    }

    #[test]
    fn certificates_meet_the_sensitivity_bound(n in 1usize..=6, mu in mu_strategy(), e in 1i64..=4) {
        let cert = solve_local_inverse(n, &mu, &q(e, 40)).unwrap();
        prop_assert!(check_sensitivity_bound(&cert).holds);
        prop_assert!(cert.sigma <= poprec_core::matrices::EstimatorVector::sup_norm(&natural_estimator(n, &mu).unwrap()).max(qi(1)));
    }

    #[test]
    fn xor_is_an_involution_on_parsed_samples(s in "[01?]{1,70}", bits in prop::collection::vec(any::<bool>(), 70)) {
        let sample: LossySample = s.parse().unwrap();
        let a = BitString::from_bits(&bits[..sample.len()]);
        let once = xor_mask(&sample, &a).unwrap();
        prop_assert_eq!(once.erased_count(), sample.erased_count());
        prop_assert_eq!(xor_mask(&once, &a).unwrap(), sample);
    }

    #[test]
    fn histogram_frequencies_sum_to_one(counts in prop::collection::vec(0u64..1000, 1..12)) {
        prop_assume!(counts.iter().any(|c| *c > 0));
        let h = CountHistogram::from_counts(counts);
        let total = h.freqs().into_iter().fold(Q::from_integer(0.into()), |a, b| a + b);
        prop_assert_eq!(total, qi(1));
    }

    #[test]
    fn translation_is_a_ring_map(a in prop::collection::vec(-9i64..9, 1..5), b in prop::collection::vec(-9i64..9, 1..5), mu in mu_strategy()) {
        let pa = RationalPolynomial::new(a.iter().map(|&c| qi(c)).collect());
        let pb = RationalPolynomial::new(b.iter().map(|&c| qi(c)).collect());
        let mut prod = vec![qi(0); a.len() + b.len() - 1];
        for (i, x) in pa.coeffs.iter().enumerate() {
            for (j, y) in pb.coeffs.iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        let prod = RationalPolynomial::new(prod);
        let ta = translate_poly(&pa, &mu).unwrap();
        let tb = translate_poly(&pb, &mu).unwrap();
        let tp = translate_poly(&prod, &mu).unwrap();
        for k in -3i64..=3 {
            let x = q(k, 2);
            prop_assert_eq!(tp.eval(&x), ta.eval(&x) * tb.eval(&x));
        }
    }
}
