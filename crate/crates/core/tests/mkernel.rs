use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tpbo_core::mkernel::{expand_features, m_dot, tuned_weights_oracle, DEFAULT_TRUNCATION_DEGREE};
use tpbo_core::{min_eigenvalue, Error, FreeKernelSpec, KernelFamily, TunedKernel};

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn points(m: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(point(n), m)
}

fn refs(p: &[Vec<f64>]) -> Vec<&[f64]> {
    p.iter().map(Vec::as_slice).collect()
}

fn spec_strategy() -> impl Strategy<Value = FreeKernelSpec> {
    prop_oneof![
        Just(FreeKernelSpec::linear()),
        (1u32..4, 0.0f64..2.0).prop_map(|(p, c)| FreeKernelSpec::polynomial(p, c)),
        (0.1f64..1.0).prop_map(FreeKernelSpec::sinh),
        (0.1f64..1.0).prop_map(FreeKernelSpec::exponential),
        (0.1f64..2.0).prop_map(FreeKernelSpec::se),
    ]
}

proptest! {
    #[test]
    fn m_kernels_are_permutation_symmetric(spec in spec_strategy(), pts in points(4, 3), perm in Just([2usize, 0, 3, 1])) {
        let a = spec.eval(&refs(&pts)).unwrap();
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| pts[i].clone()).collect();
        let b = spec.eval(&refs(&permuted)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn linear_kernel_is_the_m_dot(pts in points(4, 3)) {
        let k = FreeKernelSpec::linear().eval(&refs(&pts)).unwrap();
        prop_assert!((k - m_dot(&refs(&pts)).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn se_pair_is_the_gaussian(nu in 0.01f64..5.0, x in point(2), y in point(2)) {
        let k = FreeKernelSpec::se(nu).eval(&[&x, &y]).unwrap();
        let d2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        prop_assert!((k - (-0.5 * nu * d2).exp()).abs() <= 1e-12);
    }

    #[test]
    fn se_arity_four_matches_truncated_expansion(nu in 0.05f64..2.0, pts in points(4, 2)) {
        let spec = FreeKernelSpec::se(nu);
        let exp = expand_features(&spec, 2, DEFAULT_TRUNCATION_DEGREE).unwrap();
        let closed = spec.eval(&refs(&pts)).unwrap();
        prop_assert!((closed - exp.eval(&refs(&pts))).abs() <= 1e-6);
    }

    #[test]
    fn finite_expansions_are_exact(p in 1u32..4, c in 0.0f64..2.0, pts in points(4, 3)) {
        let spec = FreeKernelSpec::polynomial(p, c);
        let exp = expand_features(&spec, 3, p).unwrap();
        let closed = spec.eval(&refs(&pts)).unwrap();
        prop_assert!((closed - exp.eval(&refs(&pts))).abs() <= 1e-10 * closed.abs().max(1.0));
    }

    #[test]
    fn log_ratio_matches_expansion_inside_domain(pts in prop::collection::vec(prop::collection::vec(-0.6f64..0.6, 2), 2)) {
        let spec = FreeKernelSpec::log_ratio();
        let exp = expand_features(&spec, 2, 61).unwrap();
        let closed = spec.eval(&refs(&pts)).unwrap();
        prop_assert!((closed - exp.eval(&refs(&pts))).abs() <= 1e-8 * closed.abs().max(1.0));
    }

    #[test]
    fn tuned_kernel_is_symmetric(alpha in prop::collection::vec(-1.0f64..1.0, 5), x in point(2), y in point(2)) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let aux: Vec<Vec<f64>> = (0..5).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        prop_assume!(alpha.iter().any(|a| a.abs() > 1e-6));
        let t = TunedKernel::new(FreeKernelSpec::se(1.0), aux, alpha).unwrap();
        let a = t.eval(&x, &y).unwrap();
        let b = t.eval(&y, &x).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        prop_assert!(t.eval(&x, &x).unwrap() >= -1e-12);
    }
}

#[test]
fn log_ratio_rejects_points_outside_the_open_box() {
    let spec = FreeKernelSpec::log_ratio();
    let err = spec.eval(&[&[1.0, 0.5], &[1.0, 0.5]]).unwrap_err();
    assert!(spec.eval(&[&[1.0, 0.0], &[0.5, 0.5]]).is_ok());
    assert!(matches!(err, Error::Domain(_)));
}

#[test]
fn odd_arity_is_rejected() {
    let spec = FreeKernelSpec::se(1.0);
    assert!(spec.eval(&[&[0.1], &[0.2], &[0.3]]).is_err());
    assert!(m_dot(&[&[0.1, 0.2], &[0.3]]).is_err());
}

fn random_polynomial_tuned(rng: &mut ChaCha8Rng) -> (TunedKernel, usize, u32) {
    let n = rng.gen_range(1..=3);
    let p = rng.gen_range(1..=3);
    let size = rng.gen_range(1..=10);
    let offset = rng.gen_range(0.0..2.0);
    let aux: Vec<Vec<f64>> = (0..size).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let alpha: Vec<f64> = (0..size).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (TunedKernel::new(FreeKernelSpec::polynomial(p, offset), aux, alpha).unwrap(), n, p)
}

#[test]
fn tuned_kernel_equals_reweighted_feature_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let (t, n, p) = random_polynomial_tuned(&mut rng);
        let base = expand_features(t.base(), n, p).unwrap();
        let weights = tuned_weights_oracle(&t, &base).unwrap();
        let reweighted = base.reweighted(weights).unwrap();
        for _ in 0..10 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = t.eval(&x, &y).unwrap();
            let oracle = reweighted.eval(&[&x, &y]);
            assert!((fast - oracle).abs() <= 1e-9 * oracle.abs().max(1e-12), "{fast} vs {oracle}");
        }
    }
}

#[test]
fn tuned_grams_are_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for trial in 0..10 {
        let base = if trial % 2 == 0 { FreeKernelSpec::se(rng.gen_range(0.1..3.0)) } else { FreeKernelSpec::polynomial(3, 1.0) };
        let aux: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let alpha: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = TunedKernel::new(base, aux, alpha).unwrap();
        let pts: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let gram = nalgebra::DMatrix::from_fn(50, 50, |i, j| t.eval(&pts[i], &pts[j]).unwrap());
        let trace = gram.trace();
        assert!(min_eigenvalue(&gram) >= -1e-8 * trace, "trial {trial}");
    }
}

#[test]
fn xor_tuned_kernel_on_a_grid() {
    let aux = vec![vec![-1.0, -1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![1.0, 1.0]];
    let t = TunedKernel::new(FreeKernelSpec::polynomial(2, 1.0), aux, vec![-0.125, 0.125, 0.125, -0.125]).unwrap();
    let grid = [-1.0, -0.5, 0.0, 0.5, 1.0];
    for &a in &grid {
        for &b in &grid {
            for &c in &grid {
                for &d in &grid {
                    let k = t.eval(&[a, b], &[c, d]).unwrap();
                    assert!((k - 0.5 * a * b * c * d).abs() <= 1e-10);
                }
            }
        }
    }
}

#[test]
fn family_names_round_trip() {
    for f in KernelFamily::ALL {
        assert_eq!(f.name().parse::<KernelFamily>().unwrap(), f);
    }
}
