use num_complex::Complex64;
use proptest::prelude::*;

use nvspin::spin::{hermitian_eig, kron_compose, spin_operators, ComplexMatrix};

fn hermitian_from(dim: usize, raw: &[(f64, f64)]) -> ComplexMatrix {
    let a: Vec<Complex64> = raw.iter().take(dim * dim).map(|&(re, im)| Complex64::new(re, im)).collect();
    let a = ComplexMatrix::from_row_major(a).unwrap();
    let sum = ComplexMatrix::from_row_major(
        a.as_slice()
            .iter()
            .zip(a.adjoint().as_slice())
            .map(|(x, y)| (x + y) * 0.5)
            .collect(),
    )
    .unwrap();
    sum
}

fn hermitian_strategy() -> impl Strategy<Value = ComplexMatrix> {
    (2usize..=16).prop_flat_map(|dim| {
        prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), dim * dim).prop_map(move |raw| hermitian_from(dim, &raw))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn eigen_invariants_hold(h in hermitian_strategy()) {
        let eig = hermitian_eig(&h).unwrap();
        let norm = h.frobenius_norm().max(1.0);
        prop_assert!(eig.max_residual(&h) <= 1e-10 * norm, "residual {}", eig.max_residual(&h));
        prop_assert!(eig.orthonormality_error() <= 1e-10);
        let tr: f64 = eig.energies.iter().sum();
        prop_assert!((tr - h.trace().re).abs() <= 1e-10 * norm);
        prop_assert!(eig.energies.windows(2).all(|w| w[0] <= w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn spectrum_invariant_under_basis_permutation(
        h in hermitian_strategy(),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut perm: Vec<usize> = (0..h.dim()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = hermitian_eig(&h).unwrap();
        let b = hermitian_eig(&h.permuted(&perm)).unwrap();
        for (x, y) in a.energies.iter().zip(&b.energies) {
            prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn kron_trace_factorizes(
        a in hermitian_strategy(),
        b in (2usize..=3).prop_flat_map(|d| prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d)
            .prop_map(move |raw| hermitian_from(d, &raw))),
    ) {
        prop_assume!(a.dim() * b.dim() <= 48);
        let k = kron_compose(&[a.clone(), b.clone()]).unwrap();
        let expect = a.trace() * b.trace();
        prop_assert!((k.trace() - expect).norm() <= 1e-9 * (1.0 + expect.norm()));
        prop_assert!(k.is_hermitian(1e-12));
    }
}

#[test]
fn casimir_and_commutators() {
    for s in [0.5, 1.0] {
        let ops = spin_operators(s).unwrap();
        let [x, y, z] = ops.cartesian();
        let sq = x.matmul(x);
        let total: Vec<Complex64> = sq
            .as_slice()
            .iter()
            .zip(y.matmul(y).as_slice())
            .zip(z.matmul(z).as_slice())
            .map(|((a, b), c)| a + b + c)
            .collect();
        let expect = ComplexMatrix::identity(ops.identity().dim()).scale_real(s * (s + 1.0));
        for (got, want) in total.iter().zip(expect.as_slice()) {
            assert!((got - want).norm() < 1e-15);
        }
        let i = Complex64::new(0.0, 1.0);
        let lhs = x.commutator(y);
        let rhs = z.scale(i);
        for (got, want) in lhs.as_slice().iter().zip(rhs.as_slice()) {
            assert!((got - want).norm() < 1e-15);
        }
    }
}

#[test]
fn degenerate_spectrum_stays_orthonormal() {
    let h = ComplexMatrix::from_real_rows(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 1e-3], &[0.0, 0.0, 1e-3, 1.0]])
        .unwrap();
    let eig = hermitian_eig(&h).unwrap();
    assert!(eig.orthonormality_error() < 1e-12);
    assert!(eig.max_residual(&h) < 1e-12);
}
