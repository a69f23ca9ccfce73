//! Property-based invariants of the dense linear-algebra layer.

use num_complex::Complex64;
use proptest::prelude::*;
use qbe_core::operators::{
    embed, hermitian_eig, partial_trace, propagator_from_eig, tensor_product,
    ComplexOperator, StateVector,
};
use qbe_core::tol;

fn complex_entry() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn hermitian_matrix(dim: usize) -> impl Strategy<Value = ComplexOperator> {
    proptest::collection::vec(complex_entry(), dim * dim).prop_map(move |entries| {
        let raw = ComplexOperator::from_fn(dim, |i, j| entries[i * dim + j]);
        raw.add(&raw.adjoint()).scale_re(0.5)
    })
}

fn integer_matrix(dim: usize) -> impl Strategy<Value = ComplexOperator> {
    proptest::collection::vec((-4i32..=4, -4i32..=4), dim * dim).prop_map(move |entries| {
        ComplexOperator::from_fn(dim, |i, j| {
            let (re, im) = entries[i * dim + j];
            Complex64::new(re as f64, im as f64)
        })
    })
}

fn normalized_state(dim: usize) -> impl Strategy<Value = StateVector> {
    proptest::collection::vec(complex_entry(), dim)
        .prop_filter("nonzero", |amps| {
            amps.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3
        })
        .prop_map(|amps| StateVector::normalized(amps).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagators_are_unitary(h in hermitian_matrix(6), t in -5.0..5.0f64) {
        let eig = hermitian_eig(&h).unwrap();
        let u = propagator_from_eig(&eig, t, 1.0);
        let gram = u.adjoint().matmul(&u);
        let dev = gram.sub(&ComplexOperator::identity(6)).max_abs();
        prop_assert!(dev <= tol::UNITARITY, "unitarity deviation {dev}");
    }

    #[test]
    fn propagators_compose_over_time(h in hermitian_matrix(5), t1 in -2.0..2.0f64, t2 in -2.0..2.0f64) {
        let eig = hermitian_eig(&h).unwrap();
        let u1 = propagator_from_eig(&eig, t1, 1.0);
        let u2 = propagator_from_eig(&eig, t2, 1.0);
        let direct = propagator_from_eig(&eig, t1 + t2, 1.0);
        let dev = u1.matmul(&u2).sub(&direct).max_abs();
        prop_assert!(dev <= 1e-9, "group property deviation {dev}");
    }

    #[test]
    fn eigendecomposition_reconstructs(h in hermitian_matrix(7)) {
        let eig = hermitian_eig(&h).unwrap();
        let residual = eig.reconstruct().sub(&h).max_abs();
        prop_assert!(residual <= tol::EIG_RECONSTRUCTION * h.max_abs().max(1e-30));
        let sorted = eig.eigenvalues().windows(2).all(|w| w[0] <= w[1]);
        prop_assert!(sorted);
    }

    #[test]
    fn partial_trace_preserves_trace_and_hermiticity(psi in normalized_state(12)) {
        let rho = psi.density();
        let dims = [2usize, 2, 3];
        for keep in [vec![0usize], vec![1], vec![2], vec![0, 1], vec![1, 2]] {
            let reduced = partial_trace(&rho, &keep, &dims).unwrap();
            let tr = reduced.trace();
            prop_assert!((tr.re - 1.0).abs() <= tol::TRACE);
            prop_assert!(tr.im.abs() <= tol::TRACE);
            prop_assert!(reduced.is_hermitian(tol::TRACE));
        }
    }

    #[test]
    fn tensor_product_is_associative(
        a in integer_matrix(2),
        b in integer_matrix(2),
        c in integer_matrix(3),
    ) {
        // Integer-valued entries keep every product exactly representable,
        // so associativity holds entry-for-entry.
        let left = tensor_product(&tensor_product(&a, &b).unwrap(), &c).unwrap();
        let right = tensor_product(&a, &tensor_product(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn embedding_is_tensor_with_identities(op in integer_matrix(2)) {
        let dims = [2usize, 2, 2];
        let id = ComplexOperator::identity(2);
        let lifted = embed(&op, &[1], &dims).unwrap();
        let expected =
            tensor_product(&tensor_product(&id, &op).unwrap(), &id).unwrap();
        prop_assert_eq!(lifted, expected);
    }
}
