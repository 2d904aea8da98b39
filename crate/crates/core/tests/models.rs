use contlogic::models::hilbert::{basis_vector, inner};
use contlogic::models::theory::{hilbert_theory, sigma_net, spectrum_axiom};
use contlogic::models::{
    build_hilbert, check_axioms, expand_group_action, expand_projection, expand_unitary,
    HilbertModel,
};
use contlogic::scalar::qcomplex_to_c64;
use contlogic::{eval_formula, Assignment, Complex64, EvalBudget, Field, Mode, Vector};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn base(dim: usize, field: Field) -> HilbertModel {
    let mut v0 = Vector::zeros(dim);
    v0[0] = Complex64::new(0.5, 0.0);
    build_hilbert(dim, field, vec![("v0".into(), v0)]).unwrap()
}

fn field() -> impl Strategy<Value = Field> {
    prop_oneof![Just(Field::Real), Just(Field::Complex)]
}

fn circle(angles: &[f64]) -> Vec<Complex64> {
    angles
        .iter()
        .map(|t| Complex64::from_polar(1.0, *t))
        .collect()
}

fn residuals(m: &HilbertModel) -> Vec<(String, f64, f64, bool)> {
    let theory = hilbert_theory(m, 2).unwrap();
    let budget = EvalBudget {
        samples: 64,
        refine_evals: 50,
        ..EvalBudget::default()
    };
    let report = check_axioms(m, &theory, 1e-6, &budget).unwrap();
    report
        .results
        .into_iter()
        .map(|r| (r.name, r.enclosure.lo, r.enclosure.hi, r.pass))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn expansions_keep_the_hilbert_residuals(
        angles in prop::collection::vec(0.0..std::f64::consts::TAU, 2),
        rank in 1usize..2,
    ) {
        let plain = residuals(&base(2, Field::Complex));
        prop_assert!(plain.iter().all(|r| r.3));
        let unitary = expand_unitary(base(2, Field::Complex), circle(&angles)).unwrap();
        prop_assert_eq!(&residuals(&unitary), &plain);
        let projection = expand_projection(base(2, Field::Complex), rank).unwrap();
        prop_assert_eq!(&residuals(&projection), &plain);
        let swap = DMatrix::from_fn(2, 2, |i, j| Complex64::new(if i != j { 1.0 } else { 0.0 }, 0.0));
        let group = expand_group_action(
            base(2, Field::Complex),
            vec![("e".into(), DMatrix::identity(2, 2)), ("s".into(), swap)],
            None,
        )
        .unwrap();
        prop_assert_eq!(&residuals(&group), &plain);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn spectrum_residual_brackets_the_nearest_eigenvalue(angles in prop::collection::vec(0.0..std::f64::consts::TAU, 2)) {
        let eigs = circle(&angles);
        let m = expand_unitary(base(2, Field::Complex), eigs.clone()).unwrap();
        let budget = EvalBudget { delta: 0.25, ..EvalBudget::default() };
        for sigma in sigma_net(3) {
            let s = qcomplex_to_c64(&sigma);
            let nearest = eigs.iter().map(|w| (w - s).norm()).fold(1.0, f64::min);
            let e = eval_formula(&m, &spectrum_axiom(&sigma), &Assignment::new(), &budget).unwrap();
            prop_assert!(e.mode <= Mode::Certified);
            prop_assert!(e.contains(nearest, 1e-9), "sigma {s}: {e:?} misses {nearest}");
        }
    }

    #[test]
    fn projection_is_idempotent_and_self_adjoint(dim in 2usize..=8, rank_seed in 0usize..8, f in field()) {
        let rank = 1 + rank_seed % (dim - 1);
        let m = expand_projection(base(dim, f), rank).unwrap();
        for i in 0..dim {
            let ei = basis_vector(dim, i);
            let pi = m.project(&ei).unwrap();
            prop_assert!((m.project(&pi).unwrap() - &pi).norm() <= 1e-12);
            for j in 0..dim {
                let ej = basis_vector(dim, j);
                let pj = m.project(&ej).unwrap();
                prop_assert!((inner(&pi, &ej) - inner(&ei, &pj)).norm() <= 1e-12);
            }
        }
    }
}
