use nalgebra::{DMatrix, DVector};
use nonclassical::analysis::{entanglement_potential, fidelity, husimi_q, quadrature_stats, Axis, GridSpec};
use nonclassical::fock::{
    apply_conditional, beam_splitter, inner_dim, make_coherent, op_displacement, op_ladder, subtraction_power,
    DensityOperator, Ladder, OperatorKind, OperatorMatrix, StateVector,
};
use nonclassical::optimizer::{
    evaluate_cell, fit_target_state, sweep_grid, FitOptions, FitSeed, SweepOptions, TargetFamily,
};
use nonclassical::protocol::{
    detect_n, extend_to_cat, p_n_closed_form, p_n_incomplete_gamma, run_generalized_protocol, ProtocolSpec,
};
use nonclassical::C64;
use proptest::prelude::*;

fn complex(max: f64) -> impl Strategy<Value = C64> {
    (0.0..max, -std::f64::consts::PI..std::f64::consts::PI).prop_map(|(r, t)| C64::from_polar(r, t))
}

/// Random normalized state supported on the first `support` levels of a `d`-level space.
fn state(d: usize, support: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), support).prop_map(move |v| {
        let mut a = DVector::<C64>::zeros(d);
        for (n, (re, im)) in v.into_iter().enumerate() {
            a[n] = C64::new(re, im);
        }
        a[0] += C64::from(1e-3);
        StateVector::from_amplitudes(a).unwrap()
    })
}

fn light() -> ProptestConfig {
    ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(light())]

    #[test]
    fn coherent_states_are_normalized(alpha in complex(3.0), d in 40usize..90) {
        let psi = make_coherent(alpha, d).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
        prop_assert!(psi.is_converged());
    }

    #[test]
    fn subtraction_products(d in 2usize..60) {
        let b = op_ladder(Ladder::Subtraction, d).unwrap();
        let m = b.matrix();
        let mut p0 = DMatrix::<C64>::identity(d, d);
        p0[(0, 0)] = C64::from(0.0);
        prop_assert_eq!(m.adjoint() * m, p0);
        let mut pd = DMatrix::<C64>::identity(d, d);
        pd[(d - 1, d - 1)] = C64::from(0.0);
        prop_assert_eq!(m * m.adjoint(), pd);
    }

    #[test]
    fn subtraction_probability_is_tail_mass(psi in state(20, 20), n in 0usize..20) {
        let bn = subtraction_power(n, 20);
        let v = bn.apply(&psi).unwrap();
        let p = v.norm_squared();
        prop_assert!((p - psi.tail_mass(n)).abs() < 1e-15);
    }

    #[test]
    fn displacement_composition(a in complex(1.5), b in complex(1.5)) {
        let d = 60;
        let m = inner_dim(d);
        let da = op_displacement(a, d).unwrap();
        let db = op_displacement(b, d).unwrap();
        let dab = op_displacement(a + b, d).unwrap();
        let phase = C64::from_polar(1.0, (a * b.conj()).im);
        let lhs = da.matrix() * db.matrix();
        let rhs = dab.matrix() * phase;
        let diff = (lhs.view((0, 0), (m, m)) - rhs.view((0, 0), (m, m))).camax();
        prop_assert!(diff < 1e-7, "{}", diff);
    }

    #[test]
    fn displacement_unitary_on_inner_block(a in complex(3.0)) {
        // at d = 80 the inner block (30 levels) is too wide for |alpha| near 3
        let op = op_displacement(a, 120).unwrap();
        prop_assert!(op.unitarity_defect(inner_dim(120)) < 1e-8);
        let inv = op_displacement(-a, 120).unwrap();
        let m = inner_dim(120);
        let prod = inv.matrix() * op.matrix();
        let defect = (prod.view((0, 0), (m, m)) - DMatrix::<C64>::identity(m, m)).camax();
        prop_assert!(defect < 1e-8);
    }

    #[test]
    fn displaced_coherent_mean(a in complex(3.0), b in complex(3.0)) {
        let d = 100;
        let rho = make_coherent(a, d).unwrap().to_density();
        let (moved, p) = apply_conditional(&op_displacement(b, d).unwrap(), &rho).unwrap();
        prop_assert!((p - 1.0).abs() < 1e-8);
        prop_assert!((moved.mean_annihilation() - (a + b)).norm() < 1e-8);
    }

    #[test]
    fn conditional_output_is_a_density(psi in state(16, 12), n in 1usize..4) {
        let rho = psi.to_density();
        match apply_conditional(&subtraction_power(n, 16), &rho) {
            Ok((out, p)) => {
                prop_assert!(p > 0.0 && p <= 1.0 + 1e-12);
                prop_assert!(DensityOperator::from_matrix(out.matrix().clone()).is_ok());
            }
            Err(e) => prop_assert_eq!(e.kind(), "ZeroProbability"),
        }
    }

    #[test]
    fn detection_factorizes(alpha in complex(2.5), n in 1usize..5) {
        // tiny alpha makes the branch impossible, which detect_n reports as an error
        prop_assume!(p_n_closed_form(n, alpha.norm_sqr()) > 1e-10);
        let rho = make_coherent(alpha, 50).unwrap().to_density();
        let (direct, p) = detect_n(&rho, n).unwrap();
        let (mut step, mut q) = (rho, 1.0);
        for _ in 0..n {
            let (next, pi) = detect_n(&step, 1).unwrap();
            step = next;
            q *= pi;
        }
        prop_assert!((p - q).abs() < 1e-12);
        prop_assert!((direct.matrix() - step.matrix()).camax() < 1e-12);
    }

    #[test]
    fn first_step_probability_matches_closed_form(alpha in complex(3.0), n in 1usize..6) {
        prop_assume!(alpha.norm() > 0.3);
        let rho = make_coherent(alpha, 60).unwrap().to_density();
        let (_, p) = detect_n(&rho, n).unwrap();
        prop_assert!((p - p_n_closed_form(n, alpha.norm_sqr())).abs() < 1e-10);
    }

    #[test]
    fn closed_forms_agree(n in 1usize..=30, x in 0.0..25.0f64) {
        prop_assert!((p_n_closed_form(n, x) - p_n_incomplete_gamma(n, x)).abs() < 1e-12);
    }

    #[test]
    fn success_is_product_of_steps(alpha_abs in 1.0..3.0f64, phase in -3.0..3.0f64, k in 2usize..5, n in 0usize..4) {
        let res = run_generalized_protocol(&ProtocolSpec::new(C64::from_polar(alpha_abs, phase), k, n)).unwrap();
        let prod: f64 = res.step_probabilities.iter().product();
        prop_assert!((prod - res.success_probability).abs() < 1e-12);
        prop_assert!(res.step_probabilities.iter().all(|&p| p > 0.0 && p <= 1.0));
        let cat = extend_to_cat(&res);
        if n == 0 {
            prop_assert!(cat.is_err());
        } else {
            let cat = cat.unwrap();
            prop_assert!((cat.total_success - cat.extra_probability * res.success_probability).abs() < 1e-12);
        }
    }

    #[test]
    fn uncertainty_bound(psi in state(40, 30), phase in -3.0..3.0f64) {
        let q = quadrature_stats(&psi.to_density(), phase);
        prop_assert!(q.product >= 0.5 - 1e-8, "{}", q.product);
        prop_assert!((q.squeezing_db - 10.0 * (2.0 * q.var_p).log10()).abs() < 1e-12);
    }

    #[test]
    fn q_values_are_bounded(psi in state(20, 10)) {
        let grid = GridSpec { re: Axis::symmetric(4.0, 17), im: Axis::symmetric(4.0, 17) };
        let q = husimi_q(&psi.to_density(), &grid).unwrap();
        let top = 1.0 / std::f64::consts::PI + 1e-10;
        prop_assert!(q.values.iter().all(|&v| v >= 0.0 && v <= top));
    }

    #[test]
    fn ep_is_nonnegative_and_stable(psi in state(30, 8)) {
        let rho = psi.to_density();
        let a = entanglement_potential(&rho, 20).unwrap();
        let b = entanglement_potential(&rho, 30).unwrap();
        prop_assert!(a.value >= -1e-8);
        prop_assert!((a.value - b.value).abs() < 1e-3);
    }

    #[test]
    fn ep_of_coherent_is_zero(alpha in complex(3.0)) {
        let rho = make_coherent(alpha, 60).unwrap().to_density();
        prop_assert!(entanglement_potential(&rho, 60).unwrap().value.abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn photon_number_matching(alpha_abs in 1.5..3.0f64, k in 2usize..5, n in 1usize..4) {
        let run = run_generalized_protocol(&ProtocolSpec::new(C64::from(alpha_abs), k, n)).unwrap();
        let fit = fit_target_state(&run.final_state, k, false, FitSeed::default(), &FitOptions::default()).unwrap();
        let fam = TargetFamily::new(k, run.spec.cutoff).unwrap();
        let target = fam.state(fit.z, None).unwrap();
        let gap = (target.mean_photon_number() - run.final_state.mean_photon_number()).abs();
        prop_assert!(gap < 1e-6, "{}", gap);
        prop_assert!(fit.matching_residual.unwrap() < 1e-8);
        prop_assert!((0.0..=1.0).contains(&fit.fidelity));
    }

    #[test]
    fn fit_ignores_eigenvector_phases(phases in prop::collection::vec(-3.0..3.0f64, 3), n in 1usize..3) {
        // a rank-3 mixture of protocol outputs, rebuilt with rephased eigenvectors
        let d = default_d();
        let mix: Vec<DensityOperator> = (0..3)
            .map(|j| run_generalized_protocol(&ProtocolSpec::new(C64::from(2.0 + 0.2 * j as f64), 2, n).with_cutoff(d)).unwrap().final_state)
            .collect();
        let m = (mix[0].matrix() * C64::from(0.7) + mix[1].matrix() * C64::from(0.2) + mix[2].matrix() * C64::from(0.1)).clone();
        let rho = DensityOperator::from_matrix(m).unwrap();
        let eig = nalgebra::SymmetricEigen::new(rho.matrix().clone());
        let mut rebuilt = DMatrix::<C64>::zeros(d, d);
        for i in 0..d {
            let v = eig.eigenvectors.column(i) * C64::from_polar(1.0, phases[i % 3] * (i + 1) as f64);
            rebuilt += &v * v.adjoint() * C64::from(eig.eigenvalues[i]);
        }
        let rephased = DensityOperator::from_matrix(rebuilt).unwrap();
        let opts = FitOptions::default();
        let a = fit_target_state(&rho, 2, false, FitSeed::default(), &opts).unwrap();
        let b = fit_target_state(&rephased, 2, false, FitSeed::default(), &opts).unwrap();
        prop_assert!((a.fidelity - b.fidelity).abs() < 1e-10, "{} vs {}", a.fidelity, b.fidelity);
    }
}

fn default_d() -> usize {
    nonclassical::protocol::default_cutoff(2.4)
}

#[test]
fn beam_splitter_is_unitary() {
    for d in [2, 5, 12] {
        let u = beam_splitter(d).matrix();
        let defect = (u.adjoint() * &u - DMatrix::<C64>::identity(d * d, d * d)).camax();
        assert!(defect < 1e-8, "d = {d}: {defect}");
    }
}

#[test]
fn vacuum_protocol_runs() {
    for k in 2..=4 {
        let res = run_generalized_protocol(&ProtocolSpec::new(C64::from_polar(2.0, 0.4), k, 0)).unwrap();
        assert!((res.success_probability - 1.0).abs() < 1e-15);
        assert!((res.final_state.population(0) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn unitary_conditional_keeps_probability_one() {
    let rho = make_coherent(C64::new(0.5, 0.2), 30).unwrap().to_density();
    let id = OperatorMatrix::new(DMatrix::identity(30, 30), OperatorKind::Custom("identity".into())).unwrap();
    let (out, p) = apply_conditional(&id, &rho).unwrap();
    assert_eq!(p, 1.0);
    assert!((out.matrix() - rho.matrix()).camax() < 1e-15);
}

#[test]
fn success_grows_with_alpha() {
    let grid: Vec<f64> = (0..7).map(|i| 1.0 + 0.5 * i as f64).collect();
    for k in 2..=4 {
        for n in 1..=5 {
            let p: Vec<f64> = grid
                .iter()
                .map(|&a| run_generalized_protocol(&ProtocolSpec::new(C64::from(a), k, n)).unwrap().success_probability)
                .collect();
            assert!(p.windows(2).all(|w| w[1] >= w[0]), "k = {k}, N = {n}: {p:?}");
        }
    }
}

fn doubled_cutoff_shifts(alpha: f64) -> Vec<(String, f64, f64)> {
    let mut out = Vec::new();
    for (k, n) in [(2, 1), (2, 3), (2, 5), (3, 2), (4, 1), (4, 3)] {
        let spec = ProtocolSpec::new(C64::from(alpha), k, n);
        let d = spec.cutoff;
        let a = run_generalized_protocol(&spec).unwrap();
        let b = run_generalized_protocol(&spec.clone().with_cutoff(2 * d)).unwrap();
        let qa = quadrature_stats(&a.final_state, 0.0);
        let qb = quadrature_stats(&b.final_state, 0.0);
        for (name, x, y) in [
            ("success", a.success_probability, b.success_probability),
            ("mean n", a.final_state.mean_photon_number(), b.final_state.mean_photon_number()),
            ("var x", qa.var_x, qb.var_x),
            ("var p", qa.var_p, qb.var_p),
        ] {
            out.push((format!("alpha = {alpha}, k = {k}, N = {n}, {name}"), x, y));
        }
    }
    out
}

#[test]
fn doubled_cutoff_shift_below_1e8_up_to_alpha_2() {
    for alpha in [1.0, 1.5, 2.0, 2.5] {
        for (label, x, y) in doubled_cutoff_shifts(alpha) {
            assert!((x - y).abs() < 1e-8, "{label}: {x} vs {y}");
        }
    }
}

#[test]
fn doubled_cutoff_shift_below_1e8_at_alpha_3() {
    let shifts = doubled_cutoff_shifts(3.0);
    let worst = shifts.iter().map(|(_, x, y)| (x - y).abs()).fold(0.0, f64::max);
    for (label, x, y) in &shifts {
        assert!((x - y).abs() < 1e-8, "{label}: {x} vs {y} (worst shift {worst:e})");
    }
}

#[test]
fn sweep_is_deterministic_and_thread_independent() {
    let opts = SweepOptions { ep: true, fidelity: true, ..SweepOptions::default() };
    let alphas = [1.0, 1.6, 2.2];
    let ns = [1, 2, 3];
    let a = sweep_grid(&alphas, &ns, 2, &opts).unwrap();
    let b = sweep_grid(&alphas, &ns, 2, &opts).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = pool.install(|| sweep_grid(&alphas, &ns, 2, &opts)).unwrap();
    for ((x, y), z) in a.iter().zip(&b).zip(&c) {
        let (x, y, z) = (x.outcome.as_ref().unwrap(), y.outcome.as_ref().unwrap(), z.outcome.as_ref().unwrap());
        assert_eq!(x, y);
        assert_eq!(x, z);
    }
    let serial = evaluate_cell(1.6, 2, 2, &opts).unwrap();
    assert_eq!(&serial, a[4].outcome.as_ref().unwrap());
}

#[test]
fn fidelity_with_rephased_target_is_unchanged() {
    let psi = make_coherent(C64::new(0.7, -0.4), 30).unwrap();
    let rho = make_coherent(C64::new(0.6, -0.3), 30).unwrap().to_density();
    let rotated = StateVector::from_amplitudes(psi.amplitudes() * C64::from_polar(1.0, 1.3)).unwrap();
    assert!((fidelity(&rho, &psi).unwrap() - fidelity(&rho, &rotated).unwrap()).abs() < 1e-15);
}
