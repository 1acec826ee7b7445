use fairfront::frontier::{
    build_tafi, fauc, fauci, pareto_filter, taf_eval, tafi_eval, ModelRecord, WeightFunction,
};
use fairfront::linalg::Matrix;
use fairfront::metrics::{
    score_bias, ContrastSpec, EvaluationSet, GroupAssignment,
};
use fairfront::stacker::{build_problem, lambda_path, solve_squared, LossKind};
use fairfront::synth_oracle::{
    hull_oracle, linear_interpolation_oracle, midpoint_fauc, objective_oracle, pareto_oracle,
    taf_oracle, StepEvaluator,
};
use proptest::prelude::*;

fn grid() -> impl Iterator<Item = f64> {
    (0..=100).map(|i| f64::from(i) / 100.0)
}

/// Model sets with one forced perfectly fair record; coordinates on a
/// lattice of `1/m` so ties and duplicates occur.
fn model_set(max: usize, m: u32) -> impl Strategy<Value = Vec<ModelRecord<f64>>> {
    let coord = (0..=m).prop_map(move |v| f64::from(v) / f64::from(m));
    (
        prop::collection::vec((coord.clone(), coord.clone()), 0..max),
        coord,
        any::<prop::sample::Index>(),
    )
        .prop_map(|(pts, fair_acc, pos)| {
            let mut out: Vec<ModelRecord<f64>> = pts
                .into_iter()
                .enumerate()
                .map(|(i, (f, a))| ModelRecord {
                    id: format!("r{i}"),
                    fairness: f,
                    accuracy: a,
                })
                .collect();
            let at = pos.index(out.len() + 1);
            out.insert(
                at,
                ModelRecord {
                    id: "fair".into(),
                    fairness: 1.0,
                    accuracy: fair_acc,
                },
            );
            out
        })
}

fn weight() -> impl Strategy<Value = WeightFunction<f64>> {
    let beta = (0u32..=90).prop_map(|b| f64::from(b) / 100.0);
    prop_oneof![
        Just(WeightFunction::Uniform),
        beta.clone().prop_map(|b| WeightFunction::Step { beta: b }),
        (1u32..=6, beta).prop_map(|(a, b)| WeightFunction::Power {
            alpha: f64::from(a),
            beta: b
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pareto_matches_oracle(models in model_set(60, 20)) {
        let curve = pareto_filter(&models).unwrap();
        let mut oracle = pareto_oracle(&models);
        oracle.sort_by(|a, b| b.fairness.total_cmp(&a.fairness));
        let got: Vec<(String, f64, f64)> = curve
            .points()
            .iter()
            .zip(curve.source_ids())
            .map(|(p, id)| (id.clone(), p.fairness, p.accuracy))
            .collect();
        let want: Vec<(String, f64, f64)> =
            oracle.into_iter().map(|m| (m.id, m.fairness, m.accuracy)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn taf_matches_scan_and_is_monotone(models in model_set(40, 50)) {
        let curve = pareto_filter(&models).unwrap();
        let mut prev = f64::INFINITY;
        for f in grid() {
            let v = taf_eval(&curve, f).unwrap();
            prop_assert_eq!(v, taf_oracle(&models, f));
            prop_assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn superset_never_lowers_taf_or_fauc(
        base in model_set(30, 50),
        extra in prop::collection::vec((0u32..=50, 0u32..=50), 1..10),
        w in weight(),
    ) {
        let mut sup = base.clone();
        sup.extend(extra.into_iter().enumerate().map(|(i, (f, a))| ModelRecord {
            id: format!("x{i}"),
            fairness: f64::from(f) / 50.0,
            accuracy: f64::from(a) / 50.0,
        }));
        let (c, s) = (pareto_filter(&base).unwrap(), pareto_filter(&sup).unwrap());
        for f in grid() {
            prop_assert!(taf_eval(&s, f).unwrap() >= taf_eval(&c, f).unwrap());
        }
        prop_assert!(fauc(&s, &w).unwrap() >= fauc(&c, &w).unwrap() - 1e-15);
    }

    #[test]
    fn envelope_dominates_step_curve(models in model_set(40, 1000), w in weight()) {
        let curve = pareto_filter(&models).unwrap();
        let tafi = build_tafi(&curve);
        for f in grid() {
            prop_assert!(tafi_eval(&tafi, f).unwrap() >= taf_eval(&curve, f).unwrap() - 1e-12);
        }
        prop_assert!(fauci(&tafi, &w).unwrap() >= fauc(&curve, &w).unwrap() - 1e-12);
        let pm = WeightFunction::PointMassZero;
        prop_assert_eq!(fauc(&curve, &pm).unwrap(), taf_eval(&curve, 0.0).unwrap());
    }

    #[test]
    fn envelope_is_concave_and_matches_hull_oracle(models in model_set(40, 1000)) {
        let curve = pareto_filter(&models).unwrap();
        let tafi = build_tafi(&curve);
        let v = tafi.vertices();
        for t in v.windows(3) {
            let s1 = (t[1].accuracy - t[0].accuracy) / (t[1].fairness - t[0].fairness);
            let s2 = (t[2].accuracy - t[1].accuracy) / (t[2].fairness - t[1].fairness);
            prop_assert!(s2 < s1);
        }
        let mut pts: Vec<(f64, f64)> = curve.points().iter().map(|p| (p.fairness, p.accuracy)).collect();
        pts.push((0.0, curve.max_accuracy()));
        let hull = hull_oracle(&pts);
        let got: Vec<(f64, f64)> = v.iter().map(|p| (p.fairness, p.accuracy)).collect();
        prop_assert_eq!(got.len(), hull.len());
        for (a, b) in got.iter().zip(&hull) {
            prop_assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
        for f in grid() {
            let want = linear_interpolation_oracle(&hull, f);
            prop_assert!((tafi_eval(&tafi, f).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_forms_match_midpoint_oracle(models in model_set(30, 100), w in weight()) {
        // knots on a 1/100 lattice fall on the 10^4-cell grid
        let curve = pareto_filter(&models).unwrap();
        let tafi = build_tafi(&curve);
        let step = StepEvaluator::new(&models);
        let oracle = midpoint_fauc(|f| step.eval(f), &w, 10_000).unwrap();
        prop_assert!((fauc(&curve, &w).unwrap() - oracle).abs() < 1e-6);
        let verts: Vec<(f64, f64)> = tafi.vertices().iter().map(|p| (p.fairness, p.accuracy)).collect();
        let oracle_i = midpoint_fauc(|f| linear_interpolation_oracle(&verts, f), &w, 10_000).unwrap();
        prop_assert!((fauci(&tafi, &w).unwrap() - oracle_i).abs() < 1e-6);
    }

    #[test]
    fn score_bias_is_linear_in_weights(
        cols in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 12), 1..5),
        w in prop::collection::vec(-2.0f64..2.0, 5),
    ) {
        let members: Vec<u8> = (0..12).map(|i| u8::from(i % 3 == 0)).collect();
        let eval = EvaluationSet::new(vec![0.0; 12], vec![GroupAssignment::new("g", members).unwrap()]).unwrap();
        let c = ContrastSpec::demographic_parity("g");
        let h = Matrix::from_columns(&cols).unwrap();
        let w = &w[..cols.len()];
        let combined = score_bias(&h.mul_vec(w), &c, &eval).unwrap();
        let sum: f64 = cols
            .iter()
            .zip(w)
            .map(|(col, wi)| wi * score_bias(col, &c, &eval).unwrap())
            .sum();
        prop_assert!((combined - sum).abs() < 1e-12);
    }
}

fn random_problem(seed: u64, n: usize, k: usize) -> (EvaluationSet<f64>, Matrix<f64>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let members: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0 || rng.random_bool(0.3))).collect();
    let y: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).collect();
    let cols: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            (0..n)
                .map(|i| 0.5 * y[i] + 0.2 * f64::from(members[i]) * (j as f64 - 1.0) + rng.random::<f64>())
                .collect()
        })
        .collect();
    let eval = EvaluationSet::new(y, vec![GroupAssignment::new("g", members).unwrap()]).unwrap();
    (eval, Matrix::from_columns(&cols).unwrap())
}

fn ids(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("m{i}")).collect()
}

#[test]
fn duplicated_contrast_equals_scaled_lambda() {
    let (eval, h) = random_problem(4, 60, 3);
    let one = vec![ContrastSpec::demographic_parity("g")];
    let two = vec![one[0].clone(), one[0].clone()];
    let p1 = build_problem(&eval, &h, &ids(3), &one, LossKind::Squared, true).unwrap();
    let p2 = build_problem(&eval, &h, &ids(3), &two, LossKind::Squared, true).unwrap();
    for lambda in [0.5, 3.0, 40.0] {
        let a = solve_squared(&p2, lambda, 1.0).unwrap();
        let b = solve_squared(&p1, lambda * 2f64.sqrt(), 1.0).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }
}

#[test]
fn path_solutions_do_not_exceed_warm_start_objective() {
    let (eval, h) = random_problem(8, 80, 4);
    let c = vec![ContrastSpec::demographic_parity("g")];
    for loss in [LossKind::Squared, LossKind::Logistic] {
        let p = build_problem(&eval, &h, &ids(4), &c, loss, true).unwrap();
        let grid: Vec<f64> = (0..10).map(|i| 10f64.powi(i - 2)).collect();
        let path = lambda_path(&p, &grid, 1.0).unwrap();
        for pair in path.windows(2) {
            let (prev, cur) = (&pair[0], &pair[1]);
            let at_warm = objective_oracle(&p, &prev.weights, cur.lambda, 1.0);
            let at_sol = objective_oracle(&p, &cur.weights, cur.lambda, 1.0);
            assert!(at_sol <= at_warm + 1e-9 * at_warm.abs().max(1.0), "{loss:?} λ={}: {at_sol} > {at_warm}", cur.lambda);
        }
        let mut prev = f64::INFINITY;
        for s in &path {
            assert!(s.max_abs_bias() <= prev + 1e-8);
            prev = s.max_abs_bias();
        }
    }
}

#[test]
fn bias_vectors_recompute_exactly() {
    let (eval, h) = random_problem(2, 50, 5);
    let c = vec![ContrastSpec::demographic_parity("g")];
    let p = build_problem(&eval, &h, &ids(5), &c, LossKind::Squared, true).unwrap();
    assert!(p.bias_recompute_error().unwrap() <= 1e-12);
}
