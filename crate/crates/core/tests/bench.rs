use tpbo_core::bench::{
    flipped_aux_for, initial_design, make_flipped_aux, normalize_problem, run_benchmark, summarize,
    synthetic_two_device, write_results_csv, write_summary_csv, BenchmarkSpec, Method, TestFunction,
    DEVICE_AUX_SIZE, DEVICE_DIM,
};

fn small_spec() -> BenchmarkSpec {
    BenchmarkSpec {
        functions: vec![TestFunction::Himmelblau],
        methods: Method::ALL.to_vec(),
        seeds: 1,
        iterations: 5,
        ..BenchmarkSpec::default()
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn record_count_and_monotone_best() {
    let out = run_benchmark(&small_spec()).unwrap();
    assert!(out.skipped.is_empty());
    assert_eq!(out.records.len(), 5 * Method::ALL.len());
    for group in out.records.chunks(5) {
        assert!(group.iter().all(|r| r.method == group[0].method));
        assert_eq!(group.iter().map(|r| r.iteration).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
        for w in group.windows(2) {
            assert!(w[1].best_value >= w[0].best_value);
        }
    }
}

#[test]
fn methods_share_the_initial_design() {
    let spec = small_spec();
    let problem = normalize_problem(TestFunction::Himmelblau, spec.grid_resolution);
    let (x0, y0) = initial_design(&spec, &problem, 0);
    assert_eq!(x0.len(), spec.init_size);
    assert_eq!(initial_design(&spec, &problem, 0), (x0.clone(), y0.clone()));
    assert_ne!(initial_design(&spec, &problem, 1).0, x0);
    let floor = y0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let out = run_benchmark(&spec).unwrap();
    for r in out.records.iter().filter(|r| r.iteration == 1) {
        assert!(r.best_value >= floor, "{}", r.method);
    }
}

#[test]
fn output_is_reproducible_and_thread_independent() {
    let mut spec = small_spec();
    spec.methods = vec![Method::TpUcb, Method::Ei];
    spec.seeds = 2;
    spec.iterations = 3;
    spec.threads = Some(1);
    let a = run_benchmark(&spec).unwrap();
    spec.threads = Some(3);
    let b = run_benchmark(&spec).unwrap();
    assert_eq!(a.records, b.records);

    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    write_results_csv(&a.records, &mut ca).unwrap();
    write_results_csv(&b.records, &mut cb).unwrap();
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("method,function,seed,iteration,best_value\n"));
    assert_eq!(text.lines().count(), 1 + a.records.len());
}

#[test]
fn summary_quartiles_bracket_the_median() {
    let mut spec = small_spec();
    spec.methods = vec![Method::Ucb];
    spec.seeds = 4;
    let out = run_benchmark(&spec).unwrap();
    let rows = summarize(&out.records);
    assert_eq!(rows.len(), spec.iterations);
    for r in &rows {
        assert!(r.q25 <= r.median && r.median <= r.q75);
    }
    let mut buf = Vec::new();
    write_summary_csv(&rows, &mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("method,function,iteration,median,q25,q75\n"));
}

#[test]
fn flipped_aux_is_anticorrelated_with_the_objective() {
    let spec = BenchmarkSpec::default();
    for f in TestFunction::ALL {
        let problem = normalize_problem(f, 101);
        let aux = flipped_aux_for(&spec, &problem, 0).unwrap();
        assert_eq!(aux.len(), 50);
        let fx: Vec<f64> = aux.inputs.iter().map(|x| problem.eval(x)).collect();
        assert!(correlation(&ranks(&aux.targets), &ranks(&fx)) <= -0.95, "{f}");
        assert!(aux.targets.iter().all(|t| (0.0..=1.0).contains(t)));
    }
    let p = normalize_problem(TestFunction::Eggholder, 101);
    assert_eq!(make_flipped_aux(&p, 10, 1).unwrap().targets, make_flipped_aux(&p, 10, 1).unwrap().targets);
}

#[test]
fn normalized_problems_are_maximized_at_native_minimizers() {
    let rastrigin = normalize_problem(TestFunction::Rastrigin, 201);
    assert!((rastrigin.eval(&[0.0, 0.0]) - 1.0).abs() < 1e-12);
    let ackley = normalize_problem(TestFunction::Ackley, 201);
    assert!((ackley.eval(&[0.0, 0.0]) - 1.0).abs() < 1e-12);
    let himmelblau = normalize_problem(TestFunction::Himmelblau, 201);
    // (3, 2) lies on the 201-point grid of [-5, 5]
    assert!((himmelblau.eval(&[0.6, 0.4]) - 1.0).abs() < 1e-12);
    for f in TestFunction::ALL {
        let p = normalize_problem(f, 101);
        assert!((0.0..=1.0).contains(&p.eval(&[0.123, -0.987])));
    }
}

#[test]
fn invalid_specs_are_rejected() {
    for spec in [
        BenchmarkSpec { seeds: 0, ..small_spec() },
        BenchmarkSpec { iterations: 0, ..small_spec() },
        BenchmarkSpec { methods: vec![], ..small_spec() },
        BenchmarkSpec { init_size: 0, ..small_spec() },
    ] {
        assert!(run_benchmark(&spec).is_err());
    }
}

#[test]
fn two_device_surrogate() {
    let d = synthetic_two_device(3).unwrap();
    assert_eq!(d.aux.len(), DEVICE_AUX_SIZE);
    assert_eq!(d.aux.input_dim(), DEVICE_DIM);
    let (top_a, top_b) = d.top_features();
    assert_eq!(top_a, top_b);
    let max_diff = d.aux.inputs.iter().map(|x| (d.g_a(x) - d.g_b(x)).abs()).fold(0.0, f64::max);
    assert!(max_diff > 0.0);
    for x in &d.aux.inputs {
        assert!(d.raw_objective(x) >= 0.0);
        assert!((0.0..=1.0).contains(&d.objective(x)));
    }
    let again = synthetic_two_device(3).unwrap();
    assert_eq!(again.aux.targets, d.aux.targets);
}

#[test]
fn two_device_prior_pretrains() {
    let d = synthetic_two_device(1).unwrap();
    let model = tpbo_core::pretrain::pretrain(&d.aux, tpbo_core::FreeKernelSpec::se(1.0), &Default::default()).unwrap();
    assert_eq!(model.input_dim, DEVICE_DIM);
    assert!(tpbo_core::pretrain::build_tuned(&model).is_ok());
}
