use fenc_core::geometry::{classify_transfer, Tolerances, TransferType};
use fenc_core::hilbert::{FunctionDataset, HilbertSpace};
use fenc_core::numerics::Tensor;
use fenc_core::tasks::{
    eval_polynomial, read_descriptor, read_task_csv, sample_classification_task, sample_type1_polynomial,
    sample_type2_polynomial, sample_type3_cubic, write_descriptor, write_task_csv, ClassPool,
    ClassificationTaskSpec, PolynomialTaskSpec, TaskDescriptor, TaskSample,
};

fn coefficients(t: &TaskSample) -> &[f64] {
    match &t.descriptor {
        TaskDescriptor::Polynomial { coefficients } => coefficients,
        other => panic!("not a polynomial: {other:?}"),
    }
}

/// A polynomial task's function evaluated on someone else's inputs.
fn on_inputs(t: &TaskSample, inputs: &Tensor) -> FunctionDataset {
    let ys: Vec<f64> = inputs.data().iter().map(|&x| eval_polynomial(coefficients(t), x)).collect();
    FunctionDataset::new(inputs.clone(), Tensor::column(&ys).unwrap(), HilbertSpace::EuclideanL2MC).unwrap()
}

#[test]
fn descriptors_reproduce_outputs_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let specs = [
        PolynomialTaskSpec::type1(),
        PolynomialTaskSpec::type2(),
        PolynomialTaskSpec::type3(),
    ];
    for seed in 0..10 {
        let tasks = [
            sample_type1_polynomial(&specs[0], seed).unwrap(),
            sample_type2_polynomial(&specs[1], seed).unwrap(),
            sample_type3_cubic(&specs[2], seed).unwrap(),
        ];
        for t in &tasks {
            for ds in [&t.example_set, &t.query_set] {
                let regenerated = on_inputs(t, ds.inputs());
                assert_eq!(regenerated.outputs(), ds.outputs());
            }
            let csv = dir.path().join("task.csv");
            let desc = dir.path().join("task.json");
            write_task_csv(&csv, &t.query_set).unwrap();
            write_descriptor(&desc, &t.descriptor).unwrap();
            assert_eq!(read_task_csv(&csv, HilbertSpace::EuclideanL2MC).unwrap(), t.query_set);
            assert_eq!(read_descriptor(&desc).unwrap(), t.descriptor);
        }
        assert!(coefficients(&tasks[1]).iter().any(|c| c.abs() > 3.0));
        assert!(coefficients(&tasks[2])[3].abs() >= 0.5);
    }
}

#[test]
fn generated_families_have_the_intended_transfer_type() {
    let spec1 = PolynomialTaskSpec::type1();
    let spec2 = PolynomialTaskSpec::type2();
    let spec3 = PolynomialTaskSpec::type3();
    let tol = Tolerances::default();
    let mut correct = [0; 2];
    for seed in 0..100u64 {
        let t2 = sample_type2_polynomial(&spec2, 1_000 + seed).unwrap();
        let t3 = sample_type3_cubic(&spec3, 2_000 + seed).unwrap();
        for (i, (t, want)) in [(t2, TransferType::Type2), (t3, TransferType::Type3)].into_iter().enumerate() {
            let inputs = t.query_set.inputs();
            let sources: Vec<_> = (0..20)
                .map(|j| on_inputs(&sample_type1_polynomial(&spec1, seed * 100 + j).unwrap(), inputs))
                .collect();
            let report = classify_transfer(&t.query_set, &sources, tol).unwrap();
            if report.transfer_type == want {
                correct[i] += 1;
            }
        }
    }
    assert!(correct[0] >= 95 && correct[1] >= 95, "{correct:?} of 100");
}

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn type1_and_type3_share_the_input_distribution() {
    let spec1 = PolynomialTaskSpec::type1();
    let spec3 = PolynomialTaskSpec::type3();
    let mut accepted = 0;
    for seed in 0..100u64 {
        let a = sample_type1_polynomial(&spec1, 10 * seed).unwrap();
        let b = sample_type3_cubic(&spec3, 10 * seed + 7).unwrap();
        let (xa, xb) = (a.query_set.inputs().data(), b.query_set.inputs().data());
        let (n, m) = (xa.len() as f64, xb.len() as f64);
        // 1% critical value, asymptotic
        let critical = 1.628 * ((n + m) / (n * m)).sqrt();
        if ks_statistic(xa, xb) < critical {
            accepted += 1;
        }
        assert!(xa.iter().chain(xb).all(|x| (-1.0..1.0).contains(x)));
    }
    assert!(accepted >= 95, "{accepted} of 100");
}

#[test]
fn classification_tasks_follow_their_class() {
    let spec = ClassificationTaskSpec::default();
    let pool = ClassPool::new(spec.clone()).unwrap();
    for c in 0..spec.classes {
        let r = pool.center(c).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((r - spec.center_radius).abs() < 1e-12);
    }
    for seed in 0..20 {
        for heldout in [false, true] {
            let t = sample_classification_task(&pool, seed, heldout).unwrap();
            let TaskDescriptor::Class { class_id } = t.descriptor else { panic!() };
            let ids = if heldout { spec.heldout_ids() } else { spec.training_ids() };
            assert!(ids.contains(&class_id));
            let d = spec.feature_dim;
            let x = t.example_set.inputs().data();
            let y = t.example_set.outputs().data();
            let mut mean = vec![0.0; d];
            for row in 0..t.example_set.len() {
                let positive = y[2 * row] > y[2 * row + 1];
                assert_eq!(positive, row % 2 == 0);
                if positive {
                    for (m, v) in mean.iter_mut().zip(&x[row * d..(row + 1) * d]) {
                        *m += v / spec.examples_per_polarity as f64;
                    }
                }
            }
            // sample mean of 100 points with per-axis std 0.3
            let off = mean.iter().zip(pool.center(class_id)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(off < 0.15, "class {class_id}: mean off by {off}");
        }
    }
}
