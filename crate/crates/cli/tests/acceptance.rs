//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Run a subset with e.g.
//! `cargo test -p fenc-cli --test acceptance -- AC-4 AC-12`.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use fenc_core::encoder::{
    basis_gram, coefficients_ip, coefficients_ls, combine, train, Coefficients, EncoderConfig,
    LrSchedule,
};
use fenc_core::geometry::{classify_transfer, Tolerances, TransferType};
use fenc_core::hilbert::{
    logit_inner_product, logit_to_probability, mc_inner_product, probability_to_logit, simplex_add, simplex_scale,
    FunctionDataset, HilbertSpace, LogitVector, SimplexPoint,
};
use fenc_core::numerics::{Activation, MlpParams, Tape, Tensor};
use fenc_core::tasks::{
    argmax_accuracy, eval_polynomial, sample_classification_task, sample_type1_polynomial, sample_type3_cubic,
    ClassPool, ClassificationSampler, ClassificationTaskSpec, PolynomialSampler, PolynomialTaskSpec, TaskDescriptor,
};
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const E: HilbertSpace = HilbertSpace::EuclideanL2MC;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Ctx {
    dir: PathBuf,
    /// Output directory of the seed-0 FE(LS) run, reused for determinism.
    ls_seed0: Option<PathBuf>,
}

fn median(v: &[f64]) -> f64 {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn fenc(args: &[&str]) -> Value {
    let out = Command::new(env!("CARGO_BIN_EXE_fenc")).args(args).output().expect("spawn fenc");
    assert!(out.status.success(), "fenc {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn column(xs: &[f64]) -> Tensor {
    Tensor::column(xs).unwrap()
}

fn dataset(xs: &[f64], ys: &[f64]) -> FunctionDataset {
    FunctionDataset::new(column(xs), column(ys), E).unwrap()
}

// ---------------------------------------------------------------------------

fn ac1(_: &mut Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-5;
    let (mut worst, mut sampled, mut tiny) = (0.0f64, 0, 0);
    let mut failures = Vec::new();
    for net in 0..20 {
        // up to three weight layers of width <= 32, at least 100 parameters
        let mut p = loop {
            let layers = rng.random_range(1..=3);
            let mut sizes = vec![rng.random_range(1..=4)];
            for _ in 0..layers {
                sizes.push(rng.random_range(1..=32));
            }
            let p = MlpParams::init(&sizes, Activation::Tanh, rng.random()).unwrap();
            if p.named_params("").iter().map(|(_, t)| t.len()).sum::<usize>() >= 100 {
                break p;
            }
        };
        for (_, t) in p.named_params_mut("") {
            t.data_mut().iter_mut().for_each(|v| *v += rng.random_range(-0.1..0.1));
        }
        let x = Tensor::new(vec![5, p.in_dim()], (0..5 * p.in_dim()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let r = Tensor::new(vec![5, p.out_dim()], (0..5 * p.out_dim()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let loss = |p: &MlpParams| p.forward(&x).unwrap().zip_map(&r, |a, b| a * b).unwrap().sum();

        let mut tape = Tape::new();
        let xin = tape.constant(x.clone());
        let out = p.record(&mut tape, xin, "").unwrap();
        let rn = tape.constant(r.clone());
        let prod = tape.mul(out, rn).unwrap();
        let l = tape.sum(prod);
        let grads = tape.backward(l).unwrap();

        // flat index -> (tensor, offset)
        let layout: Vec<(String, usize)> = p.named_params("").iter().map(|(n, t)| (n.clone(), t.len())).collect();
        let total: usize = layout.iter().map(|(_, n)| n).sum();
        for flat in sample(&mut rng, total, 100) {
            let (mut t, mut i) = (0, flat);
            while i >= layout[t].1 {
                i -= layout[t].1;
                t += 1;
            }
            let name = &layout[t].0;
            let ad = grads.get(name).unwrap().data()[i];
            let bump = |delta: f64, p: &mut MlpParams| {
                let mut ps = p.named_params_mut("");
                let v = &mut ps.iter_mut().find(|(n, _)| n == name).unwrap().1.data_mut()[i];
                *v += delta;
            };
            bump(h, &mut p);
            let plus = loss(&p);
            bump(-2.0 * h, &mut p);
            let minus = loss(&p);
            bump(h, &mut p);
            let fd = (plus - minus) / (2.0 * h);
            sampled += 1;
            // below 1e-6 the difference quotient is dominated by rounding
            if fd.abs() > 1e-6 {
                let rel = (ad - fd).abs() / fd.abs();
                worst = worst.max(rel);
                if rel >= 1e-4 {
                    failures.push(format!("net {net} {name}[{i}]: {ad} vs {fd}"));
                }
            } else {
                tiny += 1;
                if (ad - fd).abs() >= 1e-9 {
                    failures.push(format!("net {net} {name}[{i}]: {ad} vs {fd} (tiny)"));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{sampled} parameters over 20 MLPs, worst relative error {worst:.2e} (< 1e-4); {tiny} with |fd| <= 1e-6 checked to 1e-9 absolute{}",
            failures.first().map(|f| format!("; first failure {f}")).unwrap_or_default()
        ),
    )
}

fn ls_objective(ds: &FunctionDataset, basis: &Tensor, c: &[f64]) -> f64 {
    let r = ds.outputs().sub(&combine(basis, &Coefficients::new(c.to_vec()).unwrap()).unwrap()).unwrap();
    mc_inner_product(&r, &r, E).unwrap()
}

fn ac2(_: &mut Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst, mut not_min) = (0.0f64, 0);
    for _ in 0..100 {
        let k = rng.random_range(1..=8);
        let m = rng.random_range(k..=64);
        let b: Vec<f64> = (0..m * k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
        let basis = Tensor::new(vec![m, k, 1], b.clone()).unwrap();
        let xs: Vec<f64> = (0..m).map(|i| i as f64).collect();
        let ds = dataset(&xs, &f);
        let c = coefficients_ls(&ds, &basis, 0.0).unwrap();

        let bm = DMatrix::from_row_slice(m, k, &b);
        let y = DVector::from_column_slice(&f);
        let o = (bm.transpose() * &bm / m as f64).lu().solve(&(bm.transpose() * y / m as f64)).unwrap();
        let scale = o.amax().max(1e-300);
        let rel = c.values().iter().zip(o.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        worst = worst.max(rel);

        let base = ls_objective(&ds, &basis, c.values());
        for j in 0..k {
            for d in [1e-3, -1e-3] {
                let mut q = c.values().to_vec();
                q[j] += d;
                if ls_objective(&ds, &basis, &q) < base {
                    not_min += 1;
                }
            }
        }
    }
    outcome(
        worst < 1e-8 && not_min == 0,
        format!("100 instances: worst relative deviation from normal-equation oracle {worst:.2e} (< 1e-8); {not_min} perturbations improved the objective"),
    )
}

/// `sqrt(2n + 1) P_n(x)`: orthonormal under the uniform mean on [-1, 1].
fn legendre(n: usize, x: f64) -> f64 {
    let p = match n {
        0 => 1.0,
        1 => x,
        2 => 0.5 * (3.0 * x * x - 1.0),
        3 => 0.5 * (5.0 * x.powi(3) - 3.0 * x),
        4 => (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0,
        _ => unreachable!(),
    };
    ((2 * n + 1) as f64).sqrt() * p
}

fn ac3(_: &mut Ctx) -> Outcome {
    let m = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xs: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let vals: Vec<f64> = xs.iter().flat_map(|&x| (0..5).map(move |n| legendre(n, x))).collect();
    let basis = Tensor::new(vec![m, 5, 1], vals).unwrap();
    let a: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    let targets: Vec<(&str, Box<dyn Fn(f64) -> f64>)> = vec![
        ("2*g1", Box::new(|x| 2.0 * legendre(1, x))),
        ("random combination", Box::new(move |x| (0..5).map(|n| a[n] * legendre(n, x)).sum())),
        ("sin(3x)", Box::new(|x| (3.0 * x).sin())),
    ];
    let mut worst = 0.0f64;
    for (_, f) in &targets {
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let ds = dataset(&xs, &ys);
        let ip = coefficients_ip(&ds, &basis).unwrap();
        let ls = coefficients_ls(&ds, &basis, 0.0).unwrap();
        let d = ip.values().iter().zip(ls.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(d);
    }
    let g = basis_gram(&basis, E).unwrap();
    let off = (0..5)
        .flat_map(|i| (0..5).map(move |j| (i, j)))
        .map(|(i, j)| (g.get(i, j) - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    outcome(
        worst < 0.05,
        format!("m = 1e5, 5 scaled Legendre functions, {} targets: max |c_IP - c_LS| = {worst:.2e} (< 0.05); max |G - I| = {off:.2e}", targets.len()),
    )
}

/// Trains the default polynomial benchmark through the CLI and evaluates the
/// model on 100 tasks per type.
fn benchmark_run(ctx: &Ctx, method: &str, seed: u64) -> (PathBuf, Value, f64) {
    let out = ctx.dir.join(format!("{method}-{seed}"));
    let seed_s = seed.to_string();
    let start = Instant::now();
    fenc(&["train", "--out", p(&out), "--seed", &seed_s, "--reproducible", "--set", &format!("encoder.method={method}")]);
    let secs = start.elapsed().as_secs_f64();
    let model = out.join("model.fenc");
    let eval_out = out.join("eval");
    // evaluation seeds are salted apart from the training stream
    let eval_seed = (1000 + seed).to_string();
    let report = fenc(&["eval", "--model", p(&model), "--out", p(&eval_out), "--seed", &eval_seed, "--reproducible", "--set", "run.eval_tasks=100"]);
    (out, report["results"]["methods"][method].clone(), secs)
}

fn rel_median(methods: &Value, ty: &str) -> f64 {
    methods[ty]["rel"]["median"].as_f64().unwrap()
}

fn ac4_5(ctx: &mut Ctx) -> (Outcome, Outcome) {
    let mut ac4 = Vec::new();
    let mut ac5 = Vec::new();
    let mut slowest = 0.0f64;
    for seed in 0..3u64 {
        let (dir, ls, secs) = benchmark_run(ctx, "ls", seed);
        slowest = slowest.max(secs);
        if seed == 0 {
            ctx.ls_seed0 = Some(dir);
        }
        let (_, ip, _) = benchmark_run(ctx, "ip", seed);
        ac4.push(rel_median(&ls, "type1"));
        ac5.push((rel_median(&ls, "type2"), rel_median(&ip, "type2")));
    }
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    let o4 = outcome(
        ac4.iter().all(|&e| e < 0.05) && slowest < 600.0,
        format!("FE(LS) k=11, 3000 steps; median type-1 relative error per seed [{}] (< 0.05); slowest training {slowest:.0}s (< 600s)", fmt(&ac4)),
    );
    let ls: Vec<f64> = ac5.iter().map(|x| x.0).collect();
    let ip: Vec<f64> = ac5.iter().map(|x| x.1).collect();
    let o5 = outcome(
        ac5.iter().all(|&(l, i)| l < 0.10 && l <= i),
        format!("median type-2 relative error per seed: FE(LS) [{}] (< 0.10), FE(IP) [{}] (FE(LS) <= FE(IP))", fmt(&ls), fmt(&ip)),
    );
    (o4, o5)
}

fn ac6(_: &mut Ctx) -> Outcome {
    let cfg = EncoderConfig {
        k: 3,
        steps: 3000,
        seed: 6,
        ..EncoderConfig::default()
    };
    let model = train(&PolynomialSampler::new(PolynomialTaskSpec::type1(), 100), cfg).unwrap();
    let spec = PolynomialTaskSpec::type3();
    let mut ratios = Vec::new();
    for i in 0..50 {
        let t = sample_type3_cubic(&spec, 6_000 + i).unwrap();
        let fe = model.approximation_error(&t.example_set, &t.query_set).unwrap().squared;
        // independent oracle: quadratic regression on the same example set
        let vander = |ds: &FunctionDataset| {
            let x = ds.inputs().data();
            DMatrix::from_fn(x.len(), 3, |r, c| x[r].powi(c as i32))
        };
        let v = vander(&t.example_set);
        let b = v
            .clone()
            .svd(true, true)
            .solve(&DVector::from_column_slice(t.example_set.outputs().data()), 1e-14)
            .unwrap();
        let pred = vander(&t.query_set) * b;
        let q = t.query_set.outputs().data();
        let oracle = pred.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / q.len() as f64;
        ratios.push(fe / oracle);
    }
    let med = median(&ratios);
    outcome(
        (med - 1.0).abs() <= 0.10,
        format!("k=3 on 50 cubics: median error ratio FE(LS) / best-quadratic oracle = {med:.4} (within 10% of 1)"),
    )
}

fn ac7(ctx: &mut Ctx) -> Outcome {
    let out = ctx.dir.join("ablate");
    let start = Instant::now();
    let report = fenc(&[
        "ablate", "--out", p(&out), "--reproducible", "--sweep", "basis_counts", "--values", "1,2,3,5,10",
        "--set", "run.seeds=0,1,2", "--set", "run.eval_tasks=100",
    ]);
    let secs = start.elapsed().as_secs_f64();
    let rows = report["results"]["rows"].as_array().unwrap();
    let err: Vec<(u64, f64)> = rows
        .iter()
        .map(|r| (r["value"].as_u64().unwrap(), r["type1"]["median"].as_f64().unwrap()))
        .collect();
    let at = |k: u64| err.iter().find(|e| e.0 == k).unwrap().1;
    let ratio = at(10) / at(3);
    let list = err.iter().map(|(k, e)| format!("k={k}: {e:.4}")).collect::<Vec<_>>().join(", ");
    outcome(
        at(1) > at(2) && at(2) > at(3) && (0.2..=1.5).contains(&ratio) && secs < 3600.0,
        format!("median type-1 relative error over 3 seeds [{list}]; err(10)/err(3) = {ratio:.3} (in [0.2, 1.5]); {secs:.0}s (< 3600s)"),
    )
}

fn ac8(_: &mut Ctx) -> Outcome {
    let family = |rng: &mut ChaCha8Rng| {
        let a: f64 = rng.random_range(-3.0..=3.0);
        let xs: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| a * x * x + 5.0).collect();
        FunctionDataset::new(column(&xs), column(&ys), E)
    };
    let cfg = EncoderConfig {
        k: 3,
        use_residuals: true,
        steps: 6000,
        tasks_per_step: 20,
        lr_schedule: LrSchedule::Cosine,
        seed: 8,
        ..EncoderConfig::default()
    };
    let model = train(&family, cfg).unwrap();
    let grid: Vec<f64> = (0..100).map(|i| -1.0 + 2.0 * i as f64 / 99.0).collect();
    let x = column(&grid);
    let avg = model.average_values(&x).unwrap();
    // E_a[a x² + 5] = 5 for a symmetric about zero
    let dev = avg.data().iter().map(|v| (v - 5.0).abs()).fold(0.0, f64::max);
    let exact = model.predict(&x, &Coefficients::zeros(3)).unwrap() == avg;
    outcome(
        dev < 0.1 && exact,
        format!("max |f̄(x) - 5| over a 100-point grid = {dev:.4} (< 0.1); c = 0 prediction equals f̄ bitwise: {exact}"),
    )
}

fn ac9(_: &mut Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut trip, mut hom, mut shift_float) = (0.0f64, 0.0f64, 0.0f64);
    let mut shift_exact = true;
    let shift_of = |a: &[f64], b: &[f64]| {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        d.iter().map(|v| (v - d[0]).abs()).fold(0.0, f64::max)
    };
    for _ in 0..1000 {
        let d = rng.random_range(2..=6);
        let mut point = || SimplexPoint::normalize((0..d).map(|_| rng.random_range(0.01..1.0)).collect()).unwrap();
        let (x, y) = (point(), point());
        let back = logit_to_probability(&probability_to_logit(&x));
        trip = trip.max(back.probabilities().iter().zip(x.probabilities()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));

        let (lx, ly) = (probability_to_logit(&x), probability_to_logit(&y));
        let sum: Vec<f64> = lx.logits().iter().zip(ly.logits()).map(|(a, b)| a + b).collect();
        hom = hom.max(shift_of(probability_to_logit(&simplex_add(&x, &y).unwrap()).logits(), &sum));
        let alpha = rng.random_range(-3.0..3.0);
        let scaled: Vec<f64> = lx.logits().iter().map(|v| alpha * v).collect();
        hom = hom.max(shift_of(probability_to_logit(&simplex_scale(alpha, &x).unwrap()).logits(), &scaled));

        // shifts of arbitrary floats agree to rounding ...
        let s: f64 = rng.random_range(-10.0..10.0);
        let shifted = LogitVector::new(lx.logits().iter().map(|v| v + s).collect()).unwrap();
        let base = logit_inner_product(&lx, &ly).unwrap();
        shift_float = shift_float.max((logit_inner_product(&shifted, &ly).unwrap() - base).abs());
        // ... and are exact when the arithmetic is: dyadic values, integer
        // shifts and a power-of-two dimension so centering divides exactly
        let d2 = [2, 4, 8][rng.random_range(0..3)];
        let dy: Vec<f64> = (0..d2).map(|_| rng.random_range(-512i32..512) as f64 / 64.0).collect();
        let dz: Vec<f64> = (0..d2).map(|_| rng.random_range(-512i32..512) as f64 / 64.0).collect();
        let si = rng.random_range(-8i32..=8) as f64;
        let a = logit_inner_product(&LogitVector::new(dy.clone()).unwrap(), &LogitVector::new(dz.clone()).unwrap()).unwrap();
        let b = logit_inner_product(
            &LogitVector::new(dy.iter().map(|v| v + si).collect()).unwrap(),
            &LogitVector::new(dz).unwrap(),
        )
        .unwrap();
        shift_exact &= a.to_bits() == b.to_bits();
    }
    outcome(
        trip < 1e-12 && hom < 1e-10 && shift_float < 1e-12 && shift_exact,
        format!(
            "1000 points: round trip {trip:.1e} (< 1e-12); perturbation/powering homomorphism {hom:.1e} (< 1e-10); shift invariance {shift_float:.1e} on random floats, bitwise on exactly representable inputs: {shift_exact}"
        ),
    )
}

fn ac10(_: &mut Ctx) -> Outcome {
    let spec = PolynomialTaskSpec::type1();
    let tol = Tolerances::default();
    let mut correct = [0; 3];
    let mut nesting_violations = 0;
    for case in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + case);
        let xs: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let coeffs: Vec<Vec<f64>> = (0..3)
            .map(|j| match sample_type1_polynomial(&spec, 100 * case + j).unwrap().descriptor {
                TaskDescriptor::Polynomial { coefficients } => coefficients,
                _ => unreachable!(),
            })
            .collect();
        let on = |c: &[f64]| -> Vec<f64> { xs.iter().map(|&x| eval_polynomial(c, x)).collect() };
        let sources: Vec<FunctionDataset> = coeffs.iter().map(|c| dataset(&xs, &on(c))).collect();
        let mix = |w: &[f64]| -> Vec<f64> {
            let mut c = vec![0.0; 4];
            for (cj, &wj) in coeffs.iter().zip(w) {
                for (acc, v) in c.iter_mut().zip(cj) {
                    *acc += wj * v;
                }
            }
            c
        };

        // convex combination, Dirichlet(1, 1, 1)
        let e: Vec<f64> = (0..3).map(|_| -rng.random_range(f64::EPSILON..1.0).ln()).collect();
        let total: f64 = e.iter().sum();
        let convex: Vec<f64> = e.iter().map(|v| v / total).collect();
        // span combination with a clearly negative weight
        let mut span: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let neg = rng.random_range(0..3);
        span[neg] = rng.random_range(-2.0..-0.5);
        // a cubic component leaves the span of quadratics
        let mut cubic = mix(&convex);
        let lead: f64 = rng.random_range(0.5..3.0);
        cubic[3] = if rng.random_bool(0.5) { lead } else { -lead };

        let cases = [
            (mix(&convex), TransferType::Type1),
            (mix(&span), TransferType::Type2),
            (cubic, TransferType::Type3),
        ];
        for (i, (c, want)) in cases.into_iter().enumerate() {
            let target = dataset(&xs, &on(&c));
            let r = classify_transfer(&target, &sources, tol).unwrap();
            if r.transfer_type == want {
                correct[i] += 1;
            }
            if r.hull.residual_norm < r.span.residual_norm - 1e-12 {
                nesting_violations += 1;
            }
        }
    }
    outcome(
        correct == [100; 3] && nesting_violations == 0,
        format!(
            "correct: type1 {}/100, type2 {}/100, type3 {}/100; hull-vs-span nesting violations: {nesting_violations}",
            correct[0], correct[1], correct[2]
        ),
    )
}

fn ac11(_: &mut Ctx) -> Outcome {
    let spec = ClassificationTaskSpec::default();
    let pool = ClassPool::new(spec.clone()).unwrap();
    let sampler = ClassificationSampler { pool: pool.clone() };
    let mut per_seed = Vec::new();
    let mut slowest = 0.0f64;
    for seed in 0..3u64 {
        let cfg = EncoderConfig {
            k: 20,
            space: HilbertSpace::logit(2).unwrap(),
            in_dim: spec.feature_dim,
            out_dim: 2,
            steps: 1000,
            seed,
            ..EncoderConfig::default()
        };
        let start = Instant::now();
        let model = train(&sampler, cfg).unwrap();
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let acc: Vec<f64> = (0..50)
            .map(|i| {
                let t = sample_classification_task(&pool, 11_000 + 100 * seed + i, true).unwrap();
                let c = model.fit(&t.example_set).unwrap();
                let pred = model.predict(t.query_set.inputs(), &c).unwrap();
                argmax_accuracy(&pred, t.query_set.outputs()).unwrap()
            })
            .collect();
        per_seed.push(median(&acc));
    }
    let med = median(&per_seed);
    outcome(
        med >= 0.90 && slowest < 900.0,
        format!(
            "held-out-class query accuracy, median over 50 tasks per seed [{}]; median over seeds {med:.3} (>= 0.90); slowest training {slowest:.0}s (< 900s)",
            per_seed.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn ac12(ctx: &mut Ctx) -> Outcome {
    let first = match &ctx.ls_seed0 {
        Some(d) => d.clone(),
        None => benchmark_run(ctx, "ls", 0).0,
    };
    let second = ctx.dir.join("ls-0-again");
    fenc(&["train", "--out", p(&second), "--seed", "0", "--reproducible", "--set", "encoder.method=ls"]);
    let a = fs::read(first.join("metrics.csv")).unwrap();
    let b = fs::read(second.join("metrics.csv")).unwrap();
    outcome(
        a == b && !a.is_empty(),
        format!("two seed-0 runs of the type-1 benchmark: metrics.csv ({} bytes) identical: {}", a.len(), a == b),
    )
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| filters.is_empty() || filters.iter().any(|f| f == id);
    let tmp = tempfile::tempdir().unwrap();
    let mut ctx = Ctx {
        dir: tmp.path().to_path_buf(),
        ls_seed0: None,
    };

    type Single = fn(&mut Ctx) -> Outcome;
    let mut results: Vec<(String, Outcome, f64)> = Vec::new();
    let mut run = |ids: &[&str], ctx: &mut Ctx, f: &dyn Fn(&mut Ctx) -> Vec<Outcome>| {
        if !ids.iter().any(|id| wanted(id)) {
            return;
        }
        let start = Instant::now();
        let outs = match catch_unwind(AssertUnwindSafe(|| f(ctx))) {
            Ok(o) => o,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                ids.iter().map(|_| outcome(false, format!("panicked: {msg}"))).collect()
            }
        };
        let secs = start.elapsed().as_secs_f64();
        for (id, o) in ids.iter().zip(outs) {
            if wanted(id) {
                println!("{id} {} [{secs:.1}s] {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
                results.push((id.to_string(), o, secs));
            }
        }
    };

    let singles: [(&str, Single); 9] = [
        ("AC-1", ac1),
        ("AC-2", ac2),
        ("AC-3", ac3),
        ("AC-6", ac6),
        ("AC-7", ac7),
        ("AC-8", ac8),
        ("AC-9", ac9),
        ("AC-10", ac10),
        ("AC-11", ac11),
    ];
    for (id, f) in &singles[..3] {
        run(&[id], &mut ctx, &|c| vec![f(c)]);
    }
    run(&["AC-4", "AC-5"], &mut ctx, &|c| {
        let (a, b) = ac4_5(c);
        vec![a, b]
    });
    for (id, f) in &singles[3..] {
        run(&[id], &mut ctx, &|c| vec![f(c)]);
    }
    run(&["AC-12"], &mut ctx, &|c| vec![ac12(c)]);

    let failed: Vec<&str> = results.iter().filter(|r| !r.1.pass).map(|r| r.0.as_str()).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({})", failed.join(", ")) }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
