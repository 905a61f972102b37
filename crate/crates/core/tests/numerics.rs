use fenc_core::numerics::{Activation, AdamConfig, AdamState, BasisArchitecture, BasisMode, MlpParams, Tape, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tensor(shape: &[usize], scale: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

/// `Σ out ⊙ r` for a fixed random `r`, so every output entry matters.
fn loss_value(p: &MlpParams, x: &Tensor, r: &Tensor) -> f64 {
    p.forward(x).unwrap().zip_map(r, |a, b| a * b).unwrap().sum()
}

fn random_mlp(rng: &mut ChaCha8Rng) -> MlpParams {
    let layers = rng.random_range(1..=3);
    let mut sizes = vec![rng.random_range(1..=4)];
    for _ in 0..layers {
        sizes.push(rng.random_range(1..=32));
    }
    let mut p = MlpParams::init(&sizes, Activation::Tanh, rng.random()).unwrap();
    // nonzero biases so their gradients are exercised away from symmetry
    for (_, t) in p.named_params_mut("") {
        for v in t.data_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
    }
    p
}

#[test]
fn mlp_gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut p = random_mlp(&mut rng);
        let x = random_tensor(&[5, p.in_dim()], 1.0, &mut rng);
        let r = random_tensor(&[5, p.out_dim()], 1.0, &mut rng);

        let mut tape = Tape::new();
        let xin = tape.constant(x.clone());
        let out = p.record(&mut tape, xin, "p.").unwrap();
        let rn = tape.constant(r.clone());
        let prod = tape.mul(out, rn).unwrap();
        let loss = tape.sum(prod);
        let grads = tape.backward(loss).unwrap();

        let names: Vec<(String, usize)> = p.named_params("p.").iter().map(|(n, t)| (n.clone(), t.len())).collect();
        for (name, len) in names {
            let g = grads.get(&name).expect("gradient for every parameter");
            for _ in 0..3 {
                let i = rng.random_range(0..len);
                let original = p.named_params("p.").into_iter().find(|(n, _)| *n == name).unwrap().1.data()[i];
                let set = |v: f64, p: &mut MlpParams| {
                    let mut params = p.named_params_mut("p.");
                    params.iter_mut().find(|(n, _)| *n == name).unwrap().1.data_mut()[i] = v;
                };
                set(original + h, &mut p);
                let plus = loss_value(&p, &x, &r);
                set(original - h, &mut p);
                let minus = loss_value(&p, &x, &r);
                set(original, &mut p);
                let fd = (plus - minus) / (2.0 * h);
                let ad = g.data()[i];
                let rel = (ad - fd).abs() / fd.abs().max(1e-8);
                // below ~1e-6 the difference quotient itself is dominated by rounding
                if fd.abs() > 1e-6 {
                    worst = worst.max(rel);
                    assert!(rel < 1e-4, "{name}[{i}]: autodiff {ad} vs fd {fd}");
                } else {
                    assert!((ad - fd).abs() < 1e-9, "{name}[{i}]: autodiff {ad} vs fd {fd}");
                }
                checked += 1;
            }
        }
    }
    assert!(checked >= 100, "only {checked} parameters checked");
    assert!(worst < 1e-4);
}

#[test]
fn adam_first_step_by_hand() {
    let mut state = AdamState::new(AdamConfig::default());
    let mut theta = Tensor::new(vec![1], vec![0.5]).unwrap();
    let mut tape = Tape::new();
    let p = tape.param("t", theta.clone());
    let loss = tape.sum(p);
    let grads = tape.backward(loss).unwrap();
    assert_eq!(grads.get("t").unwrap().data(), &[1.0]);
    state.step(vec![("t".into(), &mut theta)], &grads).unwrap();
    // m̂ = 1, v̂ = 1, so the step is lr / (1 + eps)
    let expected = 0.5 - 1e-3 / (1.0 + 1e-8);
    assert!((theta.data()[0] - expected).abs() < 1e-15);
}

fn trajectory(seed: u64) -> Vec<Vec<f64>> {
    let mut p = MlpParams::init(&[2, 8, 3], Activation::Relu, seed).unwrap();
    let mut state = AdamState::new(AdamConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut snapshots = Vec::new();
    for _ in 0..10 {
        let x = random_tensor(&[6, 2], 1.0, &mut rng);
        let mut tape = Tape::new();
        let xin = tape.constant(x);
        let out = p.record(&mut tape, xin, "").unwrap();
        let loss = tape.mean_sq_norm(out).unwrap();
        let grads = tape.backward(loss).unwrap();
        state.step(p.named_params_mut(""), &grads).unwrap();
        snapshots.push(p.named_params("").iter().flat_map(|(_, t)| t.data().to_vec()).collect());
    }
    snapshots
}

#[test]
fn optimizer_trajectories_are_bit_identical() {
    let a = trajectory(5);
    let b = trajectory(5);
    assert_eq!(a.len(), 10);
    for (x, y) in a.iter().zip(&b) {
        assert!(x.iter().zip(y).all(|(u, v)| u.to_bits() == v.to_bits()));
    }
    assert_ne!(a, trajectory(6));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn architectures_share_output_shapes(m in 1usize..6, k in 1usize..6, d in 1usize..4, seed in any::<u64>()) {
        let x = Tensor::full(&[m, 2], 0.25);
        let a = BasisArchitecture::new(BasisMode::MultiHead, k, 2, &[8], d, Activation::Relu, seed).unwrap();
        let b = BasisArchitecture::new(BasisMode::Parallel, k, 2, &[8], d, Activation::Relu, seed).unwrap();
        prop_assert_eq!(a.evaluate(&x).unwrap().shape().to_vec(), vec![m, k, d]);
        prop_assert_eq!(b.evaluate(&x).unwrap().shape().to_vec(), vec![m, k, d]);
    }

    #[test]
    fn bounded_parameters_give_finite_outputs(seed in any::<u64>(), tanh in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let act = if tanh { Activation::Tanh } else { Activation::Relu };
        let mut p = MlpParams::init(&[3, 32, 32, 2], act, seed).unwrap();
        for (_, t) in p.named_params_mut("") {
            for v in t.data_mut() {
                *v = rng.random_range(-10.0..=10.0);
            }
        }
        let x = random_tensor(&[4, 3], 10.0, &mut rng);
        let y = p.forward(&x).unwrap();
        prop_assert!(y.is_finite());
        let mut tape = Tape::new();
        let xin = tape.constant(x);
        let out = p.record(&mut tape, xin, "").unwrap();
        let loss = tape.mean_sq_norm(out).unwrap();
        let grads = tape.backward(loss).unwrap();
        for (_, g) in grads.iter() {
            prop_assert!(g.is_finite());
        }
    }
}
