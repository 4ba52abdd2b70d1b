use dshn::data::{generate_synthetic, LabeledDataset, SyntheticConfig};
use dshn::hypergraph::DirectedHypergraph;
use dshn::instances::random_hypergraph;
use dshn::laplacian::{apply_laplacian, build_laplacian_with, DegreeMode, TRAINING_JITTER};
use dshn::model::*;
use dshn::sheaf::MapShape;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Case {
    h: DirectedHypergraph,
    features: Vec<f64>,
    labels: Vec<usize>,
    rows: Vec<usize>,
}

fn case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(6..=10);
    let m = rng.gen_range(3..=7);
    let h = random_hypergraph(&mut rng, n, m, 5, 0.6);
    let features = (0..n * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let labels = (0..n).map(|_| rng.gen_range(0..3)).collect();
    let rows = (0..n).filter(|u| u % 3 != 2).collect();
    Case { h, features, labels, rows }
}

fn small_config(light: bool, shape: MapShape, seed: u64) -> ModelConfig {
    ModelConfig {
        num_layers: 2,
        stalk_dim: 2,
        hidden: 3,
        q: 0.2,
        sheaf_activation: SheafActivation::Sigmoid,
        map_shape: shape,
        residual: true,
        light,
        dynamic_sheaf: true,
        left_projection: true,
        sheaf_dropout: 0.0,
        aggregation: Aggregation::Mean,
        phi_depth: 1,
        classifier_width: 5,
        seed,
    }
}

/// Random offsets on every parameter, so that no pre-activation sits exactly
/// on a rectifier kink (zero biases meet all-zero rows otherwise).
fn jittered(mut state: ModelState, seed: u64) -> ModelState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    for t in state.tensors_mut() {
        t.data.iter_mut().for_each(|x| *x += rng.gen_range(-0.1..0.1));
    }
    state
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..3 {
        let c = case(seed);
        for light in [false, true] {
            for shape in [MapShape::Diagonal, MapShape::Full] {
                let cfg = small_config(light, shape, seed);
                let ctx = GraphContext::new(&c.h, &c.features, 3, &cfg).unwrap();
                let state = jittered(ModelState::init(&cfg, 3, 3).unwrap(), seed);
                let checks = gradient_check(&ctx, &state, &cfg, &c.labels, &c.rows, 32, seed).unwrap();
                for g in &checks {
                    if g.frozen {
                        assert_eq!(g.max_abs_grad, 0.0, "{} should be frozen", g.name);
                    } else {
                        assert!(g.max_rel_error <= 1e-4, "seed {seed} light {light} {shape}: {g:?}");
                    }
                }
            }
        }
    }
}

fn random_maps(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(0.2..1.2)).collect())
}

fn random_signal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Complex64> {
    (0..rows * cols)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

#[test]
fn diffusion_op_is_one_minus_normalized_laplacian() {
    for seed in 0..6 {
        let c = case(seed);
        for shape in [MapShape::Diagonal, MapShape::Full] {
            let cfg = small_config(false, shape, seed);
            let ctx = GraphContext::new(&c.h, &c.features, 3, &cfg).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let maps = random_maps(&mut rng, c.h.incidences().len(), cfg.map_width());
            let sheaf = maps_to_sheaf(&c.h, &cfg, &maps).unwrap();
            let bundle = build_laplacian_with(&c.h, &sheaf, true, DegreeMode::Jitter(TRAINING_JITTER)).unwrap();

            let (rows, cols) = (c.h.num_vertices() * 2, 3);
            let x = random_signal(&mut rng, rows, cols);
            let lx = apply_laplacian(&bundle, &x, cols).unwrap();
            let dense_l = bundle.l.to_dense().unwrap();

            let mut tape = Tape::new();
            let xv = tape.constant(NodeSignal::new(rows, cols, x.clone()).stacked());
            let mv = tape.constant(maps.clone());
            let y = tape.diffusion(xv, mv, ctx.plan().clone());
            let y = NodeSignal::from_stacked(tape.value(y));

            for col in 0..cols {
                let xc: Vec<Complex64> = (0..rows).map(|r| x[r * cols + col]).collect();
                let lxc = dense_l.matvec(&xc);
                for r in 0..rows {
                    let want = x[r * cols + col] - lxc[r];
                    assert!((y.values[r * cols + col] - want).norm() < 1e-10);
                    assert!((lx[r * cols + col] - lxc[r]).norm() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn layer_with_identity_weights_is_plain_diffusion() {
    let c = case(3);
    let cfg = small_config(false, MapShape::Full, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let maps = random_maps(&mut rng, c.h.incidences().len(), 4);
    let sheaf = maps_to_sheaf(&c.h, &cfg, &maps).unwrap();
    let bundle = build_laplacian_with(&c.h, &sheaf, true, DegreeMode::Jitter(TRAINING_JITTER)).unwrap();
    let rows = c.h.num_vertices() * 2;
    let x = NodeSignal::new(rows, 3, random_signal(&mut rng, rows, 3));
    let eye = |k: usize| Tensor::new(k, k, (0..k * k).map(|i| if i % (k + 1) == 0 { 1.0 } else { 0.0 }).collect());

    let y = diffusion_layer(&x, &bundle, &eye(2), &eye(3), false, LayerTail::Linear).unwrap();
    let lx = apply_laplacian(&bundle, &x.values, 3).unwrap();
    for ((a, b), l) in y.values.iter().zip(&x.values).zip(&lx) {
        assert!((a - (b - l)).norm() < 1e-12);
    }

    // residual adds X back: 2X − L_N X
    let y = diffusion_layer(&x, &bundle, &eye(2), &eye(3), true, LayerTail::Linear).unwrap();
    for ((a, b), l) in y.values.iter().zip(&x.values).zip(&lx) {
        assert!((a - (2.0 * b - l)).norm() < 1e-12);
    }
}

#[test]
fn unwind_and_complex_relu_examples() {
    let z = |re, im| Complex64::new(re, im);
    let x = vec![z(1.0, 2.0), z(3.0, -1.0), z(0.5, 0.0), z(-2.0, 4.0)];
    assert_eq!(unwind(&x, 2, 2), vec![1.0, 3.0, 2.0, -1.0, 0.5, -2.0, 0.0, 4.0]);
    assert_eq!(complex_relu(z(0.3, -5.0)), z(0.3, -5.0));
    assert_eq!(complex_relu(z(-0.3, 5.0)), z(0.0, 0.0));
    assert_eq!(complex_relu(z(0.0, 1.0)), z(0.0, 0.0));
}

#[test]
fn layer_norm_whitens_each_column() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (rows, cols) = (50, 3);
    // correlated real and imaginary parts with different scales per column
    let values = (0..rows * cols)
        .map(|i| {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            let s = 1.0 + (i % cols) as f64;
            Complex64::new(s * a + 3.0, s * (0.6 * a + 0.3 * b) - 1.0)
        })
        .collect();
    let x = NodeSignal::new(rows, cols, values);
    let out = complex_layer_norm(&x, [1.0, 0.0, 0.0, 1.0], [0.0, 0.0]);
    for c in 0..cols {
        let col: Vec<Complex64> = (0..rows).map(|r| out.values[r * cols + c]).collect();
        let mean = col.iter().sum::<Complex64>() / rows as f64;
        assert!(mean.norm() < 1e-12);
        let m = |f: &dyn Fn(&Complex64) -> f64| col.iter().map(f).sum::<f64>() / rows as f64;
        // unit covariance up to the ε regularizer
        assert!((m(&|z| z.re * z.re) - 1.0).abs() < 1e-3);
        assert!((m(&|z| z.im * z.im) - 1.0).abs() < 1e-3);
        assert!(m(&|z| z.re * z.im).abs() < 1e-3);
    }

    let shifted = complex_layer_norm(&x, [2.0, 0.0, 0.0, 0.5], [1.0, -1.0]);
    for (a, b) in shifted.values.iter().zip(&out.values) {
        assert!((a - Complex64::new(2.0 * b.re + 1.0, 0.5 * b.im - 1.0)).norm() < 1e-12);
    }
}

fn toy_dataset(seed: u64) -> LabeledDataset {
    generate_synthetic(&SyntheticConfig {
        n: 60,
        classes: 3,
        h_min: 2,
        h_max: 6,
        intra: 6,
        inter: 4,
        seed,
    })
    .unwrap()
}

fn toy_train() -> TrainConfig {
    TrainConfig {
        lr: 0.01,
        weight_decay: 5e-4,
        epochs: 15,
        patience: 100,
        spectral_check_every: 0,
    }
}

#[test]
fn training_is_deterministic() {
    let data = toy_dataset(2);
    let cfg = ModelConfig { seed: 7, sheaf_dropout: 0.2, ..ModelConfig::default() };
    let a = train(&data, &cfg, &toy_train()).unwrap();
    let b = train(&data, &cfg, &toy_train()).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.state, b.state);
}

#[test]
fn light_mode_never_moves_the_map_predictor() {
    let data = toy_dataset(3);
    for light in [true, false] {
        let cfg = ModelConfig { light, dynamic_sheaf: true, ..ModelConfig::default() };
        let start = ModelState::init(&cfg, 1, 3).unwrap();
        let out = train(&data, &cfg, &toy_train()).unwrap();
        assert_eq!(out.state.phi == start.phi, light);
        assert_ne!(out.state.input, start.input);
    }
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let data = toy_dataset(4);
    let cfg = ModelConfig::default();
    let tc = TrainConfig { lr: 0.0, ..toy_train() };
    let out = train(&data, &cfg, &tc).unwrap();
    let start = ModelState::init(&cfg, 1, 3).unwrap();
    assert_eq!(out.state.tensors(), start.tensors());
}

#[test]
fn uniform_logits_give_log_class_count() {
    let data = toy_dataset(5);
    let cfg = ModelConfig::default();
    let mut state = ModelState::init(&cfg, 1, 3).unwrap();
    state.classifier[1].w.data.iter_mut().for_each(|x| *x = 0.0);
    let ctx = GraphContext::new(&data.hypergraph, &data.features, 1, &cfg).unwrap();
    let rows: Vec<usize> = (0..60).collect();
    let out = loss_and_gradients(&ctx, &state, &cfg, &data.labels, &rows, &ForwardOptions::default()).unwrap();
    assert!((out.loss - 3f64.ln()).abs() < 1e-12);
}

#[test]
fn zero_layers_is_an_mlp_on_the_features() {
    let data = toy_dataset(6);
    let cfg = ModelConfig { num_layers: 0, ..ModelConfig::default() };
    let state = ModelState::init(&cfg, 1, 3).unwrap();
    assert!(state.phi.is_empty() && state.layers.is_empty());
    let ctx = GraphContext::new(&data.hypergraph, &data.features, 1, &cfg).unwrap();
    let logits = forward(&ctx, &state, &cfg).unwrap();
    // vertices with equal degree are indistinguishable without diffusion
    let deg = &data.features;
    for u in 0..60 {
        for v in 0..60 {
            if deg[u] == deg[v] {
                assert_eq!(logits.data[u * 3..u * 3 + 3], logits.data[v * 3..v * 3 + 3]);
            }
        }
    }
    assert!(train(&data, &cfg, &toy_train()).is_ok());
}

#[test]
fn light_and_full_agree_before_the_first_update() {
    let c = case(1);
    for shape in [MapShape::Diagonal, MapShape::Full] {
        let light = small_config(true, shape, 1);
        let full = small_config(false, shape, 1);
        let ctx = GraphContext::new(&c.h, &c.features, 3, &light).unwrap();
        let state = ModelState::init(&light, 3, 3).unwrap();
        assert_eq!(state, ModelState::init(&full, 3, 3).unwrap());
        assert_eq!(forward(&ctx, &state, &light).unwrap(), forward(&ctx, &state, &full).unwrap());
    }
}

#[test]
fn tape_gradients_use_a_shared_signal() {
    // d(sum(x ⊙ x))/dx = 2x through a reused variable
    let mut tape = Tape::new();
    let x = tape.param(Tensor::new(1, 3, vec![1.0, -2.0, 0.5]));
    let y = tape.mul(x, x);
    let y = tape.mean_rows(y);
    let ones = tape.constant(Tensor::new(3, 1, vec![1.0; 3]));
    let s = tape.matmul(y, ones);
    let g = tape.backward(s);
    assert_eq!(g[0].as_ref().unwrap().data, vec![2.0, -4.0, 1.0]);
}
