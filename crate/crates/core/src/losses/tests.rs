use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::models::testutil::fd_check_params;
use crate::models::{Generator, GeneratorConfig, ParamSet, PoseOutput, ScorerConfig, SequenceScorer, ZDistribution};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_tensor(r: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| r.random_range(-scale..scale)).collect()).unwrap()
}

fn row(values: &[f64]) -> Tensor {
    Tensor::matrix(1, values.len(), values.to_vec()).unwrap()
}

fn col(values: &[f64]) -> Tensor {
    Tensor::matrix(values.len(), 1, values.to_vec()).unwrap()
}

fn consts(g: &mut Graph, ts: &[Tensor]) -> Vec<Var> {
    ts.iter().map(|t| g.constant(t.clone())).collect()
}

/// One-frame prior, one-frame future, one coordinate each: input width 2.
fn linear_critic(w: [f64; 2], bias: f64) -> SequenceScorer {
    let cfg = ScorerConfig {
        prior_frames: 1,
        future_frames: 1,
        pose_dim: 1,
        hidden: vec![],
        leaky_slope: 0.2,
    };
    let mut p = ParamSet::new();
    p.insert("critic.l0.weight", col(&w));
    p.insert("critic.l0.bias", row(&[bias]));
    SequenceScorer::from_params("critic", cfg, p).unwrap()
}

fn desk_scorer(prefix: &str, r: &mut ChaCha8Rng) -> SequenceScorer {
    let cfg = ScorerConfig {
        prior_frames: 2,
        future_frames: 2,
        pose_dim: 9,
        hidden: vec![16, 8],
        leaky_slope: 0.2,
    };
    SequenceScorer::new(prefix, cfg, r).unwrap()
}

fn desk_generator(r: &mut ChaCha8Rng) -> Generator {
    Generator::new(
        GeneratorConfig {
            pose_dim: 9,
            hidden: 8,
            layers: 2,
            z_dim: 4,
            output: PoseOutput::Absolute,
        },
        r,
    )
    .unwrap()
}

fn penalty_of(critic: &SequenceScorer, real: &Tensor, fake: &Tensor, eps: &Tensor) -> f64 {
    let mut g = Graph::with_second_order();
    let cv = critic.bind(&mut g).unwrap();
    let v = gradient_penalty(&mut g, critic, &cv, real, fake, eps).unwrap();
    g.scalar_value(v).unwrap()
}

#[test]
fn wgan_term_examples() {
    let mut g = Graph::new();
    let f = g.constant(Tensor::scalar(2.0));
    let r = g.constant(Tensor::scalar(5.0));
    let v = wgan_critic_term(&mut g, f, r).unwrap();
    assert_eq!(g.scalar_value(v).unwrap(), -3.0);
    let same = wgan_critic_term(&mut g, f, f).unwrap();
    assert_eq!(g.scalar_value(same).unwrap(), 0.0);
    let fb = g.constant(col(&[1.0, 0.0]));
    let rb = g.constant(col(&[0.0, 1.0]));
    let v = wgan_critic_term(&mut g, fb, rb).unwrap();
    assert_eq!(g.scalar_value(v).unwrap(), 0.0);
}

#[test]
fn penalty_of_linear_and_zero_critics() {
    let mut r = rng(1);
    let real = random_tensor(&mut r, &[4, 2], 1.0);
    let fake = random_tensor(&mut r, &[4, 2], 1.0);
    for e in [0.0, 0.3, 1.0] {
        let eps = col(&[e; 4]);
        assert!(penalty_of(&linear_critic([0.6, 0.8], 0.1), &real, &fake, &eps).abs() < 1e-15);
        assert!((penalty_of(&linear_critic([1.8, 2.4], 0.0), &real, &fake, &eps) - 4.0).abs() < 1e-12);
        assert_eq!(penalty_of(&linear_critic([0.0, 0.0], 0.0), &real, &fake, &eps), 1.0);
    }
}

#[test]
fn penalty_rejects_bad_inputs() {
    let critic = linear_critic([1.0, 0.0], 0.0);
    let real = Tensor::zeros(&[2, 2]);
    let mut g = Graph::with_second_order();
    let cv = critic.bind(&mut g).unwrap();
    assert!(gradient_penalty(&mut g, &critic, &cv, &real, &real, &col(&[1.5, 0.0])).is_err());
    assert!(gradient_penalty(&mut g, &critic, &cv, &real, &Tensor::zeros(&[3, 2]), &col(&[0.0; 2])).is_err());
    let mut first = Graph::new();
    let cv = critic.bind(&mut first).unwrap();
    let err = gradient_penalty(&mut first, &critic, &cv, &real, &real, &col(&[0.5, 0.5])).unwrap_err();
    assert_eq!(err, LossError::Autodiff(AutodiffError::SecondOrderDisabled));
}

#[test]
fn l2_examples() {
    let mut g = Graph::new();
    let a = g.constant(Tensor::vector(vec![3.0]));
    let b = g.constant(Tensor::vector(vec![4.0]));
    let v = l2_regularizer(&mut g, [a, b]).unwrap();
    assert_eq!(g.scalar_value(v).unwrap(), 5.0);
    let z = g.constant(Tensor::zeros(&[2, 2]));
    let v = l2_regularizer(&mut g, [z]).unwrap();
    assert_eq!(g.scalar_value(v).unwrap(), 0.0);
    let mut r = rng(2);
    let t = random_tensor(&mut r, &[3, 3], 1.0);
    let base = g.constant(t.clone());
    let scaled = g.constant(t.map(|x| -2.5 * x));
    let n1 = l2_regularizer(&mut g, [base]).unwrap();
    let n2 = l2_regularizer(&mut g, [scaled]).unwrap();
    let (n1, n2) = (g.scalar_value(n1).unwrap(), g.scalar_value(n2).unwrap());
    assert!((n2 - 2.5 * n1).abs() < 1e-12);
}

fn critic_loss_value(critic: &SequenceScorer, weights: &LossWeights) -> (f64, f64) {
    let mut g = Graph::with_second_order();
    let cv = critic.bind(&mut g).unwrap();
    let prior = consts(&mut g, &[col(&[0.3, -0.2])]);
    let real = consts(&mut g, &[col(&[0.5, 0.1])]);
    let fake = consts(&mut g, &[col(&[-0.4, 0.9])]);
    let l = critic_total_loss(&mut g, critic, &cv, &prior, &real, &fake, &col(&[0.25, 0.75]), weights).unwrap();
    (g.scalar_value(l.total).unwrap(), g.scalar_value(l.wgan).unwrap())
}

#[test]
fn critic_total_examples() {
    let zero = linear_critic([0.0, 0.0], 0.0);
    let w = LossWeights {
        lambda_gp: 10.0,
        alpha_l2: 0.0,
        ..LossWeights::default()
    };
    assert_eq!(critic_loss_value(&zero, &w).0, 10.0);

    let critic = linear_critic([0.7, -1.3], 0.2);
    let off = LossWeights {
        lambda_gp: 0.0,
        alpha_l2: 0.0,
        ..LossWeights::default()
    };
    let (total, wgan) = critic_loss_value(&critic, &off);
    assert_eq!(total, wgan);
    // fake - real on the future coordinate only, weight -1.3: mean of -1.3 * (-0.9, 0.8).
    assert!((wgan - (-1.3 * (-0.9 + 0.8) / 2.0)).abs() < 1e-15);

    let c34 = linear_critic([3.0, 4.0], 0.0);
    let l2_only = LossWeights {
        lambda_gp: 0.0,
        alpha_l2: 0.001,
        ..LossWeights::default()
    };
    let (total, wgan) = critic_loss_value(&c34, &l2_only);
    assert!((total - wgan - 0.005).abs() < 1e-15);
}

#[test]
fn adversarial_examples() {
    let mut g = Graph::new();
    let critic = linear_critic([0.0, 0.0], 7.0);
    let cv = critic.bind(&mut g).unwrap();
    let p = consts(&mut g, &[col(&[1.0])]);
    let f = consts(&mut g, &[col(&[2.0])]);
    let v = adversarial_loss(&mut g, &critic, &cv, &p, &f).unwrap();
    assert_eq!(g.scalar_value(v).unwrap(), -7.0);

    let zero = SequenceScorer::zeros("critic", critic.config().clone()).unwrap();
    let zv = zero.bind_frozen(&mut g).unwrap();
    let v = adversarial_loss(&mut g, &zero, &zv, &p, &f).unwrap();
    assert_eq!(g.scalar_value(v).unwrap(), 0.0);

    let c = linear_critic([0.4, -2.0], 0.3);
    let cv = c.bind_frozen(&mut g).unwrap();
    let s = c.critic_score(&mut g, &cv, &p, &f).unwrap();
    let v = adversarial_loss(&mut g, &c, &cv, &p, &f).unwrap();
    assert_eq!(g.scalar_value(v).unwrap(), -g.value(s).item().unwrap());
}

fn pg(last: &[f64], predicted: &[&[f64]], p: f64, floor: f64) -> f64 {
    let mut g = Graph::new();
    let l = g.constant(row(last));
    let ys: Vec<Var> = predicted.iter().map(|y| g.constant(row(y))).collect();
    let v = pose_gradient_loss(&mut g, l, &ys, p, floor).unwrap();
    g.scalar_value(v).unwrap()
}

#[test]
fn pose_gradient_examples() {
    let last = [0.1, 0.2, 0.3];
    assert_eq!(pg(&last, &[&last, &last], 2.0, 0.05), 0.05);
    assert_eq!(pg(&[0.0; 3], &[&[3.0, 4.0, 0.0]], 2.0, 0.0), 5.0);
    let v = pg(&[0.0; 3], &[&[2.0, 0.0, 0.0], &[4.0, 0.0, 0.0]], 2.0, 0.0);
    assert!((v - 8f64.sqrt()).abs() < 1e-15);
    // p = 1 sums absolute differences.
    assert!((pg(&[0.0; 3], &[&[1.0, -2.0, 0.5]], 1.0, 0.0) - 3.5).abs() < 1e-15);
}

fn chain3() -> SkeletonTopology {
    SkeletonTopology::chains(3).unwrap()
}

fn bone(predicted: &[&[f64]], reference: &[f64]) -> f64 {
    let mut g = Graph::new();
    let ys: Vec<Var> = predicted.iter().map(|y| g.constant(row(y))).collect();
    let r = g.constant(row(reference));
    let v = bone_loss(&mut g, &ys, r, &chain3()).unwrap();
    g.scalar_value(v).unwrap()
}

#[test]
fn bone_examples() {
    // Joints 1 and 2 both hang off joint 0.
    let pose = [0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 5.0, 0.0];
    assert_eq!(bone(&[&pose], &[4.0, 5.0]), 0.0);
    assert_eq!(bone(&[&pose], &[1.0, 1.0]), 5.0);
    assert_eq!(bone(&[&pose, &pose], &[1.0, 1.0]), 10.0);
}

#[test]
fn bone_loss_rejects_mismatched_reference() {
    let mut g = Graph::new();
    let y = g.constant(row(&[0.0; 9]));
    let r = g.constant(row(&[1.0; 3]));
    assert!(bone_loss(&mut g, &[y], r, &chain3()).is_err());
    let wide = g.constant(row(&[0.0; 12]));
    let r = g.constant(row(&[1.0; 2]));
    assert!(bone_loss(&mut g, &[wide], r, &chain3()).is_err());
}

fn generator_loss_value(
    critic: &SequenceScorer,
    last: &[f64],
    future: &[&[f64]],
    reference: &[f64],
    weights: &LossWeights,
) -> GeneratorLossValues {
    let mut g = Graph::new();
    let cv = critic.bind(&mut g).unwrap();
    let p = vec![g.constant(row(last))];
    let f: Vec<Var> = future.iter().map(|y| g.constant(row(y))).collect();
    let r = g.constant(row(reference));
    let l = generator_total_loss(&mut g, critic, &cv, &p, &f, r, &chain3(), weights).unwrap();
    GeneratorLossValues {
        total: g.scalar_value(l.total).unwrap(),
        adversarial: g.scalar_value(l.adversarial).unwrap(),
    }
}

struct GeneratorLossValues {
    total: f64,
    adversarial: f64,
}

fn chain3_critic(r: &mut ChaCha8Rng, frames: usize) -> SequenceScorer {
    let cfg = ScorerConfig {
        prior_frames: 1,
        future_frames: frames,
        pose_dim: 9,
        hidden: vec![4],
        leaky_slope: 0.2,
    };
    SequenceScorer::new("critic", cfg, r).unwrap()
}

#[test]
fn generator_total_examples() {
    let mut r = rng(3);
    let critic = chain3_critic(&mut r, 2);
    let last = [0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 5.0, 0.0];
    let moved = [0.0, 0.0, 0.0, 4.0, 1.0, 0.0, 0.0, 5.0, 0.0];
    let off = LossWeights {
        alpha_pg: 0.0,
        beta_bone: 0.0,
        ..LossWeights::default()
    };
    let l = generator_loss_value(&critic, &last, &[&moved, &last], &[1.0, 1.0], &off);
    assert_eq!(l.total, l.adversarial);

    let zero = SequenceScorer::zeros("critic", critic.config().clone()).unwrap();
    let unit = LossWeights {
        alpha_pg: 1.0,
        beta_bone: 1.0,
        pg_floor: 0.05,
        ..LossWeights::default()
    };
    let l = generator_loss_value(&zero, &last, &[&last, &last], &[4.0, 5.0], &unit);
    assert!((l.total - 0.05).abs() < 1e-15);

    let w1 = LossWeights {
        alpha_pg: 0.3,
        ..LossWeights::default()
    };
    let w2 = LossWeights {
        alpha_pg: 0.6,
        ..LossWeights::default()
    };
    let a = generator_loss_value(&critic, &last, &[&moved, &last], &[1.0, 1.0], &w1);
    let b = generator_loss_value(&critic, &last, &[&moved, &last], &[1.0, 1.0], &w2);
    // pose gradient raw = sqrt(1 + 1) for a move away and back.
    let pg = 2f64.sqrt();
    assert!((a.total - a.adversarial - 0.3 * pg - 0.01 * bone(&[&moved, &last], &[1.0, 1.0])).abs() < 1e-12);
    assert!(((b.total - a.total) - 0.3 * pg).abs() < 1e-12);
}

fn disc_value(pr: f64, pf: f64, l2: f64, alpha: f64) -> f64 {
    let mut g = Graph::new();
    let a = g.constant(col(&[pr]));
    let b = g.constant(col(&[pf]));
    let n = g.constant(Tensor::scalar(l2));
    let v = gan_discriminator_loss(&mut g, a, b, n, alpha).unwrap();
    g.scalar_value(v).unwrap()
}

#[test]
fn discriminator_examples() {
    assert!((disc_value(0.5, 0.5, 0.0, 0.0) - 2.0 * 2f64.ln()).abs() < 1e-15);
    let near = disc_value(1.0 - 1e-9, 1e-9, 0.0, 0.0);
    assert!(near > 0.0 && near < 1e-6);
    assert!(disc_value(0.9, 0.1, 0.0, 0.0) < disc_value(0.5, 0.5, 0.0, 0.0));
    // Clamping keeps saturated inputs finite.
    assert!(disc_value(0.0, 1.0, 0.0, 0.0).is_finite());
    assert!((disc_value(0.5, 0.5, 5.0, 0.001) - 2.0 * 2f64.ln() - 0.005).abs() < 1e-15);
}

#[test]
fn mse_examples() {
    let mut g = Graph::new();
    let mut r = rng(4);
    let a: Vec<Tensor> = (0..3).map(|_| random_tensor(&mut r, &[2, 9], 1.0)).collect();
    let b: Vec<Tensor> = a.iter().map(|t| t.map(|v| v + 2.0)).collect();
    let c: Vec<Tensor> = (0..3).map(|_| random_tensor(&mut r, &[2, 9], 1.0)).collect();
    let (av, bv, cv) = (consts(&mut g, &a), consts(&mut g, &b), consts(&mut g, &c));
    let same = reconstruction_mse(&mut g, &av, &av).unwrap();
    assert_eq!(g.scalar_value(same).unwrap(), 0.0);
    let off = reconstruction_mse(&mut g, &av, &bv).unwrap();
    assert!((g.scalar_value(off).unwrap() - 4.0).abs() < 1e-12);
    let x = reconstruction_mse(&mut g, &av, &cv).unwrap();
    let y = reconstruction_mse(&mut g, &cv, &av).unwrap();
    assert_eq!(g.scalar_value(x).unwrap(), g.scalar_value(y).unwrap());
    assert!(reconstruction_mse(&mut g, &av[..2], &cv).is_err());
}

#[test]
fn weights_validation() {
    assert!(LossWeights::default().validate().is_ok());
    assert!(LossWeights {
        lambda_gp: -1.0,
        ..LossWeights::default()
    }
    .validate()
    .is_err());
    assert!(LossWeights {
        pg_norm: 0.5,
        ..LossWeights::default()
    }
    .validate()
    .is_err());
}

struct DeskBatch {
    prior: Vec<Tensor>,
    real: Vec<Tensor>,
    z: Tensor,
    eps: Tensor,
    bones: Tensor,
}

fn desk_batch(r: &mut ChaCha8Rng) -> DeskBatch {
    DeskBatch {
        prior: (0..2).map(|_| random_tensor(r, &[3, 9], 1.0)).collect(),
        real: (0..2).map(|_| random_tensor(r, &[3, 9], 1.0)).collect(),
        z: ZDistribution::Uniform.sample_batch(r, 3, 4),
        eps: Tensor::new(vec![3, 1], (0..3).map(|_| r.random_range(0.0..1.0)).collect()).unwrap(),
        bones: Tensor::new(vec![3, 2], (0..6).map(|_| r.random_range(0.5..1.5)).collect()).unwrap(),
    }
}

#[test]
fn critic_loss_gradient_matches_finite_differences() {
    let mut r = rng(5);
    let critic = desk_scorer("critic", &mut r);
    let gen = desk_generator(&mut r);
    let batch = desk_batch(&mut r);
    let fake = gen.predict(&batch.prior, &batch.z, 2).unwrap();
    let err = fd_check_params(
        critic.params(),
        |g, b| {
            let cv = critic.vars(b)?;
            let p = consts(g, &batch.prior);
            let real = consts(g, &batch.real);
            let f = consts(g, &fake);
            let l = critic_total_loss(g, &critic, &cv, &p, &real, &f, &batch.eps, &LossWeights::default())
                .map_err(|e| match e {
                    LossError::Model(m) => m,
                    LossError::Autodiff(a) => a.into(),
                    other => panic!("{other}"),
                })?;
            Ok(l.total)
        },
        1e-6,
    )
    .unwrap();
    assert!(err < 1e-5, "{err}");
}

#[test]
fn generator_loss_gradient_matches_finite_differences() {
    let mut r = rng(6);
    let critic = desk_scorer("critic", &mut r);
    let gen = desk_generator(&mut r);
    let batch = desk_batch(&mut r);
    let topo = chain3();
    let weights = LossWeights {
        alpha_pg: 0.5,
        beta_bone: 0.5,
        ..LossWeights::default()
    };
    let err = fd_check_params(
        gen.params(),
        |g, b| {
            let v = gen.vars(b)?;
            let cv = critic.bind_frozen(g)?;
            let p = consts(g, &batch.prior);
            let z = g.constant(batch.z.clone());
            let fake = gen.generate(g, &v, &p, z, 2)?;
            let bones = g.constant(batch.bones.clone());
            let l = generator_total_loss(g, &critic, &cv, &p, &fake, bones, &topo, &weights).map_err(|e| match e {
                LossError::Model(m) => m,
                LossError::Autodiff(a) => a.into(),
                other => panic!("{other}"),
            })?;
            Ok(l.total)
        },
        1e-6,
    )
    .unwrap();
    assert!(err < 1e-5, "{err}");
}

/// Binds generator, critic and discriminator in one graph and returns the
/// gradient map of the chosen loss.
fn joint_gradients(which: u8) -> crate::autodiff::GradientMap {
    let mut r = rng(7);
    let critic = desk_scorer("critic", &mut r);
    let disc = desk_scorer("disc", &mut r);
    let gen = desk_generator(&mut r);
    let batch = desk_batch(&mut r);
    let mut g = Graph::with_second_order();
    let gv = gen.bind(&mut g).unwrap();
    let cv = critic.bind(&mut g).unwrap();
    let dv = disc.bind(&mut g).unwrap();
    let p = consts(&mut g, &batch.prior);
    let real = consts(&mut g, &batch.real);
    let z = g.constant(batch.z.clone());
    let fake = gen.generate(&mut g, &gv, &p, z, 2).unwrap();
    let w = LossWeights::default();
    let root = match which {
        0 => critic_total_loss(&mut g, &critic, &cv, &p, &real, &fake, &batch.eps, &w).unwrap().total,
        1 => {
            let bones = g.constant(batch.bones.clone());
            generator_total_loss(&mut g, &critic, &cv, &p, &fake, bones, &chain3(), &w)
                .unwrap()
                .total
        }
        _ => discriminator_total_loss(&mut g, &disc, &dv, &p, &real, &fake, w.alpha_l2).unwrap(),
    };
    g.backward(root).unwrap()
}

fn all_zero(grads: &crate::autodiff::GradientMap, prefix: &str) -> bool {
    grads
        .iter()
        .filter(|(k, _)| k.starts_with(prefix))
        .all(|(_, t)| t.data().iter().all(|&v| v == 0.0))
}

#[test]
fn losses_stop_gradients_where_required() {
    let critic = joint_gradients(0);
    assert!(all_zero(&critic, "gen."));
    assert!(!all_zero(&critic, "critic."));
    let gen = joint_gradients(1);
    assert!(all_zero(&gen, "critic."));
    assert!(!all_zero(&gen, "gen."));
    let disc = joint_gradients(2);
    assert!(all_zero(&disc, "gen."));
    assert!(!all_zero(&disc, "disc."));
}

fn rotate_z(pose: &[f64], angle: f64, shift: [f64; 3]) -> Vec<f64> {
    let (s, c) = angle.sin_cos();
    pose.chunks(3)
        .flat_map(|p| [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1], p[2] + shift[2]])
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pose_gradient_never_below_floor(
        last in prop::collection::vec(-1.0f64..1.0, 9),
        ys in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 9), 1..4),
        floor in 0.0f64..2.0,
        p in 1.0f64..3.0,
    ) {
        let refs: Vec<&[f64]> = ys.iter().map(|y| y.as_slice()).collect();
        let v = pg(&last, &refs, p, floor);
        let raw = pg(&last, &refs, p, 0.0);
        prop_assert!(v >= floor);
        prop_assert!(raw >= 0.0);
        prop_assert_eq!(v == floor, raw <= floor);
    }

    #[test]
    fn bone_loss_is_rigid_invariant(
        pose in prop::collection::vec(-1.0f64..1.0, 9),
        reference in prop::collection::vec(0.1f64..2.0, 2),
        angle in -3.0f64..3.0,
        shift in prop::array::uniform3(-5.0f64..5.0),
    ) {
        let moved = rotate_z(&pose, angle, shift);
        let a = bone(&[&pose], &reference);
        let b = bone(&[&moved], &reference);
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn bounded_losses_are_non_negative(
        a in prop::collection::vec(-2.0f64..2.0, 9),
        b in prop::collection::vec(-2.0f64..2.0, 9),
        pr in 0.0f64..1.0,
        pf in 0.0f64..1.0,
        eps in 0.0f64..1.0,
        w in prop::array::uniform2(-3.0f64..3.0),
    ) {
        let mut g = Graph::new();
        let (av, bv) = (g.constant(row(&a)), g.constant(row(&b)));
        let m = reconstruction_mse(&mut g, &[av], &[bv]).unwrap();
        prop_assert!(g.scalar_value(m).unwrap() >= 0.0);
        prop_assert!(disc_value(pr, pf, 0.0, 0.0) >= 0.0);
        let pen = penalty_of(&linear_critic(w, 0.0), &col(&[a[0], a[1]]).reshape(vec![1, 2]).unwrap(),
            &col(&[b[0], b[1]]).reshape(vec![1, 2]).unwrap(), &col(&[eps]));
        prop_assert!(pen >= 0.0);
    }
}
