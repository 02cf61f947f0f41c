//! Procedural kinematic-chain motion for desk-scale experiments.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Pose, SkeletonError, SkeletonSequence, SkeletonTopology};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub sequences: usize,
    pub frames: usize,
    pub topology_size: usize,
    pub seed: u64,
}

struct BoneMotion {
    length: f64,
    theta0: f64,
    phi0: f64,
    amp_theta: f64,
    amp_phi: f64,
    freq: f64,
    phase_theta: f64,
    phase_phi: f64,
}

impl BoneMotion {
    fn sample(rng: &mut ChaCha8Rng) -> Self {
        Self {
            length: rng.random_range(0.2..0.45),
            theta0: rng.random_range(0.3..PI - 0.3),
            phi0: rng.random_range(0.0..2.0 * PI),
            amp_theta: rng.random_range(0.2..0.6),
            amp_phi: rng.random_range(0.2..0.8),
            freq: rng.random_range(0.08..0.25),
            phase_theta: rng.random_range(0.0..2.0 * PI),
            phase_phi: rng.random_range(0.0..2.0 * PI),
        }
    }

    fn offset(&self, t: f64) -> [f64; 3] {
        let theta = self.theta0 + self.amp_theta * (self.freq * t + self.phase_theta).sin();
        let phi = self.phi0 + self.amp_phi * (self.freq * t + self.phase_phi).sin();
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        [self.length * st * cp, self.length * ct, self.length * st * sp]
    }
}

/// Deterministic dataset: a slowly drifting root with every other joint
/// orbiting its parent at a fixed bone length.
pub fn synth_generate(config: &SynthConfig) -> Result<Vec<SkeletonSequence>, SkeletonError> {
    let topology = SkeletonTopology::chains(config.topology_size)?;
    if config.frames == 0 {
        return Err(SkeletonError::Sequence("frames must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(config.sequences);
    for s in 0..config.sequences {
        let center = [
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.2..0.2),
            rng.random_range(2.5..3.5),
        ];
        let radius = [rng.random_range(0.1..0.4), rng.random_range(0.1..0.4)];
        let root_freq = rng.random_range(0.02..0.06);
        let root_phase = rng.random_range(0.0..2.0 * PI);
        let bones: Vec<BoneMotion> = (0..topology.bone_count()).map(|_| BoneMotion::sample(&mut rng)).collect();

        let frames = (0..config.frames)
            .map(|f| {
                let t = f as f64;
                let a = root_freq * t + root_phase;
                let mut joints = vec![[0.0; 3]; topology.joint_count()];
                joints[0] = [
                    center[0] + radius[0] * a.sin(),
                    center[1] + 0.05 * (2.0 * a).sin(),
                    center[2] + radius[1] * a.cos(),
                ];
                // chains() lists bones with parents before children.
                for (&(p, c), motion) in topology.bones().iter().zip(&bones) {
                    let o = motion.offset(t);
                    let base = joints[p];
                    joints[c] = [base[0] + o[0], base[1] + o[1], base[2] + o[2]];
                }
                Pose::new(joints)
            })
            .collect();
        out.push(SkeletonSequence::new(topology.clone(), frames, 1, format!("synth:{s}"))?);
    }
    Ok(out)
}
