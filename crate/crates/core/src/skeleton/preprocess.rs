use serde::{Deserialize, Serialize};

use super::{distance, Pose, SkeletonError, SkeletonSequence, SkeletonTopology};

/// Per-axis raw-space bounds mapped affinely onto [-1, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl AxisBounds {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self, SkeletonError> {
        for a in 0..3 {
            if !(max[a] > min[a]) || !min[a].is_finite() || !max[a].is_finite() {
                return Err(SkeletonError::Bounds(format!(
                    "axis {a}: max {} must exceed min {}",
                    max[a], min[a]
                )));
            }
        }
        Ok(Self { min, max })
    }

    /// Kinect v2 frustum at 5 m depth (70° x 60° field of view).
    pub fn ntu() -> Self {
        Self {
            min: [-3.50, -2.89, 0.0],
            max: [3.50, 2.89, 5.0],
        }
    }

    /// Global min of all coordinates and global max of all coordinates,
    /// shared by the three axes.
    pub fn fit_global<'a>(seqs: impl IntoIterator<Item = &'a SkeletonSequence>) -> Result<Self, SkeletonError> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in seqs {
            for v in s.frames().iter().flat_map(Pose::flat) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Self::new([lo; 3], [hi; 3])
    }

    pub fn to_unit(&self, p: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|a| 2.0 * (p[a] - self.min[a]) / (self.max[a] - self.min[a]) - 1.0)
    }

    pub fn from_unit(&self, u: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|a| (u[a] + 1.0) * 0.5 * (self.max[a] - self.min[a]) + self.min[a])
    }
}

/// Bounds plus the center of gravity subtracted after the affine map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub bounds: AxisBounds,
    pub center_of_gravity: [f64; 3],
}

impl NormalizationParams {
    /// Center of gravity = mean of all joints over `prior` after the affine map.
    pub fn from_prior(bounds: AxisBounds, prior: &[Pose]) -> Self {
        let mut sum = [0.0; 3];
        let mut n = 0usize;
        for j in prior.iter().flat_map(|p| p.joints.iter()) {
            let u = bounds.to_unit(*j);
            for a in 0..3 {
                sum[a] += u[a];
            }
            n += 1;
        }
        let n = n.max(1) as f64;
        Self {
            bounds,
            center_of_gravity: sum.map(|s| s / n),
        }
    }
}

pub fn normalize_poses(frames: &[Pose], params: &NormalizationParams) -> Vec<Pose> {
    let cog = params.center_of_gravity;
    frames
        .iter()
        .map(|f| Pose {
            joints: f
                .joints
                .iter()
                .map(|&j| {
                    let u = params.bounds.to_unit(j);
                    [u[0] - cog[0], u[1] - cog[1], u[2] - cog[2]]
                })
                .collect(),
        })
        .collect()
}

pub fn denormalize_poses(frames: &[Pose], params: &NormalizationParams) -> Vec<Pose> {
    frames
        .iter()
        .map(|f| Pose {
            joints: f
                .translated(params.center_of_gravity)
                .joints
                .into_iter()
                .map(|u| params.bounds.from_unit(u))
                .collect(),
        })
        .collect()
}

pub fn normalize(seq: &SkeletonSequence, params: &NormalizationParams) -> Result<SkeletonSequence, SkeletonError> {
    AxisBounds::new(params.bounds.min, params.bounds.max)?;
    SkeletonSequence::new(
        seq.topology().clone(),
        normalize_poses(seq.frames(), params),
        seq.frame_step,
        seq.source.clone(),
    )
}

pub fn denormalize(seq: &SkeletonSequence, params: &NormalizationParams) -> Result<SkeletonSequence, SkeletonError> {
    AxisBounds::new(params.bounds.min, params.bounds.max)?;
    SkeletonSequence::new(
        seq.topology().clone(),
        denormalize_poses(seq.frames(), params),
        seq.frame_step,
        seq.source.clone(),
    )
}

/// `m` observed poses followed by `n` future poses from one clip.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    pub prior: Vec<Pose>,
    pub future: Vec<Pose>,
    /// `None` while the sample is still in raw coordinates.
    pub normalization: Option<NormalizationParams>,
}

impl TrainingSample {
    /// Maps the sample into normalized space, with its center of gravity
    /// taken from the prior frames only.
    pub fn normalized(&self, bounds: AxisBounds) -> Result<TrainingSample, SkeletonError> {
        if self.normalization.is_some() {
            return Err(SkeletonError::Sequence("sample is already normalized".into()));
        }
        let params = NormalizationParams::from_prior(bounds, &self.prior);
        Ok(TrainingSample {
            prior: normalize_poses(&self.prior, &params),
            future: normalize_poses(&self.future, &params),
            normalization: Some(params),
        })
    }

    pub fn frames(&self) -> impl Iterator<Item = &Pose> {
        self.prior.iter().chain(&self.future)
    }
}

/// Subsamples by `frame_step`, then slides an `m + n` window with `stride`.
pub fn window_samples(
    seq: &SkeletonSequence,
    m: usize,
    n: usize,
    stride: usize,
    frame_step: usize,
) -> Result<Vec<TrainingSample>, SkeletonError> {
    if m == 0 || n == 0 || stride == 0 || frame_step == 0 {
        return Err(SkeletonError::Sequence(format!(
            "window parameters must be >= 1 (m={m}, n={n}, stride={stride}, frame_step={frame_step})"
        )));
    }
    let frames: Vec<&Pose> = seq.frames().iter().step_by(frame_step).collect();
    let span = m + n;
    if frames.len() < span {
        return Ok(Vec::new());
    }
    Ok((0..=frames.len() - span)
        .step_by(stride)
        .map(|start| TrainingSample {
            prior: frames[start..start + m].iter().map(|&p| p.clone()).collect(),
            future: frames[start + m..start + span].iter().map(|&p| p.clone()).collect(),
            normalization: None,
        })
        .collect())
}

pub fn bone_lengths(pose: &Pose, topology: &SkeletonTopology) -> Result<Vec<f64>, SkeletonError> {
    if pose.joint_count() != topology.joint_count() {
        return Err(SkeletonError::Sequence(format!(
            "pose has {} joints, topology has {}",
            pose.joint_count(),
            topology.joint_count()
        )));
    }
    Ok(topology
        .bones()
        .iter()
        .map(|&(p, c)| distance(pose.joints[p], pose.joints[c]))
        .collect())
}

/// Per-bone mean length over `frames`.
pub fn mean_bone_lengths<'a>(
    frames: impl IntoIterator<Item = &'a Pose>,
    topology: &SkeletonTopology,
) -> Result<Vec<f64>, SkeletonError> {
    let mut sum = vec![0.0; topology.bone_count()];
    let mut count = 0usize;
    for f in frames {
        for (s, l) in sum.iter_mut().zip(bone_lengths(f, topology)?) {
            *s += l;
        }
        count += 1;
    }
    if count == 0 {
        return Err(SkeletonError::Sequence("no frames".into()));
    }
    Ok(sum.into_iter().map(|s| s / count as f64).collect())
}
