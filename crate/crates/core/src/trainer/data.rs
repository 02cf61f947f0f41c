use super::TrainError;
use crate::autodiff::Tensor;
use crate::skeleton::{
    mean_bone_lengths, mean_step_displacement, window_samples, AxisBounds, Pose, SkeletonSequence, SkeletonTopology,
    TrainingSample,
};

/// Stacks poses into a `[B, J*3]` row-per-sample tensor.
pub fn pose_rows<'a>(poses: impl IntoIterator<Item = &'a Pose>) -> Tensor {
    let mut data = Vec::new();
    let mut rows = 0;
    for p in poses {
        data.extend(p.flat());
        rows += 1;
    }
    let cols = data.len() / rows.max(1);
    Tensor::new(vec![rows, cols], data).expect("poses must share a joint count")
}

/// Splits a `[B, J*3]` tensor back into poses.
pub fn rows_to_poses(t: &Tensor) -> Vec<Pose> {
    t.data().chunks(t.last_dim()).map(Pose::from_flat).collect()
}

/// One minibatch: per-frame `[B, J*3]` tensors and reference bone lengths `[B, J-1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub prior: Vec<Tensor>,
    pub future: Vec<Tensor>,
    pub bones: Tensor,
}

impl Batch {
    pub fn size(&self) -> usize {
        self.bones.shape()[0]
    }
}

/// Normalized training windows over a single topology.
#[derive(Clone, Debug)]
pub struct Dataset {
    topology: SkeletonTopology,
    bounds: AxisBounds,
    samples: Vec<TrainingSample>,
    bones: Vec<Vec<f64>>,
}

impl Dataset {
    /// Windows every sequence, normalizes each window and records the mean
    /// bone lengths over all of its real frames.
    pub fn from_sequences(
        sequences: &[SkeletonSequence],
        bounds: AxisBounds,
        m: usize,
        n: usize,
        stride: usize,
        frame_step: usize,
    ) -> Result<Self, TrainError> {
        let first = sequences
            .first()
            .ok_or_else(|| TrainError::Data("no sequences given".into()))?;
        let topology = first.topology().clone();
        let mut samples = Vec::new();
        let mut bones = Vec::new();
        for seq in sequences {
            if seq.topology() != &topology {
                return Err(TrainError::Data(format!(
                    "sequence `{}` uses topology `{}`, expected `{}`",
                    seq.source,
                    seq.topology().name(),
                    topology.name()
                )));
            }
            for raw in window_samples(seq, m, n, stride, frame_step)? {
                let s = raw.normalized(bounds)?;
                bones.push(mean_bone_lengths(s.frames(), &topology)?);
                samples.push(s);
            }
        }
        if samples.is_empty() {
            return Err(TrainError::Data(format!(
                "no sequence is long enough for a {}-frame window",
                m + n
            )));
        }
        Ok(Self {
            topology,
            bounds,
            samples,
            bones,
        })
    }

    pub fn topology(&self) -> &SkeletonTopology {
        &self.topology
    }

    pub fn bounds(&self) -> AxisBounds {
        self.bounds
    }

    pub fn samples(&self) -> &[TrainingSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn batch(&self, indices: &[usize]) -> Batch {
        let m = self.samples[indices[0]].prior.len();
        let n = self.samples[indices[0]].future.len();
        let prior = (0..m)
            .map(|t| pose_rows(indices.iter().map(|&i| &self.samples[i].prior[t])))
            .collect();
        let future = (0..n)
            .map(|t| pose_rows(indices.iter().map(|&i| &self.samples[i].future[t])))
            .collect();
        let data = indices.iter().flat_map(|&i| self.bones[i].iter().copied()).collect();
        Batch {
            prior,
            future,
            bones: Tensor::new(vec![indices.len(), self.topology.bone_count()], data).expect("bone rows"),
        }
    }

    /// Mean joint displacement between consecutive frames, over every window.
    pub fn mean_step_displacement(&self) -> f64 {
        let (mut total, mut count) = (0.0, 0usize);
        for s in &self.samples {
            let frames: Vec<Pose> = s.frames().cloned().collect();
            if let Some(d) = mean_step_displacement(&frames) {
                total += d * (frames.len() - 1) as f64;
                count += frames.len() - 1;
            }
        }
        total / count.max(1) as f64
    }
}
