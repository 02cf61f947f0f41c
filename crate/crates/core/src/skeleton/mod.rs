//! Skeleton data model, dataset ingestion and preprocessing.

mod json;
mod ntu;
mod preprocess;
mod synth;

pub use json::{parse_canonical_json, to_canonical_json, CanonicalSequence, CanonicalTopology};
pub use ntu::parse_ntu_skeleton;
pub use preprocess::{
    bone_lengths, denormalize, denormalize_poses, mean_bone_lengths, normalize, normalize_poses,
    window_samples, AxisBounds, NormalizationParams, TrainingSample,
};
pub use synth::{synth_generate, SynthConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SkeletonError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("invalid sequence: {0}")]
    Sequence(String),
    #[error("invalid normalization bounds: {0}")]
    Bounds(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Joint count plus a bone tree over joint indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TopologyRepr")]
pub struct SkeletonTopology {
    name: String,
    joint_count: usize,
    bones: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
struct TopologyRepr {
    name: String,
    joint_count: usize,
    bones: Vec<(usize, usize)>,
}

impl TryFrom<TopologyRepr> for SkeletonTopology {
    type Error = SkeletonError;

    fn try_from(r: TopologyRepr) -> Result<Self, Self::Error> {
        SkeletonTopology::new(r.name, r.joint_count, r.bones)
    }
}

impl SkeletonTopology {
    /// Validates that `bones` (parent, child) forms a spanning tree over `joint_count` joints.
    pub fn new(
        name: impl Into<String>,
        joint_count: usize,
        bones: Vec<(usize, usize)>,
    ) -> Result<Self, SkeletonError> {
        if bones.is_empty() {
            return Err(SkeletonError::Topology("bone list is empty".into()));
        }
        let mut parent: Vec<usize> = (0..joint_count).collect();
        fn root(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for &(p, c) in &bones {
            if p >= joint_count || c >= joint_count {
                return Err(SkeletonError::Topology(format!(
                    "bone ({p}, {c}) out of range for {joint_count} joints"
                )));
            }
            if p == c {
                return Err(SkeletonError::Topology(format!("bone ({p}, {c}) is a self-loop")));
            }
            let (rp, rc) = (root(&mut parent, p), root(&mut parent, c));
            if rp == rc {
                return Err(SkeletonError::Topology(format!("bone ({p}, {c}) closes a cycle")));
            }
            parent[rp] = rc;
        }
        if bones.len() + 1 != joint_count {
            return Err(SkeletonError::Topology(format!(
                "{} bones cannot connect {joint_count} joints",
                bones.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            joint_count,
            bones,
        })
    }

    /// The 25-joint Kinect v2 skeleton used by NTU RGB+D (0-based indices).
    pub fn ntu() -> Self {
        let bones = vec![
            (0, 1),
            (1, 20),
            (20, 2),
            (2, 3),
            (20, 4),
            (4, 5),
            (5, 6),
            (6, 7),
            (7, 21),
            (6, 22),
            (20, 8),
            (8, 9),
            (9, 10),
            (10, 11),
            (11, 23),
            (10, 24),
            (0, 12),
            (12, 13),
            (13, 14),
            (14, 15),
            (0, 16),
            (16, 17),
            (17, 18),
            (18, 19),
        ];
        Self::new("ntu", 25, bones).expect("static NTU topology is a tree")
    }

    /// Two kinematic chains hanging off joint 0: joint `j` attaches to `j - 2`
    /// (joint 1 attaches to 0).
    pub fn chains(joint_count: usize) -> Result<Self, SkeletonError> {
        if joint_count < 2 {
            return Err(SkeletonError::Topology(format!(
                "need at least 2 joints, got {joint_count}"
            )));
        }
        let bones = (1..joint_count).map(|j| (j.saturating_sub(2), j)).collect();
        Self::new(format!("chains{joint_count}"), joint_count, bones)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn joint_count(&self) -> usize {
        self.joint_count
    }

    pub fn bones(&self) -> &[(usize, usize)] {
        &self.bones
    }

    pub fn bone_count(&self) -> usize {
        self.bones.len()
    }
}

/// One frame: `J` joint positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub joints: Vec<[f64; 3]>,
}

impl Pose {
    pub fn new(joints: Vec<[f64; 3]>) -> Self {
        Self { joints }
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    /// Row-major (joint, axis) coordinates.
    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.joints.iter().flat_map(|j| j.iter().copied())
    }

    pub fn from_flat(values: &[f64]) -> Self {
        Self {
            joints: values.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.flat().all(f64::is_finite)
    }

    pub fn translated(&self, offset: [f64; 3]) -> Pose {
        Pose {
            joints: self
                .joints
                .iter()
                .map(|j| [j[0] + offset[0], j[1] + offset[1], j[2] + offset[2]])
                .collect(),
        }
    }
}

/// Time-ordered poses over one topology.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonSequence {
    topology: SkeletonTopology,
    frames: Vec<Pose>,
    /// Subsampling stride already applied to `frames`.
    pub frame_step: usize,
    pub source: String,
}

impl SkeletonSequence {
    pub fn new(
        topology: SkeletonTopology,
        frames: Vec<Pose>,
        frame_step: usize,
        source: impl Into<String>,
    ) -> Result<Self, SkeletonError> {
        if frames.is_empty() {
            return Err(SkeletonError::Sequence("sequence has no frames".into()));
        }
        if frame_step == 0 {
            return Err(SkeletonError::Sequence("frame_step must be >= 1".into()));
        }
        for (t, f) in frames.iter().enumerate() {
            if f.joint_count() != topology.joint_count() {
                return Err(SkeletonError::Sequence(format!(
                    "frame {t} has {} joints, topology has {}",
                    f.joint_count(),
                    topology.joint_count()
                )));
            }
            if !f.is_finite() {
                return Err(SkeletonError::Sequence(format!("frame {t} has non-finite coordinates")));
            }
        }
        Ok(Self {
            topology,
            frames,
            frame_step,
            source: source.into(),
        })
    }

    pub fn topology(&self) -> &SkeletonTopology {
        &self.topology
    }

    pub fn frames(&self) -> &[Pose] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Mean joint displacement between consecutive frames.
    pub fn mean_step_displacement(&self) -> Option<f64> {
        mean_step_displacement(&self.frames)
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Mean Euclidean displacement of a joint between two poses.
pub fn mean_joint_displacement(a: &Pose, b: &Pose) -> f64 {
    let n = a.joints.len().max(1) as f64;
    a.joints.iter().zip(&b.joints).map(|(&p, &q)| distance(p, q)).sum::<f64>() / n
}

pub fn mean_step_displacement(frames: &[Pose]) -> Option<f64> {
    if frames.len() < 2 {
        return None;
    }
    let total: f64 = frames.windows(2).map(|w| mean_joint_displacement(&w[0], &w[1])).sum();
    Some(total / (frames.len() - 1) as f64)
}
