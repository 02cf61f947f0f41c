//! Canonical JSON interchange:
//! `{"topology": {"joints": J, "bones": [[p,c],...], "name": s}, "frame_step": k, "frames": [[[x,y,z]×J]×T]}`.

use serde::{Deserialize, Serialize};

use super::{Pose, SkeletonError, SkeletonSequence, SkeletonTopology};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalTopology {
    pub joints: usize,
    pub bones: Vec<[usize; 2]>,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalSequence {
    pub topology: CanonicalTopology,
    pub frame_step: usize,
    pub frames: Vec<Vec<[f64; 3]>>,
}

impl From<&SkeletonTopology> for CanonicalTopology {
    fn from(t: &SkeletonTopology) -> Self {
        Self {
            joints: t.joint_count(),
            bones: t.bones().iter().map(|&(p, c)| [p, c]).collect(),
            name: t.name().to_string(),
        }
    }
}

impl TryFrom<CanonicalTopology> for SkeletonTopology {
    type Error = SkeletonError;

    fn try_from(t: CanonicalTopology) -> Result<Self, Self::Error> {
        SkeletonTopology::new(t.name, t.joints, t.bones.into_iter().map(|[p, c]| (p, c)).collect())
    }
}

impl From<&SkeletonSequence> for CanonicalSequence {
    fn from(s: &SkeletonSequence) -> Self {
        Self {
            topology: s.topology().into(),
            frame_step: s.frame_step,
            frames: s.frames().iter().map(|f| f.joints.clone()).collect(),
        }
    }
}

impl CanonicalSequence {
    pub fn into_sequence(self, source: impl Into<String>) -> Result<SkeletonSequence, SkeletonError> {
        let topology = SkeletonTopology::try_from(self.topology)?;
        let j = topology.joint_count();
        if let Some((t, f)) = self.frames.iter().enumerate().find(|(_, f)| f.len() != j) {
            return Err(SkeletonError::Sequence(format!(
                "ragged frame {t}: {} joints, topology has {j}",
                f.len()
            )));
        }
        let frames = self.frames.into_iter().map(Pose::new).collect();
        SkeletonSequence::new(topology, frames, self.frame_step, source)
    }
}

pub fn parse_canonical_json(text: &str) -> Result<SkeletonSequence, SkeletonError> {
    let doc: CanonicalSequence = serde_json::from_str(text)?;
    doc.into_sequence("json")
}

pub fn to_canonical_json(seq: &SkeletonSequence) -> String {
    serde_json::to_string(&CanonicalSequence::from(seq)).expect("canonical sequence serializes")
}
