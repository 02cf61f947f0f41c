//! NTU RGB+D `.skeleton` text files.
//!
//! Layout: frame count; then per frame a body count, and per body a
//! 10-field body-info line, a joint-count line and one 12-field line per
//! joint whose first three fields are x, y, z in meters.

use super::{Pose, SkeletonError, SkeletonSequence, SkeletonTopology};

const BODY_INFO_FIELDS: usize = 10;
const JOINT_FIELDS: usize = 12;

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)>> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty()),
        );
        Self {
            inner: it.peekable(),
            last: 0,
        }
    }

    fn next_fields(&mut self, expected: usize, what: &str) -> Result<(usize, Vec<&'a str>), SkeletonError> {
        let Some((line, text)) = self.inner.next() else {
            return Err(SkeletonError::Parse {
                line: self.last + 1,
                message: format!("unexpected end of file, expected {what}"),
            });
        };
        self.last = line;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != expected {
            return Err(SkeletonError::Parse {
                line,
                message: format!("{what}: expected {expected} fields, found {}", fields.len()),
            });
        }
        Ok((line, fields))
    }

    fn count(&mut self, what: &str) -> Result<usize, SkeletonError> {
        let (line, f) = self.next_fields(1, what)?;
        f[0].parse().map_err(|_| SkeletonError::Parse {
            line,
            message: format!("{what}: `{}` is not a non-negative integer", f[0]),
        })
    }
}

fn number(line: usize, field: &str) -> Result<f64, SkeletonError> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| SkeletonError::Parse {
            line,
            message: format!("`{field}` is not a number"),
        })
}

struct Track {
    id: u64,
    frames: Vec<Pose>,
    /// Set once the body is missing from a frame; later appearances are ignored.
    closed: bool,
}

/// Parses an NTU skeleton file into one sequence per tracked body, in order
/// of first appearance.
pub fn parse_ntu_skeleton(text: &str) -> Result<Vec<SkeletonSequence>, SkeletonError> {
    let topology = SkeletonTopology::ntu();
    let mut lines = Lines::new(text);
    let frame_count = lines.count("frame count")?;
    let mut tracks: Vec<Track> = Vec::new();

    for _ in 0..frame_count {
        let body_count = lines.count("body count")?;
        let mut seen = Vec::with_capacity(body_count);
        for _ in 0..body_count {
            let (line, info) = lines.next_fields(BODY_INFO_FIELDS, "body info")?;
            let id: u64 = info[0].parse().map_err(|_| SkeletonError::Parse {
                line,
                message: format!("body id `{}` is not an integer", info[0]),
            })?;
            for f in &info[1..] {
                number(line, f)?;
            }
            let joints = lines.count("joint count")?;
            if joints != topology.joint_count() {
                return Err(SkeletonError::Parse {
                    line: lines.last,
                    message: format!("joint count {joints}, expected {}", topology.joint_count()),
                });
            }
            let mut pose = Vec::with_capacity(joints);
            for _ in 0..joints {
                let (line, f) = lines.next_fields(JOINT_FIELDS, "joint")?;
                let mut values = [0.0; JOINT_FIELDS];
                for (v, s) in values.iter_mut().zip(&f) {
                    *v = number(line, s)?;
                }
                pose.push([values[0], values[1], values[2]]);
            }
            seen.push(id);
            match tracks.iter_mut().find(|t| t.id == id) {
                Some(t) if !t.closed => t.frames.push(Pose::new(pose)),
                Some(_) => {}
                None => tracks.push(Track {
                    id,
                    frames: vec![Pose::new(pose)],
                    closed: false,
                }),
            }
        }
        for t in tracks.iter_mut() {
            if !seen.contains(&t.id) {
                t.closed = true;
            }
        }
    }
    if let Some((line, _)) = lines.inner.next() {
        return Err(SkeletonError::Parse {
            line,
            message: "trailing content after the last frame".into(),
        });
    }

    tracks
        .into_iter()
        .map(|t| SkeletonSequence::new(topology.clone(), t.frames, 1, format!("ntu:body{}", t.id)))
        .collect()
}
