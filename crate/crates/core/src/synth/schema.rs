//! JSON schemas for scene files.
//!
//! Pose scenes serialize as `{"w", "h", "people": [{"joints": [{"x", "y",
//! "visible"}], "tag"}]}`; instance scenes as `{"w", "h", "instances":
//! [{"mask_rle", "tag"}]}` with run-length-encoded masks (see
//! [`Mask::to_rle`]).

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::loss::{JointAnnotation, PersonAnnotation, PoseGroundTruth};
use crate::mask::Mask;
use crate::synth::{InstanceScene, PoseScene};

#[derive(Serialize, Deserialize)]
struct PoseSceneRepr {
    w: u64,
    h: u64,
    people: Vec<PersonRepr>,
}

#[derive(Serialize, Deserialize)]
struct PersonRepr {
    joints: Vec<JointAnnotation>,
    tag: f64,
}

impl Serialize for PoseScene {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = PoseSceneRepr {
            w: self.width as u64,
            h: self.height as u64,
            people: self
                .gt
                .persons
                .iter()
                .zip(&self.true_tags)
                .map(|(p, &tag)| PersonRepr {
                    joints: p.joints.clone(),
                    tag,
                })
                .collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PoseScene {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PoseSceneRepr::deserialize(deserializer)?;
        let mut persons = Vec::with_capacity(repr.people.len());
        let mut true_tags = Vec::with_capacity(repr.people.len());
        for p in repr.people {
            persons.push(PersonAnnotation { joints: p.joints });
            true_tags.push(p.tag);
        }
        Ok(PoseScene {
            width: repr.w as usize,
            height: repr.h as usize,
            gt: PoseGroundTruth { persons },
            true_tags,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceSceneRepr {
    w: u64,
    h: u64,
    instances: Vec<InstanceRepr>,
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    mask_rle: Vec<u64>,
    tag: f64,
}

impl Serialize for InstanceScene {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = InstanceSceneRepr {
            w: self.width as u64,
            h: self.height as u64,
            instances: self
                .masks
                .iter()
                .zip(&self.true_tags)
                .map(|(m, &tag)| InstanceRepr {
                    mask_rle: m.to_rle(),
                    tag,
                })
                .collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for InstanceScene {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = InstanceSceneRepr::deserialize(deserializer)?;
        let mut masks = Vec::with_capacity(repr.instances.len());
        let mut true_tags = Vec::with_capacity(repr.instances.len());
        for inst in repr.instances {
            let mask = Mask::from_rle(repr.w as usize, repr.h as usize, &inst.mask_rle)
                .map_err(|e| D::Error::custom(format!("bad mask_rle: {e}")))?;
            masks.push(mask);
            true_tags.push(inst.tag);
        }
        Ok(InstanceScene {
            width: repr.w as usize,
            height: repr.h as usize,
            masks,
            true_tags,
        })
    }
}
