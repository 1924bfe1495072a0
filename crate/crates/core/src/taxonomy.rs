//! The three label spaces shared by every other module: the 20 parsing
//! classes, the 16 MPII body joints and the 9 pseudo-joints derived from
//! merged parsing regions.
//!
//! Left/right always refers to the subject's own side (person-centric), so a
//! horizontal mirror of an image must also swap the paired identifiers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

pub const NUM_CLASSES: usize = 20;
pub const NUM_JOINTS: usize = 16;
pub const NUM_PSEUDO_JOINTS: usize = 9;

const PART_NAMES: [&str; NUM_CLASSES] = [
    "background",
    "hat",
    "hair",
    "gloves",
    "sunglasses",
    "upper-clothes",
    "dress",
    "coat",
    "socks",
    "pants",
    "jumpsuit",
    "scarf",
    "skirt",
    "face",
    "left-arm",
    "right-arm",
    "left-leg",
    "right-leg",
    "left-shoe",
    "right-shoe",
];

/// One of the 20 parsing classes. Index 0 is background.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PartLabel(u8);

impl PartLabel {
    pub const BACKGROUND: Self = Self(0);
    pub const HAT: Self = Self(1);
    pub const HAIR: Self = Self(2);
    pub const GLOVES: Self = Self(3);
    pub const SUNGLASSES: Self = Self(4);
    pub const UPPER_CLOTHES: Self = Self(5);
    pub const DRESS: Self = Self(6);
    pub const COAT: Self = Self(7);
    pub const SOCKS: Self = Self(8);
    pub const PANTS: Self = Self(9);
    pub const JUMPSUIT: Self = Self(10);
    pub const SCARF: Self = Self(11);
    pub const SKIRT: Self = Self(12);
    pub const FACE: Self = Self(13);
    pub const LEFT_ARM: Self = Self(14);
    pub const RIGHT_ARM: Self = Self(15);
    pub const LEFT_LEG: Self = Self(16);
    pub const RIGHT_LEG: Self = Self(17);
    pub const LEFT_SHOE: Self = Self(18);
    pub const RIGHT_SHOE: Self = Self(19);

    pub fn new(index: u8) -> Result<Self, CoreError> {
        if (index as usize) < NUM_CLASSES {
            Ok(Self(index))
        } else {
            Err(CoreError::LabelOutOfRange(index))
        }
    }

    pub fn all() -> impl Iterator<Item = Self> {
        (0..NUM_CLASSES as u8).map(Self)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        PART_NAMES[self.index()]
    }

    pub fn from_name(name: &str) -> Option<Self> {
        PART_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| Self(i as u8))
    }

    /// Partner under a horizontal mirror; self for unpaired classes.
    #[inline]
    pub fn swapped(self) -> Self {
        Self(PART_SWAP[self.index()])
    }
}

impl TryFrom<u8> for PartLabel {
    type Error = CoreError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<PartLabel> for u8 {
    fn from(l: PartLabel) -> u8 {
        l.0
    }
}

impl fmt::Display for PartLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Mirror partner of every class index.
pub const PART_SWAP: [u8; NUM_CLASSES] = [
    0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 15, 14, 17, 16, 19, 18,
];

const JOINT_NAMES: [&str; NUM_JOINTS] = [
    "r-ankle",
    "r-knee",
    "r-hip",
    "l-hip",
    "l-knee",
    "l-ankle",
    "pelvis",
    "thorax",
    "upper-neck",
    "head-top",
    "r-wrist",
    "r-elbow",
    "r-shoulder",
    "l-shoulder",
    "l-elbow",
    "l-wrist",
];

/// Mirror partner of every joint index.
pub const JOINT_SWAP: [u8; NUM_JOINTS] = [5, 4, 3, 2, 1, 0, 6, 7, 8, 9, 15, 14, 13, 12, 11, 10];

/// One of the 16 body joints, MPII order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct JointId(u8);

impl JointId {
    pub const R_ANKLE: Self = Self(0);
    pub const R_KNEE: Self = Self(1);
    pub const R_HIP: Self = Self(2);
    pub const L_HIP: Self = Self(3);
    pub const L_KNEE: Self = Self(4);
    pub const L_ANKLE: Self = Self(5);
    pub const PELVIS: Self = Self(6);
    pub const THORAX: Self = Self(7);
    pub const UPPER_NECK: Self = Self(8);
    pub const HEAD_TOP: Self = Self(9);
    pub const R_WRIST: Self = Self(10);
    pub const R_ELBOW: Self = Self(11);
    pub const R_SHOULDER: Self = Self(12);
    pub const L_SHOULDER: Self = Self(13);
    pub const L_ELBOW: Self = Self(14);
    pub const L_WRIST: Self = Self(15);

    pub fn new(index: u8) -> Result<Self, CoreError> {
        if (index as usize) < NUM_JOINTS {
            Ok(Self(index))
        } else {
            Err(CoreError::JointOutOfRange(index))
        }
    }

    pub fn all() -> impl Iterator<Item = Self> {
        (0..NUM_JOINTS as u8).map(Self)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        JOINT_NAMES[self.index()]
    }

    pub fn from_name(name: &str) -> Option<Self> {
        JOINT_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| Self(i as u8))
    }

    #[inline]
    pub fn swapped(self) -> Self {
        Self(JOINT_SWAP[self.index()])
    }
}

impl TryFrom<u8> for JointId {
    type Error = CoreError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<JointId> for u8 {
    fn from(j: JointId) -> u8 {
        j.0
    }
}

impl fmt::Display for JointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const PSEUDO_NAMES: [&str; NUM_PSEUDO_JOINTS] = [
    "head",
    "upper-body",
    "lower-body",
    "left-arm",
    "right-arm",
    "left-leg",
    "right-leg",
    "left-shoe",
    "right-shoe",
];

/// Mirror partner of every pseudo-joint index.
pub const PSEUDO_SWAP: [u8; NUM_PSEUDO_JOINTS] = [0, 1, 2, 4, 3, 6, 5, 8, 7];

/// Centre of a merged parsing region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PseudoJointId(u8);

impl PseudoJointId {
    pub const HEAD: Self = Self(0);
    pub const UPPER_BODY: Self = Self(1);
    pub const LOWER_BODY: Self = Self(2);
    pub const LEFT_ARM: Self = Self(3);
    pub const RIGHT_ARM: Self = Self(4);
    pub const LEFT_LEG: Self = Self(5);
    pub const RIGHT_LEG: Self = Self(6);
    pub const LEFT_SHOE: Self = Self(7);
    pub const RIGHT_SHOE: Self = Self(8);

    pub fn all() -> impl Iterator<Item = Self> {
        (0..NUM_PSEUDO_JOINTS as u8).map(Self)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        PSEUDO_NAMES[self.index()]
    }

    #[inline]
    pub fn swapped(self) -> Self {
        Self(PSEUDO_SWAP[self.index()])
    }
}

impl fmt::Display for PseudoJointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Tab-separated dump of all three taxonomies: `kind index name swap-partner`.
pub fn taxonomy_table() -> String {
    let mut out = String::from("kind\tindex\tname\tswap\n");
    for l in PartLabel::all() {
        out.push_str(&format!("part\t{}\t{}\t{}\n", l.index(), l.name(), l.swapped().name()));
    }
    for j in JointId::all() {
        out.push_str(&format!("joint\t{}\t{}\t{}\n", j.index(), j.name(), j.swapped().name()));
    }
    for p in PseudoJointId::all() {
        out.push_str(&format!("pseudo\t{}\t{}\t{}\n", p.index(), p.name(), p.swapped().name()));
    }
    out
}
