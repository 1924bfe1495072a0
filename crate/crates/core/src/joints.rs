use serde::{Deserialize, Serialize};

use crate::taxonomy::{JointId, JOINT_SWAP, NUM_JOINTS};

/// Annotation state of one joint. The numeric codes are the on-disk values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(into = "u8", try_from = "u8")]
pub enum Visibility {
    #[default]
    Absent = 0,
    Occluded = 1,
    Visible = 2,
}

impl Visibility {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Self::Absent),
            1 => Some(Self::Occluded),
            2 => Some(Self::Visible),
            _ => None,
        }
    }
}

impl From<Visibility> for u8 {
    fn from(v: Visibility) -> u8 {
        v.code()
    }
}

impl TryFrom<u8> for Visibility {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        Self::from_code(v).ok_or_else(|| format!("invalid visibility code {v}"))
    }
}

/// Coordinates stored for absent joints.
pub const ABSENT_COORD: f64 = -1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub x: f64,
    pub y: f64,
    pub vis: Visibility,
}

impl Joint {
    pub const ABSENT: Joint = Joint {
        x: ABSENT_COORD,
        y: ABSENT_COORD,
        vis: Visibility::Absent,
    };

    pub fn visible(x: f64, y: f64) -> Self {
        Self {
            x,
            y,
            vis: Visibility::Visible,
        }
    }

    pub fn occluded(x: f64, y: f64) -> Self {
        Self {
            x,
            y,
            vis: Visibility::Occluded,
        }
    }

    #[inline]
    pub fn is_present(&self) -> bool {
        self.vis != Visibility::Absent
    }

    pub fn distance(&self, other: &Joint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// The 16 joints of one person, indexed by [`JointId`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointSet(pub [Joint; NUM_JOINTS]);

impl Default for JointSet {
    fn default() -> Self {
        Self::absent()
    }
}

impl JointSet {
    pub fn absent() -> Self {
        Self([Joint::ABSENT; NUM_JOINTS])
    }

    #[inline]
    pub fn get(&self, id: JointId) -> &Joint {
        &self.0[id.index()]
    }

    #[inline]
    pub fn get_mut(&mut self, id: JointId) -> &mut Joint {
        &mut self.0[id.index()]
    }

    pub fn set(&mut self, id: JointId, j: Joint) {
        self.0[id.index()] = if j.is_present() { j } else { Joint::ABSENT };
    }

    pub fn iter(&self) -> impl Iterator<Item = (JointId, &Joint)> {
        JointId::all().zip(self.0.iter())
    }

    pub fn present_count(&self) -> usize {
        self.0.iter().filter(|j| j.is_present()).count()
    }

    /// Mirror inside an image of the given width: `x -> width - 1 - x`, with
    /// left/right slots exchanged.
    pub fn flipped(&self, width: usize) -> Self {
        assert!(width > 0, "flip width must be positive");
        let mut out = Self::absent();
        for (i, j) in self.0.iter().enumerate() {
            if j.is_present() {
                out.0[JOINT_SWAP[i] as usize] = Joint {
                    x: (width - 1) as f64 - j.x,
                    y: j.y,
                    vis: j.vis,
                };
            }
        }
        out
    }

    /// Apply `p -> p * scale + offset` to present joints.
    pub fn transformed(&self, scale_x: f64, scale_y: f64, dx: f64, dy: f64) -> Self {
        let mut out = *self;
        for j in out.0.iter_mut().filter(|j| j.is_present()) {
            j.x = j.x * scale_x + dx;
            j.y = j.y * scale_y + dy;
        }
        out
    }

    /// Mark joints outside `[0, width) x [0, height)` as absent.
    pub fn clipped(&self, height: usize, width: usize) -> Self {
        let mut out = *self;
        for j in out.0.iter_mut() {
            if j.is_present() && !inside(j.x, j.y, height, width) {
                *j = Joint::ABSENT;
            }
        }
        out
    }

    /// Shift into the frame of the window starting at `(x0, y0)` and drop
    /// joints that fall outside it.
    pub fn cropped(&self, y0: f64, x0: f64, height: usize, width: usize) -> Self {
        self.transformed(1.0, 1.0, -x0, -y0).clipped(height, width)
    }
}

#[inline]
pub fn inside(x: f64, y: f64, height: usize, width: usize) -> bool {
    x >= 0.0 && y >= 0.0 && x <= (width - 1) as f64 && y <= (height - 1) as f64
}

/// Snap a coordinate to the 1/64 pixel grid. Coordinates on this grid
/// survive mirroring and JSON round trips bit-exactly.
pub fn quantize_coord(v: f64) -> f64 {
    (v * 64.0).round() / 64.0
}

pub fn flip_joint_set(j: &JointSet, width: usize) -> JointSet {
    j.flipped(width)
}
