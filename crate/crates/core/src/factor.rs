use std::fmt;

use serde::{Deserialize, Serialize};

/// Difficulty tag attached to a sample for stratified evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChallengeFactor {
    Occlusion,
    FullBody,
    UpperBody,
    LowerBody,
    HeadMissing,
    BackView,
}

impl ChallengeFactor {
    pub const ALL: [ChallengeFactor; 6] = [
        Self::Occlusion,
        Self::FullBody,
        Self::UpperBody,
        Self::LowerBody,
        Self::HeadMissing,
        Self::BackView,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Occlusion => "occlusion",
            Self::FullBody => "full-body",
            Self::UpperBody => "upper-body",
            Self::LowerBody => "lower-body",
            Self::HeadMissing => "head-missing",
            Self::BackView => "back-view",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }
}

impl fmt::Display for ChallengeFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
