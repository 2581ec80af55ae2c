//! The 0-3 graded relevance scale.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A relevance grade on the four-point scale used by the Deep Learning
/// Tracks: 0 (irrelevant), 1 (related), 2 (highly relevant),
/// 3 (perfectly relevant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Grade(u8);

/// Error returned when a value outside `{0, 1, 2, 3}` is used as a grade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("grade {0} outside the 0-3 relevance scale")]
pub struct GradeOutOfRange(pub i64);

impl Grade {
    /// All four grades in ascending order.
    pub const ALL: [Grade; 4] = [Grade(0), Grade(1), Grade(2), Grade(3)];

    /// Builds a grade, rejecting anything outside 0-3.
    pub fn new(value: i64) -> Result<Self, GradeOutOfRange> {
        if (0..=3).contains(&value) {
            Ok(Grade(value as u8))
        } else {
            Err(GradeOutOfRange(value))
        }
    }

    /// The raw integer value.
    pub fn value(self) -> u8 {
        self.0
    }

    /// Collapses the four-point scale to binary relevance: grades 0 and 1
    /// map to 0 (non-relevant), grades 2 and 3 map to 1 (relevant).
    pub fn binarized(self) -> Grade {
        if self.0 >= 2 {
            Grade(1)
        } else {
            Grade(0)
        }
    }

    /// Index into a 4-element array keyed by grade.
    pub(crate) fn index(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u8> for Grade {
    type Error = GradeOutOfRange;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Grade::new(i64::from(value))
    }
}

impl From<Grade> for u8 {
    fn from(g: Grade) -> u8 {
        g.0
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
