//! Response scale, focal values, and the contraction of the full scale onto
//! the focal subset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An integer response scale such as `0..=10` together with its three
/// focal values (bottom, middle, top).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ScaleRepr", into = "ScaleRepr")]
pub struct ResponseScale {
    min: i32,
    max: i32,
    focal: [i32; 3],
}

#[derive(Serialize, Deserialize)]
struct ScaleRepr {
    min: i32,
    max: i32,
    focal: [i32; 3],
}

impl TryFrom<ScaleRepr> for ResponseScale {
    type Error = Error;

    fn try_from(r: ScaleRepr) -> Result<Self> {
        ResponseScale::new(r.min, r.max, r.focal)
    }
}

impl From<ResponseScale> for ScaleRepr {
    fn from(s: ResponseScale) -> Self {
        ScaleRepr { min: s.min, max: s.max, focal: s.focal }
    }
}

impl Default for ResponseScale {
    fn default() -> Self {
        Self::zero_to_ten()
    }
}

impl ResponseScale {
    pub fn new(min: i32, max: i32, focal: [i32; 3]) -> Result<Self> {
        if !(min == 0 || min == 1) || max != 10 {
            return Err(Error::InvalidScale(format!(
                "supported scales are 0-10 and 1-10, got {min}-{max}"
            )));
        }
        let [lo, mid, hi] = focal;
        if lo != min || hi != max {
            return Err(Error::InvalidScale(
                "focal set must contain both scale endpoints".into(),
            ));
        }
        // the rules need two non-focal neighbours on each side of every focal value
        if mid < min + 3 || mid > max - 3 {
            return Err(Error::InvalidScale(format!(
                "interior focal value {mid} must leave two values on each side"
            )));
        }
        Ok(Self { min, max, focal })
    }

    pub fn zero_to_ten() -> Self {
        Self { min: 0, max: 10, focal: [0, 5, 10] }
    }

    pub fn one_to_ten() -> Self {
        Self { min: 1, max: 10, focal: [1, 5, 10] }
    }

    pub fn min_value(&self) -> i32 {
        self.min
    }

    pub fn max_value(&self) -> i32 {
        self.max
    }

    pub fn focal_values(&self) -> [i32; 3] {
        self.focal
    }

    /// Category indices (0-based) of the focal values.
    pub fn focal_indices(&self) -> [usize; 3] {
        self.focal.map(|f| (f - self.min) as usize)
    }

    pub fn n_categories(&self) -> usize {
        (self.max - self.min + 1) as usize
    }

    pub fn contains(&self, s: i32) -> bool {
        (self.min..=self.max).contains(&s)
    }

    pub fn is_focal(&self, s: i32) -> bool {
        self.focal.contains(&s)
    }

    pub fn index_of(&self, s: i32) -> Option<usize> {
        self.contains(s).then(|| (s - self.min) as usize)
    }

    pub fn value_at(&self, index: usize) -> i32 {
        self.min + index as i32
    }

    pub fn values(&self) -> impl Iterator<Item = i32> {
        self.min..=self.max
    }

    /// Contraction groups: `{min..min+2}`, the interior block, `{max-2..max}`.
    pub fn default_contraction(&self) -> ContractionMap {
        let lo_end = self.min + 2;
        let hi_start = self.max - 2;
        ContractionMap {
            groups: vec![
                ContractionGroup { members: (self.min..=lo_end).collect(), target: self.focal[0] },
                ContractionGroup {
                    members: (lo_end + 1..hi_start).collect(),
                    target: self.focal[1],
                },
                ContractionGroup { members: (hi_start..=self.max).collect(), target: self.focal[2] },
            ],
        }
    }

    /// High-type threshold pairs whose midpoints define the two low-type
    /// cutoffs when cutoffs are tied. Threshold `k` separates categories
    /// `k` and `k + 1`.
    pub fn tied_cutoff_pairs(&self) -> [(usize, usize); 2] {
        if self.min == 0 {
            [(2, 3), (7, 8)]
        } else {
            [(2, 2), (6, 7)]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractionGroup {
    pub members: Vec<i32>,
    pub target: i32,
}

/// Partition of the scale into groups, each mapped to its unique focal member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractionMap {
    groups: Vec<ContractionGroup>,
}

impl ContractionMap {
    pub fn new(scale: &ResponseScale, groups: Vec<ContractionGroup>) -> Result<Self> {
        let mut seen = vec![false; scale.n_categories()];
        for g in &groups {
            let focal_members: Vec<_> = g.members.iter().filter(|&&m| scale.is_focal(m)).collect();
            if focal_members.len() != 1 || *focal_members[0] != g.target {
                return Err(Error::InvalidScale(format!(
                    "group {:?} must contain exactly one focal value equal to its target {}",
                    g.members, g.target
                )));
            }
            for &m in &g.members {
                let idx = scale.index_of(m).ok_or(Error::OutOfScale {
                    value: m,
                    min: scale.min_value(),
                    max: scale.max_value(),
                })?;
                if seen[idx] {
                    return Err(Error::InvalidScale(format!("value {m} appears in two groups")));
                }
                seen[idx] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidScale("groups do not cover the scale".into()));
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[ContractionGroup] {
        &self.groups
    }

    pub fn group_of(&self, s: i32) -> Option<&ContractionGroup> {
        self.groups.iter().find(|g| g.members.contains(&s))
    }

    pub fn group_for_target(&self, target: i32) -> Option<&ContractionGroup> {
        self.groups.iter().find(|g| g.target == target)
    }

    /// Maps a response to the focal value of its group.
    pub fn contract(&self, s: i32) -> Result<i32> {
        self.group_of(s).map(|g| g.target).ok_or_else(|| {
            let (min, max) = self.bounds();
            Error::OutOfScale { value: s, min, max }
        })
    }

    fn bounds(&self) -> (i32, i32) {
        let all = self.groups.iter().flat_map(|g| g.members.iter().copied());
        let (mut lo, mut hi) = (i32::MAX, i32::MIN);
        for v in all {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// Maps `s` through `map`. Free-function form of [`ContractionMap::contract`].
pub fn contract(s: i32, map: &ContractionMap) -> Result<i32> {
    map.contract(s)
}
