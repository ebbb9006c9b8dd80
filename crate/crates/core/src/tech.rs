//! Technology parameters that drive every legality predicate.
//!
//! All lengths are integer nanometers and all spacing rules are
//! center-to-center Euclidean distances. Comparisons are done on squared
//! values so no predicate ever touches floating point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pitch, group-size and mask-count rules for a DSA + multiple-patterning
/// via layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TechParams {
    /// Natural pitch of the block copolymer. Stored but not consumed by any
    /// legality rule.
    pub l0: i64,
    /// Largest neighbor spacing inside one guiding template.
    pub max_dsa_pitch: i64,
    /// Largest number of vias in one guiding template.
    pub max_g: usize,
    /// Two vias closer than this must not share a mask unless co-grouped.
    pub min_pitch_same_mask: i64,
    /// Hard floor: no two vias may ever be closer than this.
    pub min_pitch_diff_mask: i64,
    pub via_width: i64,
    pub num_masks: usize,
    /// Smallest neighbor spacing inside one template. Defaults to `via_width`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_group_pitch: Option<i64>,
}

impl Default for TechParams {
    fn default() -> Self {
        TechParams {
            l0: 30,
            max_dsa_pitch: 51,
            max_g: 2,
            min_pitch_same_mask: 75,
            min_pitch_diff_mask: 10,
            via_width: 15,
            num_masks: 3,
            min_group_pitch: None,
        }
    }
}

impl TechParams {
    pub fn with_max_g(mut self, max_g: usize) -> Self {
        self.max_g = max_g;
        self
    }

    pub fn with_masks(mut self, num_masks: usize) -> Self {
        self.num_masks = num_masks;
        self
    }

    pub fn min_group_pitch(&self) -> i64 {
        self.min_group_pitch.unwrap_or(self.via_width)
    }

    /// Checks `min_pitch_diff_mask <= via_width <= min_group_pitch <= max_dsa_pitch < min_pitch_same_mask`
    /// along with the count parameters.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTech(msg));
        if self.num_masks == 0 {
            return bad("num_masks must be at least 1".into());
        }
        if self.max_g == 0 {
            return bad("max_g must be at least 1".into());
        }
        if self.min_pitch_diff_mask <= 0 {
            return bad("min_pitch_diff_mask must be positive".into());
        }
        let chain = [
            ("min_pitch_diff_mask", self.min_pitch_diff_mask),
            ("via_width", self.via_width),
            ("min_group_pitch", self.min_group_pitch()),
            ("max_dsa_pitch", self.max_dsa_pitch),
        ];
        for w in chain.windows(2) {
            if w[0].1 > w[1].1 {
                return bad(format!(
                    "{} ({}) exceeds {} ({})",
                    w[0].0, w[0].1, w[1].0, w[1].1
                ));
            }
        }
        if self.max_dsa_pitch >= self.min_pitch_same_mask {
            return bad(format!(
                "max_dsa_pitch ({}) must be below min_pitch_same_mask ({})",
                self.max_dsa_pitch, self.min_pitch_same_mask
            ));
        }
        Ok(())
    }

    pub(crate) fn same_mask_sq(&self) -> i64 {
        self.min_pitch_same_mask * self.min_pitch_same_mask
    }

    pub(crate) fn diff_mask_sq(&self) -> i64 {
        self.min_pitch_diff_mask * self.min_pitch_diff_mask
    }

    /// True when two collinear neighbors at spacing `gap` may share a template.
    pub fn is_group_gap(&self, gap: i64) -> bool {
        gap >= self.min_group_pitch() && gap <= self.max_dsa_pitch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_hold_table_values() {
        let t = TechParams::default();
        assert_eq!(
            (
                t.l0,
                t.max_dsa_pitch,
                t.min_pitch_same_mask,
                t.min_pitch_diff_mask,
                t.via_width
            ),
            (30, 51, 75, 10, 15)
        );
        assert_eq!(t.num_masks, 3);
        assert_eq!(t.min_group_pitch(), 15);
        t.validate().unwrap();
    }

    #[test]
    fn rejects_broken_chain() {
        let t = TechParams {
            max_dsa_pitch: 80,
            ..TechParams::default()
        };
        assert!(t.validate().is_err());

        let t = TechParams {
            min_group_pitch: Some(60),
            ..TechParams::default()
        };
        assert!(t.validate().is_err());

        assert!(TechParams::default().with_masks(0).validate().is_err());
        assert!(TechParams::default().with_max_g(0).validate().is_err());
    }

    #[test]
    fn group_gap_bounds_are_inclusive() {
        let t = TechParams::default();
        assert!(t.is_group_gap(15));
        assert!(t.is_group_gap(51));
        assert!(!t.is_group_gap(14));
        assert!(!t.is_group_gap(52));
    }

    #[test]
    fn min_group_pitch_roundtrips_absent() {
        let t = TechParams::default();
        let s = serde_json::to_string(&t).unwrap();
        assert!(!s.contains("min_group_pitch"));
        let back: TechParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
