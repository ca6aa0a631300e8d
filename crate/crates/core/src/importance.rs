//! Pooling pixel attributions into part importances, removal orders and
//! threshold-covering part sets.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::config::Aggregation;
use crate::error::{Error, Result};
use crate::model::{AttributionMap, ClassMode, PartAnnotation, PartId, PartSet};

/// Removal order: least important parts first, or most important first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Direction {
    LeastFirst,
    MostFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartImportance {
    pub image_id: String,
    pub method_id: String,
    pub class_mode: ClassMode,
    pub aggregation: Aggregation,
    values: BTreeMap<PartId, f64>,
}

impl PartImportance {
    /// Builds an importance table directly from per-part values.
    pub fn from_values(
        image_id: impl Into<String>,
        method_id: impl Into<String>,
        class_mode: ClassMode,
        aggregation: Aggregation,
        values: impl IntoIterator<Item = (PartId, f64)>,
    ) -> Result<Self> {
        let values: BTreeMap<PartId, f64> = values.into_iter().collect();
        if values.is_empty() {
            return Err(Error::InvalidPartSet("importance table has no parts".into()));
        }
        if let Some(index) = values.values().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "part importance",
                index,
            });
        }
        Ok(PartImportance {
            image_id: image_id.into(),
            method_id: method_id.into(),
            class_mode,
            aggregation,
            values,
        })
    }

    pub fn get(&self, part: PartId) -> Option<f64> {
        self.values.get(&part).copied()
    }

    /// `(part, importance)` in ascending part order.
    pub fn iter(&self) -> impl Iterator<Item = (PartId, f64)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn parts(&self) -> impl Iterator<Item = PartId> + '_ {
        self.values.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True when clamping negatives to zero changes at least one value.
    pub fn has_negative(&self) -> bool {
        self.values.values().any(|&v| v < 0.0)
    }

    pub fn negated(&self) -> Self {
        PartImportance {
            values: self.values.iter().map(|(&k, &v)| (k, -v)).collect(),
            ..self.clone()
        }
    }
}

/// Sum (or mean) of the attribution over each part's pixels.
pub fn aggregate(attr: &AttributionMap, ann: &PartAnnotation, mode: Aggregation) -> Result<PartImportance> {
    if attr.height() != ann.height() || attr.width() != ann.width() {
        return Err(Error::DimensionMismatch {
            expected_h: ann.height(),
            expected_w: ann.width(),
            found_h: attr.height(),
            found_w: attr.width(),
        });
    }
    let mut sums = [0.0f64; 256];
    for (&label, &v) in ann.mask().iter().zip(attr.values()) {
        sums[label as usize] += v as f64;
    }
    let values = ann.part_ids().iter().map(|&p| {
        let s = sums[p.0 as usize];
        let v = match mode {
            Aggregation::SumPerPart => s,
            // pixel_count >= 1 by the annotation invariant
            Aggregation::MeanPerPart => s / ann.pixel_count(p).unwrap_or(1) as f64,
        };
        (p, v)
    });
    PartImportance::from_values(ann.image_id(), attr.method_id(), attr.class_mode(), mode, values)
}

/// Parts sorted by importance; ties broken by ascending part id.
pub fn removal_order(pi: &PartImportance, direction: Direction) -> Vec<PartId> {
    let mut parts: Vec<(PartId, f64)> = pi.iter().collect();
    // iter() is already in ascending id order and the sort is stable.
    match direction {
        Direction::LeastFirst => parts.sort_by(|a, b| a.1.total_cmp(&b.1)),
        Direction::MostFirst => parts.sort_by(|a, b| b.1.total_cmp(&a.1)),
    }
    parts.into_iter().map(|(p, _)| p).collect()
}

/// Shortest prefix of the removal order whose clamped, normalized importance
/// reaches `t`.
///
/// Negative importances count as zero mass. When the total clamped mass is
/// zero only the first part in the order is returned.
pub fn select_threshold_subset(pi: &PartImportance, t: f64, direction: Direction) -> PartSet {
    let order = removal_order(pi, direction);
    select_threshold_prefix(pi, &order, t)
}

pub(crate) fn select_threshold_prefix(pi: &PartImportance, order: &[PartId], t: f64) -> PartSet {
    let total: f64 = order.iter().map(|&p| clamp(pi.get(p))).sum();
    let mut chosen = PartSet::empty();
    if total <= 0.0 {
        if let Some(&first) = order.first() {
            chosen = chosen.with(first);
        }
        return chosen;
    }
    let mut cum = 0.0;
    for &p in order {
        chosen = chosen.with(p);
        cum += clamp(pi.get(p));
        if cum / total >= t {
            break;
        }
    }
    chosen
}

fn clamp(v: Option<f64>) -> f64 {
    v.unwrap_or(0.0).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pi(vals: &[(u8, f64)]) -> PartImportance {
        PartImportance::from_values(
            "img",
            "m",
            ClassMode::Predicted,
            Aggregation::SumPerPart,
            vals.iter().map(|&(k, v)| (PartId(k), v)),
        )
        .unwrap()
    }

    fn ids(v: &[u8]) -> Vec<PartId> {
        v.iter().map(|&x| PartId(x)).collect()
    }

    fn set(v: &[u8]) -> PartSet {
        PartSet::from_ids(ids(v)).unwrap()
    }

    #[test]
    fn aggregate_examples() {
        let ann = PartAnnotation::from_mask("img", 2, 2, vec![1, 2, 1, 2]).unwrap();
        let attr = AttributionMap::new("img", "m", ClassMode::Predicted, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = aggregate(&attr, &ann, Aggregation::SumPerPart).unwrap();
        assert_eq!(s.get(PartId(1)), Some(4.0));
        assert_eq!(s.get(PartId(2)), Some(6.0));
        let m = aggregate(&attr, &ann, Aggregation::MeanPerPart).unwrap();
        assert_eq!(m.get(PartId(1)), Some(2.0));
        assert_eq!(m.get(PartId(2)), Some(3.0));

        let zero = AttributionMap::new("img", "m", ClassMode::Predicted, 2, 2, vec![0.0; 4]).unwrap();
        for mode in [Aggregation::SumPerPart, Aggregation::MeanPerPart] {
            let z = aggregate(&zero, &ann, mode).unwrap();
            assert!(z.iter().all(|(_, v)| v == 0.0));
        }

        let wrong = AttributionMap::new("img", "m", ClassMode::Predicted, 1, 4, vec![0.0; 4]).unwrap();
        assert!(matches!(
            aggregate(&wrong, &ann, Aggregation::SumPerPart),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn background_pixels_are_ignored() {
        let ann = PartAnnotation::from_mask("img", 1, 3, vec![0, 5, 5]).unwrap();
        let attr = AttributionMap::new("img", "m", ClassMode::Target, 1, 3, vec![100.0, -1.0, 2.0]).unwrap();
        let s = aggregate(&attr, &ann, Aggregation::SumPerPart).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.get(PartId(5)), Some(1.0));
    }

    #[test]
    fn removal_order_examples() {
        let p = pi(&[(1, 0.5), (2, 0.2), (3, 0.3)]);
        assert_eq!(removal_order(&p, Direction::LeastFirst), ids(&[2, 3, 1]));
        assert_eq!(removal_order(&p, Direction::MostFirst), ids(&[1, 3, 2]));
        let tie = pi(&[(1, 0.4), (2, 0.4)]);
        assert_eq!(removal_order(&tie, Direction::LeastFirst), ids(&[1, 2]));
        assert_eq!(removal_order(&tie, Direction::MostFirst), ids(&[1, 2]));
    }

    #[test]
    fn threshold_examples() {
        let p = pi(&[(1, 0.5), (2, 0.3), (3, 0.2)]);
        assert_eq!(select_threshold_subset(&p, 0.4, Direction::LeastFirst), set(&[2, 3]));
        assert_eq!(select_threshold_subset(&p, 0.4, Direction::MostFirst), set(&[1]));
        let neg = pi(&[(1, -1.0), (2, -2.0)]);
        for t in [0.1, 0.5, 0.9] {
            assert_eq!(select_threshold_subset(&neg, t, Direction::LeastFirst), set(&[2]));
        }
    }

    #[test]
    fn negative_values_count_as_zero_mass() {
        // Clamped masses 0, 0.25, 0.75; LeastFirst walks 1 (-1.0), 2, 3.
        let p = pi(&[(1, -1.0), (2, 0.25), (3, 0.75)]);
        assert!(p.has_negative());
        assert_eq!(select_threshold_subset(&p, 0.2, Direction::LeastFirst), set(&[1, 2]));
        assert_eq!(select_threshold_subset(&p, 0.3, Direction::LeastFirst), set(&[1, 2, 3]));
        assert_eq!(select_threshold_subset(&p, 0.7, Direction::MostFirst), set(&[3]));
    }
}
