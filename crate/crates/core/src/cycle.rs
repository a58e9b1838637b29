//! The attracting 29-cycle through `616136875/407730749`.

use serde::{Deserialize, Serialize};

use crate::affine::{affine_from_word_with, contraction_check, lemma_interval, trace_interval, BranchWord, HalfOpenInterval};
use crate::error::AffineError;
use crate::map::{branch_of, delta, MapParams};
use crate::rational::Rational;

pub const CYCLE_LENGTH: usize = 29;

/// Integer parts of the cycle as conventionally listed, starting just above 3/2.
pub const CONJECTURED_PATTERN: [i64; CYCLE_LENGTH] =
    [1, 2, 4, 7, 11, 18, 9, 4, 7, 3, 5, 9, 4, 7, 11, 18, 9, 4, 7, 3, 6, 3, 1, 2, 4, 7, 3, 6, 3];

/// The `r` with `seq[i] == CONJECTURED_PATTERN[(r + i) % 29]` for all `i`.
pub fn pattern_rotation(seq: &[i64]) -> Option<usize> {
    if seq.len() != CYCLE_LENGTH {
        return None;
    }
    (0..CYCLE_LENGTH).find(|&r| seq.iter().enumerate().all(|(i, &v)| v == CONJECTURED_PATTERN[(r + i) % CYCLE_LENGTH]))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleDescriptor {
    pub length: usize,
    /// `points[0]` is the fixed point of the composed map; `points[i+1] = delta(points[i])`.
    pub points: Vec<Rational>,
    pub int_pattern: Vec<i64>,
    pub word: BranchWord,
}

impl CycleDescriptor {
    /// Index of the point at which the conventional listing starts.
    pub fn listed_start(&self) -> Option<usize> {
        let r = pattern_rotation(&self.int_pattern)?;
        Some((CYCLE_LENGTH - r) % CYCLE_LENGTH)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// The periodic orbit through the attracting fixed point of the `period`-fold
/// map on `iv`, with every closure and contraction fact checked exactly.
pub fn cycle_from_interval(params: &MapParams, iv: &HalfOpenInterval, period: usize) -> Result<CycleDescriptor, AffineError> {
    let trace = trace_interval(iv, period, params)?;
    let composed = affine_from_word_with(&trace.word, params);
    let contraction = contraction_check(&composed, iv)?;
    let mut points = Vec::with_capacity(period);
    let mut word = BranchWord::new();
    let mut x = contraction.fixed_point.clone();
    for _ in 0..period {
        word.push(branch_of(&x, params));
        points.push(x.clone());
        x = delta(&x, params);
    }
    if x != points[0] {
        return Err(AffineError::NotPeriodic(points[0].clone(), period));
    }
    let int_pattern = points.iter().map(|p| p.floor_int().try_into().unwrap_or(i64::MAX)).collect();
    Ok(CycleDescriptor { length: period, points, int_pattern, word })
}

/// The default map's 29-cycle, checked against the conjectured integer parts.
pub fn cycle_descriptor() -> Result<CycleDescriptor, AffineError> {
    let c = cycle_from_interval(&MapParams::delta(), &lemma_interval(), CYCLE_LENGTH)?;
    if pattern_rotation(&c.int_pattern).is_none() {
        return Err(AffineError::PatternMismatch { found: c.int_pattern });
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::cycle_fixed_point;
    use crate::map::delta0;
    use std::collections::BTreeSet;

    #[test]
    fn default_cycle_shape() {
        let c = cycle_descriptor().unwrap();
        assert_eq!(c.length, 29);
        assert_eq!(c.points[0], cycle_fixed_point());
        assert_eq!(c.int_pattern[0], 1);
        assert_eq!(c.int_pattern.iter().filter(|&&v| v == 1).count(), 2);
        assert_eq!(c.int_pattern.iter().filter(|&&v| v == 18).count(), 2);
        assert_eq!(c.word.count_h(), 17);
        assert_eq!(c.listed_start(), Some(7));
    }

    #[test]
    fn points_distinct_and_closed() {
        let c = cycle_descriptor().unwrap();
        let set: BTreeSet<_> = c.points.iter().cloned().collect();
        assert_eq!(set.len(), 29);
        for i in 0..29 {
            assert_eq!(delta0(&c.points[i]), c.points[(i + 1) % 29]);
        }
    }

    #[test]
    fn rotation_detection() {
        assert_eq!(pattern_rotation(&CONJECTURED_PATTERN), Some(0));
        let mut rotated = CONJECTURED_PATTERN.to_vec();
        rotated.rotate_left(5);
        assert_eq!(pattern_rotation(&rotated), Some(5));
        rotated[3] += 1;
        assert_eq!(pattern_rotation(&rotated), None);
        assert_eq!(pattern_rotation(&[1, 2, 4]), None);
    }

    #[test]
    fn json_uses_exact_strings() {
        let c = cycle_descriptor().unwrap();
        let v: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(v["points"][0], "616136875/407730749");
        assert_eq!(v["int_pattern"].as_array().unwrap().len(), 29);
        let back: CycleDescriptor = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn fractional_variant_three_cycle_via_interval() {
        // x/2 + 1 variant traced on a small interval around 22/5
        let params = MapParams::fractional_variant(Rational::one());
        let iv = HalfOpenInterval::new(Rational::frac_of(43, 10), Rational::frac_of(45, 10)).unwrap();
        let c = cycle_from_interval(&params, &iv, 3).unwrap();
        assert_eq!(
            c.points,
            vec![Rational::frac_of(22, 5), Rational::frac_of(16, 5), Rational::frac_of(13, 5)]
        );
    }
}
