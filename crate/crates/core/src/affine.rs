//! Symbolic composition of map branches.
//!
//! A word over `{L, H}` composes to an affine map. For the default map the
//! composition is always `x -> (3^k x + c) / 2^n` with `k` the number of
//! `H` letters, `n` the word length and `c` a non-negative integer, which is
//! what [`DyadicAffine`] stores. [`Affine`] is the general rational form used
//! for other parameter sets.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::AffineError;
use crate::map::{branch_of, BoundaryRule, Branch, MapParams};
use crate::rational::{pow2, pow3, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BranchWord(pub Vec<Branch>);

impl BranchWord {
    pub fn new() -> Self {
        BranchWord(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, b: Branch) {
        self.0.push(b);
    }

    pub fn count_h(&self) -> usize {
        self.0.iter().filter(|&&b| b == Branch::H).count()
    }

    pub fn count_l(&self) -> usize {
        self.len() - self.count_h()
    }

    pub fn concat(&self, other: &BranchWord) -> BranchWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        BranchWord(v)
    }

    pub fn prefix(&self, n: usize) -> BranchWord {
        BranchWord(self.0[..n].to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = Branch> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for BranchWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{}", b.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for BranchWord {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.chars()
            .map(|c| match c {
                'L' | 'l' => Ok(Branch::L),
                'H' | 'h' => Ok(Branch::H),
                other => Err(format!("invalid branch letter `{other}`")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BranchWord)
    }
}

impl Serialize for BranchWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BranchWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// `x -> (3^pow3 * x + offset) / 2^pow2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicAffine {
    pub pow3: u32,
    pub pow2: u32,
    pub offset: BigInt,
}

impl Default for DyadicAffine {
    fn default() -> Self {
        DyadicAffine::identity()
    }
}

impl DyadicAffine {
    pub fn identity() -> Self {
        DyadicAffine { pow3: 0, pow2: 0, offset: BigInt::zero() }
    }

    /// Post-compose one branch of the default map.
    pub fn push(&mut self, b: Branch) {
        if b == Branch::H {
            self.offset = &self.offset * 3u32 + pow2(self.pow2);
            self.pow3 += 1;
        }
        self.pow2 += 1;
    }

    pub fn then(&self, next: &DyadicAffine) -> DyadicAffine {
        DyadicAffine {
            pow3: self.pow3 + next.pow3,
            pow2: self.pow2 + next.pow2,
            offset: pow3(next.pow3) * &self.offset + (&next.offset << self.pow2 as usize),
        }
    }

    pub fn apply(&self, x: &Rational) -> Rational {
        let num = Rational::from_integer(pow3(self.pow3)) * x + Rational::from_integer(self.offset.clone());
        num / Rational::from_integer(pow2(self.pow2))
    }

    /// The `x` with `self(x) = y`.
    pub fn solve(&self, y: &Rational) -> Rational {
        let num = Rational::from_integer(pow2(self.pow2)) * y - Rational::from_integer(self.offset.clone());
        num / Rational::from_integer(pow3(self.pow3))
    }

    pub fn slope(&self) -> Rational {
        Rational::new(pow3(self.pow3), pow2(self.pow2)).expect("nonzero")
    }

    /// `c / (2^n - 3^k)`.
    pub fn fixed_point(&self) -> Result<Rational, AffineError> {
        let d = pow2(self.pow2) - pow3(self.pow3);
        Rational::new(self.offset.clone(), d).ok_or(AffineError::NoUniqueFixedPoint)
    }

    pub fn to_affine(&self) -> Affine {
        let den = Rational::from_integer(pow2(self.pow2));
        Affine {
            slope: Rational::from_integer(pow3(self.pow3)) / &den,
            intercept: Rational::from_integer(self.offset.clone()) / den,
        }
    }
}

impl fmt::Display for DyadicAffine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(3^{} x + {}) / 2^{}", self.pow3, self.offset, self.pow2)
    }
}

/// `x -> slope * x + intercept` over the rationals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Affine {
    pub slope: Rational,
    pub intercept: Rational,
}

impl Affine {
    pub fn new(slope: Rational, intercept: Rational) -> Self {
        Affine { slope, intercept }
    }

    pub fn identity() -> Self {
        Affine::new(Rational::one(), Rational::zero())
    }

    pub fn constant(c: Rational) -> Self {
        Affine::new(Rational::zero(), c)
    }

    pub fn apply(&self, x: &Rational) -> Rational {
        &self.slope * x + &self.intercept
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &Affine) -> Affine {
        Affine {
            slope: &next.slope * &self.slope,
            intercept: &next.slope * &self.intercept + &next.intercept,
        }
    }

    /// Post-compose one branch of `params`.
    pub fn push(&self, b: Branch, params: &MapParams) -> Affine {
        let br = params.branch(b);
        self.then(&Affine::new(br.slope.clone(), br.intercept.clone()))
    }

    /// The `x` with `self(x) = y`; `None` for constant maps.
    pub fn solve(&self, y: &Rational) -> Option<Rational> {
        if self.slope.is_zero() {
            return None;
        }
        Some((y - &self.intercept) / &self.slope)
    }

    pub fn fixed_point(&self) -> Result<Rational, AffineError> {
        fixed_point(self)
    }
}

impl From<&DyadicAffine> for Affine {
    fn from(d: &DyadicAffine) -> Self {
        d.to_affine()
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} x + {}", self.slope, self.intercept)
    }
}

/// Composition of the default map's branches in application order.
pub fn affine_from_word(word: &BranchWord) -> DyadicAffine {
    let mut f = DyadicAffine::identity();
    for b in word.iter() {
        f.push(b);
    }
    f
}

/// Composition for arbitrary parameters.
pub fn affine_from_word_with(word: &BranchWord, params: &MapParams) -> Affine {
    word.iter().fold(Affine::identity(), |f, b| f.push(b, params))
}

pub fn fixed_point(m: &Affine) -> Result<Rational, AffineError> {
    let denom = Rational::one() - &m.slope;
    if denom.is_zero() {
        return Err(AffineError::NoUniqueFixedPoint);
    }
    Ok(&m.intercept / &denom)
}

/// `[lo, hi)` with `lo < hi`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HalfOpenInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl HalfOpenInterval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self, AffineError> {
        if lo >= hi {
            return Err(AffineError::EmptyInterval { lo, hi });
        }
        Ok(HalfOpenInterval { lo, hi })
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x < &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }
}

impl fmt::Display for HalfOpenInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub word: BranchWord,
    /// `steps + 1` intervals, the first being the input.
    pub intervals: Vec<HalfOpenInterval>,
}

/// Push a whole interval through `steps` applications of the map, requiring
/// that each image sits inside one branch cell.
pub fn trace_interval(iv: &HalfOpenInterval, steps: usize, params: &MapParams) -> Result<Trace, AffineError> {
    params.validate()?;
    if params.rule != BoundaryRule::HighAtThreshold {
        return Err(AffineError::UnsupportedBoundaryRule);
    }
    if iv.lo >= iv.hi {
        return Err(AffineError::EmptyInterval { lo: iv.lo.clone(), hi: iv.hi.clone() });
    }
    let mut word = BranchWord::new();
    let mut intervals = Vec::with_capacity(steps + 1);
    intervals.push(iv.clone());
    let mut cur = iv.clone();
    for step in 0..steps {
        let boundary = params.next_boundary_above(&cur.lo);
        if cur.hi > boundary {
            return Err(AffineError::BranchStraddle { step, boundary, lo: cur.lo, hi: cur.hi });
        }
        let b = branch_of(&cur.lo, params);
        let br = params.branch(b);
        cur = HalfOpenInterval { lo: br.apply(&cur.lo), hi: br.apply(&cur.hi) };
        word.push(b);
        intervals.push(cur.clone());
    }
    Ok(Trace { word, intervals })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contraction {
    pub slope: Rational,
    pub attractive: bool,
    pub fixed_point: Rational,
}

/// Slope of `m` and whether its fixed point, required to lie in `iv`, attracts.
pub fn contraction_check(m: &Affine, iv: &HalfOpenInterval) -> Result<Contraction, AffineError> {
    let x = fixed_point(m)?;
    if !iv.contains(&x) {
        return Err(AffineError::FixedPointOutsideInterval { fixed_point: x, lo: iv.lo.clone(), hi: iv.hi.clone() });
    }
    let attractive = m.slope.abs() < Rational::one();
    Ok(Contraction { slope: m.slope.clone(), attractive, fixed_point: x })
}

/// The interval `[3/2, 41/27)` on which the 29-fold map is a single affine piece.
pub fn lemma_interval() -> HalfOpenInterval {
    HalfOpenInterval { lo: Rational::frac_of(3, 2), hi: Rational::frac_of(41, 27) }
}

/// `616136875 / (2^29 - 3^17)`.
pub fn cycle_fixed_point() -> Rational {
    Rational::frac_of(616136875, 407730749)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::delta0;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::frac_of(n, d)
    }

    #[test]
    fn branch_of_examples() {
        let p = MapParams::delta();
        assert_eq!(branch_of(&q(3, 2), &p), Branch::H);
        assert_eq!(branch_of(&q(27, 4), &p), Branch::H);
        assert_eq!(branch_of(&q(2, 1), &p), Branch::L);
    }

    #[test]
    fn affine_from_word_examples() {
        assert_eq!(affine_from_word(&BranchWord::new()), DyadicAffine::identity());
        let h = affine_from_word(&"H".parse().unwrap());
        assert_eq!(h, DyadicAffine { pow3: 1, pow2: 1, offset: 1.into() });
        assert_eq!(h.apply(&q(1, 1)), q(2, 1));
    }

    #[test]
    fn lemma_interval_trace_and_closed_form() {
        let t = trace_interval(&lemma_interval(), 29, &MapParams::delta()).unwrap();
        assert_eq!(t.word.count_h(), 17);
        assert_eq!(t.word.count_l(), 12);
        assert_eq!(t.intervals.len(), 30);
        let f = affine_from_word(&t.word);
        assert_eq!(f, DyadicAffine { pow3: 17, pow2: 29, offset: 616136875.into() });
    }

    #[test]
    fn trace_small_examples() {
        let p = MapParams::delta();
        let t = trace_interval(&HalfOpenInterval::new(q(2, 1), q(9, 4)).unwrap(), 1, &p).unwrap();
        assert_eq!(t.word.to_string(), "L");
        assert_eq!(t.intervals[1], HalfOpenInterval::new(q(1, 1), q(9, 8)).unwrap());
        let err = trace_interval(&HalfOpenInterval::new(q(5, 4), q(7, 4)).unwrap(), 1, &p).unwrap_err();
        assert_eq!(err, AffineError::BranchStraddle { step: 0, boundary: q(3, 2), lo: q(5, 4), hi: q(7, 4) });
    }

    #[test]
    fn fixed_point_examples() {
        let m = DyadicAffine { pow3: 17, pow2: 29, offset: 616136875.into() };
        assert_eq!(m.fixed_point().unwrap(), cycle_fixed_point());
        assert_eq!(fixed_point(&m.to_affine()).unwrap(), cycle_fixed_point());
        assert_eq!(fixed_point(&Affine::new(q(3, 2), q(1, 2))).unwrap(), q(-1, 1));
        assert_eq!(fixed_point(&Affine::identity()), Err(AffineError::NoUniqueFixedPoint));
        assert_eq!(DyadicAffine::identity().fixed_point(), Err(AffineError::NoUniqueFixedPoint));
    }

    #[test]
    fn contraction_examples() {
        let m = DyadicAffine { pow3: 17, pow2: 29, offset: 616136875.into() }.to_affine();
        let c = contraction_check(&m, &lemma_interval()).unwrap();
        assert_eq!(c.slope, Rational::new(pow3(17), pow2(29)).unwrap());
        assert!(c.attractive);
        let c = contraction_check(&Affine::new(q(2, 1), q(-1, 1)), &HalfOpenInterval::new(q(0, 1), q(2, 1)).unwrap()).unwrap();
        assert_eq!((c.slope, c.attractive), (q(2, 1), false));
        let c = contraction_check(&Affine::new(q(1, 2), q(0, 1)), &HalfOpenInterval::new(q(-1, 1), q(1, 1)).unwrap()).unwrap();
        assert_eq!((c.slope, c.attractive), (q(1, 2), true));
        let err = contraction_check(&Affine::new(q(1, 2), q(0, 1)), &HalfOpenInterval::new(q(1, 1), q(2, 1)).unwrap());
        assert!(matches!(err, Err(AffineError::FixedPointOutsideInterval { .. })));
    }

    #[test]
    fn iterated_contraction_is_exact() {
        let x0 = cycle_fixed_point();
        let ratio = Rational::new(pow3(17), pow2(29)).unwrap();
        for x in [q(3, 2), q(1511, 1000), q(1518, 1000)] {
            let mut y = x.clone();
            for i in 1..=3 {
                for _ in 0..29 {
                    y = delta0(&y);
                }
                assert_eq!(&y - &x0, ratio.pow(i) * (&x - &x0));
            }
        }
    }

    fn arb_word(max: usize) -> impl Strategy<Value = BranchWord> {
        prop::collection::vec(prop_oneof![Just(Branch::L), Just(Branch::H)], 0..=max).prop_map(BranchWord)
    }

    proptest! {
        #[test]
        fn composition_is_a_homomorphism(w1 in arb_word(40), w2 in arb_word(40)) {
            let whole = affine_from_word(&w1.concat(&w2));
            prop_assert_eq!(&whole, &affine_from_word(&w1).then(&affine_from_word(&w2)));
            let p = MapParams::delta();
            let general = affine_from_word_with(&w1, &p).then(&affine_from_word_with(&w2, &p));
            prop_assert_eq!(whole.to_affine(), general);
        }

        #[test]
        fn slope_law(w in arb_word(60)) {
            let f = affine_from_word(&w);
            prop_assert_eq!(f.pow3 as usize, w.count_h());
            prop_assert_eq!(f.pow2 as usize, w.len());
            prop_assert!(f.offset >= BigInt::zero());
        }

        #[test]
        fn fixed_point_round_trip(w in arb_word(40)) {
            let f = affine_from_word(&w);
            prop_assume!(!w.is_empty());
            let x = f.fixed_point().unwrap();
            prop_assert_eq!(f.apply(&x), x);
        }

        #[test]
        fn traced_samples_follow_the_word(num in 0u32..1000) {
            let iv = lemma_interval();
            let t = trace_interval(&iv, 29, &MapParams::delta()).unwrap();
            let x = &iv.lo + &(iv.width() * Rational::frac_of(num as i64, 1000));
            let mut y = x.clone();
            for (i, b) in t.word.iter().enumerate() {
                prop_assert_eq!(branch_of(&y, &MapParams::delta()), b);
                prop_assert_eq!(&affine_from_word(&t.word.prefix(i)).apply(&x), &y);
                prop_assert!(t.intervals[i].contains(&y));
                y = delta0(&y);
            }
        }
    }
}
