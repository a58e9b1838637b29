//! Collatz variants with even branch `x/2 + c`, over the integers and over
//! the rationals.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::{affine_from_word_with, Affine, BranchWord};
use crate::map::{branch_of, DeltaMap, ExactMap, FloatMap, MapParams, NumericMode};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OddConvention {
    /// `3x + 1`
    #[default]
    Unbundled,
    /// `(3x + 1) / 2`
    Bundled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerVariantParams {
    pub c: u64,
    pub convention: OddConvention,
    /// Seeds skipped by a census.
    pub excluded: BTreeSet<u64>,
}

impl IntegerVariantParams {
    pub fn new(c: u64) -> Self {
        IntegerVariantParams { c, convention: OddConvention::Unbundled, excluded: BTreeSet::new() }
    }

    pub fn excluding(mut self, seeds: impl IntoIterator<Item = u64>) -> Self {
        self.excluded.extend(seeds);
        self
    }
}

/// One step; `None` when the result would overflow `u128`.
pub fn integer_variant_step(x: u128, p: &IntegerVariantParams) -> Option<u128> {
    if x.is_multiple_of(2) {
        (x / 2).checked_add(p.c as u128)
    } else {
        let t = x.checked_mul(3)?.checked_add(1)?;
        Some(match p.convention {
            OddConvention::Unbundled => t,
            OddConvention::Bundled => t / 2,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegerCycle {
    /// Rotated to start at the minimal element.
    pub elements: Vec<u128>,
    pub length: usize,
    pub min: u128,
    pub basin_count: usize,
    pub basin_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExceptionReason {
    BudgetExhausted,
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusException {
    pub seed: u64,
    pub reason: ExceptionReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub params: IntegerVariantParams,
    pub seed_lo: u64,
    pub seed_hi: u64,
    pub budget: usize,
    pub seeds_considered: usize,
    /// Sorted by minimal element.
    pub cycles: Vec<IntegerCycle>,
    pub exceptions: Vec<CensusException>,
}

impl CensusReport {
    pub fn cycle_containing(&self, x: u128) -> Option<usize> {
        self.cycles.iter().position(|c| c.elements.contains(&x))
    }

    /// Lengths in ascending order.
    pub fn length_multiset(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.cycles.iter().map(|c| c.length).collect();
        v.sort_unstable();
        v
    }

    /// Basin fractions in descending order.
    pub fn basin_shares(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.cycles.iter().map(|c| c.basin_fraction).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

fn canonical(mut cycle: Vec<u128>) -> Vec<u128> {
    let i = cycle.iter().enumerate().min_by_key(|(_, v)| **v).map_or(0, |(i, _)| i);
    cycle.rotate_left(i);
    cycle
}

/// The cycle the orbit of `seed` falls into, canonically rotated.
pub fn integer_cycle_of(seed: u128, p: &IntegerVariantParams, budget: usize) -> Result<Vec<u128>, ExceptionReason> {
    let mut seen: HashMap<u128, usize> = HashMap::new();
    let mut path = Vec::new();
    let mut x = seed;
    for i in 0..=budget {
        if let Some(&start) = seen.get(&x) {
            return Ok(canonical(path[start..].to_vec()));
        }
        seen.insert(x, i);
        path.push(x);
        x = integer_variant_step(x, p).ok_or(ExceptionReason::Overflow)?;
    }
    Err(ExceptionReason::BudgetExhausted)
}

pub fn cycle_census(p: &IntegerVariantParams, seed_lo: u64, seed_hi: u64, budget: usize) -> CensusReport {
    assert!(seed_lo <= seed_hi, "empty seed range");
    let seeds: Vec<u64> = (seed_lo..=seed_hi).filter(|s| !p.excluded.contains(s)).collect();
    let outcomes: Vec<Result<Vec<u128>, ExceptionReason>> =
        seeds.par_iter().map(|&s| integer_cycle_of(s as u128, p, budget)).collect();
    let mut basins: BTreeMap<u128, (Vec<u128>, usize)> = BTreeMap::new();
    let mut exceptions = Vec::new();
    for (&seed, outcome) in seeds.iter().zip(outcomes) {
        match outcome {
            Ok(cycle) => basins.entry(cycle[0]).or_insert((cycle, 0)).1 += 1,
            Err(reason) => exceptions.push(CensusException { seed, reason }),
        }
    }
    let total = seeds.len();
    let cycles = basins
        .into_values()
        .map(|(elements, count)| IntegerCycle {
            length: elements.len(),
            min: elements[0],
            elements,
            basin_count: count,
            basin_fraction: if total == 0 { 0.0 } else { count as f64 / total as f64 },
        })
        .collect();
    CensusReport {
        params: p.clone(),
        seed_lo,
        seed_hi,
        budget,
        seeds_considered: total,
        cycles,
        exceptions,
    }
}

/// A periodic orbit of a rational two-branch map, rotated to start at its
/// smallest point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalCycle {
    pub points: Vec<Rational>,
    pub word: BranchWord,
    /// Slope of the composed return map.
    pub slope: Rational,
}

impl RationalCycle {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_attracting(&self) -> bool {
        self.slope.abs() < Rational::one()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FractionalVerdict {
    /// The orbit lands exactly on a cycle point at `index`.
    ExactCycle { index: usize, cycle: RationalCycle },
    /// From `index` on the orbit shares the cycle's branch word and the cycle
    /// is attracting.
    Attracted { index: usize, cycle: RationalCycle },
    Undetermined { budget: usize },
}

impl FractionalVerdict {
    pub fn cycle(&self) -> Option<&RationalCycle> {
        match self {
            FractionalVerdict::ExactCycle { cycle, .. } | FractionalVerdict::Attracted { cycle, .. } => Some(cycle),
            FractionalVerdict::Undetermined { .. } => None,
        }
    }
}

/// Each point maps exactly to the next, cyclically.
pub fn verify_cycle(points: &[Rational], params: &MapParams) -> bool {
    !points.is_empty()
        && (0..points.len()).all(|i| crate::map::delta(&points[i], params) == points[(i + 1) % points.len()])
}

/// The genuine periodic orbit with branch word `word`, if one exists.
pub fn cycle_from_word(word: &BranchWord, params: &MapParams) -> Option<RationalCycle> {
    let m: Affine = affine_from_word_with(word, params);
    let x = crate::affine::fixed_point(&m).ok()?;
    let mut points = Vec::with_capacity(word.len());
    let mut y = x.clone();
    for b in word.iter() {
        if branch_of(&y, params) != b {
            return None;
        }
        points.push(y.clone());
        y = params.branch(b).apply(&y);
    }
    if y != x {
        return None;
    }
    let i = points.iter().enumerate().min_by(|a, b| a.1.cmp(b.1)).map(|(i, _)| i)?;
    points.rotate_left(i);
    let mut w = word.0.clone();
    w.rotate_left(i);
    Some(RationalCycle { points, word: BranchWord(w), slope: m.slope })
}

/// Smallest `p <= max_period` such that the tail of `cells` repeats with
/// period `p` for at least three periods and 24 entries.
fn tail_period(cells: &[(i64, crate::map::Branch)], max_period: usize) -> Option<usize> {
    let n = cells.len();
    (1..=max_period).find(|&p| {
        let span = (3 * p).max(24);
        span + p <= n && (0..span).all(|j| cells[n - 1 - j] == cells[n - 1 - j - p])
    })
}

fn detect<M: DeltaMap>(map: &M, params: &MapParams, seed: &Rational, budget: usize, max_period: usize) -> FractionalVerdict {
    let mut x = map.lift(seed);
    let mut cells = Vec::new();
    let mut values: Vec<M::Value> = Vec::new();
    let mut next_check = 32;
    for n in 0..budget {
        cells.push((map.int_part(&x), map.branch(&x)));
        values.push(x.clone());
        x = map.apply(&x);
        if n + 1 < next_check {
            continue;
        }
        next_check += 32;
        let Some(p) = tail_period(&cells, max_period) else { continue };
        let start = n + 1 - p;
        let word = BranchWord(cells[start..].iter().map(|c| c.1).collect());
        let Some(cycle) = cycle_from_word(&word, params) else { continue };
        // first index whose value is exactly a cycle point, if any
        let exact = values
            .iter()
            .position(|v| cycle.points.contains(&map.to_rational(v)));
        if let Some(index) = exact {
            return FractionalVerdict::ExactCycle { index, cycle };
        }
        if cycle.is_attracting() {
            // walk back to the first index of the periodic tail
            let mut index = start;
            while index > 0 && cells[index - 1] == cells[index - 1 + p] {
                index -= 1;
            }
            return FractionalVerdict::Attracted { index, cycle };
        }
    }
    FractionalVerdict::Undetermined { budget }
}

/// Orbit of `seed` under `x/2 + c` (below one half) and `(3x+1)/2`, with the
/// limit cycle recovered exactly from the branch word of the orbit's tail.
pub fn fractional_variant_orbit(seed: &Rational, c: &Rational, budget: usize, mode: NumericMode) -> FractionalVerdict {
    variant_orbit_with(seed, &MapParams::fractional_variant(c.clone()), budget, mode, 64)
}

pub fn variant_orbit_with(
    seed: &Rational,
    params: &MapParams,
    budget: usize,
    mode: NumericMode,
    max_period: usize,
) -> FractionalVerdict {
    match mode {
        NumericMode::Exact => detect(&ExactMap::new(params.clone()), params, seed, budget, max_period),
        NumericMode::Float64 => detect(&FloatMap::new(params), params, seed, budget, max_period),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalCycleCount {
    pub cycle: RationalCycle,
    pub count: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalCensus {
    pub c: Rational,
    pub seeds: usize,
    /// Ordered by cycle length, then smallest point.
    pub cycles: Vec<FractionalCycleCount>,
    pub undetermined: Vec<Rational>,
}

impl FractionalCensus {
    pub fn fraction_reaching(&self, points: &[Rational]) -> f64 {
        self.cycles
            .iter()
            .filter(|c| {
                c.cycle.points.len() == points.len() && points.iter().all(|p| c.cycle.points.contains(p))
            })
            .map(|c| c.fraction)
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

pub fn fractional_census(seeds: &[Rational], c: &Rational, budget: usize, mode: NumericMode) -> FractionalCensus {
    let verdicts: Vec<FractionalVerdict> =
        seeds.par_iter().map(|s| fractional_variant_orbit(s, c, budget, mode)).collect();
    let mut counts: BTreeMap<(usize, Rational), (RationalCycle, usize)> = BTreeMap::new();
    let mut undetermined = Vec::new();
    for (s, v) in seeds.iter().zip(verdicts) {
        match v.cycle() {
            Some(cy) => {
                counts.entry((cy.len(), cy.points[0].clone())).or_insert((cy.clone(), 0)).1 += 1;
            }
            None => undetermined.push(s.clone()),
        }
    }
    let total = seeds.len().max(1) as f64;
    FractionalCensus {
        c: c.clone(),
        seeds: seeds.len(),
        cycles: counts
            .into_values()
            .map(|(cycle, count)| FractionalCycleCount { cycle, count, fraction: count as f64 / total })
            .collect(),
        undetermined,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{classify, cycle, OrbitClassification};
    use proptest::prelude::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::frac_of(p, d)
    }

    #[test]
    fn step_examples() {
        let p = IntegerVariantParams::new(1);
        assert_eq!(integer_variant_step(7, &p), Some(22));
        assert_eq!(integer_variant_step(8, &p), Some(5));
        assert_eq!(integer_variant_step(1, &p), Some(4));
        assert_eq!(integer_variant_step(u128::MAX, &p), None);
        let b = IntegerVariantParams { convention: OddConvention::Bundled, ..p };
        assert_eq!(integer_variant_step(7, &b), Some(11));
    }

    #[test]
    fn seven_lies_on_a_three_cycle() {
        let p = IntegerVariantParams::new(1);
        assert_eq!(integer_cycle_of(7, &p, 100), Ok(vec![7, 22, 12]));
        assert_eq!(integer_cycle_of(4, &p, 100), Ok(vec![3, 10, 6, 4]));
    }

    #[test]
    fn small_census_is_closed_and_disjoint() {
        let p = IntegerVariantParams::new(1);
        let r = cycle_census(&p, 3, 3000, 10_000);
        let mut all = BTreeSet::new();
        for c in &r.cycles {
            for (i, &x) in c.elements.iter().enumerate() {
                assert_eq!(integer_variant_step(x, &p), Some(c.elements[(i + 1) % c.length]));
                assert!(all.insert(x), "cycles overlap at {x}");
            }
        }
        let sum: f64 = r.cycles.iter().map(|c| c.basin_fraction).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(r.exceptions.is_empty());
    }

    #[test]
    fn exclusions_and_budget() {
        let p = IntegerVariantParams::new(3).excluding([6]);
        let r = cycle_census(&p, 1, 20, 10_000);
        assert_eq!(r.seeds_considered, 19);
        assert!(r.cycle_containing(6).is_none());
        let tight = cycle_census(&IntegerVariantParams::new(1), 3, 50, 2);
        assert!(!tight.exceptions.is_empty());
        assert!(tight.exceptions.iter().all(|e| e.reason == ExceptionReason::BudgetExhausted));
        let counted: usize = tight.cycles.iter().map(|c| c.basin_count).sum();
        assert_eq!(counted + tight.exceptions.len(), tight.seeds_considered);
    }

    #[test]
    fn json_shape() {
        let r = cycle_census(&IntegerVariantParams::new(1), 3, 30, 1000);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let c0 = &v["cycles"][0];
        for key in ["elements", "length", "min", "basin_count", "basin_fraction"] {
            assert!(c0.get(key).is_some(), "{key}");
        }
        assert!(v["exceptions"].is_array());
    }

    #[test]
    fn short_fractional_cycle() {
        let params = MapParams::fractional_variant(Rational::one());
        assert!(verify_cycle(&[q(22, 5), q(16, 5), q(13, 5)], &params));
        assert!(!verify_cycle(&[q(22, 5), q(13, 5), q(16, 5)], &params));
        let c = cycle_from_word(&"LHL".parse().unwrap(), &params).unwrap();
        assert_eq!(c.points, vec![q(13, 5), q(22, 5), q(16, 5)]);
        assert_eq!(c.slope, q(3, 8));
        assert!(c.is_attracting());
    }

    #[test]
    fn seed_27_reaches_a_cycle() {
        let v = fractional_variant_orbit(&q(27, 1), &Rational::one(), 10_000, NumericMode::Exact);
        let cy = v.cycle().expect("cycle found");
        assert!(verify_cycle(&cy.points, &MapParams::fractional_variant(Rational::one())));
        let f = fractional_variant_orbit(&q(27, 1), &Rational::one(), 10_000, NumericMode::Float64);
        assert_eq!(f.cycle(), Some(cy));
    }

    #[test]
    fn seed_on_cycle_is_exact() {
        let v = fractional_variant_orbit(&q(16, 5), &Rational::one(), 1000, NumericMode::Exact);
        assert!(matches!(v, FractionalVerdict::ExactCycle { index: 0, .. }));
    }

    #[test]
    fn c_zero_agrees_with_classify() {
        let target: BTreeSet<Rational> = cycle().points.iter().cloned().collect();
        for s in crate::analysis::seed_grid(&q(1, 2), &q(40, 1), &q(7, 10)) {
            let v = fractional_variant_orbit(&s, &Rational::zero(), 10_000, NumericMode::Exact);
            match classify(&s, 10_000, NumericMode::Exact) {
                OrbitClassification::EntersCycle { .. } => {
                    let got: BTreeSet<Rational> = v.cycle().unwrap().points.iter().cloned().collect();
                    assert_eq!(got, target, "seed {s}");
                }
                OrbitClassification::ConvergesToZero { .. } => {
                    assert_eq!(v.cycle().unwrap().points, vec![Rational::zero()]);
                }
                other => panic!("seed {s}: {other:?}"),
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn census_order_independent(lo in 3u64..200, len in 1u64..200) {
            let p = IntegerVariantParams::new(1);
            let a = cycle_census(&p, lo, lo + len, 10_000);
            // reversed accumulation over the same seeds gives the same report
            let mut rev: BTreeMap<u128, usize> = BTreeMap::new();
            for s in (lo..=lo + len).rev() {
                *rev.entry(integer_cycle_of(s as u128, &p, 10_000).unwrap()[0]).or_default() += 1;
            }
            let fwd: BTreeMap<u128, usize> = a.cycles.iter().map(|c| (c.min, c.basin_count)).collect();
            prop_assert_eq!(fwd, rev);
        }

        #[test]
        fn c_one_never_converges_to_zero(n in 0i64..1000) {
            let v = fractional_variant_orbit(&q(n, 10), &Rational::one(), 10_000, NumericMode::Exact);
            let cy = v.cycle().expect("cycle");
            prop_assert!(cy.points.iter().all(|p| *p >= Rational::half()));
        }
    }
}
