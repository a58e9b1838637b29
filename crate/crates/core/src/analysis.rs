//! Orbit classification against the 29-cycle, and the statistics built on it:
//! stopping times, orbit maxima, relative phase and bifurcation data.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::HalfOpenInterval;
use crate::cycle::{cycle_descriptor, CycleDescriptor, CYCLE_LENGTH};
use crate::error::IoError;
use crate::map::{DeltaMap, ExactMap, FloatMap, MapParams, NumericMode};
use crate::rational::Rational;
use crate::table::{format_f64, Cell, Table};

/// The default map's cycle, computed once.
pub fn cycle() -> &'static CycleDescriptor {
    static CYCLE: OnceLock<CycleDescriptor> = OnceLock::new();
    CYCLE.get_or_init(|| cycle_descriptor().expect("default cycle verifies"))
}

/// Where in the cycle an orbit is allowed to be recognised as having entered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EntryRule {
    /// Only at the point where the conventional listing starts (the one near 1.527).
    #[default]
    ListedStart,
    /// At any cycle point.
    AnyRotation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OrbitClassification {
    ConvergesToZero {
        index: usize,
    },
    EntersCycle {
        stopping_time: usize,
        /// Index into the cycle's points of the point `u_n` shadows at entry.
        entry_point: usize,
        /// `u_k` tracks `points[(phase + k) % 29]` once in the cycle.
        phase: usize,
    },
    Undetermined {
        budget: usize,
    },
}

impl OrbitClassification {
    pub fn stopping_time(&self) -> Option<usize> {
        match self {
            OrbitClassification::EntersCycle { stopping_time, .. } => Some(*stopping_time),
            _ => None,
        }
    }

    pub fn phase(&self) -> Option<usize> {
        match self {
            OrbitClassification::EntersCycle { phase, .. } => Some(*phase),
            _ => None,
        }
    }

    /// Grid sentinel encoding: stopping time, `-1` for zero, `-2` for undetermined.
    pub fn code(&self) -> i64 {
        match self {
            OrbitClassification::EntersCycle { stopping_time, .. } => *stopping_time as i64,
            OrbitClassification::ConvergesToZero { .. } => -1,
            OrbitClassification::Undetermined { .. } => -2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitMax {
    /// The maximum, exactly (a float maximum is converted without rounding).
    pub value: Rational,
    pub approx: f64,
    pub index: usize,
    pub verdict: OrbitClassification,
}

/// Map, arithmetic and entry rule bundled for repeated classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub params: MapParams,
    pub mode: NumericMode,
    pub entry: EntryRule,
}

impl Default for Classifier {
    fn default() -> Self {
        Classifier { params: MapParams::delta(), mode: NumericMode::Exact, entry: EntryRule::ListedStart }
    }
}

fn entry_match<M: DeltaMap>(map: &M, win: &VecDeque<(M::Value, i64)>, entry: EntryRule, tol: &Rational) -> Option<usize> {
    let c = cycle();
    let candidates = match entry {
        EntryRule::ListedStart => {
            let s = c.listed_start().expect("pattern verified");
            s..s + 1
        }
        EntryRule::AnyRotation => 0..CYCLE_LENGTH,
    };
    candidates.into_iter().find(|&r| {
        win[0].1 == c.int_pattern[r]
            && map.within(&win[0].0, &c.points[r], tol)
            && (1..CYCLE_LENGTH).all(|i| win[i].1 == c.int_pattern[(r + i) % CYCLE_LENGTH])
    })
}

/// Walks the orbit with a 29-value look-ahead window, calling `visit` on each
/// `u_n` examined, until a verdict is reached.
fn scan<M: DeltaMap>(
    map: &M,
    seed: M::Value,
    budget: usize,
    entry: EntryRule,
    mut visit: impl FnMut(usize, &M::Value),
) -> OrbitClassification {
    let tol = Rational::frac_of(1, 4);
    let mut win: VecDeque<(M::Value, i64)> = VecDeque::with_capacity(CYCLE_LENGTH + 1);
    let mut x = seed;
    let advance = |win: &mut VecDeque<(M::Value, i64)>, x: &mut M::Value| {
        let next = map.apply(x);
        let k = map.int_part(x);
        win.push_back((std::mem::replace(x, next), k));
    };
    for _ in 0..CYCLE_LENGTH {
        advance(&mut win, &mut x);
    }
    for n in 0..budget {
        let u = &win[0].0;
        visit(n, u);
        if map.in_zero_basin(u) {
            return OrbitClassification::ConvergesToZero { index: n };
        }
        if let Some(r) = entry_match(map, &win, entry, &tol) {
            let phase = (r + CYCLE_LENGTH - n % CYCLE_LENGTH) % CYCLE_LENGTH;
            return OrbitClassification::EntersCycle { stopping_time: n, entry_point: r, phase };
        }
        win.pop_front();
        advance(&mut win, &mut x);
    }
    OrbitClassification::Undetermined { budget }
}

fn scan_max<M: DeltaMap>(map: &M, seed: &Rational, budget: usize, entry: EntryRule) -> OrbitMax {
    let mut best: Option<(M::Value, usize)> = None;
    let verdict = scan(map, map.lift(seed), budget, entry, |n, u| {
        if best.as_ref().is_none_or(|(b, _)| map.greater(u, b)) {
            best = Some((u.clone(), n));
        }
    });
    let (v, index) = best.unwrap_or_else(|| (map.lift(seed), 0));
    OrbitMax { value: map.to_rational(&v), approx: map.to_f64(&v), index, verdict }
}

impl Classifier {
    pub fn new(params: MapParams, mode: NumericMode, entry: EntryRule) -> Self {
        Classifier { params, mode, entry }
    }

    pub fn classify(&self, seed: &Rational, budget: usize) -> OrbitClassification {
        match self.mode {
            NumericMode::Exact => {
                let map = ExactMap::new(self.params.clone());
                scan(&map, seed.clone(), budget, self.entry, |_, _| {})
            }
            NumericMode::Float64 => {
                let map = FloatMap::new(&self.params);
                scan(&map, seed.to_f64(), budget, self.entry, |_, _| {})
            }
        }
    }

    pub fn orbit_max(&self, seed: &Rational, budget: usize) -> OrbitMax {
        match self.mode {
            NumericMode::Exact => scan_max(&ExactMap::new(self.params.clone()), seed, budget, self.entry),
            NumericMode::Float64 => scan_max(&FloatMap::new(&self.params), seed, budget, self.entry),
        }
    }

    pub fn relative_phase(&self, u: &Rational, v: &Rational, budget: usize) -> Option<usize> {
        phase_difference(self.classify(u, budget).phase(), self.classify(v, budget).phase())
    }

    pub fn stopping_time_grid(&self, lo: &Rational, hi: &Rational, step: &Rational, budget: usize) -> StoppingTimes {
        let seeds = seed_grid(lo, hi, step);
        let verdicts = seeds.par_iter().map(|s| self.classify(s, budget)).collect();
        StoppingTimes { seeds, verdicts }
    }

    pub fn phase_grid(&self, range: &HalfOpenInterval, resolution: usize, budget: usize) -> PhaseGrid {
        let seeds = uniform_seeds(range, resolution);
        let phases = seeds.par_iter().map(|s| self.classify(s, budget).phase()).collect();
        PhaseGrid { seeds, phases }
    }
}

/// Default map, listed-start entry rule.
pub fn classify(seed: &Rational, budget: usize, mode: NumericMode) -> OrbitClassification {
    Classifier { mode, ..Classifier::default() }.classify(seed, budget)
}

pub fn orbit_max(seed: &Rational, budget: usize, mode: NumericMode) -> OrbitMax {
    Classifier { mode, ..Classifier::default() }.orbit_max(seed, budget)
}

pub fn relative_phase(u: &Rational, v: &Rational, budget: usize) -> Option<usize> {
    Classifier::default().relative_phase(u, v, budget)
}

pub fn phase_difference(pu: Option<usize>, pv: Option<usize>) -> Option<usize> {
    Some((pu? + CYCLE_LENGTH - pv?) % CYCLE_LENGTH)
}

/// `lo, lo + step, ...` up to and including `hi`.
pub fn seed_grid(lo: &Rational, hi: &Rational, step: &Rational) -> Vec<Rational> {
    assert!(step.is_positive(), "grid step must be positive");
    let mut out = Vec::new();
    let mut k = 0i64;
    loop {
        let s = lo + &(step * &Rational::from(k));
        if s > *hi {
            return out;
        }
        out.push(s);
        k += 1;
    }
}

/// `n` equally spaced seeds `lo + i (hi - lo) / n`, `i < n`.
pub fn uniform_seeds(range: &HalfOpenInterval, n: usize) -> Vec<Rational> {
    let width = range.width();
    (0..n)
        .map(|i| &range.lo + &(&width * &Rational::frac_of(i as i64, n as i64)))
        .collect()
}

/// Runs `f` on a dedicated pool when a thread count is given. Output never
/// depends on the count: every parallel collection here preserves order.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingTimes {
    pub seeds: Vec<Rational>,
    pub verdicts: Vec<OrbitClassification>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub enters_cycle: usize,
    pub converges_to_zero: usize,
    pub undetermined: usize,
}

impl StoppingTimes {
    /// Header `x tof`; sentinels `-1` (zero basin) and `-2` (undetermined).
    pub fn table(&self) -> Table {
        let mut t = Table::new(["x", "tof"]);
        for (s, v) in self.seeds.iter().zip(&self.verdicts) {
            t.push(vec![Cell::Rational(s.clone()), Cell::Int(v.code())]);
        }
        t
    }

    pub fn stopping_times(&self) -> Vec<usize> {
        self.verdicts.iter().filter_map(OrbitClassification::stopping_time).collect()
    }

    pub fn counts(&self) -> VerdictCounts {
        let mut c = VerdictCounts::default();
        for v in &self.verdicts {
            match v {
                OrbitClassification::EntersCycle { .. } => c.enters_cycle += 1,
                OrbitClassification::ConvergesToZero { .. } => c.converges_to_zero += 1,
                OrbitClassification::Undetermined { .. } => c.undetermined += 1,
            }
        }
        c
    }

    pub fn fraction_below(&self, limit: usize) -> f64 {
        let st = self.stopping_times();
        if st.is_empty() {
            return 0.0;
        }
        st.iter().filter(|&&t| t < limit).count() as f64 / st.len() as f64
    }
}

/// Equal-width histogram over integer samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Sturges' rule: `ceil(log2 n) + 1` bins spanning the sample range.
    pub fn sturges(samples: &[usize]) -> Histogram {
        let (Some(&min), Some(&max)) = (samples.iter().min(), samples.iter().max()) else {
            return Histogram { lo: 0.0, width: 1.0, counts: Vec::new() };
        };
        let bins = ((samples.len() as f64).log2().ceil() as usize + 1).max(1);
        let lo = min as f64;
        let width = ((max - min) as f64 / bins as f64).max(1.0);
        let mut counts = vec![0; bins];
        for &s in samples {
            let b = (((s as f64) - lo) / width) as usize;
            counts[b.min(bins - 1)] += 1;
        }
        Histogram { lo, width, counts }
    }

    pub fn mode_bin(&self) -> Option<usize> {
        // first maximal bin
        let max = *self.counts.iter().max()?;
        self.counts.iter().position(|&c| c == max)
    }

    /// `[lo, hi)` of bin `i`.
    pub fn bin_range(&self, i: usize) -> (f64, f64) {
        (self.lo + i as f64 * self.width, self.lo + (i + 1) as f64 * self.width)
    }

    /// Largest topographic prominence among local maxima other than the mode,
    /// as a fraction of the mode's count.
    pub fn secondary_prominence(&self) -> f64 {
        let mut runs: Vec<usize> = self.counts.clone();
        runs.dedup();
        let Some(&top) = runs.iter().max() else { return 0.0 };
        if top == 0 {
            return 0.0;
        }
        let mode = runs.iter().position(|&c| c == top).expect("nonempty");
        let mut worst = 0usize;
        for i in 0..runs.len() {
            let left_lower = i == 0 || runs[i - 1] < runs[i];
            let right_lower = i + 1 == runs.len() || runs[i + 1] < runs[i];
            if i == mode || !(left_lower && right_lower) {
                continue;
            }
            let trough = |range: &mut dyn Iterator<Item = usize>| {
                let mut low = runs[i];
                for j in range {
                    if runs[j] >= runs[i] {
                        return Some(low);
                    }
                    low = low.min(runs[j]);
                }
                None
            };
            let left = trough(&mut (0..i).rev());
            let right = trough(&mut (i + 1..runs.len()));
            let base = match (left, right) {
                (Some(a), Some(b)) => a.max(b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => 0,
            };
            worst = worst.max(runs[i] - base);
        }
        worst as f64 / top as f64
    }

    /// One dominant peak: no secondary peak rises more than `tolerance` of the
    /// mode's height above its surrounding trough.
    pub fn is_unimodal(&self, tolerance: f64) -> bool {
        self.secondary_prominence() <= tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub seeds: Vec<Rational>,
    pub phases: Vec<Option<usize>>,
}

impl PhaseGrid {
    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// `matrix[i][j] = φ(seeds[i], seeds[j])`, `-1` where undefined.
    pub fn matrix(&self) -> Vec<Vec<i32>> {
        self.phases
            .iter()
            .map(|&pi| {
                self.phases
                    .iter()
                    .map(|&pj| phase_difference(pi, pj).map_or(-1, |d| d as i32))
                    .collect()
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.matrix() {
            let line: Vec<String> = row.iter().map(i32::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn is_antisymmetric(&self) -> bool {
        let m = self.matrix();
        let n = m.len();
        (0..n).all(|i| {
            (0..n).all(|j| match (m[i][j], m[j][i]) {
                (-1, -1) => true,
                (a, b) if a >= 0 && b >= 0 => (a + b) % CYCLE_LENGTH as i32 == 0,
                _ => false,
            })
        })
    }

    /// Size of the largest 4-connected set of equal, defined cells.
    pub fn largest_constant_block(&self) -> usize {
        let m = self.matrix();
        let n = m.len();
        let mut seen = vec![vec![false; n]; n];
        let mut best = 0;
        for i in 0..n {
            for j in 0..n {
                if seen[i][j] || m[i][j] < 0 {
                    continue;
                }
                let v = m[i][j];
                let mut stack = vec![(i, j)];
                seen[i][j] = true;
                let mut size = 0;
                while let Some((a, b)) = stack.pop() {
                    size += 1;
                    let mut push = |x: usize, y: usize| {
                        if !seen[x][y] && m[x][y] == v {
                            seen[x][y] = true;
                            stack.push((x, y));
                        }
                    };
                    if a > 0 {
                        push(a - 1, b);
                    }
                    if a + 1 < n {
                        push(a + 1, b);
                    }
                    if b > 0 {
                        push(a, b - 1);
                    }
                    if b + 1 < n {
                        push(a, b + 1);
                    }
                }
                best = best.max(size);
            }
        }
        best
    }

    /// Number of horizontally or vertically adjacent defined cell pairs that differ.
    pub fn jump_count(&self) -> usize {
        let m = self.matrix();
        let n = m.len();
        let mut jumps = 0;
        for i in 0..n {
            for j in 0..n {
                if m[i][j] < 0 {
                    continue;
                }
                if i + 1 < n && m[i + 1][j] >= 0 && m[i + 1][j] != m[i][j] {
                    jumps += 1;
                }
                if j + 1 < n && m[i][j + 1] >= 0 && m[i][j + 1] != m[i][j] {
                    jumps += 1;
                }
            }
        }
        jumps
    }
}

pub fn stopping_time_grid(lo: &Rational, hi: &Rational, step: &Rational, budget: usize) -> StoppingTimes {
    Classifier::default().stopping_time_grid(lo, hi, step, budget)
}

pub fn phase_grid(range: &HalfOpenInterval, resolution: usize, budget: usize) -> PhaseGrid {
    Classifier::default().phase_grid(range, resolution, budget)
}

/// The first `iters` orbit values `u_0 .. u_{iters-1}` as floats.
pub fn orbit_values_f64(seed: &Rational, iters: usize, params: &MapParams, mode: NumericMode) -> Vec<f64> {
    fn run<M: DeltaMap>(map: &M, seed: &Rational, iters: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(iters);
        let mut x = map.lift(seed);
        for _ in 0..iters {
            out.push(map.to_f64(&x));
            x = map.apply(&x);
        }
        out
    }
    match mode {
        NumericMode::Exact => run(&ExactMap::new(params.clone()), seed, iters),
        NumericMode::Float64 => run(&FloatMap::new(params), seed, iters),
    }
}

/// Rows `x y`, one per seed and iterate.
pub fn bifurcation_data(range: &HalfOpenInterval, seeds: usize, iters: usize, mode: NumericMode) -> Table {
    let grid = uniform_seeds(range, seeds);
    let orbits: Vec<Vec<f64>> =
        grid.par_iter().map(|s| orbit_values_f64(s, iters, &MapParams::delta(), mode)).collect();
    let mut t = Table::new(["x", "y"]);
    for (s, ys) in grid.iter().zip(orbits) {
        for y in ys {
            t.push(vec![Cell::Rational(s.clone()), Cell::Float(y)]);
        }
    }
    t
}

/// Streams the bifurcation rows to `path` (atomically) without materialising
/// a table; returns the row count.
pub fn write_bifurcation(
    path: &Path,
    range: &HalfOpenInterval,
    seeds: usize,
    iters: usize,
    mode: NumericMode,
) -> Result<usize, IoError> {
    let wrap = |source| IoError { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    let mut w = std::io::BufWriter::new(tmp);
    writeln!(w, "x y").map_err(wrap)?;
    let grid = uniform_seeds(range, seeds);
    let mut rows = 0;
    // bounded memory: one chunk of orbits at a time
    for chunk in grid.chunks(64) {
        let orbits: Vec<Vec<f64>> =
            chunk.par_iter().map(|s| orbit_values_f64(s, iters, &MapParams::delta(), mode)).collect();
        for (s, ys) in chunk.iter().zip(orbits) {
            let x = format_f64(s.to_f64());
            for y in ys {
                writeln!(w, "{} {}", x, format_f64(y)).map_err(wrap)?;
                rows += 1;
            }
        }
    }
    let tmp = w.into_inner().map_err(|e| wrap(e.into_error()))?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(rows)
}

/// Counts of values binned by `floor(y / bin)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueHistogram {
    pub bin: f64,
    pub counts: BTreeMap<i64, usize>,
    pub total: usize,
}

impl ValueHistogram {
    pub fn center(&self, key: i64) -> f64 {
        (key as f64 + 0.5) * self.bin
    }

    /// The `k` most frequent bins as `(center, count)`, ties by lower value.
    pub fn top(&self, k: usize) -> Vec<(f64, usize)> {
        let mut v: Vec<(i64, usize)> = self.counts.iter().map(|(&b, &c)| (b, c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter().take(k).map(|(b, c)| (self.center(b), c)).collect()
    }
}

pub fn bifurcation_histogram(
    range: &HalfOpenInterval,
    seeds: usize,
    iters: usize,
    mode: NumericMode,
    bin: f64,
) -> ValueHistogram {
    let grid = uniform_seeds(range, seeds);
    let partial: Vec<BTreeMap<i64, usize>> = grid
        .par_iter()
        .map(|s| {
            let mut m = BTreeMap::new();
            for y in orbit_values_f64(s, iters, &MapParams::delta(), mode) {
                *m.entry((y / bin).floor() as i64).or_insert(0) += 1;
            }
            m
        })
        .collect();
    let mut counts = BTreeMap::new();
    for m in partial {
        for (k, c) in m {
            *counts.entry(k).or_insert(0) += c;
        }
    }
    ValueHistogram { bin, total: seeds * iters, counts }
}
