//! Interval extension.
//!
//! Starting from a certified region `[a_in, b)`, the orbit of `b` is followed
//! exactly until it falls back into `[a_in, b)`. Along the way the branch
//! word is composed into an increasing affine `f`, and every `x` in `[b, m)`
//! shares that word and lands in `[a_in, b)`, where `m` is the smallest of
//! the solutions of `f_i(x) = next boundary above t_i` (one per step) and
//! `f(x) = b`. Repeating from `m` grows the certified region.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::affine::{Affine, BranchWord, DyadicAffine};
use crate::error::{AffineError, ProverError};
use crate::map::{branch_of, delta, BoundaryRule, Branch, MapParams};
use crate::rational::Rational;
use crate::table::{write_atomic, Cell, Table};

pub const DEFAULT_ORBIT_CAP: usize = 1_000_000;
pub const DEFAULT_EXTENSION_CAP: usize = 100_000;

/// Which constraint produced the new bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Binding {
    /// A branch boundary at this orbit step.
    Boundary { step: usize },
    /// The landing constraint `f(x) = b`.
    Landing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextBound {
    pub bound: Rational,
    pub word: BranchWord,
    pub binding: Binding,
}

/// Per-extension metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepMeta {
    pub orbit_len: usize,
    pub binding: Binding,
}

trait Accumulator {
    fn push(&mut self, b: Branch, params: &MapParams);
    fn solve(&self, y: &Rational) -> Rational;
}

impl Accumulator for DyadicAffine {
    fn push(&mut self, b: Branch, _: &MapParams) {
        DyadicAffine::push(self, b);
    }
    fn solve(&self, y: &Rational) -> Rational {
        DyadicAffine::solve(self, y)
    }
}

impl Accumulator for Affine {
    fn push(&mut self, b: Branch, params: &MapParams) {
        *self = Affine::push(self, b, params);
    }
    fn solve(&self, y: &Rational) -> Rational {
        Affine::solve(self, y).expect("branch slopes are positive")
    }
}

fn next_bound_with<A: Accumulator>(
    mut f: A,
    a_in: &Rational,
    b: &Rational,
    params: &MapParams,
    orbit_cap: usize,
) -> Result<NextBound, ProverError> {
    let mut t = b.clone();
    let mut word = BranchWord::new();
    let mut best: Option<(Rational, Binding)> = None;
    let consider = |x: Rational, binding: Binding, best: &mut Option<(Rational, Binding)>| {
        if best.as_ref().is_none_or(|(m, _)| x < *m) {
            *best = Some((x, binding));
        }
    };
    let mut step = 0usize;
    while step == 0 || !(&t < b && &t >= a_in) {
        if step >= orbit_cap {
            return Err(ProverError::OrbitCapExceeded { a_in: a_in.clone(), bound: b.clone(), cap: orbit_cap });
        }
        let boundary = params.next_boundary_above(&t);
        consider(f.solve(&boundary), Binding::Boundary { step }, &mut best);
        let br = branch_of(&t, params);
        f.push(br, params);
        word.push(br);
        t = delta(&t, params);
        step += 1;
    }
    consider(f.solve(b), Binding::Landing, &mut best);
    let (bound, binding) = best.expect("at least one constraint");
    Ok(NextBound { bound, word, binding })
}

/// One extension step from the certified region `[a_in, b)`.
pub fn next_bound(a_in: &Rational, b: &Rational, params: &MapParams, orbit_cap: usize) -> Result<NextBound, ProverError> {
    params.validate()?;
    if params.rule != BoundaryRule::HighAtThreshold {
        return Err(AffineError::UnsupportedBoundaryRule.into());
    }
    if b <= a_in {
        return Err(ProverError::InvalidRange { a_in: a_in.clone(), b_in: b.clone(), b_out: b.clone() });
    }
    if params.is_default() {
        next_bound_with(DyadicAffine::identity(), a_in, b, params, orbit_cap)
    } else {
        next_bound_with(Affine::identity(), a_in, b, params, orbit_cap)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProverState {
    pub a_in: Rational,
    pub bounds: Vec<Rational>,
    pub extensions: usize,
    #[serde(default)]
    pub steps: Vec<StepMeta>,
}

impl ProverState {
    pub fn new(a_in: Rational, b_in: Rational) -> Self {
        ProverState { a_in, bounds: vec![b_in], extensions: 0, steps: Vec::new() }
    }

    pub fn last_bound(&self) -> &Rational {
        self.bounds.last().expect("bounds never empty")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn load(path: &Path) -> Result<Self, ProverError> {
        let text = fs::read_to_string(path).map_err(|source| ProverError::Io { path: path.to_path_buf(), source })?;
        let state: ProverState = serde_json::from_str(&text)
            .map_err(|e| ProverError::Checkpoint { path: path.to_path_buf(), message: e.to_string() })?;
        state.validate().map_err(|message| ProverError::Checkpoint { path: path.to_path_buf(), message })?;
        Ok(state)
    }

    pub fn save(&self, path: &Path) -> Result<(), ProverError> {
        write_atomic(path, self.to_json().as_bytes()).map_err(Into::into)
    }

    fn validate(&self) -> Result<(), String> {
        if self.bounds.is_empty() {
            return Err("no bounds".into());
        }
        if self.bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err("bounds not strictly increasing".into());
        }
        if self.bounds[0] <= self.a_in {
            return Err("first bound not above a_in".into());
        }
        if self.extensions + 1 != self.bounds.len() {
            return Err("extension count disagrees with bounds".into());
        }
        if !self.steps.is_empty() && self.steps.len() != self.extensions {
            return Err("step metadata length disagrees with extensions".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    ReachedTarget,
    BudgetExhausted { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProverResult {
    pub state: ProverState,
    pub target: Rational,
    pub outcome: Outcome,
}

impl ProverResult {
    pub fn reached(&self) -> bool {
        self.outcome == Outcome::ReachedTarget
    }

    pub fn final_bound(&self) -> &Rational {
        self.state.last_bound()
    }

    /// The bound the last extension started from (the value a progress
    /// display shows when the loop exits).
    pub fn last_start(&self) -> &Rational {
        let b = &self.state.bounds;
        &b[b.len().saturating_sub(2)]
    }

    /// `(k, sup J_k)` for every `k`.
    pub fn plateaux(&self) -> Vec<(usize, Rational)> {
        self.state.bounds.iter().cloned().enumerate().collect()
    }

    pub fn plateaux_table(&self) -> Table {
        let mut t = Table::new(["x", "tof"]);
        for (k, b) in self.plateaux() {
            t.push(vec![Cell::Int(k as i64), Cell::Rational(b)]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProverConfig {
    pub params: MapParams,
    pub orbit_cap: usize,
    pub extension_cap: usize,
    pub checkpoint: Option<PathBuf>,
    /// Write the checkpoint every this many extensions (and always at the end).
    pub checkpoint_every: usize,
}

impl Default for ProverConfig {
    fn default() -> Self {
        ProverConfig {
            params: MapParams::delta(),
            orbit_cap: DEFAULT_ORBIT_CAP,
            extension_cap: DEFAULT_EXTENSION_CAP,
            checkpoint: None,
            checkpoint_every: 1,
        }
    }
}

/// Grow `[a_in, b_in)` until its upper end reaches `b_out`.
pub fn prove_interval(a_in: &Rational, b_in: &Rational, b_out: &Rational, config: &ProverConfig) -> Result<ProverResult, ProverError> {
    if !(a_in < b_in && b_in <= b_out) {
        return Err(ProverError::InvalidRange { a_in: a_in.clone(), b_in: b_in.clone(), b_out: b_out.clone() });
    }
    run(ProverState::new(a_in.clone(), b_in.clone()), b_out, config)
}

/// Continue a run from a checkpoint file.
pub fn resume(checkpoint: &Path, b_out: &Rational, config: &ProverConfig) -> Result<ProverResult, ProverError> {
    let state = ProverState::load(checkpoint)?;
    run(state, b_out, config)
}

fn run(mut state: ProverState, b_out: &Rational, config: &ProverConfig) -> Result<ProverResult, ProverError> {
    let save = |state: &ProverState| -> Result<(), ProverError> {
        match &config.checkpoint {
            Some(path) => state.save(path),
            None => Ok(()),
        }
    };
    let mut since_save = 0usize;
    let outcome = loop {
        if state.last_bound() >= b_out {
            break Outcome::ReachedTarget;
        }
        if state.extensions >= config.extension_cap {
            let err = ProverError::ExtensionCapExceeded { cap: config.extension_cap, bound: state.last_bound().clone() };
            break Outcome::BudgetExhausted { reason: err.to_string() };
        }
        let nb = match next_bound(&state.a_in, state.last_bound(), &config.params, config.orbit_cap) {
            Ok(nb) => nb,
            Err(e) if e.is_exhaustion() => break Outcome::BudgetExhausted { reason: e.to_string() },
            Err(e) => return Err(e),
        };
        state.steps.push(StepMeta { orbit_len: nb.word.len(), binding: nb.binding });
        state.bounds.push(nb.bound);
        state.extensions += 1;
        since_save += 1;
        if since_save >= config.checkpoint_every.max(1) {
            save(&state)?;
            since_save = 0;
        }
    };
    save(&state)?;
    Ok(ProverResult { state, target: b_out.clone(), outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::affine_from_word;
    use crate::map::delta0;

    fn q(n: i64, d: i64) -> Rational {
        Rational::frac_of(n, d)
    }

    #[test]
    fn hand_executed_step() {
        let nb = next_bound(&q(3, 2), &q(3, 1), &MapParams::delta(), 100).unwrap();
        assert_eq!(nb.bound, q(7, 2));
        assert_eq!(nb.word.to_string(), "L");
        assert_eq!(nb.binding, Binding::Boundary { step: 0 });
    }

    #[test]
    fn first_lemma_extension_is_sound() {
        let a = q(3, 2);
        let b = q(41, 27);
        let nb = next_bound(&a, &b, &MapParams::delta(), 10_000).unwrap();
        assert!(nb.bound > b);
        let f = affine_from_word(&nb.word);
        let width = &nb.bound - &b;
        for i in 0..100 {
            let x = &b + &(&width * &q(i, 100));
            let mut y = x.clone();
            for letter in nb.word.iter() {
                assert_eq!(branch_of(&y, &MapParams::delta()), letter);
                y = delta0(&y);
            }
            assert_eq!(f.apply(&x), y);
            assert!(a <= y && y < b, "x = {x} landed at {y}");
        }
    }

    #[test]
    fn binding_constraint_is_exact() {
        let nb = next_bound(&q(3, 2), &q(41, 27), &MapParams::delta(), 10_000).unwrap();
        let f = affine_from_word(&nb.word);
        match nb.binding {
            Binding::Landing => assert_eq!(f.apply(&nb.bound), q(41, 27)),
            Binding::Boundary { step } => {
                let fi = affine_from_word(&nb.word.prefix(step));
                let v = fi.apply(&nb.bound);
                assert!((&v + &v).is_integer(), "{v} is not a half-integer");
            }
        }
    }

    #[test]
    fn expanding_params_exhaust_the_orbit_cap() {
        let params = MapParams::new(
            q(1, 2),
            crate::map::BranchAffine::new(q(2, 1), Rational::zero()),
            crate::map::BranchAffine::new(q(3, 1), Rational::zero()),
            BoundaryRule::HighAtThreshold,
        )
        .unwrap();
        let err = next_bound(&q(1, 1), &q(2, 1), &params, 500).unwrap_err();
        assert!(matches!(err, ProverError::OrbitCapExceeded { cap: 500, .. }));
        let cfg = ProverConfig { params, orbit_cap: 500, ..Default::default() };
        let r = prove_interval(&q(1, 1), &q(2, 1), &q(3, 1), &cfg).unwrap();
        assert!(matches!(r.outcome, Outcome::BudgetExhausted { .. }));
    }

    #[test]
    fn target_already_met() {
        let r = prove_interval(&q(3, 2), &q(41, 27), &q(41, 27), &ProverConfig::default()).unwrap();
        assert!(r.reached());
        assert_eq!(r.state.extensions, 0);
    }

    #[test]
    fn invalid_ranges_rejected() {
        let cfg = ProverConfig::default();
        assert!(prove_interval(&q(2, 1), &q(1, 1), &q(3, 1), &cfg).is_err());
        assert!(prove_interval(&q(1, 1), &q(3, 1), &q(2, 1), &cfg).is_err());
        assert!(next_bound(&q(2, 1), &q(2, 1), &MapParams::delta(), 10).is_err());
    }

    #[test]
    fn extension_cap_is_reported() {
        let cfg = ProverConfig { extension_cap: 5, ..Default::default() };
        let r = prove_interval(&q(3, 2), &q(41, 27), &q(21, 1), &cfg).unwrap();
        assert!(matches!(r.outcome, Outcome::BudgetExhausted { .. }));
        assert_eq!(r.state.extensions, 5);
    }

    #[test]
    fn general_path_matches_dyadic_path() {
        // same map, forced through the general rational accumulator
        let params = MapParams::delta();
        let mut b = q(41, 27);
        for _ in 0..20 {
            let fast = next_bound(&q(3, 2), &b, &params, 10_000).unwrap();
            let slow = next_bound_with(Affine::identity(), &q(3, 2), &b, &params, 10_000).unwrap();
            assert_eq!(fast, slow);
            b = fast.bound;
        }
    }
}
