//! Exact piecewise-affine functions on a half-open domain.

use serde::{Deserialize, Serialize};

use crate::affine::{Affine, HalfOpenInterval};
use crate::error::{AffineError, ProverError};
use crate::map::{branch_of, delta0, BoundaryRule, MapParams};
use crate::rational::Rational;
use crate::table::{Cell, Table};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Piece {
    pub interval: HalfOpenInterval,
    pub map: Affine,
}

/// Non-decreasing affine pieces partitioning `domain` in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiecewiseAffine {
    domain: HalfOpenInterval,
    pieces: Vec<Piece>,
}

impl PiecewiseAffine {
    pub fn new(domain: HalfOpenInterval, pieces: Vec<Piece>) -> Result<Self, ProverError> {
        let bad = |m: &str| Err(ProverError::InvalidPiecewise(m.to_string()));
        let (Some(first), Some(last)) = (pieces.first(), pieces.last()) else {
            return bad("no pieces");
        };
        if first.interval.lo != domain.lo || last.interval.hi != domain.hi {
            return bad("pieces do not span the domain");
        }
        if pieces.windows(2).any(|w| w[0].interval.hi != w[1].interval.lo) {
            return bad("pieces leave a gap or overlap");
        }
        if pieces.iter().any(|p| p.interval.lo >= p.interval.hi) {
            return bad("empty piece");
        }
        if pieces.iter().any(|p| p.map.slope.is_negative()) {
            return bad("decreasing piece");
        }
        Ok(PiecewiseAffine { domain, pieces })
    }

    pub fn identity(domain: HalfOpenInterval) -> Self {
        let pieces = vec![Piece { interval: domain.clone(), map: Affine::identity() }];
        PiecewiseAffine { domain, pieces }
    }

    pub fn constant(domain: HalfOpenInterval, value: Rational) -> Self {
        let pieces = vec![Piece { interval: domain.clone(), map: Affine::constant(value) }];
        PiecewiseAffine { domain, pieces }
    }

    pub fn domain(&self) -> &HalfOpenInterval {
        &self.domain
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn eval(&self, x: &Rational) -> Option<Rational> {
        let idx = self.pieces.partition_point(|p| &p.interval.hi <= x);
        let p = self.pieces.get(idx)?;
        p.interval.contains(x).then(|| p.map.apply(x))
    }

    pub fn breakpoints(&self) -> Vec<Rational> {
        self.pieces.iter().map(|p| p.interval.lo.clone()).collect()
    }

    /// Infimum and supremum over the domain.
    pub fn range(&self) -> Range {
        let mut inf: Option<(Rational, Rational)> = None;
        let mut sup: Option<(Rational, Rational, bool)> = None;
        for p in &self.pieces {
            let lo_val = p.map.apply(&p.interval.lo);
            if inf.as_ref().is_none_or(|(v, _)| lo_val < *v) {
                inf = Some((lo_val.clone(), p.interval.lo.clone()));
            }
            // non-decreasing: the sup of a piece is its right-end limit,
            // attained only when the piece is constant
            let attained = p.map.slope.is_zero();
            let (hi_val, at) = if attained {
                (lo_val, p.interval.lo.clone())
            } else {
                (p.map.apply(&p.interval.hi), p.interval.hi.clone())
            };
            let better = sup.as_ref().is_none_or(|(v, _, _)| hi_val > *v);
            if better {
                sup = Some((hi_val, at, attained));
            } else if let Some((v, _, was)) = sup.as_mut() {
                if hi_val == *v && attained {
                    *was = true;
                }
            }
        }
        let (inf, inf_at) = inf.expect("non-empty");
        let (sup, sup_at, sup_attained) = sup.expect("non-empty");
        Range { inf, inf_at, sup, sup_at, sup_attained }
    }

    fn merged(domain: HalfOpenInterval, pieces: Vec<Piece>) -> Self {
        let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
        for p in pieces {
            match out.last_mut() {
                Some(last) if last.map == p.map && last.interval.hi == p.interval.lo => last.interval.hi = p.interval.hi,
                _ => out.push(p),
            }
        }
        PiecewiseAffine { domain, pieces: out }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    pub inf: Rational,
    pub inf_at: Rational,
    pub sup: Rational,
    /// Where the supremum is attained, or the right end of the piece whose limit it is.
    pub sup_at: Rational,
    pub sup_attained: bool,
}

/// `delta ∘ f`, splitting each piece at preimages of branch boundaries.
pub fn pw_apply_delta(f: &PiecewiseAffine, params: &MapParams) -> Result<PiecewiseAffine, AffineError> {
    if params.rule != BoundaryRule::HighAtThreshold {
        return Err(AffineError::UnsupportedBoundaryRule);
    }
    let mut pieces = Vec::new();
    for p in &f.pieces {
        let g = &p.map;
        let mut cur = p.interval.lo.clone();
        while cur < p.interval.hi {
            let y = g.apply(&cur);
            let end = match g.solve(&params.next_boundary_above(&y)) {
                Some(x) if x < p.interval.hi => x,
                _ => p.interval.hi.clone(),
            };
            let map = g.push(branch_of(&y, params), params);
            pieces.push(Piece { interval: HalfOpenInterval { lo: cur, hi: end.clone() }, map });
            cur = end;
        }
    }
    Ok(PiecewiseAffine::merged(f.domain.clone(), pieces))
}

/// Pointwise maximum over a common domain.
pub fn pw_max(fs: &[PiecewiseAffine]) -> Result<PiecewiseAffine, ProverError> {
    let first = fs.first().ok_or_else(|| ProverError::InvalidPiecewise("empty list".into()))?;
    if fs.iter().any(|f| f.domain != first.domain) {
        return Err(ProverError::DomainMismatch);
    }
    let mut cuts: Vec<Rational> = fs.iter().flat_map(|f| f.breakpoints()).collect();
    cuts.sort();
    cuts.dedup();
    cuts.push(first.domain.hi.clone());

    let mut cursors = vec![0usize; fs.len()];
    let mut pieces = Vec::new();
    for w in cuts.windows(2) {
        let (s, e) = (&w[0], &w[1]);
        let active: Vec<&Affine> = fs
            .iter()
            .zip(cursors.iter_mut())
            .map(|(f, c)| {
                while &f.pieces[*c].interval.hi <= s {
                    *c += 1;
                }
                &f.pieces[*c].map
            })
            .collect();
        let mut splits = vec![s.clone()];
        for (i, a) in active.iter().enumerate() {
            for b in &active[i + 1..] {
                if a.slope != b.slope {
                    let x = (&b.intercept - &a.intercept) / (&a.slope - &b.slope);
                    if s < &x && &x < e {
                        splits.push(x);
                    }
                }
            }
        }
        splits.sort();
        splits.dedup();
        splits.push(e.clone());
        for sw in splits.windows(2) {
            let mid = (&sw[0] + &sw[1]) / Rational::from_integer(2);
            let best = active
                .iter()
                .max_by(|a, b| a.apply(&mid).cmp(&b.apply(&mid)).then(b.slope.cmp(&a.slope)))
                .expect("non-empty");
            pieces.push(Piece {
                interval: HalfOpenInterval { lo: sw[0].clone(), hi: sw[1].clone() },
                map: (*best).clone(),
            });
        }
    }
    Ok(PiecewiseAffine::merged(first.domain.clone(), pieces))
}

/// `[delta^0, ..., delta^depth]` on `domain` for the default map.
pub fn delta_powers(domain: &HalfOpenInterval, depth: usize) -> Vec<PiecewiseAffine> {
    let params = MapParams::delta();
    let mut out = vec![PiecewiseAffine::identity(domain.clone())];
    for _ in 0..depth {
        let next = pw_apply_delta(out.last().expect("non-empty"), &params).expect("default rule");
        out.push(next);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma5Report {
    pub range: Range,
    pub pieces: usize,
    /// `max_l delta^l(1/2)`.
    pub value_at_left: Rational,
    /// `max_l delta^l(3/2)`, the closed right endpoint handled separately.
    pub value_at_right: Rational,
    pub lower: Rational,
    pub upper: Rational,
    pub contained: bool,
    pub strictly_contained: bool,
}

pub fn lemma5_max() -> PiecewiseAffine {
    let domain = HalfOpenInterval { lo: Rational::half(), hi: Rational::frac_of(3, 2) };
    pw_max(&delta_powers(&domain, 6)).expect("common domain")
}

/// Exact range of `max(delta^0..delta^6)` on `[1/2, 3/2]` against `[3/2, 20]`.
pub fn lemma5_check() -> Result<Lemma5Report, ProverError> {
    let lower = Rational::frac_of(3, 2);
    let upper = Rational::from_integer(20);
    let f = lemma5_max();
    let range = f.range();
    let right = {
        let mut x = lower.clone();
        let mut best = x.clone();
        for _ in 0..6 {
            x = delta0(&x);
            best = best.max(x.clone());
        }
        best
    };
    let value_at_left = f.eval(&Rational::half()).expect("in domain");
    if range.inf < lower {
        return Err(ProverError::CheckFailed { witness: range.inf_at, value: range.inf });
    }
    if range.sup > upper {
        return Err(ProverError::CheckFailed { witness: range.sup_at, value: range.sup });
    }
    if right < lower || right > upper {
        return Err(ProverError::CheckFailed { witness: lower, value: right });
    }
    let strictly = range.inf > lower && range.sup < upper && right > lower && right < upper;
    Ok(Lemma5Report {
        pieces: f.pieces().len(),
        range,
        value_at_left,
        value_at_right: right,
        lower,
        upper,
        contained: true,
        strictly_contained: strictly,
    })
}

/// Plot data with columns `x y min max` sampled on `samples` evenly spaced points.
pub fn lemma5_table(samples: usize) -> Table {
    let f = lemma5_max();
    let mut t = Table::new(["x", "y", "min", "max"]);
    let lo = Rational::half();
    let n = samples.max(2);
    for i in 0..n {
        let x = &lo + &Rational::frac_of(i as i64, n as i64);
        let y = f.eval(&x).expect("in domain");
        t.push(vec![Cell::Rational(x), Cell::Rational(y), Cell::Float(1.5), Cell::Float(20.0)]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::frac_of(n, d)
    }

    fn iv(a: Rational, b: Rational) -> HalfOpenInterval {
        HalfOpenInterval::new(a, b).unwrap()
    }

    #[test]
    fn one_application_splits_at_one() {
        let f = PiecewiseAffine::identity(iv(q(1, 2), q(3, 2)));
        let g = pw_apply_delta(&f, &MapParams::delta()).unwrap();
        assert_eq!(g.pieces().len(), 2);
        assert_eq!(g.pieces()[0].interval, iv(q(1, 2), q(1, 1)));
        assert_eq!(g.pieces()[0].map, Affine::new(q(3, 2), q(1, 2)));
        assert_eq!(g.pieces()[1].interval, iv(q(1, 1), q(3, 2)));
        assert_eq!(g.pieces()[1].map, Affine::new(q(1, 2), q(0, 1)));
    }

    #[test]
    fn zero_basin_is_one_piece() {
        let f = PiecewiseAffine::identity(iv(q(0, 1), q(1, 2)));
        let g = pw_apply_delta(&f, &MapParams::delta()).unwrap();
        assert_eq!(g.pieces().len(), 1);
        assert_eq!(g.pieces()[0].map, Affine::new(q(1, 2), q(0, 1)));
    }

    #[test]
    fn max_with_constant() {
        let d = iv(q(1, 2), q(3, 2));
        let m = pw_max(&[PiecewiseAffine::identity(d.clone()), PiecewiseAffine::constant(d.clone(), q(3, 2))]).unwrap();
        assert_eq!(m.pieces().len(), 1);
        assert_eq!(m.pieces()[0].map, Affine::constant(q(3, 2)));
        let single = PiecewiseAffine::identity(d);
        assert_eq!(pw_max(std::slice::from_ref(&single)).unwrap(), single);
    }

    #[test]
    fn max_rejects_mismatched_domains() {
        let a = PiecewiseAffine::identity(iv(q(0, 1), q(1, 1)));
        let b = PiecewiseAffine::identity(iv(q(0, 1), q(2, 1)));
        assert!(matches!(pw_max(&[a, b]), Err(ProverError::DomainMismatch)));
        assert!(pw_max(&[]).is_err());
    }

    #[test]
    fn max_splits_at_crossings() {
        let d = iv(q(0, 1), q(2, 1));
        let rising = PiecewiseAffine::identity(d.clone());
        let flat = PiecewiseAffine::constant(d, q(1, 1));
        let m = pw_max(&[rising, flat]).unwrap();
        assert_eq!(m.breakpoints(), vec![q(0, 1), q(1, 1)]);
        assert_eq!(m.eval(&q(1, 2)), Some(q(1, 1)));
        assert_eq!(m.eval(&q(3, 2)), Some(q(3, 2)));
    }

    #[test]
    fn construction_validates_partition() {
        let d = iv(q(0, 1), q(2, 1));
        let gap = vec![
            Piece { interval: iv(q(0, 1), q(1, 1)), map: Affine::identity() },
            Piece { interval: iv(q(3, 2), q(2, 1)), map: Affine::identity() },
        ];
        assert!(PiecewiseAffine::new(d.clone(), gap).is_err());
        let neg = vec![Piece { interval: d.clone(), map: Affine::new(q(-1, 1), q(0, 1)) }];
        assert!(PiecewiseAffine::new(d, neg).is_err());
    }

    #[test]
    fn lemma5_left_value() {
        let r = lemma5_check().unwrap();
        assert_eq!(r.value_at_left, q(367, 128));
        assert!(r.contained);
        assert!(r.range.inf >= q(3, 2) && r.range.sup <= q(20, 1));
    }
}
