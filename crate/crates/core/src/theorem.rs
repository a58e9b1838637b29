//! The fixed-point, trace and contraction checks, and the staged pipeline that
//! certifies every seed in `[0, upper]`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::affine::{
    affine_from_word, contraction_check, cycle_fixed_point, lemma_interval, trace_interval, Contraction, DyadicAffine,
    HalfOpenInterval, Trace,
};
use crate::error::{AffineError, ProverError};
use crate::map::{delta0, MapParams};
use crate::piecewise::{lemma5_check, Lemma5Report};
use crate::prover::{prove_interval, ProverConfig, ProverResult};
use crate::rational::{pow2, pow3, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub seed: Rational,
    pub image: Rational,
    pub fixed_point_ok: bool,
}

/// `delta^29(x0) == x0`, exactly.
pub fn fixed_point_check() -> FixedPointReport {
    let seed = cycle_fixed_point();
    let mut x = seed.clone();
    for _ in 0..29 {
        x = delta0(&x);
    }
    FixedPointReport { fixed_point_ok: x == seed, image: x, seed }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceReport {
    pub trace: Trace,
    pub h_count: usize,
    pub l_count: usize,
    pub composed: DyadicAffine,
    /// `composed == (3^17 x + 616136875) / 2^29`.
    pub composed_ok: bool,
}

pub fn trace_check() -> Result<TraceReport, AffineError> {
    let trace = trace_interval(&lemma_interval(), 29, &MapParams::delta())?;
    let composed = affine_from_word(&trace.word);
    let composed_ok = composed.pow3 == 17 && composed.pow2 == 29 && composed.offset == 616136875.into();
    Ok(TraceReport {
        h_count: trace.word.count_h(),
        l_count: trace.word.count_l(),
        composed,
        composed_ok,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub contraction: Contraction,
    /// Slope equals `3^17 / 2^29` exactly.
    pub slope_ok: bool,
}

pub fn contraction_report() -> Result<ContractionReport, AffineError> {
    let t = trace_check()?;
    let c = contraction_check(&t.composed.to_affine(), &lemma_interval())?;
    let expected = Rational::from_integer(pow3(17)) / Rational::from_integer(pow2(29));
    Ok(ContractionReport { slope_ok: c.slope == expected && c.attractive, contraction: c })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifiedInterval {
    pub lo: Rational,
    pub hi: Rational,
    /// Closed on the right (only the max-range interval is).
    pub closed: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub upper: Rational,
    pub stages: Vec<Stage>,
    pub certified: Vec<CertifiedInterval>,
    /// `(k, sup J_k)` of each prover run, in order.
    pub plateaux: Vec<Vec<(usize, Rational)>>,
    pub passed: bool,
    /// First failing stage's error, if any.
    pub failure: Option<String>,
    /// Whether a prover cap, rather than a failed check, stopped the pipeline.
    pub exhausted: bool,
}

impl TheoremReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// `[0, upper]` is covered by the certified intervals.
    pub fn covers_upper(&self) -> bool {
        let mut reach = Rational::zero();
        let mut closed = false;
        let mut ivs = self.certified.clone();
        ivs.sort_by(|a, b| a.lo.cmp(&b.lo));
        for iv in ivs {
            // every interval contains its left end
            if iv.lo > reach {
                break;
            }
            if iv.hi > reach {
                reach = iv.hi.clone();
                closed = iv.closed;
            } else if iv.hi == reach {
                closed |= iv.closed;
            }
        }
        reach > self.upper || (reach == self.upper && closed)
    }
}

fn prover_detail(r: &ProverResult) -> Value {
    json!({
        "a_in": r.state.a_in,
        "b_in": r.state.bounds[0],
        "target": r.target,
        "extensions": r.state.extensions,
        "final_bound": r.final_bound(),
        "final_bound_decimal": r.final_bound().to_decimal(6),
        "last_start_decimal": r.last_start().to_decimal(6),
        "reached": r.reached(),
    })
}

/// Runs every stage in order; later stages are skipped after a failure but
/// everything gathered so far is kept.
pub fn theorem_pipeline(upper: &Rational, config: &ProverConfig) -> TheoremReport {
    let mut report = TheoremReport {
        upper: upper.clone(),
        stages: Vec::new(),
        certified: Vec::new(),
        plateaux: Vec::new(),
        passed: false,
        failure: None,
        exhausted: false,
    };
    if let Err(e) = stages(upper, config, &mut report) {
        report.exhausted = e.is_exhaustion();
        report.failure = Some(e.to_string());
        return report;
    }
    report.passed = report.stages.iter().all(|s| s.passed) && report.covers_upper();
    if !report.passed && report.failure.is_none() {
        report.failure = Some("certified intervals do not cover [0, upper]".into());
    }
    report
}

fn fail(report: &mut TheoremReport, name: &str, detail: Value) -> ProverError {
    report.stages.push(Stage { name: name.into(), passed: false, detail });
    ProverError::StageFailed(name.into())
}

fn stages(upper: &Rational, config: &ProverConfig, report: &mut TheoremReport) -> Result<(), ProverError> {
    if *upper < 20 {
        return Err(ProverError::InvalidRange { a_in: Rational::half(), b_in: Rational::from(20), b_out: upper.clone() });
    }
    let i = lemma_interval();
    report.certified.push(CertifiedInterval {
        lo: Rational::zero(),
        hi: Rational::half(),
        closed: false,
        reason: "zero basin".into(),
    });

    let fp = fixed_point_check();
    if !fp.fixed_point_ok {
        return Err(fail(report, "fixed_point", json!(fp)));
    }
    report.stages.push(Stage { name: "fixed_point".into(), passed: true, detail: json!(fp) });

    let tr = trace_check()?;
    let trace_ok = tr.composed_ok && tr.h_count == 17 && tr.l_count == 12;
    let trace_detail = json!({
        "word": tr.trace.word, "h": tr.h_count, "l": tr.l_count,
        "composed": tr.composed.to_string(), "intervals": tr.trace.intervals,
    });
    if !trace_ok {
        return Err(fail(report, "trace", trace_detail));
    }
    report.stages.push(Stage { name: "trace".into(), passed: true, detail: trace_detail });

    let cr = contraction_report()?;
    if !cr.slope_ok {
        return Err(fail(report, "contraction", json!(cr)));
    }
    report.stages.push(Stage { name: "contraction".into(), passed: true, detail: json!(cr) });
    report.certified.push(CertifiedInterval {
        lo: i.lo.clone(),
        hi: i.hi.clone(),
        closed: false,
        reason: "attracted to the 29-cycle".into(),
    });

    let first = prove_interval(&i.lo, &i.hi, &Rational::from(21), config)?;
    report.plateaux.push(first.plateaux());
    let first_ok = first.reached();
    report.stages.push(Stage { name: "extend_21".into(), passed: first_ok, detail: prover_detail(&first) });
    if !first_ok {
        return Err(ProverError::ExtensionCapExceeded { cap: config.extension_cap, bound: first.final_bound().clone() });
    }
    report.certified.push(CertifiedInterval {
        lo: i.lo.clone(),
        hi: first.final_bound().clone(),
        closed: false,
        reason: format!("lands in {}", HalfOpenInterval { lo: i.lo.clone(), hi: i.hi.clone() }),
    });

    let l5: Lemma5Report = lemma5_check()?;
    report.stages.push(Stage { name: "max_range".into(), passed: l5.contained, detail: json!(l5) });
    report.certified.push(CertifiedInterval {
        lo: Rational::half(),
        hi: Rational::frac_of(3, 2),
        closed: true,
        reason: "some iterate in [3/2, 20]".into(),
    });

    // [0, upper] is already covered when the first run went past it
    if upper < first.final_bound() {
        return Ok(());
    }
    let b_out = upper + &Rational::one();
    let second = prove_interval(&Rational::half(), &Rational::from(20), &b_out, config)?;
    report.plateaux.push(second.plateaux());
    let second_ok = second.reached();
    report.stages.push(Stage { name: "extend_upper".into(), passed: second_ok, detail: prover_detail(&second) });
    if !second_ok {
        return Err(ProverError::ExtensionCapExceeded { cap: config.extension_cap, bound: second.final_bound().clone() });
    }
    report.certified.push(CertifiedInterval {
        lo: Rational::from(20),
        hi: second.final_bound().clone(),
        closed: false,
        reason: "lands in [1/2, 20)".into(),
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma_checks() {
        assert!(fixed_point_check().fixed_point_ok);
        let t = trace_check().unwrap();
        assert!(t.composed_ok);
        assert_eq!((t.h_count, t.l_count), (17, 12));
        assert_eq!(t.trace.intervals.len(), 30);
        let c = contraction_report().unwrap();
        assert!(c.slope_ok);
        assert!(lemma_interval().contains(&c.contraction.fixed_point));
    }

    #[test]
    fn pipeline_to_twenty_uses_one_run() {
        let r = theorem_pipeline(&Rational::from(20), &ProverConfig::default());
        assert!(r.passed, "{:?}", r.failure);
        assert_eq!(r.plateaux.len(), 1);
        assert!(r.stages.iter().all(|s| s.name != "extend_upper"));
        assert!(r.covers_upper());
    }

    #[test]
    fn partial_report_survives_a_cap() {
        let config = ProverConfig { extension_cap: 10, ..ProverConfig::default() };
        let r = theorem_pipeline(&Rational::from(20), &config);
        assert!(!r.passed);
        assert!(r.exhausted);
        assert_eq!(r.stages.len(), 4);
        assert!(r.stages[..3].iter().all(|s| s.passed));
        assert!(!r.stages[3].passed);
        assert_eq!(r.plateaux[0].len(), 11);
    }

    #[test]
    fn below_twenty_is_rejected() {
        let r = theorem_pipeline(&Rational::from(19), &ProverConfig::default());
        assert!(!r.passed);
        assert!(r.stages.is_empty());
    }
}
