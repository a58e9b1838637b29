use fracdelta::prover::{prove_interval, resume, ProverConfig, ProverState};
use fracdelta::{ProverError, Rational};

fn r(s: &str) -> Rational {
    s.parse().unwrap()
}

#[test]
fn interrupted_run_resumes_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let full_ck = dir.path().join("full.json");
    let part_ck = dir.path().join("part.json");

    let full = prove_interval(
        &r("3/2"),
        &r("41/27"),
        &r("21"),
        &ProverConfig { checkpoint: Some(full_ck.clone()), ..ProverConfig::default() },
    )
    .unwrap();
    assert!(full.reached());

    // stop early, then carry on from the saved state
    let partial = prove_interval(
        &r("3/2"),
        &r("41/27"),
        &r("21"),
        &ProverConfig { checkpoint: Some(part_ck.clone()), extension_cap: 100, checkpoint_every: 7, ..ProverConfig::default() },
    )
    .unwrap();
    assert!(!partial.reached());
    assert_eq!(ProverState::load(&part_ck).unwrap().extensions, 100);

    let resumed = resume(&part_ck, &r("21"), &ProverConfig { checkpoint: Some(part_ck.clone()), ..ProverConfig::default() }).unwrap();
    assert_eq!(resumed.state, full.state);
    assert_eq!(std::fs::read(&part_ck).unwrap(), std::fs::read(&full_ck).unwrap());
}

#[test]
fn corrupt_checkpoints_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"a_in":"3/2","bounds":["2","41/27"],"extensions":1}"#).unwrap();
    assert!(matches!(resume(&path, &r("21"), &ProverConfig::default()), Err(ProverError::Checkpoint { .. })));
    std::fs::write(&path, "not json").unwrap();
    assert!(matches!(resume(&path, &r("21"), &ProverConfig::default()), Err(ProverError::Checkpoint { .. })));
    let missing = dir.path().join("missing.json");
    assert!(matches!(resume(&missing, &r("21"), &ProverConfig::default()), Err(ProverError::Io { .. })));
}
