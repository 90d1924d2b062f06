use sac_oie::synth::{chunker_grad_case, oie_grad_case, GRAD_OPTIONS};

const CASES: u64 = 25;

#[test]
fn chunker_loss_matches_central_differences() {
    for seed in 0..CASES {
        let r = chunker_grad_case(seed, GRAD_OPTIONS).unwrap();
        assert!(r.checked > 0);
        assert!(r.passed(), "seed {seed}: {:?}", r.failures);
    }
}

#[test]
fn extractor_loss_matches_central_differences() {
    for seed in 0..CASES {
        let r = oie_grad_case(seed, GRAD_OPTIONS).unwrap();
        assert!(r.checked > 0);
        assert!(r.passed(), "seed {seed}: {:?}", r.failures);
    }
}

#[test]
fn zero_tolerance_reports_mismatches() {
    let mut opts = GRAD_OPTIONS;
    opts.tolerance = 0.0;
    let r = oie_grad_case(0, opts).unwrap();
    assert!(!r.passed());
}
