use demorgan_core::classifier::classify_necsuf;
use demorgan_core::io::{read_jsonl, write_jsonl, Report};
use demorgan_core::{Error, TermStream};
use proptest::prelude::*;

proptest! {
    #[test]
    fn jsonl_round_trip_is_exact(start in 1u64..1000, logs in proptest::collection::vec(-700.0f64..700.0, 1..200)) {
        let ts = TermStream::from_logs(start, logs).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&ts, &mut buf).unwrap();
        let back = read_jsonl(buf.as_slice()).unwrap();
        prop_assert_eq!(back.start_index(), ts.start_index());
        prop_assert_eq!(back.log_terms(), ts.log_terms());
    }
}

#[test]
fn raw_terms_and_errors() {
    let ts = read_jsonl("{\"n\": 3, \"a\": 0.5}\n\n{\"n\": 4, \"a\": 0.25}\n".as_bytes()).unwrap();
    assert_eq!((ts.start_index(), ts.end_index()), (3, 4));
    assert!((ts.ln_a(4).unwrap() - 0.25f64.ln()).abs() < 1e-15);
    let gap = read_jsonl("{\"n\": 1, \"a\": 1}\n{\"n\": 3, \"a\": 1}\n".as_bytes());
    assert!(matches!(gap, Err(Error::Parse { line: 2, .. })), "{gap:?}");
    let neg = read_jsonl("{\"n\": 1, \"a\": -1}\n".as_bytes());
    assert!(matches!(neg, Err(Error::Parse { line: 1, .. })), "{neg:?}");
}

#[test]
fn report_round_trip() {
    let ts = TermStream::from_logs(1, (1..=100_000).map(|n| -2.0 * (n as f64).ln()).collect()).unwrap();
    let v = classify_necsuf(&ts).unwrap();
    let r = Report::from_verdict(&v, Some("report.traces.csv".into()));
    let text = r.to_json();
    let back = Report::from_json(&text).unwrap();
    assert_eq!(back.to_json(), text);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["decision", "theorem", "level", "certificate", "horizon", "margins", "traces_path"] {
        assert!(value.get(key).is_some(), "missing {key}");
    }
}
