//! File formats: term streams as JSONL, s-traces as CSV, and the JSON report.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bdp::{BdpVerdict, ChainDecision, SimplifiedConditions, SimulationEstimate};
use crate::classifier::{Certificate, Decision, EscalationPath, Test, Verdict};
use crate::error::{Error, Result};
use crate::series::{Mode, SLevelTrace, TermStream};

#[derive(Serialize)]
struct LnRecord {
    n: u64,
    ln_a: f64,
}

/// Reads `{"n": int, "ln_a": float}` or `{"n": int, "a": float}` records,
/// one per line. Indices must be consecutive. Blank lines are skipped.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<TermStream> {
    let mut start = None;
    let mut logs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let v: Value = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let obj = v.as_object().ok_or_else(|| err("record is not a JSON object".into()))?;
        let n = obj
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| err("missing or non-integer \"n\"".into()))?;
        let ln_a = match (obj.get("ln_a"), obj.get("a")) {
            (Some(l), None) => l.as_f64().ok_or_else(|| err("\"ln_a\" is not a number".into()))?,
            (None, Some(a)) => {
                let a = a.as_f64().ok_or_else(|| err("\"a\" is not a number".into()))?;
                if !(a > 0.0) {
                    return Err(err(format!("term a = {a} is not positive")));
                }
                a.ln()
            }
            (Some(_), Some(_)) => return Err(err("give either \"ln_a\" or \"a\", not both".into())),
            (None, None) => return Err(err("missing \"ln_a\" or \"a\"".into())),
        };
        if !ln_a.is_finite() {
            return Err(err("term is not finite".into()));
        }
        match start {
            None => {
                if n == 0 {
                    return Err(err("indices start at 1".into()));
                }
                start = Some(n);
            }
            Some(s) => {
                let expected = s + logs.len() as u64;
                if n != expected {
                    return Err(err(format!("expected n = {expected}, got {n}")));
                }
            }
        }
        logs.push(ln_a);
    }
    let start = start.ok_or_else(|| Error::Parse { line: 0, msg: "no records".into() })?;
    TermStream::from_logs(start, logs)
}

pub fn write_jsonl<W: Write>(ts: &TermStream, mut w: W) -> Result<()> {
    for (i, &ln_a) in ts.log_terms().iter().enumerate() {
        let rec = LnRecord { n: ts.start_index() + i as u64, ln_a };
        serde_json::to_writer(&mut w, &rec).map_err(|e| Error::Io(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Plotting table with columns `n,K,s`.
pub fn write_traces_csv<W: Write>(traces: &[SLevelTrace], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    out.write_record(["n", "K", "s"]).map_err(io)?;
    for t in traces {
        let k = t.level.k().to_string();
        for &(n, s) in &t.entries {
            out.write_record([n.to_string(), k.clone(), s.to_string()]).map_err(io)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Index membership table with columns `n,member`.
pub fn write_membership_csv<W: Write>(start: u64, members: &[bool], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    out.write_record(["n", "member"]).map_err(io)?;
    for (i, m) in members.iter().enumerate() {
        out.write_record([(start + i as u64).to_string(), (*m as u8).to_string()]).map_err(io)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub decision: f64,
    pub safety: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdpBlock {
    pub decision: ChainDecision,
    pub ratio_sufficient: Option<Decision>,
    pub simplified: SimplifiedConditions,
    pub simulation: Option<SimulationEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub decision: Decision,
    pub theorem: Test,
    pub mode: Mode,
    pub level: Option<u32>,
    pub certificate: Certificate,
    pub horizon: u64,
    pub margins: Margins,
    pub traces_path: Option<String>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escalation: Option<EscalationPath>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bdp: Option<BdpBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
}

impl Report {
    pub fn from_verdict(v: &Verdict, traces_path: Option<String>) -> Self {
        Self {
            decision: v.decision,
            theorem: v.test,
            mode: v.mode,
            level: v.level,
            certificate: v.certificate.clone(),
            horizon: v.horizon,
            margins: Margins { decision: v.decision_margin, safety: v.safety_margin },
            traces_path,
            warnings: v.warnings.clone(),
            escalation: v.escalation.clone(),
            source: None,
            bdp: None,
            generated_unix: None,
        }
    }

    pub fn from_bdp(v: &BdpVerdict, traces_path: Option<String>) -> Self {
        let mut r = Self::from_verdict(&v.series, traces_path);
        r.bdp = Some(BdpBlock {
            decision: v.decision,
            ratio_sufficient: v.ratio_sufficient,
            simplified: v.simplified,
            simulation: v.simulation.clone(),
        });
        r
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::classify_necsuf;

    #[test]
    fn jsonl_round_trip() {
        let ts = TermStream::from_logs(5, vec![-0.1, -0.25, -1.0 / 3.0, -7.0e-300]).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&ts, &mut buf).unwrap();
        let back = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back.start_index(), 5);
        assert_eq!(back.log_terms(), ts.log_terms());
    }

    #[test]
    fn jsonl_accepts_plain_terms() {
        let src = "{\"n\": 1, \"a\": 1.0}\n\n{\"n\": 2, \"a\": 0.5}\n";
        let ts = read_jsonl(src.as_bytes()).unwrap();
        assert_eq!(ts.ln_a(2).unwrap(), 0.5f64.ln());
    }

    #[test]
    fn jsonl_errors_name_the_line() {
        let cases = [
            ("{\"n\": 1, \"ln_a\": 0}\n{\"n\": 3, \"ln_a\": 0}\n", 2),
            ("{\"n\": 1, \"ln_a\": 0}\nnot json\n", 2),
            ("{\"n\": 1, \"a\": -1}\n", 1),
            ("{\"n\": 1}\n", 1),
            ("{\"n\": 1, \"a\": 1, \"ln_a\": 0}\n", 1),
            ("{\"n\": 0, \"ln_a\": 0}\n", 1),
        ];
        for (src, line) in cases {
            match read_jsonl(src.as_bytes()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
        assert!(read_jsonl("".as_bytes()).is_err());
    }

    #[test]
    fn report_round_trip() {
        let ts = TermStream::from_logs(1, (1..=50_000).map(|n| -2.0 * (n as f64).ln()).collect()).unwrap();
        let v = classify_necsuf(&ts).unwrap();
        let r = Report::from_verdict(&v, Some("t.csv".into()));
        let json = r.to_json();
        let value: Value = serde_json::from_str(&json).unwrap();
        for key in ["decision", "theorem", "level", "certificate", "horizon", "margins", "traces_path"] {
            assert!(value.get(key).is_some(), "{key}");
        }
        assert_eq!(Report::from_json(&json).unwrap(), r);
    }

    #[test]
    fn trace_csv_header() {
        let mut buf = Vec::new();
        write_traces_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,K,s\n");
    }
}
