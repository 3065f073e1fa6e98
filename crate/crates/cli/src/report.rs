//! Run reports: one canonical JSON document plus a human summary.
//! Machine output never contains timings, so identical runs are
//! byte-identical.

use serde::Serialize;
use serde_json::{json, Map, Value};

pub const TOOL: &str = "genvi";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Significant digits kept for every float in machine output.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: Value,
    pub observed: Value,
    pub passed: bool,
}

impl Check {
    pub fn equal(name: &str, expected: impl Serialize, observed: impl Serialize) -> Self {
        let expected = to_value(expected);
        let observed = to_value(observed);
        Check {
            name: name.to_string(),
            passed: expected == observed,
            expected,
            observed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceEcho {
    pub name: String,
    pub sha256: String,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub instance: Option<InstanceEcho>,
    pub seed: u64,
    pub resolutions: Value,
    pub result: Value,
    pub checks: Vec<Check>,
    /// Wall-clock seconds per stage; human summary only.
    pub timings: Vec<(String, f64)>,
    /// Extra summary lines for humans.
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(command: &str, instance: Option<InstanceEcho>, seed: u64) -> Self {
        Report {
            command: command.to_string(),
            instance,
            seed,
            resolutions: Value::Object(Map::new()),
            result: Value::Null,
            checks: Vec::new(),
            timings: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn machine(&self) -> String {
        let doc = json!({
            "tool": TOOL,
            "version": VERSION,
            "command": self.command,
            "instance": self.instance,
            "seed": self.seed,
            "resolutions": self.resolutions,
            "result": self.result,
            "checks": self.checks,
            "passed": self.passed(),
        });
        let mut s = serde_json::to_string_pretty(&canonical(doc)).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn human(&self) -> String {
        let mut out = format!("{TOOL} {VERSION} {}\n", self.command);
        if let Some(i) = &self.instance {
            out += &format!("instance: {} (sha256 {})\n", i.name, &i.sha256[..16]);
        }
        out += &format!("seed: {}\n", self.seed);
        for n in &self.notes {
            out += &format!("{n}\n");
        }
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            out += &format!("{mark} {}: expected {}, observed {}\n", c.name, compact(&c.expected), compact(&c.observed));
        }
        let met = self.checks.iter().filter(|c| c.passed).count();
        out += &format!("checks: {met}/{} met\n", self.checks.len());
        for (stage, secs) in &self.timings {
            out += &format!("time {stage}: {secs:.3} s\n");
        }
        out
    }
}

fn compact(v: &Value) -> String {
    let s = canonical(v.clone()).to_string();
    if s.len() > 120 {
        format!("{}...", &s[..117])
    } else {
        s
    }
}

pub fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("serializable")
}

/// Rounds a float to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    s.parse().unwrap_or(v)
}

/// Rounds every float; negative zero prints as zero. Object keys are
/// already sorted by `serde_json::Map`.
pub fn canonical(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig(n.as_f64().unwrap_or(0.0));
            let r = if r == 0.0 { 0.0 } else { r };
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, canonical(v))).collect()),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(-2.5e-17), -2.5e-17);
        assert_eq!(canonical(json!(-0.0)), json!(0.0));
    }

    #[test]
    fn machine_output_has_no_timings_and_sorted_keys() {
        let mut r = Report::new("verify", None, 7);
        r.timings.push(("solve".into(), 1.25));
        r.checks.push(Check::equal("x", true, true));
        let m = r.machine();
        assert!(!m.contains("1.25"));
        let a = m.find("\"checks\"").unwrap();
        let b = m.find("\"command\"").unwrap();
        assert!(a < b);
        assert_eq!(r.exit_code(), 0);
        r.checks.push(Check::equal("y", 1, 2));
        assert_eq!(r.exit_code(), 1);
        assert!(r.human().contains("FAIL y"));
    }
}
