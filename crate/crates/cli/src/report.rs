use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// What a command produced, before it is wrapped into a [`Report`].
pub struct Outcome {
    pub passed: bool,
    pub results: Value,
    pub witnesses: Value,
}

#[derive(Debug, Serialize)]
pub struct Inputs {
    pub digest: String,
    pub args: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub total_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Inputs,
    pub passed: bool,
    pub results: Value,
    pub witnesses: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

/// Arguments that do not change the result.
fn is_presentation(arg: &str) -> bool {
    arg == "--no-timings" || arg == "--out" || arg.starts_with("--out=")
}

/// The arguments that determine the result, in invocation order.
pub fn semantic_args(argv: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip_next = false;
    for a in argv.iter().skip(1) {
        if skip_next {
            skip_next = false;
            continue;
        }
        if a == "--out" {
            skip_next = true;
            continue;
        }
        if !is_presentation(a) {
            out.push(a.clone());
        }
    }
    out
}

/// SHA-256 over the semantic arguments and the text of every input file.
pub fn digest(args: &[String], sources: &[&str]) -> String {
    let mut h = Sha256::new();
    for a in args {
        h.update(a.as_bytes());
        h.update([0]);
    }
    for s in sources {
        h.update([1]);
        h.update(s.as_bytes());
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presentation_flags_do_not_change_the_digest() {
        let a: Vec<String> = ["invexkit", "bridge", "--problem", "ex1", "--out", "r.json", "--no-timings"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let b: Vec<String> = ["invexkit", "bridge", "--problem", "ex1"].iter().map(|s| s.to_string()).collect();
        assert_eq!(semantic_args(&a), semantic_args(&b));
        assert_eq!(digest(&semantic_args(&a), &["x"]), digest(&semantic_args(&b), &["x"]));
        assert_ne!(digest(&semantic_args(&a), &["x"]), digest(&semantic_args(&b), &["y"]));
    }
}
