//! Structured verification reports.
//!
//! Every suite produces a list of named checks with status pass, fail or
//! inconclusive. Positive membership verdicts embed their certificate
//! (an explicit linear combination over ideal generators) in the witness
//! field so they can be re-checked by re-expansion. Reports serialize to
//! JSON with a fixed field order; identical configurations produce
//! byte-identical output.

use crate::gf::Fq;
use crate::hecke::{Certificate, IwahoriVec, OperatorWord, SphVal, SphericalVec};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub witness: Value,
}

impl Check {
    pub fn pass(name: impl Into<String>, witness: Value) -> Check {
        Check {
            name: name.into(),
            status: Status::Pass,
            witness,
        }
    }

    pub fn fail(name: impl Into<String>, witness: Value) -> Check {
        Check {
            name: name.into(),
            status: Status::Fail,
            witness,
        }
    }

    pub fn inconclusive(name: impl Into<String>, witness: Value) -> Check {
        Check {
            name: name.into(),
            status: Status::Inconclusive,
            witness,
        }
    }

    /// Pass/fail from a boolean.
    pub fn verdict(name: impl Into<String>, ok: bool, witness: Value) -> Check {
        if ok {
            Check::pass(name, witness)
        } else {
            Check::fail(name, witness)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Params {
    pub p: u32,
    pub f: usize,
    pub r: Vec<u64>,
    pub depth: u32,
    pub buffer: u32,
    pub mode: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub suite: String,
    pub params: Params,
    pub checks: Vec<Check>,
    pub summary: Summary,
}

impl Report {
    pub fn new(suite: impl Into<String>, params: Params, checks: Vec<Check>) -> Report {
        let pass = checks.iter().filter(|c| c.status == Status::Pass).count();
        let fail = checks.iter().filter(|c| c.status == Status::Fail).count();
        let inconclusive = checks
            .iter()
            .filter(|c| c.status == Status::Inconclusive)
            .count();
        let total = checks.len();
        Report {
            schema: 1,
            suite: suite.into(),
            params,
            checks,
            summary: Summary {
                pass,
                fail,
                inconclusive,
                total,
            },
        }
    }

    /// Exit success: no failures, and under strict mode no inconclusive
    /// verdicts either.
    pub fn ok(&self, strict: bool) -> bool {
        self.summary.fail == 0 && (!strict || self.summary.inconclusive == 0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("suite: {}\n", self.suite));
        out.push_str(&format!(
            "params: p={} f={} r={:?} depth={} buffer={} mode={}\n",
            self.params.p,
            self.params.f,
            self.params.r,
            self.params.depth,
            self.params.buffer,
            self.params.mode
        ));
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Inconclusive => "INCONCLUSIVE",
            };
            out.push_str(&format!("  [{tag}] {}\n", c.name));
        }
        out.push_str(&format!(
            "summary: {} pass, {} fail, {} inconclusive of {}\n",
            self.summary.pass, self.summary.fail, self.summary.inconclusive, self.summary.total
        ));
        out
    }
}

/// JSON form of an Iwahori vector: list of (coset string, coefficient).
pub fn iwahori_json(v: &IwahoriVec) -> Value {
    Value::Array(
        v.terms
            .iter()
            .map(|(rep, c)| json!([rep.to_string(), c.0]))
            .collect(),
    )
}

/// JSON form of a spherical vector: list of (coset string, value coords).
pub fn spherical_json(v: &SphericalVec) -> Value {
    Value::Array(
        v.terms
            .iter()
            .map(|(rep, val)| {
                let coords: Vec<u32> = match val {
                    SphVal::Scalar(c) => vec![c.0],
                    SphVal::Poly(p) => p.coeffs.iter().map(|c| c.0).collect(),
                    SphVal::Coords(x) => x.iter().map(|c| c.0).collect(),
                };
                json!([rep.to_string(), coords])
            })
            .collect(),
    )
}

/// JSON form of a membership certificate over (word, edge) generators.
pub fn certificate_json(
    words: &[OperatorWord],
    edges: &[crate::cosets::EdgeRep],
    cert: &Certificate,
) -> Value {
    Value::Array(
        cert.combination
            .iter()
            .map(|&(w, e, c)| json!([words[w].to_string(), edges[e].to_string(), c.0]))
            .collect(),
    )
}

/// Short JSON for a field element list.
pub fn fq_vec_json(v: &[Fq]) -> Value {
    Value::Array(v.iter().map(|c| json!(c.0)).collect())
}
