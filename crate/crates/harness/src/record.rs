//! Serialised verdict record written by `bidd decide` and the benchmarks.

use serde::{Deserialize, Serialize};

use bidd_core::decision::DirectionVerdict;

/// JSON verdict record. Field order is fixed so identical runs produce
/// byte-identical output (modulo `runtime_seconds`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub verdict: String,
    pub rule: String,
    pub votes: usize,
    #[serde(rename = "T")]
    pub timesteps: usize,
    pub mean_mi_a: f64,
    pub mean_mi_b: f64,
    pub seed: u64,
    pub policy: String,
    pub estimator: String,
    pub runtime_seconds: f64,
    pub tie: bool,
    pub margin: f64,
    pub method: String,
}

impl VerdictRecord {
    pub fn new(
        verdict: &DirectionVerdict,
        seed: u64,
        policy: &str,
        estimator: &str,
        method: &str,
        runtime_seconds: f64,
    ) -> VerdictRecord {
        VerdictRecord {
            verdict: verdict.verdict.to_string(),
            rule: verdict.rule.to_string(),
            votes: verdict.votes,
            timesteps: verdict.timesteps,
            mean_mi_a: verdict.mean_mi_a,
            mean_mi_b: verdict.mean_mi_b,
            seed,
            policy: policy.to_string(),
            estimator: estimator.to_string(),
            runtime_seconds,
            tie: verdict.tie,
            margin: verdict.margin,
            method: method.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serialises")
    }
}
