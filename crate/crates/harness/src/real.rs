//! Real-pair benchmark: a directory of pair files plus a ground-truth manifest,
//! scored as the simple average of correct forced decisions.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use bidd_core::decision::BiddConfig;
use bidd_core::dgp::Direction;
use bidd_core::numerics::Rng;

use crate::config::{decide_with_method, Method};
use crate::error::{Error, Result};
use crate::fnv1a64;
use crate::ingest::ingest_pair_file;

/// Maps pair-file names to their ground-truth direction.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    entries: BTreeMap<String, Direction>,
}

impl Manifest {
    /// Parse a `file,truth` CSV (header optional). Truth accepts
    /// `atob`/`btoa` and the arrow forms `a->b`/`b->a`.
    pub fn parse(text: &str, origin: &str) -> Result<Manifest> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',').map(str::trim);
            let file = fields.next().unwrap_or("");
            let truth = fields.next().unwrap_or("");
            let dir = match truth.to_ascii_lowercase().as_str() {
                "atob" | "a->b" | "a→b" => Some(Direction::AtoB),
                "btoa" | "b->a" | "b→a" => Some(Direction::BtoA),
                _ if idx == 0 => None, // header
                _ => {
                    return Err(Error::Ingestion {
                        path: origin.to_string(),
                        line: idx + 1,
                        message: format!("unknown truth label {truth:?}"),
                    })
                }
            };
            if let Some(d) = dir {
                entries.insert(stem_of(file), d);
            }
        }
        Ok(Manifest { entries })
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path)?;
        Manifest::parse(&text, &path.display().to_string())
    }

    pub fn truth_for(&self, name: &str) -> Option<Direction> {
        self.entries.get(&stem_of(name)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn stem_of(file: &str) -> String {
    Path::new(file)
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| file.to_string())
}

/// Per-pair outcome in the benchmark report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairResult {
    pub name: String,
    pub rows: usize,
    pub dropped_non_finite: usize,
    pub truth: String,
    pub verdict: String,
    pub correct: bool,
    pub runtime_seconds: f64,
}

/// Benchmark summary: per-pair verdicts and the simple-average accuracy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealBenchReport {
    pub method: String,
    pub pairs: Vec<PairResult>,
    pub evaluated: usize,
    pub accuracy: f64,
    pub warnings: Vec<String>,
}

/// Run the benchmark over every pair file in `dir` that has a manifest entry.
/// Files without a truth entry are skipped with a warning; an empty directory
/// is an error. Each pair draws from its own rng stream keyed by file name, so
/// results do not depend on directory iteration order.
pub fn run_real_benchmark(
    dir: &Path,
    manifest: &Manifest,
    method: Method,
    bidd_cfg: &BiddConfig,
    cap: usize,
    rng: &Rng,
) -> Result<RealBenchReport> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!("no pair files in {}", dir.display())));
    }

    let mut pairs = Vec::new();
    let mut warnings = Vec::new();
    let mut correct = 0usize;

    for path in files {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| path.display().to_string());
        let Some(truth) = manifest.truth_for(&name) else {
            warnings.push(format!("{name}: no truth entry in manifest, skipped"));
            continue;
        };
        let mut pair_rng = rng.split(fnv1a64(name.as_bytes()));
        let start = Instant::now();
        let pair = match ingest_pair_file(&path, cap, &mut pair_rng) {
            Ok(p) => p,
            Err(e) => {
                warnings.push(format!("{name}: {e}, skipped"));
                continue;
            }
        };
        warnings.extend(pair.warnings.iter().cloned());
        let verdict = match decide_with_method(method, &pair.data, bidd_cfg, &pair_rng.split(1)) {
            Ok(v) => v,
            Err(e) => {
                warnings.push(format!("{name}: decision failed: {e}, skipped"));
                continue;
            }
        };
        let runtime_seconds = start.elapsed().as_secs_f64();
        let is_correct = verdict.verdict == truth;
        if is_correct {
            correct += 1;
        }
        pairs.push(PairResult {
            name,
            rows: pair.data.len(),
            dropped_non_finite: pair.dropped_non_finite,
            truth: truth.to_string(),
            verdict: verdict.verdict.to_string(),
            correct: is_correct,
            runtime_seconds,
        });
    }

    if pairs.is_empty() {
        return Err(Error::Config(
            "no pair was evaluated (missing manifest entries or unusable files)".into(),
        ));
    }
    let evaluated = pairs.len();
    Ok(RealBenchReport {
        method: method.label().to_string(),
        pairs,
        evaluated,
        accuracy: correct as f64 / evaluated as f64,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use bidd_core::dgp::{generate_raw, DgpSpec, MechanismKind};
    use bidd_core::numerics::NoiseFamily;
    use std::io::Write;

    fn write_pair_csv(dir: &Path, name: &str, swap: bool, seed: u64) -> String {
        let mut rng = Rng::new(seed);
        let spec = DgpSpec::random(
            &mut rng,
            MechanismKind::Quadratic,
            NoiseFamily::Uniform,
            0,
            400,
            seed,
        );
        let data = generate_raw(&spec).unwrap();
        let data = if swap { data.swapped() } else { data };
        let p = dir.join(name);
        let mut f = std::fs::File::create(&p).unwrap();
        f.write_all(data.to_csv_string().as_bytes()).unwrap();
        name.trim_end_matches(".csv").to_string()
    }

    #[test]
    fn manifest_parses_truth_labels() {
        let m = Manifest::parse("file,truth\npair1.csv,atob\npair2.csv,b->a\n", "test").unwrap();
        assert_eq!(m.truth_for("pair1"), Some(Direction::AtoB));
        assert_eq!(m.truth_for("pair2.csv"), Some(Direction::BtoA));
        assert_eq!(m.len(), 2);
        assert!(Manifest::parse("pair,sideways\n pair3,upwards\n", "test").is_err());
    }

    #[test]
    fn benchmark_scores_simple_average() {
        let dir = tempfile::tempdir().unwrap();
        write_pair_csv(dir.path(), "p1.csv", false, 11);
        write_pair_csv(dir.path(), "p2.csv", true, 12);
        write_pair_csv(dir.path(), "p3.csv", false, 13);
        let manifest = Manifest::parse("p1,atob\np2,btoa\np3,atob\n", "inline").unwrap();
        let report = run_real_benchmark(
            dir.path(),
            &manifest,
            Method::ResidLite,
            &BiddConfig::desk(),
            3000,
            &Rng::new(5),
        )
        .unwrap();
        assert_eq!(report.evaluated, 3);
        let k = report.pairs.iter().filter(|p| p.correct).count();
        assert!((report.accuracy - k as f64 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn missing_truth_is_skipped_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        write_pair_csv(dir.path(), "known.csv", false, 21);
        write_pair_csv(dir.path(), "unknown.csv", false, 22);
        let manifest = Manifest::parse("known,atob\n", "inline").unwrap();
        let report = run_real_benchmark(
            dir.path(),
            &manifest,
            Method::MseLite,
            &BiddConfig::desk(),
            3000,
            &Rng::new(5),
        )
        .unwrap();
        assert_eq!(report.evaluated, 1);
        assert!(report.warnings.iter().any(|w| w.contains("unknown")));
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = Manifest::default();
        assert!(run_real_benchmark(
            dir.path(),
            &manifest,
            Method::MseLite,
            &BiddConfig::desk(),
            3000,
            &Rng::new(5),
        )
        .is_err());
    }
}
