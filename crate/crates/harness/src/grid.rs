//! Seeded experiment grids with resumable per-cell checkpoints, plus the
//! estimator and conditioning ablations.
//!
//! Every`(cell, seed)` run is a pure function of its spec: mechanisms, data,
//! and method randomness all derive from the seed, so reruns reproduce the
//! results CSV byte for byte. Wall-clock runtimes are reported only in the
//! JSON output to keep the CSV deterministic.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use bidd_core::decision::{bidd_profiles, compare_profiles, DecisionRule, SplitPolicy};
use bidd_core::dependence::{EstimatorKind, HsicConfig, KsgConfig};
use bidd_core::dgp::{generate, generate_raw, DgpSpec, Direction, MechanismKind};
use bidd_core::numerics::{NoiseFamily, Rng};

use crate::config::{build_bidd_config, decide_with_method, Method, Preset, PresetOverrides};
use crate::error::{Error, Result};
use crate::fnv1a64;

fn default_policy() -> SplitPolicy {
    SplitPolicy::Total
}

fn default_rule() -> DecisionRule {
    DecisionRule::Voting
}

fn default_sample_sizes() -> Vec<usize> {
    vec![1000]
}

/// Full description of an experiment grid: the cross product of mechanisms,
/// noise families, mediator counts, and sample sizes, run by every method on
/// every seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub mechanisms: Vec<MechanismKind>,
    pub noises: Vec<NoiseFamily>,
    pub mediators: Vec<usize>,
    #[serde(default = "default_sample_sizes")]
    pub sample_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub preset: Preset,
    #[serde(default = "default_policy")]
    pub policy: SplitPolicy,
    #[serde(default)]
    pub estimator: EstimatorKind,
    #[serde(default = "default_rule")]
    pub rule: DecisionRule,
    /// Linear-mechanism, Gaussian-noise cells are not identifiable; they are
    /// skipped unless explicitly requested.
    #[serde(default)]
    pub include_linear_gaussian: bool,
    #[serde(default)]
    pub overrides: PresetOverrides,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.mechanisms.is_empty()
            || self.noises.is_empty()
            || self.mediators.is_empty()
            || self.sample_sizes.is_empty()
            || self.seeds.is_empty()
            || self.methods.is_empty()
        {
            return Err(Error::Config("grid has an empty axis".into()));
        }
        Ok(())
    }

    /// Enumerate the concrete cells of this grid.
    pub fn cells(&self) -> Vec<CellSpec> {
        let mut out = Vec::new();
        for &mechanism in &self.mechanisms {
            for &noise in &self.noises {
                if mechanism == MechanismKind::Linear
                    && noise == NoiseFamily::Gaussian
                    && !self.include_linear_gaussian
                {
                    continue;
                }
                for &mediators in &self.mediators {
                    for &n in &self.sample_sizes {
                        for &method in &self.methods {
                            out.push(CellSpec {
                                mechanism,
                                noise,
                                mediators,
                                n,
                                method,
                                seeds: self.seeds.clone(),
                                preset: self.preset,
                                policy: self.policy,
                                estimator: self.estimator,
                                rule: self.rule,
                                overrides: self.overrides.clone(),
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// One cell of the grid; hashing its canonical JSON keys the resume checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSpec {
    pub mechanism: MechanismKind,
    pub noise: NoiseFamily,
    pub mediators: usize,
    pub n: usize,
    pub method: Method,
    pub seeds: Vec<u64>,
    pub preset: Preset,
    pub policy: SplitPolicy,
    pub estimator: EstimatorKind,
    pub rule: DecisionRule,
    pub overrides: PresetOverrides,
}

impl CellSpec {
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("cell serialises");
        format!("{:016x}", fnv1a64(json.as_bytes()))
    }
}

/// Outcome of one `(cell, seed)` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    /// `a->b` / `b->a`, or absent when the method failed.
    pub verdict: Option<Direction>,
    pub correct: bool,
    pub tie: bool,
    pub error: Option<String>,
    pub runtime_seconds: f64,
}

/// Aggregated result of one cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRow {
    pub mechanism: MechanismKind,
    pub noise: NoiseFamily,
    pub mediators: usize,
    pub n: usize,
    pub method: String,
    pub policy: String,
    pub estimator: String,
    pub rule: String,
    pub outcomes: Vec<SeedOutcome>,
    /// Fraction of correct forced decisions over all seeds (failures count as
    /// incorrect).
    pub accuracy: f64,
    pub mean_runtime_seconds: f64,
}

impl ResultRow {
    fn csv_line(&self) -> String {
        let verdicts: Vec<String> = self
            .outcomes
            .iter()
            .map(|o| match (&o.verdict, &o.error) {
                (Some(d), _) => d.to_string(),
                (None, Some(_)) => "error".to_string(),
                (None, None) => "none".to_string(),
            })
            .collect();
        let ties = self.outcomes.iter().filter(|o| o.tie).count();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            self.mechanism,
            self.noise,
            self.mediators,
            self.n,
            self.method,
            self.policy,
            self.estimator,
            self.rule,
            self.outcomes.len(),
            self.accuracy,
            ties,
            verdicts.join("|"),
        )
    }
}

const RESULT_CSV_HEADER: &str =
    "mechanism,noise,mediators,n,method,policy,estimator,rule,seeds,accuracy,ties,verdicts\n";

/// Render rows as the deterministic results CSV.
pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULT_CSV_HEADER);
    for r in rows {
        out.push_str(&r.csv_line());
    }
    out
}

/// Derived generator spec for one `(cell, seed)`: mechanism parameters and the
/// data seed both come from the run seed, so the row is reconstructible.
fn cell_dgp_spec(cell: &CellSpec, seed: u64) -> DgpSpec {
    let run_rng = Rng::new(seed);
    let mut mech_rng = run_rng.split(0);
    let mut spec = DgpSpec::random(
        &mut mech_rng,
        cell.mechanism,
        cell.noise,
        cell.mediators,
        cell.n,
        run_rng.derive_seed(1),
    );
    spec.n = cell.n;
    spec
}

fn run_cell_seed(cell: &CellSpec, seed: u64) -> SeedOutcome {
    let start = Instant::now();
    let spec = cell_dgp_spec(cell, seed);
    let data = if cell.method.wants_raw_data() {
        generate_raw(&spec)
    } else {
        generate(&spec)
    };
    let run_rng = Rng::new(seed);
    let method_rng = run_rng.split(2);

    let mut cfg = build_bidd_config(cell.preset, &cell.overrides);
    cfg.estimator = cell.estimator;
    cfg.rule = cell.rule;
    cfg.policy = cell.policy;

    let result = data
        .map_err(Error::from)
        .and_then(|d| decide_with_method(cell.method, &d, &cfg, &method_rng));
    let runtime_seconds = start.elapsed().as_secs_f64();
    match result {
        Ok(v) => SeedOutcome {
            seed,
            verdict: Some(v.verdict),
            correct: v.verdict == Direction::AtoB,
            tie: v.tie,
            error: None,
            runtime_seconds,
        },
        Err(e) => SeedOutcome {
            seed,
            verdict: None,
            correct: false,
            tie: false,
            error: Some(e.to_string()),
            runtime_seconds,
        },
    }
}

fn aggregate(cell: &CellSpec, outcomes: Vec<SeedOutcome>) -> ResultRow {
    let correct = outcomes.iter().filter(|o| o.correct).count();
    let accuracy = correct as f64 / outcomes.len() as f64;
    let mean_runtime_seconds =
        outcomes.iter().map(|o| o.runtime_seconds).sum::<f64>() / outcomes.len() as f64;
    ResultRow {
        mechanism: cell.mechanism,
        noise: cell.noise,
        mediators: cell.mediators,
        n: cell.n,
        method: cell.method.label().to_string(),
        policy: cell.policy.to_string(),
        estimator: cell.estimator.label(),
        rule: cell.rule.to_string(),
        outcomes,
        accuracy,
        mean_runtime_seconds,
    }
}

/// Run one cell across its seeds, or load it from its checkpoint file.
fn run_or_resume_cell(cell: &CellSpec, checkpoint_dir: Option<&Path>) -> Result<ResultRow> {
    let ck_path = checkpoint_dir.map(|d| d.join(format!("{}.json", cell.content_hash())));
    if let Some(p) = &ck_path {
        if p.exists() {
            let row: ResultRow = serde_json::from_str(&fs::read_to_string(p)?)?;
            return Ok(row);
        }
    }
    let outcomes: Vec<SeedOutcome> = cell
        .seeds
        .par_iter()
        .map(|&seed| run_cell_seed(cell, seed))
        .collect();
    let row = aggregate(cell, outcomes);
    if let Some(p) = &ck_path {
        fs::write(p, serde_json::to_string_pretty(&row)?)?;
    }
    Ok(row)
}

/// Execute every cell of the grid, writing `results.csv`, `results.json`, and
/// per-cell checkpoint files under `out_dir/cells/`. Individual cell failures
/// are recorded in their rows, not fatal.
pub fn run_grid(grid: &GridSpec, out_dir: &Path) -> Result<Vec<ResultRow>> {
    grid.validate()?;
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::Config(
            "grid has no cells (only linear+gaussian combinations, which are excluded)".into(),
        ));
    }
    let checkpoint_dir = out_dir.join("cells");
    fs::create_dir_all(&checkpoint_dir)?;

    let rows: Vec<ResultRow> = cells
        .par_iter()
        .map(|cell| run_or_resume_cell(cell, Some(&checkpoint_dir)))
        .collect::<Result<Vec<_>>>()?;

    write_outputs(&rows, out_dir)?;
    Ok(rows)
}

fn write_outputs(rows: &[ResultRow], out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("results.csv"), results_csv(rows))?;
    fs::write(
        out_dir.join("results.json"),
        serde_json::to_string_pretty(rows)?,
    )?;
    Ok(())
}

/// Which ablation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationKind {
    /// Sweep the dependence estimator (HSIC at half/default/double bandwidth,
    /// KSG at k = 3/5/10) crossed with both comparison rules, reusing one
    /// training per seed.
    MiEstimator,
    /// Contrast conditional training against the condition-masked variant.
    Unconditional,
}

/// Estimator sweep used by the MI-estimator ablation.
pub fn ablation_estimators() -> Vec<EstimatorKind> {
    vec![
        EstimatorKind::Hsic(HsicConfig {
            bandwidth_scale: 0.5,
        }),
        EstimatorKind::Hsic(HsicConfig {
            bandwidth_scale: 1.0,
        }),
        EstimatorKind::Hsic(HsicConfig {
            bandwidth_scale: 2.0,
        }),
        EstimatorKind::Ksg(KsgConfig { k: 3 }),
        EstimatorKind::Ksg(KsgConfig { k: 5 }),
        EstimatorKind::Ksg(KsgConfig { k: 10 }),
    ]
}

/// Run an ablation over the grid's cells, writing the same output files as
/// [`run_grid`].
pub fn run_ablation(kind: AblationKind, grid: &GridSpec, out_dir: &Path) -> Result<Vec<ResultRow>> {
    match kind {
        AblationKind::Unconditional => {
            let mut g = grid.clone();
            g.methods = vec![Method::Bidd, Method::BiddUnconditional];
            run_grid(&g, out_dir)
        }
        AblationKind::MiEstimator => run_estimator_sweep(grid, out_dir),
    }
}

/// One direction-model training per `(cell, seed)` serves every estimator and
/// both rules; only the dependence measurement and comparison are repeated.
fn run_estimator_sweep(grid: &GridSpec, out_dir: &Path) -> Result<Vec<ResultRow>> {
    grid.validate()?;
    let estimators = ablation_estimators();
    let rules = [DecisionRule::Voting, DecisionRule::Mean];

    let mut base = grid.clone();
    base.methods = vec![Method::Bidd];
    let cells = base.cells();
    if cells.is_empty() {
        return Err(Error::Config("estimator sweep grid has no cells".into()));
    }
    let checkpoint_dir = out_dir.join("cells");
    fs::create_dir_all(&checkpoint_dir)?;

    let mut rows = Vec::new();
    for cell in &cells {
        let ck = checkpoint_dir.join(format!("sweep-{}.json", cell.content_hash()));
        if ck.exists() {
            let mut cached: Vec<ResultRow> = serde_json::from_str(&fs::read_to_string(&ck)?)?;
            rows.append(&mut cached);
            continue;
        }
        // per seed: verdicts for every (estimator, rule) from one training
        let per_seed: Vec<Vec<SeedOutcome>> = cell
            .seeds
            .par_iter()
            .map(|&seed| sweep_cell_seed(cell, seed, &estimators, &rules))
            .collect();

        let mut cell_rows = Vec::new();
        for (ei, est) in estimators.iter().enumerate() {
            for (ri, rule) in rules.iter().enumerate() {
                let outcomes: Vec<SeedOutcome> = per_seed
                    .iter()
                    .map(|v| v[ei * rules.len() + ri].clone())
                    .collect();
                let mut keyed = cell.clone();
                keyed.estimator = *est;
                keyed.rule = *rule;
                cell_rows.push(aggregate(&keyed, outcomes));
            }
        }
        fs::write(&ck, serde_json::to_string_pretty(&cell_rows)?)?;
        rows.extend(cell_rows);
    }

    write_outputs(&rows, out_dir)?;
    Ok(rows)
}

fn sweep_cell_seed(
    cell: &CellSpec,
    seed: u64,
    estimators: &[EstimatorKind],
    rules: &[DecisionRule],
) -> Vec<SeedOutcome> {
    let start = Instant::now();
    let spec = cell_dgp_spec(cell, seed);
    let run_rng = Rng::new(seed);
    let method_rng = run_rng.split(2);

    let mut cfg = build_bidd_config(cell.preset, &cell.overrides);
    cfg.policy = cell.policy;

    let result = generate(&spec)
        .map_err(Error::from)
        .and_then(|d| bidd_profiles(&d, &cfg, estimators, &method_rng).map_err(Error::from));
    let runtime_seconds = start.elapsed().as_secs_f64();

    match result {
        Ok((pairs, _, _)) => {
            let mut out = Vec::with_capacity(estimators.len() * rules.len());
            for (pa, pb) in &pairs {
                for rule in rules {
                    match compare_profiles(pa, pb, *rule) {
                        Ok(v) => out.push(SeedOutcome {
                            seed,
                            verdict: Some(v.verdict),
                            correct: v.verdict == Direction::AtoB,
                            tie: v.tie,
                            error: None,
                            runtime_seconds,
                        }),
                        Err(e) => out.push(SeedOutcome {
                            seed,
                            verdict: None,
                            correct: false,
                            tie: false,
                            error: Some(e.to_string()),
                            runtime_seconds,
                        }),
                    }
                }
            }
            out
        }
        Err(e) => {
            let failure = SeedOutcome {
                seed,
                verdict: None,
                correct: false,
                tie: false,
                error: Some(e.to_string()),
                runtime_seconds,
            };
            vec![failure; estimators.len() * rules.len()]
        }
    }
}
