//! Synthetic bivariate data from an additive noise model with a chain of
//! unobserved mediators.
//!
//! The generative process draws the cause from the chosen noise family, pushes it
//! through `T` mediator links (each adding fresh mediator noise), and produces the
//! effect from the last mediator plus effect noise. Mediators are discarded; only
//! the `(cause, effect)` columns are kept, standardised to mean 0 / variance 1.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{mean, variance, NoiseFamily, Rng};

/// Default hidden width for randomly drawn neural-net link functions.
pub const DEFAULT_NN_HIDDEN: usize = 16;

/// Ground-truth or inferred causal direction for a pair `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    AtoB,
    BtoA,
}

impl Direction {
    pub fn flipped(self) -> Direction {
        match self {
            Direction::AtoB => Direction::BtoA,
            Direction::BtoA => Direction::AtoB,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::AtoB => write!(f, "a->b"),
            Direction::BtoA => write!(f, "b->a"),
        }
    }
}

/// Families of link functions between consecutive nodes of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MechanismKind {
    Linear,
    Quadratic,
    Tanh,
    NeuralNet,
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MechanismKind::Linear => "linear",
            MechanismKind::Quadratic => "quadratic",
            MechanismKind::Tanh => "tanh",
            MechanismKind::NeuralNet => "neuralnet",
        };
        write!(f, "{s}")
    }
}

/// A concrete link function with frozen parameters.
///
/// Parameter ranges when drawn by [`random_mechanism`]: linear slope in
/// `[-5, 5]` and offset in `[-3, 3]`; tanh offset in `[-1, 1]`; neural-net
/// weights entrywise in `[-5, 5]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MechanismSpec {
    Linear {
        slope: f64,
        offset: f64,
    },
    Quadratic,
    Tanh {
        offset: f64,
    },
    NeuralNet {
        w_in: Vec<f64>,
        b_h: Vec<f64>,
        w_out: Vec<f64>,
    },
}

impl MechanismSpec {
    pub fn kind(&self) -> MechanismKind {
        match self {
            MechanismSpec::Linear { .. } => MechanismKind::Linear,
            MechanismSpec::Quadratic => MechanismKind::Quadratic,
            MechanismSpec::Tanh { .. } => MechanismKind::Tanh,
            MechanismSpec::NeuralNet { .. } => MechanismKind::NeuralNet,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            MechanismSpec::Linear { slope, offset } => {
                (-5.0..=5.0).contains(slope) && (-3.0..=3.0).contains(offset)
            }
            MechanismSpec::Quadratic => true,
            MechanismSpec::Tanh { offset } => (-1.0..=1.0).contains(offset),
            MechanismSpec::NeuralNet { w_in, b_h, w_out } => {
                let h = w_in.len();
                h >= 1
                    && b_h.len() == h
                    && w_out.len() == h
                    && w_in
                        .iter()
                        .chain(b_h)
                        .chain(w_out)
                        .all(|w| (-5.0..=5.0).contains(w))
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "mechanism parameters out of range: {self:?}"
            )))
        }
    }
}

/// Evaluate a link function at `x` (noise-free; the caller adds noise).
pub fn apply_mechanism(m: &MechanismSpec, x: f64) -> f64 {
    match m {
        MechanismSpec::Linear { slope, offset } => slope * x + offset,
        MechanismSpec::Quadratic => x * x,
        MechanismSpec::Tanh { offset } => (x + offset).tanh(),
        MechanismSpec::NeuralNet { w_in, b_h, w_out } => {
            let mut out = 0.0;
            for ((wi, bh), wo) in w_in.iter().zip(b_h).zip(w_out) {
                out += (x * wi + bh).tanh() * wo;
            }
            out
        }
    }
}

/// Draw a mechanism of the given kind with parameters from the documented ranges.
/// Neural nets use the default hidden width.
pub fn random_mechanism(rng: &mut Rng, kind: MechanismKind) -> MechanismSpec {
    random_mechanism_with_width(rng, kind, DEFAULT_NN_HIDDEN)
}

/// As [`random_mechanism`] but with an explicit neural-net hidden width.
pub fn random_mechanism_with_width(
    rng: &mut Rng,
    kind: MechanismKind,
    hidden: usize,
) -> MechanismSpec {
    match kind {
        MechanismKind::Linear => MechanismSpec::Linear {
            slope: rng.uniform_in(-5.0, 5.0),
            offset: rng.uniform_in(-3.0, 3.0),
        },
        MechanismKind::Quadratic => MechanismSpec::Quadratic,
        MechanismKind::Tanh => MechanismSpec::Tanh {
            offset: rng.uniform_in(-1.0, 1.0),
        },
        MechanismKind::NeuralNet => {
            let mut draw = |n: usize| {
                (0..n)
                    .map(|_| rng.uniform_in(-5.0, 5.0))
                    .collect::<Vec<_>>()
            };
            MechanismSpec::NeuralNet {
                w_in: draw(hidden),
                b_h: draw(hidden),
                w_out: draw(hidden),
            }
        }
    }
}

/// Full description of one synthetic generator run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DgpSpec {
    /// Number of unobserved mediators `T`.
    pub mediators: usize,
    pub noise_family: NoiseFamily,
    pub cause_variance: f64,
    pub mediator_noise_variance: f64,
    pub effect_noise_variance: f64,
    /// One mechanism per edge: `T` mediator links plus the final effect link.
    pub mechanisms: Vec<MechanismSpec>,
    pub n: usize,
    pub seed: u64,
}

impl DgpSpec {
    /// Spec with mechanisms of a single kind, parameters drawn from `rng`.
    pub fn random(
        rng: &mut Rng,
        kind: MechanismKind,
        noise_family: NoiseFamily,
        mediators: usize,
        n: usize,
        seed: u64,
    ) -> DgpSpec {
        let mechanisms = (0..=mediators)
            .map(|_| random_mechanism(rng, kind))
            .collect();
        DgpSpec {
            mediators,
            noise_family,
            cause_variance: 1.0,
            mediator_noise_variance: 0.5,
            effect_noise_variance: 1.0,
            mechanisms,
            n,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mechanisms.len() != self.mediators + 1 {
            return Err(Error::Parameter(format!(
                "need {} mechanisms for {} mediators, got {}",
                self.mediators + 1,
                self.mediators,
                self.mechanisms.len()
            )));
        }
        if self.cause_variance <= 0.0
            || self.effect_noise_variance <= 0.0
            || (self.mediators > 0 && self.mediator_noise_variance <= 0.0)
        {
            return Err(Error::Parameter("noise variances must be positive".into()));
        }
        if self.n < 2 {
            return Err(Error::Parameter("need at least 2 samples".into()));
        }
        for m in &self.mechanisms {
            m.validate()?;
        }
        Ok(())
    }
}

/// Paired scalar observations with optional ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDataset {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub truth: Option<Direction>,
    pub standardized: bool,
}

impl PairDataset {
    pub fn new(a: Vec<f64>, b: Vec<f64>, truth: Option<Direction>) -> Result<PairDataset> {
        if a.len() != b.len() {
            return Err(Error::Parameter(format!(
                "column lengths differ: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        if a.len() < 2 {
            return Err(Error::Parameter("need at least 2 rows".into()));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("dataset contains non-finite values".into()));
        }
        let standardized = columns_standardized(&a, &b);
        Ok(PairDataset {
            a,
            b,
            truth,
            standardized,
        })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Rescale both columns to mean 0, population variance 1. Idempotent: a
    /// dataset already flagged as standardized is left untouched.
    pub fn standardize(&mut self) -> Result<()> {
        if self.standardized {
            return Ok(());
        }
        standardize_column(&mut self.a)?;
        standardize_column(&mut self.b)?;
        self.standardized = true;
        Ok(())
    }

    /// Columns exchanged; ground truth flips with them.
    pub fn swapped(&self) -> PairDataset {
        PairDataset {
            a: self.b.clone(),
            b: self.a.clone(),
            truth: self.truth.map(Direction::flipped),
            standardized: self.standardized,
        }
    }

    /// Two-column CSV with header `a,b`. Values are written in scientific
    /// notation with 17 fractional digits, enough to round-trip any f64.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.len() * 48 + 4);
        out.push_str("a,b\n");
        for (x, y) in self.a.iter().zip(&self.b) {
            out.push_str(&format!("{x:.17e},{y:.17e}\n"));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    /// Parse a two-column CSV as written by [`PairDataset::to_csv_string`]
    /// (header optional). The standardized flag is recomputed from the data.
    pub fn from_csv_str(text: &str) -> Result<PairDataset> {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let fa = fields.next().unwrap_or("").trim();
            let fb = fields.next().unwrap_or("").trim();
            match (fa.parse::<f64>(), fb.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    a.push(x);
                    b.push(y);
                }
                _ if idx == 0 => continue, // header
                _ => {
                    return Err(Error::Parameter(format!(
                        "unparsable CSV row at line {}",
                        idx + 1
                    )))
                }
            }
        }
        PairDataset::new(a, b, None)
    }

    pub fn read_csv(path: &Path) -> Result<PairDataset> {
        let text = std::fs::read_to_string(path)?;
        PairDataset::from_csv_str(&text)
    }
}

fn columns_standardized(a: &[f64], b: &[f64]) -> bool {
    let ok = |xs: &[f64]| mean(xs).abs() < 1e-9 && (variance(xs) - 1.0).abs() < 1e-9;
    ok(a) && ok(b)
}

fn standardize_column(xs: &mut [f64]) -> Result<()> {
    let m = mean(xs);
    let v = variance(xs);
    if v <= 0.0 || !v.is_finite() {
        return Err(Error::Numeric(format!(
            "cannot standardize column with variance {v}"
        )));
    }
    let s = v.sqrt();
    for x in xs.iter_mut() {
        *x = (*x - m) / s;
    }
    Ok(())
}

/// Generate a pair dataset, standardised, with ground truth `a -> b`.
pub fn generate(spec: &DgpSpec) -> Result<PairDataset> {
    let mut data = generate_raw(spec)?;
    data.standardize()?;
    Ok(data)
}

/// As [`generate`] but without the final standardisation. The raw marginal
/// variances carry simulation artifacts that the variance-sorting baseline
/// needs; everything else should consume [`generate`].
pub fn generate_raw(spec: &DgpSpec) -> Result<PairDataset> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    let x = spec
        .noise_family
        .sample(&mut rng, spec.cause_variance, spec.n)?;

    let mut z = x.clone();
    for j in 0..spec.mediators {
        let noise = spec
            .noise_family
            .sample(&mut rng, spec.mediator_noise_variance, spec.n)?;
        for (zi, e) in z.iter_mut().zip(&noise) {
            *zi = apply_mechanism(&spec.mechanisms[j], *zi) + e;
        }
    }

    let noise = spec
        .noise_family
        .sample(&mut rng, spec.effect_noise_variance, spec.n)?;
    let last = &spec.mechanisms[spec.mediators];
    let y: Vec<f64> = z
        .iter()
        .zip(&noise)
        .map(|(zi, e)| apply_mechanism(last, *zi) + e)
        .collect();

    let mut data = PairDataset::new(x, y, Some(Direction::AtoB))?;
    data.standardized = false;
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::correlation;

    #[test]
    fn apply_mechanism_formulas() {
        assert_eq!(
            apply_mechanism(
                &MechanismSpec::Linear {
                    slope: 2.0,
                    offset: 1.0
                },
                3.0
            ),
            7.0
        );
        assert_eq!(apply_mechanism(&MechanismSpec::Quadratic, -2.0), 4.0);
        assert_eq!(
            apply_mechanism(&MechanismSpec::Tanh { offset: 0.0 }, 0.0),
            0.0
        );
        // single-unit net: tanh(1*x + 0) * 2
        let nn = MechanismSpec::NeuralNet {
            w_in: vec![1.0],
            b_h: vec![0.0],
            w_out: vec![2.0],
        };
        assert!((apply_mechanism(&nn, 0.5) - 2.0 * 0.5f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn random_mechanism_ranges() {
        let mut rng = Rng::new(5);
        let mut slopes = Vec::new();
        for _ in 0..10_000 {
            match random_mechanism(&mut rng, MechanismKind::Linear) {
                MechanismSpec::Linear { slope, offset } => {
                    assert!((-5.0..=5.0).contains(&slope));
                    assert!((-3.0..=3.0).contains(&offset));
                    slopes.push(slope);
                }
                _ => unreachable!(),
            }
        }
        // slope ~ U(-5,5): empirical mean near 0
        assert!(mean(&slopes).abs() < 0.15, "mean slope {}", mean(&slopes));

        for _ in 0..1000 {
            match random_mechanism(&mut rng, MechanismKind::Tanh) {
                MechanismSpec::Tanh { offset } => assert!((-1.0..=1.0).contains(&offset)),
                _ => unreachable!(),
            }
        }
        match random_mechanism(&mut rng, MechanismKind::NeuralNet) {
            MechanismSpec::NeuralNet { w_in, b_h, w_out } => {
                assert_eq!(w_in.len(), DEFAULT_NN_HIDDEN);
                assert!(w_in
                    .iter()
                    .chain(&b_h)
                    .chain(&w_out)
                    .all(|w| (-5.0..=5.0).contains(w)));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn generate_standardizes_and_is_deterministic() {
        let mut rng = Rng::new(3);
        let spec = DgpSpec::random(
            &mut rng,
            MechanismKind::Tanh,
            NoiseFamily::Uniform,
            0,
            1000,
            77,
        );
        let d1 = generate(&spec).unwrap();
        let d2 = generate(&spec).unwrap();
        assert_eq!(d1, d2);
        assert!(d1.standardized);
        assert!(mean(&d1.a).abs() < 1e-9 && (variance(&d1.a) - 1.0).abs() < 1e-9);
        assert!(mean(&d1.b).abs() < 1e-9 && (variance(&d1.b) - 1.0).abs() < 1e-9);
        assert_eq!(d1.truth, Some(Direction::AtoB));
    }

    #[test]
    fn unit_slope_linear_correlation() {
        // Y = X + e with Var X = Var e = 1 gives corr = 1/sqrt(2); correlation is
        // unaffected by standardisation.
        let spec = DgpSpec {
            mediators: 0,
            noise_family: NoiseFamily::Gaussian,
            cause_variance: 1.0,
            mediator_noise_variance: 0.5,
            effect_noise_variance: 1.0,
            mechanisms: vec![MechanismSpec::Linear {
                slope: 1.0,
                offset: 0.0,
            }],
            n: 100_000,
            seed: 4242,
        };
        let d = generate(&spec).unwrap();
        let r = correlation(&d.a, &d.b);
        assert!((r - 1.0 / 2.0_f64.sqrt()).abs() < 0.01, "corr {r}");
    }

    #[test]
    fn standardize_is_idempotent() {
        let spec = DgpSpec {
            mediators: 0,
            noise_family: NoiseFamily::Gaussian,
            cause_variance: 1.0,
            mediator_noise_variance: 0.5,
            effect_noise_variance: 1.0,
            mechanisms: vec![MechanismSpec::Quadratic],
            n: 500,
            seed: 1,
        };
        let mut d = generate(&spec).unwrap();
        let before = d.clone();
        d.standardize().unwrap();
        assert_eq!(d, before);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let spec = DgpSpec {
            mediators: 1,
            noise_family: NoiseFamily::Uniform,
            cause_variance: 1.0,
            mediator_noise_variance: 0.5,
            effect_noise_variance: 1.0,
            mechanisms: vec![MechanismSpec::Quadratic, MechanismSpec::Quadratic],
            n: 200,
            seed: 9,
        };
        let d = generate(&spec).unwrap();
        let parsed = PairDataset::from_csv_str(&d.to_csv_string()).unwrap();
        assert_eq!(parsed.a, d.a);
        assert_eq!(parsed.b, d.b);
        assert!(parsed.standardized);
    }

    #[test]
    fn dgp_spec_json_round_trip() {
        let mut rng = Rng::new(8);
        let spec = DgpSpec::random(
            &mut rng,
            MechanismKind::NeuralNet,
            NoiseFamily::Gaussian,
            2,
            100,
            13,
        );
        let json = serde_json::to_string(&spec).unwrap();
        let back: DgpSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.mechanisms, spec.mechanisms);
        assert_eq!(back.seed, spec.seed);
    }

    #[test]
    fn validate_rejects_bad_specs() {
        let mut spec = DgpSpec {
            mediators: 1,
            noise_family: NoiseFamily::Gaussian,
            cause_variance: 1.0,
            mediator_noise_variance: 0.5,
            effect_noise_variance: 1.0,
            mechanisms: vec![MechanismSpec::Quadratic],
            n: 100,
            seed: 0,
        };
        assert!(spec.validate().is_err()); // missing one mechanism
        spec.mechanisms.push(MechanismSpec::Linear {
            slope: 9.0,
            offset: 0.0,
        });
        assert!(spec.validate().is_err()); // slope out of range
        spec.mechanisms[1] = MechanismSpec::Linear {
            slope: 1.0,
            offset: 0.0,
        };
        assert!(spec.validate().is_ok());
    }
}
