//! Dependence measurement between predicted noise and conditioning values.
//!
//! Two estimators: HSIC with a median-heuristic Gaussian kernel (the default,
//! a biased V-statistic), and the Kraskov k-nearest-neighbour mutual-information
//! estimator (variant 1, max-norm metric).
//!
//! Both are deterministic given inputs and config, and exactly symmetric in
//! their arguments. Gram-matrix memory is quadratic in the input length: the
//! condition side of an MI profile with oversampling `k` on `m` evaluation rows
//! holds a `(k*m)^2` matrix, so callers must budget accordingly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{digamma, splitmix64, Rng};

/// HSIC configuration. The statistic is the biased V-statistic
/// `(1/n^2) tr(K H L H)`; the kernel bandwidth per variable is
/// `bandwidth_scale` times the median of that variable's nonzero pairwise
/// distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsicConfig {
    pub bandwidth_scale: f64,
}

impl Default for HsicConfig {
    fn default() -> Self {
        HsicConfig {
            bandwidth_scale: 1.0,
        }
    }
}

impl HsicConfig {
    fn validate(&self) -> Result<()> {
        if self.bandwidth_scale.is_nan() || self.bandwidth_scale <= 0.0 {
            return Err(Error::Parameter(format!(
                "bandwidth scale must be > 0, got {}",
                self.bandwidth_scale
            )));
        }
        Ok(())
    }
}

/// KSG configuration: neighbour count `k` (must stay below the sample count).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KsgConfig {
    pub k: usize,
}

impl Default for KsgConfig {
    fn default() -> Self {
        KsgConfig { k: 3 }
    }
}

/// Which dependence estimator an MI profile uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "lowercase")]
pub enum EstimatorKind {
    Hsic(HsicConfig),
    Ksg(KsgConfig),
}

impl Default for EstimatorKind {
    fn default() -> Self {
        EstimatorKind::Hsic(HsicConfig::default())
    }
}

impl EstimatorKind {
    pub fn label(&self) -> String {
        match self {
            EstimatorKind::Hsic(c) => format!("hsic(scale={})", c.bandwidth_scale),
            EstimatorKind::Ksg(c) => format!("ksg(k={})", c.k),
        }
    }

    /// Dependence between `x` and `y`.
    pub fn measure(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let prep = self.prepare(y)?;
        self.measure_prepared(x, &prep)
    }

    /// Precompute the `y`-side state so repeated calls against the same
    /// conditioning vector skip its Gram matrix / sort.
    pub fn prepare(&self, y: &[f64]) -> Result<PreparedCond> {
        match self {
            EstimatorKind::Hsic(cfg) => {
                cfg.validate()?;
                Ok(PreparedCond::Hsic(Gram::build(y, cfg.bandwidth_scale)?))
            }
            EstimatorKind::Ksg(cfg) => Ok(PreparedCond::Ksg(KsgSide::build(y, cfg.k)?)),
        }
    }

    pub fn measure_prepared(&self, x: &[f64], prep: &PreparedCond) -> Result<f64> {
        match (self, prep) {
            (EstimatorKind::Hsic(cfg), PreparedCond::Hsic(l)) => hsic_against(x, l, cfg),
            (EstimatorKind::Ksg(cfg), PreparedCond::Ksg(side)) => ksg_against(x, side, cfg),
            _ => Err(Error::Parameter("estimator/prepared-state mismatch".into())),
        }
    }
}

/// Precomputed condition-side state for one estimator.
pub enum PreparedCond {
    Hsic(Gram),
    Ksg(KsgSide),
}

/// HSIC between `x` and `y`: `(1/n^2) tr(K H L H)` with Gaussian Gram matrices
/// and median-heuristic bandwidths. A variable whose pairwise distances are all
/// zero (constant input) yields exactly 0.
pub fn hsic(x: &[f64], y: &[f64], cfg: &HsicConfig) -> Result<f64> {
    cfg.validate()?;
    check_pair(x, y, 4)?;
    let l = Gram::build(y, cfg.bandwidth_scale)?;
    hsic_against(x, &l, cfg)
}

/// Permutation p-value for HSIC: `p = (1 + #{permuted stat >= observed}) / (P + 1)`.
/// Kernel matrices are computed once; permutations only re-index them (the
/// median bandwidth is permutation-invariant).
pub fn hsic_permutation_pvalue(
    x: &[f64],
    y: &[f64],
    cfg: &HsicConfig,
    permutations: usize,
    rng: &mut Rng,
) -> Result<f64> {
    cfg.validate()?;
    check_pair(x, y, 4)?;
    if permutations < 99 {
        return Err(Error::Parameter(format!(
            "need at least 99 permutations, got {permutations}"
        )));
    }
    let k = Gram::build(x, cfg.bandwidth_scale)?;
    let l = Gram::build(y, cfg.bandwidth_scale)?;
    let n = x.len();
    let observed = hsic_from_grams(&k, &l, None);

    let mut perm: Vec<usize> = (0..n).collect();
    let mut at_least = 0usize;
    for _ in 0..permutations {
        rng.shuffle(&mut perm);
        if hsic_from_grams(&k, &l, Some(&perm)) >= observed {
            at_least += 1;
        }
    }
    Ok((1 + at_least) as f64 / (permutations + 1) as f64)
}

/// Symmetric Gaussian Gram matrix with row sums, or a degenerate marker when
/// the variable has no nonzero pairwise distance.
pub struct Gram {
    n: usize,
    /// Row-major `n x n` kernel values; empty when degenerate.
    entries: Vec<f64>,
    row_sums: Vec<f64>,
    total: f64,
    degenerate: bool,
}

impl Gram {
    fn build(v: &[f64], bandwidth_scale: f64) -> Result<Gram> {
        let n = v.len();
        if n < 4 {
            return Err(Error::Parameter(format!("HSIC needs n >= 4, got {n}")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite estimator input".into()));
        }
        let sigma = match median_nonzero_distance(v) {
            Some(med) => bandwidth_scale * med,
            None => {
                return Ok(Gram {
                    n,
                    entries: Vec::new(),
                    row_sums: Vec::new(),
                    total: 0.0,
                    degenerate: true,
                })
            }
        };
        let inv = 1.0 / (2.0 * sigma * sigma);
        let mut entries = vec![0.0; n * n];
        let mut row_sums = vec![1.0; n]; // diagonal k(x,x) = 1
        for i in 0..n {
            entries[i * n + i] = 1.0;
            for j in i + 1..n {
                let d = v[i] - v[j];
                let kij = (-d * d * inv).exp();
                entries[i * n + j] = kij;
                entries[j * n + i] = kij;
                row_sums[i] += kij;
                row_sums[j] += kij;
            }
        }
        let total = row_sums.iter().sum();
        Ok(Gram {
            n,
            entries,
            row_sums,
            total,
            degenerate: false,
        })
    }
}

/// HSIC of `x` against a prepared condition Gram. Streams the `x` kernel; only
/// the condition matrix is materialised.
fn hsic_against(x: &[f64], l: &Gram, cfg: &HsicConfig) -> Result<f64> {
    check_len(x, l.n)?;
    if l.degenerate {
        return Ok(0.0);
    }
    let sigma = match median_nonzero_distance(x) {
        Some(med) => cfg.bandwidth_scale * med,
        None => return Ok(0.0),
    };
    let n = l.n;
    let inv = 1.0 / (2.0 * sigma * sigma);

    // off-diagonal accumulation mirrors Gram::build so that swapping the two
    // variables reproduces the same flop order exactly
    let mut t1_off = 0.0;
    let mut k_rows = vec![1.0; n];
    for i in 0..n {
        let xi = x[i];
        let l_row = &l.entries[i * n..(i + 1) * n];
        for j in i + 1..n {
            let d = xi - x[j];
            let kij = (-d * d * inv).exp();
            t1_off += kij * l_row[j];
            k_rows[i] += kij;
            k_rows[j] += kij;
        }
    }
    let term1 = n as f64 + 2.0 * t1_off; // diagonal contributes k_ii * l_ii = 1
    let cross: f64 = k_rows.iter().zip(&l.row_sums).map(|(a, b)| a * b).sum();
    let k_total: f64 = k_rows.iter().sum();

    let nf = n as f64;
    let stat = (term1 - 2.0 / nf * cross + k_total * l.total / (nf * nf)) / (nf * nf);
    Ok(stat.max(0.0)) // V-statistic is nonnegative; clamp float dust
}

fn hsic_from_grams(k: &Gram, l: &Gram, perm: Option<&[usize]>) -> f64 {
    if k.degenerate || l.degenerate {
        return 0.0;
    }
    let n = k.n;
    let nf = n as f64;
    let mut term1 = 0.0;
    let mut cross = 0.0;
    match perm {
        None => {
            for i in 0..n {
                let (kr, lr) = (
                    &k.entries[i * n..(i + 1) * n],
                    &l.entries[i * n..(i + 1) * n],
                );
                for j in 0..n {
                    term1 += kr[j] * lr[j];
                }
                cross += k.row_sums[i] * l.row_sums[i];
            }
        }
        Some(p) => {
            for i in 0..n {
                let kr = &k.entries[p[i] * n..(p[i] + 1) * n];
                let lr = &l.entries[i * n..(i + 1) * n];
                for j in 0..n {
                    term1 += kr[p[j]] * lr[j];
                }
                cross += k.row_sums[p[i]] * l.row_sums[i];
            }
        }
    }
    ((term1 - 2.0 / nf * cross + k.total * l.total / (nf * nf)) / (nf * nf)).max(0.0)
}

/// Median of the nonzero pairwise absolute differences (upper median for even
/// counts). `None` when every pairwise distance is zero.
fn median_nonzero_distance(v: &[f64]) -> Option<f64> {
    let n = v.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = (v[i] - v[j]).abs();
            if d > 0.0 {
                dists.push(d);
            }
        }
    }
    if dists.is_empty() {
        return None;
    }
    let mid = dists.len() / 2;
    let (_, med, _) = dists.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap());
    Some(*med)
}

/// Condition-side state for the KSG estimator: the deterministically jittered
/// values plus a sorted copy for neighbour counting.
pub struct KsgSide {
    jittered: Vec<f64>,
    sorted: Vec<f64>,
    k: usize,
}

impl KsgSide {
    fn build(v: &[f64], k: usize) -> Result<KsgSide> {
        if k < 1 {
            return Err(Error::Parameter("KSG needs k >= 1".into()));
        }
        if v.len() <= k {
            return Err(Error::Parameter(format!(
                "KSG needs n > k, got n={} k={k}",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite estimator input".into()));
        }
        let jittered = jitter_values(v);
        let mut sorted = jittered.clone();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(KsgSide {
            jittered,
            sorted,
            k,
        })
    }
}

/// KSG mutual-information estimator (variant 1):
/// `psi(k) + psi(n) - mean_i[psi(n_x(i)+1) + psi(n_y(i)+1)]`, with neighbour
/// counts taken strictly inside the max-norm ball of the k-th joint neighbour.
///
/// Ties are broken by an infinitesimal deterministic jitter derived from each
/// value and its index, which keeps the estimator symmetric and reproducible.
pub fn ksg_mi(x: &[f64], y: &[f64], cfg: &KsgConfig) -> Result<f64> {
    check_pair(x, y, 2)?;
    let side = KsgSide::build(y, cfg.k)?;
    ksg_against(x, &side, cfg)
}

fn ksg_against(x: &[f64], side: &KsgSide, cfg: &KsgConfig) -> Result<f64> {
    check_len(x, side.jittered.len())?;
    if cfg.k != side.k {
        return Err(Error::Parameter(
            "prepared KSG state has a different k".into(),
        ));
    }
    let n = x.len();
    if n <= cfg.k {
        return Err(Error::Parameter(format!(
            "KSG needs n > k, got n={n} k={}",
            cfg.k
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite estimator input".into()));
    }
    let xj = jitter_values(x);
    let yj = &side.jittered;
    let mut x_sorted = xj.clone();
    x_sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

    let mut scratch = vec![0.0; n - 1];
    let mut psi_sum = 0.0;
    for i in 0..n {
        let (xi, yi) = (xj[i], yj[i]);
        let mut w = 0;
        for j in 0..n {
            if j != i {
                scratch[w] = (xi - xj[j]).abs().max((yi - yj[j]).abs());
                w += 1;
            }
        }
        let (_, kth, _) =
            scratch.select_nth_unstable_by(cfg.k - 1, |a, b| a.partial_cmp(b).unwrap());
        let eps = *kth;
        let nx = count_strictly_within(&x_sorted, xi, eps);
        let ny = count_strictly_within(&side.sorted, yi, eps);
        psi_sum += digamma((nx + 1) as f64)? + digamma((ny + 1) as f64)?;
    }
    Ok(digamma(cfg.k as f64)? + digamma(n as f64)? - psi_sum / n as f64)
}

/// Count values `v` with `|v - center| < eps`, excluding the centre point itself.
fn count_strictly_within(sorted: &[f64], center: f64, eps: f64) -> usize {
    let lo = sorted.partition_point(|&v| v <= center - eps);
    let hi = sorted.partition_point(|&v| v < center + eps);
    hi.saturating_sub(lo).saturating_sub(1)
}

/// Deterministic tie-breaking jitter: a function of each value and its index
/// only, so the same vector receives the same jitter regardless of which
/// argument slot it occupies.
fn jitter_values(v: &[f64]) -> Vec<f64> {
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let h = splitmix64(x.to_bits() ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            x + (h as f64 / u64::MAX as f64 - 0.5) * 1e-10
        })
        .collect()
}

fn check_pair(x: &[f64], y: &[f64], min_n: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Parameter(format!(
            "estimator inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < min_n {
        return Err(Error::Parameter(format!(
            "need at least {min_n} samples, got {}",
            x.len()
        )));
    }
    Ok(())
}

fn check_len(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::Parameter(format!(
            "input length {} does not match prepared length {n}",
            x.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_pair(n: usize, rho: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = Rng::new(seed);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let u = rng.standard_normal();
            let v = rng.standard_normal();
            x.push(u);
            y.push(rho * u + (1.0 - rho * rho).sqrt() * v);
        }
        (x, y)
    }

    #[test]
    fn hsic_constant_input_is_zero() {
        let cfg = HsicConfig::default();
        let x = vec![2.0; 50];
        let mut rng = Rng::new(1);
        let y = rng.standard_normal_vec(50);
        assert_eq!(hsic(&x, &y, &cfg).unwrap(), 0.0);
        assert_eq!(hsic(&y, &x, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn hsic_is_exactly_symmetric() {
        let cfg = HsicConfig::default();
        let (x, y) = gauss_pair(300, 0.6, 7);
        let a = hsic(&x, &y, &cfg).unwrap();
        let b = hsic(&y, &x, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
    }

    #[test]
    fn hsic_dependent_exceeds_independent() {
        let cfg = HsicConfig::default();
        let mut wins = 0;
        for seed in 0..20 {
            let (xi, yi) = gauss_pair(500, 0.0, 100 + seed);
            let (xd, yd) = gauss_pair(500, 0.9, 200 + seed);
            let ind = hsic(&xi, &yi, &cfg).unwrap();
            let dep = hsic(&xd, &yd, &cfg).unwrap();
            if dep > ind {
                wins += 1;
            }
        }
        assert!(wins >= 19, "dependent larger in only {wins}/20 seeds");
    }

    #[test]
    fn hsic_translation_scale_invariance() {
        // the median heuristic rescales with the data
        let cfg = HsicConfig::default();
        let (x, y) = gauss_pair(400, 0.5, 3);
        let base = hsic(&x, &y, &cfg).unwrap();
        let shifted: Vec<f64> = x.iter().map(|v| 3.7 * v + 11.0).collect();
        let moved = hsic(&shifted, &y, &cfg).unwrap();
        assert!(((moved - base) / base).abs() < 1e-9, "{base} vs {moved}");
    }

    #[test]
    fn hsic_rejects_bad_inputs() {
        let cfg = HsicConfig::default();
        assert!(hsic(&[1.0, 2.0], &[1.0, 2.0], &cfg).is_err()); // n < 4
        assert!(hsic(&[1.0; 5], &[1.0; 4], &cfg).is_err()); // length mismatch
        let bad = HsicConfig {
            bandwidth_scale: 0.0,
        };
        assert!(hsic(&[1.0; 8], &[1.0; 8], &bad).is_err());
    }

    #[test]
    fn permutation_pvalue_bounds_and_dependence() {
        let cfg = HsicConfig::default();
        let mut rng = Rng::new(5);
        let x = rng.standard_normal_vec(200);
        let y = x.clone();
        let p = hsic_permutation_pvalue(&x, &y, &cfg, 199, &mut rng).unwrap();
        assert!(p <= 0.01, "perfect dependence gave p={p}");
        assert!(p >= 1.0 / 200.0);

        let z = rng.standard_normal_vec(200);
        let p2 = hsic_permutation_pvalue(&x, &z, &cfg, 99, &mut rng).unwrap();
        assert!((1.0 / 100.0..=1.0).contains(&p2));

        assert!(hsic_permutation_pvalue(&x, &z, &cfg, 50, &mut rng).is_err());
    }

    #[test]
    fn ksg_is_exactly_symmetric_and_deterministic() {
        let cfg = KsgConfig::default();
        let (x, y) = gauss_pair(400, 0.7, 11);
        let a = ksg_mi(&x, &y, &cfg).unwrap();
        let b = ksg_mi(&y, &x, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, ksg_mi(&x, &y, &cfg).unwrap());
        assert!(a > 0.2, "correlated pair should have positive MI, got {a}");
    }

    #[test]
    fn ksg_handles_ties() {
        // heavy duplication: jitter must keep neighbour counts well-defined
        let x: Vec<f64> = (0..200).map(|i| (i % 4) as f64).collect();
        let y: Vec<f64> = (0..200).map(|i| ((i / 4) % 4) as f64).collect();
        let cfg = KsgConfig { k: 3 };
        let mi = ksg_mi(&x, &y, &cfg).unwrap();
        assert!(mi.is_finite());
    }

    #[test]
    fn ksg_rejects_small_samples() {
        let cfg = KsgConfig { k: 5 };
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(matches!(ksg_mi(&x, &x, &cfg), Err(Error::Parameter(_))));
    }

    #[test]
    fn prepared_path_matches_direct_path() {
        let (x, y) = gauss_pair(300, 0.4, 23);
        for est in [
            EstimatorKind::Hsic(HsicConfig::default()),
            EstimatorKind::Ksg(KsgConfig::default()),
        ] {
            let direct = est.measure(&x, &y).unwrap();
            let prep = est.prepare(&y).unwrap();
            let prepared = est.measure_prepared(&x, &prep).unwrap();
            assert_eq!(direct, prepared);
        }
    }
}
