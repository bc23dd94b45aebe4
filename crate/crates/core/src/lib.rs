//! Bivariate causal-direction discovery via conditional denoising diffusion (BiDD).
//!
//! Given paired scalar observations of two variables, BiDD trains one conditional
//! denoising-diffusion model per candidate direction and compares how strongly each
//! model's predicted noise depends on its conditioning variable. The direction whose
//! predictions are *less* dependent on the condition is declared causal.
//!
//! The crate is organised along the pipeline:
//!
//! - [`numerics`]: seeded RNG with stream splitting, distribution sampling, digamma.
//! - [`dgp`]: synthetic additive-noise data with unobserved mediator chains, plus
//!   CSV/JSON serialisation of pair datasets and generator specs.
//! - [`denoiser`]: the conditional MLP noise predictor with hand-written
//!   forward/backward passes and an AdamW optimizer with cosine annealing.
//! - [`diffusion`]: noise schedule, forward noising, the training loop and batched
//!   noise prediction.
//! - [`dependence`]: HSIC (median-heuristic Gaussian kernel) and the
//!   Kraskov k-NN mutual-information estimator.
//! - [`regression`]: Nadaraya-Watson kernel regression used by the baselines.
//! - [`decision`]: MI profiles, the voting/mean comparison rules, the full BiDD
//!   decision procedure, and three lightweight baselines.

pub mod decision;
pub mod denoiser;
pub mod dependence;
pub mod dgp;
pub mod diffusion;
pub mod error;
pub mod numerics;
pub mod regression;

pub use error::{Error, Result};
