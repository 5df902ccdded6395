//! Statistical verification of the sampler and of its bounds.

pub mod binning;
pub mod energy;
pub mod ergodicity;
pub mod invariance;
pub mod lemmas;
pub mod tv;

pub use binning::{BinSpec, Binning};
pub use energy::{energy_test, EnergyTest};
pub use ergodicity::{verify_uniform_ergodicity, TvCurve, TvPoint, Verdict, VerifyPlan};
pub use invariance::{invariance_test, InvarianceReport};
pub use lemmas::{lemma_suite, LemmaReport};
pub use tv::{estimate_tv, TvEstimate};
