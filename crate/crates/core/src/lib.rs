//! Steel's many-to-one rank test for treatments versus a control, with ties.
//!
//! Everything here is conditional on the pooled tie pattern: the null model is
//! the uniform distribution over all splits of the pooled midranks into groups
//! of the observed sizes.
//!
//! * [`ranks`] midranks, tie pattern and asymptotic diagnostics
//! * [`moments`] exact conditional moments of the Mann–Whitney statistics
//! * [`statistics`] observed Mann–Whitney values and the Steel statistics
//! * [`randomization`] exact and Monte Carlo randomization p-values
//! * [`gauss`] one-factor normal approximation by quadrature
//! * [`confidence`] simultaneous shift bounds and intervals
//! * [`pairwise`] all-pairs comparisons among treatments

pub mod confidence;
mod error;
pub mod gauss;
pub mod moments;
pub mod pairwise;
pub mod randomization;
pub mod ranks;
pub mod statistics;

pub use error::{Error, Result};
pub use gauss::FactorModel;
pub use moments::MomentSet;
pub use ranks::{Diagnostics, RankedSamples, TiePattern};
pub use statistics::{Alternative, SteelObservation};

#[cfg(test)]
pub(crate) mod testutil;
