//! Trust-state simulation for devices that hop between radio access
//! technologies (RATs) under a Zero Trust policy.
//!
//! The crate models a five-component trust state per link, its decay over
//! time, the loss of trust at each RAT crossing, the energy and latency spent
//! re-establishing it, portable trust artefacts that carry evidence across a
//! crossing, parallel links, and an adversary that jams, spoofs and forces
//! transitions. Missions are described in a small text format and run by a
//! deterministic discrete-event loop.
//!
//! ```
//! use zt_ratsim::{mission, scenario};
//!
//! let sc = scenario::builtin("worked-example").unwrap();
//! let (timeline, report) = mission::run(&sc).unwrap();
//! assert_eq!(report.crossings.len(), 1);
//! assert!(timeline.rows.len() > 100);
//! ```

pub mod adversary;
pub mod composition;
pub mod error;
pub mod mission;
pub mod output;
pub mod portability;
pub mod rng;
pub mod scenario;
pub mod transition;
pub mod trust;

pub use error::{Error, Result};
pub use mission::{run, MissionReport, Timeline};
pub use scenario::{parse_scenario, MissionScenario};
pub use transition::{SurvivalMatrixSet, TransitionKind};
pub use trust::{RatId, RatProfile, TrustComponent, TrustState, WeightVector};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/trust-state.md")]
    mod trust_state {}
    #[doc = include_str!("../../../book/src/crossings.md")]
    mod crossings {}
    #[doc = include_str!("../../../book/src/portability.md")]
    mod portability {}
    #[doc = include_str!("../../../book/src/parallel-links.md")]
    mod parallel_links {}
    #[doc = include_str!("../../../book/src/adversary.md")]
    mod adversary {}
    #[doc = include_str!("../../../book/src/missions.md")]
    mod missions {}
    #[doc = include_str!("../../../book/src/scenario-files.md")]
    mod scenario_files {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
