//! Collaboration-network measures, network instruments and panel IV
//! estimation of knowledge-exchange effects among inventors, with a
//! synthetic-economy generator whose known parameters serve as ground truth.

pub mod corpus;
pub mod counterfactual;
pub mod error;
pub mod estimator;
pub mod geo;
pub mod measures;
pub mod model;
pub mod network;
pub mod pipeline;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    CategoryLevel, Citation, EstablishmentId, FirmId, InventorId, InventorRecord, PatentId, PatentRecord, Period,
    PeriodSpan, Periodization,
};
