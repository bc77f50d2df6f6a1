//! Beamforming optimization for downlink multi-user MIMO.
//!
//! The crate provides a complex-matrix autodiff core ([`tensor`]), a seeded
//! geometric mmWave channel simulator ([`channel`]), rate and loss metrics
//! ([`metrics`]), a closed-form liquid recurrent stack ([`liquid`]), the
//! online gradient-fed liquid optimizer ([`glnn`]) and the WMMSE baseline
//! ([`wmmse`]).

pub mod error;
pub mod tensor;
pub mod kvconfig;
pub mod metrics;
pub mod channel;
pub mod liquid;
pub mod checkpoint;
pub mod glnn;
pub mod wmmse;

pub use error::{Error, Result};
pub use tensor::{ComplexMatrix, Graph, VarId};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
