//! Operational surface around `octopus-core`: scenario configuration and
//! execution, adversary injection, size benchmarks, key files and noise
//! pre-generation.

pub mod bench;
pub mod config;
pub mod keyfile;
pub mod noise_cache;
pub mod report;
pub mod scenario;

use octopus_core::crypto::CryptoError;
use octopus_core::dp::DpError;
use octopus_core::encoding::DecodeError;
use octopus_core::pir::PirError;
use octopus_core::protocol::ProtocolError;
use octopus_core::registry::RegistryError;
use thiserror::Error;

pub use config::{NoiseMode, ScenarioConfig};
pub use report::RunReport;
pub use scenario::{run_scenario, Scenario};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Pir(#[from] PirError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
