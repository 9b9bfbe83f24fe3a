//! One error type across the simulator and CLI.

use std::io;

use thiserror::Error;

use pmdss_core::adversary::AdversaryError;
use pmdss_core::field::FieldError;
use pmdss_core::hashing::HashError;
use pmdss_core::pm_code::PmError;
use pmdss_core::secure_protocol::ProtocolError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Pm(#[from] PmError),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("bad configuration: {0}")]
    Config(String),
    #[error("bad on-disk data: {0}")]
    Codec(String),
}

impl SimError {
    /// Short stable tag for the machine-readable error record.
    pub fn kind(&self) -> &'static str {
        match self {
            SimError::Pm(e) => match e {
                PmError::InvalidParams(_) => "InvalidParams",
                PmError::WrongSymbolCount { .. } => "WrongSymbolCount",
                PmError::SamePair(_) => "SamePair",
                PmError::InvalidNodeId(_) => "InvalidNodeId",
                PmError::DuplicateNode(_) => "DuplicateNode",
                PmError::HelperIsFailed(_) => "HelperIsFailed",
                PmError::NotEnoughHelpers { .. } => "NotEnoughHelpers",
                PmError::NotEnoughNodes { .. } => "NotEnoughNodes",
                PmError::MalformedNode { .. } => "MalformedNode",
                PmError::Field(_) => "Field",
            },
            SimError::Hash(e) => match e {
                HashError::SamePair(_) => "SamePair",
                HashError::IncompleteSymbolSet { .. } => "IncompleteSymbolSet",
                HashError::UnknownSymbolId(_) => "UnknownSymbolId",
                HashError::StoreSealed => "StoreSealed",
                HashError::StoreNotSealed => "StoreNotSealed",
                HashError::Malformed(_) => "MalformedStore",
                HashError::Field(_) => "Field",
            },
            SimError::Protocol(e) => match e {
                ProtocolError::MissingHash(_, _) => "MissingHash",
                ProtocolError::TooManyDetected { .. } => "TooManyDetected",
                ProtocolError::InconclusiveDetection(_) => "InconclusiveDetection",
                ProtocolError::NotEnoughCleanHelpers { .. } => "NotEnoughCleanHelpers",
                ProtocolError::NotEnoughCleanNodes { .. } => "NotEnoughCleanNodes",
                ProtocolError::WrongContactCount { .. } => "WrongContactCount",
                ProtocolError::SelfCheckFailed { .. } => "SelfCheckFailed",
                ProtocolError::Pm(_) => "Pm",
                ProtocolError::Hash(_) => "Hash",
                ProtocolError::Field(_) => "Field",
            },
            SimError::Adversary(e) => match e {
                AdversaryError::BudgetExceeded { .. } => "BudgetExceeded",
                AdversaryError::NotControlled(_) => "NotControlled",
                AdversaryError::NotContacted(_) => "NotContacted",
                AdversaryError::NoUncheckedSymbol(_) => "NoUncheckedSymbol",
                AdversaryError::NoOrthogonalError { .. } => "NoOrthogonalError",
                AdversaryError::Pm(_) => "Pm",
                AdversaryError::Field(_) => "Field",
            },
            SimError::Field(_) => "Field",
            SimError::Io(_) => "Io",
            SimError::Config(_) => "Config",
            SimError::Codec(_) => "Codec",
        }
    }
}
