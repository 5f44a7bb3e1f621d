use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Every structural problem found while validating a network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationErrors {
    pub issues: Vec<String>,
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            f.write_str(issue)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    Validation(ValidationErrors),
    #[error("unknown leg `{0}`")]
    UnknownLeg(String),
    #[error("plan does not match network: {0}")]
    PlanMismatch(String),
    #[error("random-key vector has length {got}, bin map expects {expected}")]
    KeyLength { got: usize, expected: usize },
    #[error("slot {slot} of leg `{leg}` wave {wave} has no bin in the bin map")]
    SlotNotInBinMap { leg: String, wave: u8, slot: u8 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("plan has {0} constraint violations")]
    InfeasiblePlan(usize),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
