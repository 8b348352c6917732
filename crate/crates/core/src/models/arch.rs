use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four predictive encoders: with or without the motor pathway, with or
/// without LSTM memory in the sensory pathway.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchKind {
    S,
    Sm,
    RecurrentS,
    RecurrentSm,
}

impl ArchKind {
    pub const ALL: [ArchKind; 4] = [
        ArchKind::S,
        ArchKind::Sm,
        ArchKind::RecurrentS,
        ArchKind::RecurrentSm,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ArchKind::S => "s",
            ArchKind::Sm => "sm",
            ArchKind::RecurrentS => "recurrent-s",
            ArchKind::RecurrentSm => "recurrent-sm",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ArchKind::S => "S-encoder",
            ArchKind::Sm => "SM-encoder",
            ArchKind::RecurrentS => "Recurrent-S-encoder",
            ArchKind::RecurrentSm => "Recurrent-SM-encoder",
        }
    }

    pub fn uses_motor(self) -> bool {
        matches!(self, ArchKind::Sm | ArchKind::RecurrentSm)
    }

    pub fn is_recurrent(self) -> bool {
        matches!(self, ArchKind::RecurrentS | ArchKind::RecurrentSm)
    }
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ArchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ArchKind::ALL
            .into_iter()
            .find(|k| k.id() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown architecture `{s}` (expected s, sm, recurrent-s or recurrent-sm)"
                ))
            })
    }
}

/// Layer plan of one architecture.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub kind: ArchKind,
    /// Width of the sensory representation z^s.
    pub sensory_code_dims: usize,
    /// Width of the motor representation z^m (unused by motorless kinds).
    pub motor_code_dims: usize,
    pub sensory_hidden: Vec<usize>,
    pub motor_hidden: Vec<usize>,
    /// LSTM layer widths; empty for memoryless kinds.
    pub lstm: Vec<usize>,
    pub predictor_hidden: usize,
    /// Truncated-BPTT window length for recurrent kinds.
    pub horizon: usize,
}

impl ArchitectureSpec {
    pub fn canonical(kind: ArchKind) -> Self {
        let (hidden, lstm) = if kind.is_recurrent() {
            (vec![16], vec![32, 32, 32])
        } else {
            (vec![16, 32, 64], Vec::new())
        };
        Self {
            kind,
            sensory_code_dims: 10,
            motor_code_dims: 5,
            motor_hidden: if kind.uses_motor() { hidden.clone() } else { Vec::new() },
            sensory_hidden: hidden,
            lstm,
            predictor_hidden: 128,
            horizon: 20,
        }
    }

    /// Window length used for training, evaluation and encoding; `None` for
    /// memoryless kinds.
    pub fn window(&self) -> Option<usize> {
        self.kind.is_recurrent().then_some(self.horizon)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidArgument(format!("{}: {msg}", self.kind)));
        if self.sensory_code_dims == 0 || self.predictor_hidden == 0 {
            return fail("layer widths must be positive");
        }
        if self.sensory_hidden.iter().chain(&self.motor_hidden).chain(&self.lstm).any(|&w| w == 0) {
            return fail("layer widths must be positive");
        }
        if self.kind.is_recurrent() != !self.lstm.is_empty() {
            return fail("LSTM layers must be present exactly for recurrent kinds");
        }
        if self.kind.is_recurrent() && self.horizon < 2 {
            return fail("horizon must be at least 2");
        }
        if self.kind.uses_motor() && self.motor_code_dims == 0 {
            return fail("motor code must be non-empty");
        }
        if !self.kind.uses_motor() && !self.motor_hidden.is_empty() {
            return fail("motorless kinds have no motor layers");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_plans() {
        let sm = ArchitectureSpec::canonical(ArchKind::Sm);
        assert_eq!(sm.sensory_hidden, vec![16, 32, 64]);
        assert_eq!(sm.motor_hidden, vec![16, 32, 64]);
        assert_eq!(sm.window(), None);
        let s = ArchitectureSpec::canonical(ArchKind::S);
        assert!(s.motor_hidden.is_empty());
        let rsm = ArchitectureSpec::canonical(ArchKind::RecurrentSm);
        assert_eq!(rsm.sensory_hidden, vec![16]);
        assert_eq!(rsm.lstm, vec![32, 32, 32]);
        assert_eq!(rsm.window(), Some(20));
        assert_eq!((rsm.sensory_code_dims, rsm.motor_code_dims), (10, 5));
        for kind in ArchKind::ALL {
            ArchitectureSpec::canonical(kind).validate().unwrap();
            assert_eq!(kind.id().parse::<ArchKind>().unwrap(), kind);
        }
    }

    #[test]
    fn invalid_plan() {
        let mut spec = ArchitectureSpec::canonical(ArchKind::RecurrentS);
        spec.lstm.clear();
        assert!(spec.validate().is_err());
    }
}
