use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Identity of a simulated vehicle (and, nominally, of its roadside track).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The three driver classes. Declaration order is the precedence order used
/// when more than one class is recognized: later variants win.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Behavior {
    #[default]
    Safe,
    Distracted,
    Aggressive,
}

impl Behavior {
    pub const ALL: [Behavior; 3] = [Behavior::Safe, Behavior::Distracted, Behavior::Aggressive];

    pub fn index(self) -> usize {
        match self {
            Behavior::Safe => 0,
            Behavior::Distracted => 1,
            Behavior::Aggressive => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Behavior::Safe => "safe",
            Behavior::Distracted => "distracted",
            Behavior::Aggressive => "aggressive",
        }
    }

    /// Name of the event-calculus fluent that carries this class.
    pub fn fluent(self) -> &'static str {
        match self {
            Behavior::Safe => "safeDriving",
            Behavior::Distracted => "distractedDriving",
            Behavior::Aggressive => "aggressiveDriving",
        }
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown behavior class `{0}`")]
pub struct UnknownBehavior(pub String);

impl FromStr for Behavior {
    type Err = UnknownBehavior;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "safe" | "safedriving" => Ok(Behavior::Safe),
            "distracted" | "distracteddriving" => Ok(Behavior::Distracted),
            "aggressive" | "aggressivedriving" => Ok(Behavior::Aggressive),
            _ => Err(UnknownBehavior(s.to_string())),
        }
    }
}
