use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::MicroBehavior;
use crate::error::{Error, Result};
use crate::label::{Behavior, VehicleId};

/// Braking class of a longitudinal acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Braking {
    #[default]
    None,
    Normal,
    Hard,
}

impl Braking {
    /// `Hard` at or below `hbd`, `Normal` in `(hbd, nbd]`.
    pub fn classify(accel_mps2: f64, hbd: f64, nbd: f64) -> Braking {
        if accel_mps2 <= hbd {
            Braking::Hard
        } else if accel_mps2 <= nbd {
            Braking::Normal
        } else {
            Braking::None
        }
    }
}

/// Set of injected micro-behaviors active in a frame. Serialized as
/// `a+b` in a fixed order, or `-` when empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct InjectedFlags(u8);

impl InjectedFlags {
    pub const NONE: InjectedFlags = InjectedFlags(0);

    pub fn insert(&mut self, m: MicroBehavior) {
        self.0 |= m.bit();
    }

    pub fn contains(self, m: MicroBehavior) -> bool {
        self.0 & m.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = MicroBehavior> {
        MicroBehavior::ALL.into_iter().filter(move |m| self.contains(*m))
    }
}

impl FromIterator<MicroBehavior> for InjectedFlags {
    fn from_iter<T: IntoIterator<Item = MicroBehavior>>(iter: T) -> Self {
        let mut f = InjectedFlags::NONE;
        for m in iter {
            f.insert(m);
        }
        f
    }
}

impl fmt::Display for InjectedFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        for (i, m) in self.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            f.write_str(m.as_str())?;
        }
        Ok(())
    }
}

impl FromStr for InjectedFlags {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "-" || s.is_empty() {
            return Ok(InjectedFlags::NONE);
        }
        s.split('+').map(str::parse::<MicroBehavior>).collect()
    }
}

impl Serialize for InjectedFlags {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InjectedFlags {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One vehicle in one frame. Field order is the on-disk column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub frame: u64,
    pub vehicle_id: VehicleId,
    pub lane: u8,
    /// Longitudinal position in cell units (fractional, wraps at the ring length).
    pub cell: f64,
    pub lateral_offset: f64,
    pub speed_mps: f64,
    pub accel_mps2: f64,
    pub steering_deg: f64,
    pub braking: Braking,
    pub orientation_deg: f64,
    pub injected_flags: InjectedFlags,
    pub label: Behavior,
}

/// Labelled per-frame ground truth for one scenario, ordered by frame and
/// then vehicle id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruthTrace {
    pub records: Vec<TraceRecord>,
}

impl GroundTruthTrace {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn vehicle_ids(&self) -> Vec<VehicleId> {
        let mut ids: Vec<VehicleId> = self.records.iter().map(|r| r.vehicle_id).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Records of one vehicle, in frame order.
    pub fn series(&self, id: VehicleId) -> Vec<&TraceRecord> {
        self.records.iter().filter(|r| r.vehicle_id == id).collect()
    }

    /// Per-vehicle series for every vehicle, ordered by id.
    pub fn by_vehicle(&self) -> Vec<(VehicleId, Vec<&TraceRecord>)> {
        let mut map: std::collections::BTreeMap<VehicleId, Vec<&TraceRecord>> = Default::default();
        for r in &self.records {
            map.entry(r.vehicle_id).or_default().push(r);
        }
        map.into_iter().collect()
    }

    pub fn label_of(&self, id: VehicleId) -> Option<Behavior> {
        self.records.iter().find(|r| r.vehicle_id == id).map(|r| r.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_roundtrip_in_fixed_order() {
        let f: InjectedFlags = [MicroBehavior::Weave, MicroBehavior::Overspeed].into_iter().collect();
        assert_eq!(f.to_string(), "overspeed+weave");
        assert_eq!("overspeed+weave".parse::<InjectedFlags>().unwrap(), f);
        assert_eq!("-".parse::<InjectedFlags>().unwrap(), InjectedFlags::NONE);
        assert_eq!(InjectedFlags::NONE.to_string(), "-");
    }

    #[test]
    fn braking_bands() {
        assert_eq!(Braking::classify(-8.0, -8.0, -3.0), Braking::Hard);
        assert_eq!(Braking::classify(-7.5, -8.0, -3.0), Braking::Normal);
        assert_eq!(Braking::classify(-3.0, -8.0, -3.0), Braking::Normal);
        assert_eq!(Braking::classify(-2.9, -8.0, -3.0), Braking::None);
    }
}
