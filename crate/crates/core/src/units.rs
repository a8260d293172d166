//! Scaled-integer quantities.
//!
//! Times are whole minutes from the start of the planning horizon, volumes are
//! litres (m³ × 1000) and costs are micro-currency units. Every objective is
//! accumulated in these integer units so that two solvers walking the same
//! itineraries in different orders agree bit for bit.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Minutes since the start of the planning horizon (or a duration in minutes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Minutes(pub i64);

impl Minutes {
    pub const ZERO: Minutes = Minutes(0);

    /// Converts decimal hours, rounding to the nearest minute.
    pub fn from_hours(hours: f64) -> Minutes {
        Minutes((hours * 60.0).round() as i64)
    }

    /// Converts decimal hours, rounding up to the next whole minute.
    ///
    /// All timetable data is whole minutes, so for a waiting time `w`,
    /// `slack >= w` holds exactly when `slack >= ceil(w)`.
    pub fn from_hours_ceil(hours: f64) -> Minutes {
        Minutes((hours * 60.0 - 1e-9).ceil() as i64)
    }

    pub fn hours(self) -> f64 {
        self.0 as f64 / 60.0
    }
}

impl Add for Minutes {
    type Output = Minutes;
    fn add(self, rhs: Minutes) -> Minutes {
        Minutes(self.0 + rhs.0)
    }
}

impl Sub for Minutes {
    type Output = Minutes;
    fn sub(self, rhs: Minutes) -> Minutes {
        Minutes(self.0 - rhs.0)
    }
}

impl fmt::Display for Minutes {
    /// `HH:MM`, with hours allowed past 24 for multi-day horizons.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let m = self.0.abs();
        write!(f, "{sign}{:02}:{:02}", m / 60, m % 60)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid time `{0}`: expected HH:MM or decimal hours")]
pub struct ParseTimeError(pub String);

impl FromStr for Minutes {
    type Err = ParseTimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || ParseTimeError(s.to_string());
        if let Some((h, m)) = t.split_once(':') {
            let h: i64 = h.parse().map_err(|_| err())?;
            let m: i64 = m.parse().map_err(|_| err())?;
            if h < 0 || !(0..60).contains(&m) {
                return Err(err());
            }
            Ok(Minutes(h * 60 + m))
        } else {
            let hours: f64 = t.parse().map_err(|_| err())?;
            if !hours.is_finite() {
                return Err(err());
            }
            Ok(Minutes::from_hours(hours))
        }
    }
}

impl Serialize for Minutes {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Minutes {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct TimeVisitor;

        impl Visitor<'_> for TimeVisitor {
            type Value = Minutes;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a time as \"HH:MM\" or decimal hours")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Minutes, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Minutes, E> {
                Ok(Minutes(v * 60))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Minutes, E> {
                Ok(Minutes(v as i64 * 60))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Minutes, E> {
                if v.is_finite() {
                    Ok(Minutes::from_hours(v))
                } else {
                    Err(E::custom("non-finite time"))
                }
            }
        }

        deserializer.deserialize_any(TimeVisitor)
    }
}

/// Volume in litres (thousandths of a cubic metre).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Volume(pub i64);

impl Volume {
    pub fn from_m3(m3: f64) -> Volume {
        Volume((m3 * 1000.0).round() as i64)
    }

    pub fn m3(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl Add for Volume {
    type Output = Volume;
    fn add(self, rhs: Volume) -> Volume {
        Volume(self.0 + rhs.0)
    }
}

impl Sub for Volume {
    type Output = Volume;
    fn sub(self, rhs: Volume) -> Volume {
        Volume(self.0 - rhs.0)
    }
}

impl fmt::Display for Volume {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.m3())
    }
}

impl Serialize for Volume {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.m3())
    }
}

impl<'de> Deserialize<'de> for Volume {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let m3 = f64::deserialize(deserializer)?;
        if !m3.is_finite() {
            return Err(de::Error::custom("non-finite volume"));
        }
        Ok(Volume::from_m3(m3))
    }
}

/// Cost in micro-currency units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Cost(pub i64);

impl Cost {
    /// Cost of moving `volume` over `distance_km` at `unit_cost` per (km·m³),
    /// rounded to the nearest micro unit.
    pub fn of_leg(unit_cost: f64, volume: Volume, distance_km: f64) -> Cost {
        Cost((unit_cost * volume.m3() * distance_km * 1e6).round() as i64)
    }

    pub fn currency(self) -> f64 {
        self.0 as f64 / 1e6
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        Cost(self.0 + rhs.0)
    }
}
