//! Travel modes and small per-mode containers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A means of traversing an edge. `Walk` is always available and never
/// consumes energy; the other variants are shared e-mobility tools.
///
/// The declaration order is the canonical order used for tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    Walk,
    EBike,
    EScooter,
    ECar,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Walk, Mode::EBike, Mode::EScooter, Mode::ECar];
    pub const TOOLS: [Mode; 3] = [Mode::EBike, Mode::EScooter, Mode::ECar];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn is_tool(self) -> bool {
        self != Mode::Walk
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Walk => "Walk",
            Mode::EBike => "EBike",
            Mode::EScooter => "EScooter",
            Mode::ECar => "ECar",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown mode {0:?}")]
pub struct UnknownMode(pub String);

impl FromStr for Mode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL.into_iter().find(|m| m.as_str().eq_ignore_ascii_case(s)).ok_or_else(|| UnknownMode(s.to_string()))
    }
}

/// Bit set over [`Mode`]. Serializes as a list of mode names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ModeSet(u8);

impl ModeSet {
    pub const EMPTY: ModeSet = ModeSet(0);
    pub const ALL: ModeSet = ModeSet(0b1111);

    pub fn only(mode: Mode) -> Self {
        ModeSet(1 << mode.index())
    }

    #[inline]
    pub fn contains(self, mode: Mode) -> bool {
        self.0 & (1 << mode.index()) != 0
    }

    pub fn insert(&mut self, mode: Mode) {
        self.0 |= 1 << mode.index();
    }

    pub fn remove(&mut self, mode: Mode) {
        self.0 &= !(1 << mode.index());
    }

    pub fn with(mut self, mode: Mode) -> Self {
        self.insert(mode);
        self
    }

    pub fn without(mut self, mode: Mode) -> Self {
        self.remove(mode);
        self
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Mode> {
        Mode::ALL.into_iter().filter(move |m| self.contains(*m))
    }
}

impl FromIterator<Mode> for ModeSet {
    fn from_iter<I: IntoIterator<Item = Mode>>(iter: I) -> Self {
        let mut set = ModeSet::EMPTY;
        for m in iter {
            set.insert(m);
        }
        set
    }
}

impl Serialize for ModeSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ModeSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let modes = Vec::<Mode>::deserialize(deserializer)?;
        Ok(modes.into_iter().collect())
    }
}

/// Dense per-mode storage indexed by [`Mode::index`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerMode<T>(pub [T; 4]);

impl<T> PerMode<T> {
    #[inline]
    pub fn get(&self, mode: Mode) -> &T {
        &self.0[mode.index()]
    }

    #[inline]
    pub fn set(&mut self, mode: Mode, value: T) {
        self.0[mode.index()] = value;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert!("Bus".parse::<Mode>().is_err());
    }

    #[test]
    fn mode_set_serializes_as_list() {
        let set = ModeSet::only(Mode::Walk).with(Mode::ECar);
        let json = serde_json::to_string(&set).unwrap();
        assert_eq!(json, r#"["Walk","ECar"]"#);
        let back: ModeSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.len(), 2);
        assert!(!back.contains(Mode::EBike));
    }
}
