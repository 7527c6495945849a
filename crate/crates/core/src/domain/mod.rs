//! Benchmark POMDPs and small oracle models.

use core::fmt;
use core::str::FromStr;

pub mod battleship;
pub mod chain;
pub mod pocman;
pub mod rocksample;
pub mod tiger;

pub use battleship::Battleship;
pub use pocman::PocMan;
pub use rocksample::RockSample;
pub use tiger::Tiger;

/// String keys under which the benchmark domains are registered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DomainKey {
    RockSample11,
    RockSample15,
    Battleship,
    PocMan,
    Tiger,
}

impl DomainKey {
    pub const ALL: [DomainKey; 5] = [
        DomainKey::RockSample11,
        DomainKey::RockSample15,
        DomainKey::Battleship,
        DomainKey::PocMan,
        DomainKey::Tiger,
    ];

    pub fn key(self) -> &'static str {
        match self {
            DomainKey::RockSample11 => "rocksample-11-11",
            DomainKey::RockSample15 => "rocksample-15-15",
            DomainKey::Battleship => "battleship",
            DomainKey::PocMan => "pocman",
            DomainKey::Tiger => "tiger",
        }
    }
}

impl fmt::Display for DomainKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownDomain;

impl fmt::Display for UnknownDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(
            "unknown domain (expected rocksample-11-11, rocksample-15-15, battleship, pocman or tiger)",
        )
    }
}

impl core::error::Error for UnknownDomain {}

impl FromStr for DomainKey {
    type Err = UnknownDomain;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DomainKey::ALL
            .into_iter()
            .find(|k| k.key() == s)
            .ok_or(UnknownDomain)
    }
}
