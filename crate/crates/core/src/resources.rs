use std::fmt;
use std::ops::{Add, AddAssign, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// CPU quantity in thousandths of a core.
///
/// Fractional core requests are kept exact by storing millicores; on the
/// wire the value is a plain number of cores (`1.5` = 1500 millicores).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Millicores(u64);

impl Millicores {
    pub const ZERO: Self = Self(0);

    pub const fn new(millis: u64) -> Self {
        Self(millis)
    }

    pub const fn from_cores(cores: u64) -> Self {
        Self(cores * 1000)
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn as_cores(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl TryFrom<f64> for Millicores {
    type Error = String;

    fn try_from(cores: f64) -> Result<Self, String> {
        if !cores.is_finite() || cores < 0.0 {
            return Err(format!("cpu quantity must be a finite non-negative number, got {cores}"));
        }
        Ok(Self((cores * 1000.0).round() as u64))
    }
}

impl From<Millicores> for f64 {
    fn from(value: Millicores) -> Self {
        value.as_cores()
    }
}

impl fmt::Display for Millicores {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_cores())
    }
}

impl Add for Millicores {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl AddAssign for Millicores {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Sub for Millicores {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl SubAssign for Millicores {
    fn sub_assign(&mut self, rhs: Self) {
        self.0 -= rhs.0;
    }
}

/// A cpu + memory pair, used for requests, capacities and allocations alike.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Resources {
    pub cpus: Millicores,
    pub memory_bytes: u64,
}

impl Resources {
    pub const ZERO: Self = Self {
        cpus: Millicores::ZERO,
        memory_bytes: 0,
    };

    pub fn new(cpus: Millicores, memory_bytes: u64) -> Self {
        Self { cpus, memory_bytes }
    }

    pub fn fits_within(&self, other: &Resources) -> bool {
        self.cpus <= other.cpus && self.memory_bytes <= other.memory_bytes
    }
}

impl Add for Resources {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.cpus + rhs.cpus, self.memory_bytes + rhs.memory_bytes)
    }
}

impl Sub for Resources {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.cpus - rhs.cpus, self.memory_bytes - rhs.memory_bytes)
    }
}
