use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Which queued task is placed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Prioritization {
    Fifo,
    Random,
    SizeDesc,
    SizeAsc,
    /// Highest rank first, FIFO among equal ranks.
    RankFifo,
    /// Highest rank first, smaller input first among equal ranks.
    RankMin,
    /// Highest rank first, larger input first among equal ranks.
    RankMax,
}

impl Prioritization {
    pub const ALL: [Prioritization; 7] = [
        Prioritization::Fifo,
        Prioritization::Random,
        Prioritization::SizeDesc,
        Prioritization::SizeAsc,
        Prioritization::RankFifo,
        Prioritization::RankMin,
        Prioritization::RankMax,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Prioritization::Fifo => "fifo",
            Prioritization::Random => "random",
            Prioritization::SizeDesc => "size_desc",
            Prioritization::SizeAsc => "size_asc",
            Prioritization::RankFifo => "rank_fifo",
            Prioritization::RankMin => "rank_min",
            Prioritization::RankMax => "rank_max",
        }
    }

    pub fn uses_rank(self) -> bool {
        matches!(
            self,
            Prioritization::RankFifo | Prioritization::RankMin | Prioritization::RankMax
        )
    }
}

/// Which feasible node a task goes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Assignment {
    RoundRobin,
    Random,
    Fair,
}

impl Assignment {
    pub const ALL: [Assignment; 3] = [Assignment::RoundRobin, Assignment::Random, Assignment::Fair];

    pub fn as_str(self) -> &'static str {
        match self {
            Assignment::RoundRobin => "round_robin",
            Assignment::Random => "random",
            Assignment::Fair => "fair",
        }
    }
}

/// A full scheduling strategy: one of the 21 prioritization x assignment
/// combinations, or the emulated workflow-unaware default.
///
/// Serialized as `<prioritization>-<assignment>` (`rank_min-round_robin`)
/// or `baseline_default`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StrategyName {
    Composite {
        prioritization: Prioritization,
        assignment: Assignment,
    },
    BaselineDefault,
}

impl StrategyName {
    pub const BASELINE: &'static str = "baseline_default";

    pub fn new(prioritization: Prioritization, assignment: Assignment) -> Self {
        StrategyName::Composite {
            prioritization,
            assignment,
        }
    }

    /// The 21 composite strategies in prioritization-major order.
    pub fn composites() -> impl Iterator<Item = StrategyName> {
        Prioritization::ALL
            .into_iter()
            .flat_map(|p| Assignment::ALL.into_iter().map(move |a| StrategyName::new(p, a)))
    }

    /// The 21 composites followed by the baseline.
    pub fn all() -> Vec<StrategyName> {
        let mut all: Vec<_> = Self::composites().collect();
        all.push(StrategyName::BaselineDefault);
        all
    }

    pub fn is_baseline(self) -> bool {
        self == StrategyName::BaselineDefault
    }

    pub fn prioritization(self) -> Prioritization {
        match self {
            StrategyName::Composite { prioritization, .. } => prioritization,
            StrategyName::BaselineDefault => Prioritization::Fifo,
        }
    }
}

impl fmt::Display for StrategyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyName::Composite {
                prioritization,
                assignment,
            } => write!(f, "{}-{}", prioritization.as_str(), assignment.as_str()),
            StrategyName::BaselineDefault => f.write_str(Self::BASELINE),
        }
    }
}

impl FromStr for StrategyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == Self::BASELINE {
            return Ok(StrategyName::BaselineDefault);
        }
        let unknown = || Error::UnknownStrategy(s.to_owned());
        let (p, a) = s.split_once('-').ok_or_else(unknown)?;
        let prioritization = Prioritization::ALL
            .into_iter()
            .find(|x| x.as_str() == p)
            .ok_or_else(unknown)?;
        let assignment = Assignment::ALL
            .into_iter()
            .find(|x| x.as_str() == a)
            .ok_or_else(unknown)?;
        Ok(StrategyName::new(prioritization, assignment))
    }
}

impl TryFrom<String> for StrategyName {
    type Error = Error;

    fn try_from(value: String) -> Result<Self, Error> {
        value.parse()
    }
}

impl From<StrategyName> for String {
    fn from(value: StrategyName) -> Self {
        value.to_string()
    }
}
