//! Semantic knowledge bases: the subset of class prototypes a party holds.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;

use crate::extractor::{ClassId, SemanticPrototypes};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SkbError {
    #[error("requested {requested} classes but only {available} prototypes exist")]
    SizeExceedsPrototypes { requested: usize, available: usize },
    #[error("class {0} listed more than once")]
    DuplicateIds(ClassId),
    #[error("unknown class {0}")]
    UnknownClass(ClassId),
    #[error("a knowledge base must hold at least one class")]
    Empty,
    #[error("cannot parse knowledge-base selection `{0}`")]
    Parse(String),
}

/// How the classes of a knowledge base are chosen from the prototype set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkbSelection {
    /// Every prototype.
    Full,
    /// The first `k` prototypes in prototype order.
    FirstK(usize),
    /// `k` prototypes drawn without replacement. Draws for one seed are nested:
    /// the `k`-set is a prefix of the same seed's `k+1`-set.
    RandomK { k: usize, seed: u64 },
    Explicit(Vec<ClassId>),
}

impl SkbSelection {
    /// Re-seeds a random selection for an independent trial; other variants are unchanged.
    pub fn for_trial(&self, trial: u64) -> Self {
        match *self {
            Self::RandomK { k, seed } => Self::RandomK {
                k,
                seed: rng::mix_seed(seed, trial),
            },
            ref other => other.clone(),
        }
    }

    /// Same selection rule with a different size; `Explicit` and `Full` become `RandomK`/`FirstK`
    /// only where a size makes sense.
    pub fn with_size(&self, k: usize) -> Self {
        match *self {
            Self::RandomK { seed, .. } => Self::RandomK { k, seed },
            _ => Self::FirstK(k),
        }
    }
}

impl fmt::Display for SkbSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Full => write!(f, "full"),
            Self::FirstK(k) => write!(f, "first:{k}"),
            Self::RandomK { k, seed } => write!(f, "random:{k}:{seed}"),
            Self::Explicit(ids) => {
                write!(f, "ids:")?;
                for (i, c) in ids.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for SkbSelection {
    type Err = SkbError;

    /// `full`, `first:<k>`, `random:<k>:<seed>` or `ids:<id>,<id>,...`.
    fn from_str(s: &str) -> Result<Self, SkbError> {
        let bad = || SkbError::Parse(s.to_string());
        let s = s.trim();
        if s == "full" {
            return Ok(Self::Full);
        }
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "first" => Ok(Self::FirstK(rest.trim().parse().map_err(|_| bad())?)),
            "random" => {
                let (k, seed) = rest.split_once(':').ok_or_else(bad)?;
                Ok(Self::RandomK {
                    k: k.trim().parse().map_err(|_| bad())?,
                    seed: seed.trim().parse().map_err(|_| bad())?,
                })
            }
            "ids" => rest
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse().map(ClassId).map_err(|_| bad()))
                .collect::<Result<Vec<_>, _>>()
                .map(Self::Explicit),
            _ => Err(bad()),
        }
    }
}

/// A party's knowledge base over a shared prototype set.
#[derive(Debug, Clone, PartialEq)]
pub struct Skb {
    class_ids: BTreeSet<ClassId>,
    prototypes: Arc<SemanticPrototypes>,
}

impl Skb {
    pub fn class_ids(&self) -> &BTreeSet<ClassId> {
        &self.class_ids
    }

    pub fn prototypes(&self) -> &Arc<SemanticPrototypes> {
        &self.prototypes
    }

    pub fn len(&self) -> usize {
        self.class_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_ids.is_empty()
    }

    pub fn contains(&self, c: ClassId) -> bool {
        self.class_ids.contains(&c)
    }

    /// The knowledge indicator: 1 if the class's prototype is stored here, else 0.
    pub fn indicator(&self, c: ClassId) -> Result<u8, SkbError> {
        if !self.prototypes.contains(c) {
            return Err(SkbError::UnknownClass(c));
        }
        Ok(u8::from(self.contains(c)))
    }

    /// The stored prototype of `c`, if this base holds it.
    pub fn prototype(&self, c: ClassId) -> Option<Vec<f64>> {
        if self.contains(c) {
            self.prototypes.get(c)
        } else {
            None
        }
    }
}

pub fn build_skb(
    prototypes: Arc<SemanticPrototypes>,
    selection: &SkbSelection,
) -> Result<Skb, SkbError> {
    let all = prototypes.class_ids();
    let check_size = |k: usize| {
        if k > all.len() {
            Err(SkbError::SizeExceedsPrototypes {
                requested: k,
                available: all.len(),
            })
        } else if k == 0 {
            Err(SkbError::Empty)
        } else {
            Ok(())
        }
    };
    let class_ids: BTreeSet<ClassId> = match selection {
        SkbSelection::Full => all.iter().copied().collect(),
        SkbSelection::FirstK(k) => {
            check_size(*k)?;
            all[..*k].iter().copied().collect()
        }
        SkbSelection::RandomK { k, seed } => {
            check_size(*k)?;
            let mut order = all.to_vec();
            order.shuffle(&mut rng::seeded(*seed));
            order.truncate(*k);
            order.into_iter().collect()
        }
        SkbSelection::Explicit(ids) => {
            let mut set = BTreeSet::new();
            for &c in ids {
                if !prototypes.contains(c) {
                    return Err(SkbError::UnknownClass(c));
                }
                if !set.insert(c) {
                    return Err(SkbError::DuplicateIds(c));
                }
            }
            check_size(set.len())?;
            set
        }
    };
    if class_ids.is_empty() {
        return Err(SkbError::Empty);
    }
    Ok(Skb {
        class_ids,
        prototypes,
    })
}
