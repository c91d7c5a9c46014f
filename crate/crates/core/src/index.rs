//! Structured coordinate indices of the Cantor cube.
//!
//! The index universe is countably infinite but never materialized: an index
//! exists once something constrains it. Indices come in three tiers: cluster
//! selectors (`xi`), arc selectors (`mu`, scoped to one cluster) and the
//! shared position axis (`la`). The total order XI < MU < LAMBDA, then path,
//! then ordinal fixes the truncation coordinates, so every run produces the
//! same finite pictures.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Tier of an index. The declaration order is the canonical sort order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    /// Cluster-level selector (which cluster a point belongs to).
    Xi,
    /// Arc-level selector, scoped to one cluster.
    Mu,
    /// Position along an arc; a single stream shared by all arcs.
    Lambda,
}

/// One coordinate of the Cantor cube.
///
/// `path` scopes the index: empty for `Xi` and `Lambda`, the owning cluster
/// ordinal (1-based) for `Mu`. `ordinal` is 1-based within the scope.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Index {
    pub tier: Tier,
    pub path: Vec<u32>,
    pub ordinal: u32,
}

impl Index {
    pub fn xi(ordinal: u32) -> Self {
        debug_assert!(ordinal >= 1);
        Index {
            tier: Tier::Xi,
            path: Vec::new(),
            ordinal,
        }
    }

    pub fn mu(cluster: u32, ordinal: u32) -> Self {
        debug_assert!(ordinal >= 1);
        Index {
            tier: Tier::Mu,
            path: vec![cluster],
            ordinal,
        }
    }

    /// The `k`-th index of the shared position axis (1-based).
    pub fn lambda(ordinal: u32) -> Self {
        debug_assert!(ordinal >= 1);
        Index {
            tier: Tier::Lambda,
            path: Vec::new(),
            ordinal,
        }
    }

    fn path_text(path: &[u32]) -> String {
        let mut s = String::from("C");
        for (i, p) in path.iter().enumerate() {
            if i > 0 {
                s.push('.');
            }
            s.push_str(&p.to_string());
        }
        s
    }

    /// Parses the canonical text form: `xi<k>`, `mu<k>@C<path>`, `la<k>`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |reason: String| Error::Parse {
            what: "index",
            reason,
        };
        let (tier, rest) = if let Some(r) = text.strip_prefix("xi") {
            (Tier::Xi, r)
        } else if let Some(r) = text.strip_prefix("mu") {
            (Tier::Mu, r)
        } else if let Some(r) = text.strip_prefix("la") {
            (Tier::Lambda, r)
        } else {
            return Err(bad(format!("unknown tier in `{text}`")));
        };
        let (ord_text, path) = match tier {
            Tier::Mu => {
                let (o, p) = rest
                    .split_once('@')
                    .ok_or_else(|| bad(format!("mu index `{text}` is missing `@<path>`")))?;
                let p = p
                    .strip_prefix('C')
                    .ok_or_else(|| bad(format!("path in `{text}` must start with `C`")))?;
                let path: Vec<u32> = p
                    .split('.')
                    .map(|seg| {
                        seg.parse::<u32>()
                            .map_err(|_| bad(format!("bad path segment `{seg}` in `{text}`")))
                    })
                    .collect::<Result<_>>()?;
                (o, path)
            }
            _ => (rest, Vec::new()),
        };
        let ordinal: u32 = ord_text
            .parse()
            .map_err(|_| bad(format!("bad ordinal `{ord_text}` in `{text}`")))?;
        if ordinal == 0 {
            return Err(bad(format!("ordinal in `{text}` must be >= 1")));
        }
        Ok(Index {
            tier,
            path,
            ordinal,
        })
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tier {
            Tier::Xi => write!(f, "xi{}", self.ordinal),
            Tier::Mu => write!(f, "mu{}@{}", self.ordinal, Index::path_text(&self.path)),
            Tier::Lambda => write!(f, "la{}", self.ordinal),
        }
    }
}

/// Allocation scope for fresh partition indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scope {
    /// The global cluster partition (`xi` stream).
    Clusters,
    /// The arc partition of one cluster (`mu@C<cluster>` stream, 1-based).
    Arcs { cluster: u32 },
}

/// Issues fresh indices, never the same one twice.
///
/// The position axis is declared last: once `declare_position_axis` has been
/// called, requesting further `xi`/`mu` indices is an error. This keeps the
/// position stream disjoint from every selector index by construction.
#[derive(Clone, Debug, Default)]
pub struct IndexAllocator {
    xi_next: u32,
    mu_next: BTreeMap<Vec<u32>, u32>,
    position_axis_declared: bool,
    issued: Vec<Index>,
}

impl IndexAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self, scope: &Scope) -> Result<Index> {
        if self.position_axis_declared {
            return Err(Error::AllocationPhase(
                "selector indices cannot be issued after the position axis is declared".into(),
            ));
        }
        let idx = match scope {
            Scope::Clusters => {
                self.xi_next += 1;
                Index::xi(self.xi_next)
            }
            Scope::Arcs { cluster } => {
                let next = self.mu_next.entry(vec![*cluster]).or_insert(0);
                *next += 1;
                Index::mu(*cluster, *next)
            }
        };
        self.issued.push(idx.clone());
        Ok(idx)
    }

    /// Freezes selector allocation; position indices `la1, la2, ...` are
    /// available afterwards via [`Index::lambda`].
    pub fn declare_position_axis(&mut self) {
        self.position_axis_declared = true;
    }

    pub fn position_axis_declared(&self) -> bool {
        self.position_axis_declared
    }

    /// All selector indices issued so far, in canonical order.
    pub fn issued_sorted(&self) -> Vec<Index> {
        let mut v = self.issued.clone();
        v.sort();
        v
    }

    pub fn issued_count(&self) -> usize {
        self.issued.len()
    }
}
