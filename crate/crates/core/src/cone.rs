//! Exact algebra of cones (clopen cylinders) of the Cantor cube.
//!
//! A cone fixes finitely many coordinates to bits and leaves the rest free.
//! The empty constraint map is the whole cube. All partitions follow the
//! unary-prefix pattern: the first cone fixes its first index to 0, each
//! later cone walks one more index of 1s before fixing a 0, and the last
//! cone is all 1s on the consumed indices.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::index::{Index, IndexAllocator, Scope};

/// A clopen cylinder: the set of maps `Λ → {0,1}` matching every constraint.
///
/// Nonempty by construction (the index universe is infinite). Immutable and
/// cheap to share.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Cone {
    constraints: BTreeMap<Index, bool>,
}

impl Cone {
    /// The whole cube `X` (no constraints).
    pub fn universe() -> Self {
        Cone::default()
    }

    pub fn from_constraints<I: IntoIterator<Item = (Index, bool)>>(constraints: I) -> Self {
        Cone {
            constraints: constraints.into_iter().collect(),
        }
    }

    pub fn is_universe(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn bit(&self, index: &Index) -> Option<bool> {
        self.constraints.get(index).copied()
    }

    /// Constrained indices in canonical order.
    pub fn indices(&self) -> impl Iterator<Item = &Index> {
        self.constraints.keys()
    }

    pub fn constraints(&self) -> impl Iterator<Item = (&Index, bool)> {
        self.constraints.iter().map(|(i, b)| (i, *b))
    }

    /// Merged constraints if consistent, `None` if some index is assigned
    /// 0 in one cone and 1 in the other (empty intersection).
    pub fn intersect(&self, other: &Cone) -> Option<Cone> {
        let (small, large) = if self.constraints.len() <= other.constraints.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut merged = large.constraints.clone();
        for (idx, bit) in &small.constraints {
            match merged.insert(idx.clone(), *bit) {
                Some(prev) if prev != *bit => return None,
                _ => {}
            }
        }
        Some(Cone {
            constraints: merged,
        })
    }

    pub fn is_disjoint_from(&self, other: &Cone) -> bool {
        self.intersect(other).is_none()
    }

    /// Projects the cone onto `coords`: all bit strings over the given
    /// (ordered) coordinates consistent with the constraints. Every
    /// constrained index must appear in `coords`.
    pub fn truncate(&self, coords: &[Index]) -> Result<Vec<BitString>> {
        let compiled = self.compile(coords)?;
        let k = coords.len();
        let mut out = Vec::with_capacity(1usize << (k - compiled.fixed_count()).min(30));
        for s in BitString::enumerate(k) {
            if compiled.matches(s) {
                out.push(s);
            }
        }
        Ok(out)
    }

    /// Compiles the cone to a mask/value pair over an explicit coordinate
    /// basis, for fast matching during enumeration.
    pub fn compile(&self, coords: &[Index]) -> Result<CompiledCone> {
        if coords.len() > BitString::MAX_LEN {
            return Err(Error::DepthExceedsBound {
                depth: coords.len(),
                bound: BitString::MAX_LEN,
            });
        }
        let mut mask = 0u64;
        let mut value = 0u64;
        let mut found = 0usize;
        for (pos, idx) in coords.iter().enumerate() {
            if let Some(bit) = self.bit(idx) {
                let m = BitString::position_mask(coords.len(), pos);
                mask |= m;
                if bit {
                    value |= m;
                }
                found += 1;
            }
        }
        if found != self.constraints.len() {
            let missing = self
                .constraints
                .keys()
                .find(|idx| !coords.contains(idx))
                .expect("some constrained index is absent from coords");
            return Err(Error::TruncationTooShallow {
                index: missing.to_string(),
            });
        }
        Ok(CompiledCone {
            mask,
            value,
            len: coords.len(),
        })
    }

    /// Canonical text form: comma-separated `name=bit` pairs in index order;
    /// the empty string denotes the whole cube.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Cone::universe());
        }
        let mut constraints = BTreeMap::new();
        for part in text.split(',') {
            let part = part.trim();
            let (name, bit) = part.split_once('=').ok_or_else(|| Error::Parse {
                what: "cone",
                reason: format!("`{part}` is not of the form name=bit"),
            })?;
            let idx = Index::parse(name.trim())?;
            let bit = match bit.trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Parse {
                        what: "cone",
                        reason: format!("bit must be 0 or 1, got `{other}`"),
                    })
                }
            };
            if constraints.insert(idx, bit).is_some() {
                return Err(Error::Parse {
                    what: "cone",
                    reason: format!("index `{name}` appears twice"),
                });
            }
        }
        Ok(Cone { constraints })
    }
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (idx, bit) in &self.constraints {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{}={}", idx, if *bit { 1 } else { 0 })?;
            first = false;
        }
        Ok(())
    }
}

/// A bit string over an ordered coordinate basis, at most 64 wide.
/// Coordinate 0 is the most significant bit, so numeric order equals
/// lexicographic order of the strings.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString {
    bits: u64,
    len: u8,
}

impl BitString {
    pub const MAX_LEN: usize = 64;

    pub fn new(bits: u64, len: usize) -> Self {
        assert!(len <= Self::MAX_LEN);
        let bits = if len == 64 { bits } else { bits & ((1u64 << len) - 1) };
        BitString {
            bits,
            len: len as u8,
        }
    }

    pub fn empty() -> Self {
        BitString { bits: 0, len: 0 }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn value(&self) -> u64 {
        self.bits
    }

    /// Bit at coordinate position `pos` (0-based from the left).
    pub fn get(&self, pos: usize) -> bool {
        assert!(pos < self.len());
        self.bits & Self::position_mask(self.len(), pos) != 0
    }

    /// Single-bit mask for coordinate `pos` in a string of width `len`.
    pub fn position_mask(len: usize, pos: usize) -> u64 {
        1u64 << (len - 1 - pos)
    }

    /// All `2^len` strings in lexicographic order.
    pub fn enumerate(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len < 63, "enumeration at depth {len} is not tractable");
        (0..1u64 << len).map(move |v| BitString::new(v, len))
    }

    /// First `n` coordinates.
    pub fn prefix(&self, n: usize) -> BitString {
        assert!(n <= self.len());
        BitString::new(self.bits >> (self.len() - n), n)
    }

    /// The `width` coordinates starting at `start`.
    pub fn slice(&self, start: usize, width: usize) -> BitString {
        assert!(start + width <= self.len());
        BitString::new(self.bits >> (self.len() - start - width), width)
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        assert!(bits.len() <= Self::MAX_LEN);
        let mut v = 0u64;
        for &b in bits {
            v = (v << 1) | b as u64;
        }
        BitString::new(v, bits.len())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.len() > Self::MAX_LEN {
            return Err(Error::Parse {
                what: "bit string",
                reason: format!("longer than {} bits", Self::MAX_LEN),
            });
        }
        let mut v = 0u64;
        for c in text.chars() {
            v = (v << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    other => {
                        return Err(Error::Parse {
                            what: "bit string",
                            reason: format!("unexpected character `{other}`"),
                        })
                    }
                };
        }
        Ok(BitString::new(v, text.len()))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for pos in 0..self.len() {
            write!(f, "{}", if self.get(pos) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

/// A cone compiled against a coordinate basis: `s` matches iff
/// `(s & mask) == value`.
#[derive(Clone, Copy, Debug)]
pub struct CompiledCone {
    mask: u64,
    value: u64,
    len: usize,
}

impl CompiledCone {
    pub fn matches(&self, s: BitString) -> bool {
        debug_assert_eq!(s.len(), self.len);
        s.value() & self.mask == self.value
    }

    pub fn fixed_count(&self) -> usize {
        self.mask.count_ones() as usize
    }
}

/// Splits the cube into `n` cones in the unary-prefix pattern, consuming
/// exactly `n-1` fresh indices from `scope`. `n = 1` returns the whole cube
/// and consumes nothing.
pub fn partition(alloc: &mut IndexAllocator, scope: &Scope, n: usize) -> Result<Vec<Cone>> {
    refine(&Cone::universe(), alloc, scope, n)
}

/// Splits `parent` into `m` cones: each child carries the parent constraints
/// plus the unary-prefix pattern on `m-1` fresh indices. Children are
/// pairwise disjoint and jointly cover the parent.
pub fn refine(parent: &Cone, alloc: &mut IndexAllocator, scope: &Scope, m: usize) -> Result<Vec<Cone>> {
    if m == 0 {
        return Err(Error::EmptyPartition);
    }
    if m == 1 {
        return Ok(vec![parent.clone()]);
    }
    let fresh: Vec<Index> = (0..m - 1)
        .map(|_| alloc.fresh(scope))
        .collect::<Result<_>>()?;
    let mut cones = Vec::with_capacity(m);
    for k in 0..m {
        let mut constraints: BTreeMap<Index, bool> =
            parent.constraints().map(|(i, b)| (i.clone(), b)).collect();
        // k-th cone: 1s on the first k fresh indices, then a 0 unless last.
        for idx in fresh.iter().take(k) {
            constraints.insert(idx.clone(), true);
        }
        if k < m - 1 {
            constraints.insert(fresh[k].clone(), false);
        }
        cones.push(Cone { constraints });
    }
    Ok(cones)
}

/// Sorted union of all indices constrained by the given cones: the minimal
/// coordinate basis over which they can all be truncated.
pub fn covering_basis(cones: &[Cone]) -> Vec<Index> {
    let mut basis: Vec<Index> = cones
        .iter()
        .flat_map(|c| c.indices().cloned())
        .collect();
    basis.sort();
    basis.dedup();
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn xi_scope() -> Scope {
        Scope::Clusters
    }

    // Test-side membership predicate, independent of CompiledCone: walk the
    // constraint list and look the coordinate up by position.
    fn matches_naive(cone: &Cone, coords: &[Index], s: BitString) -> bool {
        cone.constraints().all(|(idx, bit)| {
            let pos = coords.iter().position(|c| c == idx).expect("coord present");
            s.get(pos) == bit
        })
    }

    #[test]
    fn partition_three_matches_unary_prefix_pattern() {
        let mut alloc = IndexAllocator::new();
        let cones = partition(&mut alloc, &xi_scope(), 3).unwrap();
        let texts: Vec<String> = cones.iter().map(|c| c.to_string()).collect();
        assert_eq!(texts, ["xi1=0", "xi1=1,xi2=0", "xi1=1,xi2=1"]);
    }

    #[test]
    fn partition_one_is_identity_and_consumes_nothing() {
        let mut alloc = IndexAllocator::new();
        let cones = partition(&mut alloc, &xi_scope(), 1).unwrap();
        assert_eq!(cones, vec![Cone::universe()]);
        assert_eq!(alloc.issued_count(), 0);
    }

    #[test]
    fn partition_zero_is_an_error() {
        let mut alloc = IndexAllocator::new();
        assert!(matches!(
            partition(&mut alloc, &xi_scope(), 0),
            Err(Error::EmptyPartition)
        ));
    }

    #[test]
    fn partition_five_class_sizes_by_enumeration() {
        // Oracle: enumerate all 2^4 strings over the 4 consumed indices and
        // classify each with the naive membership predicate.
        let mut alloc = IndexAllocator::new();
        let cones = partition(&mut alloc, &xi_scope(), 5).unwrap();
        let basis = covering_basis(&cones);
        assert_eq!(basis.len(), 4);
        let mut sizes = vec![0usize; 5];
        for s in BitString::enumerate(4) {
            let hits: Vec<usize> = (0..5)
                .filter(|&i| matches_naive(&cones[i], &basis, s))
                .collect();
            assert_eq!(hits.len(), 1, "string {s} must match exactly one cone");
            sizes[hits[0]] += 1;
        }
        assert_eq!(sizes, [8, 4, 2, 1, 1]);
    }

    #[test]
    fn partition_constraint_counts() {
        for n in 1..=10usize {
            let mut alloc = IndexAllocator::new();
            let cones = partition(&mut alloc, &xi_scope(), n).unwrap();
            assert_eq!(alloc.issued_count(), n - 1);
            for (k, cone) in cones.iter().enumerate() {
                assert_eq!(cone.constraint_count(), (k + 1).min(n - 1));
            }
        }
    }

    #[test]
    fn refine_keeps_parent_constraints() {
        let mut alloc = IndexAllocator::new();
        // parent {mu1@C1=1, mu2@C1=0}, m=2: children add one fresh index.
        let arcs = Scope::Arcs { cluster: 1 };
        let _ = alloc.fresh(&arcs).unwrap();
        let _ = alloc.fresh(&arcs).unwrap();
        let parent = Cone::from_constraints([
            (Index::mu(1, 1), true),
            (Index::mu(1, 2), false),
        ]);
        let children = refine(&parent, &mut alloc, &arcs, 2).unwrap();
        let texts: Vec<String> = children.iter().map(|c| c.to_string()).collect();
        assert_eq!(
            texts,
            [
                "mu1@C1=1,mu2@C1=0,mu3@C1=0",
                "mu1@C1=1,mu2@C1=0,mu3@C1=1"
            ]
        );
    }

    #[test]
    fn refine_children_partition_parent_at_depth_three() {
        // Oracle: depth-3 enumeration of the parent cone's strings.
        let mut alloc = IndexAllocator::new();
        let top = partition(&mut alloc, &xi_scope(), 3).unwrap();
        let children = refine(&top[0], &mut alloc, &xi_scope(), 2).unwrap();
        let mut basis = covering_basis(&top);
        basis.extend(covering_basis(&children));
        basis.sort();
        basis.dedup();
        assert_eq!(basis.len(), 3);

        let parent_strings: BTreeSet<BitString> =
            top[0].truncate(&basis).unwrap().into_iter().collect();
        assert_eq!(parent_strings.len(), 4);
        let mut child_union = BTreeSet::new();
        for child in &children {
            for s in child.truncate(&basis).unwrap() {
                assert!(parent_strings.contains(&s), "child leaks outside parent");
                assert!(child_union.insert(s), "children overlap");
            }
        }
        assert_eq!(child_union, parent_strings);
    }

    #[test]
    fn refine_one_returns_parent() {
        let mut alloc = IndexAllocator::new();
        let parent = Cone::universe();
        assert_eq!(
            refine(&parent, &mut alloc, &xi_scope(), 1).unwrap(),
            vec![parent.clone()]
        );
    }

    #[test]
    fn intersect_examples() {
        let a = Cone::from_constraints([(Index::mu(1, 1), false)]);
        let b = Cone::from_constraints([(Index::lambda(1), true)]);
        let ab = a.intersect(&b).unwrap();
        assert_eq!(ab.to_string(), "mu1@C1=0,la1=1");

        let c = Cone::from_constraints([(Index::mu(1, 1), true)]);
        assert!(a.intersect(&c).is_none());

        let d = Cone::from_constraints([(Index::mu(1, 1), true), (Index::mu(1, 2), false)]);
        assert_eq!(d.intersect(&c).unwrap(), d);
    }

    #[test]
    fn truncate_examples() {
        let coords = [Index::xi(1), Index::xi(2)];
        let c = Cone::from_constraints([(Index::xi(1), false)]);
        let strings: Vec<String> = c
            .truncate(&coords)
            .unwrap()
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(strings, ["00", "01"]);

        assert_eq!(Cone::universe().truncate(&coords).unwrap().len(), 4);

        let mut alloc = IndexAllocator::new();
        let cones = partition(&mut alloc, &xi_scope(), 3).unwrap();
        let classes: Vec<Vec<String>> = cones
            .iter()
            .map(|c| {
                c.truncate(&coords)
                    .unwrap()
                    .iter()
                    .map(|s| s.to_string())
                    .collect()
            })
            .collect();
        assert_eq!(
            classes,
            [vec!["00", "01"], vec!["10"], vec!["11"]]
        );
    }

    #[test]
    fn truncate_too_shallow_is_an_error() {
        let c = Cone::from_constraints([(Index::xi(1), false), (Index::xi(2), true)]);
        let err = c.truncate(&[Index::xi(1)]).unwrap_err();
        assert!(matches!(err, Error::TruncationTooShallow { .. }));
    }

    #[test]
    fn cone_text_round_trip() {
        let c = Cone::from_constraints([
            (Index::xi(1), true),
            (Index::mu(2, 1), false),
            (Index::lambda(3), true),
        ]);
        assert_eq!(Cone::parse(&c.to_string()).unwrap(), c);
        assert_eq!(Cone::parse("").unwrap(), Cone::universe());
        assert_eq!(Cone::parse(" xi1=1 , xi2=0 ").unwrap().to_string(), "xi1=1,xi2=0");
        assert!(Cone::parse("xi1=2").is_err());
        assert!(Cone::parse("xi1=1,xi1=1").is_err());
    }
}
