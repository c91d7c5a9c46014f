//! Finite-depth verification: everything here recomputes structure by brute
//! force, independently of how the representation was assembled.
//!
//! The quotient complex enumerates every depth-`k` bit string, groups the
//! strings into cells (interior dyadic segments stay separate cells; the
//! half-cylinders meeting at a node collapse into one cell), and reads the
//! combinatorial shape off the result. Partition checks enumerate when the
//! depth is small and fall back to an exact counting argument beyond the
//! enumeration bound.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::codec::{AddressSpec, Decoded, DyadicInterval, Param, TailPattern};
use crate::cone::{covering_basis, BitString, CompiledCone, Cone};
use crate::error::{Error, Result};
use crate::index::Index;
use crate::model::{Cluster, GeometricModel, PointRef, TopologyInvariants};
use crate::rep::Representation;
use crate::unionfind::UnionFind;

/// Depths up to this bound are verified by full enumeration unless the
/// caller raises it explicitly.
pub const DEFAULT_MAX_ENUM_DEPTH: usize = 20;

/// Enumeration is capped here outright; beyond it only counting arguments
/// are available.
pub const HARD_ENUM_CAP: usize = 62;

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Largest depth verified by full string enumeration.
    pub max_enum_depth: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            max_enum_depth: DEFAULT_MAX_ENUM_DEPTH,
        }
    }
}

impl VerifyOptions {
    pub fn with_max_enum_depth(max_enum_depth: usize) -> Self {
        VerifyOptions { max_enum_depth }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PartitionMode {
    /// Every string of the truncated cube was enumerated and matched.
    Enumerated,
    /// Pairwise disjointness plus an exact cardinality count.
    Counted,
}

/// Outcome of a partition check over a finite coordinate set.
#[derive(Clone, Debug)]
pub struct PartitionReport {
    pub depth: usize,
    pub mode: PartitionMode,
    /// Strings matched per cone, in input order.
    pub class_sizes: Vec<BigUint>,
    /// Human-readable violations, capped; `violation_count` is the total.
    pub violations: Vec<String>,
    pub violation_count: usize,
}

impl PartitionReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

impl fmt::Display for PartitionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes: Vec<String> = self.class_sizes.iter().map(|n| n.to_string()).collect();
        write!(
            f,
            "{} at depth {} ({:?}): class sizes [{}]",
            if self.passed() { "PASS" } else { "FAIL" },
            self.depth,
            self.mode,
            sizes.join(", ")
        )?;
        for v in &self.violations {
            write!(f, "\n  violation: {v}")?;
        }
        if self.violation_count > self.violations.len() {
            write!(
                f,
                "\n  ... and {} more",
                self.violation_count - self.violations.len()
            )?;
        }
        Ok(())
    }
}

const VIOLATION_CAP: usize = 16;

/// Checks that `cones` partition the cube truncated to `coords`.
///
/// Every index constrained by a cone must appear in `coords`. Depths up to
/// the enumeration bound are checked string by string; deeper ones by
/// pairwise disjointness plus the exact count
/// `sum over cones of 2^(depth - constraints) = 2^depth`.
pub fn check_partition(
    cones: &[Cone],
    coords: &[Index],
    opts: &VerifyOptions,
) -> Result<PartitionReport> {
    if cones.is_empty() {
        return Err(Error::EmptyPartition);
    }
    let depth = coords.len();
    for cone in cones {
        for index in cone.indices() {
            if !coords.contains(index) {
                return Err(Error::TruncationTooShallow {
                    index: index.to_string(),
                });
            }
        }
    }
    let mut violations = Vec::new();
    let mut violation_count = 0usize;
    let record = |v: String, violations: &mut Vec<String>| {
        if violations.len() < VIOLATION_CAP {
            violations.push(v);
        }
    };

    if depth <= opts.max_enum_depth && depth <= HARD_ENUM_CAP {
        let compiled: Vec<CompiledCone> = cones
            .iter()
            .map(|c| c.compile(coords))
            .collect::<Result<_>>()?;
        let mut class_sizes = vec![BigUint::zero(); cones.len()];
        for s in BitString::enumerate(depth) {
            let hits: Vec<usize> = compiled
                .iter()
                .enumerate()
                .filter(|(_, c)| c.matches(s))
                .map(|(i, _)| i)
                .collect();
            match hits.as_slice() {
                [i] => class_sizes[*i] += BigUint::one(),
                [] => {
                    violation_count += 1;
                    record(format!("string {s} matches no cone"), &mut violations);
                }
                many => {
                    violation_count += 1;
                    for &i in many {
                        class_sizes[i] += BigUint::one();
                    }
                    let names: Vec<String> =
                        many.iter().map(|&i| cones[i].to_string()).collect();
                    record(
                        format!("string {s} matches {} cones: {}", many.len(), names.join(" / ")),
                        &mut violations,
                    );
                }
            }
        }
        Ok(PartitionReport {
            depth,
            mode: PartitionMode::Enumerated,
            class_sizes,
            violations,
            violation_count,
        })
    } else {
        for i in 0..cones.len() {
            for j in (i + 1)..cones.len() {
                if !cones[i].is_disjoint_from(&cones[j]) {
                    violation_count += 1;
                    record(
                        format!("cones overlap: {} and {}", cones[i], cones[j]),
                        &mut violations,
                    );
                }
            }
        }
        let class_sizes: Vec<BigUint> = cones
            .iter()
            .map(|c| BigUint::one() << (depth - c.constraint_count()))
            .collect();
        let covered: BigUint = class_sizes.iter().sum();
        let total = BigUint::one() << depth;
        if covered != total {
            violation_count += 1;
            record(
                format!("cones cover {covered} of {total} strings"),
                &mut violations,
            );
        }
        Ok(PartitionReport {
            depth,
            mode: PartitionMode::Counted,
            class_sizes,
            violations,
            violation_count,
        })
    }
}

/// One cell of the finite quotient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub cluster: usize,
    pub image: CellImage,
    /// How many depth-`k` strings fell into this cell.
    pub string_count: u64,
}

/// What the cell looks like in the model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CellImage {
    SingletonPoint {
        id: String,
    },
    NodePoint {
        id: String,
    },
    /// A dyadic parameter segment in the interior of one arc.
    ArcSegment {
        arc: String,
        interval: DyadicInterval,
    },
}

impl fmt::Display for CellImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellImage::SingletonPoint { id } => write!(f, "point {id}"),
            CellImage::NodePoint { id } => write!(f, "node {id}"),
            CellImage::ArcSegment { arc, interval } => write!(f, "{arc} {interval}"),
        }
    }
}

/// The decomposition of the depth-`k` cube into cells, with adjacency.
///
/// Edges are kept with multiplicity (one per dyadic cut inside an arc), so
/// cycle rank comes out right even when two cells meet along several arcs.
#[derive(Clone, Debug)]
pub struct QuotientComplex {
    pub depth: usize,
    pub lambda_depth: usize,
    pub cells: Vec<Cell>,
    /// Normalized (low, high) cell pairs, sorted, with multiplicity.
    pub edges: Vec<(usize, usize)>,
    model: GeometricModel,
    compiled_clusters: Vec<CompiledCone>,
    compiled_arcs: Vec<Vec<CompiledCone>>,
    proto_offsets: Vec<usize>,
    proto_cell: Vec<usize>,
    selector_count: usize,
}

/// Builds the quotient at truncation depth `depth` by full enumeration.
///
/// Needs at least one position digit (`depth > selector count`) and refuses
/// depths beyond the enumeration bound unless the caller raised it.
pub fn quotient_complex(
    rep: &Representation,
    depth: usize,
    opts: &VerifyOptions,
) -> Result<QuotientComplex> {
    let sel = rep.selector_count();
    if depth < sel + 1 {
        return Err(Error::DepthTooShallow {
            depth,
            need: format!("this model uses {sel} selector bits; need at least {}", sel + 1),
        });
    }
    if depth > opts.max_enum_depth {
        return Err(Error::DepthExceedsBound {
            depth,
            bound: opts.max_enum_depth,
        });
    }
    if depth > HARD_ENUM_CAP {
        return Err(Error::DepthExceedsBound {
            depth,
            bound: HARD_ENUM_CAP,
        });
    }
    let l = depth - sel;
    let basis = rep.coords(depth);
    let model = rep.model().clone();
    let compiled_clusters: Vec<CompiledCone> = rep
        .cluster_cones()
        .iter()
        .map(|c| c.compile(&basis))
        .collect::<Result<_>>()?;
    let compiled_arcs: Vec<Vec<CompiledCone>> = (0..model.clusters.len())
        .map(|i| {
            rep.arc_cones(i)
                .iter()
                .map(|(_, c)| c.compile(&basis))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    // proto-cells: one per singleton cluster, one per (arc, position prefix)
    let mut proto_offsets = Vec::with_capacity(model.clusters.len() + 1);
    let mut total_protos = 0usize;
    for cluster in &model.clusters {
        proto_offsets.push(total_protos);
        total_protos += match cluster {
            Cluster::Singleton { .. } => 1,
            Cluster::Graph { arcs, .. } => arcs.len() << l,
        };
    }
    proto_offsets.push(total_protos);

    // merge the half-cylinders meeting at each node; record which node a
    // boundary proto belongs to for naming the merged cell later
    let mut uf = UnionFind::new(total_protos);
    let mut node_of_proto: BTreeMap<usize, String> = BTreeMap::new();
    let last_w = (1usize << l) - 1;
    for (ci, cluster) in model.clusters.iter().enumerate() {
        if let Cluster::Graph { nodes, arcs } = cluster {
            for node in nodes {
                let mut first: Option<usize> = None;
                for (ai, arc) in arcs.iter().enumerate() {
                    let w = if arc.tail == *node {
                        0
                    } else if arc.head == *node {
                        last_w
                    } else {
                        continue;
                    };
                    let proto = proto_offsets[ci] + (ai << l) + w;
                    node_of_proto.insert(proto, node.clone());
                    match first {
                        None => first = Some(proto),
                        Some(f) => uf.union(f, proto),
                    }
                }
            }
        }
    }

    // tally every string into its proto-cell
    let mut counts = vec![0u64; total_protos];
    for s in BitString::enumerate(depth) {
        let ci = exactly_one(&compiled_clusters, s, "cluster cones");
        let proto = match &model.clusters[ci] {
            Cluster::Singleton { .. } => proto_offsets[ci],
            Cluster::Graph { .. } => {
                let ai = exactly_one(&compiled_arcs[ci], s, "arc cones");
                let w = s.slice(sel, l).value() as usize;
                proto_offsets[ci] + (ai << l) + w
            }
        };
        counts[proto] += 1;
    }

    // collapse protos into cells, ids in first-appearance order
    let mut cell_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut proto_cell = vec![usize::MAX; total_protos];
    let mut cells: Vec<Cell> = Vec::new();
    for (ci, cluster) in model.clusters.iter().enumerate() {
        let span = proto_offsets[ci]..proto_offsets[ci + 1];
        for proto in span {
            let root = uf.find(proto);
            let id = *cell_of_root.entry(root).or_insert_with(|| {
                let image = match cluster {
                    Cluster::Singleton { id } => CellImage::SingletonPoint { id: id.clone() },
                    Cluster::Graph { arcs, .. } => match node_of_proto.get(&proto) {
                        Some(node) => CellImage::NodePoint { id: node.clone() },
                        None => {
                            let local = proto - proto_offsets[ci];
                            let (ai, w) = (local >> l, local & last_w);
                            CellImage::ArcSegment {
                                arc: arcs[ai].id.clone(),
                                interval: dyadic_cell_interval(w, l),
                            }
                        }
                    },
                };
                cells.push(Cell {
                    cluster: ci,
                    image,
                    string_count: 0,
                });
                cells.len() - 1
            });
            proto_cell[proto] = id;
            cells[id].string_count += counts[proto];
        }
    }

    // adjacency: consecutive position prefixes along each arc share a
    // dyadic boundary point
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (ci, cluster) in model.clusters.iter().enumerate() {
        if let Cluster::Graph { arcs, .. } = cluster {
            for ai in 0..arcs.len() {
                for w in 0..last_w {
                    let a = proto_cell[proto_offsets[ci] + (ai << l) + w];
                    let b = proto_cell[proto_offsets[ci] + (ai << l) + w + 1];
                    debug_assert_ne!(a, b, "consecutive segments collapsed");
                    edges.push((a.min(b), a.max(b)));
                }
            }
        }
    }
    edges.sort_unstable();

    Ok(QuotientComplex {
        depth,
        lambda_depth: l,
        cells,
        edges,
        model,
        compiled_clusters,
        compiled_arcs,
        proto_offsets,
        proto_cell,
        selector_count: sel,
    })
}

fn exactly_one(cones: &[CompiledCone], s: BitString, what: &str) -> usize {
    let mut found = None;
    for (i, c) in cones.iter().enumerate() {
        if c.matches(s) {
            assert!(found.is_none(), "{what} overlap on string {s}");
            found = Some(i);
        }
    }
    found.unwrap_or_else(|| panic!("{what} do not cover string {s}"))
}

fn dyadic_cell_interval(w: usize, l: usize) -> DyadicInterval {
    let prefix: Vec<bool> = (0..l).map(|i| (w >> (l - 1 - i)) & 1 == 1).collect();
    match AddressSpec::new(Cone::universe(), prefix, TailPattern::Unconstrained).decode() {
        Decoded::Interval(iv) => iv,
        Decoded::Point(_) => unreachable!("unconstrained tails decode to intervals"),
    }
}

impl QuotientComplex {
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_strings(&self) -> u64 {
        self.cells.iter().map(|c| c.string_count).sum()
    }

    pub fn degree(&self, cell: usize) -> usize {
        self.edges
            .iter()
            .filter(|(a, b)| *a == cell || *b == cell)
            .count()
    }

    /// The cell a full-depth string falls into.
    pub fn cell_of_string(&self, s: BitString) -> Result<usize> {
        if s.len() != self.depth {
            return Err(Error::DepthTooShallow {
                depth: s.len(),
                need: format!("this complex indexes strings of length exactly {}", self.depth),
            });
        }
        let ci = exactly_one(&self.compiled_clusters, s, "cluster cones");
        let proto = match &self.model.clusters[ci] {
            Cluster::Singleton { .. } => self.proto_offsets[ci],
            Cluster::Graph { .. } => {
                let ai = exactly_one(&self.compiled_arcs[ci], s, "arc cones");
                let w = s.slice(self.selector_count, self.lambda_depth).value() as usize;
                self.proto_offsets[ci] + (ai << self.lambda_depth) + w
            }
        };
        Ok(self.proto_cell[proto])
    }

    /// Invariants of the whole cell complex, brute-force.
    pub fn invariants(&self) -> TopologyInvariants {
        self.invariants_of(|_| true)
    }

    /// Invariants of one cluster's part of the complex.
    pub fn cluster_invariants(&self, cluster: usize) -> TopologyInvariants {
        self.invariants_of(|c| self.cells[c].cluster == cluster)
    }

    fn invariants_of(&self, keep: impl Fn(usize) -> bool) -> TopologyInvariants {
        let ids: Vec<usize> = (0..self.cells.len()).filter(|&c| keep(c)).collect();
        let pos: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(p, &c)| (c, p)).collect();
        let mut uf = UnionFind::new(ids.len());
        let mut degree = vec![0usize; ids.len()];
        let mut edge_count = 0usize;
        for &(a, b) in &self.edges {
            if let (Some(&pa), Some(&pb)) = (pos.get(&a), pos.get(&b)) {
                uf.union(pa, pb);
                degree[pa] += 1;
                degree[pb] += 1;
                edge_count += 1;
            }
        }
        let components = uf.component_count();
        let cycle_rank = edge_count + components - ids.len();
        let mut branch_degrees: Vec<usize> = degree.iter().copied().filter(|&d| d >= 3).collect();
        branch_degrees.sort_unstable();
        let leaves = degree.iter().filter(|&&d| d == 1).count();
        TopologyInvariants {
            components,
            cycle_rank,
            branch_degrees,
            leaves,
        }
    }

    /// One line per cell: id, cluster, image, population, degree.
    pub fn cell_table(&self) -> String {
        let mut out = String::new();
        for (id, cell) in self.cells.iter().enumerate() {
            out.push_str(&format!(
                "c{id}  C{}  {}  strings={} degree={}\n",
                cell.cluster + 1,
                cell.image,
                cell.string_count,
                self.degree(id)
            ));
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph quotient {\n  node [shape=box];\n");
        for (id, cell) in self.cells.iter().enumerate() {
            out.push_str(&format!(
                "  c{id} [label=\"C{} {}\"];\n",
                cell.cluster + 1,
                cell.image
            ));
        }
        for (a, b) in &self.edges {
            out.push_str(&format!("  c{a} -- c{b};\n"));
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> String {
        let cells: Vec<serde_json::Value> = self
            .cells
            .iter()
            .enumerate()
            .map(|(id, cell)| {
                serde_json::json!({
                    "id": id,
                    "cluster": format!("C{}", cell.cluster + 1),
                    "image": cell.image.to_string(),
                    "strings": cell.string_count,
                    "degree": self.degree(id),
                })
            })
            .collect();
        let edges: Vec<serde_json::Value> = self
            .edges
            .iter()
            .map(|(a, b)| serde_json::json!([a, b]))
            .collect();
        let inv = self.invariants();
        let mut text = serde_json::to_string_pretty(&serde_json::json!({
            "depth": self.depth,
            "lambda_depth": self.lambda_depth,
            "cells": cells,
            "edges": edges,
            "invariants": inv,
        }))
        .expect("report serializes");
        text.push('\n');
        text
    }
}

/// Largest parameter interval any cell cuts out of any single arc, per
/// position depth `1..=levels`. Exact rationals; a model without arcs
/// reports zero at every level.
pub fn diameter_profile(rep: &Representation, levels: usize) -> Vec<Param> {
    (1..=levels)
        .map(|d| {
            let mut max = Param::zero();
            for ci in 0..rep.model().clusters.len() {
                for _arc in rep.arc_cones(ci) {
                    for s in BitString::enumerate(d) {
                        let prefix: Vec<bool> = (0..d).map(|p| s.get(p)).collect();
                        let spec =
                            AddressSpec::new(Cone::universe(), prefix, TailPattern::Unconstrained);
                        if let Decoded::Interval(iv) = spec.decode() {
                            let w = iv.width();
                            if w > max {
                                max = w;
                            }
                        }
                    }
                }
            }
            max
        })
        .collect()
}

/// Separation of one pair of fibers.
#[derive(Clone, Debug, Serialize)]
pub struct PairSeparation {
    pub a: String,
    pub b: String,
    pub separated: bool,
    /// Largest first-disagreement depth over all piece pairs: 0 means the
    /// selector cones already differ, j >= 1 is a position digit.
    pub depth: usize,
    /// How deep the digit comparison probed.
    pub probe_depth: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    pub pairs: Vec<PairSeparation>,
}

impl SeparationReport {
    pub fn all_separated(&self) -> bool {
        self.pairs.iter().all(|p| p.separated)
    }
}

impl fmt::Display for SeparationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.pairs {
            writeln!(
                f,
                "{} {} | {}: depth {}",
                if p.separated { "PASS" } else { "FAIL" },
                p.a,
                p.b,
                p.depth
            )?;
        }
        Ok(())
    }
}

/// Checks that the fibers of pairwise distinct points are disjoint at a
/// finite depth, by comparing determined digits of every piece pair.
///
/// The probe depth is derived from the exact decoded values: two distinct
/// rationals with denominators d1, d2 must see a digit disagreement within
/// log2(d1*d2) + 1 position digits, cones permitting.
pub fn check_fiber_separation(
    rep: &Representation,
    points: &[PointRef],
) -> Result<SeparationReport> {
    for (i, p) in points.iter().enumerate() {
        rep.model().check_point(p)?;
        if points[..i].contains(p) {
            return Err(Error::DanglingPoint {
                point: p.to_string(),
                reason: "listed twice; separation needs pairwise distinct points".into(),
            });
        }
    }
    let fibers: Vec<_> = points
        .iter()
        .map(|p| rep.represent_point(p))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let mut separated = true;
            let mut depth = 0usize;
            let mut probe_depth = 0usize;
            for pa in fibers[i].pieces() {
                for pb in fibers[j].pieces() {
                    let probe = probe_depth_for(pa, pb);
                    probe_depth = probe_depth.max(probe);
                    match crate::codec::first_disagreement(pa, pb, probe) {
                        Some(d) => depth = depth.max(d),
                        None => separated = false,
                    }
                }
            }
            pairs.push(PairSeparation {
                a: points[i].to_string(),
                b: points[j].to_string(),
                separated,
                depth,
                probe_depth,
            });
        }
    }
    Ok(SeparationReport { pairs })
}

fn probe_depth_for(a: &AddressSpec, b: &AddressSpec) -> usize {
    let denom_bits = |spec: &AddressSpec| -> usize {
        match spec.decode() {
            Decoded::Point(t) => t.denom().bits() as usize,
            Decoded::Interval(_) => 1,
        }
    };
    a.prefix.len().max(b.prefix.len()) + denom_bits(a) + denom_bits(b) + 2
}

/// Outcome of the nesting check between two consecutive depths.
#[derive(Clone, Debug)]
pub struct RefinementReport {
    pub shallow_depth: usize,
    pub deep_depth: usize,
    pub violations: Vec<String>,
    pub violation_count: usize,
}

impl RefinementReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

/// Checks that deepening refines: all strings of one depth-`k+1` cell must
/// truncate into the same depth-`k` cell.
pub fn check_refinement(
    rep: &Representation,
    shallow_depth: usize,
    deep_depth: usize,
    opts: &VerifyOptions,
) -> Result<RefinementReport> {
    assert!(shallow_depth < deep_depth);
    let shallow = quotient_complex(rep, shallow_depth, opts)?;
    let deep = quotient_complex(rep, deep_depth, opts)?;
    let mut target: Vec<Option<usize>> = vec![None; deep.cells.len()];
    let mut violations = Vec::new();
    let mut violation_count = 0usize;
    for s in BitString::enumerate(deep_depth) {
        let dc = deep.cell_of_string(s)?;
        let sc = shallow.cell_of_string(s.prefix(shallow_depth))?;
        match target[dc] {
            None => target[dc] = Some(sc),
            Some(prev) if prev == sc => {}
            Some(prev) => {
                violation_count += 1;
                if violations.len() < VIOLATION_CAP {
                    violations.push(format!(
                        "deep cell c{dc} splits across shallow cells c{prev} and c{sc} (string {s})"
                    ));
                }
            }
        }
    }
    Ok(RefinementReport {
        shallow_depth,
        deep_depth,
        violations,
        violation_count,
    })
}

/// One named check of the full suite.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Every verification the library offers, run against one representation
/// at one depth.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub depth: usize,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        write!(
            f,
            "{}",
            if self.passed() {
                "verification passed"
            } else {
                "verification FAILED"
            }
        )
    }
}

/// Runs the whole battery: selector partitions, fiber separation on a
/// canonical point set, diameter profile, quotient topology against the
/// model, and nesting between `depth - 1` and `depth`.
pub fn verify_suite(
    rep: &Representation,
    depth: usize,
    opts: &VerifyOptions,
) -> Result<SuiteReport> {
    let model = rep.model();
    let mut checks = Vec::new();

    let clusters = check_partition(rep.cluster_cones(), &covering_basis(rep.cluster_cones()), opts)?;
    checks.push(CheckResult {
        name: "partition:clusters".into(),
        passed: clusters.passed(),
        detail: clusters.to_string(),
    });
    for (ci, cluster) in model.clusters.iter().enumerate() {
        if !cluster.is_graph() {
            continue;
        }
        let cones: Vec<Cone> = rep.arc_cones(ci).iter().map(|(_, c)| c.clone()).collect();
        let report = check_partition(&cones, &covering_basis(&cones), opts)?;
        checks.push(CheckResult {
            name: format!("partition:arcs:C{}", ci + 1),
            passed: report.passed(),
            detail: report.to_string(),
        });
    }

    let points = canonical_points(model);
    if points.len() >= 2 {
        let report = check_fiber_separation(rep, &points)?;
        let worst = report.pairs.iter().map(|p| p.depth).max().unwrap_or(0);
        checks.push(CheckResult {
            name: "separation".into(),
            passed: report.all_separated(),
            detail: format!(
                "{} pairs, all separated: {}, deepest disagreement at position digit {}",
                report.pairs.len(),
                report.all_separated(),
                worst
            ),
        });
    }

    let has_arcs = model.clusters.iter().any(|c| c.is_graph());
    let levels = rep.lambda_depth(depth).min(12).max(1);
    let profile = diameter_profile(rep, levels);
    let expected: Vec<Param> = (1..=levels)
        .map(|d| {
            if has_arcs {
                Param::new(1.into(), num_bigint::BigInt::one() << d)
            } else {
                Param::zero()
            }
        })
        .collect();
    let profile_ok = profile == expected;
    checks.push(CheckResult {
        name: "diameters".into(),
        passed: profile_ok,
        detail: format!(
            "levels 1..={levels}: [{}]",
            profile
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    });

    let qc = quotient_complex(rep, depth, opts)?;
    let total_ok = qc.total_strings() == 1u64 << depth;
    checks.push(CheckResult {
        name: "quotient:coverage".into(),
        passed: total_ok,
        detail: format!(
            "{} cells absorb {} of {} strings",
            qc.cell_count(),
            qc.total_strings(),
            1u64 << depth
        ),
    });
    let got = qc.invariants();
    let want = model.invariants();
    let mut topo_ok = got == want;
    let mut topo_detail = format!("quotient {got} vs model {want}");
    for ci in 0..model.clusters.len() {
        let got_c = qc.cluster_invariants(ci);
        let want_c = model.cluster_invariants(ci);
        if got_c != want_c {
            topo_ok = false;
            topo_detail.push_str(&format!("; C{} mismatch: {got_c} vs {want_c}", ci + 1));
        }
    }
    checks.push(CheckResult {
        name: "quotient:topology".into(),
        passed: topo_ok,
        detail: topo_detail,
    });

    if depth > rep.selector_count() + 1 {
        let nesting = check_refinement(rep, depth - 1, depth, opts)?;
        checks.push(CheckResult {
            name: "quotient:refinement".into(),
            passed: nesting.passed(),
            detail: if nesting.passed() {
                format!("cells at depth {depth} nest into depth {}", depth - 1)
            } else {
                nesting.violations.join("; ")
            },
        });
    }

    Ok(SuiteReport { depth, checks })
}

/// Singleton points, all nodes, and two interior probes per arc (one
/// dyadic, one not).
fn canonical_points(model: &GeometricModel) -> Vec<PointRef> {
    let mut points = Vec::new();
    for (ci, cluster) in model.clusters.iter().enumerate() {
        match cluster {
            Cluster::Singleton { .. } => points.push(PointRef::singleton(ci)),
            Cluster::Graph { nodes, arcs } => {
                for node in nodes {
                    points.push(PointRef::node(ci, node.clone()));
                }
                for arc in arcs {
                    points.push(PointRef::arc_point(
                        ci,
                        arc.id.clone(),
                        Param::new(1.into(), 2.into()),
                    ));
                    points.push(PointRef::arc_point(
                        ci,
                        arc.id.clone(),
                        Param::new(1.into(), 3.into()),
                    ));
                }
            }
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::partition;
    use crate::index::{IndexAllocator, Scope};
    use crate::model::Arc;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> Param {
        Param::new(BigInt::from(n), BigInt::from(d))
    }

    fn single_arc_rep() -> Representation {
        let model = GeometricModel::new(vec![Cluster::Graph {
            nodes: vec!["e1".into(), "e2".into()],
            arcs: vec![Arc {
                id: "E1".into(),
                tail: "e1".into(),
                head: "e2".into(),
            }],
        }]);
        Representation::build(&model).unwrap()
    }

    fn star_rep() -> Representation {
        let model = GeometricModel::new(vec![Cluster::Graph {
            nodes: vec!["a".into(), "e1".into(), "e2".into(), "e3".into()],
            arcs: vec![
                Arc {
                    id: "E1".into(),
                    tail: "a".into(),
                    head: "e1".into(),
                },
                Arc {
                    id: "E2".into(),
                    tail: "a".into(),
                    head: "e2".into(),
                },
                Arc {
                    id: "E3".into(),
                    tail: "a".into(),
                    head: "e3".into(),
                },
            ],
        }]);
        Representation::build(&model).unwrap()
    }

    fn circle_rep() -> Representation {
        let model = GeometricModel::new(vec![Cluster::Graph {
            nodes: vec!["u".into(), "v".into()],
            arcs: vec![
                Arc {
                    id: "E1".into(),
                    tail: "u".into(),
                    head: "v".into(),
                },
                Arc {
                    id: "E2".into(),
                    tail: "u".into(),
                    head: "v".into(),
                },
            ],
        }]);
        Representation::build(&model).unwrap()
    }

    #[test]
    fn partition_check_enumerated_and_counted_agree() {
        let mut alloc = IndexAllocator::new();
        let cones = partition(&mut alloc, &Scope::Clusters, 5).unwrap();
        let basis = covering_basis(&cones);
        let enumerated =
            check_partition(&cones, &basis, &VerifyOptions::default()).unwrap();
        assert!(enumerated.passed());
        assert_eq!(enumerated.mode, PartitionMode::Enumerated);

        let counted =
            check_partition(&cones, &basis, &VerifyOptions::with_max_enum_depth(0)).unwrap();
        assert!(counted.passed());
        assert_eq!(counted.mode, PartitionMode::Counted);
        assert_eq!(enumerated.class_sizes, counted.class_sizes);
    }

    #[test]
    fn partition_check_catches_gaps_and_overlaps() {
        let mut alloc = IndexAllocator::new();
        let cones = partition(&mut alloc, &Scope::Clusters, 4).unwrap();
        let basis = covering_basis(&cones);

        let gappy = &cones[..3];
        for opts in [VerifyOptions::default(), VerifyOptions::with_max_enum_depth(0)] {
            let report = check_partition(gappy, &basis, &opts).unwrap();
            assert!(!report.passed(), "{report}");
        }

        let mut overlapping = cones.clone();
        overlapping.push(cones[0].clone());
        for opts in [VerifyOptions::default(), VerifyOptions::with_max_enum_depth(0)] {
            let report = check_partition(&overlapping, &basis, &opts).unwrap();
            assert!(!report.passed(), "{report}");
        }

        let err = check_partition(&cones, &basis[..1], &VerifyOptions::default()).unwrap_err();
        assert!(matches!(err, Error::TruncationTooShallow { .. }), "{err}");
    }

    #[test]
    fn quotient_of_single_arc_is_a_chain() {
        let rep = single_arc_rep();
        let qc = quotient_complex(&rep, 3, &VerifyOptions::default()).unwrap();
        assert_eq!(qc.cell_count(), 8);
        assert_eq!(qc.edge_count(), 7);
        assert_eq!(qc.total_strings(), 8);
        assert!(qc.cells.iter().all(|c| c.string_count == 1));
        assert_eq!(
            qc.cells[0].image,
            CellImage::NodePoint { id: "e1".into() }
        );
        assert_eq!(
            qc.cells[7].image,
            CellImage::NodePoint { id: "e2".into() }
        );
        assert_eq!(
            qc.cells[3].image,
            CellImage::ArcSegment {
                arc: "E1".into(),
                interval: DyadicInterval {
                    lo: q(3, 8),
                    hi: q(4, 8),
                },
            }
        );
        assert_eq!(qc.invariants(), rep.model().invariants());
    }

    #[test]
    fn two_arc_path_has_the_same_topology_as_one_arc() {
        // an interval drawn as two arcs joined at an interior node must
        // quotient to the same shape as the single-arc model
        let model = GeometricModel::new(vec![Cluster::Graph {
            nodes: vec!["e1".into(), "a".into(), "e2".into()],
            arcs: vec![
                Arc {
                    id: "E1".into(),
                    tail: "e1".into(),
                    head: "a".into(),
                },
                Arc {
                    id: "E2".into(),
                    tail: "a".into(),
                    head: "e2".into(),
                },
            ],
        }]);
        let rep = Representation::build(&model).unwrap();
        let single = single_arc_rep();
        assert_eq!(model.invariants(), single.model().invariants());

        for depth in [2, 4, 6] {
            let qc = quotient_complex(&rep, depth, &VerifyOptions::default()).unwrap();
            assert_eq!(qc.invariants(), model.invariants(), "depth {depth}");
        }

        let qc = quotient_complex(&rep, 4, &VerifyOptions::default()).unwrap();
        let joint = qc
            .cell_of_string(BitString::parse("0111").unwrap())
            .unwrap();
        assert_eq!(qc.cells[joint].image, CellImage::NodePoint { id: "a".into() });
        assert_eq!(qc.degree(joint), 2);
        // head cylinder of E1 and tail cylinder of E2 collapse together
        assert_eq!(
            qc.cell_of_string(BitString::parse("1000").unwrap()).unwrap(),
            joint
        );
    }

    #[test]
    fn quotient_of_star_merges_the_hub() {
        let rep = star_rep();
        let qc = quotient_complex(&rep, 5, &VerifyOptions::default()).unwrap();
        // one hub cell, then 7 cells per arm (6 interior + leaf)
        assert_eq!(qc.cell_count(), 22);
        assert_eq!(qc.edge_count(), 21);
        let hub = qc
            .cell_of_string(BitString::parse("00000").unwrap())
            .unwrap();
        assert_eq!(qc.cells[hub].image, CellImage::NodePoint { id: "a".into() });
        assert_eq!(qc.degree(hub), 3);
        assert_eq!(qc.cells[hub].string_count, 4); // 2 + 1 + 1 across the arms
        assert_eq!(qc.total_strings(), 32);
        assert_eq!(qc.invariants(), rep.model().invariants());

        // both strings with arm E1 selected and all position digits zero
        // land in the hub cell
        let other = qc
            .cell_of_string(BitString::parse("01000").unwrap())
            .unwrap();
        assert_eq!(other, hub);
    }

    #[test]
    fn circle_rank_is_one_from_the_first_position_digit() {
        let rep = circle_rep();
        for depth in [2, 3, 4, 8] {
            let qc = quotient_complex(&rep, depth, &VerifyOptions::default()).unwrap();
            assert_eq!(qc.invariants(), rep.model().invariants(), "depth {depth}");
        }
        // depth 2 is the degenerate picture: two cells, double edge
        let qc = quotient_complex(&rep, 2, &VerifyOptions::default()).unwrap();
        assert_eq!(qc.cell_count(), 2);
        assert_eq!(qc.edge_count(), 2);
        assert_eq!(qc.edges, vec![(0, 1), (0, 1)]);
    }

    #[test]
    fn quotient_depth_guards() {
        let rep = star_rep();
        let err = quotient_complex(&rep, 2, &VerifyOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DepthTooShallow { .. }), "{err}");
        let err = quotient_complex(&rep, 21, &VerifyOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DepthExceedsBound { .. }), "{err}");
        // raising the bound unlocks deeper enumerations
        assert!(quotient_complex(&rep, 21, &VerifyOptions::with_max_enum_depth(21)).is_ok());
    }

    #[test]
    fn refinement_nests() {
        let rep = star_rep();
        for depth in 4..=8 {
            let report =
                check_refinement(&rep, depth - 1, depth, &VerifyOptions::default()).unwrap();
            assert!(report.passed(), "depth {depth}: {:?}", report.violations);
        }
    }

    #[test]
    fn diameters_halve() {
        let rep = star_rep();
        let profile = diameter_profile(&rep, 5);
        let expected: Vec<Param> = (1..=5).map(|d| q(1, 1 << d)).collect();
        assert_eq!(profile, expected);

        let lonely = GeometricModel::new(vec![Cluster::Singleton { id: "p".into() }]);
        let rep = Representation::build(&lonely).unwrap();
        assert_eq!(diameter_profile(&rep, 3), vec![q(0, 1); 3]);
    }

    #[test]
    fn separation_on_star_points() {
        let rep = star_rep();
        let points = vec![
            PointRef::node(0, "a"),
            PointRef::node(0, "e1"),
            PointRef::arc_point(0, "E1", q(1, 2)),
            PointRef::arc_point(0, "E1", q(1, 3)),
            PointRef::arc_point(0, "E2", q(1, 2)),
        ];
        let report = check_fiber_separation(&rep, &points).unwrap();
        assert!(report.all_separated(), "{report}");
        assert_eq!(report.pairs.len(), 10);

        // hub vs leaf on the same arm disagree at the first position digit
        let hub_leaf = &report.pairs[0];
        assert_eq!((hub_leaf.a.as_str(), hub_leaf.b.as_str()), ("C1/node:a", "C1/node:e1"));
        assert_eq!(hub_leaf.depth, 1);

        // points on different arms separate at the selector level
        let cross = report
            .pairs
            .iter()
            .find(|p| p.a == "C1/E1@1/2" && p.b == "C1/E2@1/2")
            .unwrap();
        assert_eq!(cross.depth, 0);

        let dup = check_fiber_separation(&rep, &[points[0].clone(), points[0].clone()]);
        assert!(dup.is_err());
    }

    #[test]
    fn close_dyadic_and_periodic_points_still_separate() {
        // 1/3 and 11/32 agree on six position digits; the probe has to go
        // deeper than any prefix to find digit seven
        let rep = single_arc_rep();
        let points = vec![
            PointRef::arc_point(0, "E1", q(1, 3)),
            PointRef::arc_point(0, "E1", q(11, 32)),
        ];
        let report = check_fiber_separation(&rep, &points).unwrap();
        assert!(report.all_separated(), "{report}");
        assert_eq!(report.pairs[0].depth, 7);
    }

    #[test]
    fn suite_passes_on_reference_models() {
        let mixed = GeometricModel::new(vec![
            Cluster::Singleton { id: "p".into() },
            Cluster::Graph {
                nodes: vec!["u".into(), "v".into()],
                arcs: vec![
                    Arc {
                        id: "E1".into(),
                        tail: "u".into(),
                        head: "v".into(),
                    },
                    Arc {
                        id: "E2".into(),
                        tail: "u".into(),
                        head: "v".into(),
                    },
                ],
            },
        ]);
        let rep = Representation::build(&mixed).unwrap();
        let report = verify_suite(&rep, rep.stable_depth() + 2, &VerifyOptions::default()).unwrap();
        assert!(report.passed(), "{report}");
        assert!(report.checks.iter().any(|c| c.name == "quotient:topology"));
    }

    #[test]
    fn dot_and_json_exports_are_well_formed() {
        let rep = single_arc_rep();
        let qc = quotient_complex(&rep, 2, &VerifyOptions::default()).unwrap();
        let dot = qc.to_dot();
        assert!(dot.starts_with("graph quotient {"));
        assert_eq!(dot.matches(" -- ").count(), qc.edge_count());
        let parsed: serde_json::Value = serde_json::from_str(&qc.to_json()).unwrap();
        assert_eq!(parsed["cells"].as_array().unwrap().len(), qc.cell_count());
        assert_eq!(parsed["depth"], 2);
        let table = qc.cell_table();
        assert_eq!(table.lines().count(), qc.cell_count());
    }
}
