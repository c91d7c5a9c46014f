//! The representation of a model: one selector cone per cluster, one per
//! arc inside each graph cluster, and the shared position axis after them.
//!
//! `represent_point` maps model points to fibers (sets of address pieces);
//! `locate` inverts the direction, mapping an address back to the point or
//! arc segment it lands on. Both directions are exact.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::codec::{encode_param, AddressSpec, Decoded, DyadicInterval, FiberSpec, TailPattern};
use crate::cone::{partition, BitString, Cone};
use crate::error::{Error, Result};
use crate::index::{Index, IndexAllocator, Scope};
use crate::model::{Cluster, GeometricModel, PointLoc, PointRef};

const MANIFEST_FORMAT: &str = "cantor-rep/1";

/// A built representation. Construction is deterministic: the same model
/// always yields the same cones, indices and registry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Representation {
    model: GeometricModel,
    cluster_cones: Vec<Cone>,
    /// Per cluster, in arc declaration order; empty for singletons.
    arc_cones: Vec<Vec<(String, Cone)>>,
    /// All selector indices in canonical order; position indices follow.
    selector_indices: Vec<Index>,
}

impl Representation {
    pub fn build(model: &GeometricModel) -> Result<Self> {
        model.validate()?;
        let mut alloc = IndexAllocator::new();
        let cluster_cones = partition(&mut alloc, &Scope::Clusters, model.clusters.len())?;
        let mut arc_cones = Vec::with_capacity(model.clusters.len());
        for (i, cluster) in model.clusters.iter().enumerate() {
            match cluster {
                Cluster::Singleton { .. } => arc_cones.push(Vec::new()),
                Cluster::Graph { arcs, .. } => {
                    let scope = Scope::Arcs {
                        cluster: (i + 1) as u32,
                    };
                    let cones = partition(&mut alloc, &scope, arcs.len())?;
                    arc_cones.push(
                        arcs.iter()
                            .map(|a| a.id.clone())
                            .zip(cones)
                            .collect(),
                    );
                }
            }
        }
        alloc.declare_position_axis();
        Ok(Representation {
            model: model.clone(),
            cluster_cones,
            arc_cones,
            selector_indices: alloc.issued_sorted(),
        })
    }

    pub fn model(&self) -> &GeometricModel {
        &self.model
    }

    pub fn cluster_cones(&self) -> &[Cone] {
        &self.cluster_cones
    }

    pub fn cluster_cone(&self, cluster: usize) -> &Cone {
        &self.cluster_cones[cluster]
    }

    /// Arc cones of one cluster in declaration order (empty for singletons).
    pub fn arc_cones(&self, cluster: usize) -> &[(String, Cone)] {
        &self.arc_cones[cluster]
    }

    /// The bare arc cone, without the cluster part.
    pub fn arc_cone(&self, cluster: usize, arc: &str) -> Result<&Cone> {
        self.arc_cones
            .get(cluster)
            .and_then(|cs| cs.iter().find(|(id, _)| id == arc))
            .map(|(_, c)| c)
            .ok_or_else(|| Error::DanglingPoint {
                point: format!("C{}/{arc}", cluster + 1),
                reason: "no such arc cone".into(),
            })
    }

    /// Cluster cone and arc cone combined: the selector part every address
    /// on this arc carries.
    pub fn arc_selector(&self, cluster: usize, arc: &str) -> Result<Cone> {
        let combined = self.cluster_cones[cluster]
            .intersect(self.arc_cone(cluster, arc)?)
            .expect("cluster and arc cones constrain disjoint indices");
        Ok(combined)
    }

    /// Selector indices in canonical order (`xi*`, then `mu*` by cluster).
    pub fn selector_indices(&self) -> &[Index] {
        &self.selector_indices
    }

    pub fn selector_count(&self) -> usize {
        self.selector_indices.len()
    }

    /// The first `k` coordinates in canonical order: all selectors, then
    /// position indices `la1, la2, ...`.
    pub fn coords(&self, k: usize) -> Vec<Index> {
        let sel = self.selector_indices.len();
        (0..k)
            .map(|i| {
                if i < sel {
                    self.selector_indices[i].clone()
                } else {
                    Index::lambda((i - sel + 1) as u32)
                }
            })
            .collect()
    }

    /// Position digits available at truncation depth `k`, if any.
    pub fn lambda_depth(&self, k: usize) -> usize {
        k.saturating_sub(self.selector_count())
    }

    /// Smallest depth at which every graph cluster shows its full
    /// combinatorial shape (two position digits per arc).
    pub fn stable_depth(&self) -> usize {
        self.selector_count() + 2
    }

    /// The fiber of a model point.
    ///
    /// Singletons map to their whole cluster cone. Interior arc points get
    /// the exact binary encoding of their parameter over the arc selector.
    /// A node gets one constant-tail piece per incident arc: all zeros where
    /// the node is the tail, all ones where it is the head.
    pub fn represent_point(&self, point: &PointRef) -> Result<FiberSpec> {
        self.model.check_point(point)?;
        match &point.loc {
            PointLoc::Singleton => Ok(FiberSpec::new(vec![AddressSpec::new(
                self.cluster_cones[point.cluster].clone(),
                Vec::new(),
                TailPattern::Unconstrained,
            )])),
            PointLoc::ArcInterior { arc, t } => {
                let base = self.arc_selector(point.cluster, arc)?;
                encode_param(t, &base)
            }
            PointLoc::Node(node) => {
                let mut pieces = Vec::new();
                for arc in self.model.incident_arcs(point.cluster, node)? {
                    let base = self.arc_selector(point.cluster, &arc.id)?;
                    let tail = if arc.tail == *node {
                        TailPattern::AllZeros
                    } else {
                        TailPattern::AllOnes
                    };
                    pieces.push(AddressSpec::new(base, Vec::new(), tail));
                }
                Ok(FiberSpec::new(pieces))
            }
        }
    }

    /// Convenience: parse a point path and represent it.
    pub fn represent(&self, point_path: &str) -> Result<FiberSpec> {
        let point = self.model.parse_point(point_path)?;
        self.represent_point(&point)
    }

    fn resolve<'a>(
        &self,
        candidates: impl Iterator<Item = (&'a Cone, String)>,
        probe: &Cone,
        level: &'static str,
    ) -> Result<usize> {
        let hits: Vec<(usize, String)> = candidates
            .enumerate()
            .filter(|(_, (cone, _))| !cone.is_disjoint_from(probe))
            .map(|(i, (_, name))| (i, name))
            .collect();
        match hits.as_slice() {
            [(i, _)] => Ok(*i),
            _ => Err(Error::AmbiguousAddress {
                level,
                candidates: hits.into_iter().map(|(_, name)| name).collect(),
            }),
        }
    }

    /// The image of an address piece: an exact point, or the arc segment a
    /// finite (unconstrained-tail) address pins down. Errors if the selector
    /// part does not single out one cluster and, inside a graph, one arc.
    pub fn locate(&self, spec: &AddressSpec) -> Result<Located> {
        let names = (1..=self.cluster_cones.len()).map(|k| format!("C{k}"));
        let ci = self.resolve(
            self.cluster_cones.iter().zip(names),
            &spec.cone_part,
            "cluster",
        )?;
        match &self.model.clusters[ci] {
            Cluster::Singleton { .. } => Ok(Located::Point(PointRef::singleton(ci))),
            Cluster::Graph { arcs, .. } => {
                let ai = self.resolve(
                    self.arc_cones[ci].iter().map(|(id, c)| (c, id.clone())),
                    &spec.cone_part,
                    "arc",
                )?;
                let arc = &arcs[ai];
                match spec.decode() {
                    Decoded::Point(t) => {
                        if t.is_zero() {
                            Ok(Located::Point(PointRef::node(ci, arc.tail.clone())))
                        } else if t.is_one() {
                            Ok(Located::Point(PointRef::node(ci, arc.head.clone())))
                        } else {
                            Ok(Located::Point(PointRef::arc_point(ci, arc.id.clone(), t)))
                        }
                    }
                    Decoded::Interval(interval) => Ok(Located::Segment {
                        cluster: ci,
                        arc: arc.id.clone(),
                        interval,
                    }),
                }
            }
        }
    }

    /// The image of a truncated bit string read along the canonical
    /// coordinate order. Selector bits beyond the string's length stay
    /// free, so short strings can be ambiguous.
    pub fn locate_string(&self, s: BitString) -> Result<Located> {
        let basis = self.coords(s.len());
        let sel = self.selector_count().min(s.len());
        let constraints = basis[..sel]
            .iter()
            .cloned()
            .zip((0..sel).map(|pos| s.get(pos)));
        let prefix: Vec<bool> = (sel..s.len()).map(|pos| s.get(pos)).collect();
        let spec = AddressSpec::new(
            Cone::from_constraints(constraints),
            prefix,
            TailPattern::Unconstrained,
        );
        self.locate(&spec)
    }

    /// The finite cell registry: one entry per singleton, per node, and per
    /// arc interior family, in cluster then declaration order.
    pub fn cell_registry(&self) -> CellRegistry {
        CellRegistry {
            cells: (0..self.model.clusters.len())
                .flat_map(|i| self.cluster_registry(i).cells)
                .collect(),
        }
    }

    /// Registry entries of a single cluster.
    pub fn cluster_registry(&self, cluster: usize) -> CellRegistry {
        let mut cells = Vec::new();
        match &self.model.clusters[cluster] {
            Cluster::Singleton { id } => cells.push(RegistryCell {
                cluster,
                kind: RegistryCellKind::Singleton {
                    id: id.clone(),
                    fiber: self
                        .represent_point(&PointRef::singleton(cluster))
                        .expect("singleton point is valid"),
                },
            }),
            Cluster::Graph { nodes, arcs } => {
                for node in nodes {
                    cells.push(RegistryCell {
                        cluster,
                        kind: RegistryCellKind::Node {
                            id: node.clone(),
                            fiber: self
                                .represent_point(&PointRef::node(cluster, node.clone()))
                                .expect("declared node is valid"),
                        },
                    });
                }
                for arc in arcs {
                    cells.push(RegistryCell {
                        cluster,
                        kind: RegistryCellKind::ArcInterior {
                            arc: arc.id.clone(),
                            selector: self
                                .arc_selector(cluster, &arc.id)
                                .expect("declared arc is valid"),
                        },
                    });
                }
            }
        }
        CellRegistry { cells }
    }

    pub fn to_manifest(&self) -> Manifest {
        Manifest {
            format: MANIFEST_FORMAT.to_string(),
            model: self.model.clone(),
            selectors: self
                .selector_indices
                .iter()
                .map(|i| i.to_string())
                .collect(),
            cluster_cones: self.cluster_cones.iter().map(|c| c.to_string()).collect(),
            arc_cones: self
                .arc_cones
                .iter()
                .enumerate()
                .flat_map(|(i, cones)| {
                    cones.iter().map(move |(arc, cone)| ArcConeEntry {
                        cluster: format!("C{}", i + 1),
                        arc: arc.clone(),
                        cone: cone.to_string(),
                    })
                })
                .collect(),
            cells: self
                .cell_registry()
                .cells
                .iter()
                .map(RegistryCell::manifest_entry)
                .collect(),
        }
    }

    pub fn to_manifest_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(&self.to_manifest()).expect("manifest serializes");
        text.push('\n');
        text
    }

    /// Rebuilds from a manifest and checks that every recorded cone and cell
    /// matches the rebuilt representation.
    pub fn from_manifest(manifest: &Manifest) -> Result<Self> {
        let corrupt = |reason: String| Error::Parse {
            what: "manifest",
            reason,
        };
        if manifest.format != MANIFEST_FORMAT {
            return Err(corrupt(format!(
                "unknown format `{}`, expected `{MANIFEST_FORMAT}`",
                manifest.format
            )));
        }
        let rep = Representation::build(&manifest.model)?;
        let rebuilt = rep.to_manifest();
        if rebuilt.selectors != manifest.selectors {
            return Err(corrupt("selector list does not match the model".into()));
        }
        if rebuilt.cluster_cones != manifest.cluster_cones {
            return Err(corrupt("cluster cones do not match the model".into()));
        }
        if rebuilt.arc_cones != manifest.arc_cones {
            return Err(corrupt("arc cones do not match the model".into()));
        }
        if rebuilt.cells != manifest.cells {
            return Err(corrupt("cell registry does not match the model".into()));
        }
        Ok(rep)
    }

    pub fn from_manifest_json(text: &str) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "manifest",
            reason: e.to_string(),
        })?;
        Representation::from_manifest(&manifest)
    }
}

/// Where an address lands in the model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Located {
    Point(PointRef),
    /// A finite address only pins an arc point down to a dyadic segment.
    Segment {
        cluster: usize,
        arc: String,
        interval: DyadicInterval,
    },
}

impl fmt::Display for Located {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Located::Point(p) => write!(f, "{p}"),
            Located::Segment {
                cluster,
                arc,
                interval,
            } => write!(f, "C{}/{arc}@{interval}", cluster + 1),
        }
    }
}

/// Finite list of cells covering the whole pattern: singletons, nodes, and
/// one family per arc interior.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellRegistry {
    pub cells: Vec<RegistryCell>,
}

impl CellRegistry {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegistryCell {
    pub cluster: usize,
    pub kind: RegistryCellKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegistryCellKind {
    Singleton { id: String, fiber: FiberSpec },
    Node { id: String, fiber: FiberSpec },
    /// Interior points share the selector; their fibers differ only in
    /// position digits.
    ArcInterior { arc: String, selector: Cone },
}

impl RegistryCell {
    fn manifest_entry(&self) -> CellEntry {
        let cluster = format!("C{}", self.cluster + 1);
        match &self.kind {
            RegistryCellKind::Singleton { id, fiber } => CellEntry {
                cluster,
                kind: "singleton".into(),
                name: id.clone(),
                fiber: Some(fiber.pieces().iter().map(|p| p.to_string()).collect()),
                selector: None,
            },
            RegistryCellKind::Node { id, fiber } => CellEntry {
                cluster,
                kind: "node".into(),
                name: id.clone(),
                fiber: Some(fiber.pieces().iter().map(|p| p.to_string()).collect()),
                selector: None,
            },
            RegistryCellKind::ArcInterior { arc, selector } => CellEntry {
                cluster,
                kind: "arc-interior".into(),
                name: arc.clone(),
                fiber: None,
                selector: Some(selector.to_string()),
            },
        }
    }
}

impl fmt::Display for RegistryCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.cluster + 1;
        match &self.kind {
            RegistryCellKind::Singleton { id, fiber } => {
                write!(f, "C{c} point {id}: {}", join_pieces(fiber))
            }
            RegistryCellKind::Node { id, fiber } => {
                write!(f, "C{c} node {id}: {}", join_pieces(fiber))
            }
            RegistryCellKind::ArcInterior { arc, selector } => {
                write!(f, "C{c} arc {arc} interior: selector {selector}")
            }
        }
    }
}

fn join_pieces(fiber: &FiberSpec) -> String {
    fiber
        .pieces()
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(" ; ")
}

/// Serialized form of a representation. The model is authoritative; the
/// cones and cells are recorded so a reload can check integrity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub model: GeometricModel,
    pub selectors: Vec<String>,
    pub cluster_cones: Vec<String>,
    pub arc_cones: Vec<ArcConeEntry>,
    pub cells: Vec<CellEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcConeEntry {
    pub cluster: String,
    pub arc: String,
    pub cone: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellEntry {
    pub cluster: String,
    pub kind: String,
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fiber: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selector: Option<String>,
}

/// Builds `n` disjoint copies of a graph template as one model. With
/// `require_dendrite` the template must be a connected acyclic graph.
pub fn build_polycrystal(
    n: usize,
    template: &Cluster,
    require_dendrite: bool,
) -> Result<Polycrystal> {
    let invalid = |reason: String| Error::ModelInvalid {
        location: "polycrystal".into(),
        reason,
    };
    if n == 0 {
        return Err(invalid("need at least one crystal".into()));
    }
    if !template.is_graph() {
        return Err(invalid("the crystal template must be a graph cluster".into()));
    }
    let model = GeometricModel::new(vec![template.clone(); n]);
    model.validate()?;
    if require_dendrite {
        let inv = model.cluster_invariants(0);
        if inv.components != 1 || inv.cycle_rank != 0 {
            return Err(invalid(format!(
                "the template must be a dendrite (connected, acyclic); it has {} components and cycle rank {}",
                inv.components, inv.cycle_rank
            )));
        }
    }
    let rep = Representation::build(&model)?;
    let crystals = (0..n).map(|i| rep.cluster_registry(i)).collect();
    Ok(Polycrystal { rep, crystals })
}

/// A polycrystal build: the representation plus one registry per crystal.
#[derive(Clone, Debug)]
pub struct Polycrystal {
    pub rep: Representation,
    pub crystals: Vec<CellRegistry>,
}

impl Polycrystal {
    /// All crystal registries concatenated, in crystal order.
    pub fn full_registry(&self) -> CellRegistry {
        CellRegistry {
            cells: self
                .crystals
                .iter()
                .flat_map(|r| r.cells.iter().cloned())
                .collect(),
        }
    }
}
