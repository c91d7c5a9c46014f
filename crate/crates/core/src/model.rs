//! Input patterns: clusters of finite graphs or singletons.
//!
//! A model is an ordered list of clusters. Graph clusters are built from
//! oriented arcs (tail maps to parameter 0, head to 1); isolated points are
//! singleton clusters. Self-loops are rejected: a topological circle needs
//! at least two arcs.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::codec::{parse_param, Param};
use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

/// An oriented arc between two distinct nodes of the same graph cluster.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub id: String,
    pub tail: String,
    pub head: String,
}

/// One cluster of the pattern.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Cluster {
    Singleton { id: String },
    Graph { nodes: Vec<String>, arcs: Vec<Arc> },
}

impl Cluster {
    pub fn is_graph(&self) -> bool {
        matches!(self, Cluster::Graph { .. })
    }

    pub fn arcs(&self) -> &[Arc] {
        match self {
            Cluster::Singleton { .. } => &[],
            Cluster::Graph { arcs, .. } => arcs,
        }
    }

    pub fn nodes(&self) -> &[String] {
        match self {
            Cluster::Singleton { .. } => &[],
            Cluster::Graph { nodes, .. } => nodes,
        }
    }
}

/// The whole pattern: finitely many clusters, at least one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeometricModel {
    pub clusters: Vec<Cluster>,
}

impl GeometricModel {
    pub fn new(clusters: Vec<Cluster>) -> Self {
        GeometricModel { clusters }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: GeometricModel = serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "model",
            reason: e.to_string(),
        })?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |location: String, reason: String| Error::ModelInvalid { location, reason };
        if self.clusters.is_empty() {
            return Err(invalid(
                "clusters".into(),
                "a model needs at least one cluster".into(),
            ));
        }
        for (ci, cluster) in self.clusters.iter().enumerate() {
            let at = |rest: String| format!("clusters[{ci}]{rest}");
            match cluster {
                Cluster::Singleton { id } => {
                    if id.is_empty() {
                        return Err(invalid(at(".id".into()), "singleton id is empty".into()));
                    }
                }
                Cluster::Graph { nodes, arcs } => {
                    if arcs.is_empty() {
                        return Err(invalid(
                            at(".arcs".into()),
                            "a graph cluster needs at least one arc".into(),
                        ));
                    }
                    let mut seen_nodes = BTreeMap::new();
                    for (ni, node) in nodes.iter().enumerate() {
                        if node.is_empty() {
                            return Err(invalid(at(format!(".nodes[{ni}]")), "empty node id".into()));
                        }
                        if seen_nodes.insert(node.clone(), ni).is_some() {
                            return Err(invalid(
                                at(format!(".nodes[{ni}]")),
                                format!("duplicate node id `{node}`"),
                            ));
                        }
                    }
                    let mut used = vec![false; nodes.len()];
                    let mut seen_arcs = BTreeMap::new();
                    for (ai, arc) in arcs.iter().enumerate() {
                        if arc.id.is_empty() {
                            return Err(invalid(at(format!(".arcs[{ai}].id")), "empty arc id".into()));
                        }
                        if seen_arcs.insert(arc.id.clone(), ai).is_some() {
                            return Err(invalid(
                                at(format!(".arcs[{ai}].id")),
                                format!("duplicate arc id `{}`", arc.id),
                            ));
                        }
                        if arc.tail == arc.head {
                            return Err(invalid(
                                at(format!(".arcs[{ai}]")),
                                format!(
                                    "arc `{}` is a self-loop; a circle needs at least two arcs",
                                    arc.id
                                ),
                            ));
                        }
                        for (field, endpoint) in [("tail", &arc.tail), ("head", &arc.head)] {
                            match seen_nodes.get(endpoint) {
                                Some(&ni) => used[ni] = true,
                                None => {
                                    return Err(invalid(
                                        at(format!(".arcs[{ai}].{field}")),
                                        format!("endpoint `{endpoint}` is not a declared node"),
                                    ))
                                }
                            }
                        }
                    }
                    if let Some(ni) = used.iter().position(|&u| !u) {
                        return Err(invalid(
                            at(format!(".nodes[{ni}]")),
                            format!(
                                "node `{}` lies on no arc; model isolated points as singleton clusters",
                                nodes[ni]
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn cluster(&self, index: usize) -> Result<&Cluster> {
        self.clusters.get(index).ok_or_else(|| Error::DanglingPoint {
            point: format!("C{}", index + 1),
            reason: format!("model has {} clusters", self.clusters.len()),
        })
    }

    pub fn arc(&self, cluster: usize, arc_id: &str) -> Result<&Arc> {
        self.cluster(cluster)?
            .arcs()
            .iter()
            .find(|a| a.id == arc_id)
            .ok_or_else(|| Error::DanglingPoint {
                point: format!("C{}/{arc_id}", cluster + 1),
                reason: format!("cluster C{} has no arc `{arc_id}`", cluster + 1),
            })
    }

    /// Arcs incident to a node, in declaration order.
    pub fn incident_arcs(&self, cluster: usize, node: &str) -> Result<Vec<&Arc>> {
        let c = self.cluster(cluster)?;
        if !c.nodes().iter().any(|n| n == node) {
            return Err(Error::DanglingPoint {
                point: format!("C{}/node:{node}", cluster + 1),
                reason: format!("cluster C{} has no node `{node}`", cluster + 1),
            });
        }
        Ok(c.arcs()
            .iter()
            .filter(|a| a.tail == node || a.head == node)
            .collect())
    }

    /// Parses a point path: `C<k>` (singleton), `C<k>/node:<id>`, or
    /// `C<k>/<arc>@<t>` with `t` an exact fraction. Arc endpoints `@0` and
    /// `@1` are canonicalized to the corresponding node.
    pub fn parse_point(&self, text: &str) -> Result<PointRef> {
        let bad = |reason: String| Error::Parse {
            what: "point",
            reason,
        };
        let text = text.trim();
        let (cluster_text, rest) = match text.split_once('/') {
            Some((c, r)) => (c, Some(r)),
            None => (text, None),
        };
        let k: usize = cluster_text
            .strip_prefix('C')
            .and_then(|s| s.parse().ok())
            .filter(|&k| k >= 1)
            .ok_or_else(|| bad(format!("`{cluster_text}` is not a cluster reference C<k>")))?;
        let cluster = k - 1;
        let c = self.cluster(cluster)?;
        let Some(rest) = rest else {
            if c.is_graph() {
                return Err(bad(format!(
                    "C{k} is a graph cluster; name a node or an arc point"
                )));
            }
            return Ok(PointRef {
                cluster,
                loc: PointLoc::Singleton,
            });
        };
        if let Some(node) = rest.strip_prefix("node:") {
            let point = PointRef {
                cluster,
                loc: PointLoc::Node(node.to_string()),
            };
            self.check_point(&point)?;
            return Ok(point);
        }
        let (arc_id, t_text) = rest
            .split_once('@')
            .ok_or_else(|| bad(format!("`{rest}` is neither node:<id> nor <arc>@<t>")))?;
        let arc = self.arc(cluster, arc_id)?;
        let t = parse_param(t_text)?;
        if t.is_zero() {
            return Ok(PointRef {
                cluster,
                loc: PointLoc::Node(arc.tail.clone()),
            });
        }
        if t.is_one() {
            return Ok(PointRef {
                cluster,
                loc: PointLoc::Node(arc.head.clone()),
            });
        }
        let point = PointRef {
            cluster,
            loc: PointLoc::ArcInterior {
                arc: arc_id.to_string(),
                t,
            },
        };
        self.check_point(&point)?;
        Ok(point)
    }

    /// Validates that a point reference denotes a point of this model.
    pub fn check_point(&self, point: &PointRef) -> Result<()> {
        let c = self.cluster(point.cluster)?;
        match &point.loc {
            PointLoc::Singleton => {
                if c.is_graph() {
                    return Err(Error::DanglingPoint {
                        point: point.to_string(),
                        reason: format!("C{} is a graph cluster", point.cluster + 1),
                    });
                }
            }
            PointLoc::Node(node) => {
                self.incident_arcs(point.cluster, node)?;
            }
            PointLoc::ArcInterior { arc, t } => {
                self.arc(point.cluster, arc)?;
                if t <= &Param::zero() || t >= &Param::one() {
                    return Err(Error::DanglingPoint {
                        point: point.to_string(),
                        reason: "arc parameter must be strictly between 0 and 1; endpoints are node references".into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Exact combinatorial invariants of the pattern, computed directly from
    /// nodes and arcs: the reference the quotient complex is checked against.
    pub fn invariants(&self) -> TopologyInvariants {
        let mut total = TopologyInvariants::default();
        for i in 0..self.clusters.len() {
            total.absorb(&self.cluster_invariants(i));
        }
        total
    }

    /// Invariants of a single cluster.
    pub fn cluster_invariants(&self, cluster: usize) -> TopologyInvariants {
        match &self.clusters[cluster] {
            Cluster::Singleton { .. } => TopologyInvariants {
                components: 1,
                cycle_rank: 0,
                branch_degrees: Vec::new(),
                leaves: 0,
            },
            Cluster::Graph { nodes, arcs } => {
                let pos: BTreeMap<&str, usize> = nodes
                    .iter()
                    .enumerate()
                    .map(|(i, n)| (n.as_str(), i))
                    .collect();
                let mut uf = UnionFind::new(nodes.len());
                let mut degree = vec![0usize; nodes.len()];
                for arc in arcs {
                    let t = pos[arc.tail.as_str()];
                    let h = pos[arc.head.as_str()];
                    uf.union(t, h);
                    degree[t] += 1;
                    degree[h] += 1;
                }
                let components = uf.component_count();
                let cycle_rank = arcs.len() + components - nodes.len();
                let mut branch_degrees: Vec<usize> =
                    degree.iter().copied().filter(|&d| d >= 3).collect();
                branch_degrees.sort_unstable();
                let leaves = degree.iter().filter(|&&d| d == 1).count();
                TopologyInvariants {
                    components,
                    cycle_rank,
                    branch_degrees,
                    leaves,
                }
            }
        }
    }
}

/// A point of the model: a singleton, a node, or an interior arc point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointRef {
    /// 0-based cluster index; rendered 1-based as `C<k>`.
    pub cluster: usize,
    pub loc: PointLoc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PointLoc {
    Singleton,
    Node(String),
    ArcInterior { arc: String, t: Param },
}

impl PointRef {
    pub fn singleton(cluster: usize) -> Self {
        PointRef {
            cluster,
            loc: PointLoc::Singleton,
        }
    }

    pub fn node(cluster: usize, node: impl Into<String>) -> Self {
        PointRef {
            cluster,
            loc: PointLoc::Node(node.into()),
        }
    }

    pub fn arc_point(cluster: usize, arc: impl Into<String>, t: Param) -> Self {
        PointRef {
            cluster,
            loc: PointLoc::ArcInterior { arc: arc.into(), t },
        }
    }
}

impl fmt::Display for PointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.cluster + 1)?;
        match &self.loc {
            PointLoc::Singleton => Ok(()),
            PointLoc::Node(node) => write!(f, "/node:{node}"),
            PointLoc::ArcInterior { arc, t } => write!(f, "/{arc}@{t}"),
        }
    }
}

/// Graph invariants used on both sides of the topology check: computed
/// combinatorially from the model and brute-force from the quotient complex.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyInvariants {
    pub components: usize,
    pub cycle_rank: usize,
    /// Sorted degrees of all branch points (degree at least 3).
    pub branch_degrees: Vec<usize>,
    /// Number of degree-1 points.
    pub leaves: usize,
}

impl TopologyInvariants {
    pub fn absorb(&mut self, other: &TopologyInvariants) {
        self.components += other.components;
        self.cycle_rank += other.cycle_rank;
        self.branch_degrees.extend(other.branch_degrees.iter());
        self.branch_degrees.sort_unstable();
        self.leaves += other.leaves;
    }
}

impl fmt::Display for TopologyInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{components: {}, cycle_rank: {}, branch: {:?}, leaves: {}}}",
            self.components, self.cycle_rank, self.branch_degrees, self.leaves
        )
    }
}
