//! Leaf-angle extraction: horizontal slicing, per-slice clustering,
//! inter-slice matching, stem extraction on a negative-cost DAG, label
//! refinement, and angle measurement at branch junctions.

mod angles;
mod dag;
mod dbscan;
mod graph;
mod hungarian;

pub use angles::{leaf_angles, refine_labels, LeafAngle};
pub use dag::{build_stem_dag, extract_stem, StemDag};
pub use dbscan::dbscan;
pub use graph::{
    bridge_components, estimate_principal_axis, match_bipartite, match_trunk_axis, AdjacencyMethod,
};
pub use hungarian::solve_assignment;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// One z-interval of the plant. Slices partition `[z_min, z_max]` into
/// equal-thickness intervals; the top boundary is inclusive.
#[derive(Debug, Clone)]
pub struct Slice {
    pub index: usize,
    pub z_lo: f64,
    pub z_hi: f64,
    pub members: Vec<usize>,
}

/// Node classification after stem extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeLabel {
    Stem,
    Leaf,
    Outlier,
    Unassigned,
}

/// A per-slice cluster: its centroid, members, and graph bookkeeping.
#[derive(Debug, Clone)]
pub struct ClusterNode {
    pub slice: usize,
    pub centroid: Vector3<f64>,
    pub members: Vec<usize>,
    pub degree: usize,
    /// `max(0, degree - 2)` once adjacency is known.
    pub branch_count: usize,
    pub label: NodeLabel,
    /// Degree >= 3 and survived label refinement.
    pub junction: bool,
}

/// Undirected adjacency edge between cluster nodes.
#[derive(Debug, Clone, Copy)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub cost: f64,
    pub bridged: bool,
}

/// Cluster graph embedded in 3D.
#[derive(Debug, Clone)]
pub struct SliceGraph {
    pub nodes: Vec<ClusterNode>,
    pub edges: Vec<GraphEdge>,
    pub principal_axis: Vector3<f64>,
}

impl SliceGraph {
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.a].push(e.b);
            adj[e.b].push(e.a);
        }
        for nbrs in &mut adj {
            nbrs.sort_unstable();
        }
        adj
    }

    /// Refresh per-node degree and branch counts from the edge list.
    pub fn recompute_degrees(&mut self) {
        let adj = self.adjacency();
        for (i, node) in self.nodes.iter_mut().enumerate() {
            node.degree = adj[i].len();
            node.branch_count = node.degree.saturating_sub(2);
        }
    }

    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.nodes.len());
        for e in &self.edges {
            uf.union(e.a, e.b);
        }
        uf.count()
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    count: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            count: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        self.count -= 1;
        true
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// Partition the cloud along z into `n` equal-thickness slices. Every
/// point lands in exactly one slice; points at the very top belong to
/// slice `n - 1`.
pub fn slice(cloud: &PointCloud, n: usize) -> Result<Vec<Slice>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 slices, got {n}"
        )));
    }
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let z_lo = cloud.positions().map(|p| p.z).fold(f64::INFINITY, f64::min);
    let z_hi = cloud.positions().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max);
    let h = (z_hi - z_lo) / n as f64;

    let mut slices: Vec<Slice> = (0..n)
        .map(|i| Slice {
            index: i,
            z_lo: z_lo + i as f64 * h,
            z_hi: z_lo + (i + 1) as f64 * h,
            members: Vec::new(),
        })
        .collect();

    for (i, p) in cloud.positions().enumerate() {
        let idx = if h > 0.0 {
            (((p.z - z_lo) / h) as usize).min(n - 1)
        } else {
            0
        };
        slices[idx].members.push(i);
    }
    Ok(slices)
}

/// DBSCAN one slice into cluster nodes. Noise points are discarded;
/// clusters are numbered in discovery order (ascending member id).
pub fn cluster_slice(
    cloud: &PointCloud,
    slice: &Slice,
    eps: f64,
    min_pts: usize,
) -> Vec<ClusterNode> {
    if slice.members.is_empty() {
        return vec![];
    }
    let positions: Vec<Vector3<f64>> = slice.members.iter().map(|&i| cloud.position(i)).collect();
    let labels = dbscan(&positions, eps, min_pts);
    let n_clusters = labels.iter().flatten().max().map(|&m| m + 1).unwrap_or(0);

    let mut nodes: Vec<ClusterNode> = (0..n_clusters)
        .map(|_| ClusterNode {
            slice: slice.index,
            centroid: Vector3::zeros(),
            members: Vec::new(),
            degree: 0,
            branch_count: 0,
            label: NodeLabel::Unassigned,
            junction: false,
        })
        .collect();
    for (local, label) in labels.iter().enumerate() {
        if let Some(c) = label {
            nodes[*c].members.push(slice.members[local]);
            nodes[*c].centroid += positions[local];
        }
    }
    for node in &mut nodes {
        node.centroid /= node.members.len() as f64;
    }
    nodes
}

/// Median nearest-neighbor spacing of a position set (brute force; the
/// per-slice sets are small).
pub fn median_nn_spacing(positions: &[Vector3<f64>]) -> Option<f64> {
    if positions.len() < 2 {
        return None;
    }
    let mut nn: Vec<f64> = positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            positions
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| (p - q).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    nn.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(nn[nn.len() / 2])
}

/// Tuning parameters for the full leaf-angle pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StemParams {
    pub n_slices: usize,
    /// DBSCAN radius; `None` derives 1.5 x median nearest-neighbor
    /// spacing per slice.
    pub eps: Option<f64>,
    pub min_pts: usize,
    /// Bipartite matches farther than this multiple of the slice
    /// thickness are discarded.
    pub max_match_dist_factor: f64,
    /// Weight of angular deviation in trunk-axis matching.
    pub trunk_beta: f64,
    /// DAG cost weights (alpha, beta, gamma, delta).
    pub weights: [f64; 4],
    /// Initial bridging threshold as a multiple of slice thickness.
    pub bridge_initial_factor: f64,
    pub bridge_growth: f64,
    pub refine_min_neighbors: usize,
    pub overlap_threshold: f64,
    /// Trunk-distance window (in stem-path steps) for duplicate-junction
    /// analysis.
    pub trunk_window: usize,
    /// Nodes per side for the angle regression lines.
    pub angle_window: usize,
}

impl Default for StemParams {
    fn default() -> Self {
        StemParams {
            n_slices: 80,
            eps: None,
            min_pts: 5,
            max_match_dist_factor: 10.0,
            trunk_beta: 1.0,
            weights: [1.0, 1.0, 1.0, 2.0],
            bridge_initial_factor: 2.0,
            bridge_growth: 1.5,
            refine_min_neighbors: 1,
            overlap_threshold: 0.5,
            trunk_window: 3,
            angle_window: 5,
        }
    }
}

/// Output of the full pipeline.
#[derive(Debug, Clone)]
pub struct StemAnalysis {
    pub graph: SliceGraph,
    pub stem_path: Vec<usize>,
    pub stem_cost: f64,
    pub method: AdjacencyMethod,
    pub angles: Vec<LeafAngle>,
    /// Junction nodes whose arms were too short to fit a line.
    pub skipped_junctions: Vec<usize>,
}

/// Build candidate graphs with both matching methods, keep the one with
/// the cheaper extracted stem, refine labels, and measure leaf angles.
pub fn analyze_stem(cloud: &PointCloud, params: &StemParams) -> Result<StemAnalysis> {
    let slices = slice(cloud, params.n_slices)?;
    let thickness = slices[0].z_hi - slices[0].z_lo;

    let mut nodes: Vec<ClusterNode> = Vec::new();
    for s in &slices {
        let eps = match params.eps {
            Some(e) => e,
            None => {
                let positions: Vec<Vector3<f64>> =
                    s.members.iter().map(|&i| cloud.position(i)).collect();
                match median_nn_spacing(&positions) {
                    Some(m) if m > 0.0 => 1.5 * m,
                    _ => continue,
                }
            }
        };
        nodes.extend(cluster_slice(cloud, s, eps, params.min_pts));
    }
    if nodes.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: nodes.len(),
        });
    }

    let axis = estimate_principal_axis(&nodes);
    let max_match = params.max_match_dist_factor * thickness;
    let bridge_initial = params.bridge_initial_factor * thickness;

    let mut candidates = Vec::new();
    for method in [AdjacencyMethod::Bipartite, AdjacencyMethod::TrunkAxis] {
        let mut graph = graph::build_adjacency(&nodes, axis, method, max_match, params.trunk_beta);
        bridge_components(&mut graph, bridge_initial, params.bridge_growth);
        graph.recompute_degrees();
        let dag = build_stem_dag(&graph, params.weights)?;
        let (path, cost) = extract_stem(&dag, &graph);
        candidates.push((method, graph, path, cost));
    }

    // lower stem cost wins; ties go to the bipartite variant (first)
    let (method, mut graph, stem_path, stem_cost) = {
        let pick = if candidates[1].3 < candidates[0].3 { 1 } else { 0 };
        candidates.swap_remove(pick)
    };

    refine_labels(
        &mut graph,
        &stem_path,
        params.refine_min_neighbors,
        params.overlap_threshold,
        params.trunk_window,
    );
    let (angles, skipped) = leaf_angles(&graph, &stem_path, params.angle_window);

    Ok(StemAnalysis {
        graph,
        stem_path,
        stem_cost,
        method,
        angles,
        skipped_junctions: skipped,
    })
}
