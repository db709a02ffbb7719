//! Fiber topology: an undirected, connected graph with link lengths in km.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type LinkId = usize;

/// The bundled 30-node / 56-link surrogate backbone.
pub const DEFAULT_TOPOLOGY: &str = include_str!("../data/surrogate_30n56l.topo");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub length_km: f64,
}

#[derive(Debug, Clone)]
pub struct Topology {
    node_count: usize,
    links: Vec<Link>,
    // neighbor lists sorted by neighbor id: (neighbor, link id)
    adjacency: Vec<Vec<(NodeId, LinkId)>>,
}

/// A simple path: `links[i]` joins `nodes[i]` and `nodes[i + 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathMetrics {
    pub total_length_km: f64,
    pub max_link_length_km: f64,
    pub hop_count: usize,
}

impl Topology {
    /// Builds a validated topology. Rejects self-loops, duplicate node pairs,
    /// out-of-range endpoints, non-positive lengths and disconnected graphs.
    pub fn new(node_count: usize, links: Vec<Link>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::validation("topology has no nodes"));
        }
        let mut seen = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); node_count];
        for (id, link) in links.iter().enumerate() {
            if link.a >= node_count || link.b >= node_count {
                return Err(Error::validation(format!(
                    "link {}-{} references a node outside [0, {node_count})",
                    link.a, link.b
                )));
            }
            if link.a == link.b {
                return Err(Error::validation(format!("self-loop at node {}", link.a)));
            }
            if !(link.length_km.is_finite() && link.length_km > 0.0) {
                return Err(Error::validation(format!(
                    "link {}-{} has non-positive length {}",
                    link.a, link.b, link.length_km
                )));
            }
            if !seen.insert((link.a.min(link.b), link.a.max(link.b))) {
                return Err(Error::validation(format!(
                    "duplicate link between {} and {}",
                    link.a, link.b
                )));
            }
            adjacency[link.a].push((link.b, id));
            adjacency[link.b].push((link.a, id));
        }
        for neighbors in &mut adjacency {
            neighbors.sort_unstable();
        }
        let topology = Topology {
            node_count,
            links,
            adjacency,
        };
        if !topology.is_connected() {
            return Err(Error::validation("topology is not connected"));
        }
        Ok(topology)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id]
    }

    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, LinkId)] {
        &self.adjacency[node]
    }

    fn is_connected(&self) -> bool {
        let mut visited = vec![false; self.node_count];
        let mut stack = vec![0];
        visited[0] = true;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adjacency[u] {
                if !visited[v] {
                    visited[v] = true;
                    stack.push(v);
                }
            }
        }
        visited.into_iter().all(|v| v)
    }

    /// Distances (km) from `source` to every node; `INFINITY` when unreachable.
    pub fn distances_from(&self, source: NodeId) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.node_count];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapEntry {
            cost: 0.0,
            node: source,
        });
        while let Some(HeapEntry { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for &(next, link) in &self.adjacency[node] {
                let next_cost = cost + self.links[link].length_km;
                if next_cost < dist[next] {
                    dist[next] = next_cost;
                    heap.push(HeapEntry {
                        cost: next_cost,
                        node: next,
                    });
                }
            }
        }
        dist
    }

    /// Dijkstra shortest path. Among equal-length paths the lexicographically
    /// smallest node sequence is returned.
    pub fn shortest_path(&self, source: NodeId, target: NodeId) -> Result<Path> {
        if source >= self.node_count || target >= self.node_count {
            return Err(Error::validation(format!(
                "node out of range: {source} -> {target} with {} nodes",
                self.node_count
            )));
        }
        if source == target {
            return Err(Error::validation(format!(
                "source and destination are both {source}"
            )));
        }
        // Distances to the target; walking forward from the source and always
        // taking the smallest neighbor that stays on a shortest path yields the
        // lexicographically smallest optimal sequence.
        let to_target = self.distances_from(target);
        if !to_target[source].is_finite() {
            return Err(Error::NoPath {
                from: source,
                to: target,
            });
        }
        let tolerance = 1e-9 * to_target[source].max(1.0);
        let mut nodes = vec![source];
        let mut links = Vec::new();
        let mut current = source;
        while current != target {
            let (next, link) = self.adjacency[current]
                .iter()
                .copied()
                .find(|&(next, link)| {
                    let via = self.links[link].length_km + to_target[next];
                    (via - to_target[current]).abs() <= tolerance && !nodes.contains(&next)
                })
                .expect("a shortest-path successor always exists");
            nodes.push(next);
            links.push(link);
            current = next;
        }
        Ok(Path { nodes, links })
    }

    /// Checks that `path` is a non-empty simple path in this topology.
    pub fn validate_path(&self, path: &Path) -> Result<()> {
        if path.links.is_empty() {
            return Err(Error::validation("path has no links"));
        }
        if path.nodes.len() != path.links.len() + 1 {
            return Err(Error::validation("path node and link counts disagree"));
        }
        let mut seen = BTreeSet::new();
        for &node in &path.nodes {
            if node >= self.node_count || !seen.insert(node) {
                return Err(Error::validation(format!(
                    "path node {node} is out of range or repeated"
                )));
            }
        }
        for (i, &link_id) in path.links.iter().enumerate() {
            let link = self
                .links
                .get(link_id)
                .ok_or_else(|| Error::validation(format!("unknown link {link_id}")))?;
            let (u, v) = (path.nodes[i], path.nodes[i + 1]);
            if !((link.a == u && link.b == v) || (link.a == v && link.b == u)) {
                return Err(Error::validation(format!(
                    "link {link_id} does not join {u} and {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn path_metrics(&self, path: &Path) -> Result<PathMetrics> {
        self.validate_path(path)?;
        let lengths = self.link_lengths(path);
        Ok(PathMetrics {
            total_length_km: lengths.iter().sum(),
            max_link_length_km: lengths.iter().copied().fold(0.0, f64::max),
            hop_count: lengths.len(),
        })
    }

    pub fn link_lengths(&self, path: &Path) -> Vec<f64> {
        path.links
            .iter()
            .map(|&id| self.links[id].length_km)
            .collect()
    }

    /// Builds the path visiting `nodes` in order, resolving the joining links.
    pub fn path_through(&self, nodes: &[NodeId]) -> Result<Path> {
        let mut links = Vec::with_capacity(nodes.len().saturating_sub(1));
        for pair in nodes.windows(2) {
            let link = self
                .adjacency
                .get(pair[0])
                .and_then(|n| n.iter().find(|&&(v, _)| v == pair[1]))
                .map(|&(_, link)| link)
                .ok_or_else(|| {
                    Error::validation(format!("no link between {} and {}", pair[0], pair[1]))
                })?;
            links.push(link);
        }
        let path = Path {
            nodes: nodes.to_vec(),
            links,
        };
        self.validate_path(&path)?;
        Ok(path)
    }

    /// Serializes to the topology file format.
    pub fn to_text(&self) -> String {
        let mut out = format!("nodes {}\n", self.node_count);
        for link in &self.links {
            out.push_str(&format!("{} {} {}\n", link.a, link.b, link.length_km));
        }
        out
    }
}

/// Parses a topology file: `nodes <N>` followed by `<u> <v> <length_km>` lines.
/// Lines starting with `#` and blank lines are ignored.
pub fn load_topology(text: &str) -> Result<Topology> {
    let mut node_count = None;
    let mut links = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match node_count {
            None => {
                if fields.len() != 2 || fields[0] != "nodes" {
                    return Err(Error::parse(line_no, "expected `nodes <N>` header"));
                }
                let n = fields[1]
                    .parse::<usize>()
                    .map_err(|e| Error::parse(line_no, format!("bad node count: {e}")))?;
                node_count = Some(n);
            }
            Some(_) => {
                if fields.len() != 3 {
                    return Err(Error::parse(
                        line_no,
                        format!("expected `<u> <v> <length_km>`, found {line:?}"),
                    ));
                }
                let node = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|e| Error::parse(line_no, format!("bad node id {s:?}: {e}")))
                };
                let a = node(fields[0])?;
                let b = node(fields[1])?;
                let length_km = fields[2]
                    .parse::<f64>()
                    .map_err(|e| Error::parse(line_no, format!("bad length: {e}")))?;
                links.push(Link { a, b, length_km });
            }
        }
    }
    let node_count = node_count.ok_or_else(|| Error::parse(1, "missing `nodes <N>` header"))?;
    Topology::new(node_count, links)
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: NodeId,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
