//! Coreference graphs and their connected components.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::GoldClusterMap;
use crate::error::{Error, Result};
use crate::metrics::Partition;
use crate::pairs::MentionPair;

/// Disjoint-set forest with path compression and union by rank.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.rank[a] < self.rank[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] = self.rank[a].saturating_add(1);
        }
        true
    }
}

/// Mentions plus undirected coreference links between them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorefGraph {
    nodes: Vec<String>,
    edges: BTreeSet<MentionPair>,
}

impl CorefGraph {
    pub fn new<N, E>(nodes: N, edges: E) -> Result<Self>
    where
        N: IntoIterator<Item = String>,
        E: IntoIterator<Item = MentionPair>,
    {
        let mut nodes: Vec<String> = nodes.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup();
        let edges: BTreeSet<MentionPair> = edges.into_iter().collect();
        for e in &edges {
            if nodes.binary_search(&e.a).is_err() || nodes.binary_search(&e.b).is_err() {
                return Err(Error::DanglingEdge(e.a.clone(), e.b.clone()));
            }
        }
        Ok(Self { nodes, edges })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<MentionPair> {
        &self.edges
    }
}

/// mention_id → predicted cluster id, where a cluster id is the
/// lexicographically smallest member.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment(BTreeMap<String, String>);

impl ClusterAssignment {
    pub fn from_map(map: BTreeMap<String, String>) -> Self {
        Self(map)
    }

    pub fn as_map(&self) -> &BTreeMap<String, String> {
        &self.0
    }

    pub fn get(&self, mention: &str) -> Option<&str> {
        self.0.get(mention).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// cluster id → sorted members.
    pub fn clusters(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (m, c) in &self.0 {
            out.entry(c.as_str()).or_default().push(m.as_str());
        }
        out
    }

    pub fn num_clusters(&self) -> usize {
        self.0.values().collect::<BTreeSet<_>>().len()
    }

    pub fn to_partition(&self) -> Partition {
        Partition::from_labels(&self.0)
    }
}

pub fn connected_components(graph: &CorefGraph) -> ClusterAssignment {
    let index: HashMap<&str, usize> = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut uf = UnionFind::new(graph.nodes.len());
    for e in &graph.edges {
        uf.union(index[e.a.as_str()], index[e.b.as_str()]);
    }
    // nodes are sorted, so the first member seen for a root is the smallest
    let mut label: HashMap<usize, usize> = HashMap::new();
    let map = (0..graph.nodes.len())
        .map(|i| {
            let root = uf.find(i);
            let rep = *label.entry(root).or_insert(i);
            (graph.nodes[i].clone(), graph.nodes[rep].clone())
        })
        .collect();
    ClusterAssignment(map)
}

/// Relabels an arbitrary labelling (such as the gold map) so that cluster ids
/// are smallest members.
pub fn canonical_assignment(labels: &GoldClusterMap) -> ClusterAssignment {
    let mut rep: HashMap<&str, &str> = HashMap::new();
    for (m, c) in labels {
        rep.entry(c.as_str()).or_insert(m.as_str());
    }
    ClusterAssignment(
        labels
            .iter()
            .map(|(m, c)| (m.clone(), rep[c.as_str()].to_string()))
            .collect(),
    )
}

#[derive(Serialize, Deserialize)]
struct ClusterRecord {
    mention_id: String,
    cluster_id: String,
}

pub fn write_clusters<W: Write>(assignment: &ClusterAssignment, mut out: W) -> std::io::Result<()> {
    for (m, c) in &assignment.0 {
        let rec = ClusterRecord {
            mention_id: m.clone(),
            cluster_id: c.clone(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_clusters(assignment: &ClusterAssignment, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_clusters(assignment, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_clusters(path: &Path) -> Result<ClusterAssignment> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let text = line.map_err(|e| Error::io(path, e))?;
        if text.trim().is_empty() {
            continue;
        }
        let rec: ClusterRecord = serde_json::from_str(&text)
            .map_err(|e| Error::malformed(i + 1, "<record>", e.to_string()))?;
        if map.insert(rec.mention_id.clone(), rec.cluster_id).is_some() {
            return Err(Error::DuplicateMentionId(rec.mention_id));
        }
    }
    Ok(ClusterAssignment(map))
}

/// Writes a one-document CoNLL file with one line per mention, readable by
/// the usual reference coreference scorers. Cluster numbers follow cluster id
/// order.
pub fn write_conll<W: Write>(assignment: &ClusterAssignment, doc_name: &str, mut out: W) -> std::io::Result<()> {
    let numbers: BTreeMap<&str, usize> = assignment
        .0
        .values()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    writeln!(out, "#begin document ({doc_name}); part 000")?;
    for (i, (m, c)) in assignment.0.iter().enumerate() {
        writeln!(out, "{doc_name}\t0\t{i}\t{m}\t({})", numbers[c.as_str()])?;
    }
    writeln!(out, "#end document")
}

/// Reads files produced by [`write_conll`]: the fourth column names the
/// mention and the last holds a single `(n)` cluster tag.
pub fn read_conll<R: BufRead>(reader: R) -> Result<ClusterAssignment> {
    let mut map = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(|e| Error::io("<conll>", e))?;
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = trimmed.split_whitespace().collect();
        if cols.len() < 5 {
            return Err(Error::malformed(line_no, "<row>", "expected at least 5 columns"));
        }
        let tag = cols[cols.len() - 1];
        let cluster = tag
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .filter(|t| !t.is_empty())
            .ok_or_else(|| Error::malformed(line_no, "cluster", format!("expected `(n)`, got `{tag}`")))?;
        let mention = cols[3].to_string();
        if map.insert(mention.clone(), cluster.to_string()).is_some() {
            return Err(Error::DuplicateMentionId(mention));
        }
    }
    Ok(ClusterAssignment(map))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(nodes: &[&str], edges: &[(&str, &str)]) -> CorefGraph {
        CorefGraph::new(
            nodes.iter().map(|s| s.to_string()),
            edges.iter().map(|(a, b)| MentionPair::new(*a, *b)),
        )
        .unwrap()
    }

    #[test]
    fn path_and_isolate() {
        let a = connected_components(&graph(&["a", "b", "c", "d"], &[("a", "b"), ("b", "c")]));
        assert_eq!(a.get("c"), Some("a"));
        assert_eq!(a.get("d"), Some("d"));
        assert_eq!(a.num_clusters(), 2);
    }

    #[test]
    fn no_edges_all_singletons() {
        let a = connected_components(&graph(&["a", "b", "c", "d", "e"], &[]));
        assert_eq!(a.num_clusters(), 5);
    }

    #[test]
    fn rejects_edges_to_unknown_nodes() {
        let g = CorefGraph::new(vec!["a".to_string()], vec![MentionPair::new("a", "b")]);
        assert!(matches!(g, Err(Error::DanglingEdge(..))));
    }

    #[test]
    fn cluster_ids_are_smallest_members() {
        let a = connected_components(&graph(&["z", "m", "q"], &[("z", "q"), ("q", "m")]));
        assert!(a.as_map().values().all(|c| c == "m"));
        let gold: GoldClusterMap = [("x", "g1"), ("b", "g1"), ("c", "g2")]
            .iter()
            .map(|(m, c)| (m.to_string(), c.to_string()))
            .collect();
        let canon = canonical_assignment(&gold);
        assert_eq!(canon.get("x"), Some("b"));
        assert_eq!(canon.get("c"), Some("c"));
    }

    #[test]
    fn conll_round_trip_preserves_partition() {
        let a = connected_components(&graph(&["a", "b", "c", "d"], &[("a", "c")]));
        let mut buf = Vec::new();
        write_conll(&a, "doc", &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("#begin document (doc); part 000\n"));
        assert!(text.contains("doc\t0\t2\tc\t(0)\n"));
        let back = read_conll(buf.as_slice()).unwrap();
        assert_eq!(back.to_partition(), a.to_partition());
        assert!(read_conll("doc 0 0 a 1\n".as_bytes()).is_err());
    }

    #[test]
    fn union_find_basics() {
        let mut uf = UnionFind::new(4);
        assert!(uf.union(0, 1));
        assert!(!uf.union(1, 0));
        assert!(uf.union(2, 3));
        assert_ne!(uf.find(0), uf.find(2));
        uf.union(1, 3);
        assert_eq!(uf.find(0), uf.find(2));
    }
}
