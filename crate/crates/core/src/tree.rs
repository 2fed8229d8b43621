//! Encoding trees: hierarchical partitions of a graph's node set.
//!
//! Every tree node carries its member set together with two cached sums the
//! entropy formulas consume: its volume (sum of member degrees) and its cut
//! (weight of edges leaving the member set). Nodes live in an arena; a merged
//! node is retired and a fresh node takes its place, so ids are never reused.

use crate::error::{Error, Result};
use crate::graph::{NodeId, WeightedGraph};
use crate::partition::Partition;
use crate::scalar::Scalar;

/// Index of a node inside an [`EncodingTree`].
pub type TreeNodeId = usize;

/// The root `λ`, whose member set is the whole graph.
pub const ROOT: TreeNodeId = 0;

#[derive(Debug, Clone)]
struct TreeNode<S> {
    parent: Option<TreeNodeId>,
    children: Vec<TreeNodeId>,
    members: Vec<NodeId>,
    volume: S,
    cut: S,
    live: bool,
}

#[derive(Debug, Clone)]
pub struct EncodingTree<S> {
    nodes: Vec<TreeNode<S>>,
    /// Deepest singleton tree node holding each graph node.
    leaf_of: Vec<Option<TreeNodeId>>,
}

impl<S: Scalar> EncodingTree<S> {
    /// A tree holding only the root.
    pub fn with_root(graph: &WeightedGraph<S>) -> Self {
        let n = graph.node_count();
        let mut tree = EncodingTree {
            nodes: vec![TreeNode {
                parent: None,
                children: Vec::new(),
                members: (0..n).collect(),
                volume: graph.volume(),
                cut: S::zero(),
                live: true,
            }],
            leaf_of: vec![None; n],
        };
        if n == 1 {
            tree.leaf_of[0] = Some(ROOT);
        }
        tree
    }

    /// Attaches a child with member set `members` under `parent`, computing its caches.
    ///
    /// Member sets are checked against the graph's node range and against the
    /// parent's member set; sibling disjointness and coverage are checked by
    /// [`EncodingTree::validate`].
    pub fn push_child(
        &mut self,
        graph: &WeightedGraph<S>,
        parent: TreeNodeId,
        members: Vec<NodeId>,
    ) -> Result<TreeNodeId> {
        self.check_live(parent)?;
        if members.is_empty() {
            return Err(Error::Tree("tree node with an empty member set".into()));
        }
        let mut sorted = members.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != members.len() {
            return Err(Error::Tree("member set lists a node twice".into()));
        }
        if let Some(&bad) = sorted.last().filter(|&&v| v >= graph.node_count()) {
            return Err(Error::Tree(format!("node {bad} is not in the graph")));
        }
        if parent != ROOT {
            let mut parent_members = self.nodes[parent].members.clone();
            parent_members.sort_unstable();
            if let Some(v) = sorted.iter().find(|v| parent_members.binary_search(v).is_err()) {
                return Err(Error::Tree(format!(
                    "node {v} is not a member of parent tree node {parent}"
                )));
            }
        }
        let id = self.nodes.len();
        if let [v] = members[..] {
            self.leaf_of[v] = Some(id);
        }
        self.nodes.push(TreeNode {
            parent: Some(parent),
            children: Vec::new(),
            volume: graph.volume_of(&sorted),
            cut: graph.cut_of_sorted(&sorted),
            members,
            live: true,
        });
        self.nodes[parent].children.push(id);
        Ok(id)
    }

    fn check_live(&self, id: TreeNodeId) -> Result<()> {
        match self.nodes.get(id) {
            Some(node) if node.live => Ok(()),
            _ => Err(Error::Tree(format!("tree node {id} does not exist"))),
        }
    }

    /// Number of graph nodes the tree encodes.
    pub fn graph_node_count(&self) -> usize {
        self.leaf_of.len()
    }

    /// Ids of all live tree nodes, root first.
    pub fn node_ids(&self) -> impl Iterator<Item = TreeNodeId> + '_ {
        (0..self.nodes.len()).filter(|&id| self.nodes[id].live)
    }

    pub fn contains(&self, id: TreeNodeId) -> bool {
        self.nodes.get(id).is_some_and(|n| n.live)
    }

    pub fn parent(&self, id: TreeNodeId) -> Option<TreeNodeId> {
        self.nodes[id].parent
    }

    pub fn children(&self, id: TreeNodeId) -> &[TreeNodeId] {
        &self.nodes[id].children
    }

    /// Member set `T_α`, in insertion order.
    pub fn members(&self, id: TreeNodeId) -> &[NodeId] {
        &self.nodes[id].members
    }

    /// Cached `vol(α)`.
    pub fn volume(&self, id: TreeNodeId) -> S {
        self.nodes[id].volume
    }

    /// Cached `g_α`.
    pub fn cut(&self, id: TreeNodeId) -> S {
        self.nodes[id].cut
    }

    /// `h(α)`: zero for leaves, one more than the tallest child otherwise.
    pub fn height_of(&self, id: TreeNodeId) -> usize {
        self.nodes[id]
            .children
            .iter()
            .map(|&c| self.height_of(c) + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn height(&self) -> usize {
        self.height_of(ROOT)
    }

    /// Tree node that is the parent of `v`'s leaf, i.e. its cluster in a two-level tree.
    pub fn cluster_of(&self, v: NodeId) -> Option<TreeNodeId> {
        self.leaf_of[v].and_then(|leaf| self.nodes[leaf].parent)
    }

    /// Member sets of the root's children, in child order; a two-level tree's partition.
    pub fn top_level_clusters(&self) -> Vec<Vec<NodeId>> {
        self.nodes[ROOT]
            .children
            .iter()
            .map(|&c| {
                let mut members = self.nodes[c].members.clone();
                members.sort_unstable();
                members
            })
            .collect()
    }

    pub fn partition(&self) -> Result<Partition> {
        Partition::new(self.graph_node_count(), self.top_level_clusters())
    }

    /// True if every non-root internal node hangs off the root and every leaf off such a node.
    pub fn is_two_level(&self) -> bool {
        self.nodes[ROOT].children.iter().all(|&c| {
            let node = &self.nodes[c];
            !node.children.is_empty()
                && node
                    .children
                    .iter()
                    .all(|&leaf| self.nodes[leaf].children.is_empty())
        })
    }

    /// Checks the encoding-tree axioms and recomputes every cache from `graph`.
    ///
    /// Cached sums may differ from recomputation by floating rounding; `tolerance`
    /// is relative to the graph volume.
    pub fn validate(&self, graph: &WeightedGraph<S>, tolerance: S) -> Result<()> {
        if graph.node_count() != self.graph_node_count() {
            return Err(Error::Tree(format!(
                "tree encodes {} nodes but the graph has {}",
                self.graph_node_count(),
                graph.node_count()
            )));
        }
        let slack = tolerance * graph.volume().max(S::one());
        for id in self.node_ids() {
            let node = &self.nodes[id];
            let mut members = node.members.clone();
            members.sort_unstable();
            if id == ROOT && members != (0..graph.node_count()).collect::<Vec<_>>() {
                return Err(Error::Tree("root does not hold every graph node".into()));
            }
            if node.children.is_empty() {
                if members.len() != 1 && !(id == ROOT && graph.node_count() == 0) {
                    return Err(Error::Tree(format!(
                        "leaf {id} holds {} nodes instead of one",
                        members.len()
                    )));
                }
            } else {
                let mut union: Vec<NodeId> = node
                    .children
                    .iter()
                    .flat_map(|&c| self.nodes[c].members.iter().copied())
                    .collect();
                union.sort_unstable();
                if union != members {
                    return Err(Error::Tree(format!(
                        "children of tree node {id} do not partition its members"
                    )));
                }
                let child_volume: S = node.children.iter().map(|&c| self.nodes[c].volume).sum();
                if (child_volume - node.volume).abs() > slack {
                    return Err(Error::Tree(format!(
                        "children volumes of tree node {id} sum to {child_volume}, not {}",
                        node.volume
                    )));
                }
            }
            let volume = graph.volume_of(&members);
            let cut = graph.cut_of_sorted(&members);
            if (volume - node.volume).abs() > slack || (cut - node.cut).abs() > slack {
                return Err(Error::Tree(format!(
                    "tree node {id} caches vol={} g={} but the graph gives vol={volume} g={cut}",
                    node.volume, node.cut
                )));
            }
        }
        Ok(())
    }

    fn check_mergeable(&self, a: TreeNodeId, b: TreeNodeId) -> Result<()> {
        if a == b {
            return Err(Error::Tree(format!("cannot merge tree node {a} with itself")));
        }
        for id in [a, b] {
            self.check_live(id)?;
            if id == ROOT || self.nodes[id].parent != Some(ROOT) {
                return Err(Error::Tree(format!(
                    "tree node {id} is not a child of the root"
                )));
            }
        }
        Ok(())
    }

    /// Weight of edges joining the member sets of two top-level nodes.
    ///
    /// Scans the adjacency of the smaller cluster only.
    pub fn inter_weight(
        &self,
        graph: &WeightedGraph<S>,
        a: TreeNodeId,
        b: TreeNodeId,
    ) -> Result<S> {
        self.check_mergeable(a, b)?;
        Ok(self.inter_weight_unchecked(graph, a, b))
    }

    fn inter_weight_unchecked(&self, graph: &WeightedGraph<S>, a: TreeNodeId, b: TreeNodeId) -> S {
        let (small, other) = if self.nodes[a].members.len() <= self.nodes[b].members.len() {
            (a, b)
        } else {
            (b, a)
        };
        let mut inter = S::zero();
        for &u in &self.nodes[small].members {
            for &(v, w) in graph.neighbors(u) {
                if self.cluster_of(v) == Some(other) {
                    inter = inter + w;
                }
            }
        }
        inter
    }

    /// MERGE: retires top-level nodes `a` and `b` and adds a new child of the
    /// root that adopts all of their children. Returns the new node's id.
    ///
    /// The new node takes the earlier of the two positions among the root's
    /// children, so cluster order stays first-seen.
    pub fn merge(
        &mut self,
        graph: &WeightedGraph<S>,
        a: TreeNodeId,
        b: TreeNodeId,
    ) -> Result<TreeNodeId> {
        self.check_mergeable(a, b)?;
        if graph.node_count() != self.graph_node_count() {
            return Err(Error::Tree("graph does not match the tree".into()));
        }
        let inter = self.inter_weight_unchecked(graph, a, b);
        let id = self.nodes.len();

        let mut first = std::mem::take(&mut self.nodes[a]);
        let mut second = std::mem::take(&mut self.nodes[b]);
        let volume = first.volume + second.volume;
        let cut = (first.cut + second.cut - (inter + inter)).max(S::zero());
        let mut children = std::mem::take(&mut first.children);
        children.append(&mut second.children);
        let mut members = std::mem::take(&mut first.members);
        members.append(&mut second.members);
        for &child in &children {
            self.nodes[child].parent = Some(id);
        }
        self.nodes.push(TreeNode {
            parent: Some(ROOT),
            children,
            members,
            volume,
            cut,
            live: true,
        });

        let root_children = &mut self.nodes[ROOT].children;
        let pos_a = root_children.iter().position(|&c| c == a);
        let pos_b = root_children.iter().position(|&c| c == b);
        let (Some(pos_a), Some(pos_b)) = (pos_a, pos_b) else {
            return Err(Error::Invariant(format!(
                "tree nodes {a} and {b} missing from the root's child list"
            )));
        };
        let (keep, drop) = (pos_a.min(pos_b), pos_a.max(pos_b));
        root_children[keep] = id;
        root_children.remove(drop);
        Ok(id)
    }
}

impl<S: Scalar> Default for TreeNode<S> {
    fn default() -> Self {
        TreeNode {
            parent: None,
            children: Vec::new(),
            members: Vec::new(),
            volume: S::zero(),
            cut: S::zero(),
            live: false,
        }
    }
}

/// Two-level tree: the root, one child per cluster, one leaf per graph node.
pub fn two_level_tree<S: Scalar>(
    graph: &WeightedGraph<S>,
    partition: &Partition,
) -> Result<EncodingTree<S>> {
    if partition.universe() != graph.node_count() {
        return Err(Error::Partition(format!(
            "partition covers {} nodes but the graph has {}",
            partition.universe(),
            graph.node_count()
        )));
    }
    let mut tree = EncodingTree::with_root(graph);
    for cluster in partition.clusters() {
        let alpha = tree.push_child(graph, ROOT, cluster.clone())?;
        for &v in cluster {
            tree.push_child(graph, alpha, vec![v])?;
        }
    }
    Ok(tree)
}
