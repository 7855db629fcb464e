use serde::{Deserialize, Serialize};

/// Pre-order node. Rows go left iff `x[f] <= t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split { f: u32, t: f32, l: u32, r: u32 },
    Leaf { v: f64 },
}

/// A binary tree stored as a pre-order node array; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Node>", into = "Vec<Node>")]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Tree {
        Tree {
            nodes: vec![Node::Leaf { v: value }],
        }
    }

    pub fn stump(feature: usize, threshold: f32, left: f64, right: f64) -> Tree {
        Tree {
            nodes: vec![
                Node::Split {
                    f: feature as u32,
                    t: threshold,
                    l: 1,
                    r: 2,
                },
                Node::Leaf { v: left },
                Node::Leaf { v: right },
            ],
        }
    }

    /// Checks pre-order layout: every split's left child is the next node
    /// and its right child follows the whole left subtree.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Tree, String> {
        fn walk(nodes: &[Node], i: usize, depth: usize) -> Result<usize, String> {
            if depth > 1024 {
                return Err("tree too deep".into());
            }
            match nodes.get(i) {
                None => Err(format!("node {i} out of range")),
                Some(Node::Leaf { v }) if !v.is_finite() => Err(format!("leaf {i} is not finite")),
                Some(Node::Leaf { .. }) => Ok(i + 1),
                Some(Node::Split { l, r, .. }) => {
                    if *l as usize != i + 1 {
                        return Err(format!("node {i}: left child must be {}", i + 1));
                    }
                    let after_left = walk(nodes, i + 1, depth + 1)?;
                    if *r as usize != after_left {
                        return Err(format!("node {i}: right child must be {after_left}"));
                    }
                    walk(nodes, after_left, depth + 1)
                }
            }
        }
        if walk(&nodes, 0, 0)? != nodes.len() {
            return Err("unreachable trailing nodes".into());
        }
        Ok(Tree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    #[inline]
    pub fn predict_row(&self, x: &[f32]) -> f64 {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                Node::Split { f, t, l, r } => {
                    i = if x[f as usize] <= t { l } else { r } as usize;
                }
                Node::Leaf { v } => return v,
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { l, r, .. } => 1 + go(nodes, l as usize).max(go(nodes, r as usize)),
            }
        }
        go(&self.nodes, 0)
    }

    pub(crate) fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { f, .. } => Some(*f as usize),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

impl TryFrom<Vec<Node>> for Tree {
    type Error = String;

    fn try_from(nodes: Vec<Node>) -> Result<Self, String> {
        Tree::from_nodes(nodes)
    }
}

impl From<Tree> for Vec<Node> {
    fn from(t: Tree) -> Self {
        t.nodes
    }
}

/// Arena used while growing; converted to pre-order once finished.
#[derive(Debug, Clone)]
pub(crate) enum ArenaNode {
    Leaf(f64),
    Split {
        feature: usize,
        bin: usize,
        threshold: f32,
        left: usize,
        right: usize,
    },
}

pub(crate) fn arena_to_tree(arena: &[ArenaNode]) -> Tree {
    fn emit(arena: &[ArenaNode], i: usize, out: &mut Vec<Node>) {
        match arena[i] {
            ArenaNode::Leaf(v) => out.push(Node::Leaf { v }),
            ArenaNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                let at = out.len();
                out.push(Node::Split {
                    f: feature as u32,
                    t: threshold,
                    l: at as u32 + 1,
                    r: 0,
                });
                emit(arena, left, out);
                let r = out.len() as u32;
                if let Node::Split { r: slot, .. } = &mut out[at] {
                    *slot = r;
                }
                emit(arena, right, out);
            }
        }
    }
    let mut nodes = Vec::with_capacity(arena.len());
    emit(arena, 0, &mut nodes);
    Tree { nodes }
}
