//! Critical Galton-Watson trees conditioned to reach level `n`, their
//! reduced trees, and the exact harmonic measure on level `n`.
//!
//! Resistances to level `n` satisfy `R(leaf) = 0` and
//! `R(v) = 1/Σ_c 1/(1 + R(c))`. The walk from the root leaves through child
//! `c` with probability proportional to `1/(1 + R(c))`, and the same split
//! repeats inside every subtree, so harmonic measure is a product of split
//! weights along the ray. A simple random walk is kept as an oracle.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::offspring::OffspringDist;

pub const DEFAULT_NODE_CAP: usize = 1_000_000;
pub const DEFAULT_RETRY_BUDGET: u64 = 10_000_000;
pub const WALK_STEP_CAP: u64 = 1_000_000_000;

const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub parent: u32,
    pub generation: u32,
    /// Children occupy `first_child..first_child + n_children`.
    pub first_child: u32,
    pub n_children: u32,
}

/// A plane tree stored breadth first. Only generations `0..=height` are
/// generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTree {
    pub nodes: Vec<Node>,
    pub height: u32,
}

impl DiscreteTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        let n = &self.nodes[v];
        n.first_child as usize..(n.first_child + n.n_children) as usize
    }

    /// Build from per-node child counts listed breadth first.
    pub fn from_child_counts(counts: &[u32]) -> Result<Self> {
        let mut nodes = vec![Node { parent: NO_PARENT, generation: 0, first_child: 0, n_children: 0 }];
        for (i, &k) in counts.iter().enumerate() {
            if i >= nodes.len() {
                return Err(Error::Param("child counts describe a forest, not a tree".into()));
            }
            let first = nodes.len() as u32;
            let g = nodes[i].generation + 1;
            nodes[i].first_child = first;
            nodes[i].n_children = k;
            for _ in 0..k {
                nodes.push(Node { parent: i as u32, generation: g, first_child: 0, n_children: 0 });
            }
        }
        let height = nodes.iter().map(|n| n.generation).max().unwrap_or(0);
        Ok(DiscreteTree { nodes, height })
    }

    /// A path with `n` edges.
    pub fn unary_path(n: u32) -> Self {
        Self::from_child_counts(&vec![1; n as usize]).unwrap()
    }

    /// The full binary tree of height `n`.
    pub fn full_binary(n: u32) -> Self {
        Self::from_child_counts(&vec![2; (1usize << n) - 1]).unwrap()
    }

    /// A root with `k` leaf children.
    pub fn star(k: u32) -> Self {
        Self::from_child_counts(&[k]).unwrap()
    }
}

/// One accepted tree and the cost of getting it.
#[derive(Clone, Debug)]
pub struct Conditioned {
    pub tree: DiscreteTree,
    /// Attempts including the accepted one.
    pub attempts: u64,
    /// Attempts dropped for exceeding the node cap.
    pub discards: u64,
}

enum Attempt {
    Survived(DiscreteTree),
    Extinct,
    Capped,
}

fn attempt<R: Rng + ?Sized>(rho: &OffspringDist, n: u32, cap: usize, rng: &mut R) -> Attempt {
    let mut nodes = vec![Node { parent: NO_PARENT, generation: 0, first_child: 0, n_children: 0 }];
    let mut level = 0..1usize;
    for g in 1..=n {
        for v in level.clone() {
            let k = rho.sample(rng);
            if nodes.len() as u64 + k > cap as u64 {
                return Attempt::Capped;
            }
            nodes[v].first_child = nodes.len() as u32;
            nodes[v].n_children = k as u32;
            for _ in 0..k {
                nodes.push(Node { parent: v as u32, generation: g, first_child: 0, n_children: 0 });
            }
        }
        level = level.end..nodes.len();
        if level.is_empty() {
            return Attempt::Extinct;
        }
    }
    Attempt::Survived(DiscreteTree { nodes, height: n })
}

/// Rejection sampling of a `ρ`-Galton-Watson tree conditioned to have a
/// vertex at generation `n`, generated level by level and abandoned as
/// soon as a level is empty.
pub fn sample_conditioned<R: Rng + ?Sized>(rho: &OffspringDist, n: u32, cap: usize, retry_budget: u64, rng: &mut R) -> Result<Conditioned> {
    if n < 1 {
        return Err(Error::Param("conditioning level must be at least 1".into()));
    }
    let mut discards = 0;
    for attempts in 1..=retry_budget {
        match attempt(rho, n, cap, rng) {
            Attempt::Survived(tree) => return Ok(Conditioned { tree, attempts, discards }),
            Attempt::Extinct => {}
            Attempt::Capped => discards += 1,
        }
    }
    Err(Error::RetryBudget { attempts: retry_budget, discards })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedNode {
    pub parent: u32,
    pub generation: u32,
    pub first_child: u32,
    pub n_children: u32,
    /// Effective resistance from this vertex to level `n` within its subtree.
    pub resistance: f64,
    /// Share of the parent's harmonic mass routed here (1 at the root).
    pub weight: f64,
    /// Natural log of the harmonic mass of the subtree (0 at the root).
    pub log_mu: f64,
}

/// Vertices with a descendant at generation `n`, annotated for the
/// electric recursion. Stored breadth first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedTree {
    pub n: u32,
    pub nodes: Vec<ReducedNode>,
}

/// Restrict `tree` to vertices with a descendant at generation `n` and
/// annotate resistances, split weights and log harmonic masses.
pub fn reduce(tree: &DiscreteTree, n: u32) -> Result<ReducedTree> {
    let mut keep = vec![false; tree.len()];
    for (v, node) in tree.nodes.iter().enumerate().rev() {
        if node.generation == n {
            keep[v] = true;
        }
        if keep[v] && node.parent != NO_PARENT {
            keep[node.parent as usize] = true;
        }
    }
    if !keep[0] {
        return Err(Error::Param(format!("tree has no vertex at generation {n}")));
    }
    // breadth-first copy of the kept vertices; children stay contiguous
    let mut map = vec![NO_PARENT; tree.len()];
    let mut nodes = vec![ReducedNode { parent: NO_PARENT, generation: 0, first_child: 0, n_children: 0, resistance: 0.0, weight: 1.0, log_mu: 0.0 }];
    map[0] = 0;
    let mut order = vec![0usize];
    let mut k = 0;
    while k < order.len() {
        let v = order[k];
        let nv = map[v] as usize;
        if tree.nodes[v].generation < n {
            let first = nodes.len() as u32;
            let mut count = 0;
            for c in tree.children(v) {
                if keep[c] {
                    map[c] = nodes.len() as u32;
                    nodes.push(ReducedNode {
                        parent: nv as u32,
                        generation: tree.nodes[c].generation,
                        first_child: 0,
                        n_children: 0,
                        resistance: 0.0,
                        weight: 0.0,
                        log_mu: 0.0,
                    });
                    order.push(c);
                    count += 1;
                }
            }
            nodes[nv].first_child = first;
            nodes[nv].n_children = count;
        }
        k += 1;
    }
    let mut r = ReducedTree { n, nodes };
    r.annotate();
    Ok(r)
}

impl ReducedTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        let n = &self.nodes[v];
        n.first_child as usize..(n.first_child + n.n_children) as usize
    }

    fn annotate(&mut self) {
        for v in (0..self.nodes.len()).rev() {
            if self.nodes[v].n_children == 0 {
                self.nodes[v].resistance = 0.0;
            } else {
                let g: f64 = self.children(v).map(|c| 1.0 / (1.0 + self.nodes[c].resistance)).sum();
                self.nodes[v].resistance = 1.0 / g;
            }
        }
        for v in 0..self.nodes.len() {
            if self.nodes[v].n_children == 0 {
                continue;
            }
            let total: f64 = self.children(v).map(|c| 1.0 / (1.0 + self.nodes[c].resistance)).sum();
            let base = self.nodes[v].log_mu;
            for c in self.children(v) {
                let w = 1.0 / (1.0 + self.nodes[c].resistance) / total;
                self.nodes[c].weight = w;
                self.nodes[c].log_mu = base + w.ln();
            }
        }
    }

    /// Leaves at generation `n`, in arena order.
    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&v| self.nodes[v].generation == self.n)
    }

    /// `1/(1 + R(root))`: the chance that a walk from the root reaches
    /// level `n` before crossing the extra unit edge below the root.
    pub fn conductance_n(&self) -> f64 {
        1.0 / (1.0 + self.nodes[0].resistance)
    }

    /// Number of vertices at generation `m`.
    pub fn level_size(&self, m: u32) -> Result<usize> {
        if m > self.n {
            return Err(Error::Param(format!("level {m} above {}", self.n)));
        }
        Ok(self.nodes.iter().filter(|v| v.generation == m).count())
    }

    /// Shannon entropy `−Σ μ ln μ` of harmonic measure on level `n`.
    pub fn entropy(&self) -> f64 {
        self.leaves()
            .map(|v| {
                let l = self.nodes[v].log_mu;
                -l.exp() * l
            })
            .sum()
    }

    /// Descend from the root choosing children by split weight.
    pub fn harmonic_exact<R: Rng + ?Sized>(&self, rng: &mut R) -> HarmonicSample {
        let mut v = 0;
        let mut ray = Vec::with_capacity(self.n as usize);
        let mut prefix = Vec::with_capacity(self.n as usize + 1);
        prefix.push(0.0);
        while self.nodes[v].n_children > 0 {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = self.children(v).end - 1;
            for c in self.children(v) {
                acc += self.nodes[c].weight;
                if u < acc {
                    pick = c;
                    break;
                }
            }
            ray.push((pick - self.nodes[v].first_child as usize) as u32);
            v = pick;
            prefix.push(self.nodes[v].log_mu);
        }
        HarmonicSample { leaf: v, ray, log_mu: self.nodes[v].log_mu, prefix }
    }

    /// Simple random walk from the root, uniform over neighbours (only
    /// children at the root), until it first reaches generation `n`.
    pub fn srw_hit<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let mut v = 0usize;
        for _ in 0..WALK_STEP_CAP {
            let node = &self.nodes[v];
            if node.generation == self.n {
                return Ok(v);
            }
            let k = node.n_children;
            if v == 0 {
                v = node.first_child as usize + rng.gen_range(0..k) as usize;
            } else {
                let j = rng.gen_range(0..=k);
                v = if j == k { node.parent as usize } else { (node.first_child + j) as usize };
            }
        }
        Err(Error::StepCap(WALK_STEP_CAP))
    }

    /// Walk on the tree with an extra unit edge from the root to an
    /// absorbing vertex; true when level `n` is reached first.
    pub fn srw_escape<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<bool> {
        let mut v = 0usize;
        for _ in 0..WALK_STEP_CAP {
            let node = &self.nodes[v];
            if node.generation == self.n {
                return Ok(true);
            }
            let k = node.n_children;
            let j = rng.gen_range(0..=k);
            if j == k {
                if v == 0 {
                    return Ok(false);
                }
                v = node.parent as usize;
            } else {
                v = (node.first_child + j) as usize;
            }
        }
        Err(Error::StepCap(WALK_STEP_CAP))
    }

    /// `id,parent,generation,resistance` per vertex (parent empty at the root).
    pub fn dump_csv(&self) -> String {
        let mut out = String::from("id,parent,generation,resistance\n");
        for (i, v) in self.nodes.iter().enumerate() {
            let parent = if v.parent == NO_PARENT { String::new() } else { v.parent.to_string() };
            let _ = writeln!(out, "{i},{parent},{},{}", v.generation, v.resistance);
        }
        out
    }
}

/// A leaf drawn from harmonic measure together with its ray.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSample {
    pub leaf: usize,
    /// Child offsets taken at each generation.
    pub ray: Vec<u32>,
    pub log_mu: f64,
    /// `prefix[g]` is the log harmonic mass of the ray's ancestor at
    /// generation `g`.
    pub prefix: Vec<f64>,
}

impl HarmonicSample {
    /// Mass of the ball of radius `j` around the leaf: the descendants on
    /// level `n` of its ancestor at generation `n − j`.
    pub fn mu_ball(&self, j: u32) -> f64 {
        let n = self.prefix.len() - 1;
        let g = n.saturating_sub(j as usize);
        self.prefix[g].exp()
    }
}
