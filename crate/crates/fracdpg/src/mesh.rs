//! 1D partitions of I = (0,1): uniform construction, Doerfler marking and
//! bisection refinement with a quasi-uniformity closure.
//!
//! Adjacent elements always satisfy `diam(T)/diam(T') <= 2`. The marking
//! routine selects a minimal-cardinality set carrying a theta-fraction of the
//! squared error indicators; `refine` bisects the marked elements and then
//! keeps bisecting any element more than twice as long as a neighbor until
//! the ratio invariant is restored.

use crate::{FracDpgError, Result};

/// Relative slack for the neighbor-ratio checks; element lengths are dyadic
/// fractions of the initial lengths up to roundoff in the midpoints.
const RATIO_SLACK: f64 = 1e-9;

/// An ordered partition of (0,1) into open intervals.
///
/// Element `i` is `(nodes[i], nodes[i+1])`; `generations[i]` counts how many
/// bisections produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
    generations: Vec<u32>,
}

impl Mesh {
    /// Uniform partition into `n` equal elements.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(FracDpgError::invalid("n_elements", "must be >= 1"));
        }
        let nodes = (0..=n).map(|i| i as f64 / n as f64).collect();
        Self::from_nodes_and_generations(nodes, vec![0; n])
    }

    /// Mesh from an explicit node list; generations start at zero.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        let n = nodes.len().saturating_sub(1);
        Self::from_nodes_and_generations(nodes, vec![0; n])
    }

    pub fn from_nodes_and_generations(nodes: Vec<f64>, generations: Vec<u32>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(FracDpgError::invalid("nodes", "need at least two nodes"));
        }
        if generations.len() + 1 != nodes.len() {
            return Err(FracDpgError::DimensionMismatch(format!(
                "{} nodes but {} generation entries",
                nodes.len(),
                generations.len()
            )));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(FracDpgError::invalid("nodes", "must span [0, 1]"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FracDpgError::invalid("nodes", "must be strictly increasing"));
        }
        let mesh = Mesh { nodes, generations };
        if mesh.max_neighbor_ratio() > 2.0 * (1.0 + RATIO_SLACK) {
            return Err(FracDpgError::invalid(
                "nodes",
                format!(
                    "adjacent element ratio {} exceeds 2",
                    mesh.max_neighbor_ratio()
                ),
            ));
        }
        Ok(mesh)
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Endpoints `(a, b)` of element `i`.
    pub fn element(&self, i: usize) -> (f64, f64) {
        (self.nodes[i], self.nodes[i + 1])
    }

    pub fn length(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    pub fn generation(&self, i: usize) -> u32 {
        self.generations[i]
    }

    pub fn min_length(&self) -> f64 {
        (0..self.n_elements())
            .map(|i| self.length(i))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest length ratio over adjacent element pairs.
    pub fn max_neighbor_ratio(&self) -> f64 {
        let mut worst: f64 = 1.0;
        for i in 1..self.n_elements() {
            let (a, b) = (self.length(i - 1), self.length(i));
            worst = worst.max(a / b).max(b / a);
        }
        worst
    }

    /// Index of the element containing `x`; nodes belong to the element on
    /// their left (except x = 0).
    pub fn find_element(&self, x: f64) -> usize {
        debug_assert!((0.0..=1.0).contains(&x));
        // first index with nodes[idx] >= x
        let idx = self.nodes.partition_point(|&v| v < x);
        idx.saturating_sub(1).min(self.n_elements() - 1)
    }

    /// Mirror image under x -> 1-x (element order reversed).
    pub fn reflect(&self) -> Mesh {
        let mut nodes: Vec<f64> = self.nodes.iter().rev().map(|&x| 1.0 - x).collect();
        // endpoints must stay exact
        nodes[0] = 0.0;
        *nodes.last_mut().unwrap() = 1.0;
        let generations = self.generations.iter().rev().copied().collect();
        Mesh { nodes, generations }
    }
}

/// Element indices selected for refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedSet {
    indices: Vec<usize>,
    /// All indicators were zero; nothing left to refine.
    pub converged: bool,
}

impl MarkedSet {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }
}

/// Doerfler marking: the smallest set M with
/// `theta * sum est(T)^2 <= sum_{T in M} est(T)^2`.
///
/// Ties between equal indicators are broken by the lower element index, so
/// runs are reproducible. All-zero indicators yield an empty set flagged as
/// converged. Elements with zero indicator are never marked.
pub fn doerfler_mark(squared_indicators: &[f64], theta: f64) -> Result<MarkedSet> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(FracDpgError::invalid("theta", "must lie in (0, 1]"));
    }
    if squared_indicators.is_empty() {
        return Err(FracDpgError::invalid("squared_indicators", "empty"));
    }
    if squared_indicators.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(FracDpgError::invalid(
            "squared_indicators",
            "must be finite and nonnegative",
        ));
    }

    let mut order: Vec<usize> = (0..squared_indicators.len()).collect();
    order.sort_by(|&a, &b| {
        squared_indicators[b]
            .partial_cmp(&squared_indicators[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    // Total accumulated in the same (descending) order as the prefix sums, so
    // the marking inequality holds exactly in floating point as well.
    let total: f64 = order.iter().map(|&i| squared_indicators[i]).sum();
    if total == 0.0 {
        return Ok(MarkedSet {
            indices: Vec::new(),
            converged: true,
        });
    }

    let target = theta * total;
    let mut cum = 0.0;
    let mut indices = Vec::new();
    for &i in &order {
        if cum >= target || squared_indicators[i] == 0.0 {
            break;
        }
        cum += squared_indicators[i];
        indices.push(i);
    }
    indices.sort_unstable();
    Ok(MarkedSet {
        indices,
        converged: false,
    })
}

/// Bisect every marked element, then restore the neighbor-ratio invariant by
/// repeatedly bisecting any element more than twice as long as a neighbor.
pub fn refine(mesh: &Mesh, marked: &MarkedSet) -> Result<Mesh> {
    let n = mesh.n_elements();
    if marked.indices().iter().any(|&i| i >= n) {
        return Err(FracDpgError::invalid("marked", "element index out of range"));
    }

    let mut nodes = mesh.nodes.clone();
    let mut gens = mesh.generations.clone();
    bisect_elements(&mut nodes, &mut gens, marked.indices());

    // Closure: bisecting can at most double the local ratio, so the loop
    // terminates once every oversized element has been split.
    loop {
        let mut violators = Vec::new();
        for i in 0..gens.len() {
            let len = nodes[i + 1] - nodes[i];
            let too_big = |other: f64| len > 2.0 * other * (1.0 + RATIO_SLACK);
            let left = i > 0 && too_big(nodes[i] - nodes[i - 1]);
            let right = i + 1 < gens.len() && too_big(nodes[i + 2] - nodes[i + 1]);
            if left || right {
                violators.push(i);
            }
        }
        if violators.is_empty() {
            break;
        }
        bisect_elements(&mut nodes, &mut gens, &violators);
    }

    Mesh::from_nodes_and_generations(nodes, gens)
}

/// Replace each listed element by its two halves. `which` must be sorted.
fn bisect_elements(nodes: &mut Vec<f64>, gens: &mut Vec<u32>, which: &[usize]) {
    if which.is_empty() {
        return;
    }
    let mut new_nodes = Vec::with_capacity(nodes.len() + which.len());
    let mut new_gens = Vec::with_capacity(gens.len() + which.len());
    let mut w = which.iter().peekable();
    for i in 0..gens.len() {
        new_nodes.push(nodes[i]);
        if w.peek() == Some(&&i) {
            w.next();
            new_nodes.push(0.5 * (nodes[i] + nodes[i + 1]));
            new_gens.push(gens[i] + 1);
            new_gens.push(gens[i] + 1);
        } else {
            new_gens.push(gens[i]);
        }
    }
    new_nodes.push(*nodes.last().unwrap());
    *nodes = new_nodes;
    *gens = new_gens;
}
