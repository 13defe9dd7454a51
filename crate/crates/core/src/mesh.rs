//! Hierarchical interval meshes.
//!
//! A [`Mesh`] partitions `(a, b)` into elements `K_i = (x_{i-1}, x_i)`. Every
//! element remembers where it sits in the bisection tree rooted at one of the
//! elements of the initial mesh, so two elements are merge-eligible siblings
//! exactly when they share a root and a parent path. Meshes are immutable:
//! [`Mesh::refine`] and [`Mesh::coarsen`] return new meshes together with the
//! data needed to move nodal values across the generation change.

use std::collections::BTreeSet;

use thiserror::Error;

/// Index of an element within one mesh generation.
pub type ElementId = usize;

/// Deepest bisection level supported by the path encoding.
pub const MAX_LEVEL: u32 = 62;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid interval ({a}, {b}): need finite a < b")]
    InvalidBounds { a: f64, b: f64 },
    #[error("a mesh needs at least 2 elements, got {0}")]
    TooFewElements(usize),
    #[error("unknown element id {id} (mesh has {count} elements)")]
    UnknownElement { id: ElementId, count: usize },
    #[error("element {0} is already at the maximum refinement level")]
    MaxLevel(ElementId),
    #[error("node coordinates must be finite and strictly increasing")]
    InvalidNodes,
    #[error("diffusion coefficient must be positive, got {0}")]
    InvalidEpsilon(f64),
}

/// Position of an element in the bisection forest.
///
/// `path` holds the left/right choices taken from the root, most significant
/// choice first, using the low `level` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub root: u32,
    pub level: u32,
    pub path: u64,
}

impl Cell {
    fn root(root: u32) -> Self {
        Cell {
            root,
            level: 0,
            path: 0,
        }
    }

    fn children(self) -> (Cell, Cell) {
        let left = Cell {
            root: self.root,
            level: self.level + 1,
            path: self.path << 1,
        };
        let right = Cell {
            path: (self.path << 1) | 1,
            ..left
        };
        (left, right)
    }

    fn parent(self) -> Option<Cell> {
        (self.level > 0).then(|| Cell {
            root: self.root,
            level: self.level - 1,
            path: self.path >> 1,
        })
    }

    /// True when `self` is the left child and `right` the right child of one parent.
    fn is_left_sibling_of(self, right: Cell) -> bool {
        self.level > 0
            && self.root == right.root
            && self.level == right.level
            && self.path & 1 == 0
            && right.path == self.path | 1
    }
}

/// Where a node of a refined mesh gets its value from in the parent generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSource {
    Existing(usize),
    Midpoint(usize, usize),
}

/// Node inheritance produced by [`Mesh::refine`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMap {
    sources: Vec<NodeSource>,
}

impl NodeMap {
    pub fn sources(&self) -> &[NodeSource] {
        &self.sources
    }

    /// Moves nodal values of a P1 function onto the refined mesh; exact for P1.
    pub fn transfer(&self, values: &[f64]) -> Vec<f64> {
        self.sources
            .iter()
            .map(|s| match *s {
                NodeSource::Existing(i) => values[i],
                NodeSource::Midpoint(i, j) => 0.5 * (values[i] + values[j]),
            })
            .collect()
    }
}

/// Result of [`Mesh::coarsen`].
#[derive(Debug, Clone)]
pub struct Coarsening {
    pub mesh: Mesh,
    /// Node indices of the input mesh that no longer exist.
    pub removed_nodes: Vec<usize>,
    /// Marked elements that could not be merged (missing sibling mark, sibling
    /// absent, or level 0).
    pub ignored: Vec<ElementId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
    cells: Vec<Cell>,
}

impl Mesh {
    /// `m` equal elements on `(a, b)`, all at level 0.
    pub fn uniform(a: f64, b: f64, m: usize) -> Result<Mesh, MeshError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(MeshError::InvalidBounds { a, b });
        }
        if m < 2 {
            return Err(MeshError::TooFewElements(m));
        }
        let h = (b - a) / m as f64;
        let mut nodes: Vec<f64> = (0..=m).map(|i| a + i as f64 * h).collect();
        nodes[m] = b;
        let cells = (0..m as u32).map(Cell::root).collect();
        Ok(Mesh { nodes, cells })
    }

    /// Level-0 mesh through the given nodes.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Mesh, MeshError> {
        if nodes.len() < 3 {
            return Err(MeshError::TooFewElements(nodes.len().saturating_sub(1)));
        }
        if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MeshError::InvalidNodes);
        }
        let cells = (0..nodes.len() as u32 - 1).map(Cell::root).collect();
        Ok(Mesh { nodes, cells })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.cells.len()
    }

    /// Number of interior nodes, i.e. the dimension of the P1 space with zero trace.
    pub fn num_interior(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    pub fn element(&self, id: ElementId) -> (f64, f64) {
        (self.nodes[id], self.nodes[id + 1])
    }

    pub fn element_len(&self, id: ElementId) -> f64 {
        self.nodes[id + 1] - self.nodes[id]
    }

    pub fn level(&self, id: ElementId) -> u32 {
        self.cells[id].level
    }

    pub fn element_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.windows(2).map(|w| w[1] - w[0])
    }

    pub fn min_element_len(&self) -> f64 {
        self.element_lengths().fold(f64::INFINITY, f64::min)
    }

    /// Element containing `x`; points on a node resolve to the element on the
    /// left, except the left endpoint. Points outside are clamped.
    pub fn locate(&self, x: f64) -> ElementId {
        let last = self.num_elements() - 1;
        match self.nodes.partition_point(|&n| n < x) {
            0 => 0,
            i => (i - 1).min(last),
        }
    }

    /// True when every node of `coarse` is a node of `self`.
    pub fn is_refinement_of(&self, coarse: &Mesh) -> bool {
        if self.bounds() != coarse.bounds() {
            return false;
        }
        let mut it = self.nodes.iter();
        coarse
            .nodes
            .iter()
            .all(|&x| it.by_ref().any(|&y| y == x))
    }

    fn check_ids(&self, ids: &[ElementId]) -> Result<(), MeshError> {
        match ids.iter().find(|&&id| id >= self.num_elements()) {
            Some(&id) => Err(MeshError::UnknownElement {
                id,
                count: self.num_elements(),
            }),
            None => Ok(()),
        }
    }

    /// Bisects every marked element at its midpoint.
    pub fn refine(&self, marked: &[ElementId]) -> Result<(Mesh, NodeMap), MeshError> {
        self.check_ids(marked)?;
        let marked: BTreeSet<ElementId> = marked.iter().copied().collect();
        if let Some(&id) = marked.iter().find(|&&id| self.cells[id].level >= MAX_LEVEL) {
            return Err(MeshError::MaxLevel(id));
        }

        let mut nodes = Vec::with_capacity(self.nodes.len() + marked.len());
        let mut cells = Vec::with_capacity(self.cells.len() + marked.len());
        let mut sources = Vec::with_capacity(nodes.capacity());
        nodes.push(self.nodes[0]);
        sources.push(NodeSource::Existing(0));
        for (id, &cell) in self.cells.iter().enumerate() {
            if marked.contains(&id) {
                let (l, r) = self.element(id);
                nodes.push(0.5 * (l + r));
                sources.push(NodeSource::Midpoint(id, id + 1));
                let (left, right) = cell.children();
                cells.push(left);
                cells.push(right);
            } else {
                cells.push(cell);
            }
            nodes.push(self.nodes[id + 1]);
            sources.push(NodeSource::Existing(id + 1));
        }
        Ok((Mesh { nodes, cells }, NodeMap { sources }))
    }

    /// Merges sibling pairs whose members are both marked.
    pub fn coarsen(&self, marked: &[ElementId]) -> Result<Coarsening, MeshError> {
        self.check_ids(marked)?;
        let marked: BTreeSet<ElementId> = marked.iter().copied().collect();

        let mut nodes = Vec::with_capacity(self.nodes.len());
        let mut cells = Vec::with_capacity(self.cells.len());
        let mut removed_nodes = Vec::new();
        let mut merged = BTreeSet::new();
        nodes.push(self.nodes[0]);
        let mut id = 0;
        while id < self.cells.len() {
            let cell = self.cells[id];
            let mergeable = id + 1 < self.cells.len()
                && marked.contains(&id)
                && marked.contains(&(id + 1))
                && cell.is_left_sibling_of(self.cells[id + 1]);
            if mergeable {
                cells.push(cell.parent().expect("siblings have a parent"));
                removed_nodes.push(id + 1);
                nodes.push(self.nodes[id + 2]);
                merged.insert(id);
                merged.insert(id + 1);
                id += 2;
            } else {
                cells.push(cell);
                nodes.push(self.nodes[id + 1]);
                id += 1;
            }
        }
        let ignored = marked.difference(&merged).copied().collect();
        Ok(Coarsening {
            mesh: Mesh { nodes, cells },
            removed_nodes,
            ignored,
        })
    }

    pub fn weights(&self, eps: f64) -> Result<Weights, MeshError> {
        Weights::new(self, eps)
    }
}

/// The ε-dependent scalings of the residual indicator.
///
/// `element[i] = min(1, h_K/√ε)`; `node[j]` belongs to interior node `j + 1`
/// with `h_E` the mean length of its two neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub eps: f64,
    pub element: Vec<f64>,
    pub node: Vec<f64>,
}

impl Weights {
    pub fn new(mesh: &Mesh, eps: f64) -> Result<Weights, MeshError> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(MeshError::InvalidEpsilon(eps));
        }
        let inv_sqrt = eps.sqrt().recip();
        let element = mesh
            .element_lengths()
            .map(|h| (inv_sqrt * h).min(1.0))
            .collect();
        let lengths: Vec<f64> = mesh.element_lengths().collect();
        let node = lengths
            .windows(2)
            .map(|w| (inv_sqrt * 0.5 * (w[0] + w[1])).min(1.0))
            .collect();
        Ok(Weights { eps, element, node })
    }
}
