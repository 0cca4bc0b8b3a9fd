//! Cell-graph outer approximations on uniform grids.
//!
//! A grid splits a root rectangle (real 2D, or real 4D standing for `C²`)
//! into `2^depth` cells per axis. Vertices of a graph are pairs
//! `(cell, state)`: the state lets one graph follow a symbolic word through a
//! sequence of boxes, and plain dynamics use the single state 0. An edge
//! `(i, s) → (j, t)` exists when the interval image of cell `i` meets cell
//! `j` and `t` is a successor of `s`.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::ComplexRect;
use crate::crossed::CheckStatus;
use crate::geometry::Membership;
use crate::henon::{escape_radius, henon_image, ParamBox, PhaseRect};
use crate::interval::Interval;
use crate::params::{BoxSystem, Family};

/// Default cap on graph vertices.
pub const DEFAULT_BUDGET: usize = 1 << 21;
pub const DEFAULT_DEPTH_2D: u32 = 10;
pub const DEFAULT_DEPTH_4D: u32 = 5;
const MAX_AXIS_DEPTH: u32 = 26;
const START_DEPTH: u32 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CellError {
    #[error("cell budget exceeded: {needed} > {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("inadmissible word: transition {0:?} is not allowed")]
    InadmissibleWord((usize, usize)),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

/// Uniform grid on a root rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellGrid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    depth: Vec<u32>,
}

impl CellGrid {
    pub fn new(root: &[Interval], depth: &[u32]) -> Result<Self, CellError> {
        if !(root.len() == 2 || root.len() == 4) || depth.len() != root.len() {
            return Err(CellError::InvalidGrid(format!(
                "need 2 or 4 axes with one depth each, got {} and {}",
                root.len(),
                depth.len()
            )));
        }
        for (k, r) in root.iter().enumerate() {
            if r.is_empty() || !r.lo().is_finite() || !r.hi().is_finite() || r.lo() >= r.hi() {
                return Err(CellError::InvalidGrid(format!("axis {k} is degenerate: {r:?}")));
            }
            if depth[k] > MAX_AXIS_DEPTH {
                return Err(CellError::InvalidGrid(format!("axis {k} depth {} too large", depth[k])));
            }
        }
        let g = CellGrid {
            lo: root.iter().map(|r| r.lo()).collect(),
            hi: root.iter().map(|r| r.hi()).collect(),
            depth: depth.to_vec(),
        };
        for k in 0..g.dim() {
            if g.edge(k, g.side(k) - 1) >= g.hi[k] {
                return Err(CellError::InvalidGrid(format!("axis {k} too narrow for its depth")));
            }
        }
        Ok(g)
    }

    pub fn uniform(root: &[Interval], depth: u32) -> Result<Self, CellError> {
        CellGrid::new(root, &vec![depth; root.len()])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn depth(&self) -> &[u32] {
        &self.depth
    }

    pub fn root(&self) -> Vec<Interval> {
        self.lo.iter().zip(&self.hi).map(|(&l, &h)| Interval::new(l, h)).collect()
    }

    pub fn side(&self, k: usize) -> u64 {
        1u64 << self.depth[k]
    }

    pub fn n_cells(&self) -> Option<usize> {
        let mut n: usize = 1;
        for k in 0..self.dim() {
            n = n.checked_mul(usize::try_from(self.side(k)).ok()?)?;
        }
        Some(n)
    }

    fn step(&self, k: usize) -> f64 {
        (self.hi[k] - self.lo[k]) / self.side(k) as f64
    }

    /// Left edge of cell `c` on axis `k`. Halving the step keeps every edge
    /// of the coarse grid an edge of the fine one.
    fn edge(&self, k: usize, c: u64) -> f64 {
        if c >= self.side(k) {
            self.hi[k]
        } else {
            self.lo[k] + c as f64 * self.step(k)
        }
    }

    /// Per-axis coordinates; axis 0 varies fastest.
    pub fn coords(&self, idx: usize) -> Vec<u64> {
        let mut rest = idx as u64;
        (0..self.dim())
            .map(|k| {
                let c = rest & (self.side(k) - 1);
                rest >>= self.depth[k];
                c
            })
            .collect()
    }

    pub fn index(&self, c: &[u64]) -> usize {
        let mut idx = 0u64;
        for k in (0..self.dim()).rev() {
            idx = (idx << self.depth[k]) | c[k];
        }
        idx as usize
    }

    pub fn cell(&self, idx: usize) -> Vec<Interval> {
        self.coords(idx)
            .iter()
            .enumerate()
            .map(|(k, &c)| Interval::new(self.edge(k, c), self.edge(k, c + 1)))
            .collect()
    }

    pub fn cell_rect(&self, idx: usize) -> PhaseRect {
        axes_to_phase(&self.cell(idx))
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.step(k)).product()
    }

    /// Cells on axis `k` meeting `iv`, or `None` when it misses the root.
    pub fn axis_range(&self, k: usize, iv: Interval) -> Option<(u64, u64)> {
        if iv.is_empty() || iv.hi() < self.lo[k] || iv.lo() > self.hi[k] {
            return None;
        }
        let n = self.side(k);
        let h = self.step(k);
        let guess = |x: f64| -> u64 {
            let t = ((x - self.lo[k]) / h).floor();
            if t.is_nan() || t < 0.0 {
                0
            } else {
                (t as u64).min(n - 1)
            }
        };
        let mut a = guess(iv.lo());
        while a > 0 && self.edge(k, a) > iv.lo() {
            a -= 1;
        }
        while a + 1 < n && self.edge(k, a + 1) < iv.lo() {
            a += 1;
        }
        let mut b = guess(iv.hi()).max(a);
        while b + 1 < n && self.edge(k, b + 1) <= iv.hi() {
            b += 1;
        }
        while b > a && self.edge(k, b) > iv.hi() {
            b -= 1;
        }
        Some((a, b))
    }

    pub fn range(&self, b: &[Interval]) -> Option<Vec<(u64, u64)>> {
        (0..self.dim()).map(|k| self.axis_range(k, b[k])).collect()
    }

    pub fn contains_box(&self, b: &[Interval]) -> bool {
        (0..self.dim()).all(|k| b[k].lo() >= self.lo[k] && b[k].hi() <= self.hi[k])
    }

    /// Index of some cell containing the point.
    pub fn locate(&self, pt: &[f64]) -> Option<usize> {
        let r = self.range(&pt.iter().map(|&x| Interval::point(x)).collect::<Vec<_>>())?;
        Some(self.index(&r.iter().map(|&(a, _)| a).collect::<Vec<_>>()))
    }

    /// Every cell meeting a box.
    pub fn cells_meeting(&self, b: &[Interval]) -> Vec<usize> {
        match self.range(b) {
            Some(r) => self.enumerate(&r),
            None => Vec::new(),
        }
    }

    fn enumerate(&self, r: &[(u64, u64)]) -> Vec<usize> {
        let mut out = Vec::new();
        let mut c: Vec<u64> = r.iter().map(|&(a, _)| a).collect();
        loop {
            out.push(self.index(&c));
            let mut k = 0;
            loop {
                if k == c.len() {
                    return out;
                }
                if c[k] < r[k].1 {
                    c[k] += 1;
                    break;
                }
                c[k] = r[k].0;
                k += 1;
            }
        }
    }

    /// The grid one level deeper on every axis.
    pub fn refine(&self) -> Result<CellGrid, CellError> {
        let depth: Vec<u32> = self.depth.iter().map(|d| d + 1).collect();
        CellGrid::new(&self.root(), &depth)
    }

    /// Children of `idx` in `self.refine()`.
    pub fn children(&self, idx: usize) -> Vec<usize> {
        let fine = CellGrid {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            depth: self.depth.iter().map(|d| d + 1).collect(),
        };
        let base: Vec<u64> = self.coords(idx).iter().map(|c| 2 * c).collect();
        let r: Vec<(u64, u64)> = base.iter().map(|&c| (c, c + 1)).collect();
        fine.enumerate(&r)
    }

    /// The cell of `coarse` containing cell `idx` of `self`.
    pub fn coarsen_index(&self, idx: usize, coarse: &CellGrid) -> usize {
        let c: Vec<u64> = self
            .coords(idx)
            .iter()
            .enumerate()
            .map(|(k, &c)| c >> (self.depth[k] - coarse.depth[k]))
            .collect();
        coarse.index(&c)
    }
}

/// `(Re x, Re y)` or `(Re x, Im x, Re y, Im y)` as a phase rectangle.
pub fn axes_to_phase(c: &[Interval]) -> PhaseRect {
    if c.len() == 2 {
        PhaseRect::real(c[0], c[1])
    } else {
        PhaseRect::new(ComplexRect::new(c[0], c[1]), ComplexRect::new(c[2], c[3]))
    }
}

pub fn phase_to_axes(z: &PhaseRect, dim: usize) -> Vec<Interval> {
    if dim == 2 {
        vec![z.x.re, z.y.re]
    } else {
        vec![z.x.re, z.x.im, z.y.re, z.y.im]
    }
}

/// Directed graph on retained `(cell, state)` pairs.
#[derive(Debug, Clone)]
pub struct CellGraph {
    pub grid: CellGrid,
    /// Sorted and free of duplicates.
    pub vertices: Vec<(usize, u16)>,
    pub edges: Vec<Vec<u32>>,
    /// The image of the cell is not contained in the root rectangle.
    pub exits: Vec<bool>,
}

impl CellGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn position(&self, cell: usize, state: u16) -> Option<usize> {
        self.vertices.binary_search(&(cell, state)).ok()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }
}

fn check_plane(p: &ParamBox, grid: &CellGrid) -> Result<(), CellError> {
    if grid.dim() == 2 && !p.is_real() {
        return Err(CellError::InvalidGrid(
            "a real-plane grid needs a real parameter".into(),
        ));
    }
    Ok(())
}

/// Interval image of a cell, in grid axes.
pub fn cell_image(p: &ParamBox, grid: &CellGrid, idx: usize) -> Vec<Interval> {
    phase_to_axes(&henon_image(p, &grid.cell_rect(idx)), grid.dim())
}

/// Graph over the given cells (all cells when `retained` is `None`).
pub fn build_graph(
    p: &ParamBox,
    grid: &CellGrid,
    retained: Option<&[usize]>,
    budget: usize,
) -> Result<CellGraph, CellError> {
    let vertices: Vec<(usize, u16)> = match retained {
        Some(cells) => cells.iter().map(|&c| (c, 0)).collect(),
        None => {
            let n = grid
                .n_cells()
                .filter(|&n| n <= budget)
                .ok_or(CellError::BudgetExceeded {
                    needed: grid.n_cells().unwrap_or(usize::MAX),
                    budget,
                })?;
            (0..n).map(|c| (c, 0)).collect()
        }
    };
    build_product_graph(p, grid, vertices, &[vec![0]], budget)
}

/// Graph on `(cell, state)` pairs; `succ[s]` lists the states allowed after `s`.
pub fn build_product_graph(
    p: &ParamBox,
    grid: &CellGrid,
    mut vertices: Vec<(usize, u16)>,
    succ: &[Vec<u16>],
    budget: usize,
) -> Result<CellGraph, CellError> {
    check_plane(p, grid)?;
    vertices.sort_unstable();
    vertices.dedup();
    if vertices.len() > budget {
        return Err(CellError::BudgetExceeded { needed: vertices.len(), budget });
    }
    let cells: Vec<usize> = {
        let mut c: Vec<usize> = vertices.iter().map(|v| v.0).collect();
        c.dedup();
        c
    };
    let lookup = |cell: usize, state: u16| vertices.binary_search(&(cell, state)).ok();
    let per_cell: Vec<(Vec<usize>, bool)> = cells
        .par_iter()
        .map(|&c| {
            let img = cell_image(p, grid, c);
            let exit = !grid.contains_box(&img);
            let targets = match grid.range(&img) {
                None => Vec::new(),
                Some(r) => {
                    let count = r
                        .iter()
                        .fold(1u128, |n, &(a, b)| n.saturating_mul((b - a + 1) as u128));
                    if count <= 4 * cells.len() as u128 {
                        let mut t: Vec<usize> = grid
                            .enumerate(&r)
                            .into_iter()
                            .filter(|&j| cells.binary_search(&j).is_ok())
                            .collect();
                        t.sort_unstable();
                        t
                    } else {
                        cells
                            .iter()
                            .copied()
                            .filter(|&j| {
                                grid.coords(j)
                                    .iter()
                                    .zip(&r)
                                    .all(|(&c, &(a, b))| a <= c && c <= b)
                            })
                            .collect()
                    }
                }
            };
            (targets, exit)
        })
        .collect();
    let mut edges = Vec::with_capacity(vertices.len());
    let mut exits = Vec::with_capacity(vertices.len());
    let mut total = 0usize;
    for &(c, s) in &vertices {
        let k = cells.binary_search(&c).expect("cell listed");
        let (targets, exit) = &per_cell[k];
        let mut e = Vec::new();
        for &j in targets {
            for &t in &succ[s as usize] {
                if let Some(pos) = lookup(j, t) {
                    e.push(pos as u32);
                }
            }
        }
        total += e.len();
        if total > budget.saturating_mul(64) {
            return Err(CellError::BudgetExceeded { needed: total, budget: budget * 64 });
        }
        edges.push(e);
        exits.push(*exit);
    }
    Ok(CellGraph { grid: grid.clone(), vertices, edges, exits })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    /// A cycle is reachable from the vertex.
    ForwardInfinite,
    /// The vertex is reachable from a cycle.
    BackwardInfinite,
    Biinfinite,
}

/// Vertices lying on a nontrivial strongly connected component or a self-loop.
fn cyclic_vertices(adj: &[Vec<u32>]) -> Vec<bool> {
    let n = adj.len();
    const UNSEEN: u32 = u32::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut cyclic = vec![false; n];
    let mut next = 0u32;
    let mut call: Vec<(u32, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root as u32, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root as u32);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let v = v as usize;
            if *pos < adj[v].len() {
                let w = adj[v][*pos] as usize;
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w as u32);
                    on_stack[w] = true;
                    call.push((w as u32, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                let parent = parent as usize;
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut members = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack") as usize;
                    on_stack[w] = false;
                    members.push(w);
                    if w == v {
                        break;
                    }
                }
                let nontrivial =
                    members.len() > 1 || adj[v].iter().any(|&w| w as usize == v);
                if nontrivial {
                    for w in members {
                        cyclic[w] = true;
                    }
                }
            }
        }
    }
    cyclic
}

fn closure(adj: &[Vec<u32>], seed: &[bool]) -> Vec<bool> {
    let mut seen = seed.to_vec();
    let mut queue: Vec<usize> = (0..adj.len()).filter(|&v| seed[v]).collect();
    while let Some(v) = queue.pop() {
        for &w in &adj[v] {
            let w = w as usize;
            if !seen[w] {
                seen[w] = true;
                queue.push(w);
            }
        }
    }
    seen
}

fn reverse(adj: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut rev = vec![Vec::new(); adj.len()];
    for (v, out) in adj.iter().enumerate() {
        for &w in out {
            rev[w as usize].push(v as u32);
        }
    }
    rev
}

/// Path-set membership for an arbitrary adjacency list.
pub fn infinite_path_vertices(adj: &[Vec<u32>], kind: PathKind) -> Vec<bool> {
    let cyclic = cyclic_vertices(adj);
    match kind {
        PathKind::ForwardInfinite => closure(&reverse(adj), &cyclic),
        PathKind::BackwardInfinite => closure(adj, &cyclic),
        PathKind::Biinfinite => {
            let f = closure(&reverse(adj), &cyclic);
            let b = closure(adj, &cyclic);
            f.iter().zip(&b).map(|(x, y)| *x && *y).collect()
        }
    }
}

/// Path-set membership per vertex of `g`.
pub fn path_sets(g: &CellGraph, kind: PathKind) -> Vec<bool> {
    infinite_path_vertices(&g.edges, kind)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnclosureTag {
    Julia,
    StablePiece(String),
    UnstablePiece(String),
    Special(String),
}

impl fmt::Display for EnclosureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnclosureTag::Julia => write!(f, "julia"),
            EnclosureTag::StablePiece(w) => write!(f, "stable {w}"),
            EnclosureTag::UnstablePiece(w) => write!(f, "unstable {w}"),
            EnclosureTag::Special(w) => write!(f, "special {w}"),
        }
    }
}

impl std::str::FromStr for EnclosureTag {
    type Err = CellError;
    fn from_str(s: &str) -> Result<Self, CellError> {
        let s = s.trim();
        let (head, rest) = s.split_once(' ').unwrap_or((s, ""));
        let rest = rest.trim().to_string();
        match head {
            "julia" => Ok(EnclosureTag::Julia),
            "stable" => Ok(EnclosureTag::StablePiece(rest)),
            "unstable" => Ok(EnclosureTag::UnstablePiece(rest)),
            "special" => Ok(EnclosureTag::Special(rest)),
            _ => Err(CellError::Parse(format!("unknown tag {s:?}"))),
        }
    }
}

/// A union of grid cells covering some invariant object.
#[derive(Debug, Clone, PartialEq)]
pub struct Enclosure {
    pub grid: CellGrid,
    /// Sorted cell indices.
    pub cells: Vec<usize>,
    pub tag: EnclosureTag,
}

const FORMAT_HEADER: &str = "henon-enclosure 1";

impl Enclosure {
    pub fn new(grid: CellGrid, mut cells: Vec<usize>, tag: EnclosureTag) -> Self {
        cells.sort_unstable();
        cells.dedup();
        Enclosure { grid, cells, tag }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn volume(&self) -> f64 {
        self.cells.len() as f64 * self.grid.cell_volume()
    }

    pub fn rects(&self) -> Vec<Vec<Interval>> {
        self.cells.iter().map(|&c| self.grid.cell(c)).collect()
    }

    pub fn contains_cell(&self, idx: usize) -> bool {
        self.cells.binary_search(&idx).is_ok()
    }

    /// Whether some enclosure cell contains the point.
    pub fn contains_point(&self, pt: &[f64]) -> bool {
        let b: Vec<Interval> = pt.iter().map(|&x| Interval::point(x)).collect();
        self.grid
            .cells_meeting(&b)
            .into_iter()
            .any(|c| self.contains_cell(c))
    }

    /// Cell indices of the coarser grid `coarse` that hold enclosure cells.
    pub fn coarsen(&self, coarse: &CellGrid) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .cells
            .iter()
            .map(|&c| self.grid.coarsen_index(c, coarse))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Per-axis hull of the cells.
    pub fn hull(&self) -> Option<Vec<Interval>> {
        let mut it = self.cells.iter();
        let first = self.grid.cell(*it.next()?);
        Some(it.fold(first, |acc, &c| {
            acc.iter().zip(self.grid.cell(c)).map(|(a, b)| a.hull(&b)).collect()
        }))
    }

    /// Whether some cell of `self` equals or shares a boundary point with a
    /// cell of `other`. Both must live on the same grid.
    pub fn touches(&self, other: &Enclosure) -> Result<bool, CellError> {
        if self.grid != other.grid {
            return Err(CellError::InvalidGrid("enclosures on different grids".into()));
        }
        let g = &self.grid;
        Ok(self.cells.iter().any(|&c| {
            let co = g.coords(c);
            let r: Vec<(u64, u64)> = co
                .iter()
                .enumerate()
                .map(|(k, &x)| (x.saturating_sub(1), (x + 1).min(g.side(k) - 1)))
                .collect();
            g.enumerate(&r).into_iter().any(|j| other.contains_cell(j))
        }))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(FORMAT_HEADER);
        s.push('\n');
        s.push_str(&format!("tag {}\n", self.tag));
        s.push_str(&format!("dim {}\n", self.grid.dim()));
        let d: Vec<String> = self.grid.depth.iter().map(u32::to_string).collect();
        s.push_str(&format!("depth {}\n", d.join(" ")));
        for k in 0..self.grid.dim() {
            s.push_str(&format!("axis {} {} {}\n", k, self.grid.lo[k], self.grid.hi[k]));
        }
        s.push_str(&format!("cells {}\n", self.cells.len()));
        for &c in &self.cells {
            let cell = self.grid.cell(c);
            let b: Vec<String> = cell.iter().map(|i| format!("{} {}", i.lo(), i.hi())).collect();
            s.push_str(&format!("{} {}\n", c, b.join(" ")));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Enclosure, CellError> {
        let bad = |m: &str| CellError::Parse(m.to_string());
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some(FORMAT_HEADER) {
            return Err(bad("missing header"));
        }
        let mut field = |name: &str| -> Result<String, CellError> {
            let l = lines.next().ok_or_else(|| bad("truncated"))?;
            l.strip_prefix(name)
                .map(|r| r.trim().to_string())
                .ok_or_else(|| bad(&format!("expected {name}")))
        };
        let tag: EnclosureTag = field("tag")?.parse()?;
        let dim: usize = field("dim")?.parse().map_err(|_| bad("dim"))?;
        let depth: Vec<u32> = field("depth")?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("depth")))
            .collect::<Result<_, _>>()?;
        let mut root = Vec::with_capacity(dim);
        for _ in 0..dim {
            let f: Vec<f64> = field("axis")?
                .split_whitespace()
                .skip(1)
                .map(|t| t.parse().map_err(|_| bad("axis")))
                .collect::<Result<_, _>>()?;
            if f.len() != 2 {
                return Err(bad("axis"));
            }
            root.push(Interval::new(f[0], f[1]));
        }
        let grid = CellGrid::new(&root, &depth)?;
        let n: usize = field("cells")?.parse().map_err(|_| bad("cells"))?;
        let mut cells = Vec::with_capacity(n);
        for _ in 0..n {
            let l = lines.next().ok_or_else(|| bad("truncated cell list"))?;
            let idx: usize = l
                .split_whitespace()
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad("cell index"))?;
            if grid.n_cells().is_some_and(|m| idx >= m) {
                return Err(bad("cell index out of range"));
            }
            cells.push(idx);
        }
        Ok(Enclosure::new(grid, cells, tag))
    }
}

/// Refines `vertices` level by level, keeping at each level the vertices
/// selected by `kind`. `admit` filters children by their state.
fn subdivide_paths(
    p: &ParamBox,
    grid: CellGrid,
    vertices: Vec<(usize, u16)>,
    succ: &[Vec<u16>],
    kind: PathKind,
    target_depth: u32,
    budget: usize,
    admit: &(dyn Fn(&CellGrid, usize, u16) -> bool + Sync),
) -> Result<(CellGraph, Vec<bool>), CellError> {
    let mut grid = grid;
    let mut vertices: Vec<(usize, u16)> = vertices
        .into_par_iter()
        .filter(|&(c, s)| admit(&grid, c, s))
        .collect();
    loop {
        let g = build_product_graph(p, &grid, vertices, succ, budget)?;
        let keep = path_sets(&g, kind);
        if grid.depth.iter().all(|&d| d >= target_depth) {
            return Ok((g, keep));
        }
        let fine = grid.refine()?;
        let kept: Vec<(usize, u16)> = g
            .vertices
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(&v, _)| v)
            .collect();
        vertices = kept
            .par_iter()
            .flat_map_iter(|&(c, s)| {
                grid.children(c)
                    .into_iter()
                    .filter(|&ch| admit(&fine, ch, s))
                    .map(move |ch| (ch, s))
                    .collect::<Vec<_>>()
            })
            .collect();
        grid = fine;
    }
}

fn start_grid(root: &[Interval], depth: u32) -> Result<(CellGrid, Vec<(usize, u16)>), CellError> {
    let grid = CellGrid::uniform(root, depth.min(START_DEPTH))?;
    let n = grid.n_cells().expect("small start grid");
    Ok((grid, (0..n).map(|c| (c, 0)).collect()))
}

/// Bi-infinite path set over `root` at the given depth.
pub fn enclose_julia_in(
    p: &ParamBox,
    root: &[Interval],
    depth: u32,
    budget: usize,
) -> Result<Enclosure, CellError> {
    let (grid, vertices) = start_grid(root, depth)?;
    let (g, keep) = subdivide_paths(
        p,
        grid,
        vertices,
        &[vec![0]],
        PathKind::Biinfinite,
        depth,
        budget,
        &|_, _, _| true,
    )?;
    let cells = g
        .vertices
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(v, _)| v.0)
        .collect();
    Ok(Enclosure::new(g.grid, cells, EnclosureTag::Julia))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Plane {
    /// `(Re x, Re y)`; only meaningful for real parameters.
    Real,
    /// `(Re x, Im x, Re y, Im y)`.
    Complex,
}

fn widen(iv: Interval) -> Interval {
    let pad = 1e-9 * (1.0 + iv.mag());
    Interval::new(iv.lo() - pad, iv.hi() + pad)
}

/// Root rectangle: the hull of the boxes when a system is given, otherwise
/// the escape square `|x|, |y| ≤ R`.
pub fn julia_root(
    p: &ParamBox,
    sys: Option<&BoxSystem>,
    plane: Plane,
) -> Result<Vec<Interval>, CellError> {
    let dim = if plane == Plane::Real { 2 } else { 4 };
    if let Some(sys) = sys {
        let mut hull: Option<Vec<Interval>> = None;
        for b in &sys.boxes {
            let axes = match plane {
                Plane::Real => {
                    let (x, y) = b
                        .real_bounds()
                        .map_err(|e| CellError::InvalidGrid(e.to_string()))?;
                    vec![x, y]
                }
                Plane::Complex => phase_to_axes(
                    &b.phase_bounds().map_err(|e| CellError::InvalidGrid(e.to_string()))?,
                    4,
                ),
            };
            hull = Some(match hull {
                None => axes,
                Some(h) => h.iter().zip(&axes).map(|(a, b)| a.hull(b)).collect(),
            });
        }
        if let Some(h) = hull {
            return Ok(h.into_iter().map(widen).collect());
        }
    }
    let r = escape_radius(p.a.abs(), p.b.abs()).hi();
    Ok(vec![Interval::new(-r, r); dim])
}

/// Julia enclosure with the default depth for the plane implied by `p`.
pub fn enclose_julia(
    p: &ParamBox,
    sys: Option<&BoxSystem>,
    depth: Option<u32>,
) -> Result<Enclosure, CellError> {
    let plane = if p.is_real() { Plane::Real } else { Plane::Complex };
    let depth = depth.unwrap_or(match plane {
        Plane::Real => DEFAULT_DEPTH_2D,
        Plane::Complex => DEFAULT_DEPTH_4D,
    });
    let root = julia_root(p, sys, plane)?;
    enclose_julia_in(p, &root, depth, DEFAULT_BUDGET)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldSide {
    Stable,
    Unstable,
}

/// A symbol sequence with a repeated block: `31(0)` for stable pieces,
/// `(0)23` or `(43)412` for unstable ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Word {
    pub side: ManifoldSide,
    pub cycle: Vec<usize>,
    pub finite: Vec<usize>,
}

impl Word {
    pub fn stable(finite: &[usize], cycle: &[usize]) -> Word {
        Word { side: ManifoldSide::Stable, cycle: cycle.to_vec(), finite: finite.to_vec() }
    }

    pub fn unstable(cycle: &[usize], finite: &[usize]) -> Word {
        Word { side: ManifoldSide::Unstable, cycle: cycle.to_vec(), finite: finite.to_vec() }
    }

    pub fn parse(s: &str) -> Result<Word, CellError> {
        let bad = || CellError::Parse(format!("bad word {s:?}"));
        let digits = |t: &str| -> Result<Vec<usize>, CellError> {
            t.chars()
                .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(bad))
                .collect()
        };
        let open = s.find('(').ok_or_else(bad)?;
        let close = s.find(')').ok_or_else(bad)?;
        if close < open || close == open + 1 {
            return Err(bad());
        }
        let cycle = digits(&s[open + 1..close])?;
        if open == 0 {
            Ok(Word::unstable(&cycle, &digits(&s[close + 1..])?))
        } else if close + 1 == s.len() {
            Ok(Word::stable(&digits(&s[..open])?, &cycle))
        } else {
            Err(bad())
        }
    }

    /// Symbols in time order, with the cycle written once plus the wrap.
    fn pairs(&self) -> Vec<(usize, usize)> {
        let c = &self.cycle;
        let mut seq: Vec<usize> = Vec::new();
        match self.side {
            ManifoldSide::Stable => {
                seq.extend(&self.finite);
                seq.extend(c);
                seq.push(c[0]);
            }
            ManifoldSide::Unstable => {
                seq.extend(c);
                seq.push(c[0]);
                let mut tail = c.clone();
                tail.extend(&self.finite);
                let mut pairs: Vec<(usize, usize)> = seq.windows(2).map(|w| (w[0], w[1])).collect();
                pairs.extend(tail.windows(2).map(|w| (w[0], w[1])));
                return pairs;
            }
        }
        seq.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn check(&self, sys: &BoxSystem) -> Result<(), CellError> {
        if self.cycle.is_empty() {
            return Err(CellError::Parse("empty repeated block".into()));
        }
        let n = sys.boxes.len();
        if let Some(&s) = self.cycle.iter().chain(&self.finite).find(|&&s| s >= n) {
            return Err(CellError::Parse(format!("symbol {s} exceeds box count {n}")));
        }
        for (i, j) in self.pairs() {
            if sys.transition(i, j).is_none() {
                return Err(CellError::InadmissibleWord((i, j)));
            }
        }
        Ok(())
    }

    /// Box label of each automaton state, successor lists, the state whose
    /// cells form the piece, and the path kind selecting it.
    fn automaton(&self) -> (Vec<usize>, Vec<Vec<u16>>, u16, PathKind) {
        let l = self.cycle.len();
        let m = self.finite.len();
        let mut labels = Vec::with_capacity(l + m);
        let mut succ: Vec<Vec<u16>> = Vec::with_capacity(l + m);
        match self.side {
            ManifoldSide::Stable => {
                labels.extend(&self.finite);
                labels.extend(&self.cycle);
                for k in 0..m {
                    succ.push(vec![(k + 1) as u16]);
                }
                for j in 0..l {
                    succ.push(vec![(m + (j + 1) % l) as u16]);
                }
                (labels, succ, 0, PathKind::ForwardInfinite)
            }
            ManifoldSide::Unstable => {
                labels.extend(&self.cycle);
                labels.extend(&self.finite);
                for j in 0..l {
                    let mut s = vec![((j + 1) % l) as u16];
                    if j + 1 == l && m > 0 {
                        s.push(l as u16);
                    }
                    succ.push(s);
                }
                for k in 0..m {
                    succ.push(if k + 1 < m { vec![(l + k + 1) as u16] } else { Vec::new() });
                }
                (labels, succ, (l + m - 1) as u16, PathKind::BackwardInfinite)
            }
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |v: &[usize]| v.iter().map(usize::to_string).collect::<String>();
        match self.side {
            ManifoldSide::Stable => write!(f, "{}({})", s(&self.finite), s(&self.cycle)),
            ManifoldSide::Unstable => write!(f, "({}){}", s(&self.cycle), s(&self.finite)),
        }
    }
}

/// Real-plane hull of all boxes, slightly widened.
pub fn real_root(sys: &BoxSystem) -> Result<Vec<Interval>, CellError> {
    julia_root(&ParamBox::point(0.0, 0.0), Some(sys), Plane::Real)
}

/// Enclosure of a real invariant-manifold piece named by `word`.
pub fn enclose_manifold_piece(
    p: &ParamBox,
    sys: &BoxSystem,
    word: &Word,
    depth: u32,
) -> Result<Enclosure, CellError> {
    enclose_manifold_piece_in(p, sys, word, &real_root(sys)?, depth, DEFAULT_BUDGET)
}

pub fn enclose_manifold_piece_in(
    p: &ParamBox,
    sys: &BoxSystem,
    word: &Word,
    root: &[Interval],
    depth: u32,
    budget: usize,
) -> Result<Enclosure, CellError> {
    word.check(sys)?;
    if root.len() != 2 {
        return Err(CellError::InvalidGrid("manifold pieces live in the real plane".into()));
    }
    let (labels, succ, target, kind) = word.automaton();
    let grid = CellGrid::uniform(root, depth.min(START_DEPTH))?;
    let n = grid.n_cells().expect("small start grid");
    let vertices: Vec<(usize, u16)> = (0..n)
        .flat_map(|c| (0..labels.len() as u16).map(move |s| (c, s)))
        .collect();
    let admit = |g: &CellGrid, c: usize, s: u16| {
        sys.boxes[labels[s as usize]].membership(&g.cell_rect(c)) != Membership::Outside
    };
    let (g, keep) = subdivide_paths(p, grid, vertices, &succ, kind, depth, budget, &admit)?;
    let cells = g
        .vertices
        .iter()
        .zip(&keep)
        .filter(|(v, &k)| k && v.1 == target)
        .map(|(v, _)| v.0)
        .collect();
    let tag = match word.side {
        ManifoldSide::Stable => EnclosureTag::StablePiece(word.to_string()),
        ManifoldSide::Unstable => EnclosureTag::UnstablePiece(word.to_string()),
    };
    Ok(Enclosure::new(g.grid, cells, tag))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    A,
    B,
    BPrime,
}

/// One sub-condition of a disjointness suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    /// Every point of `K` lies in some box.
    Covered,
    /// `B_i ∩ B_j ∩ K = ∅`.
    Disjoint(usize, usize),
    /// `z ∈ ∪in \ ∪not` implies `f(z) ∉ ∪avoid`.
    Implies { within: Vec<usize>, outside: Vec<usize>, avoid: Vec<usize> },
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set = |v: &[usize]| {
            v.iter().map(|i| format!("B{i}")).collect::<Vec<_>>().join("∪")
        };
        match self {
            Condition::Covered => write!(f, "K ⊂ ∪B"),
            Condition::Disjoint(i, j) => write!(f, "B{i}∩B{j}∩K = ∅"),
            Condition::Implies { within, outside, avoid } => {
                write!(f, "z ∈ {}", set(within))?;
                if !outside.is_empty() {
                    write!(f, "\\({})", set(outside))?;
                }
                write!(f, " ⇒ f(z) ∉ {}", set(avoid))
            }
        }
    }
}

fn implies(within: &[usize], outside: &[usize], avoid: &[usize]) -> Condition {
    Condition::Implies { within: within.to_vec(), outside: outside.to_vec(), avoid: avoid.to_vec() }
}

pub fn suite_conditions(suite: Suite, family: Family) -> Vec<(String, Condition)> {
    let named = |items: Vec<(&str, Condition)>| {
        items.into_iter().map(|(n, c)| (n.to_string(), c)).collect()
    };
    match (suite, family) {
        (Suite::A, _) => vec![("A".to_string(), Condition::Covered)],
        (Suite::B, _) => named(vec![
            ("B(i)(0,1)", Condition::Disjoint(0, 1)),
            ("B(i)(0,2)", Condition::Disjoint(0, 2)),
            ("B(i)(1,3)", Condition::Disjoint(1, 3)),
            ("B(ii)", implies(&[1], &[], &[1, 2])),
            ("B(iii)", implies(&[3], &[], &[0, 3])),
            ("B(iv)", implies(&[0], &[3], &[1])),
            ("B(v)", implies(&[3], &[0, 2], &[2])),
            ("B(vi)", implies(&[2], &[1, 3], &[0, 1])),
            ("B(vii)", implies(&[1], &[2], &[3])),
        ]),
        (Suite::BPrime, _) => named(vec![
            ("B'(i)(0,1)", Condition::Disjoint(0, 1)),
            ("B'(i)(0,3)", Condition::Disjoint(0, 3)),
            ("B'(i)(0,4)", Condition::Disjoint(0, 4)),
            ("B'(i)(1,2)", Condition::Disjoint(1, 2)),
            ("B'(i)(1,4)", Condition::Disjoint(1, 4)),
            ("B'(i)(2,3)", Condition::Disjoint(2, 3)),
            ("B'(ii)", implies(&[0, 1], &[], &[1, 3])),
            ("B'(iii)", implies(&[2, 3], &[], &[0, 1])),
            ("B'(iv)", implies(&[4], &[], &[0, 2])),
            ("B'(v)", implies(&[0], &[2], &[4])),
            ("B'(vi)", implies(&[1], &[3], &[4])),
            ("B'(vii)", implies(&[2], &[0, 4], &[2, 3])),
            ("B'(viii)", implies(&[3], &[1, 4], &[2, 3])),
            ("B'(ix)", implies(&[4], &[2, 3], &[4])),
        ]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub id: String,
    pub condition: String,
    pub status: CheckStatus,
    pub diagnostic: Option<String>,
}

fn bisect_all(c: &[Interval]) -> Vec<Vec<Interval>> {
    let mut out = vec![Vec::with_capacity(c.len())];
    for iv in c {
        let (l, r) = iv.bisect();
        out = out
            .into_iter()
            .flat_map(|v| {
                let mut a = v.clone();
                a.push(l);
                let mut b = v;
                b.push(r);
                [a, b]
            })
            .collect();
    }
    out
}

/// `Some(true)` when the condition holds on the whole piece, `Some(false)`
/// when the piece must be split.
fn condition_holds(p: &ParamBox, sys: &BoxSystem, cond: &Condition, c: &[Interval]) -> bool {
    let z = axes_to_phase(c);
    let m = |i: usize| sys.boxes[i].membership(&z);
    match cond {
        Condition::Covered => (0..sys.boxes.len()).any(|i| m(i) == Membership::Inside),
        Condition::Disjoint(i, j) => m(*i) == Membership::Outside || m(*j) == Membership::Outside,
        Condition::Implies { within, outside, avoid } => {
            if within.iter().all(|&i| m(i) == Membership::Outside)
                || outside.iter().any(|&i| m(i) == Membership::Inside)
            {
                return true;
            }
            let w = henon_image(p, &z);
            avoid
                .iter()
                .all(|&i| sys.boxes[i].membership(&w) == Membership::Outside)
        }
    }
}

/// Checks one condition on every cell of the Julia enclosure, splitting
/// undecided cells up to `split_depth` times.
pub fn check_condition(
    p: &ParamBox,
    sys: &BoxSystem,
    cond: &Condition,
    julia: &Enclosure,
    split_depth: u32,
) -> (CheckStatus, Option<String>) {
    let failures: Vec<usize> = julia
        .cells
        .par_iter()
        .copied()
        .filter(|&c| {
            let mut stack = vec![(julia.grid.cell(c), 0u32)];
            while let Some((piece, d)) = stack.pop() {
                if condition_holds(p, sys, cond, &piece) {
                    continue;
                }
                if d >= split_depth {
                    return true;
                }
                stack.extend(bisect_all(&piece).into_iter().map(|q| (q, d + 1)));
            }
            false
        })
        .collect();
    if failures.is_empty() {
        (CheckStatus::Verified, None)
    } else {
        (
            CheckStatus::Unknown,
            Some(format!(
                "{} of {} cells undecided, first cell {:?}",
                failures.len(),
                julia.len(),
                julia.grid.cell(failures[0])
            )),
        )
    }
}

pub const DEFAULT_SPLIT_DEPTH: u32 = 4;

/// Runs a suite against a Julia enclosure. A real-plane enclosure only
/// speaks for `K ∩ R²`; callers establish `K ⊂ R²` separately.
pub fn check_disjointness_suite(
    p: &ParamBox,
    sys: &BoxSystem,
    suite: Suite,
    julia: &Enclosure,
) -> Vec<ConditionVerdict> {
    suite_conditions(suite, sys.family)
        .into_iter()
        .map(|(id, cond)| {
            let (status, diagnostic) = if julia.is_empty() {
                (CheckStatus::Verified, Some("empty Julia enclosure; holds vacuously".into()))
            } else if matches!((suite, sys.family), (Suite::B, Family::Minus) | (Suite::BPrime, Family::Plus)) {
                (CheckStatus::Unknown, Some("suite does not match the box family".into()))
            } else {
                check_condition(p, sys, &cond, julia, DEFAULT_SPLIT_DEPTH)
            };
            ConditionVerdict { id, condition: cond.to_string(), status, diagnostic }
        })
        .collect()
}
