use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::codec::Seed;
use crate::error::{Error, Result};
use crate::sim::EmitterSet;

/// Whether the axial tolerance takes part in matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchMode {
    /// Both tolerances apply and the cost is the 3D distance.
    #[default]
    Volumetric,
    /// Only the lateral tolerance applies and the cost is the lateral distance.
    Lateral,
}

impl std::str::FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "3d" => Ok(MatchMode::Volumetric),
            "lateral" => Ok(MatchMode::Lateral),
            other => Err(Error::InvalidConfig(format!("unknown match mode `{other}`"))),
        }
    }
}

impl MatchMode {
    pub fn name(self) -> &'static str {
        match self {
            MatchMode::Volumetric => "3d",
            MatchMode::Lateral => "lateral",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchTolerance {
    pub lateral: f64,
    pub axial: f64,
    pub mode: MatchMode,
}

impl Default for MatchTolerance {
    fn default() -> Self {
        Self {
            lateral: 250.0,
            axial: 500.0,
            mode: MatchMode::Volumetric,
        }
    }
}

impl MatchTolerance {
    pub fn validate(&self) -> Result<()> {
        if !(self.lateral > 0.0 && self.lateral.is_finite()) || !(self.axial > 0.0 && self.axial.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "match tolerances must be > 0, got {} / {}",
                self.lateral, self.axial
            )));
        }
        Ok(())
    }

    /// Assignment cost of a displacement, or `None` when it is outside tolerance.
    pub fn cost(&self, dx: f64, dy: f64, dz: f64) -> Option<f64> {
        let lat2 = dx * dx + dy * dy;
        if lat2 > self.lateral * self.lateral {
            return None;
        }
        match self.mode {
            MatchMode::Volumetric if dz.abs() > self.axial => None,
            MatchMode::Volumetric => Some((lat2 + dz * dz).sqrt()),
            MatchMode::Lateral => Some(lat2.sqrt()),
        }
    }

    fn max_cost(&self) -> f64 {
        match self.mode {
            MatchMode::Volumetric => self.lateral.hypot(self.axial),
            MatchMode::Lateral => self.lateral,
        }
    }
}

/// A matched ground-truth/prediction pair. Displacements are `pred - gt` in nm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    pub gt_id: u64,
    pub pred_index: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl MatchPair {
    pub fn lateral_sq(&self) -> f64 {
        self.dx * self.dx + self.dy * self.dy
    }

    pub fn distance_3d(&self) -> f64 {
        (self.lateral_sq() + self.dz * self.dz).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// Sorted by ground-truth order.
    pub pairs: Vec<MatchPair>,
    pub n_tp: usize,
    pub n_fp: usize,
    pub n_fn: usize,
    pub tol_lateral: f64,
    pub tol_axial: f64,
    /// Sum of the assignment costs of all pairs.
    pub total_cost: f64,
}

/// Optimal one-to-one assignment between ground truth and predictions.
///
/// Among all matchings that use only in-tolerance pairs, picks one with the
/// most pairs and, among those, the smallest total cost. Solved as a sparse
/// rectangular assignment in which every ground-truth emitter also owns a
/// private "unmatched" slot whose cost exceeds any achievable matched total,
/// using successive shortest augmenting paths with Dijkstra and potentials.
/// Ground-truth rows are processed in order and heap ties break on the
/// prediction index, so equal-cost alternatives resolve deterministically.
pub fn match_localizations(gt: &EmitterSet, pred: &[Seed], tol: &MatchTolerance) -> Matching {
    let n = gt.emitters.len();
    let m = pred.len();
    let grid = Buckets::new(pred, tol.lateral);

    let mut edges: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for e in &gt.emitters {
        let mut row = Vec::new();
        grid.for_each_near(e.x, e.y, |j| {
            let p = &pred[j];
            if let Some(c) = tol.cost(p.x - e.x, p.y - e.y, p.z - e.z) {
                row.push((j, c));
            }
        });
        row.sort_by_key(|&(j, _)| j);
        edges.push(row);
    }

    let unmatched_cost = (n as f64 + 1.0) * tol.max_cost() + 1.0;
    let assignment = solve(&edges, m, unmatched_cost);

    let mut pairs = Vec::new();
    let mut total_cost = 0.0;
    for (i, slot) in assignment.iter().enumerate() {
        if let Some((j, c)) = *slot {
            let (e, p) = (&gt.emitters[i], &pred[j]);
            pairs.push(MatchPair {
                gt_id: e.id,
                pred_index: j,
                dx: p.x - e.x,
                dy: p.y - e.y,
                dz: p.z - e.z,
            });
            total_cost += c;
        }
    }
    let n_tp = pairs.len();
    Matching {
        pairs,
        n_tp,
        n_fp: m - n_tp,
        n_fn: n - n_tp,
        tol_lateral: tol.lateral,
        tol_axial: tol.axial,
        total_cost,
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    right: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, right)
        other.dist.total_cmp(&self.dist).then(other.right.cmp(&self.right))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-augmenting-path state for the sparse assignment.
struct Solver<'a> {
    edges: &'a [Vec<(usize, f64)>],
    m: usize,
    dummy_cost: f64,
    u: Vec<f64>,
    v: Vec<f64>,
    match_left: Vec<Option<usize>>,
    match_right: Vec<Option<usize>>,
    dist: Vec<f64>,
    prev: Vec<usize>,
    done: Vec<bool>,
    touched: Vec<usize>,
    settled: Vec<usize>,
    heap: BinaryHeap<HeapItem>,
}

impl<'a> Solver<'a> {
    fn new(edges: &'a [Vec<(usize, f64)>], m: usize, dummy_cost: f64) -> Self {
        let n = edges.len();
        let n_right = m + n;
        Self {
            edges,
            m,
            dummy_cost,
            u: vec![0.0; n],
            v: vec![0.0; n_right],
            match_left: vec![None; n],
            match_right: vec![None; n_right],
            dist: vec![f64::INFINITY; n_right],
            prev: vec![usize::MAX; n_right],
            done: vec![false; n_right],
            touched: Vec::new(),
            settled: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn relax(&mut self, i: usize, base: f64) {
        let dummy = std::iter::once((self.m + i, self.dummy_cost));
        for (j, c) in self.edges[i].iter().copied().chain(dummy) {
            if self.done[j] {
                continue;
            }
            // Rounding can push a reduced cost a hair below zero.
            let nd = base + (c - self.u[i] - self.v[j]).max(0.0);
            if nd < self.dist[j] {
                if self.dist[j].is_infinite() {
                    self.touched.push(j);
                }
                self.dist[j] = nd;
                self.prev[j] = i;
                self.heap.push(HeapItem { dist: nd, right: j });
            }
        }
    }

    fn augment(&mut self, s: usize) {
        self.heap.clear();
        self.relax(s, 0.0);
        let (sink, total) = loop {
            let HeapItem { dist: d, right: j } = self.heap.pop().expect("dummy slot keeps every row augmentable");
            if self.done[j] || d > self.dist[j] {
                continue;
            }
            self.done[j] = true;
            self.settled.push(j);
            match self.match_right[j] {
                None => break (j, d),
                Some(i) => self.relax(i, d),
            }
        };

        // Keeps reduced costs non-negative and makes the new path tight.
        self.u[s] += total;
        for &j in &self.settled {
            if j == sink {
                continue;
            }
            let slack = total - self.dist[j];
            self.v[j] -= slack;
            if let Some(i) = self.match_right[j] {
                self.u[i] += slack;
            }
        }

        let mut j = sink;
        loop {
            let i = self.prev[j];
            let next = self.match_left[i];
            self.match_left[i] = Some(j);
            self.match_right[j] = Some(i);
            match next {
                Some(jn) => j = jn,
                None => break,
            }
        }

        for &j in &self.touched {
            self.dist[j] = f64::INFINITY;
            self.prev[j] = usize::MAX;
            self.done[j] = false;
        }
        self.touched.clear();
        self.settled.clear();
    }
}

/// Left vertex `i` may use any `(j, cost)` in `edges[i]` or its own dummy slot
/// `m + i` at `dummy_cost`. Returns each left vertex's real partner, if any.
fn solve(edges: &[Vec<(usize, f64)>], m: usize, dummy_cost: f64) -> Vec<Option<(usize, f64)>> {
    let mut solver = Solver::new(edges, m, dummy_cost);
    for s in 0..edges.len() {
        solver.augment(s);
    }
    solver
        .match_left
        .iter()
        .enumerate()
        .map(|(i, slot)| {
            slot.filter(|&j| j < m).map(|j| {
                let &(_, c) = edges[i].iter().find(|&&(jj, _)| jj == j).expect("matched along an edge");
                (j, c)
            })
        })
        .collect()
}

/// Uniform grid over prediction positions with cell size equal to the lateral tolerance.
struct Buckets {
    cell: f64,
    x0: f64,
    y0: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<usize>>,
}

impl Buckets {
    fn new(pred: &[Seed], cell: f64) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pred {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        if pred.is_empty() {
            return Self {
                cell,
                x0: 0.0,
                y0: 0.0,
                cols: 0,
                rows: 0,
                cells: Vec::new(),
            };
        }
        // Never finer than the tolerance; coarser when the spread is huge.
        let cell = cell.max((x1 - x0) / 4096.0).max((y1 - y0) / 4096.0);
        let cols = ((x1 - x0) / cell) as usize + 1;
        let rows = ((y1 - y0) / cell) as usize + 1;
        let mut grid = Self {
            cell,
            x0,
            y0,
            cols,
            rows,
            cells: vec![Vec::new(); cols * rows],
        };
        for (j, p) in pred.iter().enumerate() {
            let (c, r) = grid.index(p.x, p.y);
            grid.cells[r * cols + c].push(j);
        }
        grid
    }

    fn index(&self, x: f64, y: f64) -> (usize, usize) {
        let c = (((x - self.x0) / self.cell).floor().max(0.0) as usize).min(self.cols - 1);
        let r = (((y - self.y0) / self.cell).floor().max(0.0) as usize).min(self.rows - 1);
        (c, r)
    }

    fn for_each_near(&self, x: f64, y: f64, mut f: impl FnMut(usize)) {
        if self.cells.is_empty() || !x.is_finite() || !y.is_finite() {
            return;
        }
        // Cells are clamped at the edges, so probe a range in continuous cell units.
        let fc = (x - self.x0) / self.cell;
        let fr = (y - self.y0) / self.cell;
        let c_lo = (fc - 1.0).floor().max(0.0) as usize;
        let r_lo = (fr - 1.0).floor().max(0.0) as usize;
        let c_hi = ((fc + 1.0).floor().max(0.0) as usize).min(self.cols - 1);
        let r_hi = ((fr + 1.0).floor().max(0.0) as usize).min(self.rows - 1);
        if c_lo > c_hi || r_lo > r_hi {
            return;
        }
        for r in r_lo..=r_hi {
            for c in c_lo..=c_hi {
                for &j in &self.cells[r * self.cols + c] {
                    f(j);
                }
            }
        }
    }
}
