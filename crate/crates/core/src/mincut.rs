//! Exact global minimization of the prescribed-curvature energy with fixed
//! exterior data, via a submodular cut reduction.
//!
//! Free variables are the Ω cells; every pairwise coefficient is a kernel
//! weight (non-negative), so the energy is submodular and a minimum s-t cut
//! is an exact global minimizer. The canonical solution is the minimal
//! source side (nodes reachable from the source in the residual graph of a
//! maximum flow), which is unique and invariant under instance symmetries.
//! For declared mirror-symmetric instances the solution is additionally
//! canonicalized through the lattice of minimum cuts (union/intersection
//! with its mirror image), so reported masks are exactly symmetric even in
//! the presence of floating-point drift inside the flow solver.
//!
//! A brute-force enumerator over all 2^|Ω| configurations serves as the
//! oracle for exactness tests.

use crate::energy::{massari_energy, EnergyReport, HField};
use crate::error::{Error, Result};
use crate::exec;
use crate::field::BinaryField;
use crate::kernel::KernelTable;
use serde::{Deserialize, Serialize};

pub const BRUTE_FORCE_BOUND: usize = 24;

/// Declared symmetry of an instance: mirror across the grid midplane
/// orthogonal to `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MirrorSymmetry {
    pub axis: usize,
}

impl MirrorSymmetry {
    pub fn mirror_cell(&self, grid: &crate::grid::GridDomain, cell: usize) -> usize {
        let mut c = grid.coords(cell);
        c[self.axis] = grid.extents()[self.axis] - 1 - c[self.axis];
        grid.index(c)
    }
}

/// The cut reduction of one instance. Unary terms are kept before
/// normalization; the normalization constant is recorded so cut values and
/// energies stay directly comparable.
#[derive(Debug, Clone)]
pub struct CutProblem {
    /// Ω cells in ascending order; node k corresponds to `cells[k]`.
    pub cells: Vec<usize>,
    /// Pairwise capacities (k1 < k2 as node ids), kernel weights.
    pub pairwise: Vec<(u32, u32, f64)>,
    /// Energy paid when the node is inside (sink-side arc capacity).
    pub unary_inside: Vec<f64>,
    /// Energy paid when the node is outside (source-side arc capacity).
    pub unary_outside: Vec<f64>,
    /// Σ_k min(unary_inside, unary_outside): cut value + constant = energy.
    pub constant: f64,
}

impl CutProblem {
    /// Assemble the reduction from a datum field (phases outside Ω are the
    /// fixed exterior data; Ω phases are ignored), an H field, and a kernel.
    pub fn build(datum: &BinaryField, h: &HField, kernel: &KernelTable) -> Result<Self> {
        h.validate(datum.grid())?;
        let grid = datum.grid();
        let hh = grid.h();
        let hn = hh.powi(grid.dim() as i32);
        let cells: Vec<usize> = grid.omega_cells().to_vec();
        let mut node_of = vec![u32::MAX; grid.cell_count()];
        for (k, &c) in cells.iter().enumerate() {
            node_of[c] = k as u32;
        }
        let f_in = datum.far_field().inside_fraction();
        let tau = kernel.tail_per_cell();
        let offsets = kernel.offsets();

        // Unary terms, accumulated over x-mirror offset pairs so that
        // mirror-symmetric instances get bit-identical capacities.
        let unary: Vec<(f64, f64)> = exec::map_indexed(cells.len(), |k| {
            let i = cells[k];
            let mut u_in = h.value(i) * hn + tau * (1.0 - f_in);
            let mut u_out = tau * f_in;
            let mut idx = 0;
            while idx < offsets.len() {
                let (o1, _) = offsets[idx];
                let paired = idx + 1 < offsets.len() && {
                    let (o2, _) = offsets[idx + 1];
                    o2[0] == -o1[0] && o1[0] != 0 && o2[1] == o1[1] && o2[2] == o1[2]
                };
                let mut t_in = 0.0;
                let mut t_out = 0.0;
                let take = if paired { 2 } else { 1 };
                for step in 0..take {
                    let (off, w) = offsets[idx + step];
                    match grid.offset(i, off) {
                        Some(j) => {
                            if node_of[j] == u32::MAX {
                                // fixed grid cell: disagreement is unary
                                if datum.is_inside(j) {
                                    t_out += w;
                                } else {
                                    t_in += w;
                                }
                            }
                        }
                        None => {
                            let mut p = grid.center(i);
                            for ax in 0..3 {
                                p[ax] += off[ax] as f64 * hh;
                            }
                            if datum.far_field().phase_at(grid, p) {
                                t_out += w;
                            } else {
                                t_in += w;
                            }
                        }
                    }
                }
                u_in += t_in;
                u_out += t_out;
                idx += take;
            }
            (u_in, u_out)
        });

        let mut pairwise = Vec::new();
        for (k, &i) in cells.iter().enumerate() {
            for &(off, w) in offsets {
                if let Some(j) = grid.offset(i, off) {
                    let kj = node_of[j];
                    if kj != u32::MAX && (kj as usize) > k {
                        pairwise.push((k as u32, kj, w));
                    }
                }
            }
        }

        let mut unary_inside = Vec::with_capacity(cells.len());
        let mut unary_outside = Vec::with_capacity(cells.len());
        let mut constant = 0.0;
        for &(u_in, u_out) in &unary {
            let m = u_in.min(u_out);
            constant += m;
            unary_inside.push(u_in - m);
            unary_outside.push(u_out - m);
        }
        Ok(Self { cells, pairwise, unary_inside, unary_outside, constant })
    }

    /// Energy of a configuration (bit k of `mask` = node k inside), by direct
    /// summation of all configuration-dependent terms plus the recorded
    /// constant. Used by the brute-force enumerator.
    pub fn config_energy(&self, mask: u32, adj: &NodeAdjacency) -> f64 {
        let m = self.cells.len();
        let mut acc = self.constant;
        for k in 0..m {
            let inside = (mask >> k) & 1 == 1;
            acc += if inside { self.unary_inside[k] } else { self.unary_outside[k] };
            for &(j, w) in &adj.lists[k] {
                let other = (mask >> j) & 1 == 1;
                if other != inside {
                    acc += 0.5 * w;
                }
            }
        }
        acc
    }
}

/// Per-node adjacency view of the pairwise terms (each edge listed from both
/// endpoints with half weight handled by the evaluator).
pub struct NodeAdjacency {
    lists: Vec<Vec<(u32, f64)>>,
}

impl NodeAdjacency {
    pub fn new(p: &CutProblem) -> Self {
        let mut lists = vec![Vec::new(); p.cells.len()];
        for &(a, b, w) in &p.pairwise {
            lists[a as usize].push((b, w));
            lists[b as usize].push((a, w));
        }
        Self { lists }
    }
}

/// Result of a minimization run.
#[derive(Debug, Clone)]
pub struct Minimized {
    pub field: BinaryField,
    pub report: EnergyReport,
    /// Configuration-independent offset between cut values and energies.
    pub cut_constant: f64,
    /// Max-flow value of the solved cut problem (brute force: NaN).
    pub flow_value: f64,
}

/// Exact global minimizer by min-cut; canonical solution is the minimal
/// source side.
pub fn mincut_minimize(
    datum: &BinaryField,
    h: &HField,
    kernel: &KernelTable,
    symmetry: Option<MirrorSymmetry>,
) -> Result<Minimized> {
    let problem = CutProblem::build(datum, h, kernel)?;
    let m = problem.cells.len();
    let mut dinic = Dinic::new(m + 2);
    let source = m;
    let sink = m + 1;
    for k in 0..m {
        if problem.unary_outside[k] > 0.0 {
            dinic.add_edge(source, k, problem.unary_outside[k], 0.0);
        }
        if problem.unary_inside[k] > 0.0 {
            dinic.add_edge(k, sink, problem.unary_inside[k], 0.0);
        }
    }
    for &(a, b, w) in &problem.pairwise {
        dinic.add_edge(a as usize, b as usize, w, w);
    }
    let flow = dinic.max_flow(source, sink);
    let reach = dinic.residual_reachable(source);

    let mut field = datum.clone();
    for (k, &cell) in problem.cells.iter().enumerate() {
        field = assign(field, cell, reach[k]);
    }
    if let Some(sym) = symmetry {
        field = symmetrize(&field, h, kernel, sym)?;
    }
    let report = massari_energy(&field, h, kernel)?;
    Ok(Minimized { field, report, cut_constant: problem.constant, flow_value: flow })
}

fn assign(mut field: BinaryField, cell: usize, inside: bool) -> BinaryField {
    if field.is_inside(cell) != inside {
        field = field.with_flipped(cell);
    }
    field
}

/// Canonicalize over the lattice of minimum cuts: among {S, S∪mS, S∩mS}
/// take the best energy, preferring the symmetric candidates; both lattice
/// combinations of two minimum cuts are minimum cuts of a submodular energy.
fn symmetrize(
    field: &BinaryField,
    h: &HField,
    kernel: &KernelTable,
    sym: MirrorSymmetry,
) -> Result<BinaryField> {
    let grid = field.grid().clone();
    let mut union = field.clone();
    let mut inter = field.clone();
    for &cell in grid.omega_cells() {
        let mc = sym.mirror_cell(&grid, cell);
        let a = field.is_inside(cell);
        let b = field.is_inside(mc);
        union = assign(union, cell, a || b);
        inter = assign(inter, cell, a && b);
    }
    let e_u = massari_energy(&union, h, kernel)?.massari.unwrap();
    let e_i = massari_energy(&inter, h, kernel)?.massari.unwrap();
    Ok(if e_u <= e_i { union } else { inter })
}

/// Brute-force oracle: enumerate all configurations, evaluate each by direct
/// summation, return the minimum with ties broken by the lexicographically
/// smallest mask (cell-ascending bit order).
pub fn brute_force_minimize(
    datum: &BinaryField,
    h: &HField,
    kernel: &KernelTable,
) -> Result<Minimized> {
    let problem = CutProblem::build(datum, h, kernel)?;
    let m = problem.cells.len();
    if m > BRUTE_FORCE_BOUND {
        return Err(Error::BruteForceTooLarge { omega: m, bound: BRUTE_FORCE_BOUND });
    }
    let adj = NodeAdjacency::new(&problem);
    let total: u64 = 1u64 << m;
    // deterministic min over (energy order-key, lexicographic mask key)
    let best = exec::min_indexed(total as usize, |c| {
        let mask = c as u32;
        let e = problem.config_energy(mask, &adj);
        (f64_order_key(e), mask.reverse_bits() >> (32 - m as u32), mask)
    })
    .expect("at least one configuration");
    let mask = best.2;
    let mut field = datum.clone();
    for (k, &cell) in problem.cells.iter().enumerate() {
        field = assign(field, cell, (mask >> k) & 1 == 1);
    }
    let report = massari_energy(&field, h, kernel)?;
    Ok(Minimized { field, report, cut_constant: problem.constant, flow_value: f64::NAN })
}

/// Monotone order-preserving key for finite f64 values.
fn f64_order_key(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 0 {
        b | (1 << 63)
    } else {
        !b
    }
}

// ---------------------------------------------------------------------------
// Dinic max-flow on f64 capacities. Deterministic: arcs are visited in
// insertion order; bottleneck subtraction zeroes the saturated arc exactly.
// ---------------------------------------------------------------------------

struct Dinic {
    n: usize,
    to: Vec<u32>,
    cap: Vec<f64>,
    adj: Vec<Vec<u32>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Self {
            n,
            to: Vec::new(),
            cap: Vec::new(),
            adj: vec![Vec::new(); n],
            level: vec![-1; n],
            iter: vec![0; n],
        }
    }

    fn add_edge(&mut self, a: usize, b: usize, cap_ab: f64, cap_ba: f64) {
        let e = self.to.len() as u32;
        self.to.push(b as u32);
        self.cap.push(cap_ab);
        self.to.push(a as u32);
        self.cap.push(cap_ba);
        self.adj[a].push(e);
        self.adj[b].push(e + 1);
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        let mut queue = std::collections::VecDeque::new();
        self.level[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &e in &self.adj[v] {
                let u = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0.0 && self.level[u] < 0 {
                    self.level[u] = self.level[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        self.level[t] >= 0
    }

    /// Iterative blocking flow with the current-arc optimization. Each
    /// augmentation zeroes its bottleneck arc exactly (a - a == 0 in IEEE),
    /// so the phase terminates after at most one saturation per arc.
    fn blocking_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        let mut path: Vec<u32> = Vec::new();
        loop {
            let v = path
                .last()
                .map(|&e| self.to[e as usize] as usize)
                .unwrap_or(s);
            if v == t {
                let mut bottleneck = f64::INFINITY;
                for &e in &path {
                    bottleneck = bottleneck.min(self.cap[e as usize]);
                }
                for &e in &path {
                    self.cap[e as usize] -= bottleneck;
                    self.cap[(e ^ 1) as usize] += bottleneck;
                }
                total += bottleneck;
                let mut cut = path.len();
                for (idx, &e) in path.iter().enumerate() {
                    if self.cap[e as usize] <= 0.0 {
                        cut = idx;
                        break;
                    }
                }
                path.truncate(cut);
                continue;
            }
            let mut advanced = false;
            while self.iter[v] < self.adj[v].len() {
                let e = self.adj[v][self.iter[v]];
                let u = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0.0 && self.level[u] == self.level[v] + 1 {
                    path.push(e);
                    advanced = true;
                    break;
                }
                self.iter[v] += 1;
            }
            if !advanced {
                if v == s {
                    break;
                }
                self.level[v] = -1;
                path.pop();
                let pv = path
                    .last()
                    .map(|&e| self.to[e as usize] as usize)
                    .unwrap_or(s);
                self.iter[pv] += 1;
            }
        }
        total
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        while self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            flow += self.blocking_flow(s, t);
        }
        flow
    }

    fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            for &e in &self.adj[v] {
                let u = self.to[e as usize] as usize;
                if self.cap[e as usize] > 0.0 && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }
}
