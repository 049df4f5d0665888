//! Kantorovich potentials carried by coupling atoms and their path-infimum
//! extensions to arbitrary points and times.

use crate::grid::TorusGrid;
use crate::paths::Segment;
use rayon::prelude::*;

/// Source potential `psi0` on source atoms and its c-transform `psiT` on
/// target atoms, for the kicked cost of the whole horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomPotentials {
    pub src_pos: Vec<f64>,
    pub src_mass: Vec<f64>,
    pub psi0: Vec<f64>,
    pub tgt_pos: Vec<f64>,
    pub tgt_mass: Vec<f64>,
    pub psi_t: Vec<f64>,
    /// Source and target index of every plan atom.
    pub atom_src: Vec<usize>,
    pub atom_tgt: Vec<usize>,
    /// Sources and targets are ordered along a monotone chain, so the
    /// relevant competitors of an atom are its chain neighbours.
    pub chain: bool,
}

/// Per-time kick fields `k_1 .. k_{N-1}`.
pub(crate) struct KickFields<'a> {
    pub grid: &'a TorusGrid,
    pub fields: &'a [Vec<f64>],
}

impl<'a> KickFields<'a> {
    fn refs(&self, from: usize, to: usize) -> Vec<&'a [f64]> {
        // kicks at t_from .. t_to inclusive (1-based times)
        if from > to {
            return Vec::new();
        }
        self.fields[from - 1..to].iter().map(|v| v.as_slice()).collect()
    }

    /// Cost of the best path from `a` at `t_i` to `b` at `t_j` (`i < j`),
    /// paying the kicks strictly between the two times.
    pub fn cost(&self, i: usize, j: usize, a: &[f64], b: &[f64]) -> f64 {
        let refs = self.refs(i + 1, j - 1);
        let seg = Segment { grid: self.grid, dt: self.grid.dt(), kicks: &refs };
        let mut xs = seg.straight(a, b);
        seg.solve(&mut xs)
    }

    /// Nearest image of `z` relative to `x`.
    pub fn image(x: &[f64], z: &[f64]) -> Vec<f64> {
        x.iter().zip(z).map(|(a, b)| a + crate::grid::periodic_diff(*b, *a)).collect()
    }
}

impl AtomPotentials {
    fn d(&self, grid: &TorusGrid) -> usize {
        grid.d
    }

    pub(crate) fn src(&self, r: usize, d: usize) -> &[f64] {
        &self.src_pos[r * d..(r + 1) * d]
    }

    pub(crate) fn tgt(&self, q: usize, d: usize) -> &[f64] {
        &self.tgt_pos[q * d..(q + 1) * d]
    }

    /// `psiT(Y_q) = min_r psi0(X_r) + c(X_r, Y_q)` over all sources.
    pub(crate) fn c_transform(&mut self, kf: &KickFields) {
        let d = self.d(kf.grid);
        let steps = kf.grid.steps;
        let nt = self.tgt_mass.len();
        let psi_t: Vec<f64> = (0..nt)
            .into_par_iter()
            .map(|q| {
                let y = self.tgt(q, d);
                (0..self.src_mass.len())
                    .filter(|&r| self.src_mass[r] > 0.0)
                    .map(|r| {
                        let x = self.src(r, d);
                        self.psi0[r] + kf.cost(0, steps, x, &KickFields::image(x, y))
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        self.psi_t = psi_t;
    }

    /// Lowers `psiT` so that every plan atom satisfies
    /// `psiT(Y_q) <= psi0(X_r) + cost` for the cost of its own path. Cold-started
    /// pair costs can sit in a higher local minimum than the plan's warm-started
    /// paths, and this keeps the dual below the action of the computed path.
    pub(crate) fn tighten_with_atoms(&mut self, atom_costs: &[f64]) {
        for (k, &c) in atom_costs.iter().enumerate() {
            let (r, q) = (self.atom_src[k], self.atom_tgt[k]);
            let bound = self.psi0[r] + c;
            if bound < self.psi_t[q] {
                self.psi_t[q] = bound;
            }
        }
    }

    /// `sum mT psiT - sum m0 psi0`.
    pub fn transport_dual(&self) -> f64 {
        let a: f64 = self.tgt_mass.iter().zip(&self.psi_t).map(|(m, p)| m * p).sum();
        let b: f64 = self.src_mass.iter().zip(&self.psi0).map(|(m, p)| m * p).sum();
        a - b
    }

    /// Candidate indices around `center` in a set of size `len`.
    pub(crate) fn window(&self, center: usize, len: usize, radius: usize) -> Vec<usize> {
        if !self.chain || len <= 2 * radius + 1 {
            return (0..len).collect();
        }
        (0..=2 * radius).map(|o| (center + len + o - radius) % len).collect()
    }

    /// Forward potential `phi(t_i^-)(z) = min_r psi0(X_r) + c^{0->i}(X_r, z)`
    /// over the given sources, `1 <= i <= N`.
    pub(crate) fn forward_at(&self, kf: &KickFields, i: usize, z: &[f64], sources: &[usize]) -> f64 {
        let d = kf.grid.d;
        sources
            .iter()
            .filter(|&&r| self.src_mass[r] > 0.0)
            .map(|&r| {
                let x = self.src(r, d);
                self.psi0[r] + kf.cost(0, i, x, &KickFields::image(x, z))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Backward potential `psi(t_i^+)(z) = max_q psiT(Y_q) - c^{i->N}(z, Y_q)`
    /// over the given targets, `0 <= i <= N - 1`.
    pub(crate) fn backward_at(&self, kf: &KickFields, i: usize, z: &[f64], targets: &[usize]) -> f64 {
        let d = kf.grid.d;
        let steps = kf.grid.steps;
        targets
            .iter()
            .filter(|&&q| self.tgt_mass[q] > 0.0)
            .map(|&q| {
                let y = self.tgt(q, d);
                self.psi_t[q] - kf.cost(i, steps, &KickFields::image(y, z), y)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
