//! Discrete Legendre transforms, convex hulls, Hopf-Lax steps and
//! finite-difference sphere/ball Laplacians.

use crate::error::{Error, Result};
use crate::grid::{ScalarField, TorusGrid};
use serde::{Deserialize, Serialize};

/// Values on a box lattice `lo + k h`, `k = 0..n-1` per axis, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    pub d: usize,
    pub n: usize,
    pub lo: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl LatticeFunction {
    pub fn from_fn(d: usize, n: usize, lo: f64, h: f64, f: impl Fn(&[f64]) -> f64) -> Self {
        let len = n.pow(d as u32);
        let mut values = Vec::with_capacity(len);
        let mut pt = vec![0.0; d];
        for k in 0..len {
            point_of(d, n, lo, h, k, &mut pt);
            values.push(f(&pt));
        }
        Self { d, n, lo, h, values }
    }

    /// The fundamental domain `[0,1)^d` of a torus grid.
    pub fn on_domain(f: &ScalarField) -> Self {
        let g = f.grid;
        Self { d: g.d, n: g.n, lo: 0.0, h: g.h(), values: f.values.clone() }
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        let mut pt = vec![0.0; self.d];
        point_of(self.d, self.n, self.lo, self.h, k, &mut pt);
        pt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn point_of(d: usize, n: usize, lo: f64, h: f64, mut k: usize, out: &mut [f64]) {
    for a in (0..d).rev() {
        out[a] = lo + (k % n) as f64 * h;
        k /= n;
    }
}

/// Slope sampling window `[lo, hi]^d` for discrete Legendre transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeWindow {
    pub lo: f64,
    pub hi: f64,
}

impl Default for SlopeWindow {
    fn default() -> Self {
        Self { lo: -2.0, hi: 2.0 }
    }
}

/// `f*(y) = max_x (x.y - f(x))` over lattice nodes `x`, sampled at slopes
/// `y` on the window with the same spacing as `f`.
pub fn legendre_transform(f: &LatticeFunction, window: SlopeWindow) -> LatticeFunction {
    let m = ((window.hi - window.lo) / f.h).round() as usize + 1;
    let xs: Vec<Vec<f64>> = (0..f.len()).map(|k| f.point(k)).collect();
    LatticeFunction::from_fn(f.d, m, window.lo, f.h, |y| {
        let mut best = f64::NEG_INFINITY;
        for (x, fx) in xs.iter().zip(&f.values) {
            let v = dot(x, y) - fx;
            if v > best {
                best = v;
            }
        }
        best
    })
}

/// Convex hull `f**`. In 1-D this is the exact lower convex envelope of the
/// node samples (the biconjugate over all real slopes). In higher dimensions
/// the two conjugates are taken over the slope window lattice.
pub fn convex_hull(f: &LatticeFunction, window: SlopeWindow) -> LatticeFunction {
    if f.d == 1 {
        let xs: Vec<f64> = (0..f.n).map(|k| f.lo + k as f64 * f.h).collect();
        let values = lower_envelope_1d(&xs, &f.values);
        return LatticeFunction { values, ..f.clone() };
    }
    let star = legendre_transform(f, window);
    let ys: Vec<Vec<f64>> = (0..star.len()).map(|k| star.point(k)).collect();
    let values = (0..f.len())
        .map(|k| {
            let x = f.point(k);
            let mut best = f64::NEG_INFINITY;
            for (y, fy) in ys.iter().zip(&star.values) {
                best = best.max(dot(&x, y) - fy);
            }
            best.min(f.values[k])
        })
        .collect();
    LatticeFunction { values, ..f.clone() }
}

/// Lower convex envelope of points `(xs[k], fs[k])` with increasing `xs`,
/// evaluated at every `xs[k]` (monotone chain).
pub(crate) fn lower_envelope_1d(xs: &[f64], fs: &[f64]) -> Vec<f64> {
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for k in 0..xs.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // drop b when it lies on or above the chord a..k
            let cross = (xs[b] - xs[a]) * (fs[k] - fs[a]) - (fs[b] - fs[a]) * (xs[k] - xs[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut out = vec![0.0; xs.len()];
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        for k in a..=b {
            let s = (xs[k] - xs[a]) / (xs[b] - xs[a]);
            out[k] = (fs[a] + s * (fs[b] - fs[a])).min(fs[k]);
        }
    }
    if hull.len() == 1 {
        out[0] = fs[0];
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Phi_{s,t}(x) = (t - s) phi(s, x) + |x|^2 / 2` on the fundamental domain.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPotential {
    pub grid: TorusGrid,
    pub s: f64,
    pub t: f64,
    pub values: Vec<f64>,
}

impl LiftedPotential {
    pub fn lift(phi: &ScalarField, s: f64, t: f64) -> Self {
        let g = phi.grid;
        let values = (0..g.num_nodes())
            .map(|k| {
                let x = g.coords(k);
                (t - s) * phi.values[k] + 0.5 * dot(&x, &x)
            })
            .collect();
        Self { grid: g, s, t, values }
    }

    pub fn unlift(&self) -> ScalarField {
        let g = self.grid;
        let values = (0..g.num_nodes())
            .map(|k| {
                let x = g.coords(k);
                (self.values[k] - 0.5 * dot(&x, &x)) / (self.t - self.s)
            })
            .collect();
        ScalarField { grid: g, values }
    }

    /// Convex hull of the lift extended to all of `R^d` by the equivariance
    /// `Phi(x + e) = Phi(x) + x.e + |e|^2/2` of a periodic potential. The hull
    /// is taken over three periods per axis and restricted to the middle one.
    pub fn convexified(&self, window: SlopeWindow) -> Self {
        let g = self.grid;
        let n = g.n;
        let ext = LatticeFunction::from_fn(g.d, 3 * n, -1.0, g.h(), |x| {
            let mut idx = Vec::with_capacity(g.d);
            let mut e = Vec::with_capacity(g.d);
            for &xa in x {
                let k = (xa * n as f64).round() as i64;
                let wrap = k.div_euclid(n as i64);
                idx.push(k.rem_euclid(n as i64));
                e.push(wrap as f64);
            }
            let base = self.values[g.flat_index(&idx)];
            let x0: Vec<f64> = x.iter().zip(&e).map(|(xa, ea)| xa - ea).collect();
            base + dot(&x0, &e) + 0.5 * dot(&e, &e)
        });
        let hull = convex_hull(&ext, window);
        let values = (0..g.num_nodes())
            .map(|k| {
                let idx = g.multi_index(k);
                let ek = idx.iter().fold(0usize, |acc, &i| acc * 3 * n + i + n);
                hull.values[ek]
            })
            .collect();
        Self { grid: g, s: self.s, t: self.t, values }
    }

    /// Largest violation of the per-axis midpoint inequality
    /// `Phi(x) <= (Phi(x-h e_a) + Phi(x+h e_a)) / 2`, using the equivariant extension.
    pub fn midpoint_violation(&self) -> f64 {
        let g = self.grid;
        let mut worst: f64 = 0.0;
        for k in 0..g.num_nodes() {
            let idx: Vec<i64> = g.multi_index(k).into_iter().map(|i| i as i64).collect();
            for a in 0..g.d {
                let mut m = idx.clone();
                m[a] -= 1;
                let mut p = idx.clone();
                p[a] += 1;
                let v = 0.5 * (self.extended(&m) + self.extended(&p)) - self.values[k];
                worst = worst.max(-v);
            }
        }
        worst
    }

    fn extended(&self, idx: &[i64]) -> f64 {
        let g = self.grid;
        let n = g.n as i64;
        let base = self.values[g.flat_index(idx)];
        let mut x0 = Vec::with_capacity(g.d);
        let mut e = Vec::with_capacity(g.d);
        for &i in idx {
            x0.push(i.rem_euclid(n) as f64 * g.h());
            e.push(i.div_euclid(n) as f64);
        }
        base + dot(&x0, &e) + 0.5 * dot(&e, &e)
    }
}

/// Direction of a Hopf-Lax step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// Forward: `min_y phi(y) + d_per(x,y)^2 / (2 dt)`; backward: `max_y phi(y) - d_per(x,y)^2 / (2 dt)`.
/// Minimization over nodes `y`, axis by axis.
pub fn hopf_lax_step(phi: &ScalarField, dt: f64, direction: Direction) -> Result<ScalarField> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("hopf_lax_step needs dt > 0, got {dt}")));
    }
    let g = phi.grid;
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let mut vals: Vec<f64> = phi.values.iter().map(|v| sign * v).collect();
    let n = g.n;
    let mut line = vec![0.0; n];
    for axis in 0..g.d {
        let stride = n.pow((g.d - 1 - axis) as u32);
        for base in 0..g.num_nodes() {
            if (base / stride) % n != 0 {
                continue;
            }
            for (j, l) in line.iter_mut().enumerate() {
                *l = vals[base + j * stride];
            }
            let out = periodic_envelope(&line, g.h(), dt);
            for (j, o) in out.iter().enumerate() {
                vals[base + j * stride] = *o;
            }
        }
    }
    Ok(ScalarField { grid: g, values: vals.into_iter().map(|v| sign * v).collect() })
}

/// 1-D periodic `min_y f(y) + d_per(x,y)^2/(2 dt)` by the lower envelope of
/// parabolas over three periods.
fn periodic_envelope(f: &[f64], h: f64, dt: f64) -> Vec<f64> {
    let n = f.len();
    let m = 3 * n;
    let pos = |q: usize| (q as f64 - n as f64) * h;
    let val = |q: usize| f[q % n];
    // parabola q: val(q) + (x - pos(q))^2 / (2 dt)
    let inter = |p: usize, q: usize| {
        ((val(q) - val(p)) * 2.0 * dt + pos(q) * pos(q) - pos(p) * pos(p)) / (2.0 * (pos(q) - pos(p)))
    };
    let mut v: Vec<usize> = Vec::with_capacity(m);
    let mut z: Vec<f64> = Vec::with_capacity(m + 1);
    v.push(0);
    z.push(f64::NEG_INFINITY);
    z.push(f64::INFINITY);
    for q in 1..m {
        loop {
            let k = v.len() - 1;
            let s = inter(v[k], q);
            if s <= z[k] && k > 0 {
                v.pop();
                z.pop();
            } else if s <= z[k] {
                v[0] = q;
                break;
            } else {
                z[k + 1] = s;
                v.push(q);
                z.push(f64::INFINITY);
                break;
            }
        }
    }
    let mut out = vec![0.0; n];
    let mut k = 0;
    for (j, o) in out.iter_mut().enumerate() {
        let x = j as f64 * h;
        while z[k + 1] < x {
            k += 1;
        }
        let q = v[k];
        *o = val(q) + (x - pos(q)).powi(2) / (2.0 * dt);
    }
    out
}

/// Averaging stencil of the finite-difference Laplacians.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    Sphere,
    Ball,
}

/// Integer offsets of the sphere shell or ball of radius `h_ball`.
fn stencil_offsets(grid: &TorusGrid, h_ball: f64, variant: Stencil) -> Vec<Vec<i64>> {
    let h = grid.h();
    let r = (h_ball / h).ceil() as i64 + 1;
    let mut out = Vec::new();
    let span = (2 * r + 1) as usize;
    for k in 0..span.pow(grid.d as u32) {
        let mut rem = k;
        let mut off = vec![0i64; grid.d];
        for a in (0..grid.d).rev() {
            off[a] = (rem % span) as i64 - r;
            rem /= span;
        }
        if off.iter().all(|&o| o == 0) {
            continue;
        }
        let dist = off.iter().map(|&o| (o as f64 * h).powi(2)).sum::<f64>().sqrt();
        let keep = match variant {
            Stencil::Ball => dist <= h_ball * (1.0 + 1e-12),
            Stencil::Sphere => (dist - h_ball).abs() < 0.5 * h * (1.0 + 1e-12),
        };
        if keep {
            out.push(off);
        }
    }
    out
}

/// `d * (average of f over the stencil - f) / (average of |z|^2/2 over the stencil)`,
/// calibrated to be exact on `|x|^2 / 2`.
pub fn fd_laplacian(f: &ScalarField, h_ball: f64, variant: Stencil) -> Result<ScalarField> {
    let g = f.grid;
    if h_ball < g.h() * (1.0 - 1e-12) {
        return Err(Error::BallTooSmall { h_ball, h: g.h() });
    }
    let offs = stencil_offsets(&g, h_ball, variant);
    let m = offs.len() as f64;
    let h = g.h();
    let quad: f64 =
        offs.iter().map(|o| 0.5 * o.iter().map(|&c| (c as f64 * h).powi(2)).sum::<f64>()).sum::<f64>() / m;
    let scale = g.d as f64 / quad;
    let values = (0..g.num_nodes())
        .map(|k| {
            let idx: Vec<i64> = g.multi_index(k).into_iter().map(|i| i as i64).collect();
            let avg = offs
                .iter()
                .map(|o| {
                    let j: Vec<i64> = idx.iter().zip(o).map(|(a, b)| a + b).collect();
                    f.values[g.flat_index(&j)]
                })
                .sum::<f64>()
                / m;
            scale * (avg - f.values[k])
        })
        .collect();
    Ok(ScalarField { grid: g, values })
}
