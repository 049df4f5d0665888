//! Restricted master problem over LP vertex plans. For fixed pair paths the
//! attractive action is a convex quadratic on the transport polytope; its
//! minimizer may sit inside a face, where plain vertex iteration cycles. The
//! mixture weights over the vertices found so far are optimized exactly.

use crate::paths::solve_dense;

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

fn objective(q: &[f64], c: &[f64], x: &[f64]) -> f64 {
    let r = c.len();
    let mut f = 0.0;
    for i in 0..r {
        f += c[i] * x[i];
        for j in 0..r {
            f += 0.5 * x[i] * q[i * r + j] * x[j];
        }
    }
    f
}

/// Equality-constrained minimizer on `support`: `H_SS y + nu 1 = -c_S`, `1'y = 1`.
fn face_minimizer(h: &[f64], c: &[f64], support: &[usize]) -> Option<(Vec<f64>, f64)> {
    let r = c.len();
    let s = support.len();
    let mut a = vec![0.0; (s + 1) * (s + 1)];
    let mut b = vec![0.0; s + 1];
    for (ii, &i) in support.iter().enumerate() {
        for (jj, &j) in support.iter().enumerate() {
            a[ii * (s + 1) + jj] = h[i * r + j];
        }
        a[ii * (s + 1) + s] = 1.0;
        a[s * (s + 1) + ii] = 1.0;
        b[ii] = -c[i];
    }
    b[s] = 1.0;
    let sol = solve_dense(a, b, s + 1)?;
    sol.iter().all(|v| v.is_finite()).then(|| (sol[..s].to_vec(), sol[s]))
}

/// Primal active-set method for a positive definite `h`, started at vertex `start`.
/// `None` if a face system is singular or the iteration budget runs out.
fn active_set(h: &[f64], c: &[f64], start: usize) -> Option<Vec<f64>> {
    let r = c.len();
    let mut x = vec![0.0; r];
    x[start] = 1.0;
    let mut support = vec![start];
    for _ in 0..20 * r + 100 {
        let (y, nu) = face_minimizer(h, c, &support)?;
        if y.iter().all(|&v| v >= 0.0) {
            for (ii, &i) in support.iter().enumerate() {
                x[i] = y[ii];
            }
            // price the inactive coordinates: grad_j + nu < 0 means j should enter
            let g: Vec<f64> = (0..r).map(|i| c[i] + (0..r).map(|j| h[i * r + j] * x[j]).sum::<f64>()).collect();
            let scale = g.iter().fold(nu.abs(), |m, v| m.max(v.abs())).max(1e-300);
            let enter = (0..r)
                .filter(|i| !support.contains(i))
                .map(|j| (j, g[j] + nu))
                .filter(|&(_, p)| p < -1e-14 * scale)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match enter {
                Some((j, _)) => {
                    support.push(j);
                    support.sort_unstable();
                }
                None => return Some(x),
            }
        } else {
            // step towards y until the first support weight hits zero
            let mut alpha = 1.0;
            let mut block = None;
            for (ii, &i) in support.iter().enumerate() {
                if y[ii] < x[i] {
                    let a = x[i] / (x[i] - y[ii]);
                    if a < alpha {
                        alpha = a;
                        block = Some(i);
                    }
                }
            }
            for (ii, &i) in support.iter().enumerate() {
                x[i] += alpha * (y[ii] - x[i]);
            }
            let out = block?;
            x[out] = 0.0;
            support.retain(|&i| i != out);
            let total: f64 = support.iter().map(|&i| x[i]).sum();
            for &i in &support {
                x[i] /= total;
            }
        }
    }
    None
}

/// Accelerated projected gradient; the fallback when the active-set method fails.
fn projected_gradient(q: &[f64], c: &[f64], start: usize) -> Vec<f64> {
    let r = c.len();
    // Gershgorin bound, floored by the spread of c so steps stay finite for flat Q
    let spread = c.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - c.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let lip = (0..r).map(|i| (0..r).map(|j| q[i * r + j].abs()).sum::<f64>()).fold(0.0f64, f64::max).max(spread).max(1e-300);
    let grad = |x: &[f64]| -> Vec<f64> { (0..r).map(|i| c[i] + (0..r).map(|j| q[i * r + j] * x[j]).sum::<f64>()).collect() };
    let mut x = vec![0.0; r];
    x[start] = 1.0;
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..5000 {
        let g = grad(&y);
        let xn = project_simplex(&y.iter().zip(&g).map(|(a, b)| a - b / lip).collect::<Vec<_>>());
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let moved = xn.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        y = xn.iter().zip(&x).map(|(a, b)| a + (t - 1.0) / tn * (a - b)).collect();
        x = xn;
        t = tn;
        if moved < 1e-15 {
            break;
        }
    }
    x
}

/// `min 1/2 x'Qx + c'x` over the probability simplex for a positive
/// semidefinite `Q` (row-major `r x r`). Vertex plans often give a nearly
/// singular Gram matrix, so the active-set solve uses `Q + delta I` with a
/// ridge `delta` twelve orders below the problem scale.
pub(crate) fn simplex_qp(q: &[f64], c: &[f64]) -> Vec<f64> {
    let r = c.len();
    if r == 1 {
        return vec![1.0];
    }
    let start = (0..r).min_by(|&a, &b| (c[a] + 0.5 * q[a * r + a]).total_cmp(&(c[b] + 0.5 * q[b * r + b]))).unwrap_or(0);
    let spread = c.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - c.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let diag = (0..r).map(|i| q[i * r + i].abs()).fold(0.0f64, f64::max);
    let delta = 1e-12 * diag.max(spread).max(1e-300);
    let mut h = q.to_vec();
    for i in 0..r {
        h[i * r + i] += delta;
    }
    let x = active_set(&h, c, start).unwrap_or_else(|| projected_gradient(q, c, start));
    // remove the ridge bias where the face system of Q itself is regular
    let support: Vec<usize> = (0..r).filter(|&i| x[i] > 0.0).collect();
    if let Some((y, _)) = face_minimizer(q, c, &support) {
        if y.iter().all(|&v| v >= 0.0) {
            let mut xp = vec![0.0; r];
            for (ii, &i) in support.iter().enumerate() {
                xp[i] = y[ii];
            }
            if objective(q, c, &xp) <= objective(q, c, &x) {
                return xp;
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_lands_on_the_simplex() {
        let p = project_simplex(&[0.5, 2.0, -1.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
        let p = project_simplex(&[0.3, 0.3, 0.3]);
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn interior_minimizer_of_a_one_dimensional_quadratic() {
        // f = (x0 - 0.3)^2 restricted to x0 + x1 = 1, written as a 2x2 form
        let q = [2.0, 0.0, 0.0, 0.0];
        let c = [-0.6, 0.0];
        let x = simplex_qp(&q, &c);
        assert!((x[0] - 0.3).abs() < 1e-14 && (x[1] - 0.7).abs() < 1e-14);
    }

    /// KKT residual: on the support the gradients agree, elsewhere they are not smaller.
    fn kkt_violation(q: &[f64], c: &[f64], x: &[f64]) -> f64 {
        let r = c.len();
        let g: Vec<f64> = (0..r).map(|i| c[i] + (0..r).map(|j| q[i * r + j] * x[j]).sum::<f64>()).collect();
        let level = (0..r).filter(|&i| x[i] > 0.0).map(|i| g[i]).fold(f64::INFINITY, f64::min);
        (0..r).map(|i| if x[i] > 0.0 { (g[i] - level).abs() } else { (level - g[i]).max(0.0) }).fold(0.0, f64::max)
    }

    #[test]
    fn singular_gram_matrices_are_solved_to_optimality() {
        // eight vertices whose fields span only three directions
        let dirs = [[1.0, 0.0, 0.2], [0.0, 1.0, -0.3], [0.5, 0.5, 1.0]];
        let r = 8;
        let g: Vec<[f64; 3]> = (0..r)
            .map(|v| {
                let w = [(v as f64 * 0.7).sin(), (v as f64 * 1.3).cos(), 0.1 * v as f64 - 0.4];
                let mut out = [0.0; 3];
                for (k, d) in dirs.iter().enumerate() {
                    for a in 0..3 {
                        out[a] += w[k] * d[a];
                    }
                }
                out
            })
            .collect();
        let q: Vec<f64> = (0..r * r).map(|k| (0..3).map(|a| g[k / r][a] * g[k % r][a]).sum()).collect();
        let c: Vec<f64> = (0..r).map(|v| 0.05 * ((v * 5) % 7) as f64).collect();
        let x = simplex_qp(&q, &c);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(x.iter().all(|&v| v >= 0.0));
        assert!(kkt_violation(&q, &c, &x) < 1e-10, "{}", kkt_violation(&q, &c, &x));
        // no feasible point sampled on a fine grid of pairs does better
        let f = objective(&q, &c, &x);
        for a in 0..r {
            for b in 0..r {
                for k in 0..=20 {
                    let mut y = vec![0.0; r];
                    y[a] += k as f64 / 20.0;
                    y[b] += 1.0 - k as f64 / 20.0;
                    assert!(objective(&q, &c, &y) >= f - 1e-14);
                }
            }
        }
    }

    #[test]
    fn duplicate_vertices_share_the_weight_consistently() {
        let q = [1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let c = [0.0, 0.0, 0.0];
        let x = simplex_qp(&q, &c);
        // minimizer puts weight 1/2 on the repeated direction and 1/2 on the other
        assert!((x[0] + x[1] - 0.5).abs() < 1e-12 && (x[2] - 0.5).abs() < 1e-12, "{x:?}");
    }

    #[test]
    fn linear_objective_picks_the_cheapest_vertex() {
        let x = simplex_qp(&[0.0; 9], &[0.3, -0.2, 0.1]);
        assert_eq!(x, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn mixture_of_two_equal_vertices_with_curvature() {
        // two vertices whose potentials are opposite: the mix cancels them
        let q = [1.0, -1.0, -1.0, 1.0];
        let x = simplex_qp(&q, &[0.0, 0.0]);
        assert!((x[0] - 0.5).abs() < 1e-14);
    }
}
