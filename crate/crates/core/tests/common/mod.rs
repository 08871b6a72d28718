//! Reference solvers used to check the library against independent
//! formulations. None of them share code paths with the crate under test.

#![allow(dead_code)]

use nalgebra::DMatrix;

/// Fused lasso on a graph by accelerated projected gradient on the box-
/// constrained dual, stopped on a certified duality gap.
///
/// Primal: `min_f 1/2 ||f - m||² + lam1 ||f||_1 + sum_e c_e |f_a - f_b|`
/// with `c_e = lam2 * w_e`. Dual variables `z_e ∈ [-c_e, c_e]` and
/// `u_i ∈ [-lam1, lam1]`; the primal point is `f = m - Dᵀz - u`.
///
/// Returns `(f, gap)`. Strong convexity gives `||f - f*|| <= sqrt(2 gap)`.
pub fn gfl_dual_oracle(
    m: &[f64],
    edges: &[(usize, usize)],
    w: &[f64],
    lam1: f64,
    lam2: f64,
    target_gap: f64,
    max_iters: usize,
) -> (Vec<f64>, f64) {
    let n = m.len();
    let ne = edges.len();
    let caps: Vec<f64> = w.iter().map(|&wi| lam2 * wi).collect();
    let mut degree = vec![0usize; n];
    for &(a, b) in edges {
        degree[a] += 1;
        degree[b] += 1;
    }
    // ||[D; I]||² <= 2 * max degree + 1
    let lip = 2.0 * degree.iter().copied().max().unwrap_or(0) as f64 + 1.0;
    let step = 1.0 / lip;

    let primal_of = |z: &[f64], u: &[f64]| -> Vec<f64> {
        let mut f: Vec<f64> = m.iter().zip(u).map(|(mi, ui)| mi - ui).collect();
        for (k, &(a, b)) in edges.iter().enumerate() {
            f[a] -= z[k];
            f[b] += z[k];
        }
        f
    };
    let primal_obj = |f: &[f64]| -> f64 {
        let mut v = 0.0;
        for i in 0..n {
            v += 0.5 * (f[i] - m[i]).powi(2) + lam1 * f[i].abs();
        }
        for (k, &(a, b)) in edges.iter().enumerate() {
            v += caps[k] * (f[a] - f[b]).abs();
        }
        v
    };
    let dual_obj = |f: &[f64]| -> f64 {
        let mm: f64 = m.iter().map(|x| x * x).sum();
        let ff: f64 = f.iter().map(|x| x * x).sum();
        0.5 * mm - 0.5 * ff
    };

    let mut z = vec![0.0; ne];
    let mut u = vec![0.0; n];
    let mut zy = z.clone();
    let mut uy = u.clone();
    let mut t = 1.0f64;
    let mut best_gap = f64::INFINITY;
    let mut best_f = m.to_vec();
    let mut prev_dual = f64::NEG_INFINITY;

    for it in 0..max_iters {
        // gradient of 1/2 ||m - Aᵀy||² is -A f
        let f = primal_of(&zy, &uy);
        let z_new: Vec<f64> = edges
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| (zy[k] + step * (f[a] - f[b])).clamp(-caps[k], caps[k]))
            .collect();
        let u_new: Vec<f64> = (0..n)
            .map(|i| (uy[i] + step * f[i]).clamp(-lam1, lam1))
            .collect();
        let f_new = primal_of(&z_new, &u_new);
        let d = dual_obj(&f_new);

        // Restart momentum whenever the dual value stops increasing.
        let t_next = if d < prev_dual {
            1.0
        } else {
            (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0
        };
        let momentum = if d < prev_dual {
            0.0
        } else {
            (t - 1.0) / t_next
        };
        for k in 0..ne {
            zy[k] = z_new[k] + momentum * (z_new[k] - z[k]);
        }
        for i in 0..n {
            uy[i] = u_new[i] + momentum * (u_new[i] - u[i]);
        }
        z = z_new;
        u = u_new;
        t = t_next;
        prev_dual = d;

        if it % 16 == 0 || it + 1 == max_iters {
            let gap = (primal_obj(&f_new) - d).max(0.0);
            if gap < best_gap {
                best_gap = gap;
                best_f = f_new;
            }
            if best_gap <= target_gap {
                break;
            }
        }
    }
    (best_f, best_gap)
}

/// Derivative of a convex piecewise-quadratic message, stored as a
/// continuous nondecreasing piecewise-linear function.
struct PwLinear {
    knots: Vec<(f64, f64)>,
    left_slope: f64,
    right_slope: f64,
}

impl PwLinear {
    /// Solves `g(x) = v`; `g` is strictly increasing wherever this is used.
    fn solve(&self, v: f64) -> f64 {
        let first = self.knots[0];
        let last = *self.knots.last().unwrap();
        if v <= first.1 {
            return first.0 + (v - first.1) / self.left_slope;
        }
        if v >= last.1 {
            return last.0 + (v - last.1) / self.right_slope;
        }
        for pair in self.knots.windows(2) {
            let (x0, y0) = pair[0];
            let (x1, y1) = pair[1];
            if v >= y0 && v <= y1 {
                if y1 == y0 {
                    return x0;
                }
                return x0 + (v - y0) * (x1 - x0) / (y1 - y0);
            }
        }
        unreachable!("monotone function covers every value")
    }

    /// Replaces `g` by `clamp(g, -c, c)`, returning the two cut points.
    fn clamp(&mut self, c: f64) -> (f64, f64) {
        let lo = self.solve(-c);
        let hi = self.solve(c);
        let mut knots = vec![(lo, -c)];
        knots.extend(
            self.knots
                .iter()
                .copied()
                .filter(|&(x, _)| x > lo && x < hi),
        );
        if hi > lo {
            knots.push((hi, c));
        }
        self.knots = knots;
        self.left_slope = 0.0;
        self.right_slope = 0.0;
        (lo, hi)
    }

    /// Adds `x - m`.
    fn add_data(&mut self, m: f64) {
        for k in &mut self.knots {
            k.1 += k.0 - m;
        }
        self.left_slope += 1.0;
        self.right_slope += 1.0;
    }
}

/// Exact weighted 1D fused lasso `min 1/2 ||f - m||² + sum_k c_k |f_{k+1} - f_k|`
/// by dynamic programming over message derivatives.
pub fn chain_tv_oracle(m: &[f64], c: &[f64]) -> Vec<f64> {
    let n = m.len();
    assert_eq!(c.len() + 1, n.max(1));
    if n == 0 {
        return Vec::new();
    }
    let mut g = PwLinear {
        knots: vec![(m[0], 0.0)],
        left_slope: 1.0,
        right_slope: 1.0,
    };
    let mut bounds = Vec::with_capacity(n - 1);
    for k in 1..n {
        bounds.push(g.clamp(c[k - 1]));
        g.add_data(m[k]);
    }
    let mut f = vec![0.0; n];
    f[n - 1] = g.solve(0.0);
    for k in (1..n).rev() {
        let (lo, hi) = bounds[k - 1];
        f[k - 1] = f[k].clamp(lo, hi);
    }
    f
}

/// Minimum s-t cut by enumerating every source side.
///
/// `arcs` are `(from, to, cap_forward, cap_backward)`.
pub fn brute_force_min_cut(source: &[f64], sink: &[f64], arcs: &[(usize, usize, f64, f64)]) -> f64 {
    let n = source.len();
    assert!(n <= 20);
    let mut best = f64::INFINITY;
    for set in 0u32..(1u32 << n) {
        let inside = |i: usize| set & (1 << i) != 0;
        let mut cut = 0.0;
        for i in 0..n {
            if inside(i) {
                cut += sink[i];
            } else {
                cut += source[i];
            }
        }
        for &(a, b, fwd, bwd) in arcs {
            match (inside(a), inside(b)) {
                (true, false) => cut += fwd,
                (false, true) => cut += bwd,
                _ => {}
            }
        }
        best = best.min(cut);
    }
    best
}

pub fn lasso_value(a: &DMatrix<f64>, m: &[f64], tau: f64, s: &[f64]) -> f64 {
    let r = a * nalgebra::DVector::from_column_slice(s) - nalgebra::DVector::from_column_slice(m);
    0.5 * r.norm_squared() + tau * s.iter().map(|v| v.abs()).sum::<f64>()
}

/// Cyclic coordinate descent for `min 1/2 ||A s - m||² + tau ||s||_1`.
pub fn lasso_cd_oracle(a: &DMatrix<f64>, m: &[f64], tau: f64) -> Vec<f64> {
    let (rows, cols) = a.shape();
    let mut s = vec![0.0; cols];
    let mut r: Vec<f64> = m.to_vec(); // r = m - A s
    let col_sq: Vec<f64> = (0..cols).map(|j| a.column(j).norm_squared()).collect();
    for _ in 0..200_000 {
        let mut max_change = 0.0f64;
        for j in 0..cols {
            if col_sq[j] == 0.0 {
                continue;
            }
            let mut rho = 0.0;
            for i in 0..rows {
                rho += a[(i, j)] * r[i];
            }
            rho += col_sq[j] * s[j];
            let new = rho.signum() * (rho.abs() - tau).max(0.0) / col_sq[j];
            let delta = new - s[j];
            if delta != 0.0 {
                for i in 0..rows {
                    r[i] -= a[(i, j)] * delta;
                }
                s[j] = new;
            }
            max_change = max_change.max(delta.abs());
        }
        if max_change < 1e-15 {
            break;
        }
    }
    s
}

fn svt(m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let s = svd.singular_values.map(|x| (x - tau).max(0.0));
    &u * DMatrix::from_diagonal(&s) * &v_t
}

fn soft(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Plain inexact-ALM robust PCA, `min ||B||_* + lambda ||F||_1 s.t. D = B + F`,
/// with the same continuation schedule and stopping rule as the library.
pub struct RpcaOutput {
    pub background: DMatrix<f64>,
    pub foreground: DMatrix<f64>,
    pub iterations: usize,
}

pub fn rpca_oracle(
    d: &DMatrix<f64>,
    lambda: f64,
    beta: f64,
    tol: f64,
    max_iters: usize,
) -> RpcaOutput {
    let (p, n) = d.shape();
    let spectral = d.clone().svd(false, false).singular_values.max();
    let mu0 = 1.25 / spectral;
    let mu_max = 1e7 * mu0;
    let d_norm = d.norm();
    let mut b = DMatrix::zeros(p, n);
    let mut f = DMatrix::zeros(p, n);
    let mut y = DMatrix::zeros(p, n);
    let mut mu = mu0;
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        b = svt(&(d - &f + &y / mu), 1.0 / mu);
        let m2 = d - &b + &y / mu;
        f = m2.map(|x| soft(x, lambda / mu));
        let r = d - &b - &f;
        y += &r * mu;
        mu = (beta * mu).min(mu_max);
        if r.norm() / d_norm <= tol {
            break;
        }
    }
    RpcaOutput {
        background: b,
        foreground: f,
        iterations,
    }
}

/// `||x||_2` from the largest eigenvalue of `xᵀx`.
pub fn spectral_norm_eig(x: &DMatrix<f64>) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let gram = x.transpose() * x;
    let top = nalgebra::SymmetricEigen::new(gram).eigenvalues.max();
    top.max(0.0).sqrt()
}

/// Orthonormal bases `(U1, V1)` of the column and row spaces of `b`, from
/// the eigenvectors of `bᵀb` whose eigenvalues exceed `rel_tol² ||b||²`.
///
/// nalgebra's SVD loses accuracy on strongly rank-deficient inputs, which
/// are exactly what thresholding produces, so it is avoided here.
pub fn singular_subspaces(b: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (rows, cols) = b.shape();
    let eig = nalgebra::SymmetricEigen::new(b.transpose() * b);
    let top = eig.eigenvalues.max().max(0.0);
    let keep: Vec<usize> = (0..cols)
        .filter(|&k| top > 0.0 && eig.eigenvalues[k] > rel_tol * rel_tol * top)
        .collect();
    if keep.is_empty() {
        return (DMatrix::zeros(rows, 0), DMatrix::zeros(cols, 0));
    }
    let v1 = DMatrix::from_columns(
        &keep
            .iter()
            .map(|&k| eig.eigenvectors.column(k))
            .collect::<Vec<_>>(),
    );
    let mut u1 = b * &v1;
    for mut c in u1.column_iter_mut() {
        let n = c.norm();
        c /= n;
    }
    (u1, v1)
}
