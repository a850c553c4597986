//! Sparse convex quadratic programming by a primal-dual interior-point method.
//!
//! Solves `min ½xᵀPx + qᵀx  s.t.  Ax = b,  Gx ≤ h` with Mehrotra
//! predictor-corrector steps. Each Newton system is reduced to the
//! quasi-definite form `[P + GᵀDG + δI, Aᵀ; A, −δI]`, reordered by reverse
//! Cuthill–McKee and factored as an envelope LDLᵀ.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("interior point did not converge in {iterations} iterations")]
    MaxIterations {
        iterations: usize,
        best: Box<QpSolution>,
    },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("malformed problem: {0}")]
    Malformed(String),
}

/// Sparse row as `(column, value)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvexQp {
    pub n: usize,
    /// Upper-triangular entries `(i, j, v)` with `i <= j`; duplicates add.
    pub p: Vec<(usize, usize, f64)>,
    pub q: Vec<f64>,
    pub eq: Vec<SparseRow>,
    pub eq_rhs: Vec<f64>,
    pub ineq: Vec<SparseRow>,
    pub ineq_rhs: Vec<f64>,
    /// Added to the reported objective.
    pub constant: f64,
}

impl ConvexQp {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            q: vec![0.0; n],
            ..Default::default()
        }
    }

    /// Adds `w * x_i * x_j` (or `w * x_i²` when `i == j`) to the objective.
    pub fn add_quad(&mut self, i: usize, j: usize, w: f64) {
        if i == j {
            self.p.push((i, i, 2.0 * w));
        } else {
            self.p.push((i.min(j), i.max(j), w));
        }
    }

    pub fn add_eq(&mut self, row: SparseRow, rhs: f64) {
        self.eq.push(row);
        self.eq_rhs.push(rhs);
    }

    pub fn add_ineq(&mut self, row: SparseRow, rhs: f64) {
        self.ineq.push(row);
        self.ineq_rhs.push(rhs);
    }

    /// `lo <= x_i <= hi`; infinite sides are skipped.
    pub fn add_bounds(&mut self, i: usize, lo: f64, hi: f64) {
        if hi.is_finite() {
            self.add_ineq(vec![(i, 1.0)], hi);
        }
        if lo.is_finite() {
            self.add_ineq(vec![(i, -1.0)], -lo);
        }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for (i, qi) in self.q.iter().enumerate() {
            v += qi * x[i];
        }
        for &(i, j, w) in &self.p {
            if i == j {
                v += 0.5 * w * x[i] * x[i];
            } else {
                v += w * x[i] * x[j];
            }
        }
        v
    }

    fn p_times(&self, x: &[f64], out: &mut [f64]) {
        for &(i, j, w) in &self.p {
            out[i] += w * x[j];
            if i != j {
                out[j] += w * x[i];
            }
        }
    }

    fn validate(&self) -> Result<(), QpError> {
        let bad = |what: &str| Err(QpError::Malformed(what.to_string()));
        if self.q.len() != self.n {
            return bad("q length differs from n");
        }
        if self.eq.len() != self.eq_rhs.len() || self.ineq.len() != self.ineq_rhs.len() {
            return bad("constraint rows and right-hand sides differ in count");
        }
        let in_range = |r: &SparseRow| r.iter().all(|&(c, v)| c < self.n && v.is_finite());
        if !self.eq.iter().all(in_range) || !self.ineq.iter().all(in_range) {
            return bad("constraint column out of range or non-finite");
        }
        if !self.p.iter().all(|&(i, j, v)| i <= j && j < self.n && v.is_finite()) {
            return bad("objective entry out of range or below the diagonal");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub static_reg: f64,
    pub refine_steps: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 100,
            static_reg: 1e-9,
            refine_steps: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// Equality multipliers.
    pub y: Vec<f64>,
    /// Inequality multipliers (≥ 0).
    pub z: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

// ---- envelope LDLᵀ -----------------------------------------------------------

/// Symmetric matrix in permuted envelope (skyline) storage plus its factor.
struct Envelope {
    n: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    inv: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<f64>,
    diag_sign: Vec<f64>,
    d: Vec<f64>,
}

fn rcm(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        let mut queue = VecDeque::from([seed]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

impl Envelope {
    fn new(n: usize, pattern: &[(usize, usize)], diag_sign: Vec<f64>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in pattern {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        let perm = rcm(n, &adj);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for &(i, j) in pattern {
            let (a, b) = (inv[i], inv[j]);
            let (r, c) = if a >= b { (a, b) } else { (b, a) };
            first[r] = first[r].min(c);
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0;
        for r in 0..n {
            start.push(total);
            total += r - first[r] + 1;
        }
        start.push(total);
        let sign = perm.iter().map(|&old| diag_sign[old]).collect();
        Self {
            n,
            perm,
            inv,
            first,
            start,
            vals: vec![0.0; total],
            diag_sign: sign,
            d: vec![0.0; n],
        }
    }

    fn clear(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = (self.inv[i], self.inv[j]);
        let (r, c) = if a >= b { (a, b) } else { (b, a) };
        debug_assert!(c >= self.first[r]);
        self.vals[self.start[r] + c - self.first[r]] += v;
    }

    /// In-place LDLᵀ; tiny or wrong-signed pivots are replaced.
    fn factor(&mut self, pivot_floor: f64) -> usize {
        let mut bumped = 0;
        for i in 0..self.n {
            let fi = self.first[i];
            let si = self.start[i];
            for j in fi..i {
                let fj = self.first[j];
                let sj = self.start[j];
                let lo = fi.max(fj);
                let mut acc = self.vals[si + j - fi];
                for k in lo..j {
                    acc -= self.vals[si + k - fi] * self.d[k] * self.vals[sj + k - fj];
                }
                self.vals[si + j - fi] = acc / self.d[j];
            }
            let mut di = self.vals[si + i - fi];
            for k in fi..i {
                let l = self.vals[si + k - fi];
                di -= l * l * self.d[k];
            }
            let sign = self.diag_sign[i];
            if !(di * sign > pivot_floor) {
                di = sign * pivot_floor.max(1e-8);
                bumped += 1;
            }
            self.d[i] = di;
            self.vals[si + i - fi] = 1.0;
        }
        bumped
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = (0..n).map(|k| rhs[self.perm[k]]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let si = self.start[i];
            let mut acc = x[i];
            for k in fi..i {
                acc -= self.vals[si + k - fi] * x[k];
            }
            x[i] = acc;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let si = self.start[i];
            let xi = x[i];
            for k in fi..i {
                x[k] -= self.vals[si + k - fi] * xi;
            }
        }
        let mut out = vec![0.0; n];
        for k in 0..n {
            out[self.perm[k]] = x[k];
        }
        out
    }
}

// ---- interior point ----------------------------------------------------------

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn row_dot(row: &SparseRow, x: &[f64]) -> f64 {
    row.iter().map(|&(c, v)| v * x[c]).sum()
}

fn add_transpose(rows: &[SparseRow], w: &[f64], out: &mut [f64]) {
    for (row, &wi) in rows.iter().zip(w) {
        if wi != 0.0 {
            for &(c, v) in row {
                out[c] += v * wi;
            }
        }
    }
}

fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    let mut a: f64 = 1.0;
    for (x, dx) in v.iter().zip(dv) {
        if *dx < 0.0 {
            a = a.min(-x / dx);
        }
    }
    a
}

struct Kkt<'a> {
    qp: &'a ConvexQp,
    env: Envelope,
    scaling: Vec<f64>,
    reg: f64,
}

impl<'a> Kkt<'a> {
    fn new(qp: &'a ConvexQp, reg: f64) -> Self {
        let n = qp.n;
        let me = qp.eq.len();
        let mut pattern: Vec<(usize, usize)> = (0..n + me).map(|i| (i, i)).collect();
        pattern.extend(qp.p.iter().map(|&(i, j, _)| (i, j)));
        for row in &qp.ineq {
            for &(a, _) in row {
                for &(b, _) in row {
                    if a <= b {
                        pattern.push((a, b));
                    }
                }
            }
        }
        for (r, row) in qp.eq.iter().enumerate() {
            for &(c, _) in row {
                pattern.push((c, n + r));
            }
        }
        let mut sign = vec![1.0; n];
        sign.extend(std::iter::repeat(-1.0).take(me));
        Self {
            qp,
            env: Envelope::new(n + me, &pattern, sign),
            scaling: vec![0.0; qp.ineq.len()],
            reg,
        }
    }

    fn factor(&mut self, scaling: &[f64]) {
        let qp = self.qp;
        let n = qp.n;
        self.scaling.copy_from_slice(scaling);
        self.env.clear();
        for &(i, j, v) in &qp.p {
            self.env.add(i, j, v);
        }
        for (row, &d) in qp.ineq.iter().zip(scaling) {
            for (ai, &(a, va)) in row.iter().enumerate() {
                for &(b, vb) in &row[ai..] {
                    if a == b {
                        self.env.add(a, a, d * va * vb);
                    } else {
                        self.env.add(a, b, d * va * vb);
                    }
                }
            }
        }
        for i in 0..n {
            self.env.add(i, i, self.reg);
        }
        for (r, row) in qp.eq.iter().enumerate() {
            for &(c, v) in row {
                self.env.add(c, n + r, v);
            }
            self.env.add(n + r, n + r, -self.reg);
        }
        self.env.factor(self.reg);
    }

    /// Unregularised reduced-KKT product.
    fn multiply(&self, v: &[f64]) -> Vec<f64> {
        let qp = self.qp;
        let n = qp.n;
        let mut out = vec![0.0; v.len()];
        qp.p_times(&v[..n], &mut out[..n]);
        for (row, &d) in qp.ineq.iter().zip(&self.scaling) {
            let g = row_dot(row, &v[..n]) * d;
            for &(c, val) in row {
                out[c] += val * g;
            }
        }
        for (r, row) in qp.eq.iter().enumerate() {
            out[n + r] += row_dot(row, &v[..n]);
            for &(c, val) in row {
                out[c] += val * v[n + r];
            }
        }
        out
    }

    fn solve(&self, rhs: &[f64], refine: usize) -> Vec<f64> {
        let mut sol = self.env.solve(rhs);
        for _ in 0..refine {
            let kx = self.multiply(&sol);
            let resid: Vec<f64> = rhs.iter().zip(&kx).map(|(a, b)| a - b).collect();
            if norm_inf(&resid) <= 1e-14 * (1.0 + norm_inf(rhs)) {
                break;
            }
            let corr = self.env.solve(&resid);
            for (s, c) in sol.iter_mut().zip(&corr) {
                *s += c;
            }
        }
        sol
    }
}

/// Solves `qp` to the relative residual tolerance in `settings`.
pub fn solve_qp(qp: &ConvexQp, settings: &QpSettings) -> Result<QpSolution, QpError> {
    qp.validate()?;
    let n = qp.n;
    let me = qp.eq.len();
    let mi = qp.ineq.len();
    let mut kkt = Kkt::new(qp, settings.static_reg);

    // initial point from the D = I system
    kkt.factor(&vec![1.0; mi]);
    let mut rhs = vec![0.0; n + me];
    for i in 0..n {
        rhs[i] = -qp.q[i];
    }
    add_transpose(&qp.ineq, &qp.ineq_rhs, &mut rhs[..n]);
    rhs[n..].copy_from_slice(&qp.eq_rhs);
    let sol = kkt.solve(&rhs, settings.refine_steps);
    let mut x = sol[..n].to_vec();
    let mut y = sol[n..].to_vec();
    let gx: Vec<f64> = qp.ineq.iter().map(|r| row_dot(r, &x)).collect();
    let mut s: Vec<f64> = qp.ineq_rhs.iter().zip(&gx).map(|(h, g)| h - g).collect();
    let mut z: Vec<f64> = s.iter().map(|v| -v).collect();
    for v in [&mut s, &mut z] {
        let lowest = v.iter().copied().fold(f64::INFINITY, f64::min);
        if lowest.is_finite() && lowest <= 0.0 {
            v.iter_mut().for_each(|e| *e += 1.0 - lowest);
        }
    }
    if !x.iter().chain(&y).all(|v| v.is_finite()) {
        return Err(QpError::NumericalFailure("non-finite initial point".into()));
    }

    let q_scale = norm_inf(&qp.q);
    let b_scale = norm_inf(&qp.eq_rhs);
    let h_scale = norm_inf(&qp.ineq_rhs);
    let mut last = None;

    for iter in 0..=settings.max_iterations {
        // residuals
        let mut px = vec![0.0; n];
        qp.p_times(&x, &mut px);
        let mut aty = vec![0.0; n];
        add_transpose(&qp.eq, &y, &mut aty);
        let mut gtz = vec![0.0; n];
        add_transpose(&qp.ineq, &z, &mut gtz);
        let rd: Vec<f64> = (0..n).map(|i| px[i] + qp.q[i] + aty[i] + gtz[i]).collect();
        let ax: Vec<f64> = qp.eq.iter().map(|r| row_dot(r, &x)).collect();
        let rp: Vec<f64> = ax.iter().zip(&qp.eq_rhs).map(|(a, b)| a - b).collect();
        let gx: Vec<f64> = qp.ineq.iter().map(|r| row_dot(r, &x)).collect();
        let rg: Vec<f64> = (0..mi).map(|i| gx[i] + s[i] - qp.ineq_rhs[i]).collect();
        let gap: f64 = s.iter().zip(&z).map(|(a, b)| a * b).sum();
        let objective = qp.objective(&x);

        let dual_res = norm_inf(&rd)
            / (1.0 + norm_inf(&px).max(q_scale).max(norm_inf(&aty)).max(norm_inf(&gtz)));
        let primal_res = (norm_inf(&rp) / (1.0 + norm_inf(&ax).max(b_scale)))
            .max(norm_inf(&rg) / (1.0 + norm_inf(&gx).max(h_scale)));
        let rel_gap = gap / (1.0 + objective.abs());
        let current = QpSolution {
            x: x.clone(),
            y: y.clone(),
            z: z.clone(),
            objective,
            iterations: iter,
            primal_residual: primal_res,
            dual_residual: dual_res,
            gap,
        };
        if !objective.is_finite() || !gap.is_finite() {
            return Err(QpError::NumericalFailure(format!("non-finite iterate at {iter}")));
        }
        if dual_res <= settings.tolerance
            && primal_res <= settings.tolerance
            && (mi == 0 || rel_gap <= settings.tolerance)
        {
            return Ok(current);
        }
        last = Some(current);
        if iter == settings.max_iterations {
            break;
        }

        let scaling: Vec<f64> = (0..mi).map(|i| z[i] / s[i]).collect();
        kkt.factor(&scaling);
        let mu = if mi > 0 { gap / mi as f64 } else { 0.0 };

        let direction = |rc: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
            let mut w = vec![0.0; mi];
            for i in 0..mi {
                w[i] = scaling[i] * rg[i] - rc[i] / s[i];
            }
            let mut rhs = vec![0.0; n + me];
            for i in 0..n {
                rhs[i] = -rd[i];
            }
            let mut gtw = vec![0.0; n];
            add_transpose(&qp.ineq, &w, &mut gtw);
            for i in 0..n {
                rhs[i] -= gtw[i];
            }
            for r in 0..me {
                rhs[n + r] = -rp[r];
            }
            let sol = kkt.solve(&rhs, settings.refine_steps);
            let dx = sol[..n].to_vec();
            let dy = sol[n..].to_vec();
            let mut dz = vec![0.0; mi];
            let mut ds = vec![0.0; mi];
            for i in 0..mi {
                let gdx = row_dot(&qp.ineq[i], &dx);
                dz[i] = scaling[i] * (gdx + rg[i]) - rc[i] / s[i];
                ds[i] = -(rc[i] + s[i] * dz[i]) / z[i];
            }
            (dx, dy, dz, ds)
        };

        // predictor
        let rc_aff: Vec<f64> = (0..mi).map(|i| s[i] * z[i]).collect();
        let (dx_a, _, dz_a, ds_a) = direction(&rc_aff);
        let alpha_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a));
        let sigma = if mi > 0 {
            let mu_aff: f64 = (0..mi)
                .map(|i| (s[i] + alpha_aff * ds_a[i]) * (z[i] + alpha_aff * dz_a[i]))
                .sum::<f64>()
                / mi as f64;
            (mu_aff / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };
        let _ = dx_a;

        // corrector
        let rc: Vec<f64> = (0..mi)
            .map(|i| s[i] * z[i] + ds_a[i] * dz_a[i] - sigma * mu)
            .collect();
        let (dx, dy, dz, ds) = direction(&rc);
        let alpha = (0.99 * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0);
        if !(alpha > 0.0) || !dx.iter().all(|v| v.is_finite()) {
            return Err(QpError::NumericalFailure(format!("bad step at iteration {iter}")));
        }
        for i in 0..n {
            x[i] += alpha * dx[i];
        }
        for i in 0..me {
            y[i] += alpha * dy[i];
        }
        for i in 0..mi {
            s[i] += alpha * ds[i];
            z[i] += alpha * dz[i];
        }
    }
    Err(QpError::MaxIterations {
        iterations: settings.max_iterations,
        best: Box::new(last.expect("at least one iterate")),
    })
}
