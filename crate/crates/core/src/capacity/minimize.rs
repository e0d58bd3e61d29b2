//! Box-constrained minimization of the discrete energy with Dirichlet clamps.
//!
//! Projected limited-memory quasi-Newton steps scaled by a fixed diagonal
//! preconditioner, with Armijo backtracking along the projected path. Curvature
//! pairs only act on variables off their bounds.

use std::collections::VecDeque;

use rayon::prelude::*;

use super::energy::EnergyMesh;

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 30;

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    /// Relative energy decrease over `window` iterations that counts as converged.
    pub relative_tolerance: f64,
    pub window: usize,
    pub memory: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            relative_tolerance: 1e-8,
            window: 10,
            memory: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeReport {
    pub energy: f64,
    pub iterations: usize,
    /// 2-norm of the projected gradient at the returned point.
    pub grad_norm: f64,
    pub converged: bool,
}

/// Energy restricted to free nodes; every other node keeps its value in `base`.
pub(crate) struct DirichletProblem {
    pub mesh: EnergyMesh,
    pub p: f64,
    pub free: Vec<usize>,
    gather_start: Vec<usize>,
    gather: Vec<u32>,
    pub base: Vec<f64>,
}

impl DirichletProblem {
    /// `mesh` must list every cell touching a free node.
    pub fn new(mesh: EnergyMesh, p: f64, free: Vec<usize>, base: Vec<f64>) -> Self {
        let nodes = mesh.chart.node_count();
        let mut slot_of = vec![u32::MAX; nodes];
        for (i, &f) in free.iter().enumerate() {
            slot_of[f] = i as u32;
        }
        let corners = mesh.corner_offsets().len();
        let mut counts = vec![0usize; free.len() + 1];
        for &b in &mesh.bases {
            for off in mesh.corner_offsets() {
                let s = slot_of[b + off];
                if s != u32::MAX {
                    counts[s as usize + 1] += 1;
                }
            }
        }
        for i in 0..free.len() {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut gather = vec![0u32; counts[free.len()]];
        for (slot, &b) in mesh.bases.iter().enumerate() {
            for (mask, off) in mesh.corner_offsets().iter().enumerate() {
                let s = slot_of[b + off];
                if s != u32::MAX {
                    gather[fill[s as usize]] = (slot * corners + mask) as u32;
                    fill[s as usize] += 1;
                }
            }
        }
        Self {
            mesh,
            p,
            free,
            gather_start: counts,
            gather,
            base,
        }
    }

    pub fn scatter(&self, x: &[f64], u: &mut [f64]) {
        for (&node, &v) in self.free.iter().zip(x) {
            u[node] = v;
        }
    }

    pub fn energy(&self, x: &[f64], u: &mut [f64]) -> f64 {
        self.scatter(x, u);
        self.mesh.energy(u, self.p)
    }

    fn energy_and_gradient(&self, x: &[f64], work: &mut Work, grad: &mut [f64]) -> f64 {
        self.scatter(x, &mut work.u);
        let e = self
            .mesh
            .energy_and_corner_grads(&work.u, self.p, &mut work.cells);
        let corners = self.mesh.corner_offsets().len();
        let cells = &work.cells;
        grad.par_iter_mut().enumerate().for_each(|(i, g)| {
            *g = self.gather[self.gather_start[i]..self.gather_start[i + 1]]
                .iter()
                .map(|&e| {
                    let e = e as usize;
                    cells[e / corners].1[e % corners]
                })
                .sum();
        });
        e
    }

    /// Diagonal of the linearized operator at `x`, weighted by `|∇_H u|^{p−2}` per cell.
    pub fn preconditioner(&self, x: &[f64]) -> Vec<f64> {
        let mut u = self.base.clone();
        self.scatter(x, &mut u);
        let full = self.mesh.stiffness_diagonal(&u, self.p);
        let diag: Vec<f64> = self.free.iter().map(|&n| full[n]).collect();
        let positive: Vec<f64> = diag.iter().cloned().filter(|v| *v > 0.0).collect();
        let mean = positive.iter().sum::<f64>() / positive.len().max(1) as f64;
        let floor = if mean > 0.0 { 1e-6 * mean } else { 1.0 };
        diag.into_iter().map(|v| v.max(floor)).collect()
    }
}

struct Work {
    u: Vec<f64>,
    cells: Vec<(f64, [f64; 8])>,
}

fn project(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Gradient with components pushing against an active bound zeroed.
fn projected_gradient(x: &[f64], g: &[f64], out: &mut [f64]) {
    for i in 0..x.len() {
        out[i] = if (x[i] <= 0.0 && g[i] > 0.0) || (x[i] >= 1.0 && g[i] < 0.0) {
            0.0
        } else {
            g[i]
        };
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes over `x ∈ [0,1]^k` in place.
pub(crate) fn minimize(
    problem: &DirichletProblem,
    x: &mut [f64],
    options: &MinimizeOptions,
) -> MinimizeReport {
    let k = x.len();
    project(x);
    let mut work = Work {
        u: problem.base.clone(),
        cells: vec![(0.0, [0.0; 8]); problem.mesh.bases.len()],
    };
    let inv_d: Vec<f64> = problem.preconditioner(x).iter().map(|d| 1.0 / d).collect();
    let mut grad = vec![0.0; k];
    let mut energy = problem.energy_and_gradient(x, &mut work, &mut grad);
    let mut pg = vec![0.0; k];
    projected_gradient(x, &grad, &mut pg);
    if k == 0 {
        return MinimizeReport {
            energy,
            iterations: 0,
            grad_norm: 0.0,
            converged: true,
        };
    }

    let mut history: VecDeque<f64> = VecDeque::from([energy]);
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut dir = vec![0.0; k];
    let mut trial = vec![0.0; k];
    let mut trial_grad = vec![0.0; k];
    let mut alpha_buf = vec![0.0; options.memory];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iterations {
        if dot(&pg, &pg) == 0.0 {
            converged = true;
            break;
        }
        let bound: Vec<bool> = (0..k)
            .map(|i| pg[i] == 0.0 && (x[i] <= 0.0 || x[i] >= 1.0))
            .collect();
        // two-loop recursion on the free subspace
        dir.copy_from_slice(&pg);
        for i in 0..k {
            if bound[i] {
                dir[i] = 0.0;
            }
        }
        for (j, (s, y, rho)) in pairs.iter().enumerate().rev() {
            let a = rho * dot(s, &dir);
            alpha_buf[j] = a;
            for i in 0..k {
                if !bound[i] {
                    dir[i] -= a * y[i];
                }
            }
        }
        let gamma = match pairs.back() {
            Some((s, y, _)) => {
                let yhy: f64 = (0..k).map(|i| y[i] * y[i] * inv_d[i]).sum();
                if yhy > 0.0 {
                    dot(s, y) / yhy
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        for i in 0..k {
            dir[i] *= gamma * inv_d[i];
        }
        for (j, (s, y, rho)) in pairs.iter().enumerate() {
            let b = rho * dot(y, &dir);
            for i in 0..k {
                if !bound[i] {
                    dir[i] += (alpha_buf[j] - b) * s[i];
                }
            }
        }
        for v in dir.iter_mut() {
            *v = -*v;
        }
        if pairs.is_empty() && dot(&dir, &pg) >= 0.0 {
            break;
        }
        if dot(&dir, &pg) >= 0.0 {
            pairs.clear();
            continue;
        }
        if pairs.is_empty() {
            // first step of a memory cycle: largest move is a tenth of the box
            let m = dir.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if m > 0.1 {
                dir.iter_mut().for_each(|v| *v *= 0.1 / m);
            }
        }

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..k {
                trial[i] = (x[i] + step * dir[i]).clamp(0.0, 1.0);
            }
            let decrease: f64 = (0..k).map(|i| grad[i] * (trial[i] - x[i])).sum();
            if decrease >= 0.0 {
                step *= 0.5;
                continue;
            }
            let e = problem.energy_and_gradient(&trial, &mut work, &mut trial_grad);
            if e <= energy + ARMIJO_C1 * decrease {
                let s: Vec<f64> = (0..k).map(|i| trial[i] - x[i]).collect();
                let y: Vec<f64> = (0..k).map(|i| trial_grad[i] - grad[i]).collect();
                let sy = dot(&s, &y);
                if sy > 1e-16 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
                    if pairs.len() == options.memory {
                        pairs.pop_front();
                    }
                    pairs.push_back((s, y, 1.0 / sy));
                }
                x.copy_from_slice(&trial);
                grad.copy_from_slice(&trial_grad);
                energy = e;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            if pairs.is_empty() {
                break;
            }
            pairs.clear();
            continue;
        }
        projected_gradient(x, &grad, &mut pg);
        history.push_back(energy);
        if history.len() > options.window + 1 {
            history.pop_front();
        }
        if history.len() == options.window + 1 {
            let old = history[0];
            if (old - energy) <= options.relative_tolerance * energy.abs() {
                converged = true;
                break;
            }
        }
    }
    MinimizeReport {
        energy,
        iterations,
        grad_norm: dot(&pg, &pg).sqrt(),
        converged,
    }
}
