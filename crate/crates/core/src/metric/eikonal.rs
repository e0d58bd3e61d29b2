//! Semi-Lagrangian fast sweeping for `|∇u|_{g_τ*} = 1`.
//!
//! At a node `x` the update is `min_z u(x+z) + |z|_{g_τ(x)}` over `z` on the
//! boundary of the `3^n` neighbourhood cube, interpolated linearly on a
//! triangulation of that boundary (the Kuhn facets of every orthant). Each face
//! is solved in closed form; the global minimum over the closed faces equals
//! the smallest feasible relative-interior stationary value, so vertices, edges
//! and triangles are enumerated once without recursion.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, SMatrix};
use rayon::prelude::*;

use crate::chart::{permutations, GridChart, ScalarField};
use crate::error::{invalid, Error, Result};
use crate::sr::SubRiemannianStructure;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EikonalOptions {
    /// Converged when a full cycle of sweeps changes no node by more than
    /// `tolerance × chart diameter`.
    pub tolerance: f64,
    /// One cycle is `2^n` sweeps.
    pub max_cycles: usize,
}

impl Default for EikonalOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_cycles: 400,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EikonalSolution {
    pub field: ScalarField,
    pub cycles: usize,
    pub residual: f64,
}

/// `g_τ` distance from `origin`.
pub fn solve_eikonal(
    s: &SubRiemannianStructure,
    chart: &GridChart,
    origin: &[f64],
    tau: f64,
) -> Result<ScalarField> {
    Ok(solve_eikonal_with(s, chart, origin, tau, None, &EikonalOptions::default())?.field)
}

/// As [`solve_eikonal`]; every update is kept `>= floor` when a floor is given.
pub fn solve_eikonal_with(
    s: &SubRiemannianStructure,
    chart: &GridChart,
    origin: &[f64],
    tau: f64,
    floor: Option<&ScalarField>,
    options: &EikonalOptions,
) -> Result<EikonalSolution> {
    if !(tau > 0.0) {
        return invalid(format!("tau must be positive, got {tau}"));
    }
    if chart.dim() != s.n() {
        return invalid(format!(
            "chart has {} axes but the structure has dimension {}",
            chart.dim(),
            s.n()
        ));
    }
    if origin.len() != chart.dim() || !chart.contains(origin) {
        return Err(Error::OutsideChart {
            point: origin.to_vec(),
        });
    }
    if let Some(f) = floor {
        if !f.chart().same_grid(chart) {
            return invalid("floor field lives on a different chart");
        }
    }
    let floor = floor.map(|f| f.values());
    match chart.dim() {
        1 => Solver::<1>::new(s, chart, origin, tau)?.run(floor, options),
        2 => Solver::<2>::new(s, chart, origin, tau)?.run(floor, options),
        3 => Solver::<3>::new(s, chart, origin, tau)?.run(floor, options),
        n => invalid(format!(
            "eikonal solver supports 1 to 3 dimensions, got {n}"
        )),
    }
}

/// Scaled metric `H M H` (H = diag(spacing)) in index units.
pub(crate) fn index_metric<const N: usize>(
    s: &SubRiemannianStructure,
    chart: &GridChart,
    x: &[f64],
    tau: f64,
) -> Option<SMatrix<f64, N, N>> {
    let d = s.d();
    let mut f = SMatrix::<f64, N, N>::zeros();
    for (j, field) in s.full_frame().enumerate() {
        for (k, c) in field.coefficients().iter().enumerate() {
            f[(k, j)] = c.eval(x);
        }
    }
    let inv = f.try_inverse()?;
    let mut w = SMatrix::<f64, N, N>::identity();
    for i in d..N {
        w[(i, i)] = 1.0 / (tau * tau);
    }
    let mut m = inv.transpose() * w * inv;
    let h = chart.spacing();
    for a in 0..N {
        for b in 0..N {
            m[(a, b)] *= h[a] * h[b];
        }
    }
    if m.iter().all(|v| v.is_finite()) {
        Some(m)
    } else {
        None
    }
}

struct Stencil<const N: usize> {
    vecs: Vec<[f64; N]>,
    steps: Vec<[i32; N]>,
    offsets: Vec<isize>,
    edges: Vec<(usize, usize)>,
    tris: Vec<(usize, usize, usize)>,
}

impl<const N: usize> Stencil<N> {
    fn new(strides: &[usize]) -> Self {
        let mut steps: Vec<[i32; N]> = Vec::new();
        let total = 3usize.pow(N as u32);
        for code in 0..total {
            let mut v = [0i32; N];
            let mut c = code;
            for k in 0..N {
                v[k] = (c % 3) as i32 - 1;
                c /= 3;
            }
            if v.iter().any(|&x| x != 0) {
                steps.push(v);
            }
        }
        let id = |v: &[i32; N]| steps.iter().position(|w| w == v).unwrap();
        let mut edges = BTreeSet::new();
        let mut tris = BTreeSet::new();
        for signs in 0..1usize << N {
            for perm in permutations(N) {
                let mut cur = [0i32; N];
                let mut chain = Vec::with_capacity(N);
                for &k in &perm {
                    cur[k] = if signs >> k & 1 == 1 { -1 } else { 1 };
                    chain.push(id(&cur));
                }
                for i in 0..N {
                    for j in i + 1..N {
                        edges.insert((chain[i].min(chain[j]), chain[i].max(chain[j])));
                    }
                }
                if N == 3 {
                    let mut t = [chain[0], chain[1], chain[2]];
                    t.sort_unstable();
                    tris.insert((t[0], t[1], t[2]));
                }
            }
        }
        let vecs = steps
            .iter()
            .map(|v| {
                let mut f = [0.0; N];
                for k in 0..N {
                    f[k] = v[k] as f64;
                }
                f
            })
            .collect();
        let offsets = steps
            .iter()
            .map(|v| (0..N).map(|k| v[k] as isize * strides[k] as isize).sum())
            .collect();
        Self {
            vecs,
            steps,
            offsets,
            edges: edges.into_iter().collect(),
            tris: tris.into_iter().collect(),
        }
    }
}

struct Solver<const N: usize> {
    chart: GridChart,
    stencil: Stencil<N>,
    metric: Vec<SMatrix<f64, N, N>>,
    /// `sqrt(λ_min)` of the index metric: lower bound of `|z|` over the cube boundary.
    lower: Vec<f64>,
    fixed: Vec<Option<f64>>,
}

#[inline]
fn quad<const N: usize>(m: &SMatrix<f64, N, N>, a: &[f64; N], b: &[f64; N]) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        if a[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..N {
            row += m[(i, j)] * b[j];
        }
        s += a[i] * row;
    }
    s
}

impl<const N: usize> Solver<N> {
    fn new(
        s: &SubRiemannianStructure,
        chart: &GridChart,
        origin: &[f64],
        tau: f64,
    ) -> Result<Self> {
        let nodes = chart.node_count();
        let pairs: Vec<Option<(SMatrix<f64, N, N>, f64)>> = (0..nodes)
            .into_par_iter()
            .map(|i| {
                let x = chart.node_coords(i);
                let m = index_metric::<N>(s, chart, &x, tau)?;
                let lam = DMatrix::from_iterator(N, N, m.iter().cloned())
                    .symmetric_eigenvalues()
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                (lam > 0.0).then(|| (m, lam.sqrt()))
            })
            .collect();
        let mut metric = Vec::with_capacity(nodes);
        let mut lower = Vec::with_capacity(nodes);
        for (i, p) in pairs.into_iter().enumerate() {
            match p {
                Some((m, l)) => {
                    metric.push(m);
                    lower.push(l);
                }
                None => {
                    return invalid(format!(
                        "frame is singular at {:?}; g_tau is undefined there",
                        chart.node_coords(i)
                    ))
                }
            }
        }

        // Seed: the origin node if it sits on one, else the corners of its cell.
        let mut fixed = vec![None; nodes];
        let om = index_metric::<N>(s, chart, origin, tau)
            .ok_or_else(|| Error::InvalidInput("frame is singular at the origin".into()))?;
        let (base, frac) = chart.locate(origin).expect("origin checked inside chart");
        let on_node = frac.iter().all(|&f| f < 1e-9 || f > 1.0 - 1e-9);
        if on_node {
            fixed[chart.nearest_node(origin)] = Some(0.0);
        }
        for mask in 0..(if on_node { 0 } else { 1usize << N }) {
            let mut multi = base.clone();
            let mut dz = [0.0; N];
            for k in 0..N {
                let up = mask >> k & 1 == 1;
                if up {
                    multi[k] += 1;
                }
                dz[k] = if up { 1.0 - frac[k] } else { -frac[k] };
            }
            let idx = chart.flat_index(&multi);
            fixed[idx] = Some(quad(&om, &dz, &dz).max(0.0).sqrt());
        }
        Ok(Self {
            chart: chart.clone(),
            stencil: Stencil::new(chart.strides()),
            metric,
            lower,
            fixed,
        })
    }

    #[inline]
    fn local_update(&self, node: usize, multi: &[usize; N], u: &[f64], best_so_far: f64) -> f64 {
        let st = &self.stencil;
        let res = self.chart.resolution();
        let m = &self.metric[node];
        let k_count = st.vecs.len();
        let mut vals = [f64::INFINITY; 26];
        let mut umin = f64::INFINITY;
        let interior = (0..N).all(|k| multi[k] > 0 && multi[k] + 1 < res[k]);
        for k in 0..k_count {
            if !interior {
                let ok = (0..N).all(|a| {
                    let j = multi[a] as i64 + st.steps[k][a] as i64;
                    j >= 0 && (j as usize) < res[a]
                });
                if !ok {
                    continue;
                }
            }
            let v = u[(node as isize + st.offsets[k]) as usize];
            vals[k] = v;
            umin = umin.min(v);
        }
        let lb = self.lower[node];
        let mut best = best_so_far;
        if umin + lb >= best {
            return best;
        }
        let mut diag = [0.0f64; 26];
        for k in 0..k_count {
            if vals[k].is_finite() {
                diag[k] = quad(m, &st.vecs[k], &st.vecs[k]);
                let cand = vals[k] + diag[k].sqrt();
                if cand < best {
                    best = cand;
                }
            }
        }
        for &(a, b) in &st.edges {
            let (ua, ub) = (vals[a], vals[b]);
            if !(ua.is_finite() && ub.is_finite()) || ua.min(ub) + lb >= best {
                continue;
            }
            let pab = quad(m, &st.vecs[a], &st.vecs[b]);
            let g = diag[b] - 2.0 * pab + diag[a];
            let bb = pab - diag[a];
            let c = diag[a];
            let du = ub - ua;
            let w2 = du * du / g;
            if w2 >= 1.0 {
                continue;
            }
            let sq = c - bb * bb / g;
            if sq <= 0.0 {
                continue;
            }
            let q = (sq / (1.0 - w2)).sqrt();
            let mu = -(bb + q * du) / g;
            if mu > 0.0 && mu < 1.0 {
                let cand = ua + mu * du + q;
                if cand < best {
                    best = cand;
                }
            }
        }
        for &(a, b, c3) in &st.tris {
            let (ua, ub, uc) = (vals[a], vals[b], vals[c3]);
            if !(ua.is_finite() && ub.is_finite() && uc.is_finite())
                || ua.min(ub).min(uc) + lb >= best
            {
                continue;
            }
            let pab = quad(m, &st.vecs[a], &st.vecs[b]);
            let pac = quad(m, &st.vecs[a], &st.vecs[c3]);
            let pbc = quad(m, &st.vecs[b], &st.vecs[c3]);
            let paa = diag[a];
            let g11 = diag[b] - 2.0 * pab + paa;
            let g22 = diag[c3] - 2.0 * pac + paa;
            let g12 = pbc - pab - pac + paa;
            let b1 = pab - paa;
            let b2 = pac - paa;
            let det = g11 * g22 - g12 * g12;
            if det <= 0.0 {
                continue;
            }
            let (i11, i22, i12) = (g22 / det, g11 / det, -g12 / det);
            let (d1, d2) = (ub - ua, uc - ua);
            let w2 = d1 * (i11 * d1 + i12 * d2) + d2 * (i12 * d1 + i22 * d2);
            if w2 >= 1.0 {
                continue;
            }
            let sq = paa - (b1 * (i11 * b1 + i12 * b2) + b2 * (i12 * b1 + i22 * b2));
            if sq <= 0.0 {
                continue;
            }
            let q = (sq / (1.0 - w2)).sqrt();
            let r1 = b1 + q * d1;
            let r2 = b2 + q * d2;
            let mu1 = -(i11 * r1 + i12 * r2);
            let mu2 = -(i12 * r1 + i22 * r2);
            if mu1 > 0.0 && mu2 > 0.0 && mu1 + mu2 < 1.0 {
                let cand = ua + mu1 * d1 + mu2 * d2 + q;
                if cand < best {
                    best = cand;
                }
            }
        }
        best
    }

    fn run(self, floor: Option<&[f64]>, options: &EikonalOptions) -> Result<EikonalSolution> {
        let nodes = self.chart.node_count();
        let res: Vec<usize> = self.chart.resolution().to_vec();
        let strides: Vec<usize> = self.chart.strides().to_vec();
        let tol = options.tolerance * self.chart.diameter();
        let mut u = vec![f64::INFINITY; nodes];
        let mut active = vec![true; nodes];
        for (i, f) in self.fixed.iter().enumerate() {
            if let Some(v) = f {
                u[i] = floor.map_or(*v, |fl| v.max(fl[i]));
                active[i] = false;
            }
        }
        let mut residual = f64::INFINITY;
        let mut cycles = 0;
        while cycles < options.max_cycles {
            cycles += 1;
            let mut cycle_change = 0.0f64;
            let mut any_active = false;
            for order in 0..1usize << N {
                let mut multi = [0usize; N];
                // Odometer over the grid in the direction given by `order`.
                for k in 0..N {
                    multi[k] = if order >> k & 1 == 1 { res[k] - 1 } else { 0 };
                }
                'sweep: loop {
                    let node: usize = (0..N).map(|k| multi[k] * strides[k]).sum();
                    if active[node] {
                        any_active = true;
                        active[node] = false;
                        let old = u[node];
                        let mut new = self.local_update(node, &multi, &u, old);
                        if let Some(fl) = floor {
                            new = new.max(fl[node]);
                        }
                        if new < old {
                            u[node] = new;
                            let change = if old.is_finite() {
                                old - new
                            } else {
                                f64::INFINITY
                            };
                            cycle_change = cycle_change.max(change);
                            if change > tol {
                                self.activate_neighbours(node, &multi, &mut active);
                            }
                        }
                    }
                    let mut k = N;
                    loop {
                        if k == 0 {
                            break 'sweep;
                        }
                        k -= 1;
                        let backward = order >> k & 1 == 1;
                        if backward {
                            if multi[k] > 0 {
                                multi[k] -= 1;
                                break;
                            }
                            multi[k] = res[k] - 1;
                        } else {
                            if multi[k] + 1 < res[k] {
                                multi[k] += 1;
                                break;
                            }
                            multi[k] = 0;
                        }
                    }
                }
            }
            residual = cycle_change;
            if !any_active || cycle_change <= tol {
                let field = ScalarField::new(self.chart.clone(), u)?;
                return Ok(EikonalSolution {
                    field,
                    cycles,
                    residual: if any_active { residual } else { 0.0 },
                });
            }
        }
        Err(Error::NonConvergence {
            iterations: cycles,
            residual,
        })
    }

    fn activate_neighbours(&self, node: usize, multi: &[usize; N], active: &mut [bool]) {
        let res = self.chart.resolution();
        let st = &self.stencil;
        for k in 0..st.steps.len() {
            let ok = (0..N).all(|a| {
                let j = multi[a] as i64 + st.steps[k][a] as i64;
                j >= 0 && (j as usize) < res[a]
            });
            if ok {
                let nb = (node as isize + st.offsets[k]) as usize;
                if self.fixed[nb].is_none() {
                    active[nb] = true;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sr::build_builtin;

    #[test]
    fn stencil_sizes() {
        let s3 = Stencil::<3>::new(&[9, 3, 1]);
        assert_eq!(s3.vecs.len(), 26);
        assert_eq!(s3.tris.len(), 48);
        assert_eq!(s3.edges.len(), 72);
        let s2 = Stencil::<2>::new(&[3, 1]);
        assert_eq!((s2.vecs.len(), s2.edges.len(), s2.tris.len()), (8, 8, 0));
    }

    #[test]
    fn euclidean_plane_distance() {
        let e = build_builtin("euclidean", &[2]).unwrap();
        let c = GridChart::new(vec![-2.0, -2.0], vec![2.0, 2.0], vec![81, 81]).unwrap();
        let u = solve_eikonal(&e, &c, &[0.0, 0.0], 1.0).unwrap();
        let h = c.spacing()[0];
        for i in 0..c.node_count() {
            let x = c.node_coords(i);
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            assert!(
                (u.values()[i] - r).abs() < 2.0 * h,
                "at {x:?}: {} vs {r}",
                u.values()[i]
            );
        }
        // axis points are exact
        assert!((u.values()[c.nearest_node(&[1.0, 0.0])] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn euclidean_space_distance() {
        let e = build_builtin("euclidean", &[3]).unwrap();
        let c = GridChart::new(vec![-1.0; 3], vec![1.0; 3], vec![21; 3]).unwrap();
        let u = solve_eikonal(&e, &c, &[0.0; 3], 1.0).unwrap();
        let h = c.spacing()[0];
        for i in 0..c.node_count() {
            let x = c.node_coords(i);
            let r = (x.iter().map(|v| v * v).sum::<f64>()).sqrt();
            assert!((u.values()[i] - r).abs() < 2.0 * h);
        }
    }

    #[test]
    fn off_node_origin_seeds_cell_corners() {
        let e = build_builtin("euclidean", &[2]).unwrap();
        let c = GridChart::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![21, 21]).unwrap();
        let u = solve_eikonal(&e, &c, &[0.03, 0.02], 1.0).unwrap();
        let i = c.nearest_node(&[0.0, 0.0]);
        assert!((u.values()[i] - (0.03f64.hypot(0.02))).abs() < 1e-12);
    }

    #[test]
    fn floor_is_respected() {
        let h = build_builtin("heisenberg_cc", &[1]).unwrap();
        let c = GridChart::new(vec![-1.0; 3], vec![1.0; 3], vec![13; 3]).unwrap();
        let big = solve_eikonal(&h, &c, &[0.0; 3], 1.0).unwrap();
        let small = solve_eikonal_with(
            &h,
            &c,
            &[0.0; 3],
            0.3,
            Some(&big),
            &EikonalOptions::default(),
        )
        .unwrap()
        .field;
        assert!(small.values().iter().zip(big.values()).all(|(s, b)| s >= b));
    }

    #[test]
    fn rejects_bad_inputs() {
        let e = build_builtin("euclidean", &[2]).unwrap();
        let c = GridChart::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![5, 5]).unwrap();
        assert!(matches!(
            solve_eikonal(&e, &c, &[3.0, 0.0], 1.0),
            Err(Error::OutsideChart { .. })
        ));
        assert!(solve_eikonal(&e, &c, &[0.0, 0.0], 0.0).is_err());
    }
}
