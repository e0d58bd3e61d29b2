//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use carnot_core::sr::SubRiemannianStructure;
use carnot_core::GridChart;
use nalgebra::{DMatrix, DVector};

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

fn segment_length(
    s: &SubRiemannianStructure,
    a: &[f64],
    b: &[f64],
    tau: f64,
    pieces: usize,
) -> f64 {
    let v = DVector::from_iterator(a.len(), a.iter().zip(b).map(|(x, y)| y - x));
    let speed = |t: f64| -> f64 {
        let x: Vec<f64> = a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect();
        let m: DMatrix<f64> = s.g_tau_tensor(&x, tau).expect("regular frame");
        (v.transpose() * m * &v)[(0, 0)].max(0.0).sqrt()
    };
    // composite Simpson
    let h = 1.0 / pieces as f64;
    let mut acc = 0.0;
    for i in 0..pieces {
        let t0 = i as f64 * h;
        acc += h / 6.0 * (speed(t0) + 4.0 * speed(t0 + 0.5 * h) + speed(t0 + h));
    }
    acc
}

/// Shortest-path distances on the grid graph whose edges join each node to its
/// `3^n − 1` neighbours, weighted by the `g_τ` length of the straight segment.
pub fn dijkstra_oracle(
    s: &SubRiemannianStructure,
    chart: &GridChart,
    origin_node: usize,
    tau: f64,
) -> Vec<f64> {
    let n = chart.dim();
    let res = chart.resolution().to_vec();
    let steps: Vec<Vec<i64>> = (0..3usize.pow(n as u32))
        .map(|code| {
            let mut c = code;
            (0..n)
                .map(|_| {
                    let v = (c % 3) as i64 - 1;
                    c /= 3;
                    v
                })
                .collect()
        })
        .filter(|v: &Vec<i64>| v.iter().any(|&x| x != 0))
        .collect();
    let mut dist = vec![f64::INFINITY; chart.node_count()];
    let mut done = vec![false; chart.node_count()];
    let mut heap = BinaryHeap::new();
    dist[origin_node] = 0.0;
    heap.push(Entry(0.0, origin_node));
    while let Some(Entry(d, i)) = heap.pop() {
        if done[i] {
            continue;
        }
        done[i] = true;
        let mi = chart.multi_index(i);
        let xi = chart.node_coords(i);
        for st in &steps {
            let mj: Option<Vec<usize>> = (0..n)
                .map(|k| {
                    let j = mi[k] as i64 + st[k];
                    (j >= 0 && (j as usize) < res[k]).then_some(j as usize)
                })
                .collect();
            let Some(mj) = mj else { continue };
            let j = chart.flat_index(&mj);
            if done[j] {
                continue;
            }
            let w = segment_length(s, &xi, &chart.node_coords(j), tau, 2);
            if d + w < dist[j] {
                dist[j] = d + w;
                heap.push(Entry(d + w, j));
            }
        }
    }
    dist
}

/// Exact Carnot distance from the origin in the Heisenberg model
/// `X = ∂x − (y/2)∂t`, `Y = ∂y + (x/2)∂t`.
///
/// Geodesics are circular arcs in the plane: turning angle `φ`, curvature `κ`,
/// chord `r = 2 sin(φ/2)/κ` and swept area `|t| = (φ − sin φ)/(2κ²)`, so
/// `|t|/r² = (φ − sin φ)/(8 sin²(φ/2))` fixes `φ ∈ [0, 2π)` and the length is `φ/κ`.
pub fn heisenberg_exact_distance(x: f64, y: f64, t: f64) -> f64 {
    use std::f64::consts::PI;
    let r = x.hypot(y);
    let t = t.abs();
    if t == 0.0 {
        return r;
    }
    if r == 0.0 {
        return (4.0 * PI * t).sqrt();
    }
    let target = t / (r * r);
    let ratio = |phi: f64| (phi - phi.sin()) / (8.0 * (0.5 * phi).sin().powi(2));
    let (mut lo, mut hi) = (0.0, 2.0 * PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let phi = 0.5 * (lo + hi);
    phi * r / (2.0 * (0.5 * phi).sin())
}
