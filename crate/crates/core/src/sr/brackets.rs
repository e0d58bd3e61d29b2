use std::sync::Arc;

use nalgebra::DMatrix;

use super::structure::SubRiemannianStructure;
use crate::error::{invalid, Error, Result};

/// Differencing step for bracket Jacobians. Nested levels amplify round-off
/// by roughly `1/BRACKET_STEP` per level.
const BRACKET_STEP: f64 = 1e-3;

type FieldFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// `[A, B](x) = DB(x)·A(x) − DA(x)·B(x)` with central-difference Jacobians.
fn bracket(a: FieldFn, b: FieldFn, h: f64) -> FieldFn {
    Arc::new(move |x: &[f64]| {
        let va = a(x);
        let vb = b(x);
        let n = x.len();
        let mut out = vec![0.0; n];
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        for k in 0..n {
            if va[k] == 0.0 && vb[k] == 0.0 {
                continue;
            }
            xp[k] = x[k] + h;
            xm[k] = x[k] - h;
            let (bp, bm) = (b(&xp), b(&xm));
            let (ap, am) = (a(&xp), a(&xm));
            for i in 0..n {
                let db = (bp[i] - bm[i]) / (2.0 * h);
                let da = (ap[i] - am[i]) / (2.0 * h);
                out[i] += db * va[k] - da * vb[k];
            }
            xp[k] = x[k];
            xm[k] = x[k];
        }
        out
    })
}

fn numeric_rank(vectors: &[Vec<f64>], n: usize, tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i]);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Numerical Lie bracket `[X_i, X_j]` of two horizontal fields at `x`.
pub fn horizontal_bracket(s: &SubRiemannianStructure, i: usize, j: usize, x: &[f64]) -> Vec<f64> {
    let field = |k: usize| -> FieldFn {
        let f = s.horizontal_frame()[k].clone();
        Arc::new(move |y: &[f64]| f.eval(y))
    };
    bracket(field(i), field(j), BRACKET_STEP)(x)
}

/// Cumulative ranks `dim H_1 < dim H_2 < …` at one point; `H_{j+1} = H_j + [H_1, H_j]`.
fn ranks_at(s: &SubRiemannianStructure, x: &[f64], tol: f64) -> Result<Vec<usize>> {
    let n = s.n();
    let base: Vec<FieldFn> = s
        .horizontal_frame()
        .iter()
        .map(|f| {
            let f = f.clone();
            Arc::new(move |y: &[f64]| f.eval(y)) as FieldFn
        })
        .collect();
    let mut values: Vec<Vec<f64>> = base.iter().map(|f| f(x)).collect();
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return invalid(format!("horizontal frame is not finite at {x:?}"));
    }
    let mut ranks = vec![numeric_rank(&values, n, tol)];
    let mut newest: Vec<FieldFn> = base.clone();
    let mut first_level = true;
    while *ranks.last().unwrap() < n {
        let mut next = Vec::new();
        for (i, xi) in base.iter().enumerate() {
            for (j, z) in newest.iter().enumerate() {
                // [X_i, X_j] = −[X_j, X_i]; [X_i, X_i] = 0
                if first_level && j <= i {
                    continue;
                }
                let f = bracket(xi.clone(), z.clone(), BRACKET_STEP);
                values.push(f(x));
                next.push(f);
            }
        }
        let rank = numeric_rank(&values, n, tol);
        if rank == *ranks.last().unwrap() || next.is_empty() {
            return Err(Error::NotBracketGenerating { rank, n });
        }
        ranks.push(rank);
        newest = next;
        first_level = false;
    }
    Ok(ranks)
}

/// Bracket filtration ranks, required to agree at every sample point.
pub fn filtration_ranks(
    s: &SubRiemannianStructure,
    sample_points: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<usize>> {
    if !(tol > 0.0) {
        return invalid(format!("rank tolerance must be positive, got {tol}"));
    }
    if sample_points.is_empty() {
        return invalid("at least one sample point is required");
    }
    if let Some(p) = sample_points.iter().find(|p| p.len() != s.n()) {
        return invalid(format!(
            "sample point {p:?} does not have {} coordinates",
            s.n()
        ));
    }
    let first = ranks_at(s, &sample_points[0], tol)?;
    for (index, p) in sample_points.iter().enumerate().skip(1) {
        let other = ranks_at(s, p, tol)?;
        if other != first {
            return Err(Error::NonEquiregular {
                first,
                other,
                index,
            });
        }
    }
    Ok(first)
}

/// Deterministic quasi-random points in `[-1, 1]^n` (Kronecker sequence).
pub fn default_sample_points(n: usize, count: usize) -> Vec<Vec<f64>> {
    let alphas: Vec<f64> = (0..n)
        .map(|k| {
            let p = [2.0f64, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0][k % 8];
            p.sqrt().fract()
        })
        .collect();
    (1..=count)
        .map(|i| {
            alphas
                .iter()
                .map(|a| 2.0 * (i as f64 * a).fract() - 1.0)
                .collect()
        })
        .collect()
}
