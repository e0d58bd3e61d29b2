use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::function::ScalarFn;

/// A vector field `Σ_k a_k(x) ∂_k` given by its coordinate coefficients.
#[derive(Debug, Clone)]
pub struct VectorFieldSpec {
    label: String,
    coefficients: Vec<ScalarFn>,
}

impl VectorFieldSpec {
    pub fn new(label: impl Into<String>, coefficients: Vec<ScalarFn>) -> Self {
        Self {
            label: label.into(),
            coefficients,
        }
    }

    /// The coordinate field `∂_axis` in dimension `n`.
    pub fn coordinate(label: impl Into<String>, n: usize, axis: usize) -> Self {
        let coefficients = (0..n)
            .map(|k| ScalarFn::Const(if k == axis { 1.0 } else { 0.0 }))
            .collect();
        Self::new(label, coefficients)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn coefficients(&self) -> &[ScalarFn] {
        &self.coefficients
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.coefficients) {
            *o = c.eval(x);
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.eval(x)).collect()
    }

    /// Every coefficient multiplied by `factor(x)`.
    pub fn scaled_by(&self, factor: &ScalarFn) -> Self {
        Self {
            label: self.label.clone(),
            coefficients: self.coefficients.iter().map(|c| c.mul(factor)).collect(),
        }
    }
}

impl fmt::Display for VectorFieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = (", self.label)?;
        for (k, c) in self.coefficients.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Horizontal frame (declared orthonormal), complement frame, bracket
/// filtration and volume density of a sub-Riemannian manifold in one chart.
#[derive(Debug, Clone)]
pub struct SubRiemannianStructure {
    name: String,
    coordinates: Vec<String>,
    horizontal: Vec<VectorFieldSpec>,
    complement: Vec<VectorFieldSpec>,
    filtration_ranks: Vec<usize>,
    hausdorff_dim: usize,
    density: ScalarFn,
}

impl SubRiemannianStructure {
    pub fn new(
        name: impl Into<String>,
        coordinates: Vec<String>,
        horizontal: Vec<VectorFieldSpec>,
        complement: Vec<VectorFieldSpec>,
        filtration_ranks: Vec<usize>,
        density: ScalarFn,
    ) -> Result<Self> {
        let n = coordinates.len();
        let d = horizontal.len();
        if n == 0 {
            return invalid("structure needs at least one coordinate");
        }
        if d == 0 || d > n {
            return invalid(format!(
                "horizontal rank must satisfy 1 <= d <= n, got d={d}, n={n}"
            ));
        }
        if d + complement.len() != n {
            return invalid(format!(
                "horizontal ({d}) and complement ({}) fields must together number n={n}",
                complement.len()
            ));
        }
        if let Some(bad) = horizontal.iter().chain(&complement).find(|f| f.dim() != n) {
            return invalid(format!(
                "field `{}` has {} coefficients, expected {n}",
                bad.label(),
                bad.dim()
            ));
        }
        let m = hausdorff_dimension(&filtration_ranks)?;
        if filtration_ranks[0] != d {
            return invalid(format!(
                "filtration must start at the horizontal rank {d}, got {:?}",
                filtration_ranks
            ));
        }
        if *filtration_ranks.last().unwrap() != n {
            return invalid(format!(
                "filtration must end at n={n}, got {:?}",
                filtration_ranks
            ));
        }
        Ok(Self {
            name: name.into(),
            coordinates,
            horizontal,
            complement,
            filtration_ranks,
            hausdorff_dim: m,
            density,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Topological dimension.
    pub fn n(&self) -> usize {
        self.coordinates.len()
    }

    /// Horizontal rank.
    pub fn d(&self) -> usize {
        self.horizontal.len()
    }

    /// Hausdorff dimension of the Carnot–Carathéodory metric.
    pub fn m(&self) -> usize {
        self.hausdorff_dim
    }

    pub fn coordinates(&self) -> &[String] {
        &self.coordinates
    }

    pub fn horizontal_frame(&self) -> &[VectorFieldSpec] {
        &self.horizontal
    }

    pub fn complement_frame(&self) -> &[VectorFieldSpec] {
        &self.complement
    }

    pub fn filtration_ranks(&self) -> &[usize] {
        &self.filtration_ranks
    }

    pub fn density(&self) -> &ScalarFn {
        &self.density
    }

    /// All `n` frame fields, horizontal first.
    pub fn full_frame(&self) -> impl Iterator<Item = &VectorFieldSpec> {
        self.horizontal.iter().chain(&self.complement)
    }

    /// Replace frames and density, keeping the filtration (used by conformal rescaling).
    pub(crate) fn with_frames(
        &self,
        horizontal: Vec<VectorFieldSpec>,
        complement: Vec<VectorFieldSpec>,
        density: ScalarFn,
    ) -> Self {
        Self {
            name: self.name.clone(),
            coordinates: self.coordinates.clone(),
            horizontal,
            complement,
            filtration_ranks: self.filtration_ranks.clone(),
            hausdorff_dim: self.hausdorff_dim,
            density,
        }
    }

    /// Horizontal frame at `x` as a row-major `d × n` array.
    pub fn horizontal_at(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n();
        for (i, field) in self.horizontal.iter().enumerate() {
            field.eval_into(x, &mut out[i * n..(i + 1) * n]);
        }
    }

    /// Frame matrix at `x` whose columns are `X_1, …, X_n`.
    pub fn frame_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let mut f = DMatrix::zeros(n, n);
        for (j, field) in self.full_frame().enumerate() {
            for (k, c) in field.coefficients().iter().enumerate() {
                f[(k, j)] = c.eval(x);
            }
        }
        f
    }

    /// Coordinate metric tensor of `g_τ` at `x`: the frame `X_1..X_d, τX_{d+1}..τX_n`
    /// is orthonormal. Returns `None` where the frame is singular.
    pub fn g_tau_tensor(&self, x: &[f64], tau: f64) -> Option<DMatrix<f64>> {
        let n = self.n();
        let d = self.d();
        let inv = self.frame_matrix(x).try_inverse()?;
        let mut weights = DVector::from_element(n, 1.0);
        for i in d..n {
            weights[i] = 1.0 / (tau * tau);
        }
        let w = DMatrix::from_diagonal(&weights);
        Some(inv.transpose() * w * inv)
    }

    /// `g_τ` length of a vector given by its frame coefficients.
    pub fn g_tau_norm(&self, frame_coeffs: &[f64], tau: f64) -> Result<f64> {
        g_tau_norm(frame_coeffs, self.d(), tau)
    }

    /// Summary used by reports.
    pub fn summary(&self) -> StructureSummary {
        StructureSummary {
            name: self.name.clone(),
            n: self.n(),
            d: self.d(),
            filtration_ranks: self.filtration_ranks.clone(),
            m: self.m(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureSummary {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub filtration_ranks: Vec<usize>,
    pub m: usize,
}

/// `m = Σ_j j · (ranks[j] − ranks[j−1])` with `ranks[0] = 0`.
pub fn hausdorff_dimension(ranks: &[usize]) -> Result<usize> {
    if ranks.is_empty() {
        return invalid("rank sequence is empty");
    }
    let mut prev = 0;
    let mut m = 0;
    for (j, &r) in ranks.iter().enumerate() {
        if r <= prev {
            return invalid(format!(
                "rank sequence {ranks:?} is not strictly increasing"
            ));
        }
        m += (j + 1) * (r - prev);
        prev = r;
    }
    Ok(m)
}

/// `sqrt(Σ_{i<d} v_i² + Σ_{i≥d} (v_i/τ)²)` for frame coefficients `v`.
pub fn g_tau_norm(frame_coeffs: &[f64], d: usize, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return invalid(format!("tau must be positive, got {tau}"));
    }
    let s: f64 = frame_coeffs
        .iter()
        .enumerate()
        .map(|(i, v)| if i < d { v * v } else { (v / tau) * (v / tau) })
        .sum();
    Ok(s.sqrt())
}

/// Built-in structures: `euclidean(n)`, `heisenberg_cc(l)`, `heisenberg_riemannian(l)`.
///
/// The Heisenberg group of topological dimension `2l+1` uses coordinates
/// `(x_1..x_l, y_1..y_l, t)` with `X_i = ∂x_i − (y_i/2)∂t`, `Y_i = ∂y_i + (x_i/2)∂t`
/// and `T = ∂t`. For `l = 1` the coordinates are named `x, y, t`.
pub fn build_builtin(name: &str, params: &[usize]) -> Result<SubRiemannianStructure> {
    let param = |default: usize| -> Result<usize> {
        match params {
            [] => Ok(default),
            [p] if *p >= 1 => Ok(*p),
            _ => invalid(format!(
                "`{name}` takes one positive integer parameter, got {params:?}"
            )),
        }
    };
    match name {
        "euclidean" => {
            let n = param(2)?;
            let coordinates: Vec<String> = match n {
                1 => vec!["x".into()],
                2 => vec!["x".into(), "y".into()],
                3 => vec!["x".into(), "y".into(), "z".into()],
                _ => (1..=n).map(|k| format!("x{k}")).collect(),
            };
            let frame = (0..n)
                .map(|k| VectorFieldSpec::coordinate(format!("D{}", coordinates[k]), n, k))
                .collect();
            SubRiemannianStructure::new(
                format!("euclidean({n})"),
                coordinates,
                frame,
                vec![],
                vec![n],
                ScalarFn::one(),
            )
        }
        "heisenberg_cc" | "heisenberg_riemannian" => {
            let l = param(1)?;
            let n = 2 * l + 1;
            let coordinates: Vec<String> = if l == 1 {
                vec!["x".into(), "y".into(), "t".into()]
            } else {
                (1..=l)
                    .map(|i| format!("x{i}"))
                    .chain((1..=l).map(|i| format!("y{i}")))
                    .chain(std::iter::once("t".to_string()))
                    .collect()
            };
            let (horizontal, complement) = heisenberg_frames(l);
            if name == "heisenberg_cc" {
                SubRiemannianStructure::new(
                    format!("heisenberg_cc({l})"),
                    coordinates,
                    horizontal,
                    complement,
                    vec![2 * l, n],
                    ScalarFn::one(),
                )
            } else {
                let all = horizontal.into_iter().chain(complement).collect();
                SubRiemannianStructure::new(
                    format!("heisenberg_riemannian({l})"),
                    coordinates,
                    all,
                    vec![],
                    vec![n],
                    ScalarFn::one(),
                )
            }
        }
        other => Err(Error::UnknownStructure(other.to_string())),
    }
}

fn heisenberg_frames(l: usize) -> (Vec<VectorFieldSpec>, Vec<VectorFieldSpec>) {
    let n = 2 * l + 1;
    let t = n - 1;
    let mut horizontal = Vec::with_capacity(2 * l);
    let suffix = |i: usize| {
        if l == 1 {
            String::new()
        } else {
            (i + 1).to_string()
        }
    };
    for i in 0..l {
        // X_i = ∂x_i − (y_i / 2) ∂t
        let mut c: Vec<ScalarFn> = (0..n).map(|_| ScalarFn::zero()).collect();
        c[i] = ScalarFn::one();
        let mut lin = vec![0.0; n];
        lin[l + i] = -0.5;
        c[t] = ScalarFn::affine(0.0, lin);
        horizontal.push(VectorFieldSpec::new(format!("X{}", suffix(i)), c));
    }
    for i in 0..l {
        // Y_i = ∂y_i + (x_i / 2) ∂t
        let mut c: Vec<ScalarFn> = (0..n).map(|_| ScalarFn::zero()).collect();
        c[l + i] = ScalarFn::one();
        let mut lin = vec![0.0; n];
        lin[i] = 0.5;
        c[t] = ScalarFn::affine(0.0, lin);
        horizontal.push(VectorFieldSpec::new(format!("Y{}", suffix(i)), c));
    }
    let complement = vec![VectorFieldSpec::coordinate("T", n, t)];
    (horizontal, complement)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_dimensions() {
        let e = build_builtin("euclidean", &[2]).unwrap();
        assert_eq!((e.n(), e.d(), e.m()), (2, 2, 2));
        assert_eq!(e.filtration_ranks(), &[2]);

        let h = build_builtin("heisenberg_cc", &[1]).unwrap();
        assert_eq!((h.n(), h.d(), h.m()), (3, 2, 4));
        assert_eq!(h.filtration_ranks(), &[2, 3]);

        let r = build_builtin("heisenberg_riemannian", &[1]).unwrap();
        assert_eq!((r.n(), r.d(), r.m()), (3, 3, 3));
    }

    #[test]
    fn builtin_errors() {
        assert!(matches!(
            build_builtin("sphere", &[2]),
            Err(Error::UnknownStructure(_))
        ));
        assert!(build_builtin("euclidean", &[0]).is_err());
        assert!(build_builtin("euclidean", &[1, 2]).is_err());
    }

    #[test]
    fn heisenberg_frame_coefficients() {
        let h = build_builtin("heisenberg_cc", &[1]).unwrap();
        let x = [0.3, -0.8, 2.0];
        assert_eq!(h.horizontal_frame()[0].eval(&x), vec![1.0, 0.0, 0.4]);
        assert_eq!(h.horizontal_frame()[1].eval(&x), vec![0.0, 1.0, 0.15]);
    }

    #[test]
    fn hausdorff_dimension_examples() {
        assert_eq!(hausdorff_dimension(&[2, 3]).unwrap(), 4);
        assert_eq!(hausdorff_dimension(&[5]).unwrap(), 5);
        assert_eq!(hausdorff_dimension(&[2, 3, 4]).unwrap(), 7);
        assert!(hausdorff_dimension(&[2, 2]).is_err());
        assert!(hausdorff_dimension(&[]).is_err());
    }

    #[test]
    fn g_tau_norm_examples() {
        assert_eq!(g_tau_norm(&[1.0, 0.0, 0.0], 2, 0.01).unwrap(), 1.0);
        assert!((g_tau_norm(&[0.0, 0.0, 1.0], 2, 0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!(g_tau_norm(&[1.0], 1, 0.0).is_err());
    }

    #[test]
    fn g_tau_tensor_matches_frame_norm() {
        let h = build_builtin("heisenberg_cc", &[1]).unwrap();
        let x = [0.7, -0.2, 0.1];
        let tau = 0.3;
        let m = h.g_tau_tensor(&x, tau).unwrap();
        // v = 2 X - Y + 0.5 T in coordinates
        let fx = h.frame_matrix(&x);
        let c = DVector::from_vec(vec![2.0, -1.0, 0.5]);
        let v = &fx * &c;
        let q = (v.transpose() * &m * &v)[(0, 0)].sqrt();
        let expect = g_tau_norm(c.as_slice(), 2, tau).unwrap();
        assert!((q - expect).abs() < 1e-12);
    }

    #[test]
    fn structure_validation() {
        let f = |k| VectorFieldSpec::coordinate("f", 2, k);
        assert!(SubRiemannianStructure::new(
            "bad",
            vec!["x".into(), "y".into()],
            vec![f(0)],
            vec![f(1)],
            vec![1, 3],
            ScalarFn::one()
        )
        .is_err());
        assert!(SubRiemannianStructure::new(
            "ok",
            vec!["x".into(), "y".into()],
            vec![f(0)],
            vec![f(1)],
            vec![1, 2],
            ScalarFn::one()
        )
        .is_ok());
    }
}
