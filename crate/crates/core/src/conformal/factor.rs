use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::chart::GridChart;
use crate::error::{invalid, Error, Result};
use crate::function::ScalarFn;
use crate::metric::DistanceField;
use crate::quad::interpolate;
use crate::sr::{default_sample_points, SubRiemannianStructure};

/// Positive factor `λ` of a conformal change `g̃ = λ²g` on the horizontal bundle.
#[derive(Clone)]
pub enum ConformalFactor {
    Constant(f64),
    /// `λ(r)` of the distance `r` to a fixed origin, from samples `(r, λ)`.
    Radial {
        dist: Arc<DistanceField>,
        samples: Vec<(f64, f64)>,
    },
    Pointwise(ScalarFn),
}

impl fmt::Debug for ConformalFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConformalFactor::Constant(l) => write!(f, "Constant({l})"),
            ConformalFactor::Radial { samples, .. } => {
                write!(f, "Radial({} samples)", samples.len())
            }
            ConformalFactor::Pointwise(fun) => write!(f, "Pointwise({fun})"),
        }
    }
}

impl ConformalFactor {
    pub fn radial(dist: Arc<DistanceField>, samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return invalid("a radial factor needs at least two samples");
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return invalid("radial factor radii must be strictly increasing");
        }
        if let Some(&(r, l)) = samples.iter().find(|s| !(s.1 > 0.0)) {
            return Err(Error::NonPositiveFactor {
                value: l,
                point: vec![r],
            });
        }
        Ok(ConformalFactor::Radial { dist, samples })
    }

    /// `λ` as a function of position.
    pub fn as_function(&self) -> ScalarFn {
        match self {
            ConformalFactor::Constant(l) => ScalarFn::Const(*l),
            ConformalFactor::Pointwise(f) => f.clone(),
            ConformalFactor::Radial { dist, samples } => {
                let dist = dist.clone();
                let (rs, ls): (Vec<f64>, Vec<f64>) = samples.iter().cloned().unzip();
                ScalarFn::custom("lambda(r)", move |x| {
                    let r = dist.value_at(x).unwrap_or(f64::NAN);
                    let r = r.clamp(rs[0], rs[rs.len() - 1]);
                    interpolate(&rs, &ls, r).unwrap_or(f64::NAN)
                })
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            ConformalFactor::Constant(l) => format!("constant {l}"),
            ConformalFactor::Radial { samples, .. } => format!("radial, {} samples", samples.len()),
            ConformalFactor::Pointwise(f) => format!("pointwise {f}"),
        }
    }
}

/// How lengths, horizontal gradients and measure transform under a rescaling.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingLedger {
    pub factor: String,
    pub m: usize,
    pub length: String,
    pub horizontal_gradient: String,
    pub measure: String,
}

/// Structure with every frame field divided by `λ` and density multiplied by `λ^m`.
///
/// `λ` is checked for positivity at the nodes of `chart` when one is given,
/// otherwise at a fixed set of sample points in `[−1, 1]^n`.
pub fn rescale_structure(
    s: &SubRiemannianStructure,
    lambda: &ConformalFactor,
    chart: Option<&GridChart>,
) -> Result<(SubRiemannianStructure, ScalingLedger)> {
    let f = lambda.as_function();
    let check = |x: &[f64]| -> Result<()> {
        let v = f.eval(x);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositiveFactor {
                value: v,
                point: x.to_vec(),
            });
        }
        Ok(())
    };
    match (f.as_const(), chart) {
        (Some(_), _) => check(&vec![0.0; s.n()])?,
        (None, Some(c)) => {
            let mut x = vec![0.0; c.dim()];
            for i in 0..c.node_count() {
                c.node_coords_into(i, &mut x);
                check(&x)?;
            }
        }
        (None, None) => {
            for x in default_sample_points(s.n(), 64) {
                check(&x)?;
            }
        }
    }
    let m = s.m();
    let inverse = match f.as_const() {
        Some(l) => ScalarFn::Const(1.0 / l),
        None => ScalarFn::one().div(&f),
    };
    let horizontal = s
        .horizontal_frame()
        .iter()
        .map(|v| v.scaled_by(&inverse))
        .collect();
    let complement = s
        .complement_frame()
        .iter()
        .map(|v| v.scaled_by(&inverse))
        .collect();
    let density = s.density().mul(&f.powi(m as i32));
    let rescaled = s.with_frames(horizontal, complement, density);
    let ledger = ScalingLedger {
        factor: lambda.describe(),
        m,
        length: "multiplied by lambda".into(),
        horizontal_gradient: "multiplied by 1/lambda".into(),
        measure: format!("multiplied by lambda^{m}"),
    };
    Ok((rescaled, ledger))
}
