//! Quadrature over sampled positive functions and tail fits.
//!
//! Integrands are interpolated as a power law between neighbouring samples,
//! so integrals of exact power laws (areas, isoperimetric profiles, their
//! powers) carry no quadrature error. Segments touching a nonpositive abscissa
//! or value fall back to the trapezoidal rule.

use serde::Serialize;

use crate::error::{Error, Result};

fn segment(x0: f64, y0: f64, x1: f64, y1: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if x0 > 0.0 && y0 > 0.0 && y1 > 0.0 && x1 > x0 {
        let k = (y1 / y0).ln() / (x1 / x0).ln();
        let antider = |x: f64| {
            if (k + 1.0).abs() < 1e-12 {
                y0 * x0 * (x / x0).ln()
            } else {
                y0 * x0 / (k + 1.0) * ((x / x0).powf(k + 1.0))
            }
        };
        antider(b) - antider(a)
    } else {
        let at = |x: f64| y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        0.5 * (at(a) + at(b)) * (b - a)
    }
}

/// `∫_a^b y dx` over samples `(xs, ys)` with `xs` strictly increasing and
/// `[a, b]` inside the sample range.
pub fn integrate(xs: &[f64], ys: &[f64], a: f64, b: f64) -> Result<f64> {
    check_samples(xs, ys)?;
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    if a < lo - 1e-12 * lo.abs().max(1.0) || b > hi + 1e-12 * hi.abs().max(1.0) || a > b {
        return Err(Error::InvalidInput(format!(
            "integration range [{a}, {b}] is not inside the samples [{lo}, {hi}]"
        )));
    }
    let mut acc = 0.0;
    for i in 0..xs.len() - 1 {
        let (x0, x1) = (xs[i], xs[i + 1]);
        let (sa, sb) = (a.max(x0), b.min(x1));
        if sb > sa {
            acc += segment(x0, ys[i], x1, ys[i + 1], sa, sb);
        }
    }
    Ok(acc)
}

/// Power-law interpolation of the samples at `x`.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    check_samples(xs, ys)?;
    let n = xs.len();
    if x < xs[0] || x > xs[n - 1] {
        return Err(Error::InvalidInput(format!(
            "{x} is outside the sample range [{}, {}]",
            xs[0],
            xs[n - 1]
        )));
    }
    let i = xs.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    let (x0, x1, y0, y1) = (xs[i], xs[i + 1], ys[i], ys[i + 1]);
    if x0 > 0.0 && y0 > 0.0 && y1 > 0.0 {
        let k = (y1 / y0).ln() / (x1 / x0).ln();
        Ok(y0 * (x / x0).powf(k))
    } else {
        Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

fn check_samples(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two paired samples".into(),
        ));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "sample abscissae must be strictly increasing".into(),
        ));
    }
    if ys.iter().chain(xs).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("samples must be finite".into()));
    }
    Ok(())
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::DegenerateFit("need at least two points".into()));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("abscissae do not vary".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// `y ≈ c·x^k`; `residual` is the RMS of the log-residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub c: f64,
    pub k: f64,
    pub residual: f64,
}

/// `y ≈ c·e^{βx}`; `residual` is the RMS of the log-residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialFit {
    pub c: f64,
    pub beta: f64,
    pub residual: f64,
}

fn positive_logs(xs: &[f64], ys: &[f64], log_x: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    if xs
        .iter()
        .zip(ys)
        .any(|(x, y)| !(*y > 0.0) || (log_x && !(*x > 0.0)))
    {
        return Err(Error::DegenerateFit("fit needs positive samples".into()));
    }
    let lx = xs.iter().map(|x| if log_x { x.ln() } else { *x }).collect();
    let ly = ys.iter().map(|y| y.ln()).collect();
    Ok((lx, ly))
}

fn rms_residual(x: &[f64], y: &[f64], slope: f64, intercept: f64) -> f64 {
    let s: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    (s / x.len() as f64).sqrt()
}

pub fn fit_power(xs: &[f64], ys: &[f64]) -> Result<PowerFit> {
    let (lx, ly) = positive_logs(xs, ys, true)?;
    let (k, lc) = linear_fit(&lx, &ly)?;
    Ok(PowerFit {
        c: lc.exp(),
        k,
        residual: rms_residual(&lx, &ly, k, lc),
    })
}

pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Result<ExponentialFit> {
    let (lx, ly) = positive_logs(xs, ys, false)?;
    let (beta, lc) = linear_fit(&lx, &ly)?;
    Ok(ExponentialFit {
        c: lc.exp(),
        beta,
        residual: rms_residual(&lx, &ly, beta, lc),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_laws_integrate_exactly() {
        let xs: Vec<f64> = (1..=5).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(3)).collect();
        let v = integrate(&xs, &ys, 1.5, 4.2).unwrap();
        let exact = (4.2f64.powi(4) - 1.5f64.powi(4)) / 4.0;
        assert!((v - exact).abs() < 1e-10 * exact);
        let inv: Vec<f64> = xs.iter().map(|x| 1.0 / x).collect();
        assert!((integrate(&xs, &inv, 1.0, 5.0).unwrap() - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn constant_and_range_errors() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [3.0, 3.0, 3.0];
        assert!((integrate(&xs, &ys, 0.0, 2.0).unwrap() - 6.0).abs() < 1e-14);
        assert!(integrate(&xs, &ys, -1.0, 2.0).is_err());
        assert!(integrate(&[0.0, 0.0], &[1.0, 1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn fits_recover_parameters() {
        let xs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let p: Vec<f64> = xs.iter().map(|x| 2.0 * x.powf(2.5)).collect();
        let f = fit_power(&xs, &p).unwrap();
        assert!((f.k - 2.5).abs() < 1e-12 && (f.c - 2.0).abs() < 1e-12 && f.residual < 1e-12);
        let e: Vec<f64> = xs.iter().map(|x| 0.5 * (0.3 * x).exp()).collect();
        let g = fit_exponential(&xs, &e).unwrap();
        assert!((g.beta - 0.3).abs() < 1e-12);
        assert!(fit_power(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }
}
