use serde::Serialize;

use super::classify::{fit_tail, tail_diverges, TailFit, Verdict, CRITICAL_EXPONENT_TOLERANCE};
use crate::capacity::IsoperimetricProfile;
use crate::error::{invalid, Result};
use crate::metric::{GrowthKind, GrowthProfile};
use crate::quad::{integrate, interpolate};

/// Allowance for `lhs ≥ rhs·(1 − slack)`.
pub const AHLFORS_GROMOV_SLACK: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AhlforsGromovReport {
    /// `∫_{ṽ(r0)}^{ṽ(r1)} P̃(v)^{m/(1−m)} dv`
    pub lhs: f64,
    /// `∫_{r0}^{r1} S(r)^{1/(1−m)} dr`
    pub rhs: f64,
    pub pass: bool,
}

/// `(r, S(r))` samples of a profile; analytic models are tabulated on `[r0, r1]`.
fn area_samples(profile: &GrowthProfile, r0: f64, r1: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    match profile.kind {
        GrowthKind::Sampled => Ok((profile.radii(), profile.areas())),
        _ => {
            const K: usize = 257;
            let rs: Vec<f64> = if r0 > 0.0 {
                (0..K)
                    .map(|i| r0 * (r1 / r0).powf(i as f64 / (K - 1) as f64))
                    .collect()
            } else {
                (0..K)
                    .map(|i| r0 + (r1 - r0) * i as f64 / (K - 1) as f64)
                    .collect()
            };
            let ss = rs
                .iter()
                .map(|&r| profile.area_at(r))
                .collect::<Result<Vec<f64>>>()?;
            Ok((rs, ss))
        }
    }
}

/// Compares the isoperimetric integral of a conformally equivalent metric
/// with the area integral of the original one over the same balls.
pub fn ahlfors_gromov_check(
    g_profile: &GrowthProfile,
    tilde_iso: &IsoperimetricProfile,
    tilde_volumes: &[(f64, f64)],
    r0: f64,
    r1: f64,
    m: usize,
) -> Result<AhlforsGromovReport> {
    if m < 2 {
        return invalid(format!("the inequality needs m ≥ 2, got {m}"));
    }
    if !(r0 >= 0.0 && r1 >= r0) {
        return invalid(format!("radii must satisfy 0 ≤ r0 ≤ r1, got {r0}, {r1}"));
    }
    if r0 == r1 {
        return Ok(AhlforsGromovReport {
            lhs: 0.0,
            rhs: 0.0,
            pass: true,
        });
    }
    let e = 1.0 / (1.0 - m as f64);
    let (rt, vt): (Vec<f64>, Vec<f64>) = tilde_volumes.iter().cloned().unzip();
    let v0 = interpolate(&rt, &vt, r0)?;
    let v1 = interpolate(&rt, &vt, r1)?;
    let pv = tilde_iso.volumes();
    let pp: Vec<f64> = tilde_iso
        .values()
        .iter()
        .map(|p| p.powf(m as f64 * e))
        .collect();
    let lhs = integrate(&pv, &pp, v0, v1)?;

    let (rs, ss) = area_samples(g_profile, r0, r1)?;
    if ss
        .iter()
        .zip(&rs)
        .any(|(s, r)| *r >= r0 && *r <= r1 && !(*s > 0.0))
    {
        return invalid("sphere areas must be positive on [r0, r1]");
    }
    let ys: Vec<f64> = ss.iter().map(|s| s.powf(e)).collect();
    let rhs = integrate(&rs, &ys, r0, r1)?;
    Ok(AhlforsGromovReport {
        lhs,
        rhs,
        pass: lhs >= rhs * (1.0 - AHLFORS_GROMOV_SLACK),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivalenceVerdict {
    BothConverge,
    BothDiverge,
    Mismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub verdict: EquivalenceVerdict,
    /// `∫^∞ P^{m/(1−m)} dv` diverges.
    pub profile_integral_diverges: bool,
    /// `∫^∞ S^{1/(1−m)} dr` diverges.
    pub area_integral_diverges: bool,
    /// `∫^∞ P^{−1} dv` diverges: the rescaled metric is complete.
    pub complete: bool,
    pub fits: Vec<TailFit>,
}

fn spans_decade(xs: &[f64]) -> bool {
    xs.len() >= 3 && xs[0] > 0.0 && xs[xs.len() - 1] >= 10.0 * xs[0]
}

/// Tail behaviour of `∫ P^{m/(1−m)}`, `∫ S^{1/(1−m)}` and `∫ P^{−1}`.
pub fn proposition1_equivalence_check(
    p_samples: &IsoperimetricProfile,
    s_samples: &[(f64, f64)],
    m: usize,
) -> Result<EquivalenceReport> {
    if m < 2 {
        return invalid(format!("the equivalence needs m ≥ 2, got {m}"));
    }
    let mf = m as f64;
    let pv = p_samples.volumes();
    let (rs, ss): (Vec<f64>, Vec<f64>) = s_samples.iter().cloned().unzip();
    if !spans_decade(&pv) || !spans_decade(&rs) {
        return invalid("profile and area samples must each span at least one decade");
    }
    if rs.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("area sample radii must be strictly increasing");
    }
    let (p_law, p_fit) = fit_tail(&pv, &p_samples.values(), "P(v)")?;
    let (s_law, s_fit) = fit_tail(&rs, &ss, "S(r)")?;
    // slacks on the P-exponent (critical (m−1)/m) and the S-exponent (critical m−1)
    let tol = CRITICAL_EXPONENT_TOLERANCE;
    let (a, _, _) = tail_diverges(p_law, mf / (1.0 - mf), tol * (mf - 1.0) / mf);
    let (b, _, _) = tail_diverges(s_law, 1.0 / (1.0 - mf), tol * (mf - 1.0));
    let (complete, _, _) = tail_diverges(p_law, -1.0, tol);
    let verdict = match (a, b) {
        (true, true) => EquivalenceVerdict::BothDiverge,
        (false, false) => EquivalenceVerdict::BothConverge,
        _ => EquivalenceVerdict::Mismatch,
    };
    Ok(EquivalenceReport {
        verdict,
        profile_integral_diverges: a,
        area_integral_diverges: b,
        complete,
        fits: vec![p_fit, s_fit],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalForm {
    /// `P(ṽ) = ṽ^exponent`
    pub exponent: f64,
    pub formula: String,
}

/// Canonical isoperimetric function reachable by a conformal change.
pub fn canonical_form(verdict: Verdict, m: usize) -> Result<CanonicalForm> {
    match verdict {
        Verdict::Parabolic => {
            if m < 1 {
                return invalid("m must be positive");
            }
            Ok(CanonicalForm {
                exponent: (m as f64 - 1.0) / m as f64,
                formula: format!("P(v) = v^({}/{m})", m - 1),
            })
        }
        Verdict::Hyperbolic => Ok(CanonicalForm {
            exponent: 1.0,
            formula: "P(v) = v".into(),
        }),
        Verdict::Inconclusive => invalid("no canonical form for an inconclusive verdict"),
    }
}
