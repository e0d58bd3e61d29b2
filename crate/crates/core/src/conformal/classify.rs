use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::metric::{GrowthKind, GrowthProfile};
use crate::quad::{fit_exponential, fit_power};

/// Relative tolerance on a fitted exponent at a critical value.
pub const CRITICAL_EXPONENT_TOLERANCE: f64 = 0.1;
/// Largest RMS log-residual of a tail fit that is still trusted.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Parabolic,
    Hyperbolic,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Criterion {
    #[serde(rename = "capacity-limit")]
    CapacityLimit,
    #[serde(rename = "(i)")]
    FiniteVolume,
    #[serde(rename = "(ii)")]
    AreaIntegral,
    #[serde(rename = "(iii)")]
    VolumeIntegral,
    #[serde(rename = "(iv)")]
    GrowthLiminf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// The condition holds: evidence for parabolic type.
    Holds,
    /// The condition fails: evidence for hyperbolic type.
    Fails,
    NotEvaluable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub criterion: Criterion,
    pub status: Status,
    pub evidence: String,
    /// Fitted or analytic exponent the decision rests on.
    pub exponent: Option<f64>,
    /// Value of the exponent at which the decision flips.
    pub critical: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    pub model: String,
    pub parameter: f64,
    pub residual: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationResult {
    pub verdict: Verdict,
    pub criteria_fired: Vec<Criterion>,
    pub diagnostics: Vec<CriterionReport>,
    pub fits: Vec<TailFit>,
}

impl ClassificationResult {
    fn from_reports(diagnostics: Vec<CriterionReport>, fits: Vec<TailFit>) -> Self {
        let criteria_fired: Vec<Criterion> = diagnostics
            .iter()
            .filter(|r| r.status == Status::Holds)
            .map(|r| r.criterion)
            .collect();
        let fails = diagnostics.iter().any(|r| r.status == Status::Fails);
        let verdict = match (!criteria_fired.is_empty(), fails) {
            (true, false) => Verdict::Parabolic,
            (false, true) => Verdict::Hyperbolic,
            _ => Verdict::Inconclusive,
        };
        Self {
            verdict,
            criteria_fired,
            diagnostics,
            fits,
        }
    }
}

/// Thresholds of [`classify_by_capacity`], as fractions of the first sample.
#[derive(Debug, Clone, Copy)]
pub struct CapacityThresholds {
    /// Decay below this fraction counts as tending to zero.
    pub decay: f64,
    /// Largest relative spread of the last three samples on a plateau.
    pub plateau_spread: f64,
    /// A plateau must stay above this fraction.
    pub floor: f64,
}

impl Default for CapacityThresholds {
    fn default() -> Self {
        Self {
            decay: 0.1,
            plateau_spread: 0.1,
            floor: 0.1,
        }
    }
}

pub fn classify_by_capacity(series: &[(f64, f64)]) -> Result<ClassificationResult> {
    classify_by_capacity_with(series, &CapacityThresholds::default())
}

/// Verdict from the limit of `cap_m R^b_a` as `b` grows.
pub fn classify_by_capacity_with(
    series: &[(f64, f64)],
    thresholds: &CapacityThresholds,
) -> Result<ClassificationResult> {
    if series.len() < 4 {
        return invalid(format!(
            "capacity series needs at least 4 samples, got {}",
            series.len()
        ));
    }
    if series.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return invalid("outer radii must be strictly increasing");
    }
    if series
        .iter()
        .any(|(b, c)| !(b.is_finite() && c.is_finite() && *c >= 0.0))
    {
        return invalid("capacities must be finite and nonnegative");
    }
    let first = series[0].1;
    let n = series.len();
    let last = series[n - 1].1;
    let tail = &series[n - 3..];
    let (lo, hi) = tail.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| {
        (lo.min(s.1), hi.max(s.1))
    });
    let decreasing = tail.windows(2).all(|w| w[1].1 < w[0].1);

    let mut fits = Vec::new();
    // decay rate in ln b: cap ≈ c (ln b)^k over the tail
    let tail_fit = {
        let pts: Vec<(f64, f64)> = tail
            .iter()
            .filter(|s| s.0 > 1.0 && s.1 > 0.0)
            .map(|s| (s.0.ln(), s.1))
            .collect();
        if pts.len() >= 2 {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            fit_power(&x, &y).ok()
        } else {
            None
        }
    };
    if let Some(f) = tail_fit {
        fits.push(TailFit {
            model: "c*(ln b)^k".into(),
            parameter: f.k,
            residual: f.residual,
            samples: 3,
        });
    }

    let report = if first == 0.0 {
        CriterionReport {
            criterion: Criterion::CapacityLimit,
            status: Status::Holds,
            evidence: "the series vanishes identically".into(),
            exponent: None,
            critical: None,
        }
    } else if last < thresholds.decay * first && (decreasing || last == 0.0) {
        CriterionReport {
            criterion: Criterion::CapacityLimit,
            status: Status::Holds,
            evidence: format!(
                "last value {last:.4e} is {:.1}% of the first and still decreasing",
                100.0 * last / first
            ),
            exponent: tail_fit.map(|f| f.k),
            critical: Some(0.0),
        }
    } else if hi - lo <= thresholds.plateau_spread * lo && lo > thresholds.floor * first {
        CriterionReport {
            criterion: Criterion::CapacityLimit,
            status: Status::Fails,
            evidence: format!(
                "last three values stay within {:.1}% of each other above {:.1}% of the first",
                100.0 * (hi - lo) / lo,
                100.0 * lo / first
            ),
            exponent: tail_fit.map(|f| f.k),
            critical: Some(0.0),
        }
    } else {
        CriterionReport {
            criterion: Criterion::CapacityLimit,
            status: Status::NotEvaluable,
            evidence: format!(
                "series neither decayed below {:.0}% nor reached a plateau",
                100.0 * thresholds.decay
            ),
            exponent: tail_fit.map(|f| f.k),
            critical: Some(0.0),
        }
    };
    Ok(ClassificationResult::from_reports(vec![report], fits))
}

/// Growth law of a tail: `c·x^k` or `c·e^{βx}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum TailLaw {
    Power(f64),
    Exponential(f64),
}

/// Best of a power and an exponential fit over the last decade of `x`.
pub(crate) fn fit_tail(xs: &[f64], ys: &[f64], label: &str) -> Result<(TailLaw, TailFit)> {
    let x_last = xs[xs.len() - 1];
    let (tx, ty): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x >= x_last / 10.0 && **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (*x, *y))
        .unzip();
    if tx.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{label}: fewer than three positive samples in the last decade"
        )));
    }
    let power = fit_power(&tx, &ty)?;
    let expo = fit_exponential(&tx, &ty)?;
    if power.residual <= expo.residual {
        Ok((
            TailLaw::Power(power.k),
            TailFit {
                model: format!("{label} ~ c*x^k"),
                parameter: power.k,
                residual: power.residual,
                samples: tx.len(),
            },
        ))
    } else {
        Ok((
            TailLaw::Exponential(expo.beta),
            TailFit {
                model: format!("{label} ~ c*exp(beta*x)"),
                parameter: expo.beta,
                residual: expo.residual,
                samples: tx.len(),
            },
        ))
    }
}

/// Whether `∫^∞ y(x)^e dx` diverges for `e < 0`, given the tail law of `y`.
///
/// For `y ~ x^k` the integral diverges iff `k ≤ −1/e`; exponents within
/// `slack` above that critical value count as critical, hence divergent.
pub(crate) fn tail_diverges(law: TailLaw, e: f64, slack: f64) -> (bool, Option<f64>, Option<f64>) {
    debug_assert!(e < 0.0);
    match law {
        TailLaw::Power(k) => {
            let critical = -1.0 / e;
            (k <= critical + slack, Some(k), Some(critical))
        }
        TailLaw::Exponential(beta) => (beta <= 0.0, Some(beta), Some(0.0)),
    }
}

fn status(holds: bool) -> Status {
    if holds {
        Status::Holds
    } else {
        Status::Fails
    }
}

/// Verdict from the growth criteria (i)–(iv) for balls `B(r)` of the profile.
pub fn classify_by_growth(profile: &GrowthProfile) -> Result<ClassificationResult> {
    let m = profile.m;
    if m < 2 {
        return invalid(format!("growth criteria need m ≥ 2, got {m}"));
    }
    let mf = m as f64;
    let e = 1.0 / (1.0 - mf);
    let mut fits = Vec::new();
    let mut reports = Vec::new();

    reports.push(match profile.total_volume {
        Some(v) if v.is_finite() && v >= 0.0 => CriterionReport {
            criterion: Criterion::FiniteVolume,
            status: Status::Holds,
            evidence: format!("total volume {v:.6e} is finite"),
            exponent: None,
            critical: None,
        },
        Some(v) => CriterionReport {
            criterion: Criterion::FiniteVolume,
            status: Status::NotEvaluable,
            evidence: format!("total volume {v} is not finite in this metric; realizability elsewhere is not decided"),
            exponent: None,
            critical: None,
        },
        None => CriterionReport {
            criterion: Criterion::FiniteVolume,
            status: Status::NotEvaluable,
            evidence: "no total volume supplied".into(),
            exponent: None,
            critical: None,
        },
    });

    // slack on volume-equivalent exponents: zero for exact models
    let (v_law, s_law, tol): (Option<TailLaw>, Option<TailLaw>, f64) = match profile.kind {
        GrowthKind::PowerModel { k, .. } => {
            (Some(TailLaw::Power(k)), Some(TailLaw::Power(k - 1.0)), 0.0)
        }
        GrowthKind::ExponentialModel { beta, .. } => (
            Some(TailLaw::Exponential(beta)),
            Some(TailLaw::Exponential(beta)),
            0.0,
        ),
        GrowthKind::Sampled => {
            let r = profile.radii();
            let n = r.len();
            if n < 8 {
                return invalid(format!(
                    "sampled growth profiles need at least 8 samples, got {n}"
                ));
            }
            if !(r[0] > 0.0 && r[n - 1] >= 10.0 * r[0]) {
                return invalid("sampled growth profiles must span at least one decade of radii");
            }
            let (vl, vf) = fit_tail(&r, &profile.volumes(), "v(r)")?;
            let v_ok = vf.residual <= FIT_RESIDUAL_LIMIT;
            fits.push(vf);
            let s_law = match fit_tail(&r, &profile.areas(), "S(r)") {
                Ok((sl, sf)) => {
                    let ok = sf.residual <= FIT_RESIDUAL_LIMIT;
                    fits.push(sf);
                    ok.then_some(sl)
                }
                Err(_) => None,
            };
            (v_ok.then_some(vl), s_law, CRITICAL_EXPONENT_TOLERANCE * mf)
        }
    };

    let not_evaluable = |criterion, why: &str| CriterionReport {
        criterion,
        status: Status::NotEvaluable,
        evidence: why.to_string(),
        exponent: None,
        critical: None,
    };

    reports.push(match s_law {
        Some(law) => {
            let (div, k, crit) = tail_diverges(law, e, tol);
            CriterionReport {
                criterion: Criterion::AreaIntegral,
                status: status(div),
                evidence: format!(
                    "integral of S^(1/(1-m)) {}",
                    if div { "diverges" } else { "converges" }
                ),
                exponent: k,
                critical: crit,
            }
        }
        None => not_evaluable(Criterion::AreaIntegral, "no trustworthy tail law for S(r)"),
    });

    match v_law {
        Some(law) => {
            // (r/v)^{1/(m−1)} = (v/r)^{e}: v/r has exponent k − 1
            let ratio_law = match law {
                TailLaw::Power(k) => TailLaw::Power(k - 1.0),
                other => other,
            };
            let (div, k, crit) = tail_diverges(ratio_law, e, tol);
            reports.push(CriterionReport {
                criterion: Criterion::VolumeIntegral,
                status: status(div),
                evidence: format!(
                    "integral of (r/v)^(1/(m-1)) {}",
                    if div { "diverges" } else { "converges" }
                ),
                exponent: k.map(|k| k + 1.0),
                critical: crit.map(|c| c + 1.0),
            });
            let (finite, k, crit) = match law {
                TailLaw::Power(k) => (k <= mf + tol, Some(k), Some(mf)),
                TailLaw::Exponential(beta) => (beta <= 0.0, Some(beta), Some(0.0)),
            };
            reports.push(CriterionReport {
                criterion: Criterion::GrowthLiminf,
                status: status(finite),
                evidence: format!(
                    "liminf v(r)/r^{m} is {}",
                    if finite { "finite" } else { "infinite" }
                ),
                exponent: k,
                critical: crit,
            });
        }
        None => {
            reports.push(not_evaluable(
                Criterion::VolumeIntegral,
                "no trustworthy tail law for v(r)",
            ));
            reports.push(not_evaluable(
                Criterion::GrowthLiminf,
                "no trustworthy tail law for v(r)",
            ));
        }
    }
    Ok(ClassificationResult::from_reports(reports, fits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::GrowthSample;
    use std::f64::consts::PI;

    #[test]
    fn capacity_series() {
        let euclid: Vec<(f64, f64)> = (1..=8)
            .map(|i| 2f64.powi(1 << i))
            .map(|b| (b, 2.0 * PI / b.ln()))
            .collect();
        let r = classify_by_capacity(&euclid).unwrap();
        assert_eq!(r.verdict, Verdict::Parabolic, "{r:?}");
        let flat: Vec<(f64, f64)> = (1..=5).map(|i| (i as f64 + 1.0, 3.0)).collect();
        assert_eq!(
            classify_by_capacity(&flat).unwrap().verdict,
            Verdict::Hyperbolic
        );
        assert!(classify_by_capacity(&flat[..2]).is_err());
        let slow: Vec<(f64, f64)> = (1..=5).map(|i| (i as f64 + 1.0, 3.0 / i as f64)).collect();
        assert_eq!(
            classify_by_capacity(&slow).unwrap().verdict,
            Verdict::Inconclusive
        );
    }

    #[test]
    fn analytic_models() {
        let e2 = GrowthProfile::power_model(PI, 2.0, 2).unwrap();
        let r = classify_by_growth(&e2).unwrap();
        assert_eq!(r.verdict, Verdict::Parabolic);
        assert!(r.criteria_fired.contains(&Criterion::GrowthLiminf));
        let fast = GrowthProfile::power_model(1.0, 4.0, 3).unwrap();
        assert_eq!(
            classify_by_growth(&fast).unwrap().verdict,
            Verdict::Hyperbolic
        );
        let expo = GrowthProfile::exponential_model(1.0, 1.0, 3).unwrap();
        assert_eq!(
            classify_by_growth(&expo).unwrap().verdict,
            Verdict::Hyperbolic
        );
        assert!(classify_by_growth(&GrowthProfile::power_model(1.0, 1.0, 1).unwrap()).is_err());
        for m in 2..=6 {
            for k10 in 5..=80 {
                let k = k10 as f64 / 10.0;
                let v =
                    classify_by_growth(&GrowthProfile::power_model(1.0, k, m).unwrap()).unwrap();
                let want = if k <= m as f64 {
                    Verdict::Parabolic
                } else {
                    Verdict::Hyperbolic
                };
                assert_eq!(v.verdict, want, "k={k} m={m}");
            }
        }
    }

    #[test]
    fn finite_volume_fires() {
        let p = GrowthProfile::power_model(1.0, 4.0, 3)
            .unwrap()
            .with_total_volume(10.0);
        assert_eq!(
            classify_by_growth(&p).unwrap().verdict,
            Verdict::Inconclusive
        );
    }

    #[test]
    fn sampled_profiles() {
        let samples: Vec<GrowthSample> = (0..12)
            .map(|i| 0.5 * 10f64.powf(i as f64 / 8.0))
            .map(|r| GrowthSample {
                r,
                v: PI * r * r,
                s: 2.0 * PI * r,
            })
            .collect();
        let p = GrowthProfile::sampled(samples.clone(), 2).unwrap();
        assert_eq!(classify_by_growth(&p).unwrap().verdict, Verdict::Parabolic);
        let short = GrowthProfile::sampled(samples[..5].to_vec(), 2).unwrap();
        assert!(classify_by_growth(&short).is_err());
        let expo: Vec<GrowthSample> = (1..=12)
            .map(|i| i as f64)
            .map(|r| GrowthSample {
                r,
                v: (2.0 * r).exp(),
                s: 2.0 * (2.0 * r).exp(),
            })
            .collect();
        let p = GrowthProfile::sampled(expo, 3).unwrap();
        assert_eq!(classify_by_growth(&p).unwrap().verdict, Verdict::Hyperbolic);
    }
}
