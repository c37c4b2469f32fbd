//! Local stability of the equilibria of the uncontrolled delayed system.
//!
//! Verdicts follow the threshold table in `R0` and `R1`. Each verdict is
//! backed by the coefficient-sign evidence used to establish it: a
//! Routh–Hurwitz check at `tau = 0`, and a proof that no characteristic root
//! can sit on the imaginary axis, which makes the verdict hold for every
//! delay `tau >= 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{equilibria, Equilibrium, ModelParams, State, THRESHOLD_TOL};

/// Upper end of the sampled frequency range for the `E2` modulus test (rad/day).
pub const DEFAULT_W_MAX: f64 = 100.0;
/// Number of sampled frequencies on `[0, W_max]`.
pub const MODULUS_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    LocallyAsymptoticallyStable,
    Unstable,
    Critical,
}

/// Named scalar diagnostics. Only the fields relevant to an equilibrium are set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a2: Option<f64>,
    /// `uv - k lambda r / m`, also `q(0)`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a3: Option<f64>,
    /// `u²v² - (k lambda r / m)²`, constant term of the `w⁴` crossing polynomial.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub crossing_const: Option<f64>,
    /// The only candidate root `w²` of the `E0` crossing polynomial.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub w2_root: Option<f64>,
    /// `a I1 - n`, the real root split off at `E1`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ctl_root: Option<f64>,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none", default)]
    pub a: Option<f64>,
    #[serde(rename = "BminusD", skip_serializing_if = "Option::is_none", default)]
    pub b_minus_d: Option<f64>,
    #[serde(rename = "CminusE", skip_serializing_if = "Option::is_none", default)]
    pub c_minus_e: Option<f64>,
    /// `A(B - D) - (C - E)`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hurwitz_margin: Option<f64>,
    #[serde(rename = "A2minus2B", skip_serializing_if = "Option::is_none", default)]
    pub a2_minus_2b: Option<f64>,
    #[serde(rename = "B2minus2ACminusD2", skip_serializing_if = "Option::is_none", default)]
    pub b2_minus_2ac_minus_d2: Option<f64>,
    #[serde(rename = "C2minusE2", skip_serializing_if = "Option::is_none", default)]
    pub c2_minus_e2: Option<f64>,
    /// Monic quartic characteristic polynomial at `E2` for `tau = 0`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub quartic: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub modulus_gap_min: Option<f64>,
    /// Each modulus factor on the left dominates its partner on the right.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub factorwise_dominance: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub equilibrium: Equilibrium,
    pub state: State,
    pub verdict: Verdict,
    pub tau_independent: bool,
    pub evidence: Evidence,
}

/// Routh–Hurwitz data for the characteristic polynomial at `tau = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RouthHurwitz {
    /// Coefficients in descending powers, leading coefficient first.
    pub coefficients: Vec<f64>,
    pub stable: bool,
}

/// Imaginary-axis exclusion data for `tau > 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum CrossingTest {
    /// `w⁴ + (u²+v²) w² + crossing_const = 0`.
    E0 {
        crossing_const: f64,
        w2_root: f64,
        no_crossing: bool,
    },
    /// `w⁶ + c4 w⁴ + c2 w² + c0 = 0`, coefficients `[c4, c2, c0]`.
    E1 {
        coefficients: [f64; 3],
        no_crossing: bool,
    },
    E2 {
        modulus_gap_min: f64,
        factorwise_dominance: bool,
        no_crossing: bool,
    },
}

impl CrossingTest {
    pub fn no_crossing(&self) -> bool {
        match *self {
            CrossingTest::E0 { no_crossing, .. }
            | CrossingTest::E1 { no_crossing, .. }
            | CrossingTest::E2 { no_crossing, .. } => no_crossing,
        }
    }
}

/// Threshold classification of every present equilibrium, with evidence.
pub fn classify(p: &ModelParams) -> Vec<StabilityReport> {
    let eq = equilibria(p);
    let (r0, r1) = (eq.r0, eq.r1);
    let mut reports = Vec::with_capacity(3);

    let e0_verdict = if (r0 - 1.0).abs() < THRESHOLD_TOL {
        Verdict::Critical
    } else if r0 < 1.0 {
        Verdict::LocallyAsymptoticallyStable
    } else {
        Verdict::Unstable
    };
    let mut evidence = Evidence::default();
    if let Ok(rh) = routh_hurwitz_tau0(p, Equilibrium::E0) {
        evidence.a1 = Some(rh.coefficients[0]);
        evidence.a2 = Some(rh.coefficients[1]);
        evidence.a3 = Some(rh.coefficients[2]);
    }
    if let Ok(CrossingTest::E0 {
        crossing_const,
        w2_root,
        ..
    }) = imaginary_crossing_test(p, Equilibrium::E0)
    {
        evidence.crossing_const = Some(crossing_const);
        evidence.w2_root = Some(w2_root);
    }
    reports.push(StabilityReport {
        equilibrium: Equilibrium::E0,
        state: eq.e0,
        verdict: e0_verdict,
        tau_independent: e0_verdict != Verdict::Critical,
        evidence,
    });

    if let Some(e1) = eq.e1 {
        let verdict = if (r0 - (1.0 + r1)).abs() < THRESHOLD_TOL {
            Verdict::Critical
        } else if r0 < 1.0 + r1 {
            Verdict::LocallyAsymptoticallyStable
        } else {
            Verdict::Unstable
        };
        let mut evidence = Evidence {
            ctl_root: Some(p.a * e1.i - p.n),
            ..Evidence::default()
        };
        if let Ok(rh) = routh_hurwitz_tau0(p, Equilibrium::E1) {
            let c = &rh.coefficients;
            evidence.a = Some(c[1]);
            evidence.b_minus_d = Some(c[2]);
            evidence.c_minus_e = Some(c[3]);
            evidence.hurwitz_margin = Some(c[1] * c[2] - c[3]);
        }
        if let Ok(CrossingTest::E1 { coefficients, .. }) =
            imaginary_crossing_test(p, Equilibrium::E1)
        {
            evidence.a2_minus_2b = Some(coefficients[0]);
            evidence.b2_minus_2ac_minus_d2 = Some(coefficients[1]);
            evidence.c2_minus_e2 = Some(coefficients[2]);
        }
        reports.push(StabilityReport {
            equilibrium: Equilibrium::E1,
            state: e1,
            verdict,
            tau_independent: verdict != Verdict::Critical,
            evidence,
        });
    }

    if let Some(e2) = eq.e2 {
        let mut evidence = Evidence::default();
        if let Ok(rh) = routh_hurwitz_tau0(p, Equilibrium::E2) {
            let c = &rh.coefficients;
            evidence.quartic = Some([c[1], c[2], c[3], c[4]]);
        }
        if let Ok(CrossingTest::E2 {
            modulus_gap_min,
            factorwise_dominance,
            ..
        }) = imaginary_crossing_test(p, Equilibrium::E2)
        {
            evidence.modulus_gap_min = Some(modulus_gap_min);
            evidence.factorwise_dominance = Some(factorwise_dominance);
        }
        reports.push(StabilityReport {
            equilibrium: Equilibrium::E2,
            state: e2,
            verdict: Verdict::LocallyAsymptoticallyStable,
            tau_independent: true,
            evidence,
        });
    }
    reports
}

/// Coefficients of `E1`'s cubic factor `y³ + A y² + B y + C - (D y + E) e^{-tau y}`.
fn e1_coefficients(p: &ModelParams, e1: State) -> [f64; 5] {
    let vr = e1.v * p.r;
    let a = p.m + p.u + p.v + vr;
    let b = vr * p.u + vr * p.v + p.m * p.u + p.m * p.v + p.u * p.v;
    let c = p.m * p.u * p.v + vr * p.u * p.v;
    let d = p.u * p.v;
    let e = p.m * p.u * p.v;
    [a, b, c, d, e]
}

/// Routh–Hurwitz check of the characteristic polynomial at `tau = 0`.
///
/// `E0`: the quadratic factor `y² + (u+v) y + uv - k lambda r / m`.
/// `E1`: the cubic `y³ + A y² + (B-D) y + (C-E)`.
/// `E2`: the full quartic.
pub fn routh_hurwitz_tau0(p: &ModelParams, which: Equilibrium) -> Result<RouthHurwitz> {
    let eq = equilibria(p);
    let state = eq.get(which).ok_or(Error::EquilibriumAbsent(which))?;
    let coefficients = match which {
        Equilibrium::E0 => vec![1.0, p.u + p.v, p.u * p.v - p.k * p.lambda * p.r / p.m],
        Equilibrium::E1 => {
            let [a, b, c, d, e] = e1_coefficients(p, state);
            vec![1.0, a, b - d, c - e]
        }
        Equilibrium::E2 => {
            // (y + m + V r)(y + v)(y² + (u + T s) y + T n s) - Z k r (y² + m y)
            let alpha = p.m + state.v * p.r;
            let beta = p.u + state.t * p.s;
            let gamma = state.t * p.n * p.s;
            let zkr = state.z * p.k * p.r;
            // (y + alpha)(y + v) = y² + (alpha + v) y + alpha v
            let (q1, q0) = (alpha + p.v, alpha * p.v);
            vec![
                1.0,
                q1 + beta,
                q0 + q1 * beta + gamma - zkr,
                q0 * beta + q1 * gamma - zkr * p.m,
                q0 * gamma,
            ]
        }
    };
    let stable = hurwitz_stable(&coefficients);
    Ok(RouthHurwitz {
        coefficients,
        stable,
    })
}

/// Routh–Hurwitz conditions for monic polynomials of degree 2 to 4.
fn hurwitz_stable(c: &[f64]) -> bool {
    if c.iter().any(|x| *x <= 0.0) {
        return false;
    }
    match c.len() {
        3 => true,
        4 => c[1] * c[2] > c[3],
        5 => {
            let (a1, a2, a3, a4) = (c[1], c[2], c[3], c[4]);
            a1 * a2 > a3 && a1 * a2 * a3 > a3 * a3 + a1 * a1 * a4
        }
        _ => unreachable!("only degrees 2..=4 occur"),
    }
}

/// Evidence that no characteristic root crosses the imaginary axis for `tau > 0`.
pub fn imaginary_crossing_test(p: &ModelParams, which: Equilibrium) -> Result<CrossingTest> {
    imaginary_crossing_test_with(p, which, DEFAULT_W_MAX)
}

pub fn imaginary_crossing_test_with(
    p: &ModelParams,
    which: Equilibrium,
    w_max: f64,
) -> Result<CrossingTest> {
    let eq = equilibria(p);
    let state = eq.get(which).ok_or(Error::EquilibriumAbsent(which))?;
    Ok(match which {
        Equilibrium::E0 => {
            let gain = p.k * p.lambda * p.r / p.m;
            let s = p.u * p.u + p.v * p.v;
            let crossing_const = (p.u * p.v).powi(2) - gain * gain;
            let w2_root = 0.5 * (-s + (s * s - 4.0 * crossing_const).sqrt());
            CrossingTest::E0 {
                crossing_const,
                w2_root,
                no_crossing: w2_root < 0.0,
            }
        }
        Equilibrium::E1 => {
            let [a, b, c, d, e] = e1_coefficients(p, state);
            let coefficients = [a * a - 2.0 * b, b * b - 2.0 * a * c - d * d, c * c - e * e];
            CrossingTest::E1 {
                coefficients,
                no_crossing: coefficients.iter().all(|x| *x > 0.0),
            }
        }
        Equilibrium::E2 => {
            let modulus_gap_min = (0..=MODULUS_SAMPLES)
                .map(|j| w_max * j as f64 / MODULUS_SAMPLES as f64)
                .map(|w| e2_modulus_gap(p, state, w))
                .fold(f64::INFINITY, f64::min);
            // |wi + m + V r|² > |wi + m|², |v + wi|² > v², and
            // |T n s + wi(u + wi + T s)|² >= (u + T s)² w² = |Z k r w / v|²,
            // so the gap is positive for every w beyond the sampled range too.
            let beta = p.u + state.t * p.s;
            let zkr_v = state.z * p.k * p.r / p.v;
            let factorwise_dominance =
                state.v * p.r > 0.0 && beta * beta >= zkr_v * zkr_v * (1.0 - 1e-12);
            CrossingTest::E2 {
                modulus_gap_min,
                factorwise_dominance,
                no_crossing: modulus_gap_min > 0.0 && factorwise_dominance,
            }
        }
    })
}

/// `|wi+m+Vr|² |v+wi|² |Tns + wi(u+wi+Ts)|² - |wi+m|² v² |Zkr w / v|²` at `E2`.
pub fn e2_modulus_gap(p: &ModelParams, e2: State, w: f64) -> f64 {
    let w2 = w * w;
    let alpha = p.m + e2.v * p.r;
    let beta = p.u + e2.t * p.s;
    let gamma = e2.t * p.n * p.s;
    let lhs = (w2 + alpha * alpha) * (p.v * p.v + w2) * ((gamma - w2).powi(2) + w2 * beta * beta);
    let zkr_v = e2.z * p.k * p.r / p.v;
    let rhs = (w2 + p.m * p.m) * p.v * p.v * zkr_v * zkr_v * w2;
    lhs - rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdicts(p: &ModelParams) -> Vec<(Equilibrium, Verdict)> {
        classify(p).iter().map(|r| (r.equilibrium, r.verdict)).collect()
    }

    #[test]
    fn reference_parameters() {
        let p = ModelParams::default();
        assert_eq!(
            verdicts(&p),
            vec![
                (Equilibrium::E0, Verdict::Unstable),
                (Equilibrium::E1, Verdict::Unstable),
                (Equilibrium::E2, Verdict::LocallyAsymptoticallyStable),
            ]
        );
    }

    #[test]
    fn low_r0_has_stable_e0_only() {
        let mut p = ModelParams::default();
        p.r /= 200.0;
        assert_eq!(
            verdicts(&p),
            vec![(Equilibrium::E0, Verdict::LocallyAsymptoticallyStable)]
        );
        let rh = routh_hurwitz_tau0(&p, Equilibrium::E0).unwrap();
        assert!(rh.stable && rh.coefficients.iter().all(|c| *c > 0.0));
        match imaginary_crossing_test(&p, Equilibrium::E0).unwrap() {
            CrossingTest::E0 {
                crossing_const,
                w2_root,
                no_crossing,
            } => {
                assert!(crossing_const > 0.0 && w2_root < 0.0 && no_crossing);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn critical_r0() {
        let mut p = ModelParams::default();
        p.r = p.m * p.u * p.v / (p.k * p.lambda);
        let reports = classify(&p);
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].verdict, Verdict::Critical);
        assert!(!reports[0].tau_independent);
    }

    #[test]
    fn e0_coefficient_at_reference() {
        let rh = routh_hurwitz_tau0(&ModelParams::default(), Equilibrium::E0).unwrap();
        // uv - k lambda r / m = 0.32 - 35.84
        assert!((rh.coefficients[2] - (0.32 - 35.84)).abs() < 1e-12);
        assert!(!rh.stable);
    }

    #[test]
    fn e1_between_thresholds() {
        // R0/R1 = lambda a / (n u); with lambda = 0.2, R0 = 2 gives R1 = 4.8.
        let mut p = ModelParams {
            lambda: 0.2,
            ..ModelParams::default()
        };
        let (r0, r1) = crate::model::reproduction_numbers(&p);
        p.r *= 2.0 / r0;
        assert!(2.0 < 1.0 + r1 * 2.0 / r0);
        let rh = routh_hurwitz_tau0(&p, Equilibrium::E1).unwrap();
        let c = &rh.coefficients;
        assert!(c[1] > 0.0 && c[2] > 0.0 && c[3] > 0.0 && c[1] * c[2] > c[3]);
        assert!(rh.stable);
        let e1 = equilibria(&p).e1.unwrap();
        let vr = e1.v * p.r;
        let (m, u, v) = (p.m, p.u, p.v);
        match imaginary_crossing_test(&p, Equilibrium::E1).unwrap() {
            CrossingTest::E1 {
                coefficients,
                no_crossing,
            } => {
                let expect = [
                    m * m + u * u + v * v + vr * vr + 2.0 * vr * m,
                    (vr * u).powi(2)
                        + (vr * v).powi(2)
                        + (m * u).powi(2)
                        + (m * v).powi(2)
                        + 2.0 * vr * m * (u * u + v * v),
                    (vr * u * v).powi(2) + 2.0 * vr * u * u * v * v * m,
                ];
                for (got, want) in coefficients.iter().zip(expect) {
                    assert!((got - want).abs() <= 1e-12 * want.abs());
                }
                assert!(no_crossing);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            verdicts(&p)[1],
            (Equilibrium::E1, Verdict::LocallyAsymptoticallyStable)
        );
    }

    #[test]
    fn absent_equilibrium_is_an_error() {
        let mut p = ModelParams::default();
        p.r /= 200.0;
        assert_eq!(
            routh_hurwitz_tau0(&p, Equilibrium::E1),
            Err(Error::EquilibriumAbsent(Equilibrium::E1))
        );
        assert!(imaginary_crossing_test(&p, Equilibrium::E2).is_err());
    }

    #[test]
    fn e2_gap_positive_at_reference() {
        let p = ModelParams::default();
        match imaginary_crossing_test(&p, Equilibrium::E2).unwrap() {
            CrossingTest::E2 {
                modulus_gap_min,
                factorwise_dominance,
                ..
            } => {
                assert!(modulus_gap_min > 0.0);
                assert!(factorwise_dominance);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(routh_hurwitz_tau0(&p, Equilibrium::E2).unwrap().stable);
    }

    #[test]
    fn evidence_json_names() {
        let reports = classify(&ModelParams::default());
        let json = serde_json::to_string(&reports).unwrap();
        for key in [
            "\"a3\"",
            "\"A\"",
            "\"BminusD\"",
            "\"CminusE\"",
            "\"A2minus2B\"",
            "\"B2minus2ACminusD2\"",
            "\"C2minusE2\"",
            "\"modulus_gap_min\"",
        ] {
            assert!(json.contains(key), "missing {key}");
        }
        let back: Vec<StabilityReport> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, reports);
    }
}
