//! SRCC, PLCC and four-parameter logistic mapping.
//!
//! The logistic is `f(o) = (τ1 - τ2) / (1 + exp(-(o - τ3) / τ4)) + τ2`,
//! fitted by Levenberg-Marquardt with Marquardt diagonal scaling. The fit
//! runs from two starts: the conventional one (`τ1 = max y`, `τ2 = min y`,
//! `τ3 = median o`, `τ4 = std o / 4`) and a wide, nearly linear sigmoid
//! equal to the least-squares line over the data. The best result is kept,
//! and the nearly linear member is used whenever the fit ends with a larger
//! residual than the line, so the mapped PLCC is never meaningfully below
//! `|raw PLCC|`.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 2000;
pub const REL_TOLERANCE: f64 = 1e-10;
pub const MIN_TAU4: f64 = 1e-6;
/// Width of the nearly linear start, in multiples of the score range.
const LINEAR_WIDTH: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub tau4: f64,
}

impl LogisticParams {
    fn from_vec(v: &Vector4<f64>) -> Self {
        let tau4 = if v[3].abs() < MIN_TAU4 {
            MIN_TAU4.copysign(if v[3] == 0.0 { 1.0 } else { v[3] })
        } else {
            v[3]
        };
        Self { tau1: v[0], tau2: v[1], tau3: v[2], tau4 }
    }

    fn to_vec(self) -> Vector4<f64> {
        Vector4::new(self.tau1, self.tau2, self.tau3, self.tau4)
    }

    pub fn eval(&self, o: f64) -> f64 {
        let s = 1.0 / (1.0 + (-(o - self.tau3) / self.tau4).exp());
        (self.tau1 - self.tau2) * s + self.tau2
    }

    fn sse(&self, o: &[f64], y: &[f64]) -> f64 {
        o.iter().zip(y).map(|(&a, &b)| (self.eval(a) - b).powi(2)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub plcc_raw: f64,
    pub plcc_mapped: f64,
    pub srcc: f64,
    pub params: LogisticParams,
    pub n: usize,
}

fn check_pair(x: &[f64], y: &[f64], min_len: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(format!("{} vs {} scores", x.len(), y.len())));
    }
    if x.len() < min_len {
        return Err(Error::DegenerateInput(format!(
            "need at least {min_len} samples, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite score".into()));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn pearson_unchecked(x: &[f64], y: &[f64]) -> Result<f64> {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput("constant score vector".into()));
    }
    // Equal spreads (e.g. two rank vectors without ties) divide exactly.
    let denom = if sxx == syy { sxx } else { sxx.sqrt() * syy.sqrt() };
    Ok((sxy / denom).clamp(-1.0, 1.0))
}

/// Pearson linear correlation.
pub fn plcc_raw(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 3)?;
    pearson_unchecked(x, y)
}

/// 1-based fractional ranks; ties share the average of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average-rank ties.
pub fn srcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 3)?;
    pearson_unchecked(&average_ranks(x), &average_ranks(y))
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Least-squares line `y ≈ slope·o + intercept` and its residual sum of squares.
fn affine_fit(o: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let (mo, my) = (mean(o), mean(y));
    let sxy: f64 = o.iter().zip(y).map(|(a, b)| (a - mo) * (b - my)).sum();
    let sxx: f64 = o.iter().map(|a| (a - mo).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mo;
    let sse = o.iter().zip(y).map(|(a, b)| (slope * a + intercept - b).powi(2)).sum();
    (slope, intercept, sse)
}

/// Sigmoid so wide that it matches the least-squares line over the data.
fn near_affine_params(o: &[f64], slope: f64, intercept: f64) -> LogisticParams {
    let (lo, hi) = o.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let center = 0.5 * (lo + hi);
    let tau4 = LINEAR_WIDTH * (hi - lo);
    let mid = slope * center + intercept;
    LogisticParams {
        tau1: mid + 2.0 * slope * tau4,
        tau2: mid - 2.0 * slope * tau4,
        tau3: center,
        tau4,
    }
}

fn levenberg_marquardt(o: &[f64], y: &[f64], start: LogisticParams) -> (LogisticParams, f64) {
    let mut p = start;
    let mut sse = p.sse(o, y);
    if !sse.is_finite() {
        return (p, sse);
    }
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        if sse == 0.0 {
            break;
        }
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        let span = p.tau1 - p.tau2;
        for (&oi, &yi) in o.iter().zip(y) {
            let u = oi - p.tau3;
            let s = 1.0 / (1.0 + (-u / p.tau4).exp());
            let ds = s * (1.0 - s);
            let j = Vector4::new(s, 1.0 - s, -span * ds / p.tau4, -span * ds * u / (p.tau4 * p.tau4));
            let r = span * s + p.tau2 - yi;
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let scale = jtj.diagonal().max().max(1e-300);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj;
            for k in 0..4 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12 * scale);
            }
            let Some(delta) = a.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let cand = LogisticParams::from_vec(&(p.to_vec() + delta));
            let cand_sse = cand.sse(o, y);
            if cand_sse.is_finite() && cand_sse < sse {
                let rel = (sse - cand_sse) / sse;
                p = cand;
                sse = cand_sse;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                if rel < REL_TOLERANCE {
                    return (p, sse);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    (p, sse)
}

/// Fit the four-parameter logistic mapping objective scores `o` to `y`.
pub fn fit_logistic(o: &[f64], y: &[f64]) -> Result<LogisticParams> {
    check_pair(o, y, 4)?;
    let (lo, hi) = o.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if lo == hi {
        return Err(Error::DegenerateInput("objective scores are constant".into()));
    }
    let (ylo, yhi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if ylo == yhi {
        return Err(Error::DegenerateInput("subjective scores are constant".into()));
    }

    let mo = mean(o);
    let std_o = (o.iter().map(|v| (v - mo).powi(2)).sum::<f64>() / o.len() as f64).sqrt();
    let standard = LogisticParams::from_vec(&Vector4::new(yhi, ylo, median(o), std_o / 4.0));
    let (slope, intercept, affine_sse) = affine_fit(o, y);
    let linear = near_affine_params(o, slope, intercept);

    let (p1, s1) = levenberg_marquardt(o, y, standard);
    let (p2, s2) = levenberg_marquardt(o, y, linear);
    let (best, best_sse) = match (s1.is_finite(), s2.is_finite()) {
        (false, false) => return Err(Error::FitDiverged),
        (true, false) => (p1, s1),
        (false, true) => (p2, s2),
        (true, true) if s1 <= s2 => (p1, s1),
        _ => (p2, s2),
    };
    if best_sse > affine_sse {
        let sse = linear.sse(o, y);
        if sse.is_finite() && sse < best_sse {
            return Ok(linear);
        }
    }
    Ok(best)
}

/// PLCC after logistic mapping, together with raw PLCC and SRCC.
pub fn plcc_mapped(o: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    let params = fit_logistic(o, y)?;
    let mapped: Vec<f64> = o.iter().map(|&v| params.eval(v)).collect();
    Ok(CorrelationResult {
        plcc_raw: plcc_raw(o, y)?,
        plcc_mapped: pearson_unchecked(&mapped, y)?,
        srcc: srcc(o, y)?,
        params,
        n: o.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeededRng, UniformSource};

    #[test]
    fn srcc_basic() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(srcc(&x, &x).unwrap(), 1.0);
        let rev = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(srcc(&rev, &x).unwrap(), -1.0);
    }

    #[test]
    fn srcc_with_ties() {
        let x = [1.0, 2.0, 2.0, 4.0];
        let y = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(average_ranks(&x), vec![1.0, 2.5, 2.5, 4.0]);
        // ranks [1, 2.5, 2.5, 4] vs [1, 2, 3, 4]: sxy = 4.5, sxx = 4.5, syy = 5
        let expected = 4.5 / (4.5f64.sqrt() * 5.0f64.sqrt());
        assert!((srcc(&x, &y).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn srcc_constant_is_degenerate() {
        assert!(matches!(srcc(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn plcc_basic() {
        let x = [1.0, 2.0, 3.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((plcc_raw(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((plcc_raw(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!((plcc_raw(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(plcc_raw(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn logistic_recovers_synthetic_curve() {
        let truth = LogisticParams { tau1: 5.0, tau2: 1.0, tau3: 0.0, tau4: 1.0 };
        let o: Vec<f64> = (0..50).map(|i| -4.0 + 8.0 * i as f64 / 49.0).collect();
        let y: Vec<f64> = o.iter().map(|&v| truth.eval(v)).collect();
        let p = fit_logistic(&o, &y).unwrap();
        let rms = (p.sse(&o, &y) / 50.0).sqrt();
        assert!(rms < 1e-6, "rms {rms}");
    }

    #[test]
    fn logistic_fits_affine_data() {
        let o: Vec<f64> = (0..30).map(|i| i as f64 * 0.37).collect();
        let y: Vec<f64> = o.iter().map(|v| 1.5 * v - 2.0).collect();
        let p = fit_logistic(&o, &y).unwrap();
        let rms = (p.sse(&o, &y) / 30.0).sqrt();
        assert!(rms < 1e-6, "rms {rms}");
    }

    #[test]
    fn logistic_rejects_constant_scores() {
        assert!(matches!(
            fit_logistic(&[2.0; 6], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            Err(Error::DegenerateInput(_))
        ));
        assert!(fit_logistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn mapped_identity_and_monotone_transforms() {
        let y: Vec<f64> = (0..20).map(|i| 1.0 + 0.2 * i as f64).collect();
        let r = plcc_mapped(&y, &y).unwrap();
        assert!((r.plcc_mapped - 1.0).abs() < 1e-12);

        let cube: Vec<f64> = y.iter().map(|v| v * v * v).collect();
        let r = plcc_mapped(&cube, &y).unwrap();
        assert_eq!(r.srcc, 1.0);
        assert!(r.plcc_mapped >= r.plcc_raw - 1e-9);

        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        assert_eq!(plcc_mapped(&neg, &y).unwrap().srcc, -1.0);
    }

    #[test]
    fn mapped_never_worse_than_raw_on_noise() {
        let mut rng = SeededRng::new(21);
        for _ in 0..50 {
            let n = 5 + rng.below(40) as usize;
            let o: Vec<f64> = (0..n).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let y: Vec<f64> = o.iter().map(|v| 0.5 * v + rng.uniform(-2.0, 2.0)).collect();
            let r = plcc_mapped(&o, &y).unwrap();
            assert!(r.plcc_mapped >= r.plcc_raw - 1e-9, "{r:?}");
            assert!((-1.0..=1.0).contains(&r.plcc_mapped));
        }
    }

    #[test]
    fn tau4_is_clamped() {
        let p = LogisticParams::from_vec(&Vector4::new(1.0, 0.0, 0.0, 1e-9));
        assert_eq!(p.tau4, MIN_TAU4);
        let p = LogisticParams::from_vec(&Vector4::new(1.0, 0.0, 0.0, -1e-9));
        assert_eq!(p.tau4, -MIN_TAU4);
    }
}
