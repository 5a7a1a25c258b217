//! Fits of `y(L) = A·p^L + B` and the error rates derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{DcgError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    #[serde(rename = "A")]
    pub a: f64,
    pub p: f64,
    #[serde(rename = "B")]
    pub b: f64,
    /// Standard errors of `(A, p, B)`.
    pub stderr: [f64; 3],
    pub covariance: [[f64; 3]; 3],
    /// Sum of squared residuals.
    pub residual: f64,
    /// Constant data: `p = 1`, `A = 0` and `B` is the constant.
    pub degenerate: bool,
}

impl DecayFit {
    pub fn eval(&self, length: f64) -> f64 {
        self.a * self.p.powf(length) + self.b
    }
}

fn model_row(x: &[f64; 3], l: f64) -> (f64, [f64; 3]) {
    let [a, p, b] = *x;
    let pl = p.powf(l);
    let dp = if l == 0.0 { 0.0 } else { a * l * p.powf(l - 1.0) };
    (a * pl + b, [pl, dp, 1.0])
}

struct Data<'a> {
    lengths: &'a [f64],
    values: &'a [f64],
    weights: Vec<f64>,
}

impl Data<'_> {
    fn ssr(&self, x: &[f64; 3]) -> f64 {
        (0..self.values.len())
            .map(|i| self.weights[i] * (model_row(x, self.lengths[i]).0 - self.values[i]).powi(2))
            .sum()
    }

    fn normal_equations(&self, x: &[f64; 3]) -> ([[f64; 3]; 3], [f64; 3]) {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for i in 0..self.values.len() {
            let (f, j) = model_row(x, self.lengths[i]);
            let w = self.weights[i];
            let r = self.values[i] - f;
            for a in 0..3 {
                jtr[a] += w * j[a] * r;
                for b in 0..3 {
                    jtj[a][b] += w * j[a] * j[b];
                }
            }
        }
        (jtj, jtr)
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse of a symmetric positive matrix, refusing near-singular input.
/// Conditioning is judged on the unit-diagonal rescaling.
fn inverse3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let s: Vec<f64> = (0..3).map(|i| m[i][i].sqrt()).collect();
    if s.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            c[i][k] = m[i][k] / (s[i] * s[k]);
        }
    }
    let d = det3(&c);
    if !(d > 1e-15) {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            let (r0, r1) = ((k + 1) % 3, (k + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            let cof = c[r0][c0] * c[r1][c1] - c[r0][c1] * c[r1][c0];
            inv[i][k] = cof / d / (s[i] * s[k]);
        }
    }
    Some(inv)
}

fn initial_guess(lengths: &[f64], values: &[f64]) -> [f64; 3] {
    let n = values.len();
    let tail_count = (n / 4).max(1);
    let tail = values[n - tail_count..].iter().sum::<f64>() / tail_count as f64;
    let head = values[0];
    let mut p0 = 0.99;
    let mid = n / 2;
    for j in [1, mid] {
        let ratio = (values[j] - tail) / (head - tail);
        if ratio > 0.0 && ratio < 1.0 && lengths[j] > lengths[0] {
            p0 = ratio.powf(1.0 / (lengths[j] - lengths[0]));
            break;
        }
    }
    [head - tail, p0.clamp(1e-3, 1.0 - 1e-9), tail]
}

/// Levenberg–Marquardt least squares of `A·p^L + B`.
pub fn fit_decay(lengths: &[f64], values: &[f64]) -> Result<DecayFit> {
    fit_decay_weighted(lengths, values, None)
}

/// As [`fit_decay`], weighting each point by `1/σ²`. Covariances are scaled by the
/// reduced chi-square, so only the relative size of the `σ` matters.
pub fn fit_decay_weighted(lengths: &[f64], values: &[f64], sigmas: Option<&[f64]>) -> Result<DecayFit> {
    if let Some(s) = sigmas {
        if s.len() != values.len() || s.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(DcgError::Contract("sigmas must be positive and match the data".into()));
        }
    }
    if lengths.len() != values.len() {
        return Err(DcgError::Contract("lengths and values differ in size".into()));
    }
    let mut distinct = lengths.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(DcgError::Fit("need at least three distinct lengths".into()));
    }
    if values.iter().chain(lengths).any(|v| !v.is_finite()) {
        return Err(DcgError::Fit("non-finite data".into()));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = values.iter().fold(0.0_f64, |m, v| m.max((v - mean).abs()));
    let data = Data {
        lengths,
        values,
        weights: match sigmas {
            Some(s) => s.iter().map(|v| v.powi(-2)).collect(),
            None => vec![1.0; values.len()],
        },
    };
    if spread <= 1e-12 * mean.abs().max(1.0) {
        return Ok(DecayFit {
            a: 0.0,
            p: 1.0,
            b: mean,
            stderr: [0.0; 3],
            covariance: [[0.0; 3]; 3],
            residual: data.ssr(&[0.0, 1.0, mean]),
            degenerate: true,
        });
    }

    let mut x = initial_guess(lengths, values);
    let mut cost = data.ssr(&x);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        let (jtj, jtr) = data.normal_equations(&x);
        let mut improved = false;
        while lambda < 1e16 {
            let mut m = jtj;
            for i in 0..3 {
                m[i][i] += lambda * jtj[i][i].max(1e-300);
            }
            let Some(inv) = inverse3(&m) else {
                lambda *= 10.0;
                continue;
            };
            let step: Vec<f64> = (0..3).map(|i| (0..3).map(|k| inv[i][k] * jtr[k]).sum()).collect();
            let trial = [x[0] + step[0], x[1] + step[1], x[2] + step[2]];
            let trial_cost = if trial[1] > 0.0 { data.ssr(&trial) } else { f64::INFINITY };
            if trial_cost < cost {
                let rel = (cost - trial_cost) / cost.max(1e-300);
                let small = (0..3).all(|i| step[i].abs() <= 1e-15 * (1.0 + x[i].abs()));
                x = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                improved = !(rel < 1e-15 || small);
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }

    let [a, p, b] = x;
    if !(p > 0.0 && p <= 1.0 + 1e-12) {
        return Err(DcgError::Fit(format!("decay parameter p = {p} outside (0, 1]")));
    }
    let (jtj, _) = data.normal_equations(&x);
    let inv = inverse3(&jtj).ok_or_else(|| DcgError::Fit("singular normal equations".into()))?;
    let dof = (values.len() as f64 - 3.0).max(1.0);
    let sigma2 = cost / dof;
    let mut covariance = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            covariance[i][k] = inv[i][k] * sigma2;
        }
    }
    Ok(DecayFit {
        a,
        p: p.min(1.0),
        b,
        stderr: [0, 1, 2].map(|i| covariance[i][i].max(0.0).sqrt()),
        covariance,
        residual: cost,
        degenerate: false,
    })
}

/// Physical pulses per Clifford.
pub const PULSES_PER_CLIFFORD: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub enum RateKind<'a> {
    /// Error per physical pulse from a reference decay.
    Standard,
    /// Error of the interleaved gate; the fit passed in is the interleaved decay.
    Interleaved { reference: &'a DecayFit },
    /// Leakage per pulse from a fit of the leaked population.
    Leakage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: f64,
    pub stderr: f64,
    /// Set when the estimate came out negative; the value is not clamped.
    pub negative: bool,
}

impl Rate {
    fn new(value: f64, stderr: f64) -> Self {
        Self {
            value,
            stderr,
            negative: value < 0.0,
        }
    }
}

/// Error per Clifford, `(1 − p)/2`.
pub fn error_per_clifford(fit: &DecayFit) -> Rate {
    Rate::new((1.0 - fit.p) / 2.0, fit.stderr[1] / 2.0)
}

pub fn epg_from_rb(fit: &DecayFit, kind: RateKind<'_>) -> Rate {
    match kind {
        RateKind::Standard => {
            let epc = error_per_clifford(fit);
            Rate::new(epc.value / PULSES_PER_CLIFFORD, epc.stderr / PULSES_PER_CLIFFORD)
        }
        RateKind::Interleaved { reference } => {
            let ratio = fit.p / reference.p;
            let rel = ((fit.stderr[1] / fit.p).powi(2) + (reference.stderr[1] / reference.p).powi(2)).sqrt();
            Rate::new((1.0 - ratio) / 2.0, ratio * rel / 2.0)
        }
        RateKind::Leakage => {
            let value = fit.b * (1.0 - fit.p) / PULSES_PER_CLIFFORD;
            let g = [0.0, -fit.b / PULSES_PER_CLIFFORD, (1.0 - fit.p) / PULSES_PER_CLIFFORD];
            let var: f64 = (0..3)
                .map(|i| (0..3).map(|k| g[i] * fit.covariance[i][k] * g[k]).sum::<f64>())
                .sum();
            Rate::new(value, var.max(0.0).sqrt())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn doubling() -> Vec<f64> {
        (0..10).map(|k| (1u32 << k) as f64).collect()
    }

    fn exact_fit(a: f64, p: f64, b: f64) -> DecayFit {
        DecayFit {
            a,
            p,
            b,
            stderr: [0.0; 3],
            covariance: [[0.0; 3]; 3],
            residual: 0.0,
            degenerate: false,
        }
    }

    #[test]
    fn noiseless_recovery() {
        let ls = doubling();
        let ys: Vec<f64> = ls.iter().map(|&l| 0.5 * 0.98f64.powf(l) + 0.5).collect();
        let f = fit_decay(&ls, &ys).unwrap();
        assert!((f.a - 0.5).abs() < 1e-9, "{f:?}");
        assert!((f.p - 0.98).abs() < 1e-9);
        assert!((f.b - 0.5).abs() < 1e-9);
        assert!(!f.degenerate);
    }

    #[test]
    fn leakage_shaped_recovery() {
        let ls: Vec<f64> = (1..=30).map(|k| (k * 10) as f64).collect();
        let ys: Vec<f64> = ls.iter().map(|&l| -1e-3 * 0.99f64.powf(l) + 1e-3).collect();
        let f = fit_decay(&ls, &ys).unwrap();
        assert!((f.a + 1e-3).abs() < 1e-12 && (f.p - 0.99).abs() < 1e-9 && (f.b - 1e-3).abs() < 1e-12, "{f:?}");
    }

    #[test]
    fn constant_data_is_degenerate() {
        let ls = doubling();
        let f = fit_decay(&ls, &vec![0.93; ls.len()]).unwrap();
        assert!(f.degenerate);
        assert_eq!(f.p, 1.0);
        assert!((f.a + f.b - 0.93).abs() < 1e-15);
    }

    #[test]
    fn too_few_lengths() {
        assert!(matches!(fit_decay(&[1.0, 2.0, 2.0], &[0.9, 0.8, 0.8]), Err(DcgError::Fit(_))));
    }

    #[test]
    fn growing_data_is_rejected() {
        let ls = doubling();
        let ys: Vec<f64> = ls.iter().map(|&l| 0.1 * 1.01f64.powf(l)).collect();
        assert!(matches!(fit_decay(&ls, &ys), Err(DcgError::Fit(_))));
    }

    #[test]
    fn noisy_coverage() {
        let ls: Vec<f64> = (0..20).map(|k| 1.0 + 12.0 * k as f64).collect();
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut covered = 0;
        for _ in 0..200 {
            let ys: Vec<f64> = ls.iter().map(|&l| 0.5 * 0.98f64.powf(l) + 0.5 + noise.sample(&mut rng)).collect();
            let f = fit_decay(&ls, &ys).unwrap();
            if (f.p - 0.98).abs() <= 3.0 * f.stderr[1] {
                covered += 1;
            }
        }
        assert!(covered >= 190, "coverage {covered}/200");
    }

    #[test]
    fn rate_formulas() {
        let perfect = exact_fit(0.5, 1.0, 0.5);
        assert_eq!(epg_from_rb(&perfect, RateKind::Standard).value, 0.0);
        assert_eq!(epg_from_rb(&perfect, RateKind::Leakage).value, 0.0);
        assert_eq!(epg_from_rb(&perfect, RateKind::Interleaved { reference: &perfect }).value, 0.0);

        let leak = exact_fit(-1e-3, 0.9, 1e-3);
        assert!((epg_from_rb(&leak, RateKind::Leakage).value - 5e-5).abs() < 1e-18);

        let f = exact_fit(0.5, 0.99, 0.5);
        assert!((error_per_clifford(&f).value - 0.005).abs() < 1e-15);
        assert!((epg_from_rb(&f, RateKind::Standard).value - 0.0025).abs() < 1e-15);

        let reference = exact_fit(0.5, 0.98, 0.5);
        let better = epg_from_rb(&f, RateKind::Interleaved { reference: &reference });
        assert!(better.negative && better.value < 0.0);
        let worse = epg_from_rb(&reference, RateKind::Interleaved { reference: &f });
        assert!((worse.value - (1.0 - 0.98 / 0.99) / 2.0).abs() < 1e-15 && !worse.negative);
    }
}
