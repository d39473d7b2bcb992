//! Numeric layer: growth constants from series coefficients, moment
//! constants, the saddle-point formula for factorial moments with an
//! independent contour-integral oracle, and normality diagnostics.
//!
//! Coefficient sequences are passed scaled: the true `A_n` is `a[n] * scale^n`,
//! so that sequences growing like `12^n` stay inside `f64` range.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::distribution::{DistributionTable, LabeledConfigCounts};
use crate::error::{Error, Result};
use crate::series::Series3;

/// Exponent of `n` in `A_n ~ c n^alpha rho^n`, imposed in the ratio method.
pub const ALPHA: f64 = -2.5;

/// Least number of coefficients `estimate_growth` accepts.
pub const MIN_LEN: usize = 30;

/// `[z^n] A`, `[z^n x] A`, `[z^n x^2] A` at `u = 1`, each divided by
/// `scale^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledCoefficients {
    pub scale: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// `v / scale^n` without overflowing on the way.
pub fn scaled_f64(v: &BigInt, n: usize, scale: f64) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let bits = v.bits() as i64;
    let shift = (bits - 60).max(0);
    let top = (v.abs() >> shift as usize).to_f64().unwrap_or(0.0);
    let log2 = top.log2() + shift as f64 - n as f64 * scale.log2();
    let mag = log2.exp2();
    if v.is_negative() {
        -mag
    } else {
        mag
    }
}

impl ScaledCoefficients {
    /// Reads the first three x-layers of a solved series at `u = 1`.
    pub fn from_series(s: &Series3, scale: f64) -> Self {
        let layer = |k: usize| -> Vec<f64> {
            s.counts_at_u1(k).iter().enumerate().map(|(n, v)| scaled_f64(v, n, scale)).collect()
        };
        ScaledCoefficients { scale, a: layer(0), b: layer(1), c: layer(2) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthDiagnostics {
    /// `|q_N - q_{N-1}|` after the corrected ratio and each Aitken stage.
    pub residuals: [f64; 3],
    /// Whether the last few stage-two residuals shrink.
    pub residuals_shrinking: bool,
    /// Exponent fitted freely from the tail of the ratio sequence.
    pub alpha_free: f64,
    /// Coefficients used, counted from the first positive one.
    pub used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub rho0: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// `c'(0)/c(0)`.
    pub c_log_deriv: f64,
    pub diagnostics: GrowthDiagnostics,
}

fn aitken(q: &[f64]) -> Vec<f64> {
    q.windows(3)
        .map(|w| {
            let d2 = w[2] - 2.0 * w[1] + w[0];
            if d2.abs() <= 1e-14 * w[2].abs() {
                w[2]
            } else {
                w[2] - (w[2] - w[1]).powi(2) / d2
            }
        })
        .collect()
}

fn last_step(q: &[f64]) -> f64 {
    match q {
        [.., a, b] => (b - a).abs(),
        _ => f64::NAN,
    }
}

/// Least squares in the basis `n, 1, 1/n` over the given points; returns the
/// three coefficients.
fn fit_affine_tail(points: &[(f64, f64)]) -> [f64; 3] {
    let basis = |n: f64| [n, 1.0, 1.0 / n];
    let mut m = [[0.0; 4]; 3];
    for &(n, y) in points {
        let b = basis(n);
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += b[i] * b[j];
            }
            m[i][3] += b[i] * y;
        }
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        for row in 0..3 {
            if row != col && m[col][col] != 0.0 {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    [m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]]
}

/// Estimates `rho(0)`, `rho'(0)`, `rho''(0)` and `c'(0)/c(0)` assuming
/// `[z^n] F(z, 1, x) ~ c(x) n^(-5/2) rho(x)^n`.
///
/// `rho0` is the ratio `A_n / A_(n-1)` corrected by `(n/(n-1))^(5/2)`, then
/// accelerated by two Aitken stages. `B_n/A_n = d/dx log a_n(x)` at 0 is
/// affine in `n` with slope `rho'/rho` and intercept `c'/c`;
/// `2 C_n/A_n - (B_n/A_n)^2` is the second log-derivative, with slope
/// `rho''/rho - (rho'/rho)^2`. Both are fitted over the last third of the
/// range with a `1/n` correction term.
pub fn estimate_growth(s: &ScaledCoefficients) -> Result<GrowthEstimate> {
    let start = s.a.iter().position(|&v| v > 0.0).unwrap_or(s.a.len());
    let a = &s.a[start..];
    if a.len() < MIN_LEN {
        return Err(Error::Usage(format!("need at least {MIN_LEN} positive coefficients, got {}", a.len())));
    }
    if a.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::Usage("coefficients must be positive and finite".into()));
    }
    let idx = |i: usize| (start + i) as f64;
    let q0: Vec<f64> = (1..a.len())
        .map(|i| {
            let n = idx(i);
            s.scale * a[i] / a[i - 1] * (n / (n - 1.0)).powf(-ALPHA)
        })
        .collect();
    let q1 = aitken(&q0);
    let q2 = aitken(&q1);
    let rho0 = *q2.last().expect("length checked");
    let tail = q2.len().saturating_sub(5);
    let steps: Vec<f64> = q2[tail..].windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let residuals_shrinking = steps.windows(2).all(|w| w[1] <= w[0] * 1.5 + 1e-15);

    // log r_n = log rho + alpha log(n/(n-1)), fitted on the tail
    let from = a.len() * 2 / 3;
    let pts: Vec<(f64, f64)> = (from.max(1)..a.len())
        .map(|i| {
            let n = idx(i);
            ((n / (n - 1.0)).ln(), (s.scale * a[i] / a[i - 1]).ln())
        })
        .collect();
    let alpha_free = {
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p.0, y + p.1));
        let (mx, my) = (sx / m, sy / m);
        let (num, den) = pts.iter().fold((0.0, 0.0), |(nu, de), p| (nu + (p.0 - mx) * (p.1 - my), de + (p.0 - mx).powi(2)));
        if den > 0.0 {
            num / den
        } else {
            f64::NAN
        }
    };

    let have_x = s.b.len() == s.a.len() && s.c.len() == s.a.len() && s.b.iter().any(|&v| v != 0.0);
    let (rho1, rho2, c_log_deriv) = if have_x {
        let first: Vec<(f64, f64)> = (from..a.len()).map(|i| (idx(i), s.b[start + i] / a[i])).collect();
        let second: Vec<(f64, f64)> = (from..a.len())
            .map(|i| {
                let m1 = s.b[start + i] / a[i];
                (idx(i), 2.0 * s.c[start + i] / a[i] - m1 * m1)
            })
            .collect();
        let [slope1, icept1, _] = fit_affine_tail(&first);
        let [slope2, _, _] = fit_affine_tail(&second);
        let rho1 = slope1 * rho0;
        (rho1, rho0 * (slope2 + slope1 * slope1), icept1)
    } else {
        (0.0, 0.0, 0.0)
    };
    Ok(GrowthEstimate {
        rho0,
        rho1,
        rho2,
        c_log_deriv,
        diagnostics: GrowthDiagnostics {
            residuals: [last_step(&q0), last_step(&q1), last_step(&q2)],
            residuals_shrinking,
            alpha_free,
            used: a.len(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentConstants {
    pub c1: f64,
    pub c2_squared: f64,
}

/// `E[X_n] ~ c1 n`, `Var X_n ~ c2^2 n`.
pub fn moment_constants(g: &GrowthEstimate) -> MomentConstants {
    let (r, r1, r2) = (g.rho0, g.rho1, g.rho2);
    MomentConstants { c1: r1 / r, c2_squared: (r2 * r + r1 * r - r1 * r1) / (r * r) }
}

/// `f = log rho(x)` and `g = log c(x)` near 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleInput {
    pub n: u64,
    pub k: u64,
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub g0: f64,
}

impl SaddleInput {
    /// From Taylor coefficients `f(x) = sum f_j x^j`, `g(x) = sum g_j x^j`.
    pub fn from_taylor(n: u64, k: u64, f: &[f64], g: &[f64]) -> Self {
        let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        SaddleInput { n, k, f0: at(f, 0), f1: at(f, 1), f2: 2.0 * at(f, 2), g0: at(g, 0) }
    }

    /// `k / sqrt(n)` lies outside `[0.1, 10]`.
    pub fn outside_central_regime(&self) -> bool {
        let t = self.k as f64 / (self.n as f64).sqrt();
        !(0.1..=10.0).contains(&t)
    }
}

/// Log of `c0 n^(k-5/2) rho^n (rho'/rho)^k exp(k^2/(2n) (rho'' rho/rho'^2 - 1))`,
/// which approximates `k! [z^n x^k] F`.
pub fn saddle_factorial_moment(s: &SaddleInput) -> Result<f64> {
    if s.f1 <= 0.0 {
        return Err(Error::Usage(format!("f'(0) = {} must be positive", s.f1)));
    }
    let (n, k) = (s.n as f64, s.k as f64);
    let mut out = s.g0 + (k + ALPHA) * n.ln() + n * s.f0;
    if s.k > 0 {
        out += k * s.f1.ln() + k * k / (2.0 * n) * (s.f2 / (s.f1 * s.f1));
    }
    Ok(out)
}

/// Log of `[x^k] exp(n f(x) + g(x))` by the trapezoidal rule on the circle of
/// radius `k / (n f'(0))`, doubling the node count until two successive
/// values agree to `1e-13`. The exponent is taken relative to its value at
/// the positive real point, term by term through `e^{ij theta} - 1`, so large
/// constant parts never cancel in floating point.
pub fn contour_oracle(f: &[f64], g: &[f64], n: u64, k: u64) -> Result<f64> {
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    if k == 0 {
        return Ok(n as f64 * at(f, 0) + at(g, 0));
    }
    let f1 = at(f, 1);
    if f1 <= 0.0 {
        return Err(Error::Usage(format!("f'(0) = {f1} must be positive")));
    }
    let (nf, kf) = (n as f64, k as f64);
    let r = kf / (nf * f1);
    // weights[j] = (n f_j + g_j) r^j
    let weights: Vec<f64> =
        (0..f.len().max(g.len())).map(|j| (nf * at(f, j) + at(g, j)) * r.powi(j as i32)).collect();
    let shift = weights.iter().sum::<f64>() - kf * r.ln();
    let exponent = |theta: f64| -> Complex64 {
        let mut z = Complex64::new(0.0, -kf * theta);
        for (j, w) in weights.iter().enumerate().skip(1) {
            let phi = j as f64 * theta;
            let half = (phi / 2.0).sin();
            z += Complex64::new(-2.0 * half * half, phi.sin()) * w;
        }
        z
    };
    let integrate = |m: usize| -> f64 {
        let h = std::f64::consts::TAU / m as f64;
        let sum: f64 = (0..m).map(|j| exponent(j as f64 * h).exp().re).sum();
        sum / m as f64
    };
    let mut m = 64usize;
    let mut prev = integrate(m);
    while m < 1 << 24 {
        m *= 2;
        let cur = integrate(m);
        if (cur - prev).abs() <= 1e-13 * cur.abs() {
            if cur <= 0.0 {
                return Err(Error::Internal("contour integral is not positive".into()));
            }
            return Ok(shift + cur.ln());
        }
        prev = cur;
    }
    Err(Error::ResourceLimit("contour quadrature did not converge".into()))
}

/// Relative gap between the closed formula and the oracle, both read as
/// `k! [x^k] n^(-5/2) exp(n f + g)`.
pub fn saddle_vs_contour(f: &[f64], g: &[f64], n: u64, k: u64) -> Result<(f64, f64, f64)> {
    let formula = saddle_factorial_moment(&SaddleInput::from_taylor(n, k, f, g))?;
    let oracle = contour_oracle(f, g, n, k)? + ln_factorial(k) + ALPHA * (n as f64).ln();
    Ok((formula, oracle, (formula - oracle).exp_m1().abs()))
}

pub fn ln_factorial(k: u64) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwRow {
    pub n: usize,
    pub k: usize,
    /// `E[(X)_k] / (mu^k exp(k(k-1)/2 (sigma^2 - mu)/mu^2))`.
    pub ratio: Option<f64>,
    /// The same with `k^2/2` in the exponent.
    pub ratio_k_squared: Option<f64>,
    pub degenerate: bool,
}

/// Factorial moments against the Gao-Wormald form, from exact laws.
pub fn gw_condition_check(dists: &[DistributionTable], k_max: usize) -> Vec<GwRow> {
    let mut rows = Vec::new();
    for d in dists {
        let (mu, var) = (d.mean(), d.variance());
        let degenerate = !(mu > 0.0 && var > 0.0);
        for k in 0..=k_max {
            let (ratio, ratio_k_squared) = if k <= 1 {
                (Some(1.0), if degenerate { None } else { Some(1.0 / ((var - mu) / (2.0 * mu * mu)).exp()) })
            } else if degenerate {
                (None, None)
            } else {
                let t = (var - mu) / (mu * mu);
                let fm = d.factorial_moment(k);
                let kf = k as f64;
                let base = kf * mu.ln();
                let pair = (fm.ln() - base - kf * (kf - 1.0) / 2.0 * t).exp();
                let sq = (fm.ln() - base - kf * kf / 2.0 * t).exp();
                (Some(pair), Some(sq))
            };
            let ratio_k_squared = if k == 0 { Some(1.0) } else { ratio_k_squared };
            rows.push(GwRow { n: d.n, k, ratio, ratio_k_squared, degenerate });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub n: usize,
    pub k: usize,
    pub m_circ_cross: String,
    pub m_circ: String,
    /// `m_circ_cross + (mu/2)^k m_n`.
    pub upper: f64,
    pub left_holds: bool,
    pub left_equal: bool,
    /// `m_circ - upper`; the small-order term is left unasserted.
    pub residual: f64,
}

/// `(mu_n, m_n)` per row, in the same order as `rows`.
pub fn sandwich_check(rows: &[LabeledConfigCounts], stats: &[(f64, u64)]) -> Vec<SandwichRow> {
    rows.iter()
        .zip(stats)
        .map(|(r, &(mu, total))| {
            let cross = r.m_circ_cross.to_f64().unwrap_or(f64::INFINITY);
            let circ = r.m_circ.to_f64().unwrap_or(f64::INFINITY);
            let upper = cross + (mu / 2.0).powi(r.k as i32) * total as f64;
            SandwichRow {
                n: r.n,
                k: r.k,
                m_circ_cross: r.m_circ_cross.to_string(),
                m_circ: r.m_circ.to_string(),
                upper,
                left_holds: r.m_circ_cross <= r.m_circ,
                left_equal: r.m_circ_cross == r.m_circ,
                residual: circ - upper,
            }
        })
        .collect()
}

/// Standard normal distribution function, `erfc(-x/sqrt 2)/2` with the
/// `libm` complementary error function (accurate to a few ulp).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov distance between a finite law `(point, mass)` and the
/// standard normal law: the supremum is attained at an atom, from the left
/// or from the right.
pub fn ks_distance(atoms: &[(f64, f64)]) -> f64 {
    let mut pts = atoms.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pts.iter().map(|p| p.1).sum();
    let mut below = 0.0;
    let mut best: f64 = 0.0;
    for (x, w) in pts {
        let phi = normal_cdf(x);
        best = best.max((below / total - phi).abs());
        below += w;
        best = best.max((below / total - phi).abs());
    }
    best
}

/// Kolmogorov distance of the standardized exact law from the standard
/// normal.
pub fn ks_normality(d: &DistributionTable) -> Result<f64> {
    let (mu, var) = (d.mean(), d.variance());
    if d.total() == 0 || var <= 0.0 {
        return Err(Error::Usage(format!("degenerate distribution at n = {}", d.n)));
    }
    let sd = var.sqrt();
    let atoms: Vec<(f64, f64)> = d
        .histogram
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > 0)
        .map(|(l, &m)| ((l as f64 - mu) / sd, m as f64))
        .collect();
    Ok(ks_distance(&atoms))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(len: usize, rho: f64, r1: f64, r2: f64, c: f64, c1: f64, c2: f64) -> ScaledCoefficients {
        // a_n(x) = c(x) n^(-5/2) rho(x)^n with rho(x) = rho + r1 x + r2 x^2/2,
        // c(x) = c + c1 x + c2 x^2 / 2, expanded to second order in x
        let (lr1, lr2) = (r1 / rho, r2 / rho - (r1 / rho).powi(2));
        let (lc1, lc2) = (c1 / c, c2 / c - (c1 / c).powi(2));
        let mut s = ScaledCoefficients { scale: rho, a: vec![], b: vec![], c: vec![] };
        for n in 0..len {
            let nf = n.max(1) as f64;
            let a = if n == 0 { 0.0 } else { c * nf.powf(ALPHA) };
            let d1 = nf * lr1 + lc1;
            let d2 = nf * lr2 + lc2;
            s.a.push(a);
            s.b.push(a * d1);
            s.c.push(a * (d2 + d1 * d1) / 2.0);
        }
        s
    }

    #[test]
    fn pure_power_law_growth() {
        let s = synthetic(200, 12.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let g = estimate_growth(&s).unwrap();
        assert!((g.rho0 - 12.0).abs() < 1e-6, "{g:?}");
        assert!((g.diagnostics.alpha_free - ALPHA).abs() < 1e-6);
    }

    #[test]
    fn planted_derivatives_are_recovered() {
        let (rho, r1, r2) = (12.0, 0.9, 0.35);
        let s = synthetic(200, rho, r1, r2, 0.7, 0.2, -0.1);
        let g = estimate_growth(&s).unwrap();
        for (got, want) in [(g.rho0, rho), (g.rho1, r1), (g.rho2, r2)] {
            assert!(((got - want) / want).abs() < 1e-3, "{got} vs {want}");
        }
        assert!((g.c_log_deriv - 0.2 / 0.7).abs() < 1e-6);
    }

    #[test]
    fn short_or_bad_input_is_rejected() {
        let mut s = synthetic(20, 12.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        assert!(estimate_growth(&s).is_err());
        s = synthetic(40, 12.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        s.a[20] = -1.0;
        assert!(estimate_growth(&s).is_err());
    }

    #[test]
    fn moment_constants_specialize() {
        let g = GrowthEstimate {
            rho0: 4.0,
            rho1: 0.0,
            rho2: 2.0,
            c_log_deriv: 0.0,
            diagnostics: GrowthDiagnostics { residuals: [0.0; 3], residuals_shrinking: true, alpha_free: ALPHA, used: 30 },
        };
        let m = moment_constants(&g);
        assert_eq!(m.c1, 0.0);
        assert!((m.c2_squared - 0.5).abs() < 1e-15);
    }

    #[test]
    fn saddle_special_cases() {
        let s = SaddleInput { n: 100, k: 0, f0: 2.0_f64.ln(), f1: 0.3, f2: 0.1, g0: 0.5 };
        let want = 0.5 + ALPHA * 100f64.ln() + 100.0 * 2.0_f64.ln();
        assert!((saddle_factorial_moment(&s).unwrap() - want).abs() < 1e-12);
        // rho'' rho = rho'^2 means f'' = 0
        let s = SaddleInput { n: 100, k: 5, f0: 0.0, f1: 0.3, f2: 0.0, g0: 0.0 };
        let want = (5.0 + ALPHA) * 100f64.ln() + 5.0 * 0.3f64.ln();
        assert!((saddle_factorial_moment(&s).unwrap() - want).abs() < 1e-12);
        assert!(saddle_factorial_moment(&SaddleInput { f1: 0.0, ..s }).is_err());
        assert!(SaddleInput::from_taylor(10_000, 5, &[0.0, 1.0], &[]).outside_central_regime());
    }

    #[test]
    fn oracle_on_exponential() {
        for (n, k) in [(10u64, 3u64), (1000, 30), (100_000, 316)] {
            let got = contour_oracle(&[0.0, 1.0], &[0.0], n, k).unwrap();
            let want = k as f64 * (n as f64).ln() - ln_factorial(k);
            assert!(((got - want).exp() - 1.0).abs() < 1e-8, "n={n} k={k}");
        }
        let got = contour_oracle(&[0.2, 1.0], &[0.3], 50, 0).unwrap();
        assert!((got - (50.0 * 0.2 + 0.3)).abs() < 1e-12);
        assert!(contour_oracle(&[0.0, -1.0], &[], 10, 2).is_err());
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457).abs() < 1e-12);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_780).abs() < 1e-12);
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_of_simple_laws() {
        assert!((ks_distance(&[(0.0, 1.0)]) - 0.5).abs() < 1e-12);
        // the gap below the first atom is Phi(-1); the supremum sits just
        // inside the atoms and equals Phi(1) - 1/2
        let two = [(-1.0, 1.0), (1.0, 1.0)];
        assert!((normal_cdf(-1.0) - 0.15866).abs() < 1e-4);
        assert!((ks_distance(&two) - (normal_cdf(1.0) - 0.5)).abs() < 1e-12);
        let d = DistributionTable { n: 1, histogram: vec![1, 0, 1] };
        assert!((ks_normality(&d).unwrap() - ks_distance(&two)).abs() < 1e-12);
        assert!(ks_normality(&DistributionTable { n: 1, histogram: vec![3] }).is_err());
    }

    #[test]
    fn gw_identity_rows() {
        let d = DistributionTable { n: 3, histogram: vec![2, 5, 3, 1] };
        let rows = gw_condition_check(&[d], 3);
        assert_eq!(rows[0].ratio, Some(1.0));
        assert_eq!(rows[1].ratio, Some(1.0));
        assert_eq!(rows[0].ratio_k_squared, Some(1.0));
        let flat = gw_condition_check(&[DistributionTable { n: 2, histogram: vec![0, 4] }], 2);
        assert!(flat.iter().all(|r| r.degenerate));
        assert_eq!(flat[2].ratio, None);
    }
}
