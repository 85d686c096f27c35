//! Multiplicative seasonal ARIMA fitted by least squares conditional on the
//! AR start values. Pre-sample MA innovations are backcast and the objective
//! carries their log-determinant term, which is the Gaussian likelihood of
//! the MA part.
//!
//! The model for the differenced series `w` is
//! `phi(B) Phi(B^s) (w_t - mu) = theta(B) Theta(B^s) e_t`.
//! Coefficients are searched through partial-autocorrelation coordinates
//! (`tanh` of free parameters), which keeps the AR part stationary and the MA
//! part invertible during the simplex search.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::simplex::{nelder_mead, NelderMeadOptions};
use super::transform::{
    boxcox, difference_levels, integrate_forward, inv_boxcox, select_boxcox_lambda,
};
use super::{ForecastError, Result};
use crate::tsa;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SarimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub sp: usize,
    pub sd: usize,
    pub sq: usize,
    pub s: usize,
}

impl SarimaOrder {
    pub fn new(
        p: usize,
        d: usize,
        q: usize,
        sp: usize,
        sd: usize,
        sq: usize,
        s: usize,
    ) -> Result<Self> {
        let o = Self {
            p,
            d,
            q,
            sp,
            sd,
            sq,
            s,
        };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.d <= 2
            && self.sd <= 1
            && self.p <= 2
            && self.q <= 2
            && self.sp <= 2
            && self.sq <= 2
            && self.s >= 2;
        if ok {
            Ok(())
        } else {
            Err(ForecastError::InvalidOrder(self.to_string()))
        }
    }

    /// Number of ARMA coefficients, `p + q + P + Q`.
    pub fn arma_terms(&self) -> usize {
        self.p + self.q + self.sp + self.sq
    }

    /// Largest AR lag of the multiplied polynomial.
    pub fn ar_span(&self) -> usize {
        self.p + self.s * self.sp
    }

    pub fn has_mean(&self) -> bool {
        self.d + self.sd <= 1
    }

    /// Differencing lags applied in sequence: seasonal first, then regular.
    pub fn difference_lags(&self) -> Vec<usize> {
        let mut lags = vec![self.s; self.sd];
        lags.extend(std::iter::repeat_n(1, self.d));
        lags
    }
}

impl std::fmt::Display for SarimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({},{},{})({},{},{})[{}]",
            self.p, self.d, self.q, self.sp, self.sd, self.sq, self.s
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SarimaModel {
    pub order: SarimaOrder,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub seasonal_ar: Vec<f64>,
    pub seasonal_ma: Vec<f64>,
    /// Mean of the differenced series, when estimated.
    pub mean: Option<f64>,
    /// `mu * (1 - sum of AR coefficients of the multiplied polynomial)`.
    pub intercept: f64,
    pub boxcox_lambda: Option<f64>,
    pub residual_variance: f64,
    pub aic: f64,
    pub n_eff: usize,
    pub converged: bool,
    /// Residual variance is numerically zero.
    pub degenerate: bool,
    #[serde(skip)]
    transformed: Vec<f64>,
    #[serde(skip)]
    residuals: Vec<f64>,
}

/// Sparse polynomial `1 + sum c_k B^k` stored as `(k, c_k)`.
type LagPoly = Vec<(usize, f64)>;

fn multiply(a: &[f64], b: &[f64], s: usize) -> LagPoly {
    // (1 + sum a_i B^i)(1 + sum b_j B^{js}) without the leading 1
    let mut dense = vec![0.0; a.len() + s * b.len() + 1];
    dense[0] = 1.0;
    for (i, ai) in a.iter().enumerate() {
        dense[i + 1] += ai;
    }
    for (j, bj) in b.iter().enumerate() {
        dense[(j + 1) * s] += bj;
        for (i, ai) in a.iter().enumerate() {
            dense[(j + 1) * s + i + 1] += ai * bj;
        }
    }
    dense
        .into_iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| *c != 0.0)
        .collect()
}

/// Maps partial autocorrelations in (-1, 1) to coefficients `phi` of a
/// stationary `1 - sum phi_i B^i`.
fn pacf_to_coefficients(r: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(r.len());
    for (k, &rk) in r.iter().enumerate() {
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - rk * prev[k - 1 - j];
        }
        phi.push(rk);
    }
    phi
}

const PACF_LIMIT: f64 = 0.9999;

fn squash(u: f64) -> f64 {
    u.tanh().clamp(-PACF_LIMIT, PACF_LIMIT)
}

/// Decoded parameter vector.
struct Coefs {
    mean: f64,
    ar: Vec<f64>,
    ma: Vec<f64>,
    sar: Vec<f64>,
    sma: Vec<f64>,
}

struct Problem<'a> {
    order: SarimaOrder,
    w: &'a [f64],
    burn_in: usize,
    mean_center: f64,
    mean_scale: f64,
}

impl Problem<'_> {
    fn n_params(&self) -> usize {
        self.order.arma_terms() + usize::from(self.order.has_mean())
    }

    fn decode(&self, u: &[f64]) -> Coefs {
        let o = &self.order;
        let mut it = u.iter().copied();
        let mean = if o.has_mean() {
            self.mean_center + self.mean_scale * it.next().expect("mean parameter")
        } else {
            0.0
        };
        let mut take = |k: usize| -> Vec<f64> {
            (0..k)
                .map(|_| squash(it.next().expect("coefficient")))
                .collect()
        };
        let ar = pacf_to_coefficients(&take(o.p));
        let ma = pacf_to_coefficients(&take(o.q))
            .into_iter()
            .map(|c| -c)
            .collect();
        let sar = pacf_to_coefficients(&take(o.sp));
        let sma = pacf_to_coefficients(&take(o.sq))
            .into_iter()
            .map(|c| -c)
            .collect();
        Coefs {
            mean,
            ar,
            ma,
            sar,
            sma,
        }
    }

    fn residuals(&self, c: &Coefs) -> (Vec<f64>, f64, f64) {
        let s = self.order.s;
        // AR as 1 - sum phi: multiply the negated coefficients, then negate back
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        let ar_poly: LagPoly = multiply(&neg(&c.ar), &neg(&c.sar), s)
            .into_iter()
            .map(|(k, v)| (k, -v))
            .collect();
        let ma_poly = multiply(&c.ma, &c.sma, s);
        css_residuals(self.w, c.mean, &ar_poly, &ma_poly, self.burn_in)
    }

    /// Sum of squares including the backcast innovations, and the log
    /// determinant of their normal matrix.
    fn sums(&self, c: &Coefs) -> (f64, f64) {
        let (e, presample, log_det) = self.residuals(c);
        let ss = e[self.burn_in..].iter().map(|e| e * e).sum::<f64>() + presample;
        (ss, log_det)
    }

    /// Negative Gaussian log-likelihood with the variance profiled out, up to a constant.
    fn objective(&self, u: &[f64]) -> f64 {
        let (ss, log_det) = self.sums(&self.decode(u));
        let n = (self.w.len() - self.burn_in) as f64;
        n * (ss / n).max(f64::MIN_POSITIVE).ln() + log_det
    }
}

/// Residuals `e_t = z_t - sum ar_k z_{t-k} - sum ma_k e_{t-k}`, `z = w - mu`,
/// from `burn_in` on, and the squared norm of the innovations before
/// `burn_in` that the MA part reaches back to. Those innovations are
/// backcast by minimising the total sum of squares instead of being set to
/// zero, so a near-unit-root MA does not carry a start-up error through the
/// sample.
fn css_residuals(
    w: &[f64],
    mu: f64,
    ar: &[(usize, f64)],
    ma: &[(usize, f64)],
    burn_in: usize,
) -> (Vec<f64>, f64, f64) {
    let n = w.len();
    let mut e = vec![0.0; n];
    for t in burn_in..n {
        let mut v = w[t] - mu;
        for &(k, c) in ar {
            v -= c * (w[t - k] - mu);
        }
        for &(k, c) in ma {
            if t >= burn_in + k {
                v -= c * e[t - k];
            }
        }
        e[t] = v;
    }
    let m = ma.iter().map(|(k, _)| *k).max().unwrap_or(0);
    let rows = n.saturating_sub(burn_in);
    if m == 0 || rows == 0 {
        return (e, 0.0, 0.0);
    }
    // column j: response of the residuals to a unit innovation j + 1 steps before burn_in
    let mut cols = vec![0.0; rows * m];
    for (j, col) in cols.chunks_exact_mut(rows).enumerate() {
        for r in 0..rows {
            let mut v = 0.0;
            for &(k, c) in ma {
                if r >= k {
                    v -= c * col[r - k];
                } else if k - r == j + 1 {
                    v -= c;
                }
            }
            col[r] = v;
        }
    }
    let h = DMatrix::from_vec(rows, m, cols);
    let e0 = DVector::from_column_slice(&e[burn_in..]);
    let mut gram = h.tr_mul(&h);
    for i in 0..m {
        gram[(i, i)] += 1.0;
    }
    let Some(chol) = gram.cholesky() else {
        return (e, 0.0, 0.0);
    };
    let x = -chol.solve(&h.tr_mul(&e0));
    let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let adj = e0 + h * &x;
    e[burn_in..].copy_from_slice(adj.as_slice());
    (e, x.norm_squared(), log_det)
}

pub const FIT_RESTARTS: usize = 5;
const DEGENERATE_VARIANCE: f64 = 1e-8;

/// Fits `order` to the series without a Box-Cox transform.
pub fn fit_sarima(series: &[f64], order: SarimaOrder) -> Result<SarimaModel> {
    fit_sarima_with(series, order, None, None)
}

/// Fits `order` after an optional Box-Cox transform. `burn_in` fixes the
/// first residual index on the differenced scale so that models of different
/// orders are compared on the same observations; it defaults to the order's
/// own AR span.
pub fn fit_sarima_with(
    series: &[f64],
    order: SarimaOrder,
    boxcox_lambda: Option<f64>,
    burn_in: Option<usize>,
) -> Result<SarimaModel> {
    order.validate()?;
    let transformed = match boxcox_lambda {
        Some(l) => boxcox(series, l)?,
        None => series.to_vec(),
    };
    let lags = order.difference_lags();
    let w = difference_levels(&transformed, &lags)
        .pop()
        .expect("levels");
    let burn_in = burn_in.unwrap_or(0).max(order.ar_span());
    let min_len = 10 + order.arma_terms();
    if w.len() < burn_in + min_len {
        return Err(ForecastError::SeriesTooShort {
            len: series.len(),
            min: series.len() - w.len() + burn_in + min_len,
        });
    }

    let center = crate::stats::mean(&w);
    let scale = crate::stats::variance(&w)
        .sqrt()
        .max(1e-8 * (1.0 + center.abs()));
    let prob = Problem {
        order,
        w: &w,
        burn_in,
        mean_center: center,
        mean_scale: scale,
    };
    let k = prob.n_params();
    let opts = NelderMeadOptions {
        max_evals: 600 * (k + 1),
        f_tol: 1e-12,
        x_tol: 1e-7,
        initial_step: 0.3,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(order_seed(&order));
    let jitter = Normal::new(0.0, 0.5).expect("valid sd");
    let mut best: Option<super::simplex::Minimum> = None;
    let mut any_converged = false;
    for start in 0..FIT_RESTARTS {
        let x0: Vec<f64> = if start == 0 {
            vec![0.0; k]
        } else {
            (0..k).map(|_| jitter.sample(&mut rng)).collect()
        };
        let m = nelder_mead(|u| prob.objective(u), &x0, &opts);
        any_converged |= m.converged;
        if best.as_ref().is_none_or(|b| m.f < b.f) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    let coefs = prob.decode(&best.x);
    let (residuals, _, _) = prob.residuals(&coefs);
    let (ss, log_det) = prob.sums(&coefs);
    let n_eff = w.len() - burn_in;
    let residual_variance = ss / n_eff as f64;
    let degenerate = residual_variance < DEGENERATE_VARIANCE * (1.0 + center * center);
    let n_coef = k + 1;
    let aic = n_eff as f64 * residual_variance.max(f64::MIN_POSITIVE).ln()
        + log_det
        + 2.0 * n_coef as f64;

    let full_ar: LagPoly = {
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        multiply(&neg(&coefs.ar), &neg(&coefs.sar), order.s)
            .into_iter()
            .map(|(k, v)| (k, -v))
            .collect()
    };
    if spectral_radius(&full_ar) >= 1.0 {
        return Err(ForecastError::NonStationaryFit(order.to_string()));
    }
    let ar_sum: f64 = full_ar.iter().map(|(_, c)| c).sum();
    let mean = order.has_mean().then_some(coefs.mean);
    if !any_converged {
        log::debug!("SARIMA {order} simplex search hit its evaluation budget");
    }
    Ok(SarimaModel {
        order,
        ar: coefs.ar,
        ma: coefs.ma,
        seasonal_ar: coefs.sar,
        seasonal_ma: coefs.sma,
        intercept: mean.map_or(0.0, |m| m * (1.0 - ar_sum)),
        mean,
        boxcox_lambda,
        residual_variance,
        aic,
        n_eff,
        converged: any_converged,
        degenerate,
        transformed,
        residuals,
    })
}

fn order_seed(o: &SarimaOrder) -> u64 {
    [o.p, o.d, o.q, o.sp, o.sd, o.sq, o.s]
        .iter()
        .fold(0x5a4d_u64, |h, &v| {
            h.wrapping_mul(31).wrapping_add(v as u64)
        })
}

/// Largest modulus among the eigenvalues of the companion matrix of
/// `z^m - sum c_k z^{m-k}`.
fn spectral_radius(ar: &[(usize, f64)]) -> f64 {
    let m = ar.iter().map(|(k, _)| *k).max().unwrap_or(0);
    if m == 0 {
        return 0.0;
    }
    let mut comp = DMatrix::<f64>::zeros(m, m);
    for &(k, c) in ar {
        comp[(0, k - 1)] = c;
    }
    for i in 1..m {
        comp[(i, i - 1)] = 1.0;
    }
    comp.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

impl SarimaModel {
    fn polys(&self) -> (LagPoly, LagPoly) {
        let s = self.order.s;
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        let ar = multiply(&neg(&self.ar), &neg(&self.seasonal_ar), s)
            .into_iter()
            .map(|(k, v)| (k, -v))
            .collect();
        (ar, multiply(&self.ma, &self.seasonal_ma, s))
    }

    /// In-sample one-step residuals after the burn-in.
    pub fn residuals(&self) -> &[f64] {
        let n = self.residuals.len();
        &self.residuals[n - self.n_eff..]
    }

    /// Point forecasts `1..=horizon` steps ahead on the original scale,
    /// clamped at zero.
    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        let lags = self.order.difference_lags();
        let mut w = difference_levels(&self.transformed, &lags)
            .pop()
            .expect("levels");
        let mut e = self.residuals.clone();
        let mu = self.mean.unwrap_or(0.0);
        let (ar, ma) = self.polys();
        let n = w.len();
        for t in n..n + horizon {
            let mut v = mu;
            for &(k, c) in &ar {
                v += c * (w[t - k] - mu);
            }
            for &(k, c) in &ma {
                if k <= t {
                    v += c * e[t - k];
                }
            }
            w.push(v);
            e.push(0.0);
        }
        let fut = integrate_forward(&self.transformed, &w[n..], &lags);
        let fut = match self.boxcox_lambda {
            Some(l) => inv_boxcox(&fut, l),
            None => fut,
        };
        fut.into_iter().map(|v| v.max(0.0)).collect()
    }
}

pub const SEASON: usize = 7;

/// Box-Cox, seasonal difference, ADF-guided regular difference, then the
/// minimum-AIC order over `p, q, P, Q in {0, 1, 2}`.
pub fn select_sarima(series: &[f64]) -> Result<SarimaModel> {
    select_sarima_report(series).map(|r| r.best)
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub best: SarimaModel,
    pub boxcox_lambda: Option<f64>,
    pub adf: Option<tsa::AdfReport>,
    /// `(order, aic)` for every successful fit.
    pub candidates: Vec<(SarimaOrder, f64)>,
}

pub fn select_sarima_report(series: &[f64]) -> Result<Selection> {
    if series.len() < 60 {
        return Err(ForecastError::SeriesTooShort {
            len: series.len(),
            min: 60,
        });
    }
    let lambda = select_boxcox_lambda(series);
    let y = match lambda {
        Some(l) => boxcox(series, l)?,
        None => series.to_vec(),
    };
    let seasonal = difference_levels(&y, &[SEASON]).pop().expect("levels");
    let adf = tsa::adf_values(&seasonal).ok();
    let d = match &adf {
        Some(r) if r.reject_at_5pct => 0,
        Some(_) => 1,
        None => 0,
    };
    let burn_in = 2 + 2 * SEASON;
    let grid: Vec<SarimaOrder> = (0..81)
        .map(|i| SarimaOrder {
            p: i / 27,
            q: (i / 9) % 3,
            sp: (i / 3) % 3,
            sq: i % 3,
            d,
            sd: 1,
            s: SEASON,
        })
        .collect();
    let fits: Vec<Result<SarimaModel>> = grid
        .par_iter()
        .map(|&o| fit_sarima_with(series, o, lambda, Some(burn_in)))
        .collect();
    let mut candidates = Vec::new();
    let mut best: Option<SarimaModel> = None;
    for fit in fits {
        let m = match fit {
            Ok(m) => m,
            Err(e) => {
                log::debug!("SARIMA fit failed: {e}");
                continue;
            }
        };
        candidates.push((m.order, m.aic));
        let better = match &best {
            None => true,
            Some(b) => {
                let key = |m: &SarimaModel| {
                    (
                        m.order.arma_terms(),
                        m.order.p,
                        m.order.q,
                        m.order.sp,
                        m.order.sq,
                    )
                };
                if (m.aic - b.aic).abs() <= 1e-9 * (1.0 + b.aic.abs()) {
                    key(&m) < key(b)
                } else {
                    m.aic < b.aic
                }
            }
        };
        if better {
            best = Some(m);
        }
    }
    Ok(Selection {
        best: best.ok_or(ForecastError::AllFitsFailed)?,
        boxcox_lambda: lambda,
        adf,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn order(p: usize, d: usize, q: usize, sp: usize, sd: usize, sq: usize) -> SarimaOrder {
        SarimaOrder::new(p, d, q, sp, sd, sq, 7).unwrap()
    }

    #[test]
    fn polynomial_product_places_seasonal_cross_terms() {
        let p = multiply(&[0.5], &[0.25], 7);
        assert_eq!(p, vec![(1, 0.5), (7, 0.25), (8, 0.125)]);
    }

    #[test]
    fn pacf_mapping_matches_durbin_levinson() {
        // AR(2) with phi = (0.5, 0.3): r1 = phi1 / (1 - phi2), r2 = phi2
        let phi = pacf_to_coefficients(&[0.5 / 0.7, 0.3]);
        assert!((phi[0] - 0.5).abs() < 1e-12 && (phi[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn recovers_ar1_coefficient() {
        let e = noise(900, 4);
        let mut x = vec![0.0; 900];
        for t in 1..900 {
            x[t] = 0.6 * x[t - 1] + e[t];
        }
        let x = &x[100..];
        let m = fit_sarima(x, order(1, 0, 0, 0, 0, 0)).unwrap();
        assert!((0.5..=0.7).contains(&m.ar[0]), "{}", m.ar[0]);
        // least-squares AR(1) through the mean, the CSS closed form
        let mu = m.mean.unwrap();
        let num: f64 = (1..x.len()).map(|t| (x[t] - mu) * (x[t - 1] - mu)).sum();
        let den: f64 = (1..x.len()).map(|t| (x[t - 1] - mu).powi(2)).sum();
        assert!((m.ar[0] - num / den).abs() < 1e-3);
    }

    #[test]
    fn white_noise_mean_is_the_intercept() {
        let x: Vec<f64> = noise(400, 9).into_iter().map(|v| 5.0 + v).collect();
        let m = fit_sarima(&x, order(0, 0, 0, 0, 0, 0)).unwrap();
        let sample_mean = x.iter().sum::<f64>() / x.len() as f64;
        assert!((m.intercept - 5.0).abs() < 0.2);
        assert!((m.intercept - sample_mean).abs() < 1e-4);
        let r = m.residuals();
        let se = (m.residual_variance / r.len() as f64).sqrt();
        assert!((r.iter().sum::<f64>() / r.len() as f64).abs() < 3.0 * se);
    }

    #[test]
    fn constant_series_fit_is_flagged_degenerate() {
        let m = fit_sarima(&[42.0; 60], order(1, 0, 0, 0, 0, 0)).unwrap();
        assert!(m.degenerate);
        assert!(m.residual_variance < 1e-8);
        assert!(m.forecast(3).iter().all(|v| (v - 42.0).abs() < 1e-6));
    }

    #[test]
    fn too_short_series_is_rejected() {
        assert!(matches!(
            fit_sarima(&[1.0; 12], order(1, 0, 1, 0, 1, 0)),
            Err(ForecastError::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn spectral_radius_of_ar1() {
        assert!((spectral_radius(&[(1, 0.6)]) - 0.6).abs() < 1e-12);
        assert!((spectral_radius(&[(7, 0.5)]) - 0.5f64.powf(1.0 / 7.0)).abs() < 1e-9);
    }

    #[test]
    fn seasonal_random_walk_selects_seasonal_difference() {
        let e = noise(200, 12);
        let mut x = vec![100.0; 200];
        for t in 7..200 {
            x[t] = x[t - 7] + e[t];
        }
        let obs: Vec<f64> = x
            .iter()
            .zip(noise(200, 13))
            .map(|(a, b)| a + 0.3 * b)
            .collect();
        let sel = select_sarima_report(&obs).unwrap();
        assert_eq!(sel.best.order.sd, 1);
        assert_eq!(sel.candidates.len(), 81);
    }
}
