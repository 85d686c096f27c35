//! Tree-structured Parzen estimator.
//!
//! Trials are split at the `gamma` quantile of their objective values into a
//! good set and a bad set. Each dimension gets a Parzen density `l` from the
//! good set and `g` from the bad set; candidates drawn from `l` are ranked by
//! `l / g`, which orders them exactly as the expected improvement does.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erf_inv};

use super::{CalibrateError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimKind {
    Continuous,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub kind: DimKind,
    pub lower: f64,
    pub upper: f64,
}

impl Dimension {
    pub fn continuous(name: &str, lower: f64, upper: f64) -> Self {
        Self {
            name: name.to_string(),
            kind: DimKind::Continuous,
            lower,
            upper,
        }
    }

    pub fn integer(name: &str, lower: i64, upper: i64) -> Self {
        Self {
            name: name.to_string(),
            kind: DimKind::Integer,
            lower: lower as f64,
            upper: upper as f64,
        }
    }

    /// Interval the Parzen densities live on. Integer dimensions are widened
    /// by half a unit so the end values get their fair share after rounding.
    fn support(&self) -> (f64, f64) {
        match self.kind {
            DimKind::Continuous => (self.lower, self.upper),
            DimKind::Integer => (self.lower - 0.5, self.upper + 0.5),
        }
    }

    fn snap(&self, x: f64) -> f64 {
        match self.kind {
            DimKind::Continuous => x.clamp(self.lower, self.upper),
            DimKind::Integer => x.round().clamp(self.lower, self.upper),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper && (self.kind == DimKind::Continuous || x.fract() == 0.0)
    }

    fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            DimKind::Continuous => rng.random_range(self.lower..=self.upper),
            DimKind::Integer => rng.random_range(self.lower as i64..=self.upper as i64) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    dims: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self> {
        for (i, d) in dims.iter().enumerate() {
            if !(d.lower < d.upper) || !d.lower.is_finite() || !d.upper.is_finite() {
                return Err(CalibrateError::InvalidSpace(format!(
                    "`{}` needs finite lower < upper",
                    d.name
                )));
            }
            if d.kind == DimKind::Integer && (d.lower.fract() != 0.0 || d.upper.fract() != 0.0) {
                return Err(CalibrateError::InvalidSpace(format!(
                    "`{}` has non-integer bounds",
                    d.name
                )));
            }
            if dims[..i].iter().any(|o| o.name == d.name) {
                return Err(CalibrateError::InvalidSpace(format!(
                    "duplicate dimension `{}`",
                    d.name
                )));
            }
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        q.len() == self.dims.len() && self.dims.iter().zip(q).all(|(d, &x)| d.contains(x))
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.dims.iter().map(|d| d.sample_uniform(rng)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub params: Vec<f64>,
    pub value: f64,
}

/// Append-only record of evaluated trials.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialStore {
    trials: Vec<Trial>,
    best: Option<usize>,
}

impl TrialStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a trial; NaN values are stored as `+inf`.
    pub fn push(&mut self, params: Vec<f64>, value: f64) {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        self.trials.push(Trial { params, value });
        let idx = self.trials.len() - 1;
        if self.best.is_none_or(|b| value < self.trials[b].value) {
            self.best = Some(idx);
        }
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn best(&self) -> Option<&Trial> {
        self.best.map(|b| &self.trials[b])
    }

    /// Running minimum of the objective after each trial.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.trials
            .iter()
            .scan(f64::INFINITY, |m, t| {
                *m = m.min(t.value);
                Some(*m)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TpeConfig {
    pub gamma: f64,
    /// Random trials before the density model is used.
    pub n_init: usize,
    /// Candidates drawn from `l` per suggestion.
    pub n_samp: usize,
    /// Model-guided trials after the random start.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for TpeConfig {
    fn default() -> Self {
        Self {
            gamma: 0.25,
            n_init: 10,
            n_samp: 24,
            max_iter: 90,
            seed: 0,
        }
    }
}

impl TpeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(CalibrateError::InvalidConfig(
                "gamma must lie in (0, 1)".into(),
            ));
        }
        if self.n_init < 2 {
            return Err(CalibrateError::InvalidConfig(
                "n_init must be at least 2".into(),
            ));
        }
        if self.n_samp < 1 {
            return Err(CalibrateError::InvalidConfig(
                "n_samp must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Total number of trials, random start included.
    pub fn budget(&self) -> usize {
        self.n_init + self.max_iter
    }
}

/// Indices of the good set (`max(1, ceil(gamma K))` lowest values, ties by
/// insertion order) and of the remaining trials.
pub fn tpe_split(store: &TrialStore, gamma: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    let k = store.len();
    if k < 2 {
        return Err(CalibrateError::StoreTooSmall(k));
    }
    let n_good = ((gamma * k as f64).ceil() as usize).clamp(1, k);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| store.trials[a].value.total_cmp(&store.trials[b].value));
    let bad = order.split_off(n_good);
    Ok((order, bad))
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

fn std_normal_quantile(p: f64) -> f64 {
    std::f64::consts::SQRT_2 * erf_inv(2.0 * p - 1.0)
}

/// Mixture of truncated Gaussians, one per observation, plus a uniform prior
/// component, all equally weighted, on `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParzenDensity {
    lower: f64,
    upper: f64,
    mus: Vec<f64>,
    sigmas: Vec<f64>,
    /// Truncated mass of each Gaussian inside the bounds.
    masses: Vec<f64>,
}

impl ParzenDensity {
    pub fn new(points: &[f64], lower: f64, upper: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(CalibrateError::EmptyPoints);
        }
        Ok(Self::build(points, lower, upper))
    }

    /// Only the uniform prior component.
    pub fn prior(lower: f64, upper: f64) -> Self {
        Self::build(&[], lower, upper)
    }

    fn build(points: &[f64], lower: f64, upper: f64) -> Self {
        let range = upper - lower;
        let n = points.len();
        let mut sorted: Vec<f64> = points.iter().map(|p| p.clamp(lower, upper)).collect();
        sorted.sort_by(f64::total_cmp);
        let floor = range / (10 * n).clamp(1, 100) as f64;
        let sigmas: Vec<f64> = (0..n)
            .map(|i| {
                let left = if i == 0 {
                    sorted[0] - lower
                } else {
                    sorted[i] - sorted[i - 1]
                };
                let right = if i + 1 == n {
                    upper - sorted[i]
                } else {
                    sorted[i + 1] - sorted[i]
                };
                left.max(right).clamp(floor, range)
            })
            .collect();
        let masses = sorted
            .iter()
            .zip(&sigmas)
            .map(|(&m, &s)| std_normal_cdf((upper - m) / s) - std_normal_cdf((lower - m) / s))
            .collect();
        Self {
            lower,
            upper,
            mus: sorted,
            sigmas,
            masses,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lower || x > self.upper {
            return 0.0;
        }
        let w = 1.0 / (self.mus.len() + 1) as f64;
        let mut total = 1.0 / (self.upper - self.lower);
        for ((&m, &s), &z) in self.mus.iter().zip(&self.sigmas).zip(&self.masses) {
            let u = (x - m) / s;
            total += (-0.5 * u * u).exp() / (s * z * (2.0 * std::f64::consts::PI).sqrt());
        }
        w * total
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let k = rng.random_range(0..=self.mus.len());
        if k == self.mus.len() {
            return rng.random_range(self.lower..=self.upper);
        }
        let (m, s) = (self.mus[k], self.sigmas[k]);
        let a = std_normal_cdf((self.lower - m) / s);
        let b = std_normal_cdf((self.upper - m) / s);
        let u: f64 = rng.random_range(0.0..1.0);
        let p = (a + u * (b - a)).clamp(1e-300, 1.0 - 1e-16);
        (m + s * std_normal_quantile(p)).clamp(self.lower, self.upper)
    }
}

/// `1 / (gamma + (g / l) (1 - gamma))`.
pub fn expected_improvement(l: f64, g: f64, gamma: f64) -> f64 {
    if l <= 0.0 {
        return 0.0;
    }
    1.0 / (gamma + g / l * (1.0 - gamma))
}

/// Next point to evaluate. Uniform over the space until the store holds
/// `n_init` trials; afterwards each dimension independently takes the
/// candidate drawn from `l` with the largest `l / g`.
pub fn tpe_suggest<R: Rng + ?Sized>(
    store: &TrialStore,
    space: &SearchSpace,
    cfg: &TpeConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if store.len() < cfg.n_init.max(2) {
        return Ok(space.sample_uniform(rng));
    }
    let (good, bad) = tpe_split(store, cfg.gamma)?;
    let mut q = Vec::with_capacity(space.len());
    for (j, dim) in space.dims().iter().enumerate() {
        let (lo, hi) = dim.support();
        let pts = |idx: &[usize]| -> Vec<f64> {
            idx.iter().map(|&i| store.trials()[i].params[j]).collect()
        };
        let l = ParzenDensity::new(&pts(&good), lo, hi)?;
        let g = if bad.is_empty() {
            ParzenDensity::prior(lo, hi)
        } else {
            ParzenDensity::new(&pts(&bad), lo, hi)?
        };
        let mut best = (f64::NEG_INFINITY, lo);
        for _ in 0..cfg.n_samp {
            let x = l.sample(rng);
            let score = l.pdf(x) / g.pdf(x);
            if score > best.0 {
                best = (score, x);
            }
        }
        q.push(dim.snap(best.1));
    }
    Ok(q)
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        log::warn!("objective returned NaN; recorded as +inf");
        f64::INFINITY
    } else {
        v
    }
}

/// Runs `n_init` random trials followed by `max_iter` guided ones.
pub fn optimize<F>(mut objective: F, space: &SearchSpace, cfg: &TpeConfig) -> Result<TrialStore>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut store = TrialStore::new();
    for _ in 0..cfg.budget() {
        let q = tpe_suggest(&store, space, cfg, &mut rng)?;
        let v = sanitize(objective(&q));
        store.push(q, v);
    }
    Ok(store)
}

/// Like [`optimize`], but suggests `batch` points from the same store
/// snapshot and evaluates them in parallel before appending them in order.
pub fn optimize_batched<F>(
    objective: F,
    space: &SearchSpace,
    cfg: &TpeConfig,
    batch: usize,
) -> Result<TrialStore>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let batch = batch.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut store = TrialStore::new();
    while store.len() < cfg.budget() {
        let k = batch.min(cfg.budget() - store.len());
        let qs = (0..k)
            .map(|_| tpe_suggest(&store, space, cfg, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<f64> = qs.par_iter().map(|q| sanitize(objective(q))).collect();
        for (q, v) in qs.into_iter().zip(values) {
            store.push(q, v);
        }
    }
    Ok(store)
}

/// Uniform random search with the same seeding as [`optimize`].
pub fn random_search<F>(
    mut objective: F,
    space: &SearchSpace,
    trials: usize,
    seed: u64,
) -> TrialStore
where
    F: FnMut(&[f64]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = TrialStore::new();
    for _ in 0..trials {
        let q = space.sample_uniform(&mut rng);
        let v = sanitize(objective(&q));
        store.push(q, v);
    }
    store
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn store_of(values: &[f64]) -> TrialStore {
        let mut s = TrialStore::new();
        for (i, &v) in values.iter().enumerate() {
            s.push(vec![i as f64], v);
        }
        s
    }

    fn integrate(d: &ParzenDensity) -> f64 {
        // composite Simpson on a fine grid
        let (lo, hi) = d.bounds();
        let n = 200_000;
        let h = (hi - lo) / n as f64;
        let mut s = d.pdf(lo) + d.pdf(hi);
        for i in 1..n {
            let x = lo + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * d.pdf(x);
        }
        s * h / 3.0
    }

    #[test]
    fn split_sizes() {
        let (l, g) = tpe_split(&store_of(&[5.0; 10]), 0.25).unwrap();
        assert_eq!((l.len(), g.len()), (3, 7));
        assert_eq!(l, vec![0, 1, 2]);
        let (l, g) = tpe_split(&store_of(&[2.0, 1.0]), 0.1).unwrap();
        assert_eq!((l, g), (vec![1], vec![0]));
        assert!(matches!(
            tpe_split(&store_of(&[1.0]), 0.25),
            Err(CalibrateError::StoreTooSmall(1))
        ));
    }

    #[test]
    fn density_integrates_to_one() {
        let single = ParzenDensity::new(&[5.0], 0.0, 10.0).unwrap();
        assert!((integrate(&single) - 1.0).abs() < 1e-6);
        assert!((single.pdf(3.0) - single.pdf(7.0)).abs() < 1e-12);
        let cluster = ParzenDensity::new(&[0.0, 0.01, 0.02, 0.5, 9.9], 0.0, 10.0).unwrap();
        assert!((integrate(&cluster) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn samples_stay_in_bounds() {
        let d = ParzenDensity::new(&[0.0, 0.001, 0.002], 0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100_000 {
            let x = d.sample(&mut rng);
            assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn prior_component_keeps_support() {
        let d = ParzenDensity::new(&[0.5], 0.0, 1.0).unwrap();
        for i in 0..=100 {
            assert!(d.pdf(i as f64 / 100.0) >= 0.5);
        }
    }

    #[test]
    fn bandwidth_rule() {
        let d = ParzenDensity::new(&[2.0, 3.0, 7.0], 0.0, 10.0).unwrap();
        assert_eq!(d.bandwidths(), &[2.0, 4.0, 4.0]);
        let tight = ParzenDensity::new(&[5.0, 5.0], 0.0, 10.0).unwrap();
        // floor is range / min(100, 10 n) = 0.5
        assert_eq!(tight.bandwidths(), &[5.0, 5.0]);
        let many: Vec<f64> = (0..50).map(|i| 5.0 + 1e-6 * i as f64).collect();
        let d = ParzenDensity::new(&many, 0.0, 10.0).unwrap();
        assert!((d.bandwidths()[20] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ei_examples() {
        assert_eq!(expected_improvement(1.0, 1.0, 0.25), 1.0);
        assert!((expected_improvement(1.0, 1e-12, 0.25) - 4.0).abs() < 1e-9);
        assert!(expected_improvement(1e-12, 1.0, 0.25) < 1e-9);
    }

    #[test]
    fn suggest_before_n_init_is_uniform_and_deterministic() {
        let space = SearchSpace::new(vec![
            Dimension::continuous("x", 0.0, 10.0),
            Dimension::integer("k", 1, 5),
        ])
        .unwrap();
        let cfg = TpeConfig::default();
        let store = store_of(&[1.0, 2.0]);
        let a = tpe_suggest(&store, &space, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(space.contains(&a));
        let mut full = TrialStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for i in 0..20 {
            full.push(space.sample_uniform(&mut rng), i as f64);
        }
        let b1 = tpe_suggest(&full, &space, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b2 = tpe_suggest(&full, &space, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn finds_one_dimensional_minimum() {
        let space = SearchSpace::new(vec![Dimension::continuous("x", 0.0, 10.0)]).unwrap();
        let mut errs: Vec<f64> = (0..20)
            .map(|seed| {
                let cfg = TpeConfig {
                    max_iter: 90,
                    seed,
                    ..Default::default()
                };
                let s = optimize(|q| (q[0] - 3.0).powi(2), &space, &cfg).unwrap();
                (s.best().unwrap().params[0] - 3.0).abs()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        assert!(errs[10] < 0.2, "{errs:?}");
    }

    #[test]
    fn constant_objective_and_failures() {
        let space = SearchSpace::new(vec![Dimension::continuous("x", 0.0, 1.0)]).unwrap();
        let s = optimize(|_| 7.0, &space, &TpeConfig::default()).unwrap();
        assert_eq!(s.best().unwrap().value, 7.0);
        let s = optimize(
            |q| if q[0] < 0.5 { f64::NAN } else { q[0] },
            &space,
            &TpeConfig::default(),
        )
        .unwrap();
        assert!(s.trials().iter().any(|t| t.value == f64::INFINITY));
        assert!(s.best().unwrap().value >= 0.5);
    }

    #[test]
    fn batched_matches_store_contract() {
        let space = SearchSpace::new(vec![Dimension::continuous("x", -5.0, 5.0)]).unwrap();
        let cfg = TpeConfig {
            max_iter: 30,
            ..Default::default()
        };
        let s = optimize_batched(|q| q[0] * q[0], &space, &cfg, 4).unwrap();
        assert_eq!(s.len(), 40);
        let again = optimize_batched(|q| q[0] * q[0], &space, &cfg, 4).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn invalid_spaces_and_configs() {
        assert!(SearchSpace::new(vec![Dimension::continuous("x", 1.0, 1.0)]).is_err());
        assert!(SearchSpace::new(vec![
            Dimension::continuous("x", 0.0, 1.0),
            Dimension::continuous("x", 0.0, 2.0)
        ])
        .is_err());
        let bad = TpeConfig {
            gamma: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn split_cardinalities(values in prop::collection::vec(-100.0f64..100.0, 2..60), gamma in 0.01f64..0.99) {
            let s = store_of(&values);
            let (l, g) = tpe_split(&s, gamma).unwrap();
            let k = values.len();
            prop_assert_eq!(l.len() + g.len(), k);
            prop_assert_eq!(l.len(), ((gamma * k as f64).ceil() as usize).max(1));
            let worst_good = l.iter().map(|&i| values[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(g.iter().all(|&i| values[i] >= worst_good));
        }

        #[test]
        fn best_so_far_is_monotone(values in prop::collection::vec(-1e3f64..1e3, 1..80)) {
            let s = store_of(&values);
            let curve = s.best_so_far();
            prop_assert!(curve.windows(2).all(|w| w[1] <= w[0]));
            prop_assert_eq!(*curve.last().unwrap(), s.best().unwrap().value);
        }
    }
}
