use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::state::AgentState;
use super::{AbmError, Result, AGE_BINS};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agent {
    pub age: u8,
    pub household: u32,
    pub state: AgentState,
    pub state_entry_day: u32,
    /// Day and target of the next scheduled transition.
    pub next: Option<(u32, AgentState)>,
    pub diagnosed: bool,
    /// Contacts are restricted to the household before this day.
    pub quarantined_until: Option<u32>,
}

impl Agent {
    pub fn new(age: u8, household: u32) -> Self {
        Self {
            age,
            household,
            state: AgentState::S,
            state_entry_day: 0,
            next: None,
            diagnosed: false,
            quarantined_until: None,
        }
    }

    pub fn age_bin(&self) -> usize {
        (self.age as usize / 10).min(AGE_BINS - 1)
    }

    pub fn is_quarantined(&self, day: u32) -> bool {
        self.quarantined_until.is_some_and(|d| day < d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Household,
    School,
    Work,
    Community,
}

/// Contact structure parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayerConfig {
    pub school_contacts: f64,
    pub work_contacts: f64,
    /// Mean number of community partners drawn afresh each day.
    pub community_contacts: f64,
    pub school_ages: (u8, u8),
    pub work_ages: (u8, u8),
}

impl Default for LayerConfig {
    fn default() -> Self {
        Self {
            school_contacts: 20.0,
            work_contacts: 16.0,
            community_contacts: 20.0,
            school_ages: (6, 21),
            work_ages: (22, 65),
        }
    }
}

/// Agents with households and static school and work contact graphs.
/// Community contacts are sampled during the simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Population {
    pub agents: Vec<Agent>,
    /// Members of each household (a clique).
    pub households: Vec<Vec<u32>>,
    pub school: Vec<Vec<u32>>,
    pub work: Vec<Vec<u32>>,
    pub layers: LayerConfig,
}

/// Inputs for [`synthesize_population`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub size: usize,
    /// Share of agents in each ten-year age bin, `90+` last.
    pub age_distribution: [f64; AGE_BINS],
    pub mean_household_size: f64,
    #[serde(default)]
    pub layers: LayerConfig,
    #[serde(default)]
    pub seed: u64,
}

/// Largest-remainder allocation of `n` items to `shares`.
fn apportion(n: usize, shares: &[f64]) -> Vec<usize> {
    let total: f64 = shares.iter().sum();
    let exact: Vec<f64> = shares.iter().map(|s| s / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

/// Rate whose zero-truncated Poisson has mean `target` (> 1).
fn truncated_poisson_rate(target: f64) -> f64 {
    let mean = |l: f64| l / (1.0 - (-l).exp());
    let (mut lo, mut hi) = (1e-9, target);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn household_sizes<R: Rng>(n: usize, mean: f64, rng: &mut R) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut total = 0;
    if mean <= 1.0 + 1e-9 {
        return vec![1; n];
    }
    let pois = Poisson::new(truncated_poisson_rate(mean)).expect("positive rate");
    while total < n {
        let s = loop {
            let v = pois.sample(rng) as usize;
            if v > 0 {
                break v;
            }
        };
        let s = s.min(n - total);
        sizes.push(s);
        total += s;
    }
    sizes
}

/// Undirected random graph over `members` with the given mean degree.
fn random_graph<R: Rng>(
    n_agents: usize,
    members: &[u32],
    mean_degree: f64,
    rng: &mut R,
) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); n_agents];
    if members.len() < 2 || mean_degree <= 0.0 {
        return adj;
    }
    let pois = Poisson::new(mean_degree / 2.0).expect("positive rate");
    for &a in members {
        let k = pois.sample(rng) as usize;
        for _ in 0..k {
            let b = members[rng.random_range(0..members.len())];
            if a != b {
                adj[a as usize].push(b);
                adj[b as usize].push(a);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

pub fn synthesize_population(spec: &PopulationSpec) -> Result<Population> {
    if spec.size < 100 {
        return Err(AbmError::InvalidDistribution(format!(
            "population size {} is below 100",
            spec.size
        )));
    }
    let total: f64 = spec.age_distribution.iter().sum();
    if spec.age_distribution.iter().any(|v| !(*v >= 0.0)) || (total - 1.0).abs() > 1e-6 {
        return Err(AbmError::InvalidDistribution(
            "age histogram must be non-negative and sum to 1".into(),
        ));
    }
    if !(1.0..=10.0).contains(&spec.mean_household_size) {
        return Err(AbmError::InvalidDistribution(
            "mean household size must lie in [1, 10]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let counts = apportion(spec.size, &spec.age_distribution);
    let mut ages: Vec<u8> = Vec::with_capacity(spec.size);
    for (bin, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            ages.push((bin * 10) as u8 + rng.random_range(0..10u8));
        }
    }
    ages.shuffle(&mut rng);

    let sizes = household_sizes(spec.size, spec.mean_household_size, &mut rng);
    let mut agents = Vec::with_capacity(spec.size);
    let mut households = Vec::with_capacity(sizes.len());
    let mut next = 0u32;
    for (h, &s) in sizes.iter().enumerate() {
        let members: Vec<u32> = (next..next + s as u32).collect();
        for &m in &members {
            agents.push(Agent::new(ages[m as usize], h as u32));
        }
        next += s as u32;
        households.push(members);
    }
    Ok(Population::with_layers(
        agents,
        households,
        spec.layers,
        &mut rng,
    ))
}

impl Population {
    fn with_layers<R: Rng>(
        agents: Vec<Agent>,
        households: Vec<Vec<u32>>,
        layers: LayerConfig,
        rng: &mut R,
    ) -> Self {
        let eligible = |(lo, hi): (u8, u8)| -> Vec<u32> {
            agents
                .iter()
                .enumerate()
                .filter(|(_, a)| a.age >= lo && a.age <= hi)
                .map(|(i, _)| i as u32)
                .collect()
        };
        let school_members = eligible(layers.school_ages);
        let work_members = eligible(layers.work_ages);
        let school = random_graph(agents.len(), &school_members, layers.school_contacts, rng);
        let work = random_graph(agents.len(), &work_members, layers.work_contacts, rng);
        Self {
            agents,
            households,
            school,
            work,
            layers,
        }
    }

    /// One household holding every agent, no school or work contacts and no
    /// community mixing. Intended for small exact checks.
    pub fn single_household(ages: &[u8]) -> Self {
        let agents: Vec<Agent> = ages.iter().map(|&a| Agent::new(a, 0)).collect();
        let n = agents.len();
        Self {
            agents,
            households: vec![(0..n as u32).collect()],
            school: vec![Vec::new(); n],
            work: vec![Vec::new(); n],
            layers: LayerConfig {
                school_contacts: 0.0,
                work_contacts: 0.0,
                community_contacts: 0.0,
                ..Default::default()
            },
        }
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn state_counts(&self) -> [u32; 10] {
        let mut c = [0u32; 10];
        for a in &self.agents {
            c[a.state.index()] += 1;
        }
        c
    }

    /// Fraction of agents in each age bin.
    pub fn age_histogram(&self) -> [f64; AGE_BINS] {
        let mut h = [0.0; AGE_BINS];
        for a in &self.agents {
            h[a.age_bin()] += 1.0;
        }
        let n = self.agents.len().max(1) as f64;
        h.map(|v| v / n)
    }

    pub fn mean_household_size(&self) -> f64 {
        self.agents.len() as f64 / self.households.len().max(1) as f64
    }

    pub fn layer_size(&self, kind: LayerKind) -> usize {
        match kind {
            LayerKind::Household => {
                self.households
                    .iter()
                    .map(|h| h.len() * (h.len() - 1))
                    .sum::<usize>()
                    / 2
            }
            LayerKind::School => self.school.iter().map(Vec::len).sum::<usize>() / 2,
            LayerKind::Work => self.work.iter().map(Vec::len).sum::<usize>() / 2,
            LayerKind::Community => 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(size: usize, ages: [f64; AGE_BINS], seed: u64) -> PopulationSpec {
        PopulationSpec {
            size,
            age_distribution: ages,
            mean_household_size: 3.0,
            layers: LayerConfig::default(),
            seed,
        }
    }

    #[test]
    fn largest_remainder_allocates_exactly() {
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(apportion(7, &[0.5, 0.25, 0.25]).iter().sum::<usize>(), 7);
    }

    #[test]
    fn realised_household_size_and_ages() {
        let p = synthesize_population(&spec(10_000, [0.1; AGE_BINS], 3)).unwrap();
        let m = p.mean_household_size();
        assert!((2.8..=3.2).contains(&m), "{m}");
        for share in p.age_histogram() {
            assert!((share - 0.1).abs() <= 0.02);
        }
        assert!(p.households.iter().all(|h| !h.is_empty()));
        let members: usize = p.households.iter().map(Vec::len).sum();
        assert_eq!(members, p.len());
    }

    #[test]
    fn layer_eligibility() {
        let mut ages = [0.0; AGE_BINS];
        ages[3] = 1.0;
        let p = synthesize_population(&spec(100, ages, 1)).unwrap();
        assert_eq!(p.layer_size(LayerKind::School), 0);
        assert!(p.layer_size(LayerKind::Work) > 0);
        let q = synthesize_population(&spec(5_000, [0.1; AGE_BINS], 2)).unwrap();
        for (i, contacts) in q.school.iter().enumerate() {
            if !contacts.is_empty() {
                assert!((6..=21).contains(&q.agents[i].age));
            }
        }
        let deg = q
            .school
            .iter()
            .filter(|c| !c.is_empty())
            .map(Vec::len)
            .sum::<usize>() as f64
            / q.agents
                .iter()
                .filter(|a| (6..=21).contains(&a.age))
                .count() as f64;
        assert!((deg - 20.0).abs() < 1.5, "{deg}");
    }

    #[test]
    fn same_seed_same_population() {
        let a = synthesize_population(&spec(2_000, [0.1; AGE_BINS], 9)).unwrap();
        let b = synthesize_population(&spec(2_000, [0.1; AGE_BINS], 9)).unwrap();
        assert_eq!(a, b);
        let c = synthesize_population(&spec(2_000, [0.1; AGE_BINS], 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_specs() {
        assert!(synthesize_population(&spec(50, [0.1; AGE_BINS], 0)).is_err());
        assert!(synthesize_population(&spec(500, [0.2; AGE_BINS], 0)).is_err());
        let mut s = spec(500, [0.1; AGE_BINS], 0);
        s.mean_household_size = 12.0;
        assert!(synthesize_population(&s).is_err());
    }
}
