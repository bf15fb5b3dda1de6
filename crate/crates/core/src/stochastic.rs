//! Exact finite-population simulation of the well-mixed A-SIS process.
//!
//! Each of `N` nodes is active (`round(x_a N)` of them) or reactive and
//! either susceptible or infected. Four aggregate channels drive the chain:
//! infection of an active or a reactive susceptible at rate `β (I/N)` each,
//! active cleanup of an infected node at rate `β_a (S_a/N)` each, and
//! recovery at rate `α` each. The mean-field limit is the A-SIS field.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::models::AsisParams;

/// Transition rates; unlike [`AsisParams`] these may all be zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CtmcRates {
    pub beta: f64,
    pub beta_a: f64,
    pub alpha: f64,
}

impl CtmcRates {
    pub fn new(beta: f64, beta_a: f64, alpha: f64) -> Result<Self> {
        for (name, v) in [("beta", beta), ("beta_a", beta_a), ("alpha", alpha)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self { beta, beta_a, alpha })
    }
}

impl From<&AsisParams> for CtmcRates {
    fn from(p: &AsisParams) -> Self {
        Self { beta: p.beta(), beta_a: p.beta_a(), alpha: p.alpha() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub s_a: u64,
    pub i_a: u64,
    pub s_r: u64,
    pub i_r: u64,
}

impl Counts {
    pub fn infected(&self) -> u64 {
        self.i_a + self.i_r
    }

    pub fn active(&self) -> u64 {
        self.s_a + self.i_a
    }

    pub fn reactive(&self) -> u64 {
        self.s_r + self.i_r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationConfig {
    n: u64,
    rates: CtmcRates,
    n_active: u64,
    initial: (u64, u64),
    seed: u64,
    t_end: f64,
    replicates: usize,
    grid: usize,
}

pub const DEFAULT_GRID: usize = 200;

impl PopulationConfig {
    /// `initial` holds the infected (active, reactive) counts. The path is
    /// recorded on `DEFAULT_GRID` equal intervals of `[0, t_end]`.
    pub fn new(
        n: u64,
        rates: CtmcRates,
        x_a: f64,
        initial: (u64, u64),
        seed: u64,
        t_end: f64,
        replicates: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(invalid("N", "must be positive"));
        }
        if !(0.0..=1.0).contains(&x_a) {
            return Err(invalid("x_a", format!("must lie in [0, 1], got {x_a}")));
        }
        let n_active = (x_a * n as f64).round() as u64;
        if initial.0 > n_active {
            return Err(invalid("N_ia", format!("{} exceeds the {n_active} active nodes", initial.0)));
        }
        if initial.1 > n - n_active {
            return Err(invalid("N_ir", format!("{} exceeds the {} reactive nodes", initial.1, n - n_active)));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(invalid("t_end", format!("must be finite and > 0, got {t_end}")));
        }
        if replicates == 0 {
            return Err(invalid("replicates", "must be at least 1"));
        }
        Ok(Self { n, rates, n_active, initial, seed, t_end, replicates, grid: DEFAULT_GRID })
    }

    pub fn from_params(
        n: u64,
        p: &AsisParams,
        initial: (u64, u64),
        seed: u64,
        t_end: f64,
        replicates: usize,
    ) -> Result<Self> {
        Self::new(n, p.into(), p.x_a(), initial, seed, t_end, replicates)
    }

    /// Number of recording intervals on `[0, t_end]`.
    pub fn with_grid(mut self, grid: usize) -> Result<Self> {
        if grid == 0 {
            return Err(invalid("grid", "must be at least 1"));
        }
        self.grid = grid;
        Ok(self)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn rates(&self) -> CtmcRates {
        self.rates
    }

    pub fn n_active(&self) -> u64 {
        self.n_active
    }

    /// `round(x_a N) / N`.
    pub fn realized_x_a(&self) -> f64 {
        self.n_active as f64 / self.n as f64
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn initial_counts(&self) -> Counts {
        let (i_a, i_r) = self.initial;
        Counts { s_a: self.n_active - i_a, i_a, s_r: self.n - self.n_active - i_r, i_r }
    }

    pub fn grid_times(&self) -> Vec<f64> {
        (0..=self.grid).map(|j| self.t_end * j as f64 / self.grid as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Channel {
    InfectActive,
    InfectReactive,
    CleanupActive,
    CleanupReactive,
    RecoverActive,
    RecoverReactive,
}

/// One transition; `state` is the configuration after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub channel: Channel,
    pub state: Counts,
}

/// A replicate sampled on the configuration grid (state after all events at
/// or before each grid time).
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicatePath {
    pub samples: Vec<Counts>,
    pub final_state: Counts,
    pub events: u64,
}

impl ReplicatePath {
    pub fn extinct(&self) -> bool {
        self.final_state.infected() == 0
    }
}

fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

/// Runs replicate `k` of `cfg`, calling `on_event` after every transition.
pub fn run_replicate(cfg: &PopulationConfig, k: usize, mut on_event: impl FnMut(&Event)) -> ReplicatePath {
    let mut rng = replicate_rng(cfg.seed, k);
    let grid = cfg.grid_times();
    let n = cfg.n as f64;
    let CtmcRates { beta, beta_a, alpha } = cfg.rates;
    let mut c = cfg.initial_counts();
    let mut samples = Vec::with_capacity(grid.len());
    samples.push(c);
    let mut t = 0.0;
    let mut events = 0u64;

    loop {
        let infected = c.infected() as f64;
        let infect_a = beta * infected * c.s_a as f64 / n;
        let infect_r = beta * infected * c.s_r as f64 / n;
        let cleanup = beta_a * c.s_a as f64 / n * infected;
        let recover = alpha * infected;
        let total = infect_a + infect_r + cleanup + recover;
        let next = if total > 0.0 {
            let wait: f64 = rng.sample(Exp1);
            t + wait / total
        } else {
            f64::INFINITY
        };
        while samples.len() < grid.len() && grid[samples.len()] < next {
            samples.push(c);
        }
        if next > cfg.t_end {
            break;
        }
        t = next;

        let u = rng.random::<f64>() * total;
        let channel = if u < infect_a {
            Channel::InfectActive
        } else if u < infect_a + infect_r {
            Channel::InfectReactive
        } else {
            let active = rng.random::<f64>() * infected < c.i_a as f64;
            match (u < infect_a + infect_r + cleanup, active) {
                (true, true) => Channel::CleanupActive,
                (true, false) => Channel::CleanupReactive,
                (false, true) => Channel::RecoverActive,
                (false, false) => Channel::RecoverReactive,
            }
        };
        match channel {
            Channel::InfectActive if c.s_a > 0 => {
                c.s_a -= 1;
                c.i_a += 1;
            }
            Channel::InfectReactive if c.s_r > 0 => {
                c.s_r -= 1;
                c.i_r += 1;
            }
            Channel::CleanupActive | Channel::RecoverActive if c.i_a > 0 => {
                c.i_a -= 1;
                c.s_a += 1;
            }
            Channel::CleanupReactive | Channel::RecoverReactive if c.i_r > 0 => {
                c.i_r -= 1;
                c.s_r += 1;
            }
            // a zero-count channel has zero rate; reaching it needs u to land
            // on a rounding boundary, and the draw is then discarded
            _ => continue,
        }
        events += 1;
        on_event(&Event { time: t, channel, state: c });
    }
    ReplicatePath { samples, final_state: c, events }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub config: PopulationConfig,
    pub times: Vec<f64>,
    pub paths: Vec<ReplicatePath>,
}

/// All replicates, run in parallel. Replicate `k` draws from its own stream
/// of the seeded generator, so results do not depend on scheduling.
pub fn simulate_ctmc(cfg: &PopulationConfig) -> Ensemble {
    let paths = (0..cfg.replicates).into_par_iter().map(|k| run_replicate(cfg, k, |_| {})).collect();
    Ensemble { config: cfg.clone(), times: cfg.grid_times(), paths }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub times: Vec<f64>,
    pub mean_ia: Vec<f64>,
    pub mean_ir: Vec<f64>,
    pub sd_ia: Vec<f64>,
    pub sd_ir: Vec<f64>,
    pub extinction_fraction: f64,
    pub realized_x_a: f64,
    pub replicates: usize,
}

impl EnsembleSummary {
    pub fn mean_total(&self, j: usize) -> f64 {
        self.mean_ia[j] + self.mean_ir[j]
    }
}

fn mean_sd(xs: impl Iterator<Item = f64> + Clone, count: usize) -> (f64, f64) {
    let mean = xs.clone().sum::<f64>() / count as f64;
    if count < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (count - 1) as f64).sqrt())
}

/// Per-time mean and sample standard deviation of `i_a/N` and `i_r/N`.
pub fn summarize(ens: &Ensemble) -> Result<EnsembleSummary> {
    if ens.paths.is_empty() {
        return Err(Error::Empty("ensemble"));
    }
    let n = ens.config.n as f64;
    let r = ens.paths.len();
    let (mut mean_ia, mut mean_ir, mut sd_ia, mut sd_ir) = (vec![], vec![], vec![], vec![]);
    for j in 0..ens.times.len() {
        let (m, s) = mean_sd(ens.paths.iter().map(|p| p.samples[j].i_a as f64 / n), r);
        mean_ia.push(m);
        sd_ia.push(s);
        let (m, s) = mean_sd(ens.paths.iter().map(|p| p.samples[j].i_r as f64 / n), r);
        mean_ir.push(m);
        sd_ir.push(s);
    }
    let extinct = ens.paths.iter().filter(|p| p.extinct()).count();
    Ok(EnsembleSummary {
        times: ens.times.clone(),
        mean_ia,
        mean_ir,
        sd_ia,
        sd_ir,
        extinction_fraction: extinct as f64 / r as f64,
        realized_x_a: ens.config.realized_x_a(),
        replicates: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, IntegrationOptions};
    use crate::models::AsisState;

    fn endemic_params() -> AsisParams {
        AsisParams::new(0.3, 0.28, 0.1, 0.2).unwrap()
    }

    #[test]
    fn config_validation() {
        let r = CtmcRates::from(&endemic_params());
        assert!(PopulationConfig::new(0, r, 0.2, (0, 0), 1, 1.0, 1).is_err());
        assert!(PopulationConfig::new(100, r, 0.2, (21, 0), 1, 1.0, 1).is_err());
        assert!(PopulationConfig::new(100, r, 0.2, (20, 81), 1, 1.0, 1).is_err());
        assert!(PopulationConfig::new(100, r, 0.2, (20, 80), 1, 0.0, 1).is_err());
        assert!(PopulationConfig::new(100, r, 0.2, (20, 80), 1, 1.0, 0).is_err());
        assert!(CtmcRates::new(-1.0, 0.0, 0.0).is_err());
        let c = PopulationConfig::new(7, r, 0.2, (0, 0), 1, 1.0, 1).unwrap();
        assert_eq!(c.n_active(), 1);
        assert_eq!(c.realized_x_a(), 1.0 / 7.0);
    }

    #[test]
    fn no_infection_means_no_events() {
        let cfg = PopulationConfig::from_params(500, &endemic_params(), (0, 0), 3, 50.0, 2).unwrap();
        let ens = simulate_ctmc(&cfg);
        for p in &ens.paths {
            assert_eq!(p.events, 0);
            assert!(p.samples.iter().all(|c| *c == cfg.initial_counts()));
        }
        let s = summarize(&ens).unwrap();
        assert_eq!(s.extinction_fraction, 1.0);
        assert!(s.sd_ia.iter().chain(&s.sd_ir).all(|&v| v == 0.0));
    }

    #[test]
    fn zero_beta_never_grows() {
        let rates = CtmcRates::new(0.0, 0.28, 0.1).unwrap();
        let cfg = PopulationConfig::new(1000, rates, 0.2, (100, 400), 8, 30.0, 4).unwrap();
        for k in 0..4 {
            let mut last = 500;
            run_replicate(&cfg, k, |e| {
                assert!(e.state.infected() < last);
                last = e.state.infected();
            });
        }
    }

    #[test]
    fn counts_conserved_along_paths() {
        let cfg = PopulationConfig::from_params(2000, &endemic_params(), (10, 40), 17, 40.0, 3).unwrap();
        for k in 0..3 {
            let mut seen = 0;
            let path = run_replicate(&cfg, k, |e| {
                assert_eq!(e.state.active(), 400);
                assert_eq!(e.state.reactive(), 1600);
                seen += 1;
            });
            assert_eq!(seen, path.events);
            assert!(path.events > 0);
            assert_eq!(path.samples.len(), DEFAULT_GRID + 1);
        }
    }

    #[test]
    fn seeds_reproduce_event_sequences() {
        let cfg = PopulationConfig::from_params(1000, &endemic_params(), (5, 20), 99, 20.0, 2).unwrap();
        let record = |k| {
            let mut v = Vec::new();
            run_replicate(&cfg, k, |e| v.push(*e));
            v
        };
        assert_eq!(record(0), record(0));
        assert_ne!(record(0), record(1));
        assert_eq!(simulate_ctmc(&cfg), simulate_ctmc(&cfg));
    }

    #[test]
    fn single_replicate_summary() {
        let cfg = PopulationConfig::from_params(300, &endemic_params(), (3, 12), 1, 10.0, 1).unwrap();
        let ens = simulate_ctmc(&cfg);
        let s = summarize(&ens).unwrap();
        for (j, c) in ens.paths[0].samples.iter().enumerate() {
            assert_eq!(s.mean_ia[j], c.i_a as f64 / 300.0);
            assert_eq!(s.sd_ir[j], 0.0);
        }
        let empty = Ensemble { paths: vec![], ..ens };
        assert!(matches!(summarize(&empty), Err(Error::Empty(_))));
    }

    #[test]
    fn subcritical_population_dies_out() {
        let p = AsisParams::new(0.3, 0.35, 0.1, 0.6).unwrap();
        let cfg = PopulationConfig::from_params(5000, &p, (30, 20), 4, 3000.0, 16).unwrap();
        let s = summarize(&simulate_ctmc(&cfg)).unwrap();
        assert_eq!(s.extinction_fraction, 1.0);
    }

    #[test]
    fn drift_matches_mean_field_increment() {
        let p = endemic_params();
        let (n, t) = (10_000u64, 0.5);
        let cfg = PopulationConfig::from_params(n, &p, (500, 1500), 21, t, 64).unwrap().with_grid(1).unwrap();
        let s = summarize(&simulate_ctmc(&cfg)).unwrap();
        let start = AsisState::new(0.05, 0.15);
        let ode = integrate(&p, start.to_array(), &IntegrationOptions::new(t, t)).unwrap();
        let end = AsisState::from_array(ode.final_state);
        let se = |sd: f64| sd / (64f64).sqrt() / t;
        let drift_a = (s.mean_ia[1] - s.mean_ia[0]) / t;
        let drift_r = (s.mean_ir[1] - s.mean_ir[0]) / t;
        assert!((drift_a - (end.i_a - start.i_a) / t).abs() < 3.0 * se(s.sd_ia[1]));
        assert!((drift_r - (end.i_r - start.i_r) / t).abs() < 3.0 * se(s.sd_ir[1]));
    }
}
