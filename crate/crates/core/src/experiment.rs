//! Seeded comparisons of the baseline and synergy assigners.

use std::collections::BTreeMap;
use std::io;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assign::{BaselineAssigner, SynergyAssigner, TaskOffer};
use crate::model::Referent;
use crate::rules::RuleSet;
use crate::tasks::TaskKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `floor(V/2)` tasks of each type.
    Fig3Low,
    /// `floor(V/2)` centroid and `2V` monitoring tasks.
    Fig3MonitorHeavy,
    /// `V` centroid and `2V` monitoring tasks.
    Fig3Saturated,
    /// One row per offered task, with cumulative counts.
    Fig4Accumulate,
    /// One row per monitoring/centroid split of a fixed task budget.
    Fig4Ratio,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Fig3Low,
        Mode::Fig3MonitorHeavy,
        Mode::Fig3Saturated,
        Mode::Fig4Accumulate,
        Mode::Fig4Ratio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Fig3Low => "fig3_low",
            Mode::Fig3MonitorHeavy => "fig3_monitor_heavy",
            Mode::Fig3Saturated => "fig3_saturated",
            Mode::Fig4Accumulate => "fig4_accumulate",
            Mode::Fig4Ratio => "fig4_ratio",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Mode::ALL.iter().map(|m| m.name()).collect();
                format!("unknown mode {s:?}; expected one of {}", known.join(", "))
            })
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub iters: usize,
    pub min_vehicles: usize,
    pub max_vehicles: usize,
    /// Vehicle count for the fig4 modes; drawn like fig3 when `None`.
    pub fixed_vehicles: Option<usize>,
    /// Task budget for the fig4 modes.
    pub fig4_tasks: usize,
    /// Monitoring tasks per vehicle in the monitor-heavy and saturated modes.
    pub monitor_factor: usize,
    /// Chance that a centroid task spans three vehicles rather than two.
    pub centroid3_probability: f64,
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn new(mode: Mode) -> Self {
        ExperimentConfig {
            mode,
            iters: 100,
            min_vehicles: 3,
            max_vehicles: 7,
            fixed_vehicles: Some(5),
            fig4_tasks: 25,
            monitor_factor: 2,
            centroid3_probability: 0.5,
            jobs: 1,
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub iter: usize,
    pub seed: u64,
    pub vehicles: usize,
    pub n_centroid: usize,
    pub n_monitor: usize,
    pub baseline_assigned: usize,
    pub synergy_assigned: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub mode: Mode,
    pub rows: Vec<Row>,
}

impl ExperimentReport {
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> Summary {
        summarize(&self.rows)
    }

    /// Synergy minus baseline on every row.
    pub fn gaps(&self) -> Vec<i64> {
        self.rows
            .iter()
            .map(|r| r.synergy_assigned as i64 - r.baseline_assigned as i64)
            .collect()
    }
}

pub fn read_csv<R: io::Read>(input: R) -> csv::Result<Vec<Row>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
}

fn stats(values: impl IntoIterator<Item = f64>) -> Stats {
    let v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return Stats { mean: f64::NAN, std: f64::NAN };
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    } else {
        0.0
    };
    Stats { mean, std: var.sqrt() }
}

/// Square root of the within-group variance, pooled over groups.
fn pooled_std<K: Ord>(groups: &BTreeMap<K, Vec<f64>>) -> f64 {
    let (mut ss, mut dof) = (0.0, 0usize);
    for v in groups.values() {
        if v.len() < 2 {
            continue;
        }
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        ss += v.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        dof += v.len() - 1;
    }
    if dof == 0 {
        0.0
    } else {
        (ss / dof as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub overall: Stats,
    /// Spread at a fixed vehicle count, pooled across counts.
    pub pooled_std: f64,
    pub by_vehicles: BTreeMap<usize, Stats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rows: usize,
    pub baseline: PolicySummary,
    pub synergy: PolicySummary,
    /// Rows where the synergy policy assigned fewer tasks.
    pub dominance_violations: usize,
}

impl Summary {
    pub fn ratio(&self) -> f64 {
        self.synergy.overall.mean / self.baseline.overall.mean
    }
}

pub fn summarize(rows: &[Row]) -> Summary {
    let policy = |get: fn(&Row) -> usize| {
        let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for r in rows {
            groups.entry(r.vehicles).or_default().push(get(r) as f64);
        }
        PolicySummary {
            overall: stats(rows.iter().map(|r| get(r) as f64)),
            pooled_std: pooled_std(&groups),
            by_vehicles: groups.iter().map(|(&k, v)| (k, stats(v.iter().copied()))).collect(),
        }
    };
    Summary {
        rows: rows.len(),
        baseline: policy(|r| r.baseline_assigned),
        synergy: policy(|r| r.synergy_assigned),
        dominance_violations: rows.iter().filter(|r| r.synergy_assigned < r.baseline_assigned).count(),
    }
}

fn vehicles(n: usize) -> Vec<Referent> {
    (1..=n).map(|i| Referent::vehicle(format!("v{i}"))).collect()
}

/// Alternates centroid and monitoring offers, starting with a centroid, and
/// continues with whichever type remains once the other runs out.
pub fn offer_stream(rng: &mut impl Rng, n_centroid: usize, n_monitor: usize, centroid3_probability: f64) -> Vec<TaskOffer> {
    let (mut c, mut m) = (0, 0);
    let mut offers = Vec::with_capacity(n_centroid + n_monitor);
    while c < n_centroid || m < n_monitor {
        let centroid_turn = (offers.len() % 2 == 0 && c < n_centroid) || m >= n_monitor;
        let id = offers.len() + 1;
        if centroid_turn {
            c += 1;
            let members = if rng.random_bool(centroid3_probability) { 3 } else { 2 };
            offers.push(TaskOffer::centroid(format!("task{id}"), members, Some(format!("base{c}"))));
        } else {
            m += 1;
            offers.push(TaskOffer::monitoring(format!("task{id}"), Referent::target(format!("t{m}"))));
        }
    }
    offers
}

fn counts(offers: &[TaskOffer]) -> (usize, usize) {
    let m = offers.iter().filter(|o| o.kind == TaskKind::Monitoring).count();
    (offers.len() - m, m)
}

/// Runs both policies over the same offers and returns the cumulative
/// assigned counts after each offer.
pub fn run_policies(offers: &[TaskOffer], vehicles: &[Referent], rules: &RuleSet) -> Vec<(usize, usize)> {
    let mut baseline = BaselineAssigner::new(vehicles);
    let mut synergy = SynergyAssigner::new(vehicles, rules);
    offers
        .iter()
        .map(|o| {
            baseline.offer(o);
            synergy.offer(o);
            (baseline.state().assigned(), synergy.state().assigned())
        })
        .collect()
}

fn iteration(config: &ExperimentConfig, rules: &RuleSet, iter: usize, seed: u64) -> Vec<Row> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw_v = |rng: &mut ChaCha8Rng| rng.random_range(config.min_vehicles..=config.max_vehicles);
    let row = |v: usize, offers: &[TaskOffer], (b, s): (usize, usize)| {
        let (n_centroid, n_monitor) = counts(offers);
        Row {
            iter,
            seed,
            vehicles: v,
            n_centroid,
            n_monitor,
            baseline_assigned: b,
            synergy_assigned: s,
        }
    };
    let last = |v: &[(usize, usize)]| v.last().copied().unwrap_or((0, 0));
    match config.mode {
        Mode::Fig3Low | Mode::Fig3MonitorHeavy | Mode::Fig3Saturated => {
            let v = draw_v(&mut rng);
            let (nc, nm) = match config.mode {
                Mode::Fig3Low => (v / 2, v / 2),
                Mode::Fig3MonitorHeavy => (v / 2, config.monitor_factor * v),
                _ => (v, config.monitor_factor * v),
            };
            let offers = offer_stream(&mut rng, nc, nm, config.centroid3_probability);
            let result = last(&run_policies(&offers, &vehicles(v), rules));
            vec![row(v, &offers, result)]
        }
        Mode::Fig4Accumulate => {
            let v = config.fixed_vehicles.unwrap_or_else(|| draw_v(&mut rng));
            let n = config.fig4_tasks;
            let offers = offer_stream(&mut rng, n.div_ceil(2), n / 2, config.centroid3_probability);
            let cumulative = run_policies(&offers, &vehicles(v), rules);
            (0..n)
                .map(|k| {
                    let mut r = row(v, &offers[..=k], cumulative[k]);
                    r.iter = k + 1;
                    r
                })
                .collect()
        }
        Mode::Fig4Ratio => {
            let v = config.fixed_vehicles.unwrap_or_else(|| draw_v(&mut rng));
            let n = config.fig4_tasks;
            (0..=n)
                .map(|nc| {
                    let offers = offer_stream(&mut rng, nc, n - nc, config.centroid3_probability);
                    let result = last(&run_policies(&offers, &vehicles(v), rules));
                    let mut r = row(v, &offers, result);
                    r.iter = nc;
                    r
                })
                .collect()
        }
    }
}

/// Per-iteration seeds derived from the run seed.
pub fn iteration_seeds(seed: u64, iters: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..iters).map(|_| rng.random()).collect()
}

/// Runs `config.iters` seeded iterations. Fig4 modes emit several rows per
/// iteration, with `iter` holding the step (tasks offered, or centroid
/// count); rows stay in iteration order whatever `config.jobs` is.
pub fn run_experiment(config: &ExperimentConfig, rules: &RuleSet, seed: u64) -> ExperimentReport {
    let seeds = iteration_seeds(seed, config.iters);
    let jobs = config.jobs.max(1).min(seeds.len().max(1));
    let mut per_iter: Vec<Vec<Row>> = vec![Vec::new(); seeds.len()];
    if jobs == 1 {
        for (i, &s) in seeds.iter().enumerate() {
            per_iter[i] = iteration(config, rules, i, s);
        }
    } else {
        std::thread::scope(|scope| {
            let chunk = seeds.len().div_ceil(jobs);
            for (c, slots) in per_iter.chunks_mut(chunk).enumerate() {
                let seeds = &seeds;
                scope.spawn(move || {
                    for (k, slot) in slots.iter_mut().enumerate() {
                        let i = c * chunk + k;
                        *slot = iteration(config, rules, i, seeds[i]);
                    }
                });
            }
        });
    }
    ExperimentReport {
        mode: config.mode,
        rows: per_iter.into_iter().flatten().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_parse() {
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert!("fig5".parse::<Mode>().unwrap_err().contains("fig3_low"));
    }

    #[test]
    fn offers_alternate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let offers = offer_stream(&mut rng, 2, 4, 0.5);
        let kinds: Vec<bool> = offers.iter().map(|o| o.kind == TaskKind::Monitoring).collect();
        assert_eq!(kinds, [false, true, false, true, true, true]);
        assert_eq!(counts(&offers), (2, 4));
    }

    #[test]
    fn fig3_low_offers_half_of_each() {
        let rules = RuleSet::default_rules();
        let mut config = ExperimentConfig::new(Mode::Fig3Low);
        config.iters = 10;
        let report = run_experiment(&config, &rules, 3);
        for r in &report.rows {
            assert_eq!(r.n_centroid, r.vehicles / 2);
            assert_eq!(r.n_monitor, r.vehicles / 2);
            assert!(r.synergy_assigned >= r.baseline_assigned);
        }
    }

    #[test]
    fn csv_round_trip_and_determinism() {
        let rules = RuleSet::default_rules();
        let mut config = ExperimentConfig::new(Mode::Fig3MonitorHeavy);
        config.iters = 4;
        let mut a = Vec::new();
        run_experiment(&config, &rules, 9).write_csv(&mut a).unwrap();
        config.jobs = 3;
        let mut b = Vec::new();
        run_experiment(&config, &rules, 9).write_csv(&mut b).unwrap();
        assert_eq!(a, b);
        let header = String::from_utf8(a.clone()).unwrap();
        assert!(header.starts_with("iter,seed,vehicles,n_centroid,n_monitor,baseline_assigned,synergy_assigned\n"));
        assert_eq!(read_csv(a.as_slice()).unwrap().len(), 4);
    }

    #[test]
    fn fig4_row_shapes() {
        let rules = RuleSet::default_rules();
        let mut config = ExperimentConfig::new(Mode::Fig4Ratio);
        config.iters = 1;
        config.fig4_tasks = 6;
        let rows = run_experiment(&config, &rules, 1).rows;
        assert_eq!(rows.len(), 7);
        assert_eq!((rows[0].n_monitor, rows[0].n_centroid), (6, 0));
        assert_eq!((rows[6].n_monitor, rows[6].n_centroid), (0, 6));
        config.mode = Mode::Fig4Accumulate;
        let rows = run_experiment(&config, &rules, 1).rows;
        assert_eq!(rows.len(), 6);
        assert!(rows.windows(2).all(|w| w[0].synergy_assigned <= w[1].synergy_assigned));
    }

    #[test]
    fn summary_statistics() {
        let row = |v, b, s| Row {
            iter: 0,
            seed: 0,
            vehicles: v,
            n_centroid: 0,
            n_monitor: 0,
            baseline_assigned: b,
            synergy_assigned: s,
        };
        let rows = [row(3, 1, 2), row(3, 3, 2), row(5, 4, 6), row(5, 6, 6)];
        let s = summarize(&rows);
        assert_eq!(s.baseline.overall.mean, 3.5);
        assert_eq!(s.synergy.overall.mean, 4.0);
        assert_eq!(s.synergy.pooled_std, 0.0);
        assert!((s.baseline.pooled_std - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.dominance_violations, 1);
        assert_eq!(s.baseline.by_vehicles.len(), 2);
    }
}
