//! Gradient-free search (genetic algorithm and simulated annealing) for
//! the region edges of a partition.
//!
//! A candidate is a sorted vector of `M - 1` interior edges. Each
//! candidate is scored by fitting the regional conformal bounds on the
//! conformal split and evaluating the loss on the region split.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conformal::{fit_eta, EtaFunction};
use crate::interval::Interval;
use crate::partition::{LossSpec, Partition};
use crate::rng::{rng_from_seed, sample_std_normal};
use crate::traj::Dataset;
use crate::{Error, Result};

/// Minimum admissible region width; narrower candidates are repaired.
pub const MIN_REGION_WIDTH: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Ga,
    Sa,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    /// Total candidate evaluations.
    pub budget: usize,
    /// GA population size.
    pub population: usize,
    /// GA per-edge mutation probability.
    pub mutation_rate: f64,
    /// SA initial temperature; `None` starts at the initial loss.
    pub initial_temperature: Option<f64>,
    /// SA geometric cooling factor per proposal.
    pub cooling_rate: f64,
    pub seed: u64,
}

impl OptimizerSpec {
    pub fn ga(seed: u64) -> Self {
        Self {
            kind: OptimizerKind::Ga,
            budget: 1500,
            population: 30,
            mutation_rate: 0.3,
            initial_temperature: None,
            cooling_rate: 0.995,
            seed,
        }
    }

    pub fn sa(seed: u64) -> Self {
        Self {
            kind: OptimizerKind::Sa,
            budget: 1500,
            population: 30,
            mutation_rate: 0.3,
            initial_temperature: None,
            cooling_rate: 0.995,
            seed,
        }
    }
}

/// The search result: best partition found, its fitted bound, and the
/// best-so-far loss after each evaluation (non-increasing).
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub partition: Partition,
    pub eta: EtaFunction,
    pub loss: f64,
    pub history: Vec<f64>,
    /// Set when no all-finite-loss candidate was found within budget.
    pub warning_infinite_loss: bool,
}

struct Evaluator<'a> {
    data_reg: &'a Dataset,
    data_conf: &'a Dataset,
    loss: &'a LossSpec,
    alpha: f64,
    range: Interval,
    history: Vec<f64>,
    best: Option<(Vec<f64>, EtaFunction, f64)>,
}

impl<'a> Evaluator<'a> {
    fn evaluate(&mut self, edges: &[f64]) -> f64 {
        let partition = Partition::new(edges.to_vec(), self.range);
        let eta = fit_eta(self.data_conf, &partition, self.alpha);
        let loss = self.loss.evaluate(self.data_reg, &partition, &eta);
        // +inf loses to any finite loss; ties keep the earlier candidate
        let improved = match &self.best {
            None => true,
            Some((_, _, best)) => loss < *best,
        };
        if improved {
            self.best = Some((edges.to_vec(), eta, loss));
        }
        let best_so_far = self.best.as_ref().map(|b| b.2).unwrap_or(f64::INFINITY);
        self.history.push(best_so_far);
        loss
    }
}

/// Sort edges and project them to respect the minimum region width
/// inside the range.
fn repair(edges: &mut Vec<f64>, range: &Interval) {
    edges.sort_unstable_by(|a, b| a.partial_cmp(b).expect("edges must not be NaN"));
    let n = edges.len();
    let lo = range.lo + MIN_REGION_WIDTH;
    let hi = range.hi - MIN_REGION_WIDTH;
    for (i, e) in edges.iter_mut().enumerate() {
        let floor = lo + MIN_REGION_WIDTH * i as f64;
        let ceil = hi - MIN_REGION_WIDTH * (n - 1 - i) as f64;
        *e = e.max(floor).min(ceil);
    }
    for i in 1..n {
        if edges[i] < edges[i - 1] + MIN_REGION_WIDTH {
            edges[i] = edges[i - 1] + MIN_REGION_WIDTH;
        }
    }
}

fn random_candidate<R: Rng + ?Sized>(rng: &mut R, m: usize, range: &Interval) -> Vec<f64> {
    let mut edges: Vec<f64> = (0..m - 1)
        .map(|_| rng.random_range(range.lo..range.hi))
        .collect();
    repair(&mut edges, range);
    edges
}

/// Reflect a perturbed edge back into the open range.
fn reflect(x: f64, range: &Interval) -> f64 {
    let (lo, hi) = (range.lo, range.hi);
    let mut v = x;
    // at most a few bounces for the perturbation scales used here
    for _ in 0..64 {
        if v < lo {
            v = 2.0 * lo - v;
        } else if v > hi {
            v = 2.0 * hi - v;
        } else {
            return v;
        }
    }
    v.max(lo).min(hi)
}

/// Search for the partition minimizing the loss. `m = 1` returns the
/// trivial partition without spending budget.
pub fn optimize_partition(
    data_reg: &Dataset,
    data_conf: &Dataset,
    m: usize,
    loss: &LossSpec,
    opt: &OptimizerSpec,
    alpha: f64,
    range: Interval,
) -> Result<OptimizeOutcome> {
    if m == 0 {
        return Err(Error::InvalidInput("partition needs at least one region"));
    }
    if opt.budget == 0 {
        return Err(Error::InvalidInput("optimizer budget must be at least 1"));
    }
    if m == 1 {
        let partition = Partition::new(Vec::new(), range);
        let eta = fit_eta(data_conf, &partition, alpha);
        let l = loss.evaluate(data_reg, &partition, &eta);
        return Ok(OptimizeOutcome {
            partition,
            eta,
            loss: l,
            history: alloc::vec![l],
            warning_infinite_loss: !l.is_finite(),
        });
    }
    let mut ev = Evaluator {
        data_reg,
        data_conf,
        loss,
        alpha,
        range,
        history: Vec::new(),
        best: None,
    };
    match opt.kind {
        OptimizerKind::Ga => run_ga(&mut ev, m, opt),
        OptimizerKind::Sa => run_sa(&mut ev, m, opt),
    }
    let (edges, eta, best_loss) = ev.best.expect("at least one evaluation");
    Ok(OptimizeOutcome {
        partition: Partition::new(edges, range),
        eta,
        loss: best_loss,
        history: ev.history,
        warning_infinite_loss: !best_loss.is_finite(),
    })
}

fn run_ga(ev: &mut Evaluator<'_>, m: usize, opt: &OptimizerSpec) {
    let mut rng = rng_from_seed(opt.seed);
    let pop_size = opt.population.max(2);
    let sigma = 0.05 * ev.range.width();
    let mut population: Vec<(Vec<f64>, f64)> = Vec::with_capacity(pop_size);
    let mut evals = 0usize;
    for _ in 0..pop_size.min(opt.budget) {
        let cand = random_candidate(&mut rng, m, &ev.range);
        let l = ev.evaluate(&cand);
        population.push((cand, l));
        evals += 1;
    }
    while evals < opt.budget {
        // tournament selection of two parents
        let pick = |rng: &mut rand_chacha::ChaCha8Rng, pop: &[(Vec<f64>, f64)]| {
            let a = rng.random_range(0..pop.len());
            let b = rng.random_range(0..pop.len());
            if pop[a].1 <= pop[b].1 {
                pop[a].0.clone()
            } else {
                pop[b].0.clone()
            }
        };
        let pa = pick(&mut rng, &population);
        let pb = pick(&mut rng, &population);
        // per-edge uniform crossover, then mutate, then re-sort/repair
        let mut child: Vec<f64> = pa
            .iter()
            .zip(&pb)
            .map(|(x, y)| if rng.random::<bool>() { *x } else { *y })
            .collect();
        for e in child.iter_mut() {
            if rng.random::<f64>() < opt.mutation_rate {
                *e = reflect(*e + sigma * sample_std_normal(&mut rng), &ev.range);
            }
        }
        repair(&mut child, &ev.range);
        let l = ev.evaluate(&child);
        evals += 1;
        // steady-state replacement of the current worst
        let worst = population
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).expect("loss comparable"))
            .map(|(i, _)| i)
            .expect("population nonempty");
        if l < population[worst].1 {
            population[worst] = (child, l);
        }
    }
}

fn run_sa(ev: &mut Evaluator<'_>, m: usize, opt: &OptimizerSpec) {
    let mut rng = rng_from_seed(opt.seed);
    let sigma = 0.05 * ev.range.width();
    let mut current = random_candidate(&mut rng, m, &ev.range);
    let mut current_loss = ev.evaluate(&current);
    let mut temp = opt.initial_temperature.unwrap_or(if current_loss.is_finite() {
        current_loss.max(1e-9)
    } else {
        1.0
    });
    for _ in 1..opt.budget {
        let mut proposal = current.clone();
        let idx = rng.random_range(0..proposal.len());
        proposal[idx] = reflect(proposal[idx] + sigma * sample_std_normal(&mut rng), &ev.range);
        repair(&mut proposal, &ev.range);
        let l = ev.evaluate(&proposal);
        let accept = if l <= current_loss {
            true
        } else if !l.is_finite() {
            false
        } else {
            let dl = l - current_loss;
            rng.random::<f64>() < libm::exp(-dl / temp)
        };
        if accept {
            current = proposal;
            current_loss = l;
        }
        temp *= opt.cooling_rate;
    }
}
