//! Multi-start projected gradient descent on (S^{d−1})^N with smoothing
//! continuation, and p-sweeps comparing the numerical minimum against a
//! fixed construction and the closed-form lower bounds.
//!
//! Restart r draws its starting point from `ChaCha8Rng::seed_from_u64(seed)`
//! switched to stream r, so results do not depend on how restarts are
//! scheduled across threads.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::best_pframe_bound;
use crate::configs::{canonical_cmp, canonicalize, random_configuration, simplex, Configuration};
use crate::continuous::continuous_lower_bound;
use crate::energies::{config_energy, energy_and_gradient, Potential, PotentialKind};
use crate::error::{Error, Result};

const ARMIJO_C1: f64 = 1e-4;
const MIN_STEP: f64 = 1e-18;
/// Restarts within this distance of the best energy count as hitting it.
pub const HIT_TOL: f64 = 1e-6;
/// Sweep rows with gap below −GAP_TOL mark the empirical threshold.
pub const GAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerOptions {
    pub restarts: usize,
    /// Iteration cap per smoothing level.
    pub max_iters: usize,
    pub step0: f64,
    pub armijo_beta: f64,
    pub grad_tol: f64,
    pub epsilon_schedule: Vec<f64>,
    pub seed: u64,
    /// Worker threads for restarts; 0 uses the global rayon pool.
    pub threads: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            restarts: 64,
            max_iters: 5000,
            step0: 0.1,
            armijo_beta: 0.5,
            grad_tol: 1e-9,
            epsilon_schedule: geometric_schedule(1e-2, 1e-8, 10.0),
            seed: 0,
            threads: 0,
        }
    }
}

/// from, from/factor, … down to `to` (inclusive up to rounding).
pub fn geometric_schedule(from: f64, to: f64, factor: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut e = from;
    while e >= to * (1.0 - 1e-9) {
        out.push(e);
        e /= factor;
    }
    out
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = self.restarts > 0
            && self.max_iters > 0
            && self.step0 > 0.0
            && self.grad_tol > 0.0
            && self.armijo_beta > 0.0
            && self.armijo_beta < 1.0;
        if !positive {
            return Err(Error::InvalidArgument(
                "restarts, max_iters, step0 and grad_tol must be positive; armijo_beta in (0, 1)"
                    .into(),
            ));
        }
        if self
            .epsilon_schedule
            .iter()
            .any(|e| !(e.is_finite() && *e >= 0.0))
            || self.epsilon_schedule.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::InvalidArgument(
                "epsilon schedule must be nonnegative and strictly decreasing".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub epsilon: f64,
    pub iter: usize,
    /// Smoothed energy after the accepted step.
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizeResult {
    /// Canonical form of the best configuration.
    pub config: Configuration,
    /// Unsmoothed energy of `config`.
    pub energy: f64,
    /// Whether the gradient tolerance was met at the last smoothing level.
    pub converged: bool,
    pub best_restart: usize,
    pub restart_energies: Vec<f64>,
    pub restarts_hitting_best: usize,
    /// Iteration log of the winning restart.
    pub trace: Vec<TraceEntry>,
}

struct RestartOutcome {
    config: Configuration,
    energy: f64,
    converged: bool,
    trace: Vec<TraceEntry>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Euclidean step followed by renormalization of every vector.
fn retract(x: &[f64], g: &[f64], step: f64, d: usize) -> Vec<f64> {
    let mut y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - step * b).collect();
    for v in y.chunks_mut(d) {
        let n = norm(v);
        v.iter_mut().for_each(|a| *a /= n);
    }
    y
}

fn descend(start: Configuration, f: &Potential, opts: &OptimizerOptions) -> RestartOutcome {
    let d = start.d();
    let mut x = start;
    let mut trace = Vec::new();
    let mut converged = false;
    let levels: Vec<f64> = if opts.epsilon_schedule.is_empty() {
        vec![0.0]
    } else {
        opts.epsilon_schedule.clone()
    };
    for &eps in &levels {
        let fe = f.with_epsilon(eps).expect("validated smoothing width");
        let (mut e, mut g) = energy_and_gradient(&x, &fe);
        let mut prev_step = opts.step0;
        converged = false;
        for iter in 0..opts.max_iters {
            let gn = norm(&g);
            if gn <= opts.grad_tol {
                converged = true;
                break;
            }
            let mut step = opts.step0.min(2.0 * prev_step);
            let accepted = loop {
                let y = Configuration::from_raw(d, retract(x.raw(), &g, step, d));
                let (ey, gy) = energy_and_gradient(&y, &fe);
                if ey <= e - ARMIJO_C1 * step * gn * gn {
                    break Some((y, ey, gy));
                }
                step *= opts.armijo_beta;
                if step < MIN_STEP {
                    break None;
                }
            };
            let Some((y, ey, gy)) = accepted else { break };
            x = y;
            e = ey;
            g = gy;
            prev_step = step;
            trace.push(TraceEntry {
                epsilon: eps,
                iter,
                energy: e,
                grad_norm: norm(&g),
                step,
            });
        }
        if norm(&g) <= opts.grad_tol {
            converged = true;
        }
    }
    let energy = config_energy(&x, &f.with_epsilon(0.0).expect("zero width")).value;
    RestartOutcome {
        config: x,
        energy,
        converged,
        trace,
    }
}

fn run_parallel<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return job();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

fn rounded(e: f64) -> f64 {
    (e * 1e12).round()
}

/// Minimizes the energy of N unit vectors in R^d under `f`.
pub fn minimize_energy(
    d: usize,
    n: usize,
    f: &Potential,
    opts: &OptimizerOptions,
) -> Result<MinimizeResult> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "minimize_energy needs d, N >= 1".into(),
        ));
    }
    opts.validate()?;
    let outcomes: Vec<RestartOutcome> = run_parallel(opts.threads, || {
        (0..opts.restarts)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(r as u64);
                let start = random_configuration(d, n, &mut rng);
                let mut out = descend(start, f, opts);
                out.config = canonicalize(&out.config);
                out
            })
            .collect()
    });
    let best_restart = (0..outcomes.len())
        .min_by(|&a, &b| {
            let (oa, ob) = (&outcomes[a], &outcomes[b]);
            rounded(oa.energy)
                .total_cmp(&rounded(ob.energy))
                .then_with(|| canonical_cmp(&oa.config, &ob.config))
                .then(a.cmp(&b))
        })
        .expect("at least one restart");
    let restart_energies: Vec<f64> = outcomes.iter().map(|o| o.energy).collect();
    let best = outcomes[best_restart].energy;
    let restarts_hitting_best = restart_energies
        .iter()
        .filter(|&&e| e <= best + HIT_TOL)
        .count();
    let winner = outcomes
        .into_iter()
        .nth(best_restart)
        .expect("index in range");
    Ok(MinimizeResult {
        config: winner.config,
        energy: winner.energy,
        converged: winner.converged,
        best_restart,
        restart_energies,
        restarts_hitting_best,
        trace: winner.trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub best_energy: f64,
    pub construction_energy: f64,
    pub bound: f64,
    pub gap: f64,
    pub restarts_hitting_best: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Smallest p at which the minimizer beat the construction by more than
    /// GAP_TOL, if any.
    pub threshold: Option<f64>,
}

/// Largest closed-form lower bound available for the potential: the
/// p-frame bounds, or the continuous-energy bound N²·I − N·f(1) for the
/// shifted families. Zero when nothing applies.
pub fn applicable_bound(d: usize, n: usize, f: &Potential) -> f64 {
    match f.kind {
        PotentialKind::Pframe => best_pframe_bound(n, d, f.p),
        _ => match continuous_lower_bound(f, d) {
            Some(floor) => {
                let nf = n as f64;
                (nf * nf * floor - nf * f.value_clamped(1.0)).max(0.0)
            }
            None => 0.0,
        },
    }
}

/// Runs the minimizer for every p of the grid.
pub fn sweep_p(
    d: usize,
    n: usize,
    family: PotentialKind,
    p_grid: &[f64],
    construction: &Configuration,
    opts: &OptimizerOptions,
) -> Result<Sweep> {
    if p_grid.iter().any(|p| !(*p > 0.0 && *p <= 4.0)) || p_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "p grid must be ascending within (0, 4]".into(),
        ));
    }
    if construction.d() != d || construction.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "construction is {}x{}, expected {d}x{n}",
            construction.d(),
            construction.n()
        )));
    }
    let mut rows = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let f = Potential::new(family, p, 0.0)?;
        let result = minimize_energy(d, n, &f, opts)?;
        let construction_energy = config_energy(construction, &f).value;
        rows.push(SweepRow {
            p,
            best_energy: result.energy,
            construction_energy,
            bound: applicable_bound(d, n, &f),
            gap: result.energy - construction_energy,
            restarts_hitting_best: result.restarts_hitting_best,
        });
    }
    let threshold = rows.iter().find(|r| r.gap < -GAP_TOL).map(|r| r.p);
    Ok(Sweep { rows, threshold })
}

pub const SWEEP_CSV_HEADER: &str =
    "p,best_energy,construction_energy,bound,gap,restarts_hitting_best";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            r.p, r.best_energy, r.construction_energy, r.bound, r.gap, r.restarts_hitting_best
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedConstruction {
    pub name: String,
    pub energy: f64,
    pub config: Configuration,
}

/// The k-simplex spanning the first k coordinates followed by e_{k+1}, …, e_d.
pub fn simplex_hybrid(d: usize, k: usize) -> Result<Configuration> {
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!(
            "hybrid needs 1 <= k <= d, got k = {k}"
        )));
    }
    let s = simplex(k)?;
    let mut vs: Vec<Vec<f64>> = s
        .vectors()
        .map(|v| {
            let mut w = v.to_vec();
            w.resize(d, 0.0);
            w
        })
        .collect();
    for i in k..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        vs.push(e);
    }
    Ok(Configuration::from_raw(d, vs.concat()))
}

/// Energies of the named candidates, plus the simplex/orthonormal hybrids
/// when N = d+1, sorted ascending (stable for ties).
pub fn compare_constructions(
    d: usize,
    n: usize,
    f: &Potential,
    candidates: &[(String, Configuration)],
) -> Result<Vec<RankedConstruction>> {
    let mut all: Vec<(String, Configuration)> = Vec::with_capacity(candidates.len() + d);
    for (name, c) in candidates {
        if c.d() != d || c.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "candidate {name} is {}x{}, expected {d}x{n}",
                c.d(),
                c.n()
            )));
        }
        all.push((name.clone(), c.clone()));
    }
    if n == d + 1 {
        for k in 1..=d {
            all.push((
                format!("simplex{k}+orthonormal{}", d - k),
                simplex_hybrid(d, k)?,
            ));
        }
    }
    let mut ranked: Vec<RankedConstruction> = all
        .into_iter()
        .map(|(name, config)| RankedConstruction {
            energy: config_energy(&config, f).value,
            name,
            config,
        })
        .collect();
    ranked.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap_or(Ordering::Equal));
    Ok(ranked)
}
