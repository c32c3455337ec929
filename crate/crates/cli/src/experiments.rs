//! The four experiment families.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use dfs_lab::analysis::{fit_decay, time_averaged_fidelity, DecayRecord, FitResult, Provenance};
use dfs_lab::codes::GaugeSpec;
use dfs_lab::engine::{simulate, simulate_blocks, InitialState, Point};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ProtocolEntry, ProtocolName};
use crate::setup::{seed_path, stream, theta_grid, PointStat, Realized, Setup, Stat};
use crate::CliError;

type Weights = Vec<Vec<Vec<f64>>>;

/// Distinct protocols in first-appearance order.
fn distinct(entries: &[ProtocolEntry]) -> Vec<ProtocolName> {
    let mut out = Vec::new();
    for e in entries {
        if !out.contains(&e.name) {
            out.push(e.name);
        }
    }
    out
}

fn protocol_index(p: ProtocolName) -> u64 {
    ProtocolName::ALL.iter().position(|&q| q == p).unwrap() as u64
}

/// Simulates and samples one plan per `(protocol, state)` pair.
fn sample_grid(
    s: &Setup,
    protocols: &[ProtocolName],
    states: &[InitialState],
    reps: &[usize],
) -> Result<BTreeMap<(usize, usize), (Vec<Point>, Weights)>, CliError> {
    let items: Vec<(usize, usize)> = (0..protocols.len()).flat_map(|p| (0..states.len()).map(move |k| (p, k))).collect();
    let done: Vec<((usize, usize), (Vec<Point>, Weights))> = items
        .par_iter()
        .map(|&(pi, k)| {
            let p = protocols[pi];
            let model = s.model(p.n_sys(), seed_path(s.noise_seed, &[protocol_index(p)]), 1.0)?;
            let plan = s.plan(p, states[k], model, reps.to_vec())?;
            let points = simulate(&plan)?;
            let w = s.weights(&points, seed_path(s.cfg.seed, &[stream::SHOTS, protocol_index(p), k as u64]))?;
            Ok(((pi, k), (points, w)))
        })
        .collect::<Result<_, CliError>>()?;
    Ok(done.into_iter().collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct ArmCurve {
    pub label: String,
    pub protocol: ProtocolName,
    pub postselected: bool,
    pub points: Vec<PointStat>,
    /// Spread `max − min` of the mean fidelity over the scan.
    pub flatness: f64,
    pub flatness_sigma: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaScanResult {
    pub cycle_time: f64,
    pub cycles: usize,
    pub phi: f64,
    pub thetas: Vec<f64>,
    pub arms: Vec<ArmCurve>,
}

fn flatness(points: &[PointStat]) -> (f64, f64) {
    let (mut lo, mut hi) = (0, 0);
    for (i, p) in points.iter().enumerate() {
        if p.fidelity.mean < points[lo].fidelity.mean {
            lo = i;
        }
        if p.fidelity.mean > points[hi].fidelity.mean {
            hi = i;
        }
    }
    let (a, b) = (points[hi].fidelity, points[lo].fidelity);
    (a.mean - b.mean, a.sem.hypot(b.sem))
}

pub fn theta_scan(s: &Setup) -> Result<ThetaScanResult, CliError> {
    let c = s.cfg.theta_scan;
    let thetas = theta_grid(c.points.get());
    let states: Vec<InitialState> = thetas.iter().map(|&t| InitialState::new(t, c.phi.get())).collect();
    let protocols = distinct(&s.cfg.protocols);
    let grid = sample_grid(s, &protocols, &states, &[c.cycles.get()])?;
    let mut arms = Vec::new();
    for (ai, e) in s.cfg.protocols.iter().enumerate() {
        let pi = protocols.iter().position(|&p| p == e.name).unwrap();
        let code = s.code(e.name);
        let mut points = Vec::new();
        for k in 0..states.len() {
            let r = s.realize(&grid[&(pi, k)].1, e.name.n_sys(), code.as_ref(), e.postselects())?;
            points.push(s.point_stat(&r[0], seed_path(s.cfg.seed, &[stream::BOOTSTRAP, ai as u64, k as u64]))?);
        }
        let (flat, sigma) = flatness(&points);
        arms.push(ArmCurve {
            label: e.label(),
            protocol: e.name,
            postselected: e.postselects(),
            points,
            flatness: flat,
            flatness_sigma: sigma,
        });
    }
    Ok(ThetaScanResult { cycle_time: s.cycle, cycles: c.cycles.get(), phi: c.phi.get(), thetas, arms })
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeArm {
    pub label: String,
    pub protocol: ProtocolName,
    pub postselected: bool,
    /// `cells[i][j]` is the point at `thetas[i]`, `gauges[j]`.
    pub cells: Vec<Vec<PointStat>>,
    pub gauge_std_per_theta: Vec<f64>,
    /// Standard deviation over gauges averaged over logical states.
    pub gauge_std: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeScanResult {
    pub cycle_time: f64,
    pub cycles: usize,
    pub phi: f64,
    pub thetas: Vec<f64>,
    /// Gauge angles `φ_g`, gauge state `cos(φ_g/2)|0⟩ + sin(φ_g/2)|1⟩`.
    pub gauges: Vec<f64>,
    pub arms: Vec<GaugeArm>,
}

fn population_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()
}

pub fn gauge_scan(s: &Setup) -> Result<GaugeScanResult, CliError> {
    let c = s.cfg.gauge_scan;
    let thetas = theta_grid(c.theta_points.get());
    let ng = c.gauge_points.get();
    let gauges: Vec<f64> = (0..ng).map(|j| 2.0 * PI * j as f64 / ng as f64).collect();
    let states: Vec<InitialState> = thetas
        .iter()
        .flat_map(|&t| gauges.iter().map(move |&g| InitialState::new(t, c.phi.get()).with_gauge(GaugeSpec::from_angle(g))))
        .collect();
    let protocols = distinct(&s.cfg.protocols);
    let grid = sample_grid(s, &protocols, &states, &[c.cycles.get()])?;
    let mut arms = Vec::new();
    for (ai, e) in s.cfg.protocols.iter().enumerate() {
        let pi = protocols.iter().position(|&p| p == e.name).unwrap();
        let code = s.code(e.name);
        let mut cells = vec![Vec::with_capacity(ng); thetas.len()];
        for (k, row) in (0..states.len()).map(|k| (k, k / ng)) {
            let r = s.realize(&grid[&(pi, k)].1, e.name.n_sys(), code.as_ref(), e.postselects())?;
            cells[row].push(s.point_stat(&r[0], seed_path(s.cfg.seed, &[stream::BOOTSTRAP, ai as u64, k as u64]))?);
        }
        let per_theta: Vec<f64> =
            cells.iter().map(|row| population_std(&row.iter().map(|p| p.fidelity.mean).collect::<Vec<_>>())).collect();
        arms.push(GaugeArm {
            label: e.label(),
            protocol: e.name,
            postselected: e.postselects(),
            gauge_std: per_theta.iter().sum::<f64>() / per_theta.len() as f64,
            gauge_std_per_theta: per_theta,
            cells,
        });
    }
    Ok(GaugeScanResult { cycle_time: s.cycle, cycles: c.cycles.get(), phi: c.phi.get(), thetas, gauges, arms })
}

/// A fit outcome; failures are reported rather than aborting the run.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitOutcome {
    Ok(FitResult),
    Error(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayArm {
    pub label: String,
    pub protocol: ProtocolName,
    pub postselected: bool,
    pub repetitions: Vec<usize>,
    pub times: Vec<f64>,
    pub points: Vec<PointStat>,
    pub window_short: (f64, f64),
    pub window_long: (f64, f64),
    pub f_t_short: Stat,
    pub f_t_long: Stat,
    pub fit: Option<FitOutcome>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleEntry {
    pub theta: f64,
    pub phi: f64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayResult {
    pub cycle_time: f64,
    pub ensemble: Vec<EnsembleEntry>,
    pub arms: Vec<DecayArm>,
}

/// Time-averaged fidelity per realization, reduced to a statistic.
fn window_stat(s: &Setup, times: &[f64], per_point: &[Realized], window: (f64, f64), seed: u64) -> Result<Stat, CliError> {
    let n_real = per_point[0].fidelity.len();
    let values = (0..n_real)
        .map(|r| {
            let curve: Vec<f64> = per_point.iter().map(|p| p.fidelity[r]).collect();
            let rec = DecayRecord::from_means(times.to_vec(), curve)?;
            Ok(time_averaged_fidelity(&rec, window.0, window.1)?)
        })
        .collect::<Result<Vec<f64>, CliError>>()?;
    s.stat(&values, seed)
}

/// State-averaged per-point values of one arm over the whole ensemble.
fn ensemble_average(
    s: &Setup,
    weights: &[&Weights],
    p: ProtocolName,
    postselect: bool,
) -> Result<Vec<Realized>, CliError> {
    let code = s.code(p);
    let per_state = weights
        .iter()
        .map(|w| s.realize(w, p.n_sys(), code.as_ref(), postselect))
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((0..per_state[0].len())
        .map(|m| Realized::average(&per_state.iter().map(|st| st[m].clone()).collect::<Vec<_>>()))
        .collect())
}

pub fn decay(s: &Setup) -> Result<DecayResult, CliError> {
    let c = &s.cfg.decay;
    let ens = s.ensemble();
    let states: Vec<InitialState> = ens.states.iter().map(|&(t, p)| InitialState::new(t, p)).collect();
    let protocols = distinct(&s.cfg.protocols);
    let grid = sample_grid(s, &protocols, &states, &c.repetitions)?;
    let mut arms = Vec::new();
    for (ai, e) in s.cfg.protocols.iter().enumerate() {
        let pi = protocols.iter().position(|&p| p == e.name).unwrap();
        let weights: Vec<&Weights> = (0..states.len()).map(|k| &grid[&(pi, k)].1).collect();
        let per_point = ensemble_average(s, &weights, e.name, e.postselects())?;
        let times: Vec<f64> = grid[&(pi, 0)].0.iter().map(|p| p.t_total).collect();
        let points = per_point
            .iter()
            .enumerate()
            .map(|(m, r)| s.point_stat(r, seed_path(s.cfg.seed, &[stream::BOOTSTRAP, ai as u64, m as u64])))
            .collect::<Result<Vec<_>, CliError>>()?;
        let t0 = times[0];
        let t_end = *times.last().unwrap();
        let short = (t0, (t0 + c.short_cycles.get() * s.cycle).min(t_end));
        let long = (t0, (t0 + c.long_cycles.get() * s.cycle).min(t_end));
        let bseed = |w: u64| seed_path(s.cfg.seed, &[stream::BOOTSTRAP, ai as u64, 1000 + w]);
        let f_t_short = window_stat(s, &times, &per_point, short, bseed(0))?;
        let f_t_long = window_stat(s, &times, &per_point, long, bseed(1))?;
        let fit = c.fit.then(|| {
            let record = DecayRecord {
                times: times.clone(),
                fidelity_mean: points.iter().map(|p| p.fidelity.mean).collect(),
                fidelity_ci: points.iter().map(|p| (p.fidelity.ci_lo, p.fidelity.ci_hi)).collect(),
                accepted_fraction: points.iter().map(|p| p.accepted_fraction).collect(),
            };
            match fit_decay(&record, t0, t_end) {
                Ok(f) => FitOutcome::Ok(f),
                Err(err) => FitOutcome::Error(err.to_string()),
            }
        });
        arms.push(DecayArm {
            label: e.label(),
            protocol: e.name,
            postselected: e.postselects(),
            repetitions: c.repetitions.clone(),
            times,
            points,
            window_short: short,
            window_long: long,
            f_t_short,
            f_t_long,
            fit,
        });
    }
    let ensemble = ens
        .states
        .iter()
        .zip(&ens.provenance)
        .map(|(&(theta, phi), &provenance)| EnsembleEntry { theta, phi, provenance })
        .collect();
    Ok(DecayResult { cycle_time: s.cycle, ensemble, arms })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestK {
    pub k: usize,
    /// First block of the best adjacent run.
    pub start: usize,
    pub mean: f64,
}

/// Best mean over every run of `k` adjacent values, for `k = 1..=k_max`.
pub fn best_adjacent(values: &[f64], k_max: usize) -> Vec<BestK> {
    (1..=k_max.min(values.len()))
        .map(|k| {
            let mut best = BestK { k, start: 0, mean: f64::NEG_INFINITY };
            for start in 0..=values.len() - k {
                let mean = values[start..start + k].iter().sum::<f64>() / k as f64;
                if mean > best.mean {
                    best = BestK { k, start, mean };
                }
            }
            best
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingArm {
    pub role: String,
    pub protocols: Vec<ProtocolName>,
    pub postselected: bool,
    /// Time-averaged fidelity of each block (logical) or qubit (physical).
    pub f_t: Vec<Stat>,
    pub accepted_fraction: Vec<f64>,
    pub best_k: Vec<BestK>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingResult {
    pub cycle_time: f64,
    pub blocks: usize,
    pub block_scales: Vec<f64>,
    pub window_cycles: f64,
    pub arms: Vec<ScalingArm>,
}

fn scaling_arm(
    s: &Setup,
    role: &str,
    base: ProtocolName,
    count: usize,
    group: usize,
    scales: &[f64],
    tag: u64,
) -> Result<ScalingArm, CliError> {
    let c = &s.cfg.scaling;
    let protocols: Vec<ProtocolName> =
        (0..count).map(|i| if c.stagger && i % 2 == 1 { base.without_dd() } else { base }).collect();
    let postselect = c.postselect && base.is_encoded();
    let ens = s.ensemble();
    let zz = c.zz.get();
    let per_state: Vec<Vec<(Vec<Point>, Weights)>> = ens
        .states
        .par_iter()
        .enumerate()
        .map(|(k, &(theta, phi))| {
            let plans = protocols
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let model = s.model(p.n_sys(), seed_path(s.noise_seed, &[tag, i as u64]), scales[i / group])?;
                    s.plan(p, InitialState::new(theta, phi), model, c.repetitions.clone())
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let pts = simulate_blocks(&plans, (zz != 0.0).then_some(zz))?;
            pts.into_iter()
                .enumerate()
                .map(|(i, p)| {
                    let w = s.weights(&p, seed_path(s.cfg.seed, &[stream::SHOTS, tag, i as u64, k as u64]))?;
                    Ok((p, w))
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<_, CliError>>()?;
    let mut f_t = Vec::new();
    let mut accepted = Vec::new();
    for (i, &p) in protocols.iter().enumerate() {
        let weights: Vec<&Weights> = per_state.iter().map(|st| &st[i].1).collect();
        let per_point = ensemble_average(s, &weights, p, postselect)?;
        let times: Vec<f64> = per_state[0][i].0.iter().map(|p| p.t_total).collect();
        let t0 = times[0];
        let window = (t0, (t0 + c.window_cycles.get() * s.cycle).min(*times.last().unwrap()));
        f_t.push(window_stat(s, &times, &per_point, window, seed_path(s.cfg.seed, &[stream::BOOTSTRAP, tag, i as u64]))?);
        let acc: Vec<f64> = per_point.iter().map(|r| r.accept.iter().sum::<f64>() / r.accept.len() as f64).collect();
        accepted.push(acc.iter().sum::<f64>() / acc.len() as f64);
    }
    let means: Vec<f64> = f_t.iter().map(|x| x.mean).collect();
    Ok(ScalingArm {
        role: role.into(),
        best_k: best_adjacent(&means, c.blocks.get()),
        protocols,
        postselected: postselect,
        f_t,
        accepted_fraction: accepted,
    })
}

pub fn scaling(s: &Setup) -> Result<ScalingResult, CliError> {
    let c = &s.cfg.scaling;
    let k = c.blocks.get();
    let n_code = c.logical.n_sys();
    let scales = s.block_scales(k);
    let logical = scaling_arm(s, "logical", c.logical, k, 1, &scales, 100)?;
    // The physical arm gets every physical qubit the logical arm occupies.
    let physical = scaling_arm(s, "physical", c.physical, k * n_code, n_code, &scales, 200)?;
    Ok(ScalingResult {
        cycle_time: s.cycle,
        blocks: k,
        block_scales: scales,
        window_cycles: c.window_cycles.get(),
        arms: vec![logical, physical],
    })
}

/// Repetition count used to group protocols by total time.
pub fn grouping_reps(s: &Setup) -> usize {
    match s.experiment {
        crate::config::Experiment::ThetaScan => s.cfg.theta_scan.cycles.get(),
        crate::config::Experiment::GaugeScan => s.cfg.gauge_scan.cycles.get(),
        crate::config::Experiment::Decay => *s.cfg.decay.repetitions.last().unwrap(),
        crate::config::Experiment::Scaling => *s.cfg.scaling.repetitions.last().unwrap(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setup::linspace;

    #[test]
    fn best_adjacent_windows() {
        let v = [0.9, 0.95, 0.7, 0.99];
        let b = best_adjacent(&v, 4);
        assert_eq!(b[0], BestK { k: 1, start: 3, mean: 0.99 });
        assert_eq!(b[1].start, 0);
        assert!((b[2].mean - 0.88).abs() < 1e-12);
        assert!((b[3].mean - 0.885).abs() < 1e-12);
    }

    #[test]
    fn spread_statistic() {
        let mk = |m: f64, e: f64| PointStat {
            fidelity: Stat { mean: m, ci_lo: m, ci_hi: m, sem: e },
            accepted_fraction: 1.0,
            accepted_sem: 0.0,
        };
        let (f, s) = flatness(&[mk(0.9, 0.003), mk(0.8, 0.004), mk(0.85, 0.0)]);
        assert!((f - 0.1).abs() < 1e-12);
        assert!((s - 0.005).abs() < 1e-12);
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }
}
