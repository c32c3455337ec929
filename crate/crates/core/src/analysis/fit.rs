use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt, TerminationReason};
use nalgebra::storage::Owned;
use nalgebra::{DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::DecayRecord;
use crate::error::{DfsError, Result};

/// Reduced forms of `f(s) = e^{−s/τ₁} cos(ωs) + e^{−s/τ₂}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitVariant {
    Full,
    /// `ω = 0`.
    NoOscillation,
    /// `τ₂ = ∞`.
    NoSlowDecay,
    /// `ω = 0` and `τ₂ = ∞`.
    Simple,
}

impl FitVariant {
    pub const ALL: [FitVariant; 4] = [FitVariant::Simple, FitVariant::NoOscillation, FitVariant::NoSlowDecay, FitVariant::Full];

    pub fn n_params(self) -> usize {
        match self {
            FitVariant::Full => 3,
            FitVariant::NoOscillation | FitVariant::NoSlowDecay => 2,
            FitVariant::Simple => 1,
        }
    }

    fn has_omega(self) -> bool {
        matches!(self, FitVariant::Full | FitVariant::NoSlowDecay)
    }

    fn has_tau2(self) -> bool {
        matches!(self, FitVariant::Full | FitVariant::NoOscillation)
    }
}

/// `f(s)` for the given parameters; `tau2 = None` means an infinite slow time.
pub fn decay_model(s: f64, tau1: f64, tau2: Option<f64>, omega: f64) -> f64 {
    let slow = tau2.map_or(1.0, |t2| (-s / t2).exp());
    (-s / tau1).exp() * (omega * s).cos() + slow
}

/// Akaike score of a least-squares fit, with the small-sample correction below 40 points.
pub fn aic(rss: f64, n_points: usize, n_params: usize) -> f64 {
    let n = n_points as f64;
    let k = n_params as f64;
    let base = n * (rss / n).ln() + 2.0 * k;
    if n_points < 40 && n > k + 1.0 {
        base + 2.0 * k * (k + 1.0) / (n - k - 1.0)
    } else {
        base
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Number of log-spaced `τ₁` starts.
    pub starts: usize,
    pub variants: [bool; 4],
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { starts: 8, variants: [true; 4] }
    }
}

/// Best fit of one variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantFit {
    pub variant: FitVariant,
    pub c1: f64,
    pub c2: f64,
    pub tau1: f64,
    pub tau2: Option<f64>,
    pub omega: f64,
    pub rss: f64,
    pub aic: f64,
    pub converged_starts: usize,
}

/// AIC-selected fit with the per-variant table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub c1: f64,
    pub c2: f64,
    pub tau1: f64,
    pub tau2: Option<f64>,
    pub omega: f64,
    pub aic: f64,
    pub variant: FitVariant,
    pub t0: f64,
    pub n_points: usize,
    pub table: Vec<VariantFit>,
}

impl FitResult {
    pub fn eval(&self, t: f64) -> f64 {
        self.c1 * decay_model(t - self.t0, self.tau1, self.tau2, self.omega) + self.c2
    }
}

/// Time-relative data and the boundary values `F(T₀)`, `F(T_max)`.
#[derive(Clone, Debug)]
struct Window {
    s: Vec<f64>,
    f: Vec<f64>,
    s_max: f64,
    f0: f64,
    f_max: f64,
    /// Largest resolvable angular frequency, `π / min Δs`.
    nyquist: f64,
}

impl Window {
    fn constants(&self, tau1: f64, tau2: Option<f64>, omega: f64) -> (f64, f64) {
        let g0 = decay_model(0.0, tau1, tau2, omega);
        let g1 = decay_model(self.s_max, tau1, tau2, omega);
        let df = self.f_max - self.f0;
        let scale = self.f0.abs().max(self.f_max.abs()).max(1.0);
        let c1 = if df.abs() <= 1e-14 * scale {
            0.0
        } else {
            let den = g1 - g0;
            df / if den.abs() < 1e-12 { 1e-12f64.copysign(den) } else { den }
        };
        (c1, self.f0 - c1 * g0)
    }
}

/// Maps scaled LM parameters to `(τ₁, τ₂, ω)` in physical units.
fn unpack(variant: FitVariant, p: &[f64], s_max: f64) -> (f64, Option<f64>, f64) {
    let tau = |x: f64| s_max * x.clamp(-60.0, 60.0).exp();
    match variant {
        FitVariant::Full => (tau(p[0]), Some(tau(p[1])), p[2] / s_max),
        FitVariant::NoOscillation => (tau(p[0]), Some(tau(p[1])), 0.0),
        FitVariant::NoSlowDecay => (tau(p[0]), None, p[1] / s_max),
        FitVariant::Simple => (tau(p[0]), None, 0.0),
    }
}

fn pack(variant: FitVariant, tau1: f64, tau2: f64, omega: f64, s_max: f64) -> Vec<f64> {
    let (l1, l2, w) = ((tau1 / s_max).ln(), (tau2 / s_max).ln(), omega * s_max);
    match variant {
        FitVariant::Full => vec![l1, l2, w],
        FitVariant::NoOscillation => vec![l1, l2],
        FitVariant::NoSlowDecay => vec![l1, w],
        FitVariant::Simple => vec![l1],
    }
}

struct Problem<'a> {
    window: &'a Window,
    variant: FitVariant,
    p: DVector<f64>,
}

impl Problem<'_> {
    fn residuals_at(&self, p: &[f64]) -> DVector<f64> {
        let (t1, t2, w) = unpack(self.variant, p, self.window.s_max);
        let (c1, c2) = self.window.constants(t1, t2, w);
        DVector::from_iterator(
            self.window.s.len(),
            self.window.s.iter().zip(&self.window.f).map(|(&s, &f)| f - (c1 * decay_model(s, t1, t2, w) + c2)),
        )
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for Problem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.p.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let r = self.residuals_at(self.p.as_slice());
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let n = self.window.s.len();
        let k = self.p.len();
        let mut jac = DMatrix::zeros(n, k);
        let mut p = self.p.as_slice().to_vec();
        for j in 0..k {
            let h = 1e-6 * p[j].abs().max(1.0);
            let x = p[j];
            p[j] = x + h;
            let up = self.residuals_at(&p);
            p[j] = x - h;
            let dn = self.residuals_at(&p);
            p[j] = x;
            jac.set_column(j, &((up - dn) / (2.0 * h)));
        }
        jac.iter().all(|v| v.is_finite()).then_some(jac)
    }
}

fn rss_of(window: &Window, tau1: f64, tau2: Option<f64>, omega: f64) -> f64 {
    let (c1, c2) = window.constants(tau1, tau2, omega);
    window
        .s
        .iter()
        .zip(&window.f)
        .map(|(&s, &f)| {
            let r = f - (c1 * decay_model(s, tau1, tau2, omega) + c2);
            r * r
        })
        .sum()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(lo * hi).sqrt()];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn fit_variant(window: &Window, variant: FitVariant, opts: &FitOptions) -> Option<VariantFit> {
    let s_max = window.s_max;
    let tau1_starts = log_grid(s_max / 50.0, 10.0 * s_max, opts.starts.max(1));
    let tau2_grid = if variant.has_tau2() { log_grid(s_max / 10.0, 50.0 * s_max, 6) } else { vec![f64::INFINITY] };
    let omega_grid: Vec<f64> = if variant.has_omega() {
        let max_cycles = ((window.s.len().saturating_sub(1)) as f64 / 2.0).max(1.0);
        let steps = (max_cycles / 0.125).ceil() as usize;
        (1..=steps).map(|i| 2.0 * std::f64::consts::PI * 0.125 * i as f64 / s_max).collect()
    } else {
        vec![0.0]
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut converged = 0;
    for &t1 in &tau1_starts {
        // Seed the remaining parameters from a grid scan at this τ₁.
        let mut seed = (f64::INFINITY, f64::INFINITY, 0.0);
        for &t2 in &tau2_grid {
            let t2o = t2.is_finite().then_some(t2);
            for &w in &omega_grid {
                let r = rss_of(window, t1, t2o, w);
                if r < seed.0 {
                    seed = (r, t2, w);
                }
            }
        }
        let p0 = pack(variant, t1, if seed.1.is_finite() { seed.1 } else { s_max }, seed.2, s_max);
        let problem = Problem { window, variant, p: DVector::from_vec(p0) };
        let (problem, report) = LevenbergMarquardt::new().with_patience(200).minimize(problem);
        let ok = report.termination.was_successful()
            || matches!(report.termination, TerminationReason::NoImprovementPossible(_));
        if !ok {
            continue;
        }
        let p = problem.p.as_slice().to_vec();
        let (a, b, c) = unpack(variant, &p, s_max);
        let rss = rss_of(window, a, b, c);
        // Solutions above the sampling limit are aliases of a lower frequency.
        if !rss.is_finite() || c.abs() > window.nyquist * (1.0 + 1e-9) {
            continue;
        }
        converged += 1;
        if best.as_ref().is_none_or(|(r, _)| rss < *r) {
            best = Some((rss, p));
        }
    }
    let (rss, p) = best?;
    let (mut tau1, mut tau2, omega) = unpack(variant, &p, s_max);
    if variant == FitVariant::NoOscillation {
        if let Some(t2) = tau2 {
            if t2 < tau1 {
                tau2 = Some(tau1);
                tau1 = t2;
            }
        }
    }
    let omega = omega.abs();
    let (c1, c2) = window.constants(tau1, tau2, omega);
    let n = window.s.len();
    let scale = window.f.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let floor = n as f64 * (1e-13 * scale).powi(2);
    Some(VariantFit {
        variant,
        c1,
        c2,
        tau1,
        tau2,
        omega,
        rss,
        aic: aic(rss.max(floor), n, variant.n_params()),
        converged_starts: converged,
    })
}

fn linear_at(t: &[f64], f: &[f64], x: f64) -> f64 {
    let k = t.partition_point(|&v| v <= x).clamp(1, t.len() - 1);
    let (t0, t1) = (t[k - 1], t[k]);
    f[k - 1] + (f[k] - f[k - 1]) * (x - t0) / (t1 - t0)
}

/// Fits every enabled variant on `[t0, t_max]` and returns the AIC-minimal one.
pub fn fit_decay(record: &DecayRecord, t0: f64, t_max: f64) -> Result<FitResult> {
    fit_decay_with(record, t0, t_max, &FitOptions::default())
}

pub fn fit_decay_with(record: &DecayRecord, t0: f64, t_max: f64, opts: &FitOptions) -> Result<FitResult> {
    record.validate()?;
    let (times, fid) = (&record.times, &record.fidelity_mean);
    if times.len() < 2 || !(t0 < t_max) || t0 < times[0] || t_max > *times.last().unwrap() {
        return Err(DfsError::InvalidParameter(format!("fit window [{t0}, {t_max}] outside the record")));
    }
    let (s, f): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(fid)
        .filter(|(t, _)| **t >= t0 && **t <= t_max)
        .map(|(t, v)| (t - t0, *v))
        .unzip();
    if s.len() < 5 {
        return Err(DfsError::TooFewPoints { need: 5, have: s.len() });
    }
    let min_step = s.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let window = Window {
        nyquist: std::f64::consts::PI / min_step,
        s,
        f,
        s_max: t_max - t0,
        f0: linear_at(times, fid, t0),
        f_max: linear_at(times, fid, t_max),
    };
    let table: Vec<VariantFit> = FitVariant::ALL
        .iter()
        .zip(opts.variants)
        .filter(|(_, on)| *on)
        .filter_map(|(&v, _)| fit_variant(&window, v, opts))
        .collect();
    let best = table
        .iter()
        .min_by(|a, b| a.aic.total_cmp(&b.aic).then(a.variant.n_params().cmp(&b.variant.n_params())))
        .ok_or_else(|| DfsError::NoConvergence("no start converged for any model variant".into()))?
        .clone();
    Ok(FitResult {
        c1: best.c1,
        c2: best.c2,
        tau1: best.tau1,
        tau2: best.tau2,
        omega: best.omega,
        aic: best.aic,
        variant: best.variant,
        t0,
        n_points: window.s.len(),
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(tau1: f64, tau2: Option<f64>, omega: f64, t: &[f64], f0: f64, f_inf: f64) -> DecayRecord {
        // C₁ f(0) + C₂ = f0 and C₂ + C₁·(slow asymptote) = f_inf.
        let asym = if tau2.is_none() { 1.0 } else { 0.0 };
        let c1 = (f0 - f_inf) / (decay_model(0.0, tau1, tau2, omega) - asym);
        let c2 = f0 - c1 * decay_model(0.0, tau1, tau2, omega);
        let f = t.iter().map(|&x| c1 * decay_model(x - t[0], tau1, tau2, omega) + c2).collect();
        DecayRecord::from_means(t.to_vec(), f).unwrap()
    }

    fn times(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn aic_monotone_in_rss() {
        for k in 1..=3 {
            for n in [10, 50] {
                assert!(aic(0.01, n, k) < aic(0.02, n, k));
            }
        }
        assert!(aic(0.01, 10, 1) < aic(0.01, 10, 2));
        // The correction only applies below 40 points.
        assert_eq!(aic(0.5, 40, 2), 40.0 * (0.5f64 / 40.0).ln() + 4.0);
    }

    #[test]
    fn recovers_simple_decay() {
        let t = times(12, 0.0, 300e-6);
        let rec = synth(100e-6, None, 0.0, &t, 0.99, 0.5);
        let fit = fit_decay(&rec, t[0], t[11]).unwrap();
        assert_eq!(fit.variant, FitVariant::Simple);
        assert!((fit.tau1 / 100e-6 - 1.0).abs() < 0.01);
        assert!((fit.eval(t[0]) - 0.99).abs() < 1e-12);
        assert!((fit.eval(t[11]) - rec.fidelity_mean[11]).abs() < 1e-12);
    }

    #[test]
    fn recovers_oscillating_decay() {
        let t = times(40, 0.81e-6, 150e-6);
        let rec = synth(100.49e-6, None, 265.03e3, &t, 0.99, 0.5);
        let fit = fit_decay(&rec, t[0], t[39]).unwrap();
        assert_eq!(fit.variant, FitVariant::NoSlowDecay);
        assert!((fit.tau1 / 100.49e-6 - 1.0).abs() < 1e-4);
        assert!((fit.omega / 265.03e3 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn recovers_two_timescales() {
        let t = times(30, 0.0, 400e-6);
        let rec = synth(20e-6, Some(300e-6), 0.0, &t, 0.98, 0.5);
        let fit = fit_decay(&rec, t[0], t[29]).unwrap();
        assert_eq!(fit.variant, FitVariant::NoOscillation);
        assert!((fit.tau1 / 20e-6 - 1.0).abs() < 1e-3);
        assert!((fit.tau2.unwrap() / 300e-6 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn constant_data_takes_degenerate_branch() {
        let t = times(10, 0.0, 1e-4);
        let rec = DecayRecord::from_means(t.clone(), vec![0.97; 10]).unwrap();
        let fit = fit_decay(&rec, t[0], t[9]).unwrap();
        assert_eq!(fit.c1, 0.0);
        assert_eq!(fit.c2, 0.97);
        assert_eq!(fit.variant, FitVariant::Simple);
    }

    #[test]
    fn boundary_conditions_hold_between_samples() {
        let t = times(15, 0.0, 2e-4);
        let rec = synth(50e-6, None, 0.0, &t, 0.95, 0.6);
        let fit = fit_decay(&rec, 0.3e-4, 1.7e-4).unwrap();
        assert!((fit.eval(0.3e-4) - linear_at(&rec.times, &rec.fidelity_mean, 0.3e-4)).abs() < 1e-12);
        assert!((fit.eval(1.7e-4) - linear_at(&rec.times, &rec.fidelity_mean, 1.7e-4)).abs() < 1e-12);
    }

    #[test]
    fn frequencies_stay_below_the_sampling_limit() {
        use rand::{Rng, SeedableRng};
        let t = times(11, 0.0, 80e-6);
        let nyquist = std::f64::consts::PI / 8e-6;
        for seed in 0..5 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let f: Vec<f64> = t.iter().map(|_| 0.6 + 0.3 * rng.random::<f64>()).collect();
            let fit = fit_decay(&DecayRecord::from_means(t.clone(), f).unwrap(), 0.0, 80e-6).unwrap();
            assert!(fit.table.iter().all(|v| v.omega <= nyquist * (1.0 + 1e-9)));
        }
    }

    #[test]
    fn too_few_points() {
        let t = times(4, 0.0, 1.0);
        let rec = DecayRecord::from_means(t, vec![1.0, 0.9, 0.8, 0.7]).unwrap();
        assert!(matches!(fit_decay(&rec, 0.0, 1.0), Err(DfsError::TooFewPoints { .. })));
    }
}
