//! Monte Carlo samplers for the two intermediate descriptions: the linear
//! Boltzmann jump process and the linear Landau angular diffusion, with
//! stationary estimation by backward exit.
//!
//! Both samplers move at unit speed in the slab and are run backward in
//! time (free flight along `-v`), so a left exit is forward-incoming from
//! the left reservoir and carries `rho_left`.

use crate::medium::mix_seed;
use crate::micro::{reduce_estimate, Estimate, ExitKind, ExitRecord, ParticleState, MAX_RENEWALS};
use crate::parallel::map_indexed;
use crate::params::KineticParams;
use crate::scattering::ScatteringTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KineticError {
    #[error(
        "dt = {dt} too coarse: angular std per step {std} > 0.1 rad; need dt <= {max_dt}"
    )]
    StepSize { dt: f64, std: f64, max_dt: f64 },
    #[error("generator spec invalid: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Boltzmann,
    Landau,
}

/// Collision generator of a kinetic sampler.
///
/// The Landau `diffusion` coefficient defaults to the potential-derived
/// `landau_coefficient_b` upstream; the `mu/2` convention is available by
/// passing that value instead.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Total jump rate `2 mu eps^{-2 alpha - lambda}` (Boltzmann).
    pub rate: f64,
    /// Angular generator coefficient (Landau).
    pub diffusion: f64,
    /// `eps^{-lambda}`; multiplies the Landau diffusion in wall-clock time.
    pub time_scale: f64,
}

impl GeneratorSpec {
    pub fn boltzmann(params: &KineticParams) -> Self {
        GeneratorSpec {
            kind: GeneratorKind::Boltzmann,
            rate: params.jump_rate(),
            diffusion: 0.0,
            time_scale: params.time_scale(),
        }
    }

    pub fn landau(params: &KineticParams, diffusion: f64) -> Result<Self, KineticError> {
        if diffusion <= 0.0 {
            return Err(KineticError::InvalidSpec(format!("diffusion = {diffusion}")));
        }
        Ok(GeneratorSpec {
            kind: GeneratorKind::Landau,
            rate: 0.0,
            diffusion,
            time_scale: params.time_scale(),
        })
    }

    /// Largest Euler-Maruyama step keeping the angular std per step at 0.1.
    pub fn max_landau_dt(&self) -> f64 {
        0.01 / (2.0 * self.diffusion * self.time_scale)
    }
}

fn exit_record(
    kind: ExitKind,
    x: [f64; 2],
    theta: f64,
    t: f64,
    params: &KineticParams,
    n_events: usize,
) -> ExitRecord {
    let boundary_value = match kind {
        ExitKind::ExitedLeft => Some(params.rho_left),
        ExitKind::ExitedRight => Some(params.rho_right),
        ExitKind::Censored => None,
    };
    ExitRecord {
        kind,
        exit_state: ParticleState { x, v: [theta.cos(), theta.sin()], t },
        hitting_time: t,
        boundary_value,
        n_events,
        max_energy_drift: 0.0,
    }
}

/// Backward jump-process sample: free flight along `-v` with exponential
/// waiting times of total rate `2 mu eps^{-2 alpha - lambda}`; each event
/// draws `rho` uniform on `[-1, 1]` and rotates the angle by the signed
/// table deflection.
pub fn boltzmann_exit_sample<R: Rng>(
    x: [f64; 2],
    theta: f64,
    params: &KineticParams,
    table: &ScatteringTable,
    t_cap: f64,
    rng: &mut R,
) -> ExitRecord {
    let rate = params.jump_rate();
    let l = params.slab_width;
    let mut pos = x;
    let mut th = theta;
    let mut t = 0.0f64;
    let mut n_events = 0usize;
    loop {
        let wait = if rate > 0.0 {
            -(1.0 - rng.gen::<f64>()).ln() / rate
        } else {
            f64::INFINITY
        };
        let d = [-th.cos(), -th.sin()];
        let s_boundary = if d[0] > 0.0 {
            (l - pos[0]) / d[0]
        } else if d[0] < 0.0 {
            -pos[0] / d[0]
        } else {
            f64::INFINITY
        };
        let s_step = wait.min(t_cap - t);
        if s_boundary <= s_step {
            let side = if d[0] > 0.0 { ExitKind::ExitedRight } else { ExitKind::ExitedLeft };
            pos = [pos[0] + d[0] * s_boundary, pos[1] + d[1] * s_boundary];
            // land exactly on the wall
            pos[0] = if side == ExitKind::ExitedRight { l } else { 0.0 };
            return exit_record(side, pos, th, t + s_boundary, params, n_events);
        }
        pos = [pos[0] + d[0] * s_step, pos[1] + d[1] * s_step];
        t += s_step;
        if t >= t_cap {
            return exit_record(ExitKind::Censored, pos, th, t, params, n_events);
        }
        let rho = 2.0 * rng.gen::<f64>() - 1.0;
        th += table.interpolate(rho);
        n_events += 1;
    }
}

/// Backward Landau sample: Strang splitting of transport and the angular
/// Brownian kick (`half-drift, kick, half-drift`); boundary exit is located
/// by linear interpolation within the sub-step.
pub fn landau_exit_sample<R: Rng>(
    x: [f64; 2],
    theta: f64,
    params: &KineticParams,
    gen: &GeneratorSpec,
    dt: f64,
    t_cap: f64,
    rng: &mut R,
) -> Result<ExitRecord, KineticError> {
    let std = (2.0 * gen.diffusion * gen.time_scale * dt).sqrt();
    if std > 0.1 {
        return Err(KineticError::StepSize { dt, std, max_dt: gen.max_landau_dt() });
    }
    let l = params.slab_width;
    let mut pos = x;
    let mut th = theta;
    let mut t = 0.0f64;
    let mut n_events = 0usize;
    let drift = |pos: &mut [f64; 2], th: f64, h: f64| -> Option<(ExitKind, f64)> {
        let d = [-th.cos(), -th.sin()];
        let nx = pos[0] + d[0] * h;
        if nx <= 0.0 || nx >= l {
            let (side, wall) = if nx <= 0.0 { (ExitKind::ExitedLeft, 0.0) } else { (ExitKind::ExitedRight, l) };
            let frac = if d[0] != 0.0 { (wall - pos[0]) / d[0] / h } else { 1.0 };
            pos[0] = wall;
            pos[1] += d[1] * h * frac;
            return Some((side, h * frac));
        }
        pos[0] = nx;
        pos[1] += d[1] * h;
        None
    };
    while t < t_cap {
        let h = dt.min(t_cap - t);
        if let Some((side, used)) = drift(&mut pos, th, 0.5 * h) {
            return Ok(exit_record(side, pos, th, t + used, params, n_events));
        }
        let kick = (2.0 * gen.diffusion * gen.time_scale * h).sqrt();
        th += kick * rng.sample::<f64, _>(StandardNormal);
        n_events += 1;
        if let Some((side, used)) = drift(&mut pos, th, 0.5 * h) {
            return Ok(exit_record(side, pos, th, t + 0.5 * h + used, params, n_events));
        }
        t += h;
    }
    Ok(exit_record(ExitKind::Censored, pos, th, t, params, n_events))
}

/// Which kinetic sampler to run, with its discretization.
#[derive(Debug, Clone)]
pub enum Sampler<'a> {
    Boltzmann(&'a ScatteringTable),
    Landau { gen: GeneratorSpec, dt: f64 },
}

impl Sampler<'_> {
    pub fn kind(&self) -> GeneratorKind {
        match self {
            Sampler::Boltzmann(_) => GeneratorKind::Boltzmann,
            Sampler::Landau { .. } => GeneratorKind::Landau,
        }
    }

    fn sample<R: Rng>(
        &self,
        x: [f64; 2],
        theta: f64,
        params: &KineticParams,
        t_cap: f64,
        rng: &mut R,
    ) -> Result<ExitRecord, KineticError> {
        match self {
            Sampler::Boltzmann(table) => {
                Ok(boltzmann_exit_sample(x, theta, params, table, t_cap, rng))
            }
            Sampler::Landau { gen, dt } => {
                landau_exit_sample(x, theta, params, gen, *dt, t_cap, rng)
            }
        }
    }
}

/// Monte Carlo stationary estimate at `(x, theta)` for either kinetic
/// level, with renewal-on-censoring up to [`MAX_RENEWALS`] horizons.
pub fn stationary_estimate_kinetic(
    sampler: &Sampler,
    x: [f64; 2],
    theta: f64,
    params: &KineticParams,
    n_samples: usize,
    t_cap: f64,
    seed: u64,
) -> Result<Estimate, KineticError> {
    assert!(n_samples >= 1 && t_cap > 0.0);
    let tag = match sampler.kind() {
        GeneratorKind::Boltzmann => 0x626f_6c74u64,
        GeneratorKind::Landau => 0x6c61_6e64u64,
    };
    let results: Vec<Result<(Option<f64>, bool), KineticError>> = map_indexed(n_samples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, i as u64, tag]));
        let record = sampler.sample(x, theta, params, MAX_RENEWALS as f64 * t_cap, &mut rng)?;
        let renewed = record.kind == ExitKind::Censored || record.hitting_time > t_cap;
        Ok((record.boundary_value, renewed))
    });
    let mut values = Vec::with_capacity(n_samples);
    let mut renewed = Vec::with_capacity(n_samples);
    for r in results {
        let (v, re) = r?;
        values.push(v);
        renewed.push(re);
    }
    Ok(reduce_estimate(&values, &renewed))
}

/// Fraction of backward paths not exited by `t_horizon`, started from
/// `start_x1` (or uniform over the slab interior when `None`) with a
/// uniform angle. The measured value is the empirical contraction factor.
pub fn survival_fraction(
    sampler: &Sampler,
    params: &KineticParams,
    t_horizon: f64,
    n_samples: usize,
    start_x1: Option<f64>,
    seed: u64,
) -> Result<f64, KineticError> {
    assert!(n_samples >= 1000, "need at least 10^3 samples");
    if t_horizon <= 0.0 {
        return Ok(1.0);
    }
    let survived: Vec<Result<bool, KineticError>> = map_indexed(n_samples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, i as u64, 0x7375_7276]));
        let x1 = start_x1.unwrap_or_else(|| rng.gen::<f64>() * params.slab_width);
        let theta = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
        let record = sampler.sample([x1, 0.0], theta, params, t_horizon, &mut rng)?;
        Ok(record.kind == ExitKind::Censored)
    });
    let mut count = 0usize;
    for s in survived {
        count += s? as usize;
    }
    Ok(count as f64 / n_samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::QuarticBump;
    use crate::scattering::build_table;
    use approx::assert_abs_diff_eq;

    fn params() -> KineticParams {
        KineticParams {
            epsilon: 0.05,
            alpha: 0.1,
            lambda: 0.05,
            mu: 1.0,
            slab_width: 1.0,
            rho_left: 1.0,
            rho_right: 2.0,
        }
    }

    fn table() -> ScatteringTable {
        build_table(&QuarticBump::default(), 0.05, 0.1, 256).unwrap()
    }

    #[test]
    fn boltzmann_free_case_is_deterministic() {
        let p = KineticParams { mu: 0.0, ..params() };
        let t = table();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // v1 > 0: backward flight exits left with rho1
        let r = boltzmann_exit_sample([0.5, 0.0], 0.3, &p, &t, 100.0, &mut rng);
        assert_eq!(r.kind, ExitKind::ExitedLeft);
        assert_eq!(r.boundary_value, Some(1.0));
        assert_eq!(r.n_events, 0);
        assert_abs_diff_eq!(r.hitting_time, 0.5 / 0.3f64.cos(), epsilon = 1e-12);
        let r = boltzmann_exit_sample([0.5, 0.0], 3.0, &p, &t, 100.0, &mut rng);
        assert_eq!(r.kind, ExitKind::ExitedRight);
        assert_eq!(r.boundary_value, Some(2.0));
    }

    #[test]
    fn boltzmann_waiting_times_match_the_exponential_law() {
        // huge slab so no exit truncates the event count
        let p = KineticParams { slab_width: 1e6, ..params() };
        let t = table();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut total_time = 0.0;
        let mut events = 0usize;
        while events < 100_000 {
            let r = boltzmann_exit_sample([5e5, 0.0], 0.7, &p, &t, 1000.0, &mut rng);
            total_time += r.hitting_time;
            events += r.n_events;
        }
        let mean_wait = total_time / events as f64;
        let expected = 1.0 / p.jump_rate();
        let sigma = expected / (events as f64).sqrt();
        assert!(
            (mean_wait - expected).abs() < 3.0 * sigma,
            "mean wait {mean_wait} vs {expected} (sigma {sigma})"
        );
    }

    #[test]
    fn landau_step_size_is_enforced() {
        let p = params();
        let gen = GeneratorSpec::landau(&p, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = landau_exit_sample([0.5, 0.0], 0.0, &p, &gen, 1.0, 10.0, &mut rng);
        assert!(err.is_err());
        let ok = landau_exit_sample([0.5, 0.0], 0.0, &p, &gen, gen.max_landau_dt(), 10.0, &mut rng);
        assert!(ok.is_ok());
    }

    #[test]
    fn landau_zero_step_limit_is_free_transport() {
        // vanishing diffusion: straight-line exit like the free case
        let p = params();
        let gen = GeneratorSpec::landau(&p, 1e-12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = landau_exit_sample([0.5, 0.0], 0.0, &p, &gen, 0.01, 10.0, &mut rng).unwrap();
        assert_eq!(r.kind, ExitKind::ExitedLeft);
        assert_abs_diff_eq!(r.hitting_time, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn landau_angular_variance_matches_brownian_motion() {
        let p = KineticParams { slab_width: 1e6, ..params() };
        let diffusion = 0.05;
        let gen = GeneratorSpec::landau(&p, diffusion).unwrap();
        let dt = gen.max_landau_dt();
        let horizon = 1.0;
        let n = 100_000;
        let finals: Vec<f64> = map_indexed(n, |i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[900, i as u64]));
            let r =
                landau_exit_sample([5e5, 0.0], 0.0, &p, &gen, dt, horizon, &mut rng).unwrap();
            assert_eq!(r.kind, ExitKind::Censored);
            r.exit_state.v[1].atan2(r.exit_state.v[0])
        });
        // all angles stay well inside (-pi, pi) at this variance, so the
        // atan2 reconstruction does not wrap
        let mean = finals.iter().sum::<f64>() / n as f64;
        let var = finals.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64;
        let expected = 2.0 * diffusion * p.time_scale() * horizon;
        // var of the sample variance of a Gaussian: 2 sigma^4 / (n-1)
        let sigma = (2.0 / (n as f64 - 1.0)).sqrt() * expected;
        assert!(
            (var - expected).abs() < 3.0 * sigma,
            "variance {var} vs {expected} (sigma {sigma})"
        );
    }

    #[test]
    fn equilibrium_estimates_are_exact_at_both_levels() {
        let p = KineticParams { rho_left: 1.3, rho_right: 1.3, ..params() };
        let t = table();
        let gen = GeneratorSpec::landau(&p, 0.5).unwrap();
        for sampler in [
            Sampler::Boltzmann(&t),
            Sampler::Landau { gen, dt: gen.max_landau_dt() },
        ] {
            let est =
                stationary_estimate_kinetic(&sampler, [0.5, 0.0], 0.7, &p, 200, 20.0, 5).unwrap();
            // every sample is exactly 1.3; the mean only differs from it by
            // accumulation rounding
            assert_abs_diff_eq!(est.mean, 1.3, epsilon = 1e-12);
            assert!(est.stderr < 1e-12);
        }
    }

    #[test]
    fn estimates_are_reproducible_and_respect_the_maximum_principle() {
        let p = params();
        let t = table();
        let sampler = Sampler::Boltzmann(&t);
        let a = stationary_estimate_kinetic(&sampler, [0.5, 0.0], 0.7, &p, 2000, 30.0, 9).unwrap();
        let b = stationary_estimate_kinetic(&sampler, [0.5, 0.0], 0.7, &p, 2000, 30.0, 9).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.stderr, b.stderr);
        assert!(a.mean >= 1.0 && a.mean <= 2.0);
        // x2 independence: same law at a shifted vertical position
        let c = stationary_estimate_kinetic(&sampler, [0.5, 7.5], 0.7, &p, 2000, 30.0, 10).unwrap();
        let sigma = (a.stderr * a.stderr + c.stderr * c.stderr).sqrt();
        assert!((a.mean - c.mean).abs() <= 3.0 * sigma);
    }

    #[test]
    fn slab_reflection_symmetry_in_distribution() {
        let p = params();
        let t = table();
        let sampler = Sampler::Boltzmann(&t);
        let a = stationary_estimate_kinetic(&sampler, [0.3, 0.0], 0.5, &p, 4000, 30.0, 21).unwrap();
        let swapped = KineticParams { rho_left: 2.0, rho_right: 1.0, ..p };
        let b = stationary_estimate_kinetic(
            &sampler,
            [0.7, 0.0],
            std::f64::consts::PI - 0.5,
            &swapped,
            4000,
            30.0,
            21,
        )
        .unwrap();
        // swapping the reservoirs and reflecting (x -> L - x, theta ->
        // pi - theta) composes two symmetries of the slab, so the two
        // estimates share the same law
        let sigma = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
        assert!(
            (a.mean - b.mean).abs() <= 3.0 * sigma,
            "{} vs {} (sigma {sigma})",
            a.mean,
            b.mean
        );
    }

    #[test]
    fn survival_fraction_limits() {
        let p = params();
        let t = table();
        let sampler = Sampler::Boltzmann(&t);
        assert_eq!(survival_fraction(&sampler, &p, 0.0, 1000, None, 1).unwrap(), 1.0);
        // free transport from mid-slab: the exit time is 0.5/|cos theta|,
        // so survival at horizon T is P(|cos theta| < 0.5/T) =
        // (2/pi) asin(0.5/T) for a uniform angle
        let free = KineticParams { mu: 0.0, ..p };
        let tf = build_table(&QuarticBump::default(), 0.05, 0.1, 64).unwrap();
        let s = Sampler::Boltzmann(&tf);
        let n = 1000usize;
        let horizon = 2.0 * free.slab_width;
        let surv = survival_fraction(&s, &free, horizon, n, Some(0.5), 2).unwrap();
        let expected = 2.0 / std::f64::consts::PI * (0.5 / horizon).asin();
        let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!(
            (surv - expected).abs() <= 3.0 * sigma,
            "survival {surv} vs {expected} (sigma {sigma})"
        );
    }

    #[test]
    fn survival_fraction_decreases_with_horizon() {
        let p = params();
        let gen = GeneratorSpec::landau(&p, 0.5).unwrap();
        let sampler = Sampler::Landau { gen, dt: gen.max_landau_dt() };
        let t0 = p.time_scale();
        let s1 = survival_fraction(&sampler, &p, t0, 4000, Some(0.5), 3).unwrap();
        let s2 = survival_fraction(&sampler, &p, 2.0 * t0, 4000, Some(0.5), 3).unwrap();
        assert!(s1 < 1.0);
        assert!(s2 < s1);
    }
}
