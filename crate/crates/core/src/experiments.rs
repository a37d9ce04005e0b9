//! Canonical experiment drivers.
//!
//! Each driver assembles the pieces from the model modules into one of the
//! reference experiments, returns a summary of the measured quantities next
//! to their analytic expectations, and exposes the raw time series as rows
//! ready for CSV rendering. The drivers are deterministic: identical
//! configuration (and seed, where one is used) reproduces bit-identical
//! artifacts.

use crate::blowup::{
    gas_matrix, mollifier, mollifier_sup, run_scalar_ensemble, simulate_gas, BlowupReport,
    GasProfile, GasRunConfig, NoDampingReport, ScalarRunConfig, TrajectoryPoint,
};
use crate::chars::{
    advance_ensemble, coupling_coeffs, eigen_frame, measure_diagnostics, CharEnsemble, HypSystem,
    GRADIENT_CEILING, RHO_FLOOR,
};
use crate::config::{ExperimentConfig, FluxKind};
use crate::energy::{
    boundary_constant, damping_residual, fit_decay_rate, select_coefficients, speed_bounds,
    total_energy, Coefficients, EstimateConstants, WeightFamily,
};
use crate::error::{Error, Result};
use crate::flux::{hyperbolic_speed, IdealGasEos, ScalarFlux};
use crate::linalg::{eigenvalues_desc, MatN, VecN};
use crate::profile::{
    integrate_profile, verify_profile, ProfileReport, WaveParams, WaveProfile,
};
use crate::sim::{init_state, run, RunStatus, RunThresholds, TwinGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

fn range_error(key: &str, value: f64, reason: &str) -> Error {
    Error::RangeError {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

// ---------------------------------------------------------------------------
// CSV rendering
// ---------------------------------------------------------------------------

/// Renders one CSV row with fixed 17-significant-digit scientific
/// formatting, so golden files are stable to the last ulp.
pub fn csv_row(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v:.16e}");
    }
    out
}

/// Writes a CSV file with the given header line and numeric rows, creating
/// parent directories as needed.
pub fn write_csv<I>(path: &Path, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut text = String::new();
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&csv_row(&row));
        text.push('\n');
    }
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    std::fs::write(path, text).map_err(io_err)
}

// ---------------------------------------------------------------------------
// Profile construction and the decay envelope sweep
// ---------------------------------------------------------------------------

fn scalar_flux(config: &ExperimentConfig) -> Result<ScalarFlux> {
    match config.flux_kind {
        FluxKind::Burgers => Ok(ScalarFlux::burgers()),
        FluxKind::Cubic => Ok(ScalarFlux::cubic_convex()),
        FluxKind::Polynomial => {
            // The admissible span covers the profile range plus the
            // perturbation band of every driver below.
            let span = 2.0 * config.u0.max(1.0);
            ScalarFlux::polynomial(config.flux_coeffs.clone(), -span, span)
        }
    }
}

/// Builds the travelling wave of the configured scalar model and re-derives
/// its consistency report.
pub fn profile_summary(config: &ExperimentConfig) -> Result<(WaveProfile, ProfileReport)> {
    let params = WaveParams::new(
        scalar_flux(config)?,
        config.k,
        config.q,
        config.u0,
        config.u_i,
    )?;
    let profile = integrate_profile(&params, config.extent, 1e-10)?;
    let report = verify_profile(&profile, 1e-6);
    Ok((profile, report))
}

/// Per-node rows `(x, ū, z̄, ū′)` of a constructed profile.
pub fn profile_rows(profile: &WaveProfile) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::with_capacity(profile.grid_x().len());
    for &x in profile.grid_x() {
        let derivs = profile.u_bar_derivs(x)?;
        rows.push(vec![x, profile.u_bar_at(x), profile.z_bar(x), derivs[0]]);
    }
    Ok(rows)
}

/// Fits the decay-envelope constant κ for each heat release in `qs`,
/// verifying the envelope inequality along the way; κ shrinks to zero with
/// the release, which is the quantitative content of the small-q regime.
pub fn decay_sweep(config: &ExperimentConfig, qs: &[f64]) -> Result<Vec<(f64, f64)>> {
    let mut rows = Vec::with_capacity(qs.len());
    for &q in qs {
        let params = WaveParams::new(scalar_flux(config)?, config.k, q, config.u0, config.u_i)?;
        let profile = integrate_profile(&params, config.extent, 1e-10)?;
        let report = verify_profile(&profile, 1e-6);
        if !report.envelope_ok {
            return Err(range_error(
                "decay.q",
                q,
                "profile derivatives escaped their exponential envelope",
            ));
        }
        rows.push((q, profile.kappa()));
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Perturbed shock-frame run with energy tracking
// ---------------------------------------------------------------------------

/// One recorded sample of a shock-frame stability run.
#[derive(Clone, Copy, Debug)]
pub struct MajdaRow {
    pub t: f64,
    pub psi: f64,
    pub psi_dot: f64,
    pub sup_v: f64,
    pub sup_vx: f64,
    pub sup_zeta: f64,
    /// Coefficient-weighted total of the twelve energy components.
    pub energy: f64,
}

/// Summary of a stability run: the fitted decay of the weighted energy and
/// of the phase-speed deviation, the amplitude envelope, and the damping
/// residual at the fitted envelope pair.
#[derive(Clone, Debug)]
pub struct MajdaSummary {
    pub status: RunStatus,
    /// Whether the damping-certificate coefficient selection is feasible at
    /// this release with the profile-derived constants. The certified
    /// region is far smaller than desk-scale releases (the boundary
    /// inequality needs κ(q) ≲ (ω/2C̃)², roughly q ≲ 1e-5 here), so this
    /// is usually false for the runs below; the measured decay does not
    /// depend on it.
    pub certified: bool,
    /// Fitted decay rate of the energy *norm* (half the log-slope of the
    /// quadratic total).
    pub theta_hat: f64,
    pub r2: f64,
    /// Fitted decay rate of |ψ′ − σ| past its interaction peak.
    pub psi_rate: f64,
    pub psi_r2: f64,
    /// Largest sup(|v|, |ζ|) over the run relative to the initial one.
    pub sup_ratio: f64,
    /// Smallest envelope constant making the damping inequality hold at the
    /// fitted rate over the post-transient window.
    pub c_fit: f64,
    /// Damping-inequality residual at (c_fit, theta_hat); nonpositive means
    /// the fitted envelope dominates the whole window.
    pub residual: f64,
    pub sigma: f64,
    pub wall_seconds: f64,
    pub rows: Vec<MajdaRow>,
}

/// Scans the flux curvature over the state range the estimates certify.
fn flux_curvature_bound(flux: &ScalarFlux, lo: f64, hi: f64) -> Result<f64> {
    let mut sup = 0.0f64;
    for j in 0..=64 {
        let u = lo + (hi - lo) * j as f64 / 64.0;
        sup = sup.max(flux.eval(u, 2)?.abs());
    }
    Ok(sup.max(1e-12))
}

/// Smooth bump of the given amplitude supported exactly on `[lo, hi]`.
fn support_bump(amp: f64, lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
    let center = 0.5 * (lo + hi);
    let width = hi - lo;
    let scale = amp / mollifier_sup();
    move |x: f64| scale * mollifier((x - center) / width)
}

/// Runs the perturbed shock-frame system with a small velocity bump behind
/// the shock, tracking the weighted energy at the configured cadence, and
/// fits the decay of both the energy and the phase-speed deviation.
pub fn majda_run(config: &ExperimentConfig) -> Result<MajdaSummary> {
    let start = Instant::now();
    if !(config.bump_hi < 0.0) {
        return Err(range_error(
            "bump.hi",
            config.bump_hi,
            "the stability bump must sit strictly behind the shock",
        ));
    }
    let (profile, _) = profile_summary(config)?;
    let sigma = profile.sigma();

    // Attempt the damping certificate with constants derived from the
    // profile itself; feasibility is recorded but never gates the run.
    // The energy that is actually measured is the plain H²_ε norm (unit
    // coefficient tuple, uncorrected weights), which is equivalent to any
    // certified composite, so the fitted rate is norm-independent.
    let eta = 0.25;
    let (mu, nu) = speed_bounds(&profile, eta)?;
    let c_tilde = boundary_constant(&profile, eta)?;
    let flux = scalar_flux(config)?;
    let c_f = flux_curvature_bound(&flux, -2.0 * eta, config.u0 + 2.0 * eta)?;
    let certified = EstimateConstants::new(
        mu,
        nu,
        config.k,
        config.q,
        eta,
        c_f,
        c_tilde,
        profile.kappa(),
    )
    .and_then(|constants| select_coefficients(&constants, config.q).map(|_| ()))
    .is_ok();
    let coeffs = Coefficients::unit();
    let family = WeightFamily::new(config.epsilon, config.energy_c)?;

    // Ahead of the shock everything drifts back toward it, so the forward
    // extent only needs modest slack.
    let extent_minus = config.extent_minus.unwrap_or(config.extent);
    let extent_plus = config
        .extent_plus
        .unwrap_or((0.4 * config.extent).max(5.0));
    let grid = TwinGrid::new(config.h, extent_minus, extent_plus)?;
    let v0 = support_bump(config.bump_amp, config.bump_lo, config.bump_hi);
    let mut state = init_state(&profile, v0, |_| 0.0, grid, 0.5)?;
    state.set_cfl(config.cfl)?;
    let thresholds = RunThresholds {
        rho: config.rho,
        grad_threshold: config.grad_threshold,
    };

    let initial_sup = state.sup_amplitude().max(1e-300);
    let mut rows: Vec<MajdaRow> = Vec::new();
    let mut record = |state: &crate::sim::PerturbationState, energy: f64| {
        let sup = |field: &[f64]| field.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        rows.push(MajdaRow {
            t: state.t(),
            psi: state.psi(),
            psi_dot: state.psi_dot(),
            sup_v: sup(state.v_minus()).max(sup(state.v_plus())),
            sup_vx: state.sup_v_gradient(),
            sup_zeta: sup(state.zeta_minus()).max(sup(state.zeta_plus())),
            energy,
        });
    };
    let energy_of = |state: &crate::sim::PerturbationState| -> Result<f64> {
        Ok(total_energy(state, &coeffs, &family)?.total)
    };
    record(&state, energy_of(&state)?);

    let mut status = RunStatus::Completed;
    let mut t_next = config.output_interval;
    while state.t() < config.t_max {
        let chunk = run(
            &mut state,
            t_next.min(config.t_max),
            &thresholds,
            config.output_interval,
        )?;
        record(&state, energy_of(&state)?);
        if chunk.status != RunStatus::Completed {
            status = chunk.status;
            break;
        }
        t_next += config.output_interval;
    }

    // Energy decay fit (quadratic functional: halve the rate for the norm).
    // The quadratic energy bottoms out around 13 decades below its initial
    // value, where difference stencils amplify roundoff dust near the
    // trace; samples under that floor measure the scheme, not the decay,
    // and are excluded from the fit.
    let energy_floor = rows[0].energy.max(f64::MIN_POSITIVE) * 1e-13;
    let energy_series: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.t, r.energy))
        .filter(|p| p.1 > energy_floor)
        .collect();
    // The interaction transient ends only once the bump has drained
    // through the shock, so the post-transient boundary is data-dependent:
    // scan tail windows (starting past the configured transient fraction,
    // keeping at least the final 30% of the above-floor series and never
    // fewer than 8 samples) and keep the best log-linear fit.
    let min_tail = (energy_series.len() * 3 / 10).max(8).min(energy_series.len());
    let last_start = energy_series.len().saturating_sub(min_tail);
    let first_start =
        (((energy_series.len() as f64) * config.transient_fraction).floor() as usize)
            .min(last_start);
    let mut rate_total = f64::NAN;
    let mut r2 = f64::NEG_INFINITY;
    let mut fit_start = 0usize;
    for start in first_start..=last_start {
        let (rate, quality) = fit_decay_rate(&energy_series[start..], 0.0)?;
        if quality > r2 {
            rate_total = rate;
            r2 = quality;
            fit_start = start;
        }
    }
    let theta_hat = 0.5 * rate_total;

    // Phase-speed deviation decay past the interaction peak.
    let dev: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, (r.psi_dot - sigma).abs())).collect();
    let peak = dev
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let tail: Vec<(f64, f64)> = dev[peak..].iter().copied().filter(|p| p.1 > 0.0).collect();
    let (psi_rate, psi_r2) = if tail.len() >= 8 {
        fit_decay_rate(&tail, 0.1)?
    } else {
        (f64::NAN, f64::NAN)
    };

    let sup_ratio = rows
        .iter()
        .map(|r| r.sup_v.max(r.sup_zeta))
        .fold(0.0f64, f64::max)
        / initial_sup;

    // Envelope fit: smallest C making N(t) ≤ C e^{−θ̂(t−t₀)} N(t₀) on the
    // post-transient window, then the residual at that pair (the window
    // is exactly the decay fit's).
    let idx0 = fit_start.min(energy_series.len().saturating_sub(2));
    let window: Vec<(f64, f64, f64)> = energy_series[idx0..]
        .iter()
        .map(|&(t, e)| (t, e.max(0.0).sqrt(), 0.0))
        .collect();
    let (t0, n0, _) = window[0];
    let mut c_fit = 1.0f64;
    for &(t, n, _) in &window {
        if n0 > 0.0 {
            c_fit = c_fit.max(n * (theta_hat * (t - t0)).exp() / n0);
        }
    }
    let residual = damping_residual(&window, c_fit * (1.0 + 1e-9), theta_hat);

    Ok(MajdaSummary {
        status,
        certified,
        theta_hat,
        r2,
        psi_rate,
        psi_r2,
        sup_ratio,
        c_fit,
        residual,
        sigma,
        wall_seconds: start.elapsed().as_secs_f64(),
        rows,
    })
}

// ---------------------------------------------------------------------------
// Negative-speed instability
// ---------------------------------------------------------------------------

/// Summary of the leftward-wave run with a reactant bump ahead of the
/// shock: the bump is transported rigidly away from the shock, so the
/// `e^{2αx}`-weighted norm grows at exactly α|σ|.
#[derive(Clone, Debug)]
pub struct NegativeSpeedSummary {
    pub sigma: f64,
    /// Weight rate α of the measured norm (∫ ζ² e^{2αx})^{1/2}.
    pub alpha: f64,
    /// Fitted growth rate of the weighted norm over the early window.
    pub growth_rate: f64,
    pub r2: f64,
    /// Analytic rate α|σ| of rigid transport.
    pub expected_rate: f64,
    /// Damping residual at the most favorable pair (C = 10³, ϑ = 0.01);
    /// positive here implies positivity for every C ≤ 10³ and ϑ ≥ 0.01,
    /// since the envelope side is monotone in both parameters.
    pub worst_residual: f64,
    /// Rows `(t, weighted_norm, sup_zeta)`.
    pub rows: Vec<(f64, f64, f64)>,
}

/// Runs the negative-speed configuration: a non-reacting constant wave
/// moving left with a reactant bump ahead of the shock.
///
/// The built-in flux kinds have positive wave speed for positive end
/// states, so unless a polynomial flux is configured the canonical
/// leftward model f(u) = −u + u²/2 is used.
///
/// Orientation note: the stability machinery weights both sides so that
/// perturbations decay toward the far fields, while the growth mechanism
/// here rides *up* the forward weight; the measured norm therefore uses the
/// weight `e^{2αx}` increasing in the transport direction, and the reported
/// rate refers to that orientation. With the opposite orientation the same
/// trajectory is a decay at α|σ|, which is the mirror statement.
pub fn negative_speed_run(config: &ExperimentConfig) -> Result<NegativeSpeedSummary> {
    let flux = match config.flux_kind {
        FluxKind::Polynomial => scalar_flux(config)?,
        _ => ScalarFlux::polynomial(vec![0.0, -1.0, 0.5], -2.0, 2.0)?,
    };
    let profile = WaveProfile::constant_wave(flux, config.k, config.u0, config.u_i)?;
    let sigma = profile.sigma();
    if !(sigma < 0.0) {
        return Err(range_error(
            "negative_speed.sigma",
            sigma,
            "the configuration must produce a leftward wave",
        ));
    }
    if !(config.bump_lo >= 0.5) {
        return Err(range_error(
            "bump.lo",
            config.bump_lo,
            "the reactant bump must sit ahead of the shock (lo >= 0.5)",
        ));
    }
    let alpha = config.epsilon;

    let extent_minus = config.extent_minus.unwrap_or(4.0);
    let extent_plus = config.extent_plus.unwrap_or(config.extent);
    let grid = TwinGrid::new(config.h, extent_minus, extent_plus)?;
    let zeta0 = support_bump(config.bump_amp, config.bump_lo, config.bump_hi);
    let mut state = init_state(&profile, |_| 0.0, zeta0, grid, 0.4)?;
    state.set_cfl(config.cfl)?;
    let thresholds = RunThresholds {
        rho: config.rho,
        grad_threshold: config.grad_threshold,
    };

    let weighted_norm = |state: &crate::sim::PerturbationState| -> f64 {
        let g = state.grid();
        let mut acc = 0.0f64;
        for (j, &z) in state.zeta_minus().iter().enumerate() {
            acc += z * z * (2.0 * alpha * g.x_minus(j)).exp();
        }
        for (j, &z) in state.zeta_plus().iter().enumerate() {
            acc += z * z * (2.0 * alpha * g.x_plus(j)).exp();
        }
        (acc * g.h()).sqrt()
    };

    let sup = |field: &[f64]| field.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let mut rows: Vec<(f64, f64, f64)> = vec![(
        0.0,
        weighted_norm(&state),
        sup(state.zeta_minus()).max(sup(state.zeta_plus())),
    )];
    let mut t_next = config.output_interval;
    while state.t() < config.t_max {
        let chunk = run(
            &mut state,
            t_next.min(config.t_max),
            &thresholds,
            config.output_interval,
        )?;
        rows.push((
            state.t(),
            weighted_norm(&state),
            sup(state.zeta_minus()).max(sup(state.zeta_plus())),
        ));
        if chunk.status != RunStatus::Completed {
            break;
        }
        t_next += config.output_interval;
    }

    // The rate is fitted on the early window, before the bump nears the
    // truncation boundary.
    let fit_end = 5.0f64.min(config.t_max);
    let window: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.0 <= fit_end && r.1 > 0.0)
        .map(|r| (r.0, r.1))
        .collect();
    let (neg_rate, r2) = fit_decay_rate(&window, 0.0)?;
    let growth_rate = -neg_rate;

    let residual_series: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.0, r.1, 0.0)).collect();
    let worst_residual = damping_residual(&residual_series, 1e3, 0.01);

    Ok(NegativeSpeedSummary {
        sigma,
        alpha,
        growth_rate,
        r2,
        expected_rate: alpha * sigma.abs(),
        worst_residual,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Scalar catastrophe oracle
// ---------------------------------------------------------------------------

/// One slope-oracle run: the exact compression pole against both detectors.
#[derive(Clone, Copy, Debug)]
pub struct SlopeOracleRow {
    pub m: f64,
    /// Analytic pole 1/m.
    pub pole: f64,
    pub t_star: f64,
    pub t_grad: f64,
    pub t_rho: f64,
}

/// Runs the linear-compression field with slope −m for each m, recovering
/// the catastrophe time with both detectors.
pub fn slope_oracle(ms: &[f64], h: f64) -> Result<Vec<SlopeOracleRow>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(range_error("oracle.h", h, "step size must be positive"));
    }
    let mut rows = Vec::with_capacity(ms.len());
    for &m in ms {
        if !(m > 0.0 && m.is_finite()) {
            return Err(range_error("oracle.m", m, "compression slope must be positive"));
        }
        let system = HypSystem::without_source(
            1,
            Box::new(|_x, u: &VecN| {
                let mut a = MatN::zeros(1);
                a.set(0, 0, u.get(0));
                a
            }),
            1.0,
            1e12,
        )?;
        let field = move |x: f64, t: f64| -> (VecN, VecN) {
            let denom = 1.0 - m * t;
            (
                VecN::from_slice(&[-m * x / denom]),
                VecN::from_slice(&[-m / denom]),
            )
        };
        let run_config = ScalarRunConfig {
            dt_base: h,
            t_max: 2.0 / m,
            excursion: 1e9,
            n_seeds: 5,
            max_points: 400,
        };
        let outcome = run_scalar_ensemble(&system, -0.2, 0.2, &field, &run_config)?;
        let (t_grad, t_rho) = match (outcome.t_grad, outcome.t_rho) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(range_error(
                    "oracle.m",
                    m,
                    "both detectors must fire before the horizon",
                ))
            }
        };
        rows.push(SlopeOracleRow {
            m,
            pole: 1.0 / m,
            t_star: t_grad.min(t_rho),
            t_grad,
            t_rho,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Gas catastrophe sweep
// ---------------------------------------------------------------------------

/// Builds the reference steady gas wave with the equation-of-state constants
/// taken from the configuration; at the defaults this is exactly
/// [`GasProfile::standard`].
pub fn gas_profile(config: &ExperimentConfig) -> Result<GasProfile> {
    let eos = IdealGasEos::new(config.eos_gamma, config.eos_c_heat)?;
    let end_state = [1.0, 0.0, 25.0];
    let c_inf = eos.sound_speed(end_state[0], end_state[1], end_state[2])?;
    GasProfile::new(eos, end_state, [-0.15, 0.6, 3.0], 0.8, 0.5 * c_inf)
}

/// Outcome of one gas run inside a sweep.
#[derive(Clone, Debug)]
pub struct ZndOutcome {
    pub theta: f64,
    pub report: BlowupReport,
    /// Signed far-field self-interaction weight of the seeded family.
    pub gamma: f64,
    /// Largest reactant perturbation magnitude over the run.
    pub z_max: f64,
    pub forecast_upper: f64,
    pub wall_seconds: f64,
    pub points: Vec<TrajectoryPoint>,
}

/// Runs one windowed gas catastrophe per `theta`, fanning the runs out to
/// `workers` threads; the results are merged by sweep index, so the output
/// is identical for any worker count.
pub fn znd_sweep(
    profile: &GasProfile,
    base: &GasRunConfig,
    thetas: &[f64],
    workers: usize,
    grad_factor: f64,
    amp_factor: f64,
) -> Result<Vec<ZndOutcome>> {
    let run_one = |theta: f64| -> Result<ZndOutcome> {
        let start = Instant::now();
        let mut cfg = *base;
        cfg.theta = theta;
        let traj = simulate_gas(profile, &cfg)?;
        let report = traj.detect(grad_factor, amp_factor)?;
        let z_max = traj.points.iter().map(|p| p.z_sup).fold(0.0f64, f64::max);
        let forecast_upper = traj
            .forecast
            .as_ref()
            .map(|f| f.t_star_upper)
            .unwrap_or(f64::NAN);
        Ok(ZndOutcome {
            theta,
            report,
            gamma: traj.gamma,
            z_max,
            forecast_upper,
            wall_seconds: start.elapsed().as_secs_f64(),
            points: traj.points,
        })
    };

    let n_workers = workers.max(1).min(thetas.len().max(1));
    let mut slots: Vec<Option<Result<ZndOutcome>>> = Vec::new();
    slots.resize_with(thetas.len(), || None);
    if n_workers <= 1 {
        for (i, &theta) in thetas.iter().enumerate() {
            slots[i] = Some(run_one(theta));
        }
    } else {
        std::thread::scope(|scope| {
            let mut handles = Vec::with_capacity(n_workers);
            for w in 0..n_workers {
                let run_one = &run_one;
                handles.push(scope.spawn(move || {
                    let mut out = Vec::new();
                    let mut i = w;
                    while i < thetas.len() {
                        out.push((i, run_one(thetas[i])));
                        i += n_workers;
                    }
                    out
                }));
            }
            for handle in handles {
                for (i, result) in handle.join().expect("sweep worker panicked") {
                    slots[i] = Some(result);
                }
            }
        });
    }
    slots
        .into_iter()
        .map(|slot| slot.expect("every sweep index is covered"))
        .collect()
}

/// The spec rows of one gas trajectory: `t, sup_amp, sup_grad, min_rho,
/// forecast` (the forecast column repeats the run's upper bound).
pub fn blowup_rows(outcome: &ZndOutcome) -> Vec<Vec<f64>> {
    outcome
        .points
        .iter()
        .map(|p| vec![p.t, p.sup_amp, p.sup_grad, p.min_rho, outcome.forecast_upper])
        .collect()
}

// ---------------------------------------------------------------------------
// Characteristic diagnostics
// ---------------------------------------------------------------------------

/// Result of the characteristic diagnostic run: the randomized eigen audit
/// of the gas machinery plus the full diagnostic time series of an exact
/// linear-compression ensemble driven through its catastrophe.
#[derive(Clone, Debug)]
pub struct CharDiagSummary {
    pub audit: EigenAudit,
    /// First time the slope magnitude crossed the gradient ceiling.
    pub t_grad: Option<f64>,
    /// First time the compression factor crossed its floor.
    pub t_rho: Option<f64>,
    /// Analytic pole of the compression field.
    pub pole: f64,
    /// Rows `t, max_w_1, min_rho_1, S, J, V, U`.
    pub rows: Vec<Vec<f64>>,
}

/// Audits the eigen machinery at random gas states, then rides an exact
/// unit-compression field with a scalar ensemble, recording the running
/// diagnostics (region width S, line mass J, off-region slope V, state sup
/// U) together with each family's slope and density extremes.
pub fn char_diag(config: &ExperimentConfig) -> Result<CharDiagSummary> {
    let audit = eigen_audit(config.seed, 1000)?;

    let m = 1.0;
    let system = HypSystem::without_source(
        1,
        Box::new(|_x, u: &VecN| {
            let mut a = MatN::zeros(1);
            a.set(0, 0, u.get(0));
            a
        }),
        1.0,
        1e12,
    )?;
    let field = move |x: f64, t: f64| -> (VecN, VecN) {
        let denom = 1.0 - m * t;
        (
            VecN::from_slice(&[-m * x / denom]),
            VecN::from_slice(&[-m / denom]),
        )
    };
    let mut ensemble = CharEnsemble::new(&system, -0.2, 0.2, 7, &field)?;
    let dt_base = 1e-3_f64;
    let t_max = 2.0 / m;
    let mut rows = Vec::new();
    let mut t_grad: Option<f64> = None;
    let mut t_rho: Option<f64> = None;
    let mut record = |ens: &CharEnsemble| {
        let diag = measure_diagnostics(ens);
        rows.push(vec![
            ens.time(),
            ens.family_sup_slope(0),
            ens.family_min_density(0),
            diag.width,
            diag.line_mass,
            diag.v_outside,
            diag.u_sup,
        ]);
    };
    record(&ensemble);
    let mut step = 0usize;
    while ensemble.time() < t_max && (t_grad.is_none() || t_rho.is_none()) && step < 1_000_000 {
        // Shrink the step with the slope so the ensemble resolves the
        // crossings instead of jumping over the pole of the field.
        let w_sup = ensemble.family_sup_slope(0);
        let dt = dt_base
            .min(0.1 / (1.0 + w_sup))
            .min(t_max - ensemble.time());
        if !(dt > 0.0) {
            break;
        }
        match advance_ensemble(&system, &mut ensemble, &field, dt) {
            Ok(()) => {}
            Err(Error::BlownUp { .. }) => {}
            Err(e) => return Err(e),
        }
        step += 1;
        if t_grad.is_none() && ensemble.family_sup_slope(0) > GRADIENT_CEILING {
            t_grad = Some(ensemble.time());
        }
        if t_rho.is_none() && ensemble.family_min_density(0) < RHO_FLOOR {
            t_rho = Some(ensemble.time());
        }
        if step % 25 == 0 || t_grad.is_some() || t_rho.is_some() {
            record(&ensemble);
        }
    }
    Ok(CharDiagSummary {
        audit,
        t_grad,
        t_rho,
        pole: 1.0 / m,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Randomized eigen-machinery audit
// ---------------------------------------------------------------------------

/// Worst-case defects of the eigenframe machinery over random admissible
/// gas states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenAudit {
    pub states: usize,
    /// max |η_i ξ^j − δ_ij|.
    pub max_biorth: f64,
    /// max |γ_iii + c_iii|.
    pub max_gamma_defect: f64,
    /// max spectrum deviation from {+c, 0, −c} with c² = p·p_E − p_v.
    pub max_spectrum_defect: f64,
}

/// Probes the eigen machinery at `n_states` random admissible gas states
/// drawn from the given seed: biorthogonality of the frames, the
/// self-interaction identity γ_iii = −c_iii, and the closed-form acoustic
/// spectrum of the transport matrix.
pub fn eigen_audit(seed: u64, n_states: usize) -> Result<EigenAudit> {
    if n_states == 0 {
        return Err(range_error("audit.states", 0.0, "at least one state is required"));
    }
    let eos = IdealGasEos::new(0.4, 1.0)?;
    let system = HypSystem::new(
        3,
        Box::new(move |_x, u: &VecN| {
            gas_matrix(&eos, u).unwrap_or_else(|_| MatN::zeros(3))
        }),
        Box::new(|_x, _u: &VecN| MatN::zeros(3)),
        1.0,
        1e9,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut audit = EigenAudit {
        states: n_states,
        max_biorth: 0.0,
        max_gamma_defect: 0.0,
        max_spectrum_defect: 0.0,
    };
    for _ in 0..n_states {
        let v = 0.7 + 0.7 * rng.gen::<f64>();
        let u = -1.0 + 2.0 * rng.gen::<f64>();
        let e_int = 5.0 + 35.0 * rng.gen::<f64>();
        let state = VecN::from_slice(&[v, u, e_int + 0.5 * u * u]);

        let frame = eigen_frame(&system, 0.0, &state)?;
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                audit.max_biorth = audit
                    .max_biorth
                    .max((frame.eta(i).dot(&frame.xi(j)) - delta).abs());
            }
        }
        let coeffs = coupling_coeffs(&system, 0.0, &state, &frame)?;
        for i in 0..3 {
            audit.max_gamma_defect = audit
                .max_gamma_defect
                .max((coeffs.gamma(i, i, i) + coeffs.c(i, i, i)).abs());
        }
        let parts = eos.pressure_partials(state.get(0), state.get(1), state.get(2))?;
        let c = hyperbolic_speed(&parts)?;
        let lams = eigenvalues_desc(&gas_matrix(&eos, &state)?)?;
        let scale = c.max(1.0);
        audit.max_spectrum_defect = audit
            .max_spectrum_defect
            .max((lams.get(0) - c).abs() / scale)
            .max(lams.get(1).abs() / scale)
            .max((lams.get(2) + c).abs() / scale);
    }
    Ok(audit)
}

// ---------------------------------------------------------------------------
// Row renderers shared by the CLI and the acceptance suite
// ---------------------------------------------------------------------------

/// `t, psi, psi_dot, sup_v, sup_vx, sup_zeta, energy` rows.
pub fn majda_rows(summary: &MajdaSummary) -> Vec<Vec<f64>> {
    summary
        .rows
        .iter()
        .map(|r| vec![r.t, r.psi, r.psi_dot, r.sup_v, r.sup_vx, r.sup_zeta, r.energy])
        .collect()
}

/// `t, weighted_norm, sup_zeta` rows.
pub fn negative_speed_rows(summary: &NegativeSpeedSummary) -> Vec<Vec<f64>> {
    summary.rows.iter().map(|r| vec![r.0, r.1, r.2]).collect()
}

/// `n, amp, h2_norm, l2_max, t_excursion, t_star, hyperbola_r2` rows.
pub fn no_damping_rows(report: &NoDampingReport) -> Vec<Vec<f64>> {
    report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n as f64,
                r.amp,
                r.h2_norm,
                r.l2_max,
                r.t_excursion.unwrap_or(f64::NAN),
                r.t_star.unwrap_or(f64::NAN),
                r.hyperbola_r2,
            ]
        })
        .collect()
}

/// `m, pole, t_star, t_grad, t_rho` rows.
pub fn slope_oracle_rows(rows: &[SlopeOracleRow]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| vec![r.m, r.pole, r.t_star, r.t_grad, r.t_rho])
        .collect()
}
