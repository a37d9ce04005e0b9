//! Shock-attached evolution of perturbations around a traveling wave.
//!
//! The unknowns are the deviations v = u − ū and ζ = z − z̄ in the frame
//! x ↦ x − ψ(t), where the shock position ψ obeys the Rankine–Hugoniot
//! ODE ψ′ = (f(u(0⁻)) − f(u(0⁺)))/(u(0⁻) − u(0⁺)). Subtracting the steady
//! profile equations leaves, on each half-line,
//!
//!   v_t + ∂_x[ f(ū+v) − f(ū) − ψ′v ] = (ψ′−σ)ū′ + kq(φ(ū+v)(z̄+ζ) − φ(ū)z̄)
//!   ζ_t + ∂_x[ −ψ′ζ ]              = (ψ′−σ)z̄′ + k (φ(ū)z̄ − φ(ū+v)(z̄+ζ))
//!
//! with the ignition indicator φ(u) = 1 for u > u_i. Every term vanishes
//! identically at v = ζ = 0, so the unperturbed wave is an exact fixed
//! point of the discretization as well.
//!
//! Space is discretized on twin staggered half-grids with no node at the
//! shock; the advective parts use first-order upwind interface fluxes
//! (hence discrete mass changes only through boundary fluxes), time uses
//! Heun's method, and ζ crosses the shock through its trace continuity
//! ζ(0⁻) = ζ(0⁺): whichever side is downwind takes its shock-interface
//! upwind value from the other side's nearest node.

use crate::error::{Error, Result};
use crate::profile::WaveProfile;

/// Courant number bound enforced on every update.
pub const CFL_LIMIT: f64 = 0.4;

/// Uniform staggered grid on [−L₋, 0) ∪ (0, L₊]: nodes sit at cell centers
/// ±(j + 1/2)h, so the shock at x = 0 is a cell interface of both sides.
#[derive(Clone, Debug)]
pub struct TwinGrid {
    h: f64,
    n_minus: usize,
    n_plus: usize,
}

impl TwinGrid {
    /// Builds a grid with spacing h covering extents rounded to whole
    /// cells (at least two per side).
    pub fn new(h: f64, extent_minus: f64, extent_plus: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(range_error("sim.h", h, "grid spacing must be positive"));
        }
        if !(extent_minus > 0.0 && extent_minus.is_finite()) {
            return Err(range_error(
                "sim.extent_minus",
                extent_minus,
                "left extent must be positive",
            ));
        }
        if !(extent_plus > 0.0 && extent_plus.is_finite()) {
            return Err(range_error(
                "sim.extent_plus",
                extent_plus,
                "right extent must be positive",
            ));
        }
        let n_minus = (extent_minus / h).round().max(2.0) as usize;
        let n_plus = (extent_plus / h).round().max(2.0) as usize;
        Ok(TwinGrid {
            h,
            n_minus,
            n_plus,
        })
    }

    /// Grid spacing h.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of nodes behind the shock.
    pub fn n_minus(&self) -> usize {
        self.n_minus
    }

    /// Number of nodes ahead of the shock.
    pub fn n_plus(&self) -> usize {
        self.n_plus
    }

    /// Covered extent behind the shock (h · n₋ exactly).
    pub fn extent_minus(&self) -> f64 {
        self.h * self.n_minus as f64
    }

    /// Covered extent ahead of the shock (h · n₊ exactly).
    pub fn extent_plus(&self) -> f64 {
        self.h * self.n_plus as f64
    }

    /// Node abscissa −L₋ + (j + ½)h behind the shock, j = 0..n₋.
    pub fn x_minus(&self, j: usize) -> f64 {
        -self.extent_minus() + (j as f64 + 0.5) * self.h
    }

    /// Node abscissa (j + ½)h ahead of the shock, j = 0..n₊.
    pub fn x_plus(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h
    }
}

fn range_error(key: &str, value: f64, reason: &str) -> Error {
    Error::RangeError {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

/// Linear one-sided extrapolation of the two nodes nearest the shock to
/// the shock itself (nodes at distance h/2 and 3h/2).
fn shock_trace(nearest: f64, second: f64) -> f64 {
    1.5 * nearest - 0.5 * second
}

/// Field values extrapolated to the two sides of the shock.
#[derive(Clone, Copy, Debug, Default)]
pub struct Traces {
    /// v(0⁻)
    pub v_minus: f64,
    /// v(0⁺)
    pub v_plus: f64,
    /// ζ(0⁻)
    pub zeta_minus: f64,
    /// ζ(0⁺)
    pub zeta_plus: f64,
}

/// Perturbation fields on a twin grid, the shock position and speed, and
/// cached samples of the background wave.
#[derive(Clone, Debug)]
pub struct PerturbationState {
    grid: TwinGrid,
    profile: WaveProfile,
    v_minus: Vec<f64>,
    v_plus: Vec<f64>,
    zeta_minus: Vec<f64>,
    zeta_plus: Vec<f64>,
    psi: f64,
    psi_dot: f64,
    t: f64,
    // Courant factor of the adaptive step, at most CFL_LIMIT.
    cfl: f64,
    // Steady-wave samples, fixed for the lifetime of the state.
    ub_node: Vec<f64>,
    dub_node: Vec<f64>,
    zb_node: Vec<f64>,
    dzb_node: Vec<f64>,
    ub_iface: Vec<f64>,
}

/// Time derivatives of all evolved quantities (one Heun stage).
struct StageDerivative {
    dv_minus: Vec<f64>,
    dv_plus: Vec<f64>,
    dzeta_minus: Vec<f64>,
    dzeta_plus: Vec<f64>,
    dpsi: f64,
    max_wind: f64,
}

/// Outcome classification of a finished run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    /// Reached the time horizon with amplitudes and gradients in bounds.
    Completed,
    /// The sup-norm of (v, ζ) reached the amplitude radius ρ.
    AmplitudeExcursion,
    /// The discrete gradient of v reached its ceiling.
    GradientBlowup,
}

/// Stopping thresholds mirroring the continuation alternatives: amplitude
/// radius ρ and a gradient ceiling.
#[derive(Clone, Copy, Debug)]
pub struct RunThresholds {
    /// Amplitude radius: the run stops when sup(|v|, |ζ|) reaches it.
    pub rho: f64,
    /// Gradient ceiling for sup |v_x|.
    pub grad_threshold: f64,
}

/// One recorded sample of the observables.
#[derive(Clone, Copy, Debug)]
pub struct Observation {
    pub t: f64,
    pub psi: f64,
    pub psi_dot: f64,
    pub sup_v: f64,
    pub sup_vx: f64,
    pub sup_zeta: f64,
    pub trace_v_minus: f64,
    pub trace_v_plus: f64,
    pub trace_zeta_minus: f64,
    pub trace_zeta_plus: f64,
}

/// Result of [`run`]: why it stopped, when, and the recorded time series.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub t_end: f64,
    pub history: Vec<Observation>,
}

/// Shock-boundary consistency diagnostics; the ratios are the left-trace
/// squares divided by their right-trace dominating combinations, so a
/// trajectory-wide maximum is an empirical boundary-lemma constant.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryReport {
    /// |ζ(0⁻) − ζ(0⁺)|: zero in the continuum model.
    pub zeta_trace_mismatch: f64,
    /// |ψ′ − σ|² / (v(0⁻)² + v(0⁺)² + ε_machine).
    pub psi_speed_ratio: f64,
    /// ζ_x(0⁻)² / (ζ_x(0⁺)² + ζ(0⁺)² + v(0⁻)² + v(0⁺)² + ε_machine).
    pub zeta_x_ratio: f64,
    /// ζ_xx(0⁻)² over its dominating right-trace combination.
    pub zeta_xx_ratio: f64,
}

impl PerturbationState {
    /// Grid in use.
    pub fn grid(&self) -> &TwinGrid {
        &self.grid
    }

    /// Tightens the Courant factor of the adaptive step; [`CFL_LIMIT`] is
    /// both the default and the cap.
    pub fn set_cfl(&mut self, cfl: f64) -> Result<()> {
        if !(cfl > 0.0 && cfl <= CFL_LIMIT) {
            return Err(range_error(
                "sim.cfl",
                cfl,
                "Courant factor must be in (0, 0.4]",
            ));
        }
        self.cfl = cfl;
        Ok(())
    }

    /// Background wave.
    pub fn profile(&self) -> &WaveProfile {
        &self.profile
    }

    /// v samples behind the shock (ascending x).
    pub fn v_minus(&self) -> &[f64] {
        &self.v_minus
    }

    /// v samples ahead of the shock (ascending x).
    pub fn v_plus(&self) -> &[f64] {
        &self.v_plus
    }

    /// ζ samples behind the shock.
    pub fn zeta_minus(&self) -> &[f64] {
        &self.zeta_minus
    }

    /// ζ samples ahead of the shock.
    pub fn zeta_plus(&self) -> &[f64] {
        &self.zeta_plus
    }

    /// Current shock displacement ψ.
    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Current shock speed ψ′.
    pub fn psi_dot(&self) -> f64 {
        self.psi_dot
    }

    /// Current time.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Amplitude bound η = u0/4 of admissible perturbations.
    pub fn amplitude_bound(&self) -> f64 {
        0.25 * self.profile.params().u0()
    }

    /// Shock-side traces of both fields by linear extrapolation.
    pub fn traces(&self) -> Traces {
        let nm = self.v_minus.len();
        Traces {
            v_minus: shock_trace(self.v_minus[nm - 1], self.v_minus[nm - 2]),
            v_plus: shock_trace(self.v_plus[0], self.v_plus[1]),
            zeta_minus: shock_trace(self.zeta_minus[nm - 1], self.zeta_minus[nm - 2]),
            zeta_plus: shock_trace(self.zeta_plus[0], self.zeta_plus[1]),
        }
    }

    /// Overwrites the perturbation fields (lengths must match the grid),
    /// re-checking the amplitude bound and refreshing ψ′.
    pub fn set_fields(
        &mut self,
        v_minus: Vec<f64>,
        v_plus: Vec<f64>,
        zeta_minus: Vec<f64>,
        zeta_plus: Vec<f64>,
    ) -> Result<()> {
        assert_eq!(v_minus.len(), self.grid.n_minus());
        assert_eq!(zeta_minus.len(), self.grid.n_minus());
        assert_eq!(v_plus.len(), self.grid.n_plus());
        assert_eq!(zeta_plus.len(), self.grid.n_plus());
        let amp = sup_abs(&v_minus)
            .max(sup_abs(&v_plus))
            .max(sup_abs(&zeta_minus))
            .max(sup_abs(&zeta_plus));
        let bound = self.amplitude_bound();
        if amp > bound {
            return Err(Error::AmplitudeTooLarge { amp, bound });
        }
        self.v_minus = v_minus;
        self.v_plus = v_plus;
        self.zeta_minus = zeta_minus;
        self.zeta_plus = zeta_plus;
        self.psi_dot = rh_speed(self)?;
        Ok(())
    }

    /// Largest one-sided difference quotient |Δv/h| on either side.
    pub fn sup_v_gradient(&self) -> f64 {
        let g = |field: &[f64]| {
            field
                .windows(2)
                .map(|w| (w[1] - w[0]).abs() / self.grid.h)
                .fold(0.0f64, f64::max)
        };
        g(&self.v_minus).max(g(&self.v_plus))
    }

    /// Largest absolute field value across v and ζ.
    pub fn sup_amplitude(&self) -> f64 {
        sup_abs(&self.v_minus)
            .max(sup_abs(&self.v_plus))
            .max(sup_abs(&self.zeta_minus))
            .max(sup_abs(&self.zeta_plus))
    }

    fn observation(&self) -> Observation {
        let tr = self.traces();
        Observation {
            t: self.t,
            psi: self.psi,
            psi_dot: self.psi_dot,
            sup_v: sup_abs(&self.v_minus).max(sup_abs(&self.v_plus)),
            sup_vx: self.sup_v_gradient(),
            sup_zeta: sup_abs(&self.zeta_minus).max(sup_abs(&self.zeta_plus)),
            trace_v_minus: tr.v_minus,
            trace_v_plus: tr.v_plus,
            trace_zeta_minus: tr.zeta_minus,
            trace_zeta_plus: tr.zeta_plus,
        }
    }
}

fn sup_abs(field: &[f64]) -> f64 {
    field.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

/// Samples initial data onto a grid and validates it: both fields must
/// vanish within `support_gap` of the shock (at least one cell), and their
/// sup-norms must stay below the amplitude bound u0/4.
pub fn init_state(
    profile: &WaveProfile,
    v0: impl Fn(f64) -> f64,
    zeta0: impl Fn(f64) -> f64,
    grid: TwinGrid,
    support_gap: f64,
) -> Result<PerturbationState> {
    let gap = support_gap.max(grid.h());
    let sample = |f: &dyn Fn(f64) -> f64, xs: &[f64]| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(xs.len());
        for &x in xs {
            let value = f(x);
            if x.abs() < gap && value != 0.0 {
                return Err(Error::SupportTouchesShock { x, gap });
            }
            out.push(value);
        }
        Ok(out)
    };
    let xs_minus: Vec<f64> = (0..grid.n_minus()).map(|j| grid.x_minus(j)).collect();
    let xs_plus: Vec<f64> = (0..grid.n_plus()).map(|j| grid.x_plus(j)).collect();
    let v_minus = sample(&v0, &xs_minus)?;
    let v_plus = sample(&v0, &xs_plus)?;
    let zeta_minus = sample(&zeta0, &xs_minus)?;
    let zeta_plus = sample(&zeta0, &xs_plus)?;

    let mut ub_node = Vec::with_capacity(xs_minus.len());
    let mut dub_node = Vec::with_capacity(xs_minus.len());
    let mut zb_node = Vec::with_capacity(xs_minus.len());
    let mut dzb_node = Vec::with_capacity(xs_minus.len());
    for &x in &xs_minus {
        ub_node.push(profile.u_bar_at(x));
        dub_node.push(profile.u_bar_derivs(x)?[0]);
        zb_node.push(profile.z_bar(x));
        dzb_node.push(profile.z_bar_deriv(x, 1));
    }
    // Interface i sits at −L₋ + i·h; the shock-side interface carries the
    // left limit ū(0⁻) = u0, not the ahead state.
    let mut ub_iface: Vec<f64> = (0..grid.n_minus())
        .map(|i| profile.u_bar_at(-grid.extent_minus() + i as f64 * grid.h()))
        .collect();
    ub_iface.push(profile.params().u0());

    let mut state = PerturbationState {
        grid,
        profile: profile.clone(),
        v_minus,
        v_plus,
        zeta_minus,
        zeta_plus,
        psi: 0.0,
        psi_dot: 0.0,
        t: 0.0,
        cfl: CFL_LIMIT,
        ub_node,
        dub_node,
        zb_node,
        dzb_node,
        ub_iface,
    };
    let amp = state.sup_amplitude();
    let bound = state.amplitude_bound();
    if amp > bound {
        return Err(Error::AmplitudeTooLarge { amp, bound });
    }
    state.psi_dot = rh_speed(&state)?;
    Ok(state)
}

/// Rankine–Hugoniot speed of the perturbed jump,
/// ψ′ = (f(u0 + v(0⁻)) − f(v(0⁺)))/(u0 + v(0⁻) − v(0⁺)).
///
/// Errors with [`Error::DegenerateJump`] if the denominator falls below
/// u0/2 (unreachable while both fields respect the amplitude bound).
pub fn rh_speed(state: &PerturbationState) -> Result<f64> {
    let tr = state.traces();
    rh_speed_of_traces(state, tr.v_minus, tr.v_plus)
}

fn rh_speed_of_traces(state: &PerturbationState, v_left: f64, v_right: f64) -> Result<f64> {
    let u0 = state.profile.params().u0();
    let flux = state.profile.params().flux();
    let left = u0 + v_left;
    let right = v_right;
    let denominator = left - right;
    let floor = 0.5 * u0;
    if denominator.abs() < floor {
        return Err(Error::DegenerateJump { denominator, floor });
    }
    Ok((flux.eval(left, 0)? - flux.eval(right, 0)?) / denominator)
}

/// Ignition indicator φ: full burning above the threshold, none below.
fn ignition(u: f64, u_i: f64) -> f64 {
    if u > u_i {
        1.0
    } else {
        0.0
    }
}

/// Computes one stage derivative: conservative upwind advection plus the
/// exact perturbation sources, on both sides, and the phase speed.
fn stage_derivative(
    state: &PerturbationState,
    v_minus: &[f64],
    v_plus: &[f64],
    zeta_minus: &[f64],
    zeta_plus: &[f64],
) -> Result<StageDerivative> {
    let grid = &state.grid;
    let h = grid.h();
    let params = state.profile.params();
    let flux = params.flux();
    let (k, q, u_i, sigma) = (params.k(), params.q(), params.u_i(), state.profile.sigma());
    let nm = grid.n_minus();
    let np = grid.n_plus();

    let v_left_trace = shock_trace(v_minus[nm - 1], v_minus[nm - 2]);
    let v_right_trace = shock_trace(v_plus[0], v_plus[1]);
    let psi_dot = rh_speed_of_traces(state, v_left_trace, v_right_trace)?;
    let mut max_wind = psi_dot.abs();

    // v interface flux G(x, w) = f(ū(x) + w) − f(ū(x)) − ψ′·w, upwinded by
    // the sign of the interface wind f′(ū + w) − ψ′.
    let flux_side = |ub_iface: &dyn Fn(usize) -> f64,
                         v: &[f64]|
     -> Result<(Vec<f64>, f64)> {
        let n = v.len();
        let mut g = Vec::with_capacity(n + 1);
        let mut wind_max = 0.0f64;
        for i in 0..=n {
            // Zero-order ghosts at the outer boundary and (for the rare
            // wrong-way wind) at the shock.
            let left = if i == 0 { v[0] } else { v[i - 1] };
            let right = if i == n { v[n - 1] } else { v[i] };
            let ub = ub_iface(i);
            let wind = flux.eval(ub + 0.5 * (left + right), 1)? - psi_dot;
            wind_max = wind_max.max(wind.abs());
            let upwind = if wind >= 0.0 { left } else { right };
            g.push(flux.eval(ub + upwind, 0)? - flux.eval(ub, 0)? - psi_dot * upwind);
        }
        Ok((g, wind_max))
    };

    let (g_minus, wind_m) = flux_side(&|i| state.ub_iface[i], v_minus)?;
    let (g_plus, wind_p) = flux_side(&|_| 0.0, v_plus)?;
    max_wind = max_wind.max(wind_m).max(wind_p);

    let mut dv_minus = Vec::with_capacity(nm);
    for j in 0..nm {
        let advection = -(g_minus[j + 1] - g_minus[j]) / h;
        let u_loc = state.ub_node[j] + v_minus[j];
        let burn = ignition(u_loc, u_i) * (state.zb_node[j] + zeta_minus[j])
            - ignition(state.ub_node[j], u_i) * state.zb_node[j];
        dv_minus.push(advection + (psi_dot - sigma) * state.dub_node[j] + k * q * burn);
    }
    let mut dv_plus = Vec::with_capacity(np);
    for j in 0..np {
        let advection = -(g_plus[j + 1] - g_plus[j]) / h;
        let burn = ignition(v_plus[j], u_i) * (1.0 + zeta_plus[j]);
        dv_plus.push(advection + k * q * burn);
    }

    // ζ flux −ψ′ζ: pure transport at the shock speed; the downwind side's
    // shock interface takes the other side's nearest node (trace
    // continuity), outer boundaries use zero-order ghosts.
    let zeta_flux = |w: f64| -psi_dot * w;
    let upwind_zeta = |own_left: f64, own_right: f64| {
        // Wind of ζ_t + (−ψ′ζ)_x = S is −ψ′.
        if -psi_dot >= 0.0 {
            own_left
        } else {
            own_right
        }
    };
    let mut dzeta_minus = Vec::with_capacity(nm);
    for j in 0..nm {
        let left = upwind_zeta(
            if j == 0 { zeta_minus[0] } else { zeta_minus[j - 1] },
            zeta_minus[j],
        );
        let right_neighbor = if j + 1 == nm {
            zeta_plus[0]
        } else {
            zeta_minus[j + 1]
        };
        let right = upwind_zeta(zeta_minus[j], right_neighbor);
        let advection = -(zeta_flux(right) - zeta_flux(left)) / h;
        let u_loc = state.ub_node[j] + v_minus[j];
        let react = ignition(state.ub_node[j], u_i) * state.zb_node[j]
            - ignition(u_loc, u_i) * (state.zb_node[j] + zeta_minus[j]);
        dzeta_minus.push(advection + (psi_dot - sigma) * state.dzb_node[j] + k * react);
    }
    let mut dzeta_plus = Vec::with_capacity(np);
    for j in 0..np {
        let left_neighbor = if j == 0 {
            zeta_minus[nm - 1]
        } else {
            zeta_plus[j - 1]
        };
        let left = upwind_zeta(left_neighbor, zeta_plus[j]);
        let right = upwind_zeta(
            zeta_plus[j],
            if j + 1 == np { zeta_plus[np - 1] } else { zeta_plus[j + 1] },
        );
        let advection = -(zeta_flux(right) - zeta_flux(left)) / h;
        let react = -ignition(v_plus[j], u_i) * (1.0 + zeta_plus[j]);
        dzeta_plus.push(advection + k * react);
    }

    Ok(StageDerivative {
        dv_minus,
        dv_plus,
        dzeta_minus,
        dzeta_plus,
        dpsi: psi_dot,
        max_wind,
    })
}

/// Advances the state by dt with Heun's method (two-stage, second order).
///
/// Errors with [`Error::CflViolation`] when dt·max(wind)/h exceeds
/// [`CFL_LIMIT`] at the first stage.
pub fn step(state: &mut PerturbationState, dt: f64) -> Result<()> {
    let s1 = stage_derivative(
        state,
        &state.v_minus,
        &state.v_plus,
        &state.zeta_minus,
        &state.zeta_plus,
    )?;
    let number = s1.max_wind * dt / state.grid.h();
    // Tiny relative slack so a step sized exactly to the bound is not
    // rejected over the last rounding bit.
    if number > CFL_LIMIT * (1.0 + 1e-9) {
        return Err(Error::CflViolation {
            number,
            limit: CFL_LIMIT,
        });
    }

    let advance = |field: &[f64], d: &[f64]| -> Vec<f64> {
        field.iter().zip(d).map(|(&u, &du)| u + dt * du).collect()
    };
    let v_minus_1 = advance(&state.v_minus, &s1.dv_minus);
    let v_plus_1 = advance(&state.v_plus, &s1.dv_plus);
    let zeta_minus_1 = advance(&state.zeta_minus, &s1.dzeta_minus);
    let zeta_plus_1 = advance(&state.zeta_plus, &s1.dzeta_plus);

    let s2 = stage_derivative(state, &v_minus_1, &v_plus_1, &zeta_minus_1, &zeta_plus_1)?;

    let combine = |field: &mut [f64], d1: &[f64], d2: &[f64]| {
        for (j, u) in field.iter_mut().enumerate() {
            *u += 0.5 * dt * (d1[j] + d2[j]);
        }
    };
    combine(&mut state.v_minus, &s1.dv_minus, &s2.dv_minus);
    combine(&mut state.v_plus, &s1.dv_plus, &s2.dv_plus);
    combine(&mut state.zeta_minus, &s1.dzeta_minus, &s2.dzeta_minus);
    combine(&mut state.zeta_plus, &s1.dzeta_plus, &s2.dzeta_plus);
    state.psi += 0.5 * dt * (s1.dpsi + s2.dpsi);
    state.t += dt;
    state.psi_dot = rh_speed(state)?;
    Ok(())
}

/// Advances until the horizon or a continuation alternative fires:
/// amplitude reaching ρ, or the discrete v-gradient reaching its ceiling.
/// Observables are recorded at t = 0, every `output_interval`, and at the
/// final time. The time step tracks the Courant bound each step.
pub fn run(
    state: &mut PerturbationState,
    t_max: f64,
    thresholds: &RunThresholds,
    output_interval: f64,
) -> Result<RunOutcome> {
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(range_error("sim.t_max", t_max, "time horizon must be nonnegative"));
    }
    if !(output_interval > 0.0) {
        return Err(range_error(
            "sim.output_interval",
            output_interval,
            "output interval must be positive",
        ));
    }
    let mut history = vec![state.observation()];
    let mut status = RunStatus::Completed;
    let mut next_output = output_interval;
    while state.t < t_max {
        let s = stage_derivative(
            state,
            &state.v_minus,
            &state.v_plus,
            &state.zeta_minus,
            &state.zeta_plus,
        )?;
        let dt_cfl = state.cfl * state.grid.h() / s.max_wind.max(1e-300);
        let dt = dt_cfl.min(t_max - state.t).min(next_output - state.t).max(1e-14);
        step(state, dt)?;
        if state.sup_amplitude() >= thresholds.rho {
            status = RunStatus::AmplitudeExcursion;
            break;
        }
        if state.sup_v_gradient() >= thresholds.grad_threshold {
            status = RunStatus::GradientBlowup;
            break;
        }
        if state.t >= next_output - 1e-12 {
            history.push(state.observation());
            while next_output <= state.t + 1e-12 {
                next_output += output_interval;
            }
        }
    }
    let last_recorded = history.last().map(|o| o.t).unwrap_or(-1.0);
    if (state.t - last_recorded).abs() > 1e-12 || history.is_empty() {
        history.push(state.observation());
    }
    Ok(RunOutcome {
        status,
        t_end: state.t,
        history,
    })
}

/// One-sided derivative traces at the shock from the three nearest nodes:
/// second-order for the first derivative, first-order for the second.
fn derivative_traces(field: &[f64], h: f64, left_side: bool) -> (f64, f64) {
    let n = field.len();
    let (f1, f2, f3) = if left_side {
        (field[n - 1], field[n - 2], field[n - 3])
    } else {
        (field[0], field[1], field[2])
    };
    let first = (2.0 * f1 - 3.0 * f2 + f3) / h;
    let first = if left_side { first } else { -first };
    let second = (f1 - 2.0 * f2 + f3) / (h * h);
    (first, second)
}

/// Shock-boundary diagnostics: trace continuity of ζ, the phase-speed
/// deviation ratio, and the left-trace derivative bounds against their
/// right-trace dominating combinations.
pub fn boundary_diagnostics(state: &PerturbationState) -> BoundaryReport {
    let tr = state.traces();
    let h = state.grid.h();
    let sigma = state.profile.sigma();
    let tiny = f64::EPSILON;

    let (zx_minus, zxx_minus) = derivative_traces(&state.zeta_minus, h, true);
    let (zx_plus, _) = derivative_traces(&state.zeta_plus, h, false);
    let (vx_minus, _) = derivative_traces(&state.v_minus, h, true);
    let (vx_plus, _) = derivative_traces(&state.v_plus, h, false);

    let v_sq = tr.v_minus * tr.v_minus + tr.v_plus * tr.v_plus;
    let psi_speed_ratio = (state.psi_dot - sigma).powi(2) / (v_sq + tiny);
    let zeta_x_ratio =
        zx_minus * zx_minus / (zx_plus * zx_plus + tr.zeta_plus * tr.zeta_plus + v_sq + tiny);
    let zeta_xx_ratio = zxx_minus * zxx_minus
        / (v_sq
            + vx_minus * vx_minus
            + vx_plus * vx_plus
            + tr.zeta_plus * tr.zeta_plus
            + zx_plus * zx_plus
            + tiny);

    BoundaryReport {
        zeta_trace_mismatch: (tr.zeta_minus - tr.zeta_plus).abs(),
        psi_speed_ratio,
        zeta_x_ratio,
        zeta_xx_ratio,
    }
}
