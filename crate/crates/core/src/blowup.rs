//! Gradient-catastrophe laboratory for perturbations of a reactive gas wave.
//!
//! The laboratory has three layers. [`make_blowup_data`] places a
//! single-family mollifier bump of size `θ` far behind the shock, after
//! checking that the distance dominates the run horizon and that the
//! residual tail inhomogeneity is below the initial slope scale.
//! [`simulate_gas`] evolves the perturbation of the reduced three-field
//! (specific volume, velocity, total energy) wave in shock coordinates with
//! a conservative finite-volume scheme on a window that rides along the
//! seeded family, advancing a characteristic ensemble in lockstep; the
//! reactant channel is transported separately and must stay identically
//! zero. [`detect_blowup`] classifies a recorded trajectory by the
//! amplitude/gradient dichotomy and compares the observed catastrophe time
//! with the a-priori quadratic-comparison bound. [`no_damping_family`] runs
//! the shrinking scalar bump family whose uniform gradient excursion rules
//! out damping estimates.

use crate::chars::{
    advance_ensemble, eigen_frame, gamma_infinity, measure_diagnostics, riccati_forecast,
    CharEnsemble, EnsembleDiagnostics, HypSystem, RiccatiForecast, GENUINE_NONLINEARITY_FLOOR,
    GRADIENT_CEILING, RHO_FLOOR,
};
use crate::error::{BlowupTrigger, Error, Result};
use crate::flux::IdealGasEos;
use crate::linalg::{MatN, VecN};
use std::sync::OnceLock;

/// Courant number of the windowed finite-volume update.
const CFL_WINDOW: f64 = 0.45;

/// The characteristic ensemble advances once per this many field steps;
/// its Heun step stays second-order accurate while the per-step eigenframe
/// work is amortized.
const ENSEMBLE_STRIDE: usize = 2;

/// Minimum grid nodes across the unit bump width.
const MIN_NODES_PER_BUMP: f64 = 200.0;

/// Default gradient growth factor certifying a catastrophe.
pub const DEFAULT_GRAD_FACTOR: f64 = 1e3;

/// Default amplitude growth ceiling certifying boundedness.
pub const DEFAULT_AMP_FACTOR: f64 = 2.0;

fn range_error(key: &str, value: f64, reason: &str) -> Error {
    Error::RangeError {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Bump shape
// ---------------------------------------------------------------------------

/// Unnormalized mollifier `exp(-1/(1-(2s)²))` on `|s| < 1/2`.
fn raw_bump(s: f64) -> f64 {
    let r = 2.0 * s;
    let w = 1.0 - r * r;
    if w <= 0.0 {
        0.0
    } else {
        (-1.0 / w).exp()
    }
}

/// First `s`-derivative of [`raw_bump`].
fn raw_bump_d1(s: f64) -> f64 {
    let r = 2.0 * s;
    let w = 1.0 - r * r;
    if w <= 0.0 {
        return 0.0;
    }
    let g1 = -2.0 * r / (w * w);
    2.0 * (-1.0 / w).exp() * g1
}

/// Second `s`-derivative of [`raw_bump`].
fn raw_bump_d2(s: f64) -> f64 {
    let r = 2.0 * s;
    let w = 1.0 - r * r;
    if w <= 0.0 {
        return 0.0;
    }
    let g1 = -2.0 * r / (w * w);
    let g2 = -2.0 / (w * w) - 8.0 * r * r / (w * w * w);
    4.0 * (-1.0 / w).exp() * (g1 * g1 + g2)
}

/// Shape constants of the normalized bump, computed once.
struct BumpShape {
    /// `sup |ψ″|` of the raw bump: the normalization divisor.
    curvature_sup: f64,
    /// `sup |φ′|` after normalization.
    slope_sup: f64,
    /// `sup φ` after normalization.
    value_sup: f64,
    /// Discrete `H²` norm of the normalized bump.
    sobolev2: f64,
}

fn bump_shape() -> &'static BumpShape {
    static SHAPE: OnceLock<BumpShape> = OnceLock::new();
    SHAPE.get_or_init(|| {
        let n = 400_001usize;
        let mut curvature = 0.0f64;
        let mut slope = 0.0f64;
        for j in 0..n {
            let s = -0.5 + j as f64 / (n - 1) as f64;
            curvature = curvature.max(raw_bump_d2(s).abs());
            slope = slope.max(raw_bump_d1(s).abs());
        }
        // Simpson quadrature of φ² + φ′² + φ″² over the support.
        let m = 4096usize;
        let mut acc = 0.0;
        for j in 0..=m {
            let s = -0.5 + j as f64 / m as f64;
            let f2 = raw_bump(s).powi(2) + raw_bump_d1(s).powi(2) + raw_bump_d2(s).powi(2);
            let w = if j == 0 || j == m {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * f2;
        }
        acc *= (1.0 / m as f64) / 3.0;
        BumpShape {
            curvature_sup: curvature,
            slope_sup: slope / curvature,
            value_sup: (-1.0f64).exp() / curvature,
            sobolev2: acc.sqrt() / curvature,
        }
    })
}

/// Smooth compactly supported bump on `[-1/2, 1/2]` normalized so that
/// `‖φ″‖_∞ = 1`.
pub fn mollifier(s: f64) -> f64 {
    raw_bump(s) / bump_shape().curvature_sup
}

/// Derivative `φ′` of [`mollifier`].
pub fn mollifier_slope(s: f64) -> f64 {
    raw_bump_d1(s) / bump_shape().curvature_sup
}

/// Second derivative `φ″` of [`mollifier`]; its sup norm is one.
pub fn mollifier_curvature(s: f64) -> f64 {
    raw_bump_d2(s) / bump_shape().curvature_sup
}

/// `sup |φ′|` of the normalized bump: the slope scale `W₀/θ`.
pub fn mollifier_slope_sup() -> f64 {
    bump_shape().slope_sup
}

/// `sup φ` of the normalized bump: the amplitude scale per unit `θ`.
pub fn mollifier_sup() -> f64 {
    bump_shape().value_sup
}

/// `H²` norm of the normalized bump over its support.
pub fn mollifier_h2_norm() -> f64 {
    bump_shape().sobolev2
}

// ---------------------------------------------------------------------------
// Distance requirement and tail envelope
// ---------------------------------------------------------------------------

/// Required distance from the bump support to the shock:
/// `margin · max{1, T, |log s₀|, |log W₀|}`.
///
/// All arguments must be positive; `theta` scales the data but does not
/// enter the formula beyond its effect on `w0`.
pub fn distance_requirement(theta: f64, t_horizon: f64, s0: f64, w0: f64, margin: f64) -> Result<f64> {
    for (key, value) in [
        ("blowup.theta", theta),
        ("blowup.t_horizon", t_horizon),
        ("blowup.s0", s0),
        ("blowup.w0", w0),
        ("blowup.margin", margin),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(range_error(key, value, "distance inputs must be positive"));
        }
    }
    Ok(margin * 1.0f64.max(t_horizon).max(s0.ln().abs()).max(w0.ln().abs()))
}

/// Residual inhomogeneity seen by the seeded family over the run horizon:
/// the sup of `‖𝒜(x,0) − 𝒜_∞‖ + ‖G(x,0) − G_∞‖` over the strip the family-
/// `i` support sweeps during `[0, t_horizon]`.
pub fn tail_envelope(
    system: &HypSystem,
    family: usize,
    x0: f64,
    s0: f64,
    t_horizon: f64,
) -> Result<f64> {
    if family >= system.n() {
        return Err(range_error(
            "blowup.family",
            family as f64,
            "family index must be a valid characteristic index",
        ));
    }
    if !(s0 > 0.0 && t_horizon > 0.0 && x0.is_finite()) {
        return Err(range_error("blowup.s0", s0, "envelope inputs must be positive"));
    }
    let zero = VecN::zeros(system.n());
    let x_probe = -20.0 / system.decay_rate();
    let frame = eigen_frame(system, x_probe, &zero)?;
    let lam = frame.lambda(family);
    let half = 0.5 * s0;
    let lo = x0 - half + lam.min(0.0) * t_horizon;
    let mut hi = (x0 + half + lam.max(0.0) * t_horizon).min(0.0);
    if hi < lo {
        hi = lo;
    }
    let x_far = lo - 30.0 / system.decay_rate();
    let a_far = system.matrix(x_far, &zero);
    let g_far = system.source(x_far, &zero);
    let samples = 256usize;
    let mut sup = 0.0f64;
    for j in 0..=samples {
        let x = lo + (hi - lo) * j as f64 / samples as f64;
        let da = system.matrix(x, &zero).sub(&a_far).norm_inf();
        let dg = system.source(x, &zero).sub(&g_far).norm_inf();
        sup = sup.max(da + dg);
    }
    Ok(sup)
}

// ---------------------------------------------------------------------------
// Blowup data
// ---------------------------------------------------------------------------

/// Localized single-family data `û(x,0) = θ·φ(x−x₀)·ξ` riding a genuinely
/// nonlinear family far behind the shock.
#[derive(Clone, Copy, Debug)]
pub struct BlowupData {
    theta: f64,
    x0: f64,
    family: usize,
    direction: VecN,
    w0: f64,
    s0: f64,
    amp: f64,
}

impl BlowupData {
    /// Bump size.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Bump center.
    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// Seeded characteristic family.
    pub fn family(&self) -> usize {
        self.family
    }

    /// Far-field eigenvector the bump rides on.
    pub fn direction(&self) -> VecN {
        self.direction
    }

    /// Largest initial slope magnitude `W₀ = θ·sup|φ′|`.
    pub fn w0(&self) -> f64 {
        self.w0
    }

    /// Support width.
    pub fn s0(&self) -> f64 {
        self.s0
    }

    /// Initial amplitude `sup |û(·,0)|`.
    pub fn amp(&self) -> f64 {
        self.amp
    }

    /// The field and its spatial derivative at time zero.
    pub fn field(&self, x: f64) -> (VecN, VecN) {
        let s = x - self.x0;
        (
            self.direction.scale(self.theta * mollifier(s)),
            self.direction.scale(self.theta * mollifier_slope(s)),
        )
    }
}

/// Builds bump data of size `theta ≥ 0` centered at `x0 < 0` on the given
/// family, enforcing genuine nonlinearity, the distance requirement over
/// `t_horizon`, and the tail-envelope condition
/// `ℰ(d, T) ≤ min{1, s₀, W₀}` (unit far-field coupling constant).
pub fn make_blowup_data(
    system: &HypSystem,
    theta: f64,
    x0: f64,
    family: usize,
    margin: f64,
    t_horizon: f64,
) -> Result<BlowupData> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(range_error("blowup.theta", theta, "bump size must be nonnegative"));
    }
    if !(x0.is_finite() && x0 < 0.0) {
        return Err(range_error("blowup.x0", x0, "bump center must lie behind the shock"));
    }
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(range_error("blowup.margin", margin, "distance margin must be positive"));
    }
    if !(t_horizon > 0.0 && t_horizon.is_finite()) {
        return Err(range_error("blowup.t_horizon", t_horizon, "run horizon must be positive"));
    }
    let gamma = gamma_infinity(system, family)?;
    if !(gamma.abs() > GENUINE_NONLINEARITY_FLOOR) {
        return Err(Error::NonGenuinelyNonlinear {
            gamma,
            tolerance: GENUINE_NONLINEARITY_FLOOR,
        });
    }
    let s0 = 1.0;
    let w0 = theta * mollifier_slope_sup();
    let d = -x0 - 0.5 * s0;
    let required = if w0 > 0.0 {
        distance_requirement(theta, t_horizon, s0, w0, margin)?
    } else {
        margin * 1.0f64.max(t_horizon)
    };
    if d < required {
        return Err(Error::DistanceTooSmall { d, required });
    }
    let envelope = tail_envelope(system, family, x0, s0, t_horizon)?;
    let target = if w0 > 0.0 {
        1.0f64.min(s0).min(w0)
    } else {
        1.0f64.min(s0)
    };
    if envelope > target {
        // Report the distance at which the envelope clears the target.
        let mut dd = d.max(1.0);
        for _ in 0..60 {
            dd *= 1.25;
            let e = tail_envelope(system, family, -(dd + 0.5 * s0), s0, t_horizon)?;
            if e <= target {
                break;
            }
        }
        return Err(Error::DistanceTooSmall { d, required: dd });
    }
    let x_probe = -20.0 / system.decay_rate();
    let frame = eigen_frame(system, x_probe, &VecN::zeros(system.n()))?;
    let direction = frame.xi(family);
    Ok(BlowupData {
        theta,
        x0,
        family,
        direction,
        w0,
        s0,
        amp: theta * mollifier_sup() * direction.norm_inf(),
    })
}

// ---------------------------------------------------------------------------
// Gas wave profile and the reduced system
// ---------------------------------------------------------------------------

/// Smooth stand-in for a reactive gas wave in shock coordinates: an
/// exponential tail `Ū(x) = U_∞ + ΔU·e^{rate·x}` on `x ≤ 0` glued to a
/// constant plateau on `x > 0`, together with the frame speed `σ` and the
/// ignition threshold the temperature must clear.
#[derive(Clone, Copy, Debug)]
pub struct GasProfile {
    eos: IdealGasEos,
    end_state: [f64; 3],
    jump: [f64; 3],
    rate: f64,
    sigma: f64,
    t_ignition: f64,
}

impl GasProfile {
    /// Builds and validates a profile: every state along the tail must be
    /// physical and the frame speed subsonic relative to the far field.
    pub fn new(
        eos: IdealGasEos,
        end_state: [f64; 3],
        jump: [f64; 3],
        rate: f64,
        sigma: f64,
    ) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(range_error("blowup.rate", rate, "tail decay rate must be positive"));
        }
        // Physicality along the whole tail segment.
        let mut t_min = f64::INFINITY;
        for j in 0..=64 {
            let s = j as f64 / 64.0;
            let v = end_state[0] + jump[0] * s;
            let u = end_state[1] + jump[1] * s;
            let e = end_state[2] + jump[2] * s;
            eos.pressure_partials(v, u, e)?;
            t_min = t_min.min(eos.temperature(eos.internal_energy(u, e)));
        }
        let c_inf = eos.sound_speed(end_state[0], end_state[1], end_state[2])?;
        if !(sigma > 0.0 && sigma < c_inf) {
            return Err(range_error(
                "blowup.sigma",
                sigma,
                "frame speed must be positive and subsonic at the far field",
            ));
        }
        Ok(GasProfile {
            eos,
            end_state,
            jump,
            rate,
            sigma,
            // Two-fold temperature margin for the unperturbed wave.
            t_ignition: 0.5 * t_min,
        })
    }

    /// The reference laboratory wave: ideal-gas tail with Grüneisen
    /// constant 0.4 and a half-sonic frame speed.
    pub fn standard() -> Self {
        let eos = IdealGasEos::new(0.4, 1.0).expect("reference equation of state");
        let end_state = [1.0, 0.0, 25.0];
        let c_inf = eos
            .sound_speed(end_state[0], end_state[1], end_state[2])
            .expect("reference far-field state");
        GasProfile::new(eos, end_state, [-0.15, 0.6, 3.0], 0.8, 0.5 * c_inf)
            .expect("reference wave profile")
    }

    /// Equation of state.
    pub fn eos(&self) -> IdealGasEos {
        self.eos
    }

    /// Exponential localization rate of the tail.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Shock-frame speed.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Ignition temperature threshold.
    pub fn t_ignition(&self) -> f64 {
        self.t_ignition
    }

    /// Far-field state `(v, u, E)` at `x → −∞`.
    pub fn end_state(&self) -> VecN {
        VecN::from_slice(&self.end_state)
    }

    /// Far-field sound speed.
    pub fn sound_speed_inf(&self) -> f64 {
        self.eos
            .sound_speed(self.end_state[0], self.end_state[1], self.end_state[2])
            .expect("validated far-field state")
    }

    /// Wave state `Ū(x)`.
    pub fn state(&self, x: f64) -> VecN {
        let tail = (self.rate * x.min(0.0)).exp();
        VecN::from_slice(&[
            self.end_state[0] + self.jump[0] * tail,
            self.end_state[1] + self.jump[1] * tail,
            self.end_state[2] + self.jump[2] * tail,
        ])
    }

    /// Wave gradient `Ū_x(x)` (zero on the plateau).
    pub fn state_deriv(&self, x: f64) -> VecN {
        if x >= 0.0 {
            return VecN::zeros(3);
        }
        let tail = self.rate * (self.rate * x).exp();
        VecN::from_slice(&[self.jump[0] * tail, self.jump[1] * tail, self.jump[2] * tail])
    }

    /// Reactant fraction `z̄(x)` of the underlying wave.
    pub fn reactant(&self, x: f64) -> f64 {
        (self.rate * x.min(0.0)).exp()
    }

    /// Temperature of the unperturbed wave at `x`.
    pub fn temperature(&self, x: f64) -> f64 {
        let s = self.state(x);
        self.eos.temperature(self.eos.internal_energy(s.get(1), s.get(2)))
    }
}

/// Transport matrix of the three-field system in mass coordinates:
/// rows `(0, −1, 0)`, `(p_v, p_u, p_E)`, `(u·p_v, p + u·p_u, u·p_E)`.
///
/// Its spectrum is exactly `{−c, 0, c}` with `c² = p·p_E − p_v` at every
/// physical state, not just at velocity zero.
pub fn gas_matrix(eos: &IdealGasEos, state: &VecN) -> Result<MatN> {
    let parts = eos.pressure_partials(state.get(0), state.get(1), state.get(2))?;
    let u = state.get(1);
    Ok(MatN::from_rows(&[
        &[0.0, -1.0, 0.0],
        &[parts.p_v, parts.p_u, parts.p_e],
        &[u * parts.p_v, parts.p + u * parts.p_u, u * parts.p_e],
    ]))
}

/// Reduces the reactive wave to the three-field quasilinear system for the
/// perturbation in shock coordinates: transport matrix
/// `𝒜(x, û) = A(Ū(x) + û) − σI` and reaction matrix `G̃(x, û)` defined by
/// the increment identity `G̃(x, û)·û = [A(Ū+û) − A(Ū)]·Ū_x` (midpoint
/// directional derivative).
///
/// The reactant channel is eliminated: it is evolved separately by the
/// caller and must stay identically zero, which requires the temperature
/// guard `T > T_i` to hold along the tail within the amplitude radius
/// `delta` — violations are rejected here.
pub fn znd_reduce(profile: &GasProfile, delta: f64) -> Result<HypSystem> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(range_error("blowup.delta", delta, "amplitude radius must be positive"));
    }
    // The temperature guard and physicality must hold for every tail state
    // perturbed by up to `delta` in any single component.
    let eos = profile.eos();
    let span = 80.0 / profile.rate();
    for j in 0..=128 {
        let x = -span + span * j as f64 / 128.0 + 1.0_f64.min(span) * 0.0;
        let base = profile.state(x);
        for (dv, du, de) in [
            (0.0, 0.0, 0.0),
            (delta, 0.0, 0.0),
            (-delta, 0.0, 0.0),
            (0.0, delta, 0.0),
            (0.0, -delta, 0.0),
            (0.0, 0.0, delta),
            (0.0, 0.0, -delta),
        ] {
            let v = base.get(0) + dv;
            let u = base.get(1) + du;
            let e = base.get(2) + de;
            eos.pressure_partials(v, u, e)?;
            let temp = eos.temperature(eos.internal_energy(u, e));
            if temp <= profile.t_ignition() {
                return Err(Error::TemperatureGuardViolated {
                    x,
                    t: temp,
                    t_i: profile.t_ignition(),
                });
            }
        }
    }
    let prof = *profile;
    let sigma = profile.sigma();
    let matrix_fn = Box::new(move |x: f64, u: &VecN| {
        let state = prof.state(x).add(u);
        match gas_matrix(&prof.eos(), &state) {
            Ok(mut a) => {
                for i in 0..3 {
                    a.set(i, i, a.get(i, i) - sigma);
                }
                a
            }
            // A degenerate matrix: downstream spectral validation rejects it
            // instead of panicking inside the evaluator.
            Err(_) => MatN::zeros(3),
        }
    });
    let prof2 = *profile;
    let source_fn = Box::new(move |x: f64, u: &VecN| {
        let base = prof2.state(x);
        let du_bar = prof2.state_deriv(x);
        let mid = base.add(&u.scale(0.5));
        let step = 1e-6 * (1.0 + u.norm_inf());
        let mut g = MatN::zeros(3);
        for j in 0..3 {
            let mut up = mid;
            up.set(j, up.get(j) + step);
            let mut dn = mid;
            dn.set(j, dn.get(j) - step);
            if let (Ok(ap), Ok(an)) = (gas_matrix(&prof2.eos(), &up), gas_matrix(&prof2.eos(), &dn))
            {
                let col = ap.sub(&an).scale(1.0 / (2.0 * step)).mul_vec(&du_bar);
                for i in 0..3 {
                    g.set(i, j, col.get(i));
                }
            }
        }
        g
    });
    HypSystem::new(3, matrix_fn, source_fn, profile.rate(), delta)
}

// ---------------------------------------------------------------------------
// Windowed finite-volume run
// ---------------------------------------------------------------------------

/// Perturbation state on the travelling window: per-node `(v̂, û, Ê)` and
/// reactant perturbation `ẑ`, plus the underlying wave for totals.
#[derive(Clone, Debug)]
pub struct GasState {
    profile: GasProfile,
    origin: f64,
    h: f64,
    u_hat: Vec<VecN>,
    z_hat: Vec<f64>,
    t: f64,
}

impl GasState {
    /// Number of grid nodes.
    pub fn n_nodes(&self) -> usize {
        self.u_hat.len()
    }

    /// Grid spacing.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Current time.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Shock-frame position of node `j`.
    pub fn position(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.h
    }

    /// Perturbation `(v̂, û, Ê)` at node `j`.
    pub fn perturbation(&self, j: usize) -> VecN {
        self.u_hat[j]
    }

    /// Reactant perturbation `ẑ` at node `j`.
    pub fn reactant_hat(&self, j: usize) -> f64 {
        self.z_hat[j]
    }

    /// Total specific volume at node `j`.
    pub fn v_sp(&self, j: usize) -> f64 {
        self.profile.state(self.position(j)).get(0) + self.u_hat[j].get(0)
    }

    /// Total velocity at node `j`.
    pub fn u_vel(&self, j: usize) -> f64 {
        self.profile.state(self.position(j)).get(1) + self.u_hat[j].get(1)
    }

    /// Total energy at node `j`.
    pub fn e_tot(&self, j: usize) -> f64 {
        self.profile.state(self.position(j)).get(2) + self.u_hat[j].get(2)
    }

    /// Total reactant fraction at node `j`.
    pub fn z(&self, j: usize) -> f64 {
        self.profile.reactant(self.position(j)) + self.z_hat[j]
    }

    /// Temperature at node `j`.
    pub fn temperature(&self, j: usize) -> f64 {
        let eos = self.profile.eos();
        eos.temperature(eos.internal_energy(self.u_vel(j), self.e_tot(j)))
    }
}

/// Parameters of one windowed gas run.
#[derive(Clone, Copy, Debug)]
pub struct GasRunConfig {
    /// Bump size.
    pub theta: f64,
    /// Seeded characteristic family (descending-speed index).
    pub family: usize,
    /// Distance margin.
    pub margin: f64,
    /// Grid spacing; at least 200 nodes must span the unit bump width.
    pub h: f64,
    /// Half-width of the travelling window.
    pub window_halfwidth: f64,
    /// Characteristic seeds across the bump support.
    pub n_seeds: usize,
    /// Certified amplitude radius of the reduced system.
    pub delta: f64,
    /// Bump center override; the default places it at the required distance.
    pub x0: Option<f64>,
    /// Horizon override; the default is 1.05 × the forecast upper bound.
    pub t_max: Option<f64>,
    /// Recorded trajectory length target.
    pub max_points: usize,
    /// Optional reactant perturbation seed (alternating ±) for contraction
    /// experiments; zero keeps the channel identically zero.
    pub z_noise: f64,
}

impl Default for GasRunConfig {
    fn default() -> Self {
        GasRunConfig {
            theta: 0.1,
            family: 2,
            margin: 1.0,
            h: 5e-3,
            window_halfwidth: 2.5,
            n_seeds: 7,
            delta: 0.2,
            x0: None,
            t_max: None,
            max_points: 2000,
            z_noise: 0.0,
        }
    }
}

/// One recorded trajectory sample.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryPoint {
    pub t: f64,
    /// `sup |û|` over the window.
    pub sup_amp: f64,
    /// Largest slope magnitude of the seeded family (ensemble).
    pub sup_grad: f64,
    /// Smallest compression factor of the seeded family.
    pub min_rho: f64,
    /// Largest finite-difference gradient on the grid (corroboration only;
    /// it saturates near the catastrophe).
    pub sup_grid_grad: f64,
    /// `sup |ẑ|` over the window.
    pub z_sup: f64,
}

/// Result of a windowed gas run: the recorded series, the blowup flag, the
/// forecast, and the final field and ensemble states.
#[derive(Clone, Debug)]
pub struct GasTrajectory {
    pub points: Vec<TrajectoryPoint>,
    /// `(time, family, trigger)` of the first detector crossing, if any.
    pub blowup: Option<(f64, usize, BlowupTrigger)>,
    pub forecast: Option<RiccatiForecast>,
    pub data: BlowupData,
    /// Signed far-field self-interaction weight of the seeded family.
    pub gamma: f64,
    pub diagnostics: EnsembleDiagnostics,
    pub state: GasState,
    pub ensemble: CharEnsemble,
}

impl GasTrajectory {
    /// Classifies this run; see [`detect_blowup`].
    pub fn detect(&self, grad_factor: f64, amp_factor: f64) -> Result<BlowupReport> {
        detect_blowup(
            &self.points,
            self.blowup,
            self.forecast.as_ref().map(|f| f.t_star_upper),
            grad_factor,
            amp_factor,
        )
    }
}

/// Mass-coordinate flux `(−u, p, p·u)` and the acoustic speed at a state.
fn flux_and_speed(eos: &IdealGasEos, state: &VecN) -> Result<(VecN, f64)> {
    let parts = eos.pressure_partials(state.get(0), state.get(1), state.get(2))?;
    let u = state.get(1);
    let c = crate::flux::hyperbolic_speed(&parts)?;
    Ok((VecN::from_slice(&[-u, parts.p, parts.p * u]), c))
}

fn minmod(a: &VecN, b: &VecN) -> VecN {
    let mut out = VecN::zeros(a.len());
    for i in 0..a.len() {
        let (x, y) = (a.get(i), b.get(i));
        if x > 0.0 && y > 0.0 {
            out.set(i, x.min(y));
        } else if x < 0.0 && y < 0.0 {
            out.set(i, x.max(y));
        }
    }
    out
}

/// One conservative update right-hand side: limited reconstruction and a
/// local Lax-Friedrichs flux for the window-frame perturbation equation
/// `û_t + ∂_x[f(Ū+û) − f(Ū) − shift·û] = 0`.
fn fv_rhs(
    profile: &GasProfile,
    u: &[VecN],
    origin: f64,
    h: f64,
    shift: f64,
) -> Result<Vec<VecN>> {
    let n = u.len();
    let eos = profile.eos();
    let get = |j: isize| -> VecN { u[j.clamp(0, n as isize - 1) as usize] };
    // Limited slopes with copy ghosts (edge slopes vanish automatically).
    let slope_at = |j: isize| -> VecN {
        let um = get(j - 1);
        let uc = get(j);
        let up = get(j + 1);
        minmod(&uc.sub(&um), &up.sub(&uc))
    };
    let mut slopes = vec![VecN::zeros(3); n + 2];
    for (j, slot) in slopes.iter_mut().enumerate() {
        *slot = slope_at(j as isize - 1);
    }
    let mut rhs = vec![VecN::zeros(3); n];
    let mut left_flux = VecN::zeros(3);
    for i in 0..=n {
        let jl = i as isize - 1;
        let jr = i as isize;
        let ul = get(jl).add(&slopes[i].scale(0.5));
        let ur = get(jr).sub(&slopes[i + 1].scale(0.5));
        let x = origin + (i as f64 - 0.5) * h;
        let base = profile.state(x);
        let (f_base, _) = flux_and_speed(&eos, &base)?;
        let (f_l, c_l) = flux_and_speed(&eos, &base.add(&ul))?;
        let (f_r, c_r) = flux_and_speed(&eos, &base.add(&ur))?;
        let g_l = f_l.sub(&f_base).sub(&ul.scale(shift));
        let g_r = f_r.sub(&f_base).sub(&ur.scale(shift));
        let a = c_l.max(c_r) + shift.abs();
        let flux = g_l.add(&g_r).sub(&ur.sub(&ul).scale(a)).scale(0.5);
        if i > 0 {
            rhs[i - 1] = left_flux.sub(&flux).scale(1.0 / h);
        }
        left_flux = flux;
    }
    Ok(rhs)
}

/// Physicality and ignition guards over the committed state; returns the
/// largest acoustic speed for the step-size bound.
fn scan_state(profile: &GasProfile, u: &[VecN], origin: f64, h: f64) -> Result<f64> {
    let eos = profile.eos();
    let mut smax = 0.0f64;
    for (j, uh) in u.iter().enumerate() {
        let x = origin + j as f64 * h;
        let total = profile.state(x).add(uh);
        let c = eos.sound_speed(total.get(0), total.get(1), total.get(2))?;
        let temp = eos.temperature(eos.internal_energy(total.get(1), total.get(2)));
        if temp <= profile.t_ignition() {
            return Err(Error::TemperatureGuardViolated {
                x,
                t: temp,
                t_i: profile.t_ignition(),
            });
        }
        smax = smax.max(c);
    }
    Ok(smax)
}

/// Evolves the bump perturbation on a window riding the seeded family,
/// advancing the characteristic ensemble in lockstep with the field.
///
/// The run ends at the first ensemble detector crossing (recorded in the
/// returned trajectory's `blowup` field) or at the horizon. The reactant
/// channel is transported upwind with its decay factor and tracked in
/// `z_sup`; starting from zero it stays exactly zero.
pub fn simulate_gas(profile: &GasProfile, config: &GasRunConfig) -> Result<GasTrajectory> {
    let s0 = 1.0f64;
    if !(config.h > 0.0 && config.h <= s0 / MIN_NODES_PER_BUMP) {
        return Err(range_error(
            "blowup.h",
            config.h,
            "grid must resolve the bump with at least 200 nodes",
        ));
    }
    if !(config.window_halfwidth >= 1.0 && config.window_halfwidth.is_finite()) {
        return Err(range_error(
            "blowup.window",
            config.window_halfwidth,
            "window half-width must cover the unit bump",
        ));
    }
    if config.max_points < 2 {
        return Err(range_error(
            "blowup.max_points",
            config.max_points as f64,
            "at least two recorded points are required",
        ));
    }
    if !(config.z_noise >= 0.0 && config.z_noise.is_finite()) {
        return Err(range_error("blowup.z_noise", config.z_noise, "noise size must be nonnegative"));
    }
    let system = znd_reduce(profile, config.delta)?;
    let gamma = gamma_infinity(&system, config.family)?;
    let zero = VecN::zeros(3);
    let x_probe = -20.0 / system.decay_rate();
    let frame = eigen_frame(&system, x_probe, &zero)?;
    let s_w = frame.lambda(config.family);
    let w0 = config.theta * mollifier_slope_sup();

    // Horizon estimate for the distance check; refined below once the
    // ensemble's clearing time is known.
    let c_inf = profile.sound_speed_inf();
    let t_horizon_est = match config.t_max {
        Some(t) => {
            if !(t > 0.0 && t.is_finite()) {
                return Err(range_error("blowup.t_max", t, "horizon must be positive"));
            }
            t
        }
        None => {
            if w0 <= 0.0 {
                return Err(range_error(
                    "blowup.t_max",
                    0.0,
                    "a horizon is required when the data carries no slope",
                ));
            }
            let rough = riccati_forecast(gamma.abs(), w0, 2.0 * s0 / c_inf)?;
            1.05 * rough.t_star_upper
        }
    };
    let x0 = match config.x0 {
        Some(x) => x,
        None => {
            let required = if w0 > 0.0 {
                distance_requirement(config.theta, t_horizon_est, s0, w0, config.margin)?
            } else {
                config.margin * 1.0f64.max(t_horizon_est)
            };
            -(required + 0.5 * s0 + 1.0)
        }
    };
    let data = make_blowup_data(&system, config.theta, x0, config.family, config.margin, t_horizon_est)?;

    // Window grid in shock coordinates, centered on the bump at t = 0.
    let n = (2.0 * config.window_halfwidth / config.h).round() as usize;
    let h = config.h;
    let mut origin = x0 - config.window_halfwidth + 0.5 * h;
    let mut u: Vec<VecN> = (0..n).map(|j| data.field(origin + j as f64 * h).0).collect();
    let mut z: Vec<f64> = (0..n)
        .map(|j| if j % 2 == 0 { config.z_noise } else { -config.z_noise })
        .collect();
    let shift = profile.sigma() + s_w;
    let burn_rate = profile.rate() * profile.sigma();

    let init_field = |x: f64, _t: f64| data.field(x);
    let mut ens = CharEnsemble::new(&system, x0 - 0.5 * s0, x0 + 0.5 * s0, config.n_seeds, &init_field)?;
    let forecast = if w0 > 0.0 {
        Some(riccati_forecast(gamma.abs(), w0, ens.t0())?)
    } else {
        None
    };
    let t_end = match config.t_max {
        Some(t) => t,
        None => 1.05 * forecast.as_ref().expect("forecast exists when w0 > 0").t_star_upper,
    };

    let dt_est = CFL_WINDOW * h / (c_inf + shift.abs());
    let rec_stride = ((t_end / dt_est) as usize / config.max_points).max(1);

    let mut t = 0.0f64;
    let mut step = 0usize;
    let mut dt_acc = 0.0f64;
    let mut z_sup_run = 0.0f64;
    let mut blowup: Option<(f64, usize, BlowupTrigger)> = None;
    let mut slopes = vec![VecN::zeros(3); n];
    let mut points: Vec<TrajectoryPoint> = Vec::new();

    let record =
        |points: &mut Vec<TrajectoryPoint>, t: f64, u: &[VecN], ens: &CharEnsemble, z_sup: f64| {
            let mut sup_amp = 0.0f64;
            let mut sup_grid = 0.0f64;
            for j in 0..u.len() {
                sup_amp = sup_amp.max(u[j].norm_inf());
                if j + 1 < u.len() {
                    sup_grid = sup_grid.max(u[j + 1].sub(&u[j]).norm_inf() / h);
                }
            }
            points.push(TrajectoryPoint {
                t,
                sup_amp,
                sup_grad: ens.family_sup_slope(config.family),
                min_rho: ens.family_min_density(config.family),
                sup_grid_grad: sup_grid,
                z_sup,
            });
        };
    record(&mut points, t, &u, &ens, z_sup_run);

    while t < t_end && blowup.is_none() {
        let smax = scan_state(profile, &u, origin, h)?;
        let dt = (CFL_WINDOW * h / (smax + shift.abs())).min(t_end - t);
        if !(dt > 0.0) {
            break;
        }

        // Conservative two-stage update of the perturbation.
        let rhs0 = fv_rhs(profile, &u, origin, h, shift)?;
        let u1: Vec<VecN> = (0..n).map(|j| u[j].add(&rhs0[j].scale(dt))).collect();
        let rhs1 = fv_rhs(profile, &u1, origin, h, shift)?;
        for j in 0..n {
            u[j] = u[j].add(&u1[j]).add(&rhs1[j].scale(dt)).scale(0.5);
        }

        // Reactant perturbation: upwind transport at the window-frame speed
        // with the burn-rate contraction. Zero is an exact fixed point.
        let a_z = -shift;
        let decay = (-burn_rate * dt).exp();
        let courant = a_z * dt / h;
        if a_z >= 0.0 {
            for j in (1..n).rev() {
                z[j] = (z[j] - courant * (z[j] - z[j - 1])) * decay;
            }
            z[0] *= decay;
        } else {
            for j in 0..n - 1 {
                z[j] = (z[j] - courant * (z[j + 1] - z[j])) * decay;
            }
            z[n - 1] *= decay;
        }
        let mut z_sup = 0.0f64;
        for &zj in &z {
            z_sup = z_sup.max(zj.abs());
        }
        z_sup_run = z_sup_run.max(z_sup);

        t += dt;
        origin += s_w * dt;
        step += 1;
        dt_acc += dt;

        let flush = t >= t_end;
        if step % ENSEMBLE_STRIDE == 0 || flush {
            for j in 0..n {
                let up = u[(j + 1).min(n - 1)];
                let um = u[j.saturating_sub(1)];
                let span = ((j + 1).min(n - 1) - j.saturating_sub(1)) as f64;
                slopes[j] = if span > 0.0 {
                    up.sub(&um).scale(1.0 / (span * h))
                } else {
                    VecN::zeros(3)
                };
            }
            let provider = |x: f64, _t: f64| -> (VecN, VecN) {
                let pos = (x - origin) / h;
                if !(pos >= 1.0 && pos <= (n - 2) as f64) {
                    return (VecN::zeros(3), VecN::zeros(3));
                }
                let j = pos.floor() as usize;
                let fr = pos - j as f64;
                (
                    u[j].scale(1.0 - fr).add(&u[j + 1].scale(fr)),
                    slopes[j].scale(1.0 - fr).add(&slopes[j + 1].scale(fr)),
                )
            };
            match advance_ensemble(&system, &mut ens, &provider, dt_acc) {
                Ok(()) => {}
                Err(Error::BlownUp { family, time, trigger }) => {
                    blowup = Some((time, family, trigger));
                }
                Err(e) => return Err(e),
            }
            dt_acc = 0.0;
        }

        if step % rec_stride == 0 || blowup.is_some() || t >= t_end {
            record(&mut points, t, &u, &ens, z_sup_run);
        }
    }
    // Guard the final committed state.
    scan_state(profile, &u, origin, h)?;
    if points.last().map(|p| p.t) != Some(t) {
        record(&mut points, t, &u, &ens, z_sup_run);
    }

    let diagnostics = measure_diagnostics(&ens);
    Ok(GasTrajectory {
        points,
        blowup,
        forecast,
        data,
        gamma,
        diagnostics,
        state: GasState {
            profile: *profile,
            origin,
            h,
            u_hat: u,
            z_hat: z,
            t,
        },
        ensemble: ens,
    })
}

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

/// Outcome classification of a recorded run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Gradient catastrophe with bounded amplitude.
    Blowup,
    /// No certified catastrophe.
    NoBlowup,
}

/// Detection summary of one trajectory.
#[derive(Clone, Copy, Debug)]
pub struct BlowupReport {
    pub verdict: Verdict,
    /// First detector crossing time.
    pub t_star: Option<f64>,
    pub trigger: Option<BlowupTrigger>,
    /// Largest amplitude relative to the initial sample.
    pub amp_growth: f64,
    /// Largest gradient relative to the initial sample.
    pub grad_growth: f64,
    pub forecast_upper: Option<f64>,
    /// Whether the observed time respects the forecast bound.
    pub within_forecast: bool,
}

/// Classifies a recorded series: the verdict is `Blowup` exactly when the
/// flag fired, the gradient grew by at least `grad_factor`, and the
/// amplitude stayed within `amp_factor` of its initial value.
pub fn detect_blowup(
    points: &[TrajectoryPoint],
    blowup: Option<(f64, usize, BlowupTrigger)>,
    forecast_upper: Option<f64>,
    grad_factor: f64,
    amp_factor: f64,
) -> Result<BlowupReport> {
    if points.is_empty() {
        return Err(range_error("blowup.series", 0.0, "an empty trajectory cannot be classified"));
    }
    if !(grad_factor > 1.0 && grad_factor.is_finite()) {
        return Err(range_error("blowup.grad_factor", grad_factor, "growth factor must exceed one"));
    }
    if !(amp_factor >= 1.0 && amp_factor.is_finite()) {
        return Err(range_error("blowup.amp_factor", amp_factor, "amplitude ceiling must be at least one"));
    }
    let growth = |max: f64, init: f64| -> f64 {
        if init > 0.0 {
            max / init
        } else if max > 0.0 {
            f64::INFINITY
        } else {
            1.0
        }
    };
    let mut amp_max = 0.0f64;
    let mut grad_max = 0.0f64;
    for p in points {
        amp_max = amp_max.max(p.sup_amp);
        grad_max = grad_max.max(p.sup_grad);
    }
    let amp_growth = growth(amp_max, points[0].sup_amp);
    let grad_growth = growth(grad_max, points[0].sup_grad);
    let t_star = blowup.map(|b| b.0);
    let verdict = if blowup.is_some() && grad_growth >= grad_factor && amp_growth <= amp_factor {
        Verdict::Blowup
    } else {
        Verdict::NoBlowup
    };
    let within_forecast = match (t_star, forecast_upper) {
        (Some(ts), Some(fu)) => ts <= fu,
        _ => true,
    };
    Ok(BlowupReport {
        verdict,
        t_star,
        trigger: blowup.map(|b| b.2),
        amp_growth,
        grad_growth,
        forecast_upper,
        within_forecast,
    })
}

// ---------------------------------------------------------------------------
// Scalar ensemble runs
// ---------------------------------------------------------------------------

/// One recorded sample of a scalar ensemble run.
#[derive(Clone, Copy, Debug)]
pub struct ScalarPoint {
    pub t: f64,
    /// Largest slope magnitude.
    pub sup_grad: f64,
    /// Smallest compression factor.
    pub min_rho: f64,
    /// Largest field amplitude at the characteristic feet.
    pub sup_amp: f64,
    /// Transported `L²` mass `(∫ u₀² ρ dz)^{1/2}`.
    pub l2: f64,
}

/// Parameters of a scalar ensemble run.
#[derive(Clone, Copy, Debug)]
pub struct ScalarRunConfig {
    /// Base time step; near the catastrophe the step adapts to `0.1/sup|w|`.
    pub dt_base: f64,
    pub t_max: f64,
    /// Slope level whose first crossing is recorded as the excursion time.
    pub excursion: f64,
    pub n_seeds: usize,
    pub max_points: usize,
}

/// Result of a scalar ensemble run, including both detector crossing times.
#[derive(Clone, Debug)]
pub struct ScalarRun {
    pub points: Vec<ScalarPoint>,
    /// First time the slope magnitude crossed the gradient ceiling.
    pub t_grad: Option<f64>,
    /// First time the compression factor crossed its floor.
    pub t_rho: Option<f64>,
    /// Earlier of the two crossings.
    pub t_star: Option<f64>,
    pub trigger: Option<BlowupTrigger>,
    /// First time the slope magnitude reached the excursion level.
    pub t_excursion: Option<f64>,
    /// Largest transported `L²` mass over the run.
    pub l2_max: f64,
    /// Goodness of the straight-line fit of `1/sup|w|` against time.
    pub hyperbola_r2: f64,
}

/// Runs a scalar (one-field) characteristic ensemble with an adaptive step
/// until both blowup detectors have fired or the horizon is reached; the
/// state is observed through the detector crossings, so both times are
/// recovered even though the first crossing raises the flag.
pub fn run_scalar_ensemble<F>(
    system: &HypSystem,
    alpha0: f64,
    beta0: f64,
    field: &F,
    config: &ScalarRunConfig,
) -> Result<ScalarRun>
where
    F: Fn(f64, f64) -> (VecN, VecN),
{
    if system.n() != 1 {
        return Err(range_error(
            "blowup.scalar",
            system.n() as f64,
            "the adaptive driver handles one-field systems",
        ));
    }
    if !(config.dt_base > 0.0 && config.dt_base.is_finite()) {
        return Err(range_error("blowup.dt_base", config.dt_base, "base step must be positive"));
    }
    if !(config.t_max > 0.0 && config.t_max.is_finite()) {
        return Err(range_error("blowup.t_max", config.t_max, "horizon must be positive"));
    }
    if !(config.excursion > 0.0) {
        return Err(range_error("blowup.excursion", config.excursion, "excursion level must be positive"));
    }
    if config.max_points < 2 {
        return Err(range_error(
            "blowup.max_points",
            config.max_points as f64,
            "at least two recorded points are required",
        ));
    }
    let mut ens = CharEnsemble::new(system, alpha0, beta0, config.n_seeds, field)?;
    let nq = ens.seeds().len();
    let u0: Vec<f64> = ens.seeds().iter().map(|&zq| field(zq, 0.0).0.get(0)).collect();
    let dz = if nq > 1 {
        (beta0 - alpha0) / (nq - 1) as f64
    } else {
        0.0
    };

    let observe = |ens: &CharEnsemble, field: &F| -> ScalarPoint {
        let mut sup_amp = 0.0f64;
        let mut mass = 0.0f64;
        for q in 0..nq {
            sup_amp = sup_amp.max(field(ens.position(0, q), ens.time()).0.get(0).abs());
            let weight = if q == 0 || q == nq - 1 { 0.5 } else { 1.0 };
            mass += weight * u0[q] * u0[q] * ens.density(0, q) * dz;
        }
        ScalarPoint {
            t: ens.time(),
            sup_grad: ens.family_sup_slope(0),
            min_rho: ens.family_min_density(0),
            sup_amp,
            l2: mass.max(0.0).sqrt(),
        }
    };

    let stride = ((config.t_max / config.dt_base) as usize / config.max_points).max(1);
    let mut points = vec![observe(&ens, field)];
    let mut t_grad: Option<f64> = None;
    let mut t_rho: Option<f64> = None;
    let mut t_excursion: Option<f64> = None;
    let mut trigger: Option<BlowupTrigger> = None;
    let mut step = 0usize;
    let max_steps = 5_000_000usize;

    while ens.time() < config.t_max && (t_grad.is_none() || t_rho.is_none()) && step < max_steps {
        let w_sup = ens.family_sup_slope(0);
        let dt = config
            .dt_base
            .min(0.1 / (1.0 + w_sup))
            .min(config.t_max - ens.time());
        if !(dt > 0.0) {
            break;
        }
        match advance_ensemble(system, &mut ens, field, dt) {
            Ok(()) => {}
            Err(Error::BlownUp { trigger: tg, .. }) => {
                if trigger.is_none() {
                    trigger = Some(tg);
                }
            }
            Err(e) => return Err(e),
        }
        step += 1;
        let now = ens.time();
        if t_excursion.is_none() && ens.family_sup_slope(0) >= config.excursion {
            t_excursion = Some(now);
        }
        if t_grad.is_none() && ens.family_sup_slope(0) > GRADIENT_CEILING {
            t_grad = Some(now);
        }
        if t_rho.is_none() && ens.family_min_density(0) < RHO_FLOOR {
            t_rho = Some(now);
        }
        if step % stride == 0 || t_grad.is_some() || t_rho.is_some() {
            points.push(observe(&ens, field));
        }
    }

    let t_star = match (t_grad, t_rho) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (Some(a), None) => Some(a),
        (None, Some(b)) => Some(b),
        (None, None) => None,
    };
    let mut l2_max = 0.0f64;
    for p in &points {
        l2_max = l2_max.max(p.l2);
    }
    let fit_pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.sup_grad > 0.0)
        .map(|p| (p.t, 1.0 / p.sup_grad))
        .collect();
    let (_, _, hyperbola_r2) = linear_fit(&fit_pts);
    Ok(ScalarRun {
        points,
        t_grad,
        t_rho,
        t_star,
        trigger,
        t_excursion,
        l2_max,
        hyperbola_r2,
    })
}

/// Least-squares line through `(x, y)` points: `(slope, intercept, r²)`.
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (0.0, pts.first().map(|p| p.1).unwrap_or(0.0), 0.0);
    }
    let (mut sx, mut sy) = (0.0f64, 0.0f64);
    for &(x, y) in pts {
        sx += x;
        sy += y;
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0f64, 0.0f64, 0.0f64);
    for &(x, y) in pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

// ---------------------------------------------------------------------------
// The no-damping family
// ---------------------------------------------------------------------------

/// One member of the shrinking bump family.
#[derive(Clone, Copy, Debug)]
pub struct NoDampingRow {
    pub n: usize,
    /// Amplitude `a_n = base/(n+1)`.
    pub amp: f64,
    /// `H²` norm of the initial data, proportional to `a_n`.
    pub h2_norm: f64,
    /// Bump center, placed so the forward drift cone clears the shock.
    pub center: f64,
    /// Largest transported `L²` mass over the run.
    pub l2_max: f64,
    /// First time the slope magnitude reached the common excursion level.
    pub t_excursion: Option<f64>,
    /// Detector crossing time.
    pub t_star: Option<f64>,
    /// Goodness of the hyperbola fit `sup|w| ~ δ/(t_* − t)`.
    pub hyperbola_r2: f64,
}

/// Report of the whole family run.
#[derive(Clone, Debug)]
pub struct NoDampingReport {
    pub rows: Vec<NoDampingRow>,
    /// Far-field drift speed added to the scalar flux slope.
    pub drift: f64,
    /// Common slope excursion level every member must reach.
    pub excursion: f64,
}

/// Runs the shrinking/translated scalar bump family `v_n = a_n φ(x − x_n)`
/// with `a_n = amp_base/(n+1)` for `n = 1..=n_max` on the far-field scalar
/// model `u_t + ((drift + u) u)_x`-type transport, reporting for each
/// member the vanishing initial `H²` size, the bounded `L²` history, and
/// the uniform gradient excursion with its hyperbola fit.
///
/// The initial `H²` norms shrink like `1/(n+1)` while every member still
/// reaches the same excursion level before its catastrophe, so no estimate
/// `sup_t ‖w(t)‖ ≤ C‖w(0)‖ + ε` can hold along the family.
pub fn no_damping_family(
    n_max: usize,
    drift: f64,
    amp_base: f64,
    excursion: f64,
) -> Result<NoDampingReport> {
    if n_max < 1 {
        return Err(range_error("blowup.n_max", n_max as f64, "the family needs at least one member"));
    }
    if !(amp_base > 0.0 && amp_base.is_finite()) {
        return Err(range_error("blowup.amp_base", amp_base, "family amplitude must be positive"));
    }
    if !(excursion > 0.0 && excursion.is_finite()) {
        return Err(range_error("blowup.excursion", excursion, "excursion level must be positive"));
    }
    if !drift.is_finite() {
        return Err(range_error("blowup.drift", drift, "drift speed must be finite"));
    }
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let a_n = amp_base / (n as f64 + 1.0);
        let w0 = a_n * mollifier_slope_sup();
        let t_pole = 1.0 / w0;
        // Keep the forward drift cone clear of the shock at the origin.
        let reach = (drift.max(0.0) + a_n * mollifier_sup()) * 1.5 * t_pole + 1.0;
        let x_n = -1.0 - reach;
        let system = HypSystem::without_source(
            1,
            Box::new(move |_x, u: &VecN| {
                let mut m = MatN::zeros(1);
                m.set(0, 0, drift + u.get(0));
                m
            }),
            1.0,
            // A scalar problem stays strictly hyperbolic at any amplitude.
            1e12,
        )?;
        let field = moving_bump_field(a_n, x_n, drift);
        let config = ScalarRunConfig {
            dt_base: t_pole / 4000.0,
            t_max: 2.5 * t_pole,
            excursion,
            n_seeds: 9,
            max_points: 1500,
        };
        let run = run_scalar_ensemble(&system, x_n - 0.5, x_n + 0.5, &field, &config)?;
        rows.push(NoDampingRow {
            n,
            amp: a_n,
            h2_norm: a_n * mollifier_h2_norm(),
            center: x_n,
            l2_max: run.l2_max,
            t_excursion: run.t_excursion,
            t_star: run.t_star,
            hyperbola_r2: run.hyperbola_r2,
        });
    }
    Ok(NoDampingReport {
        rows,
        drift,
        excursion,
    })
}

/// Exact solution provider for scalar transport at speed `drift + u` with
/// initial bump `a·φ(x − x_n)`: the characteristic foot is found by a
/// safeguarded Newton iteration on the strictly increasing foot equation.
fn moving_bump_field(a: f64, x_n: f64, drift: f64) -> impl Fn(f64, f64) -> (VecN, VecN) {
    move |x: f64, t: f64| -> (VecN, VecN) {
        let u0 = |z: f64| a * mollifier(z - x_n);
        let du0 = |z: f64| a * mollifier_slope(z - x_n);
        if t <= 0.0 {
            return (
                VecN::from_slice(&[u0(x)]),
                VecN::from_slice(&[du0(x)]),
            );
        }
        let top = a * mollifier_sup();
        let mut lo = x - (drift + top.max(0.0)) * t;
        let mut hi = x - (drift + 0.0f64.min(top)) * t;
        // F(z) = z + (drift + u₀(z))·t − x is strictly increasing before
        // the catastrophe, with F(lo) ≤ 0 ≤ F(hi).
        let f = |z: f64| z + (drift + u0(z)) * t - x;
        let mut zc = 0.5 * (lo + hi);
        for _ in 0..80 {
            let fz = f(zc);
            if fz.abs() <= 1e-13 * (1.0 + x.abs()) {
                break;
            }
            if fz > 0.0 {
                hi = zc;
            } else {
                lo = zc;
            }
            let d = 1.0 + du0(zc) * t;
            let newton = zc - fz / d.max(1e-12);
            zc = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        let den = 1.0 + du0(zc) * t;
        let slope = if den.abs() > 1e-12 {
            du0(zc) / den
        } else {
            du0(zc) / 1e-12
        };
        (VecN::from_slice(&[u0(zc)]), VecN::from_slice(&[slope]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::linalg::eigenvalues_desc;
    use approx::assert_relative_eq;

    #[test]
    fn mollifier_is_normalized_to_unit_curvature() {
        // Support and symmetry.
        assert_eq!(mollifier(0.6), 0.0);
        assert_eq!(mollifier(-0.51), 0.0);
        assert!(mollifier(0.0) > 0.0);
        assert_relative_eq!(mollifier(0.3), mollifier(-0.3), max_relative = 1e-14);
        // Curvature sup is one after normalization.
        let mut curv = 0.0f64;
        let mut slope = 0.0f64;
        let mut value = 0.0f64;
        let m = 200_001;
        for j in 0..m {
            let s = -0.5 + j as f64 / (m - 1) as f64;
            curv = curv.max(mollifier_curvature(s).abs());
            slope = slope.max(mollifier_slope(s).abs());
            value = value.max(mollifier(s));
        }
        assert_relative_eq!(curv, 1.0, max_relative = 1e-8);
        assert_relative_eq!(slope, mollifier_slope_sup(), max_relative = 1e-8);
        assert_relative_eq!(value, mollifier_sup(), max_relative = 1e-10);
        // Analytic derivatives agree with finite differences.
        let fd = 1e-6;
        for &s in &[-0.4, -0.21, 0.05, 0.17, 0.33] {
            let d1 = (mollifier(s + fd) - mollifier(s - fd)) / (2.0 * fd);
            assert_relative_eq!(d1, mollifier_slope(s), max_relative = 1e-6, epsilon = 1e-9);
            let d2 = (mollifier_slope(s + fd) - mollifier_slope(s - fd)) / (2.0 * fd);
            assert_relative_eq!(d2, mollifier_curvature(s), max_relative = 1e-5, epsilon = 1e-8);
        }
        // The H² norm is dominated by the curvature component and bounded
        // by the sum of the three sup norms over the unit support.
        let h2 = mollifier_h2_norm();
        assert!(h2 > 0.1 && h2 < 1.5, "h2 = {h2}");
    }

    #[test]
    fn distance_requirement_matches_the_max_formula() {
        let d = distance_requirement(0.5, 10.0, 1.0, 0.1, 3.0).unwrap();
        assert_relative_eq!(d, 30.0, max_relative = 1e-12);
        // s0 = 1 contributes nothing through its logarithm.
        let d2 = distance_requirement(0.5, 0.5, 1.0, 0.5, 2.0).unwrap();
        assert_relative_eq!(d2, 2.0, max_relative = 1e-12);
        // A tiny slope inflates the requirement logarithmically.
        let d3 = distance_requirement(0.5, 1.0, 1.0, 1e-6, 1.0).unwrap();
        assert_relative_eq!(d3, (1e-6f64).ln().abs(), max_relative = 1e-12);
        assert!(distance_requirement(0.0, 1.0, 1.0, 0.1, 1.0).is_err());
        assert!(distance_requirement(0.5, -1.0, 1.0, 0.1, 1.0).is_err());
        assert!(distance_requirement(0.5, 1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn gas_matrix_is_the_flux_jacobian_with_acoustic_spectrum() {
        let eos = IdealGasEos::new(0.4, 1.0).unwrap();
        let states = [
            [1.0, 0.0, 25.0],
            [0.85, 0.6, 28.0],
            [1.3, -0.4, 12.0],
            [0.6, 1.1, 40.0],
        ];
        for s in states {
            let state = VecN::from_slice(&s);
            let a = gas_matrix(&eos, &state).unwrap();
            // Finite-difference Jacobian of the flux (−u, p, p·u).
            let fd = 1e-6;
            for j in 0..3 {
                let mut up = state;
                up.set(j, up.get(j) + fd);
                let mut dn = state;
                dn.set(j, dn.get(j) - fd);
                let (fp, _) = flux_and_speed(&eos, &up).unwrap();
                let (fm, _) = flux_and_speed(&eos, &dn).unwrap();
                for i in 0..3 {
                    let deriv = (fp.get(i) - fm.get(i)) / (2.0 * fd);
                    assert_relative_eq!(a.get(i, j), deriv, max_relative = 1e-5, epsilon = 1e-7);
                }
            }
            // Exact spectrum {c, 0, −c} at every state, moving or not.
            let c = eos.sound_speed(s[0], s[1], s[2]).unwrap();
            let lams = eigenvalues_desc(&a).unwrap();
            assert_relative_eq!(lams.get(0), c, max_relative = 1e-10);
            assert!(lams.get(1).abs() <= 1e-10 * c.max(1.0));
            assert_relative_eq!(lams.get(2), -c, max_relative = 1e-10);
        }
    }

    #[test]
    fn standard_profile_tail_decays_with_margin() {
        let prof = GasProfile::standard();
        let far = prof.state(-40.0);
        let end = prof.end_state();
        assert!(far.sub(&end).norm_inf() < 1e-10);
        // Plateau beyond the shock position.
        assert_eq!(prof.state(0.5).sub(&prof.state(0.0)).norm_inf(), 0.0);
        assert_eq!(prof.state_deriv(0.5).norm_inf(), 0.0);
        // Analytic tail gradient matches finite differences.
        for &x in &[-5.0, -2.0, -0.7] {
            let fd = 1e-6;
            let num = prof.state(x + fd).sub(&prof.state(x - fd)).scale(1.0 / (2.0 * fd));
            assert!(num.sub(&prof.state_deriv(x)).norm_inf() < 1e-6);
        }
        // Reactant fraction decays from the plateau value one.
        assert_relative_eq!(prof.reactant(0.0), 1.0, max_relative = 1e-14);
        assert!(prof.reactant(-30.0) < 1e-10);
        // Two-fold temperature margin everywhere on the tail.
        for j in 0..=100 {
            let x = -50.0 + 0.5 * j as f64;
            assert!(prof.temperature(x) >= 2.0 * prof.t_ignition() * (1.0 - 1e-12));
        }
        // Rejections: supersonic frame and nonphysical tail states.
        let eos = prof.eos();
        assert!(GasProfile::new(eos, [1.0, 0.0, 25.0], [-0.15, 0.6, 3.0], 0.8, 10.0).is_err());
        assert!(GasProfile::new(eos, [1.0, 0.0, 25.0], [-1.5, 0.0, 0.0], 0.8, 1.0).is_err());
    }

    #[test]
    fn reduced_system_spectrum_is_shifted_by_the_frame_speed() {
        let prof = GasProfile::standard();
        let system = znd_reduce(&prof, 0.2).unwrap();
        let c = prof.sound_speed_inf();
        let sigma = prof.sigma();
        let frame = eigen_frame(&system, -40.0, &VecN::zeros(3)).unwrap();
        assert_relative_eq!(frame.lambda(0), c - sigma, max_relative = 1e-9);
        assert_relative_eq!(frame.lambda(1), -sigma, max_relative = 1e-9);
        assert_relative_eq!(frame.lambda(2), -c - sigma, max_relative = 1e-9);
        // The slowest family is genuinely nonlinear; the contact is not.
        let g2 = gamma_infinity(&system, 2).unwrap();
        assert!(g2.abs() > 1.0, "gamma = {g2}");
        let g1 = gamma_infinity(&system, 1).unwrap();
        assert!(g1.abs() < 1e-6, "contact gamma = {g1}");
    }

    #[test]
    fn reduced_source_matches_the_inhomogeneity_increment() {
        let prof = GasProfile::standard();
        let system = znd_reduce(&prof, 0.2).unwrap();
        let eos = prof.eos();
        for &x in &[-3.0, -1.2, -0.4] {
            let base = prof.state(x);
            let du_bar = prof.state_deriv(x);
            let u_hat = VecN::from_slice(&[0.008, -0.005, 0.012]);
            let increment = gas_matrix(&eos, &base.add(&u_hat))
                .unwrap()
                .sub(&gas_matrix(&eos, &base).unwrap())
                .mul_vec(&du_bar);
            let modeled = system.source(x, &u_hat).mul_vec(&u_hat);
            let scale = increment.norm_inf().max(1e-12);
            assert!(
                modeled.sub(&increment).norm_inf() <= 1e-4 * scale,
                "x = {x}: increment mismatch {} vs scale {}",
                modeled.sub(&increment).norm_inf(),
                scale
            );
        }
    }

    #[test]
    fn make_blowup_data_validates_distance_and_family() {
        let prof = GasProfile::standard();
        let system = znd_reduce(&prof, 0.2).unwrap();
        // Too close for the horizon.
        match make_blowup_data(&system, 0.1, -3.0, 2, 1.0, 50.0) {
            Err(Error::DistanceTooSmall { d, required }) => {
                assert!(d < required);
                assert!(required >= 50.0);
            }
            other => panic!("expected a distance rejection, got {other:?}"),
        }
        // The contact family is not genuinely nonlinear.
        match make_blowup_data(&system, 0.1, -100.0, 1, 1.0, 50.0) {
            Err(Error::NonGenuinelyNonlinear { .. }) => {}
            other => panic!("expected a nonlinearity rejection, got {other:?}"),
        }
        // Out-of-range family index.
        assert!(make_blowup_data(&system, 0.1, -100.0, 5, 1.0, 50.0).is_err());
        // A faint bump whose slope scale undercuts the tail envelope: the
        // margin requirement passes but the envelope demands more distance.
        match make_blowup_data(&system, 1e-8, -23.0, 2, 1.0, 1.0) {
            Err(Error::DistanceTooSmall { d, required }) => {
                assert!(required > d, "envelope must demand more than d = {d}");
            }
            other => panic!("expected an envelope rejection, got {other:?}"),
        }
        // A valid construction carries the advertised scales.
        let data = make_blowup_data(&system, 0.1, -120.0, 2, 1.0, 100.0).unwrap();
        assert_relative_eq!(data.w0(), 0.1 * mollifier_slope_sup(), max_relative = 1e-14);
        assert_eq!(data.family(), 2);
        assert_eq!(data.s0(), 1.0);
        let (value, slope) = data.field(-120.0);
        assert_relative_eq!(
            value.norm_inf(),
            0.1 * mollifier(0.0) * data.direction().norm_inf(),
            max_relative = 1e-14
        );
        assert_eq!(slope.norm_inf(), 0.0);
        // Off the support the field vanishes.
        assert_eq!(data.field(-118.0).0.norm_inf(), 0.0);
    }

    #[test]
    fn off_family_slopes_vanish_at_second_order() {
        let prof = GasProfile::standard();
        let system = znd_reduce(&prof, 0.2).unwrap();
        let x0 = -60.0;
        let off_family_sup = |theta: f64| -> f64 {
            let data = make_blowup_data(&system, theta, x0, 2, 1.0, 1.0).unwrap();
            let mut sup = 0.0f64;
            for j in 0..=40 {
                let x = x0 - 0.5 + j as f64 / 40.0;
                let (value, slope) = data.field(x);
                let frame = eigen_frame(&system, x, &value).unwrap();
                for m in 0..3 {
                    if m == 2 {
                        continue;
                    }
                    sup = sup.max(frame.eta(m).dot(&slope).abs());
                }
            }
            sup
        };
        let r_big = off_family_sup(1e-2) / 1e-4;
        let r_small = off_family_sup(1e-3) / 1e-6;
        // Quadratic scaling: the ratio against θ² stays bounded and stable.
        assert!(
            (r_big / r_small - 1.0).abs() < 0.3,
            "off-family ratios {r_big} vs {r_small}"
        );
    }

    #[test]
    fn zero_bump_evolves_to_exact_zero() {
        let prof = GasProfile::standard();
        // Deep enough that the background is constant to machine precision,
        // so the compression factor must hold at one exactly.
        let config = GasRunConfig {
            theta: 0.0,
            x0: Some(-40.0),
            t_max: Some(0.05),
            window_halfwidth: 1.0,
            n_seeds: 3,
            max_points: 10,
            ..GasRunConfig::default()
        };
        let traj = simulate_gas(&prof, &config).unwrap();
        assert!(traj.blowup.is_none());
        assert!(traj.forecast.is_none());
        for p in &traj.points {
            assert_eq!(p.sup_amp, 0.0);
            assert_eq!(p.sup_grad, 0.0);
            assert_eq!(p.sup_grid_grad, 0.0);
            assert_eq!(p.z_sup, 0.0);
            assert!((p.min_rho - 1.0).abs() < 1e-12);
        }
        for j in 0..traj.state.n_nodes() {
            assert_eq!(traj.state.perturbation(j).norm_inf(), 0.0);
            assert_eq!(traj.state.reactant_hat(j), 0.0);
        }
        let report = traj.detect(DEFAULT_GRAD_FACTOR, DEFAULT_AMP_FACTOR).unwrap();
        assert_eq!(report.verdict, Verdict::NoBlowup);
    }

    #[test]
    fn faint_reactant_noise_contracts() {
        let prof = GasProfile::standard();
        let config = GasRunConfig {
            theta: 0.0,
            x0: Some(-6.0),
            t_max: Some(0.2),
            window_halfwidth: 1.0,
            n_seeds: 3,
            max_points: 10,
            z_noise: 1e-12,
            ..GasRunConfig::default()
        };
        let traj = simulate_gas(&prof, &config).unwrap();
        let mut final_sup = 0.0f64;
        for j in 0..traj.state.n_nodes() {
            final_sup = final_sup.max(traj.state.reactant_hat(j).abs());
        }
        assert!(final_sup > 0.0);
        assert!(final_sup <= 1e-12, "noise must not grow: {final_sup}");
        // The burn rate contracts the channel at least as fast as the
        // alternating-sign pattern is averaged by transport.
        let expected = 1e-12 * (-prof.rate() * prof.sigma() * 0.2).exp();
        assert!(final_sup <= expected * 1.2, "decay too slow: {final_sup} vs {expected}");
    }

    #[test]
    fn finite_volume_update_conserves_the_perturbation_mass() {
        let prof = GasProfile::standard();
        // Horizon short enough that no shed wave — including its diffused
        // numerical precursor — reaches the window edge (fastest
        // window-frame speed ≈ 5.6, margin 1.0).
        let config = GasRunConfig {
            theta: 0.1,
            x0: Some(-60.0),
            t_max: Some(0.05),
            window_halfwidth: 1.5,
            n_seeds: 5,
            max_points: 10,
            ..GasRunConfig::default()
        };
        let traj = simulate_gas(&prof, &config).unwrap();
        // Initial window integral of the bump data.
        let data = traj.data;
        let mut init = VecN::zeros(3);
        let h = traj.state.h();
        let n = traj.state.n_nodes();
        let origin0 = -60.0 - 1.5 + 0.5 * h;
        for j in 0..n {
            init = init.add(&data.field(origin0 + j as f64 * h).0);
        }
        let mut fin = VecN::zeros(3);
        for j in 0..n {
            fin = fin.add(&traj.state.perturbation(j));
        }
        let drift = fin.sub(&init).norm_inf() * h;
        assert!(drift <= 1e-12, "conservation drift {drift}");
    }

    #[test]
    fn seeded_family_bump_blows_up_before_the_forecast() {
        let prof = GasProfile::standard();
        let config = GasRunConfig {
            theta: 0.8,
            window_halfwidth: 1.0,
            n_seeds: 7,
            max_points: 400,
            ..GasRunConfig::default()
        };
        let traj = simulate_gas(&prof, &config).unwrap();
        let (t_star, family, _) = traj.blowup.expect("the seeded bump must blow up");
        assert_eq!(family, 2);
        let forecast = traj.forecast.expect("forecast exists");
        assert!(t_star <= forecast.t_star_upper);
        // The catastrophe time tracks the quadratic-comparison pole set by
        // the largest seeded slope (seeds at ±1/3 of the support width).
        let w_seed = 0.8 * mollifier_slope(1.0 / 3.0).abs();
        let t_pred = 1.0 / (traj.gamma.abs() * w_seed);
        assert!(
            (t_star / t_pred - 1.0).abs() < 0.25,
            "t_star = {t_star}, predicted {t_pred}"
        );
        // Amplitude/gradient dichotomy and the exact reactant zero.
        let report = traj.detect(DEFAULT_GRAD_FACTOR, DEFAULT_AMP_FACTOR).unwrap();
        assert_eq!(report.verdict, Verdict::Blowup);
        assert!(report.within_forecast);
        assert!(report.amp_growth <= 2.0, "amplitude grew {}", report.amp_growth);
        assert!(report.grad_growth >= 1e3, "gradient grew {}", report.grad_growth);
        for p in &traj.points {
            assert_eq!(p.z_sup, 0.0);
        }
        // Recorded times increase.
        for pair in traj.points.windows(2) {
            assert!(pair[1].t >= pair[0].t);
        }
    }

    #[test]
    fn blowup_detector_classifies_series() {
        let mk = |amps: &[f64], grads: &[f64]| -> Vec<TrajectoryPoint> {
            amps.iter()
                .zip(grads)
                .enumerate()
                .map(|(i, (&a, &g))| TrajectoryPoint {
                    t: i as f64,
                    sup_amp: a,
                    sup_grad: g,
                    min_rho: 1.0,
                    sup_grid_grad: g,
                    z_sup: 0.0,
                })
                .collect()
        };
        let flag = Some((2.0, 0usize, BlowupTrigger::GradientCeiling));
        // Certified catastrophe: bounded amplitude, exploding gradient.
        let good = mk(&[1.0, 1.2, 1.5], &[1.0, 100.0, 2e4]);
        let report = detect_blowup(&good, flag, Some(3.0), 1e3, 2.0).unwrap();
        assert_eq!(report.verdict, Verdict::Blowup);
        assert_eq!(report.t_star, Some(2.0));
        assert!(report.within_forecast);
        // The same series without a flag is not a catastrophe.
        let report = detect_blowup(&good, None, None, 1e3, 2.0).unwrap();
        assert_eq!(report.verdict, Verdict::NoBlowup);
        assert_eq!(report.t_star, None);
        // A decaying stable run is the negative control.
        let stable = mk(&[1.0, 0.5, 0.2], &[1.0, 0.7, 0.3]);
        let report = detect_blowup(&stable, None, None, 1e3, 2.0).unwrap();
        assert_eq!(report.verdict, Verdict::NoBlowup);
        // Amplitude violation disqualifies the verdict.
        let loud = mk(&[1.0, 2.0, 4.0], &[1.0, 100.0, 2e4]);
        let report = detect_blowup(&loud, flag, None, 1e3, 2.0).unwrap();
        assert_eq!(report.verdict, Verdict::NoBlowup);
        // A late catastrophe violates the forecast bound.
        let report = detect_blowup(&good, flag, Some(1.5), 1e3, 2.0).unwrap();
        assert!(!report.within_forecast);
        assert!(detect_blowup(&[], None, None, 1e3, 2.0).is_err());
    }

    #[test]
    fn scalar_compression_detectors_agree_at_the_exact_pole() {
        let h = 1e-3;
        for &m in &[0.5f64, 1.0, 2.0] {
            let system = HypSystem::without_source(
                1,
                Box::new(move |_x, u: &VecN| {
                    let mut a = MatN::zeros(1);
                    a.set(0, 0, u.get(0));
                    a
                }),
                1.0,
                1e12,
            )
            .unwrap();
            // Exact compression solution of slope −m everywhere.
            let field = move |x: f64, t: f64| -> (VecN, VecN) {
                let denom = 1.0 - m * t;
                (
                    VecN::from_slice(&[-m * x / denom]),
                    VecN::from_slice(&[-m / denom]),
                )
            };
            let config = ScalarRunConfig {
                dt_base: h,
                t_max: 2.0 / m,
                excursion: 1e9,
                n_seeds: 5,
                max_points: 400,
            };
            let run = run_scalar_ensemble(&system, -0.2, 0.2, &field, &config).unwrap();
            let t_star = run.t_star.expect("compression must blow up");
            let tol = 5.0 * h / (m * m);
            assert!(
                (t_star - 1.0 / m).abs() <= tol,
                "m = {m}: t_star = {t_star} vs pole {}",
                1.0 / m
            );
            let (tg, tr) = (run.t_grad.unwrap(), run.t_rho.unwrap());
            assert!((tg - tr).abs() <= 2.0 * h, "detectors disagree: {tg} vs {tr}");
            assert!(run.trigger.is_some());
            assert!(run.hyperbola_r2 > 0.999, "r² = {}", run.hyperbola_r2);
        }
    }

    #[test]
    fn far_field_bump_time_approaches_the_ideal_pole() {
        // Scalar model with a localized drift tail of rate 1/2; the data
        // sits so deep that the tail is numerically invisible and the pure
        // quadratic pole governs the catastrophe.
        let rate = 0.5f64;
        let amp = 0.5f64;
        let w0 = amp * mollifier_slope_sup();
        let run_at = |d: f64| -> f64 {
            let system = HypSystem::without_source(
                1,
                Box::new(move |x: f64, u: &VecN| {
                    let mut a = MatN::zeros(1);
                    a.set(0, 0, 0.3 * (rate * x.min(0.0)).exp() + u.get(0));
                    a
                }),
                rate,
                1e12,
            )
            .unwrap();
            let x_n = -d - 0.5;
            let field = moving_bump_field(amp, x_n, 0.0);
            let config = ScalarRunConfig {
                dt_base: 1.0 / (w0 * 4000.0),
                t_max: 2.5 / w0,
                excursion: 1e9,
                n_seeds: 9,
                max_points: 400,
            };
            let run = run_scalar_ensemble(&system, x_n - 0.5, x_n + 0.5, &field, &config).unwrap();
            run.t_star.expect("bump must blow up")
        };
        let d = 40.0 / rate;
        let t1 = run_at(d);
        let t2 = run_at(2.0 * d);
        assert!(
            (t1 * w0 - 1.0).abs() <= 0.1,
            "t_star·W0 = {} should be near one",
            t1 * w0
        );
        assert!(
            ((t2 - t1) / t1).abs() < 0.01,
            "doubling the distance moved the time by {}",
            ((t2 - t1) / t1).abs()
        );
    }

    #[test]
    fn shrinking_family_keeps_its_gradient_excursion() {
        let report = no_damping_family(4, 0.4, 1.0, 1.0).unwrap();
        assert_eq!(report.rows.len(), 4);
        let h2_scale = mollifier_h2_norm();
        for row in &report.rows {
            // H² size shrinks exactly like the amplitude.
            assert_relative_eq!(
                row.h2_norm * (row.n as f64 + 1.0),
                h2_scale,
                max_relative = 1e-12
            );
            // Every member still reaches the common excursion level.
            assert!(row.t_excursion.is_some(), "n = {} missed the excursion", row.n);
            assert!(row.t_star.is_some());
            assert!(row.hyperbola_r2 >= 0.95, "n = {}: r² = {}", row.n, row.hyperbola_r2);
            // The catastrophe time scales with the inverse slope.
            let t_pred = (row.n as f64 + 1.0) / mollifier_slope_sup();
            let t_star = row.t_star.unwrap();
            assert!(
                (t_star / t_pred - 1.0).abs() < 0.2,
                "n = {}: t_star = {t_star} vs {t_pred}",
                row.n
            );
        }
        for pair in report.rows.windows(2) {
            assert!(pair[1].h2_norm < pair[0].h2_norm);
            // The transported L² mass shrinks along the family.
            assert!(pair[1].l2_max < pair[0].l2_max * 1.05);
        }
    }
}
