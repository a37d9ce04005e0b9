//! Traveling-wave profiles for the reacting scalar model.
//!
//! A wave is a steady solution (ū, z̄) in the frame moving at the shock
//! speed σ: the reacted state ū(x) lives on x < 0 and decays exponentially
//! to a limit u₋∞, the ahead state is 0 on x > 0, and the reactant fraction
//! z̄ relaxes from 1 ahead of the shock to 0 far behind. The jump speed is
//! fixed by the Rankine–Hugoniot relation σ = (f(u0) − f(0))/u0, and the
//! reacted profile solves
//!
//!   ū′(x) = k·q·exp(kx/σ) / (f′(ū) − σ),   ū(0⁻) = u0.
//!
//! Existence requires a root u₋∞ of the end-state equation
//! f(u) − f(0) = σu − qσ with the characteristic speed f′ staying strictly
//! above σ between the end states, and the jump must be compressive
//! (σ > f′(0)). [`check_existence`] encodes those conditions;
//! [`integrate_profile`] produces a sampled profile with certified local
//! error; [`verify_profile`] re-derives the defining properties from the
//! samples alone.

use crate::error::{AdmissibilityFailure, Error, Result};
use crate::flux::ScalarFlux;

/// Safety floor for the ODE denominator f′(ū) − σ. Falling below it during
/// integration aborts with [`Error::StiffnessFailure`]; a root with a
/// smaller margin is rejected as degenerate by [`check_existence`].
pub const DERIVATIVE_GAP_FLOOR: f64 = 1e-8;

/// Number of scan intervals used to bracket the end-state root.
const ROOT_SCAN_STEPS: usize = 4000;

/// Number of sample points for the characteristic-speed infimum over the
/// hull of the end states.
const HULL_SCAN_POINTS: usize = 2001;

/// Parameters of a traveling wave: reaction rate k, heat release q (either
/// sign), post-shock value u0 = ū(0⁻), ignition threshold u_i, and the
/// scalar flux f.
#[derive(Clone, Debug)]
pub struct WaveParams {
    flux: ScalarFlux,
    k: f64,
    q: f64,
    u0: f64,
    u_i: f64,
    sigma: f64,
}

impl WaveParams {
    /// Validates and stores wave parameters.
    ///
    /// Requires k > 0, u0 > 0, u_i ∈ (0, u0), and finite q. The induced
    /// speed σ = (f(u0) − f(0))/u0 must be positive
    /// ([`Error::NonPositiveSpeed`]) and the post-shock characteristic must
    /// be strictly faster than the wave, f′(u0) > σ
    /// ([`AdmissibilityFailure::DegenerateCharacteristic`]).
    pub fn new(flux: ScalarFlux, k: f64, q: f64, u0: f64, u_i: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(range_error("wave.k", k, "reaction rate must be positive"));
        }
        if !(u0 > 0.0 && u0.is_finite()) {
            return Err(range_error("wave.u0", u0, "post-shock value must be positive"));
        }
        if !(u_i > 0.0 && u_i < u0) {
            return Err(range_error(
                "wave.u_i",
                u_i,
                "ignition threshold must lie strictly between 0 and u0",
            ));
        }
        if !q.is_finite() {
            return Err(range_error("wave.q", q, "heat release must be finite"));
        }
        let sigma = speed_from_flux(&flux, u0)?;
        if !(sigma > 0.0) {
            return Err(Error::NonPositiveSpeed(sigma));
        }
        if !(flux.eval(u0, 1)? > sigma) {
            return Err(Error::Inadmissible(
                AdmissibilityFailure::DegenerateCharacteristic,
            ));
        }
        Ok(WaveParams {
            flux,
            k,
            q,
            u0,
            u_i,
            sigma,
        })
    }

    /// The scalar flux f.
    pub fn flux(&self) -> &ScalarFlux {
        &self.flux
    }

    /// Reaction rate k.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Heat release q.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Post-shock value u0 = ū(0⁻).
    pub fn u0(&self) -> f64 {
        self.u0
    }

    /// Ignition threshold u_i.
    pub fn u_i(&self) -> f64 {
        self.u_i
    }

    /// Wave speed σ stored at construction.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

fn range_error(key: &str, value: f64, reason: &str) -> Error {
    Error::RangeError {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn speed_from_flux(flux: &ScalarFlux, u0: f64) -> Result<f64> {
    Ok((flux.eval(u0, 0)? - flux.eval(0.0, 0)?) / u0)
}

/// Rankine–Hugoniot speed σ = (f(u0) − f(0))/u0 of the wave.
pub fn compute_speed(params: &WaveParams) -> Result<f64> {
    speed_from_flux(&params.flux, params.u0)
}

/// Steady reactant fraction: exp(kx/σ) behind the shock (x < 0) and 1
/// ahead (x ≥ 0). Errors with [`Error::NonPositiveSpeed`] when σ ≤ 0.
pub fn reactant_profile(params: &WaveParams, sigma: f64, x: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSpeed(sigma));
    }
    Ok(if x < 0.0 {
        (params.k * x / sigma).exp()
    } else {
        1.0
    })
}

/// Finds the burned end state u₋∞ and checks wave admissibility.
///
/// The end-state equation f(u) − f(0) − σu + qσ = 0 is scanned away from u0
/// (downward for q > 0, where the root closest to u0 is the largest root in
/// (u_i, u0); upward for q < 0 over a window of the same width), then the
/// bracket is tightened by bisection and polished by Newton steps. The root
/// is admissible only if the jump is compressive (σ > f′(0), else
/// [`AdmissibilityFailure::WrongEndState`]) and the characteristic speed
/// stays strictly above σ on the whole hull of {u₋∞, u0}
/// ([`AdmissibilityFailure::DegenerateCharacteristic`] otherwise). q = 0
/// returns u0 exactly.
pub fn check_existence(params: &WaveParams) -> Result<f64> {
    let flux = &params.flux;
    let sigma = params.sigma;
    let f0 = flux.eval(0.0, 0)?;
    let end_state_gap = |u: f64| -> Result<f64> {
        Ok(flux.eval(u, 0)? - f0 - sigma * u + params.q * sigma)
    };

    let root = if params.q == 0.0 {
        params.u0
    } else {
        // Scan toward the approach direction of the burned state.
        let step = (params.u0 - params.u_i) / ROOT_SCAN_STEPS as f64;
        let direction = if params.q > 0.0 { -1.0 } else { 1.0 };
        let mut prev_u = params.u0;
        let mut prev_g = end_state_gap(prev_u)?;
        let mut bracket = None;
        for j in 1..=ROOT_SCAN_STEPS {
            let u = params.u0 + direction * j as f64 * step;
            let g = end_state_gap(u)?;
            if g == 0.0 {
                bracket = Some((u, u));
                break;
            }
            if (g < 0.0) != (prev_g < 0.0) {
                bracket = Some((u.min(prev_u), u.max(prev_u)));
                break;
            }
            prev_u = u;
            prev_g = g;
        }
        let (mut a, mut b) = match bracket {
            Some(pair) => pair,
            None => return Err(Error::Inadmissible(AdmissibilityFailure::NoRoot)),
        };
        let ga_negative = end_state_gap(a)? < 0.0;
        while b - a > 1e-12 * params.u0.abs().max(1.0) {
            let mid = 0.5 * (a + b);
            if (end_state_gap(mid)? < 0.0) == ga_negative {
                a = mid;
            } else {
                b = mid;
            }
        }
        let mut u = 0.5 * (a + b);
        for _ in 0..3 {
            let slope = flux.eval(u, 1)? - sigma;
            if slope.abs() < f64::MIN_POSITIVE.sqrt() {
                break;
            }
            u -= end_state_gap(u)? / slope;
        }
        u
    };

    if !(sigma > flux.eval(0.0, 1)?) {
        return Err(Error::Inadmissible(AdmissibilityFailure::WrongEndState));
    }
    let lo = root.min(params.u0);
    let hi = root.max(params.u0);
    let mut inf_speed = f64::INFINITY;
    for i in 0..HULL_SCAN_POINTS {
        let u = lo + (hi - lo) * i as f64 / (HULL_SCAN_POINTS - 1) as f64;
        inf_speed = inf_speed.min(flux.eval(u, 1)?);
    }
    if !(inf_speed > sigma) || flux.eval(root, 1)? - sigma < DERIVATIVE_GAP_FLOOR {
        return Err(Error::Inadmissible(
            AdmissibilityFailure::DegenerateCharacteristic,
        ));
    }
    Ok(root)
}

/// How the steady reactant fraction is represented.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReactantShape {
    /// z̄ = exp(kx/σ) behind the shock, 1 ahead (the σ > 0 wave).
    Exponential,
    /// z̄ = 0 behind, 1 ahead: fully burned constant state, used for
    /// constant waves with σ < 0 where the exponential form diverges.
    BurnedConstant,
}

/// A sampled traveling-wave profile together with closed-form derivative
/// data and the decay envelope constant κ.
#[derive(Clone, Debug)]
pub struct WaveProfile {
    params: WaveParams,
    sigma: f64,
    u_minus_inf: f64,
    grid_x: Vec<f64>,
    u_bar: Vec<f64>,
    du_bar: Vec<f64>,
    kappa: f64,
    shape: ReactantShape,
    grid_h: f64,
    extent: f64,
}

/// Re-derived consistency checks of a constructed profile.
#[derive(Clone, Copy, Debug)]
pub struct ProfileReport {
    /// Max over interior grid nodes of the centered-difference residual of
    /// the profile ODE.
    pub ode_residual_max: f64,
    /// |f(u0) − f(0) − σ·u0|, the Rankine–Hugoniot defect.
    pub rh_residual: f64,
    /// Fitted envelope constant: max over samples of
    /// (|ū′| + |ū″| + |ū‴|)·exp(−kx/σ).
    pub kappa: f64,
    /// Whether |ū′| + |ū″| + |ū‴| ≤ κ·exp(kx/σ) held at every sample.
    pub envelope_ok: bool,
    /// Whether the ODE residual is within the requested tolerance.
    pub ode_ok: bool,
    /// Whether the Rankine–Hugoniot defect is within the tolerance.
    pub rh_ok: bool,
}

/// Right-hand side of the profile ODE, guarding the denominator floor.
fn profile_rhs(flux: &ScalarFlux, k: f64, q: f64, sigma: f64, x: f64, u: f64) -> Result<f64> {
    let gap = flux.eval(u, 1)? - sigma;
    if gap < DERIVATIVE_GAP_FLOOR {
        return Err(Error::StiffnessFailure { x, gap });
    }
    Ok(k * q * (k * x / sigma).exp() / gap)
}

/// One classical fourth-order Runge–Kutta step of the profile ODE.
fn rk4_step(
    flux: &ScalarFlux,
    k: f64,
    q: f64,
    sigma: f64,
    x: f64,
    u: f64,
    h: f64,
) -> Result<f64> {
    let s1 = profile_rhs(flux, k, q, sigma, x, u)?;
    let s2 = profile_rhs(flux, k, q, sigma, x + 0.5 * h, u + 0.5 * h * s1)?;
    let s3 = profile_rhs(flux, k, q, sigma, x + 0.5 * h, u + 0.5 * h * s2)?;
    let s4 = profile_rhs(flux, k, q, sigma, x + h, u + h * s3)?;
    Ok(u + h / 6.0 * (s1 + 2.0 * s2 + 2.0 * s3 + s4))
}

/// Integrates ū backwards from ū(0) = u0, landing exactly on each node of
/// `targets` (strictly decreasing, all negative). Adaptive step doubling:
/// the full-step/two-half-step difference estimates the local error, which
/// is held below `target_error` per unit x so the accumulated error over
/// the whole extent stays near `target_error`.
fn integrate_backward(
    flux: &ScalarFlux,
    k: f64,
    q: f64,
    sigma: f64,
    u0: f64,
    targets: &[f64],
    extent: f64,
    target_error: f64,
) -> Result<Vec<f64>> {
    let mut x = 0.0;
    let mut u = u0;
    let mut h = -(extent / 200.0).min(0.01);
    let mut out = Vec::with_capacity(targets.len());
    for &x_target in targets {
        while x > x_target {
            if x + h < x_target {
                h = x_target - x;
            }
            let u_full = rk4_step(flux, k, q, sigma, x, u, h)?;
            let u_mid = rk4_step(flux, k, q, sigma, x, u, 0.5 * h)?;
            let u_half = rk4_step(flux, k, q, sigma, x + 0.5 * h, u_mid, 0.5 * h)?;
            let err = (u_half - u_full).abs() / 15.0;
            let tol = target_error * (h.abs() / extent);
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
            };
            if err <= tol {
                u = u_half + (u_half - u_full) / 15.0;
                x += h;
                h *= factor;
            } else {
                h *= factor;
                if h.abs() < 1e-13 * extent {
                    return Err(Error::StiffnessFailure {
                        x,
                        gap: flux.eval(u, 1)? - sigma,
                    });
                }
            }
        }
        out.push(u);
        x = x_target;
    }
    Ok(out)
}

/// Ratios (r₁, r₂, r₃) such that ū⁽ⁱ⁾(x) = rᵢ·exp(kx/σ), obtained by
/// chain-rule differentiation of the profile ODE. Working with the ratios
/// keeps the envelope computation exp(−kx/σ)·|ū⁽ⁱ⁾| free of overflow deep
/// in the tail.
fn envelope_ratios(
    flux: &ScalarFlux,
    k: f64,
    q: f64,
    sigma: f64,
    x: f64,
    u: f64,
) -> Result<[f64; 3]> {
    if q == 0.0 {
        return Ok([0.0; 3]);
    }
    let d = flux.eval(u, 1)? - sigma;
    let f2 = flux.eval(u, 2)?;
    let f3 = flux.eval(u, 3)?;
    let e = (k * x / sigma).exp();
    let ks = k / sigma;
    let r1 = k * q / d;
    let r2 = ks * r1 - f2 * r1 * r1 * e / d;
    let r3 = ks * ks * r1 - 3.0 * ks * f2 * r1 * r1 * e / d - f3 * r1.powi(3) * e * e / d
        + 3.0 * f2 * f2 * r1.powi(3) * e * e / (d * d);
    Ok([r1, r2, r3])
}

/// Constructs the profile by adaptive backwards integration over [−L, 0).
///
/// The grid is uniform with spacing min(0.01, L/200), excludes x = 0, and
/// ends at −h near 0⁻. Requires an admissible wave ([`check_existence`]);
/// fails with [`Error::StiffnessFailure`] if the ODE denominator collapses
/// mid-integration.
pub fn integrate_profile(params: &WaveParams, extent: f64, target_error: f64) -> Result<WaveProfile> {
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(range_error("profile.extent", extent, "extent must be positive"));
    }
    if !(target_error > 0.0 && target_error.is_finite()) {
        return Err(range_error(
            "profile.target_error",
            target_error,
            "local error target must be positive",
        ));
    }
    let u_minus_inf = check_existence(params)?;
    let sigma = params.sigma;
    let cells = (extent / (extent / 200.0).min(0.01)).round().max(2.0) as usize;
    let grid_h = extent / cells as f64;
    // Nodes −L, −L+h, …, −h; the x = 0 endpoint is kept implicit.
    let grid_x: Vec<f64> = (0..cells)
        .map(|j| -extent + j as f64 * grid_h)
        .collect();
    let descending: Vec<f64> = grid_x.iter().rev().copied().collect();
    let u_desc = integrate_backward(
        &params.flux,
        params.k,
        params.q,
        sigma,
        params.u0,
        &descending,
        extent,
        target_error,
    )?;
    let u_bar: Vec<f64> = u_desc.iter().rev().copied().collect();

    let mut du_bar = Vec::with_capacity(cells);
    let mut kappa: f64 = 0.0;
    for (&x, &u) in grid_x.iter().zip(&u_bar) {
        let r = envelope_ratios(&params.flux, params.k, params.q, sigma, x, u)?;
        kappa = kappa.max(r[0].abs() + r[1].abs() + r[2].abs());
        du_bar.push(r[0] * (params.k * x / sigma).exp());
    }
    // Include the shock-side limit x → 0⁻ and the far-field limit, where
    // the envelope ratios take their extreme values.
    let r0 = envelope_ratios(&params.flux, params.k, params.q, sigma, 0.0, params.u0)?;
    kappa = kappa.max(r0[0].abs() + r0[1].abs() + r0[2].abs());
    if params.q != 0.0 {
        let d_inf = params.flux.eval(u_minus_inf, 1)? - sigma;
        let r1_inf = params.k * params.q / d_inf;
        let ks = params.k / sigma;
        kappa = kappa.max(r1_inf.abs() * (1.0 + ks + ks * ks));
    }

    Ok(WaveProfile {
        params: params.clone(),
        sigma,
        u_minus_inf,
        grid_x,
        u_bar,
        du_bar,
        kappa,
        shape: ReactantShape::Exponential,
        grid_h,
        extent,
    })
}

impl WaveProfile {
    /// A constant reacted state ū ≡ u0 behind a compressive jump of either
    /// speed sign (σ ≠ 0), with no heat release (q = 0). For σ < 0 the
    /// reactant fraction uses the fully burned convention
    /// ([`ReactantShape::BurnedConstant`]) since the exponential form only
    /// exists for right-moving waves.
    pub fn constant_wave(flux: ScalarFlux, k: f64, u0: f64, u_i: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(range_error("wave.k", k, "reaction rate must be positive"));
        }
        if !(u0 > 0.0 && u0.is_finite()) {
            return Err(range_error("wave.u0", u0, "post-shock value must be positive"));
        }
        if !(u_i > 0.0 && u_i < u0) {
            return Err(range_error(
                "wave.u_i",
                u_i,
                "ignition threshold must lie strictly between 0 and u0",
            ));
        }
        let sigma = speed_from_flux(&flux, u0)?;
        if sigma == 0.0 {
            return Err(Error::NonPositiveSpeed(sigma));
        }
        if !(flux.eval(u0, 1)? > sigma) {
            return Err(Error::Inadmissible(
                AdmissibilityFailure::DegenerateCharacteristic,
            ));
        }
        if !(sigma > flux.eval(0.0, 1)?) {
            return Err(Error::Inadmissible(AdmissibilityFailure::WrongEndState));
        }
        let shape = if sigma > 0.0 {
            ReactantShape::Exponential
        } else {
            ReactantShape::BurnedConstant
        };
        let extent = 20.0;
        let cells = 200usize;
        let grid_h = extent / cells as f64;
        let grid_x: Vec<f64> = (0..cells)
            .map(|j| -extent + j as f64 * grid_h)
            .collect();
        Ok(WaveProfile {
            params: WaveParams {
                flux,
                k,
                q: 0.0,
                u0,
                u_i,
                sigma,
            },
            sigma,
            u_minus_inf: u0,
            grid_x,
            u_bar: vec![u0; cells],
            du_bar: vec![0.0; cells],
            kappa: 0.0,
            shape,
            grid_h,
            extent,
        })
    }

    /// Wave parameters this profile was built from.
    pub fn params(&self) -> &WaveParams {
        &self.params
    }

    /// Wave speed σ.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Burned end state u₋∞ = lim ū(x) as x → −∞.
    pub fn u_minus_inf(&self) -> f64 {
        self.u_minus_inf
    }

    /// Envelope constant κ with |ū′| + |ū″| + |ū‴| ≤ κ·exp(kx/σ).
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Sample abscissas (strictly increasing, all negative, ending at −h).
    pub fn grid_x(&self) -> &[f64] {
        &self.grid_x
    }

    /// Sampled ū values matching [`Self::grid_x`].
    pub fn u_bar(&self) -> &[f64] {
        &self.u_bar
    }

    /// Reactant convention in use.
    pub fn shape(&self) -> ReactantShape {
        self.shape
    }

    /// Sampled extent L: the grid covers [−L, −h].
    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Grid spacing h.
    pub fn grid_h(&self) -> f64 {
        self.grid_h
    }

    /// The background wave value at x: 0 ahead of the shock (x ≥ 0),
    /// cubic-Hermite interpolation of the samples behind it, and the
    /// asymptote u₋∞ beyond the sampled extent (with an O(exp(−kL/σ))
    /// truncation mismatch at −L).
    pub fn u_bar_at(&self, x: f64) -> f64 {
        if x >= 0.0 {
            return 0.0;
        }
        if x <= -self.extent {
            return self.u_minus_inf;
        }
        let n = self.grid_x.len();
        let pos = (x + self.extent) / self.grid_h;
        let cell = (pos.floor() as usize).min(n - 1);
        let (xa, ua, da) = (self.grid_x[cell], self.u_bar[cell], self.du_bar[cell]);
        let (ub, db) = if cell + 1 < n {
            (self.u_bar[cell + 1], self.du_bar[cell + 1])
        } else {
            // Final cell [−h, 0): close with the shock-side limit ū(0⁻) = u0.
            let d0 = if self.params.q == 0.0 {
                0.0
            } else {
                // Denominator is positive by the admissibility check.
                self.params.k * self.params.q
                    / (self
                        .params
                        .flux
                        .eval(self.params.u0, 1)
                        .unwrap_or(f64::INFINITY)
                        - self.sigma)
            };
            (self.params.u0, d0)
        };
        let t = (x - xa) / self.grid_h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * ua
            + (t3 - 2.0 * t2 + t) * self.grid_h * da
            + (-2.0 * t3 + 3.0 * t2) * ub
            + (t3 - t2) * self.grid_h * db
    }

    /// Closed-form (ū′, ū″, ū‴) at x < 0, evaluated on the interpolated
    /// profile; zero ahead of the shock and identically zero for q = 0.
    pub fn u_bar_derivs(&self, x: f64) -> Result<[f64; 3]> {
        if x >= 0.0 || self.params.q == 0.0 {
            return Ok([0.0; 3]);
        }
        let lo = self.u_minus_inf.min(self.params.u0);
        let hi = self.u_minus_inf.max(self.params.u0);
        let u = self.u_bar_at(x).clamp(lo, hi);
        let r = envelope_ratios(&self.params.flux, self.params.k, self.params.q, self.sigma, x, u)?;
        let e = (self.params.k * x / self.sigma).exp();
        Ok([r[0] * e, r[1] * e, r[2] * e])
    }

    /// Steady reactant fraction at x under this profile's convention.
    pub fn z_bar(&self, x: f64) -> f64 {
        match self.shape {
            ReactantShape::Exponential => {
                if x < 0.0 {
                    (self.params.k * x / self.sigma).exp()
                } else {
                    1.0
                }
            }
            ReactantShape::BurnedConstant => {
                if x < 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Order-l derivative of z̄ at x (order ≥ 1): (k/σ)ˡ·exp(kx/σ) behind
    /// the shock for the exponential convention, zero elsewhere.
    pub fn z_bar_deriv(&self, x: f64, order: u32) -> f64 {
        if order == 0 {
            return self.z_bar(x);
        }
        match self.shape {
            ReactantShape::Exponential if x < 0.0 => {
                let ks = self.params.k / self.sigma;
                ks.powi(order as i32) * (self.params.k * x / self.sigma).exp()
            }
            _ => 0.0,
        }
    }
}

/// Re-derives the defining properties of a profile from its samples:
/// centered-difference residual of the ODE, the envelope constant κ with
/// its bound, and the Rankine–Hugoniot defect. Failed checks are flagged in
/// the report rather than returned as errors.
pub fn verify_profile(profile: &WaveProfile, tol: f64) -> ProfileReport {
    let p = &profile.params;
    let sigma = profile.sigma;

    let mut ode_residual_max: f64 = 0.0;
    for j in 1..profile.grid_x.len().saturating_sub(1) {
        let x = profile.grid_x[j];
        let slope = (profile.u_bar[j + 1] - profile.u_bar[j - 1]) / (2.0 * profile.grid_h);
        let rhs = match profile_rhs(&p.flux, p.k, p.q, sigma, x, profile.u_bar[j]) {
            Ok(v) => v,
            Err(_) => {
                ode_residual_max = f64::INFINITY;
                break;
            }
        };
        ode_residual_max = ode_residual_max.max((slope - rhs).abs());
    }

    let mut kappa: f64 = 0.0;
    let mut envelope_ok = true;
    let shock_limit = (0.0, p.u0);
    for (x, u) in profile
        .grid_x
        .iter()
        .copied()
        .zip(profile.u_bar.iter().copied())
        .chain(std::iter::once(shock_limit))
    {
        match envelope_ratios(&p.flux, p.k, p.q, sigma, x, u) {
            Ok(r) => {
                let total = r[0].abs() + r[1].abs() + r[2].abs();
                kappa = kappa.max(total);
                if total > profile.kappa * (1.0 + 1e-12) + f64::MIN_POSITIVE {
                    envelope_ok = false;
                }
            }
            Err(_) => envelope_ok = false,
        }
    }
    if p.q != 0.0 {
        if let Ok(d_inf) = p.flux.eval(profile.u_minus_inf, 1) {
            let ks = p.k / sigma;
            let r1_inf = (p.k * p.q / (d_inf - sigma)).abs();
            kappa = kappa.max(r1_inf * (1.0 + ks + ks * ks));
        }
    }

    let rh_residual = match (p.flux.eval(p.u0, 0), p.flux.eval(0.0, 0)) {
        (Ok(fu0), Ok(f0)) => (fu0 - f0 - sigma * p.u0).abs(),
        _ => f64::INFINITY,
    };

    ProfileReport {
        ode_residual_max,
        rh_residual,
        kappa,
        envelope_ok,
        ode_ok: ode_residual_max <= tol,
        rh_ok: rh_residual <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Non-convex flux whose characteristic speed dips below σ strictly
    /// inside the hull of the end states: f′ starts at 0.05, climbs to a
    /// hump near u ≈ 0.3, sags to ≈ 0.54 around u ≈ 0.65 (below σ = 1.15),
    /// and recrosses σ only near u0 = 1 where f′(1) = 1.4.
    fn dipped_flux() -> ScalarFlux {
        ScalarFlux::polynomial(
            vec![
                0.0,
                0.05,
                -15.384654354891609,
                147.79302598847457,
                -430.7492952908364,
                579.9596467910294,
                -375.57023988898976,
                95.05151675521384,
            ],
            -1.0,
            2.0,
        )
        .unwrap()
    }

    /// Convex-range flux with f′(0) = 0.6 above its wave speed 8/15: the
    /// jump is not compressive even though the end-state root exists.
    fn fast_ahead_flux() -> ScalarFlux {
        ScalarFlux::polynomial(vec![0.0, 0.6, -0.3, 0.7 / 3.0], -1.0, 2.0).unwrap()
    }

    fn burgers_params(q: f64) -> WaveParams {
        WaveParams::new(ScalarFlux::burgers(), 1.0, q, 1.0, 0.5).unwrap()
    }

    #[test]
    fn speed_reference_values() {
        assert_eq!(compute_speed(&burgers_params(0.09)).unwrap(), 0.5);
        let wide = WaveParams::new(ScalarFlux::burgers(), 1.0, 0.09, 2.0, 0.5).unwrap();
        assert_eq!(compute_speed(&wide).unwrap(), 1.0);
        let cubic = ScalarFlux::polynomial(vec![0.0, 0.0, 0.0, 1.0], -2.0, 2.0).unwrap();
        let steep = WaveParams::new(cubic, 1.0, 0.0, 1.0, 0.5).unwrap();
        assert_eq!(compute_speed(&steep).unwrap(), 1.0);
        assert_eq!(steep.sigma(), 1.0);
    }

    #[test]
    fn parameter_validation_rejects_bad_inputs() {
        let f = ScalarFlux::burgers;
        assert!(matches!(
            WaveParams::new(f(), 0.0, 0.1, 1.0, 0.5),
            Err(Error::RangeError { .. })
        ));
        assert!(matches!(
            WaveParams::new(f(), 1.0, 0.1, -1.0, 0.5),
            Err(Error::RangeError { .. })
        ));
        assert!(matches!(
            WaveParams::new(f(), 1.0, 0.1, 1.0, 1.5),
            Err(Error::RangeError { .. })
        ));
        assert!(matches!(
            WaveParams::new(f(), 1.0, f64::NAN, 1.0, 0.5),
            Err(Error::RangeError { .. })
        ));
        // f(u) = −u²/2 gives σ = −0.5.
        let backward = ScalarFlux::polynomial(vec![0.0, 0.0, -0.5], -2.0, 2.0).unwrap();
        assert!(matches!(
            WaveParams::new(backward, 1.0, 0.1, 1.0, 0.5),
            Err(Error::NonPositiveSpeed(_))
        ));
        // f(u) = u − u²/4: σ = 0.75 but f′(1) = 0.5 — the post-shock
        // characteristic would not outrun the wave.
        let slow = ScalarFlux::polynomial(vec![0.0, 1.0, -0.25], -2.0, 2.0).unwrap();
        assert!(matches!(
            WaveParams::new(slow, 1.0, 0.1, 1.0, 0.5),
            Err(Error::Inadmissible(
                AdmissibilityFailure::DegenerateCharacteristic
            ))
        ));
    }

    #[test]
    fn reactant_profile_reference_values() {
        let p = burgers_params(0.09);
        assert_relative_eq!(
            reactant_profile(&p, 0.5, -1.0).unwrap(),
            (-2.0f64).exp(),
            max_relative = 1e-15
        );
        assert_eq!(reactant_profile(&p, 0.5, 0.0).unwrap(), 1.0);
        let p2 = WaveParams::new(ScalarFlux::burgers(), 2.0, 0.09, 1.0, 0.5).unwrap();
        assert_relative_eq!(
            reactant_profile(&p2, 1.0, -0.5).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-15
        );
        assert!(matches!(
            reactant_profile(&p, -0.5, -1.0),
            Err(Error::NonPositiveSpeed(_))
        ));
    }

    #[test]
    fn end_state_root_burgers() {
        // u²/2 − u/2 + 0.045 = 0: largest root in (0.5, 1) is 0.9 exactly.
        let u = check_existence(&burgers_params(0.09)).unwrap();
        assert_relative_eq!(u, 0.9, max_relative = 1e-13);
    }

    #[test]
    fn end_state_without_release_is_the_postshock_state() {
        assert_eq!(check_existence(&burgers_params(0.0)).unwrap(), 1.0);
    }

    #[test]
    fn end_state_root_endothermic_side() {
        // q < 0 pushes the burned state above u0: root of u² − u − 0.09,
        // i.e. (1 + √1.36)/2.
        let u = check_existence(&burgers_params(-0.09)).unwrap();
        assert_relative_eq!(u, 1.0830951894845301, max_relative = 1e-13);
    }

    #[test]
    fn missing_root_is_reported() {
        // Discriminant of u² − u + 0.3 is negative: no crossing at all.
        assert!(matches!(
            check_existence(&burgers_params(0.3)),
            Err(Error::Inadmissible(AdmissibilityFailure::NoRoot))
        ));
    }

    #[test]
    fn noncompressive_jump_is_reported() {
        let p = WaveParams::new(fast_ahead_flux(), 1.0, 0.03, 1.0, 0.05).unwrap();
        assert!(matches!(
            check_existence(&p),
            Err(Error::Inadmissible(AdmissibilityFailure::WrongEndState))
        ));
    }

    #[test]
    fn interior_speed_dip_is_reported() {
        let p = WaveParams::new(dipped_flux(), 1.0, 0.08, 1.0, 0.05).unwrap();
        assert!(matches!(
            check_existence(&p),
            Err(Error::Inadmissible(
                AdmissibilityFailure::DegenerateCharacteristic
            ))
        ));
    }

    /// Closed form for the Burgers profile: integrating the ODE gives
    /// ū²/2 − ū/2 = qσ(exp(kx/σ) − 1), so ū is the upper quadratic root.
    fn burgers_profile_oracle(k: f64, q: f64, x: f64) -> f64 {
        let e = (2.0 * k * x).exp();
        0.5 * (1.0 + (1.0 - 4.0 * q * (1.0 - e)).sqrt())
    }

    #[test]
    fn profile_matches_burgers_closed_form() {
        let params = burgers_params(0.09);
        let profile = integrate_profile(&params, 8.0, 1e-13).unwrap();
        assert_eq!(profile.grid_x().len(), 800);
        for (&x, &u) in profile.grid_x().iter().zip(profile.u_bar()) {
            let exact = burgers_profile_oracle(1.0, 0.09, x);
            assert!(
                (u - exact).abs() <= 1e-12,
                "x = {x}: sampled {u} vs closed form {exact}"
            );
        }
        // Interpolated value at an off-grid point.
        let x_probe = -0.5 * 10.0f64.ln();
        assert_relative_eq!(
            profile.u_bar_at(x_probe),
            0.9110960958218893,
            max_relative = 1e-9
        );
        assert_eq!(profile.u_bar_at(0.4), 0.0);
        assert_relative_eq!(profile.u_bar_at(-30.0), 0.9, max_relative = 1e-12);
    }

    #[test]
    fn profile_is_monotone_with_fast_characteristics() {
        let profile = integrate_profile(&burgers_params(0.09), 8.0, 1e-12).unwrap();
        let sigma = profile.sigma();
        for pair in profile.u_bar().windows(2) {
            assert!(pair[0] < pair[1], "profile must increase toward the shock");
        }
        for &u in profile.u_bar() {
            assert!(u > profile.u_minus_inf() && u < 1.0);
            assert!(u - sigma > 0.0, "characteristic must outrun the wave");
        }
    }

    #[test]
    fn profile_without_release_is_constant() {
        let profile = integrate_profile(&burgers_params(0.0), 8.0, 1e-13).unwrap();
        assert!(profile.u_bar().iter().all(|&u| u == 1.0));
        assert_eq!(profile.kappa(), 0.0);
        assert_eq!(profile.u_bar_derivs(-1.0).unwrap(), [0.0; 3]);
    }

    #[test]
    fn profile_tail_decays_at_the_reaction_rate() {
        let profile = integrate_profile(&burgers_params(0.09), 8.0, 1e-13).unwrap();
        let u_inf = profile.u_minus_inf();
        let tail = profile.u_bar_at(-8.0 + 1e-9) - u_inf;
        let mid = profile.u_bar_at(-4.0) - u_inf;
        let ratio = tail / mid;
        let expected = (-8.0f64).exp(); // exp(−kL/(2σ)) with k=1, σ=0.5, L=8
        assert!(
            (ratio / expected - 1.0).abs() < 0.1,
            "tail ratio {ratio} vs {expected}"
        );
    }

    #[test]
    fn endothermic_profile_descends_to_higher_burned_state() {
        let profile = integrate_profile(&burgers_params(-0.09), 8.0, 1e-12).unwrap();
        for pair in profile.u_bar().windows(2) {
            assert!(pair[0] > pair[1], "profile must decrease toward the shock");
        }
        assert_relative_eq!(
            profile.u_bar_at(-7.99),
            profile.u_minus_inf(),
            max_relative = 1e-3
        );
    }

    #[test]
    fn closed_form_derivatives_chain_consistently() {
        let profile = integrate_profile(&burgers_params(0.09), 8.0, 1e-13).unwrap();
        let h = 1e-4;
        for &x in &[-6.0, -3.0, -1.0, -0.3] {
            let d = profile.u_bar_derivs(x).unwrap();
            let dm = profile.u_bar_derivs(x - h).unwrap();
            let dp = profile.u_bar_derivs(x + h).unwrap();
            let fd2 = (dp[0] - dm[0]) / (2.0 * h);
            let fd3 = (dp[1] - dm[1]) / (2.0 * h);
            assert_relative_eq!(fd2, d[1], max_relative = 1e-5);
            assert_relative_eq!(fd3, d[2], max_relative = 1e-5);
            // First derivative must match the ODE right-hand side itself.
            let rhs = profile_rhs(
                profile.params().flux(),
                1.0,
                0.09,
                0.5,
                x,
                profile.u_bar_at(x),
            )
            .unwrap();
            assert_relative_eq!(d[0], rhs, max_relative = 1e-10);
        }
    }

    #[test]
    fn envelope_constant_grows_with_heat_release() {
        let kappas: Vec<f64> = [0.02, 0.05, 0.09]
            .iter()
            .map(|&q| {
                integrate_profile(&burgers_params(q), 8.0, 1e-12)
                    .unwrap()
                    .kappa()
            })
            .collect();
        assert!(kappas[0] > 0.0);
        assert!(kappas[0] < kappas[1] && kappas[1] < kappas[2]);
    }

    #[test]
    fn stiffness_guard_trips_when_denominator_collapses() {
        // Drive the raw integrator with a speed 5e-9 under f′(u0): the very
        // first right-hand-side evaluation sits below the gap floor.
        let flux = ScalarFlux::burgers();
        let sigma = 1.0 - 5e-9;
        let err = integrate_backward(&flux, 1.0, 0.09, sigma, 1.0, &[-1.0], 1.0, 1e-10);
        assert!(matches!(err, Err(Error::StiffnessFailure { .. })));
    }

    #[test]
    fn verification_report_confirms_constructed_profile() {
        let profile = integrate_profile(&burgers_params(0.09), 8.0, 1e-13).unwrap();
        let report = verify_profile(&profile, 1e-4);
        assert!(report.ode_ok, "ODE residual {}", report.ode_residual_max);
        assert!(report.rh_ok, "RH residual {}", report.rh_residual);
        assert!(report.envelope_ok);
        assert_relative_eq!(report.kappa, profile.kappa(), max_relative = 1e-12);
        assert_eq!(report.rh_residual, 0.0);
    }

    #[test]
    fn verification_report_for_constant_profile() {
        let profile = integrate_profile(&burgers_params(0.0), 8.0, 1e-13).unwrap();
        let report = verify_profile(&profile, 1e-12);
        assert_eq!(report.kappa, 0.0);
        assert_eq!(report.ode_residual_max, 0.0);
        assert!(report.ode_ok && report.rh_ok && report.envelope_ok);
    }

    #[test]
    fn constant_wave_with_negative_speed() {
        // f(u) = u²/2 − u: σ = −0.5 with f′(0) = −1 < σ < f′(1) = 0.
        let flux = ScalarFlux::polynomial(vec![0.0, -1.0, 0.5], -2.0, 2.0).unwrap();
        let wave = WaveProfile::constant_wave(flux, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(wave.sigma(), -0.5);
        assert_eq!(wave.shape(), ReactantShape::BurnedConstant);
        assert_eq!(wave.u_bar_at(-3.0), 1.0);
        assert_eq!(wave.u_bar_at(2.0), 0.0);
        assert_eq!(wave.z_bar(-1.0), 0.0);
        assert_eq!(wave.z_bar(1.0), 1.0);
        assert_eq!(wave.z_bar_deriv(-1.0, 1), 0.0);
        assert_eq!(wave.u_bar_derivs(-1.0).unwrap(), [0.0; 3]);
        assert_eq!(wave.kappa(), 0.0);
    }

    #[test]
    fn constant_wave_with_positive_speed_keeps_exponential_reactant() {
        let wave = WaveProfile::constant_wave(ScalarFlux::burgers(), 1.0, 1.0, 0.5).unwrap();
        assert_eq!(wave.shape(), ReactantShape::Exponential);
        assert_relative_eq!(wave.z_bar(-1.0), (-2.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(
            wave.z_bar_deriv(-1.0, 1),
            2.0 * (-2.0f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            wave.z_bar_deriv(-1.0, 2),
            4.0 * (-2.0f64).exp(),
            max_relative = 1e-15
        );
        assert_eq!(wave.z_bar_deriv(1.0, 1), 0.0);
    }

    #[test]
    fn constant_wave_rejects_standing_and_noncompressive_jumps() {
        // f(u) = u² − u has f(1) = 0: a standing discontinuity.
        let standing = ScalarFlux::polynomial(vec![0.0, -1.0, 1.0], -2.0, 2.0).unwrap();
        assert!(matches!(
            WaveProfile::constant_wave(standing, 1.0, 1.0, 0.5),
            Err(Error::NonPositiveSpeed(_))
        ));
        let fast_ahead = fast_ahead_flux();
        assert!(matches!(
            WaveProfile::constant_wave(fast_ahead, 1.0, 1.0, 0.5),
            Err(Error::Inadmissible(AdmissibilityFailure::WrongEndState))
        ));
    }

    #[test]
    fn reactant_derivative_ladder_matches_powers() {
        let profile = integrate_profile(&burgers_params(0.09), 8.0, 1e-12).unwrap();
        let x = -1.2;
        let z = profile.z_bar(x);
        for order in 1..4u32 {
            assert_relative_eq!(
                profile.z_bar_deriv(x, order),
                2.0f64.powi(order as i32) * z,
                max_relative = 1e-14
            );
        }
        assert_eq!(profile.z_bar(0.5), 1.0);
        assert_eq!(profile.z_bar_deriv(0.5, 1), 0.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig {
                cases: 24, ..ProptestConfig::default()
            })]

            /// Sampled Burgers profiles match the closed-form oracle to
            /// within ten times the integration error target, and every
            /// constructed wave is compressive.
            #[test]
            fn burgers_profiles_match_oracle(
                q in 0.01f64..0.24,
                k in 0.2f64..3.0,
                extent in 2.0f64..10.0,
            ) {
                let params =
                    WaveParams::new(ScalarFlux::burgers(), k, q, 1.0, 0.5).unwrap();
                let target = 1e-11;
                let profile = integrate_profile(&params, extent, target).unwrap();
                prop_assert!(profile.sigma() > 0.0);
                for (&x, &u) in profile.grid_x().iter().zip(profile.u_bar()) {
                    let exact = burgers_profile_oracle(k, q, x);
                    prop_assert!(
                        (u - exact).abs() <= 10.0 * target,
                        "x = {}: {} vs {}", x, u, exact
                    );
                }
            }

            /// Shrinking the heat release at fixed sign preserves
            /// admissibility and shrinks the envelope constant.
            #[test]
            fn halved_release_stays_admissible(q in -0.24f64..0.24) {
                prop_assume!(q.abs() > 1e-3);
                let full = burgers_params(q);
                let half = burgers_params(0.5 * q);
                prop_assert!(check_existence(&full).is_ok());
                prop_assert!(check_existence(&half).is_ok());
                let kappa_full =
                    integrate_profile(&full, 4.0, 1e-10).unwrap().kappa();
                let kappa_half =
                    integrate_profile(&half, 4.0, 1e-10).unwrap().kappa();
                prop_assert!(kappa_half < kappa_full);
            }
        }
    }
}
