//! Scalar flux functions and the ideal-gas equation of state.
//!
//! These are the only physics inputs the rest of the crate consumes: a
//! convex scalar flux f(u) with derivatives up to third order (needed by the
//! twice-differentiated perturbation equations), and the pressure law
//! p(v, u, E) = Γ·(E − u²/2)/v with its partials (entries of the 3×3
//! quasilinear gas-dynamics matrix).
//!
//! Derivatives are closed-form per flux kind rather than automatic or
//! numerical differentiation, so third derivatives are exact. Each flux
//! carries an evaluation interval on which its derivative bounds are
//! certified; evaluation outside the interval is an error, not an
//! extrapolation, because the wave-existence conditions downstream are
//! interval statements about f′.

use crate::error::{Error, Result};

/// Highest derivative order any consumer needs.
pub const MAX_DERIVATIVE_ORDER: usize = 3;

/// Flux function families.
#[derive(Clone, Debug, PartialEq)]
pub enum FluxKind {
    /// f(u) = u²/2. Certified on the whole line.
    Burgers,
    /// f(u) = u²/2 + u³/6, uniformly convex on the certified interval
    /// [−0.9, ∞) where f″(u) = 1 + u ≥ 0.1.
    CubicConvex,
    /// f(u) = Σ_j coeffs[j]·uʲ with user-declared certification interval.
    Polynomial(Vec<f64>),
}

/// A scalar flux together with the interval on which evaluation is allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarFlux {
    kind: FluxKind,
    lo: f64,
    hi: f64,
}

impl ScalarFlux {
    /// Burgers flux f(u) = u²/2, valid everywhere.
    pub fn burgers() -> Self {
        ScalarFlux {
            kind: FluxKind::Burgers,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// Cubic convex flux f(u) = u²/2 + u³/6 on [−0.9, ∞), where
    /// f″(u) = 1 + u stays ≥ 0.1.
    pub fn cubic_convex() -> Self {
        ScalarFlux {
            kind: FluxKind::CubicConvex,
            lo: -0.9,
            hi: f64::INFINITY,
        }
    }

    /// Polynomial flux with ascending-power coefficients, certified on
    /// [lo, hi].
    pub fn polynomial(coeffs: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::RangeError {
                key: "flux.coeffs".to_string(),
                value: format!("{coeffs:?}"),
                reason: "coefficients must be nonempty and finite".to_string(),
            });
        }
        if !(lo < hi) {
            return Err(Error::RangeError {
                key: "flux.interval".to_string(),
                value: format!("[{lo}, {hi}]"),
                reason: "interval must satisfy lo < hi".to_string(),
            });
        }
        Ok(ScalarFlux {
            kind: FluxKind::Polynomial(coeffs),
            lo,
            hi,
        })
    }

    /// The flux family.
    pub fn kind(&self) -> &FluxKind {
        &self.kind
    }

    /// Certified evaluation interval as (lo, hi).
    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Evaluates the order-th derivative of f at u (order 0 is f itself).
    ///
    /// Errors with [`Error::OutOfInterval`] outside the certified interval
    /// and [`Error::UnsupportedOrder`] for order > 3.
    pub fn eval(&self, u: f64, order: usize) -> Result<f64> {
        if order > MAX_DERIVATIVE_ORDER {
            return Err(Error::UnsupportedOrder(order));
        }
        if !(u >= self.lo && u <= self.hi) {
            return Err(Error::OutOfInterval {
                u,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(match &self.kind {
            FluxKind::Burgers => match order {
                0 => 0.5 * u * u,
                1 => u,
                2 => 1.0,
                _ => 0.0,
            },
            FluxKind::CubicConvex => match order {
                0 => 0.5 * u * u + u * u * u / 6.0,
                1 => u + 0.5 * u * u,
                2 => 1.0 + u,
                _ => 1.0,
            },
            FluxKind::Polynomial(coeffs) => polynomial_derivative(coeffs, u, order),
        })
    }
}

/// Order-th derivative of Σ_j c_j uʲ by Horner evaluation of the derived
/// coefficient sequence c_j · j·(j−1)·…·(j−order+1).
fn polynomial_derivative(coeffs: &[f64], u: f64, order: usize) -> f64 {
    let mut acc = 0.0;
    for (j, &c) in coeffs.iter().enumerate().rev() {
        if j < order {
            break;
        }
        let mut falling = 1.0;
        for step in 0..order {
            falling *= (j - step) as f64;
        }
        acc = acc * u + c * falling;
    }
    acc
}

/// Ideal-gas pressure law p(v, u, E) = Γ·(E − u²/2)/v with temperature
/// T = e/c_heat.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdealGasEos {
    gamma: f64,
    c_heat: f64,
}

/// Pressure and its partial derivatives with respect to the conserved state
/// (v, u, E) at fixed values of the other two.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PressurePartials {
    /// Pressure p.
    pub p: f64,
    /// ∂p/∂v.
    pub p_v: f64,
    /// ∂p/∂u.
    pub p_u: f64,
    /// ∂p/∂E.
    pub p_e: f64,
}

impl IdealGasEos {
    /// Builds an equation of state from the Gruneisen constant Γ > 0 and
    /// specific heat c > 0.
    pub fn new(gamma: f64, c_heat: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::RangeError {
                key: "eos.gamma".to_string(),
                value: gamma.to_string(),
                reason: "Gruneisen constant must be positive".to_string(),
            });
        }
        if !(c_heat > 0.0 && c_heat.is_finite()) {
            return Err(Error::RangeError {
                key: "eos.c_heat".to_string(),
                value: c_heat.to_string(),
                reason: "specific heat must be positive".to_string(),
            });
        }
        Ok(IdealGasEos { gamma, c_heat })
    }

    /// Gruneisen constant Γ.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Specific heat c.
    pub fn c_heat(&self) -> f64 {
        self.c_heat
    }

    /// Specific internal energy e = E − u²/2.
    pub fn internal_energy(&self, u: f64, e_total: f64) -> f64 {
        e_total - 0.5 * u * u
    }

    /// Temperature T = e/c of a state with internal energy e.
    pub fn temperature(&self, internal_energy: f64) -> f64 {
        internal_energy / self.c_heat
    }

    /// Pressure and its partials at the state (v, u, E).
    ///
    /// Errors with [`Error::NonPhysicalState`] when v ≤ 0 or the internal
    /// energy E − u²/2 is not positive.
    pub fn pressure_partials(&self, v: f64, u: f64, e_total: f64) -> Result<PressurePartials> {
        let e = self.internal_energy(u, e_total);
        if !(v > 0.0 && e > 0.0) {
            return Err(Error::NonPhysicalState { v, e });
        }
        let p = self.gamma * e / v;
        Ok(PressurePartials {
            p,
            p_v: -self.gamma * e / (v * v),
            p_u: -self.gamma * u / v,
            p_e: self.gamma / v,
        })
    }

    /// Sound speed √(p·p_E − p_v); for the ideal gas this equals
    /// √(Γ(Γ+1)e)/v.
    ///
    /// Errors with [`Error::NotHyperbolic`] when the discriminant
    /// p·p_E − p_v is not positive.
    pub fn sound_speed(&self, v: f64, u: f64, e_total: f64) -> Result<f64> {
        let parts = self.pressure_partials(v, u, e_total)?;
        hyperbolic_speed(&parts)
    }
}

/// The acoustic speed √(p·p_E − p_v) from precomputed partials; errors when
/// the hyperbolicity discriminant is not positive.
pub fn hyperbolic_speed(parts: &PressurePartials) -> Result<f64> {
    let disc = parts.p * parts.p_e - parts.p_v;
    if disc <= 0.0 {
        return Err(Error::NotHyperbolic { discriminant: disc });
    }
    Ok(disc.sqrt())
}
