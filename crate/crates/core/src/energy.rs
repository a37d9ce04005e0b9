//! Weighted Sobolev norms, composite energies, and decay-rate tooling.
//!
//! The stability argument measures perturbations in exponentially weighted
//! L² spaces. Behind the shock two different weights are used — a heavier
//! one paired with v and a lighter one paired with ζ — both equivalent to
//! e^{ε|x|} within a factor e^{2C/ε}; ahead of the shock the plain weight
//! e^{εx} serves both fields. The composite energy is a coefficient-
//! weighted sum of twelve components (two fields × two sides × derivative
//! orders 0..2); the coefficient 12-tuple must satisfy ten arithmetic
//! inequalities for the summed dissipation bookkeeping to close, which
//! this module checks explicitly.

use crate::error::{Error, Result};
use crate::profile::WaveProfile;
use crate::sim::{PerturbationState, TwinGrid};

/// Which half-line a weight lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Weight shape: the two corrected left weights and the plain right one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightVariant {
    /// ϱ(x) = exp(−εx − ∫₀ˣ C e^{−ε|s|} ds), left side; the heavier
    /// weight, paired with v.
    One,
    /// ϱ(x) = exp(−εx + ∫₀ˣ C e^{−ε|s|} ds), left side; the lighter
    /// weight, paired with ζ.
    Two,
    /// ϱ(x) = exp(εx), right side.
    Plain,
}

/// A fully specified exponential weight.
#[derive(Clone, Copy, Debug)]
pub struct WeightSpec {
    epsilon: f64,
    c: f64,
    side: Side,
    variant: WeightVariant,
}

impl WeightSpec {
    fn validated(epsilon: f64, c: f64, side: Side, variant: WeightVariant) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(range_error("energy.epsilon", epsilon, "weight rate must be positive"));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(range_error("energy.C", c, "weight correction must be nonnegative"));
        }
        Ok(WeightSpec {
            epsilon,
            c,
            side,
            variant,
        })
    }

    /// Heavier left weight (exponent correction added).
    pub fn one(epsilon: f64, c: f64) -> Result<Self> {
        Self::validated(epsilon, c, Side::Left, WeightVariant::One)
    }

    /// Lighter left weight (exponent correction subtracted).
    pub fn two(epsilon: f64, c: f64) -> Result<Self> {
        Self::validated(epsilon, c, Side::Left, WeightVariant::Two)
    }

    /// Plain right weight e^{εx}.
    pub fn plain(epsilon: f64) -> Result<Self> {
        Self::validated(epsilon, 0.0, Side::Right, WeightVariant::Plain)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn variant(&self) -> WeightVariant {
        self.variant
    }
}

fn range_error(key: &str, value: f64, reason: &str) -> Error {
    Error::RangeError {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

/// Evaluates a weight at x. The correction integral is closed-form,
/// ∫₀ˣ C e^{−ε|s|} ds = sign(x)·(C/ε)(1 − e^{−ε|x|}), never quadrature.
/// x = 0 is valid for every variant (all weights equal 1 there).
pub fn weight_value(spec: &WeightSpec, x: f64) -> Result<f64> {
    let wrong_side = match spec.side {
        Side::Left => x > 0.0,
        Side::Right => x < 0.0,
    };
    if wrong_side {
        return Err(Error::WrongSide { x });
    }
    let e = spec.epsilon;
    Ok(match spec.variant {
        WeightVariant::Plain => (e * x).exp(),
        WeightVariant::One | WeightVariant::Two => {
            // x ≤ 0 here: the correction integral is −(C/ε)(1 − e^{εx}).
            let correction = -(spec.c / e) * (1.0 - (e * x).exp());
            match spec.variant {
                WeightVariant::One => (-e * x - correction).exp(),
                _ => (-e * x + correction).exp(),
            }
        }
    })
}

/// Second-order first derivative on a uniform grid: centered in the
/// interior, one-sided three-point stencils at both ends.
fn first_derivative(field: &[f64], h: f64) -> Vec<f64> {
    let n = field.len();
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * field[0] + 4.0 * field[1] - field[2]) / (2.0 * h);
    for j in 1..n - 1 {
        d[j] = (field[j + 1] - field[j - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * field[n - 1] - 4.0 * field[n - 2] + field[n - 3]) / (2.0 * h);
    d
}

/// Second-order second derivative: centered in the interior, one-sided
/// four-point stencils at both ends.
fn second_derivative(field: &[f64], h: f64) -> Vec<f64> {
    let n = field.len();
    let h2 = h * h;
    let mut d = vec![0.0; n];
    d[0] = (2.0 * field[0] - 5.0 * field[1] + 4.0 * field[2] - field[3]) / h2;
    for j in 1..n - 1 {
        d[j] = (field[j + 1] - 2.0 * field[j] + field[j - 1]) / h2;
    }
    d[n - 1] =
        (2.0 * field[n - 1] - 5.0 * field[n - 2] + 4.0 * field[n - 3] - field[n - 4]) / h2;
    d
}

fn derivative_order(field: &[f64], h: f64, order: usize) -> Result<Vec<f64>> {
    if field.len() < 4 {
        return Err(range_error(
            "energy.min_nodes",
            field.len() as f64,
            "weighted norms need at least four nodes per side",
        ));
    }
    Ok(match order {
        0 => field.to_vec(),
        1 => first_derivative(field, h),
        2 => second_derivative(field, h),
        _ => return Err(Error::UnsupportedOrder(order)),
    })
}

/// Weighted quadrature of g² over one cell-centered half-grid, covering
/// the full interval by linearly extrapolating g to the shock and outer
/// endpoints. Returns (integral, outer-boundary contribution): the latter
/// is the outermost half-cell plus first full cell, used for tail checks.
fn integrate_half(
    g: &[f64],
    h: f64,
    node_x: impl Fn(usize) -> f64,
    shock_x: f64,
    outer_x: f64,
    weight: impl Fn(f64) -> Result<f64>,
    left_side: bool,
) -> Result<(f64, f64)> {
    let n = g.len();
    let f = |value: f64, x: f64| -> Result<f64> { Ok(value * value * weight(x)?) };
    // Endpoint values of g by linear extrapolation from the two nearest
    // nodes; on the left grid the shock is past the last node.
    let (g_shock, g_outer, shock_idx, outer_idx) = if left_side {
        (
            1.5 * g[n - 1] - 0.5 * g[n - 2],
            1.5 * g[0] - 0.5 * g[1],
            n - 1,
            0,
        )
    } else {
        (
            1.5 * g[0] - 0.5 * g[1],
            1.5 * g[n - 1] - 0.5 * g[n - 2],
            0,
            n - 1,
        )
    };
    let f_shock = f(g_shock, shock_x)?;
    let f_outer = f(g_outer, outer_x)?;
    let mut nodes = Vec::with_capacity(n);
    for (j, &v) in g.iter().enumerate() {
        nodes.push(f(v, node_x(j))?);
    }
    let mut integral = 0.5 * (f_shock + nodes[shock_idx]) * (0.5 * h)
        + 0.5 * (f_outer + nodes[outer_idx]) * (0.5 * h);
    for w in nodes.windows(2) {
        integral += 0.5 * (w[0] + w[1]) * h;
    }
    let outer_next = if left_side { 1 } else { n - 2 };
    let boundary = 0.5 * (f_outer + nodes[outer_idx]) * (0.5 * h)
        + 0.5 * (nodes[outer_idx] + nodes[outer_next]) * h;
    Ok((integral, boundary))
}

/// Integrates (∂ᵏg)²·ϱ over one side of the grid for a single order k.
fn weighted_component(
    grid: &TwinGrid,
    field: &[f64],
    order: usize,
    left_side: bool,
    weight: impl Fn(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let g = derivative_order(field, grid.h(), order)?;
    if left_side {
        integrate_half(
            &g,
            grid.h(),
            |j| grid.x_minus(j),
            0.0,
            -grid.extent_minus(),
            weight,
            true,
        )
    } else {
        integrate_half(
            &g,
            grid.h(),
            |j| grid.x_plus(j),
            0.0,
            grid.extent_plus(),
            weight,
            false,
        )
    }
}

/// √(Σ_{l≤k} ∫ (∂ˡv)² e^{ε|x|} dx) over both half-lines by composite
/// trapezoid quadrature with matching-order one-sided stencils at the
/// shock and outer boundaries.
///
/// Errors with [`Error::TailNotResolved`] when the outer-boundary cells
/// contribute more than 1% of the total: the weighted integrand has not
/// decayed inside the covered extent.
pub fn weighted_sobolev_norm(
    grid: &TwinGrid,
    minus: &[f64],
    plus: &[f64],
    epsilon: f64,
    order: usize,
) -> Result<f64> {
    if order > 2 {
        return Err(Error::UnsupportedOrder(order));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(range_error("energy.epsilon", epsilon, "weight rate must be positive"));
    }
    assert_eq!(minus.len(), grid.n_minus());
    assert_eq!(plus.len(), grid.n_plus());
    let mut total = 0.0;
    let mut boundary = 0.0;
    for l in 0..=order {
        let (i_m, b_m) = weighted_component(grid, minus, l, true, |x| Ok((-epsilon * x).exp()))?;
        let (i_p, b_p) = weighted_component(grid, plus, l, false, |x| Ok((epsilon * x).exp()))?;
        total += i_m + i_p;
        boundary += b_m + b_p;
    }
    if total > 0.0 {
        let fraction = boundary / total;
        if fraction > 0.01 {
            return Err(Error::TailNotResolved { fraction });
        }
    }
    Ok(total.sqrt())
}

/// The coefficient 12-tuple weighting the energy components: unprimed for
/// v, primed for ζ, indexed by derivative order.
#[derive(Clone, Copy, Debug)]
pub struct Coefficients {
    pub c_minus: [f64; 3],
    pub c_plus: [f64; 3],
    pub cp_minus: [f64; 3],
    pub cp_plus: [f64; 3],
}

impl Coefficients {
    /// All-ones tuple: the plain (uncertified) composite energy, still an
    /// equivalent norm, usable when the dissipation certificate is
    /// infeasible at the given q.
    pub fn unit() -> Self {
        Coefficients {
            c_minus: [1.0; 3],
            c_plus: [1.0; 3],
            cp_minus: [1.0; 3],
            cp_plus: [1.0; 3],
        }
    }

    fn min(&self) -> f64 {
        self.iter().fold(f64::INFINITY, f64::min)
    }

    fn max(&self) -> f64 {
        self.iter().fold(0.0, f64::max)
    }

    fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.c_minus
            .iter()
            .chain(&self.c_plus)
            .chain(&self.cp_minus)
            .chain(&self.cp_plus)
            .copied()
    }
}

/// Builds the explicit coefficient tuple from (ω, C̃): behind-the-shock
/// coefficients shrink with ω/C̃ while every ahead coefficient is 1; the
/// last primed-left coefficient takes the largest value allowed by its
/// two constraints.
fn explicit_tuple(omega: f64, c_tilde: f64) -> Coefficients {
    let c1m = omega / (4.0 * c_tilde);
    let c2m = c1m.min(c1m * omega / (2.0 * c_tilde));
    let cp0m = omega / (8.0 * c_tilde);
    let cp1m = (omega / (8.0 * c_tilde)).min(omega * c1m / c_tilde);
    let cp2m = (omega / (2.0 * c_tilde)).min(omega * c1m / c_tilde);
    Coefficients {
        c_minus: [1.0, c1m, c2m],
        c_plus: [1.0; 3],
        cp_minus: [cp0m, cp1m, cp2m],
        cp_plus: [1.0; 3],
    }
}

/// Checks the ten coefficient inequalities at the given |q| and κ(q);
/// returns the 1-based index and positive margin of the first failure.
fn check_inequalities(
    t: &Coefficients,
    omega: f64,
    c_tilde: f64,
    kappa: f64,
    q_abs: f64,
) -> Result<()> {
    let rk = kappa.sqrt();
    let c_sum = t.c_minus[0] + t.c_minus[1] + t.c_minus[2];
    let cp_sum = t.cp_minus[0] + t.cp_minus[1] + t.cp_minus[2];
    let checks = [
        // Nonpositive factor in front of each boundary or interior term:
        c_tilde * (c_sum * rk + cp_sum) - 0.5 * omega * t.c_plus[0],
        c_tilde * (rk * (t.c_minus[1] + t.c_minus[2]) + cp_sum) - 0.5 * omega * t.c_minus[0],
        c_tilde * q_abs * t.c_minus[1] - 0.5 * omega * t.cp_minus[1],
        c_tilde * t.c_minus[2] - 0.5 * omega * t.c_minus[1],
        c_tilde * q_abs * t.c_minus[2] - 0.5 * omega * t.cp_minus[2],
        c_tilde * cp_sum - 0.5 * omega * t.cp_plus[0],
        c_tilde * (t.cp_minus[1] + t.cp_minus[2]) - 0.5 * omega * t.cp_plus[1],
        c_tilde * t.cp_minus[2] - 0.5 * omega * t.cp_plus[2],
        c_tilde * t.cp_minus[2] - omega * t.c_minus[1],
        c_tilde * t.c_minus[2] - omega * t.c_plus[1],
    ];
    for (i, &margin) in checks.iter().enumerate() {
        if margin > 0.0 {
            return Err(Error::Infeasible {
                index: i + 1,
                margin,
            });
        }
    }
    Ok(())
}

/// The scalar constants of the dissipation bookkeeping: speed gap μ and
/// bound ν, derived rates ε = k/ν and ω = με/4, amplitude bound η, the
/// boundary-lemma constant C̃, the profile decay envelope κ(q), the
/// duality parameter δ₁, the weight-correction constant C, and a
/// coefficient tuple verified against the ten inequalities at the stored
/// |q|.
#[derive(Clone, Debug)]
pub struct EstimateConstants {
    mu: f64,
    nu: f64,
    epsilon: f64,
    omega: f64,
    eta: f64,
    c_f: f64,
    c_tilde: f64,
    kappa_q: f64,
    q: f64,
    delta1: f64,
    c_weight: f64,
    coeffs: Coefficients,
}

impl EstimateConstants {
    /// Validates and assembles the constants: ε = k/ν, ω = με/4 exactly,
    /// δ₁ = 1 at q = 0 and με/(8k|q|) otherwise, the weight-correction
    /// constant from its κ-dependent maximum formula, and the explicit
    /// coefficient tuple, checked against all ten inequalities.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mu: f64,
        nu: f64,
        k: f64,
        q: f64,
        eta: f64,
        c_f: f64,
        c_tilde: f64,
        kappa_q: f64,
    ) -> Result<Self> {
        for (key, value, lo_ok) in [
            ("constants.mu", mu, mu > 0.0),
            ("constants.nu", nu, nu > 0.0),
            ("constants.k", k, k > 0.0),
            ("constants.eta", eta, eta > 0.0),
            ("constants.c_f", c_f, c_f > 0.0),
            ("constants.c_tilde", c_tilde, c_tilde > 0.0),
            ("constants.kappa_q", kappa_q, kappa_q >= 0.0),
            ("constants.q", q, q.is_finite()),
        ] {
            if !(lo_ok && value.is_finite()) {
                return Err(range_error(key, value, "must be positive and finite"));
            }
        }
        let epsilon = k / nu;
        let omega = mu * epsilon / 4.0;
        let delta1 = if q == 0.0 {
            1.0
        } else {
            mu * epsilon / (8.0 * k * q.abs())
        };
        let kq = kappa_q;
        let c_weight = (2.0 / mu)
            * [
                kq * (11.0 * c_f + 2.0 * eta * c_f + kq * (c_f + 3.0 + kq)) / 2.0
                    + (1.0 + eta * (7.0 + eta) + delta1 * k * q.abs()) / 2.0,
                kq * (4.0 * c_f + c_f * kq + 1.0) / 2.0,
                kq * (c_f + 1.0) / 2.0,
                (k + k * k + k * k * k) / nu,
            ]
            .into_iter()
            .fold(0.0f64, f64::max);
        let coeffs = explicit_tuple(omega, c_tilde);
        check_inequalities(&coeffs, omega, c_tilde, kappa_q, q.abs())?;
        Ok(EstimateConstants {
            mu,
            nu,
            epsilon,
            omega,
            eta,
            c_f,
            c_tilde,
            kappa_q,
            q,
            delta1,
            c_weight,
            coeffs,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn c_f(&self) -> f64 {
        self.c_f
    }

    pub fn c_tilde(&self) -> f64 {
        self.c_tilde
    }

    pub fn kappa_q(&self) -> f64 {
        self.kappa_q
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn delta1(&self) -> f64 {
        self.delta1
    }

    /// Weight-correction constant C recommended by the bookkeeping.
    pub fn c_weight(&self) -> f64 {
        self.c_weight
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coeffs
    }

    /// Trace-splitting parameter of the damping estimate: the smaller of
    /// its two absorption ceilings, ω/(2C̃) against the dissipation and 1
    /// as the scale-free cap.
    pub fn delta2(&self) -> f64 {
        (self.omega / (2.0 * self.c_tilde)).min(1.0)
    }
}

/// Re-derives the explicit tuple for the stored (ω, C̃) and verifies the
/// ten inequalities at a (possibly different) release q, keeping the
/// stored κ envelope. Feasibility is monotone in |q|, so sweeping q
/// locates the threshold q₀ where the certificate is lost.
pub fn select_coefficients(constants: &EstimateConstants, q: f64) -> Result<Coefficients> {
    let coeffs = explicit_tuple(constants.omega, constants.c_tilde);
    check_inequalities(
        &coeffs,
        constants.omega,
        constants.c_tilde,
        constants.kappa_q,
        q.abs(),
    )?;
    Ok(coeffs)
}

/// The three weights sharing one (ε, C): the heavier left weight for v,
/// the lighter left weight for ζ, the plain right weight for both.
#[derive(Clone, Copy, Debug)]
pub struct WeightFamily {
    pub one: WeightSpec,
    pub two: WeightSpec,
    pub plain: WeightSpec,
}

impl WeightFamily {
    pub fn new(epsilon: f64, c: f64) -> Result<Self> {
        Ok(WeightFamily {
            one: WeightSpec::one(epsilon, c)?,
            two: WeightSpec::two(epsilon, c)?,
            plain: WeightSpec::plain(epsilon)?,
        })
    }
}

/// All twelve weighted components at one instant plus their
/// coefficient-weighted total.
#[derive(Clone, Copy, Debug)]
pub struct EnergyReport {
    pub t: f64,
    /// ∫(∂ᵏv)²ϱ₋,₁ behind the shock, k = 0, 1, 2.
    pub v_minus: [f64; 3],
    /// ∫(∂ᵏv)²ϱ₊ ahead of the shock.
    pub v_plus: [f64; 3],
    /// ∫(∂ᵏζ)²ϱ₋,₂ behind the shock.
    pub zeta_minus: [f64; 3],
    /// ∫(∂ᵏζ)²ϱ₊ ahead of the shock.
    pub zeta_plus: [f64; 3],
    pub total: f64,
}

/// Evaluates the twelve energy components of a state with the pairing
/// v ↔ heavier left weight, ζ ↔ lighter left weight, plain weight on the
/// right, and sums them with the given coefficients.
pub fn total_energy(
    state: &PerturbationState,
    coeffs: &Coefficients,
    family: &WeightFamily,
) -> Result<EnergyReport> {
    let grid = state.grid();
    let mut report = EnergyReport {
        t: state.t(),
        v_minus: [0.0; 3],
        v_plus: [0.0; 3],
        zeta_minus: [0.0; 3],
        zeta_plus: [0.0; 3],
        total: 0.0,
    };
    let tail_guard = |total: f64, boundary: f64| -> Result<()> {
        if total > 0.0 {
            let fraction = boundary / total;
            if fraction > 0.01 {
                return Err(Error::TailNotResolved { fraction });
            }
        }
        Ok(())
    };
    for k in 0..3 {
        let (vm, bm) = weighted_component(grid, state.v_minus(), k, true, |x| {
            weight_value(&family.one, x)
        })?;
        tail_guard(vm, bm)?;
        let (vp, bp) = weighted_component(grid, state.v_plus(), k, false, |x| {
            weight_value(&family.plain, x)
        })?;
        tail_guard(vp, bp)?;
        let (zm, bzm) = weighted_component(grid, state.zeta_minus(), k, true, |x| {
            weight_value(&family.two, x)
        })?;
        tail_guard(zm, bzm)?;
        let (zp, bzp) = weighted_component(grid, state.zeta_plus(), k, false, |x| {
            weight_value(&family.plain, x)
        })?;
        tail_guard(zp, bzp)?;
        report.v_minus[k] = vm;
        report.v_plus[k] = vp;
        report.zeta_minus[k] = zm;
        report.zeta_plus[k] = zp;
        report.total += coeffs.c_minus[k] * vm
            + coeffs.c_plus[k] * vp
            + coeffs.cp_minus[k] * zm
            + coeffs.cp_plus[k] * zp;
    }
    Ok(report)
}

/// Bounds [m, M] such that m·‖(v,ζ)‖²_{H²_ε} ≤ total ≤ M·‖(v,ζ)‖²_{H²_ε},
/// from the coefficient extremes and the weight sandwich factor e^{2C/ε}.
pub fn equivalence_bounds(coeffs: &Coefficients, family: &WeightFamily) -> (f64, f64) {
    let sandwich = (2.0 * family.one.c() / family.one.epsilon()).exp();
    (coeffs.min() / sandwich, coeffs.max() * sandwich)
}

/// Least-squares exponential decay rate of an energy series: fits
/// log E against t after discarding the leading transient fraction of
/// samples, returning (θ̂, r²) with θ̂ the sign-flipped slope.
///
/// Errors with [`Error::NonPositiveEnergy`] if any windowed sample is not
/// strictly positive.
pub fn fit_decay_rate(series: &[(f64, f64)], transient_fraction: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&transient_fraction) {
        return Err(range_error(
            "energy.transient_fraction",
            transient_fraction,
            "must lie in [0, 1)",
        ));
    }
    let skip = (series.len() as f64 * transient_fraction).floor() as usize;
    let window = &series[skip..];
    if window.len() < 2 {
        return Err(range_error(
            "energy.series_len",
            window.len() as f64,
            "need at least two samples after the transient",
        ));
    }
    let mut points = Vec::with_capacity(window.len());
    for (i, &(t, e)) in window.iter().enumerate() {
        if !(e > 0.0) {
            return Err(Error::NonPositiveEnergy {
                index: skip + i,
                value: e,
            });
        }
        points.push((t, e.ln()));
    }
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    let mut syy = 0.0;
    for &(t, y) in &points {
        stt += (t - mean_t) * (t - mean_t);
        sty += (t - mean_t) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if stt == 0.0 {
        return Err(range_error(
            "energy.series_span",
            0.0,
            "time window has zero span",
        ));
    }
    let slope = sty / stt;
    let ss_res = syy - slope * sty;
    // Variance at the level of log-value rounding noise means the flat
    // fit is exact.
    let noise_floor = {
        let scale = 1e-13 * (1.0 + mean_y.abs());
        scale * scale * n
    };
    let r2 = if syy > noise_floor {
        1.0 - ss_res / syy
    } else {
        1.0
    };
    Ok((-slope, r2))
}

/// Largest violation of the damping inequality
/// ‖·‖(t) ≤ C e^{−ϑ(t−t₀)} ‖·‖(t₀) + ∫ C e^{−ϑ(t−s)} low(s) ds
/// along a sampled trajectory of (t, full norm, low-order norm); the
/// convolution uses trapezoid quadrature on the given samples. A
/// nonpositive result means the inequality held at every sample.
pub fn damping_residual(series: &[(f64, f64, f64)], c: f64, theta: f64) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    let t0 = series[0].0;
    let h0 = series[0].1;
    let mut worst = f64::NEG_INFINITY;
    for (i, &(t, full, _)) in series.iter().enumerate() {
        let mut convolution = 0.0;
        for w in series[..=i].windows(2) {
            let (s_a, _, low_a) = w[0];
            let (s_b, _, low_b) = w[1];
            let f_a = (-theta * (t - s_a)).exp() * low_a;
            let f_b = (-theta * (t - s_b)).exp() * low_b;
            convolution += 0.5 * (f_a + f_b) * (s_b - s_a);
        }
        let rhs = c * (-theta * (t - t0)).exp() * h0 + c * convolution;
        worst = worst.max(full - rhs);
    }
    worst
}

/// Derives the speed constants (μ, ν) from a profile and amplitude bound:
/// μ is half the smallest of the frame speed, the characteristic gaps on
/// both sides, and the reaction rate (headroom for η-sized excursions);
/// ν bounds the perturbed shock speed from above by the extreme flux
/// slope over the η-extended state interval.
pub fn speed_bounds(profile: &WaveProfile, eta: f64) -> Result<(f64, f64)> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(range_error("constants.eta", eta, "must be positive"));
    }
    let params = profile.params();
    let flux = params.flux();
    let sigma = profile.sigma();
    let (lo, hi) = state_hull(profile, eta);
    let (wl, wh) = wave_range(profile);
    let mut gap_left = f64::INFINITY;
    let mut slope_max = f64::NEG_INFINITY;
    let samples = 400;
    for i in 0..=samples {
        let u = lo + (hi - lo) * i as f64 / samples as f64;
        slope_max = slope_max.max(flux.eval(u, 1)?);
        // The gap behind the shock only samples the wave's own range
        // (endpoints included exactly).
        let w = wl + (wh - wl) * i as f64 / samples as f64;
        gap_left = gap_left.min((flux.eval(w, 1)? - sigma).abs());
    }
    let gap_right = (sigma - flux.eval(0.0, 1)?).abs();
    let mu = 0.5 * sigma.abs().min(gap_left).min(gap_right).min(params.k());
    let nu = sigma.abs().max(slope_max.abs()) + eta;
    Ok((mu, nu))
}

/// Lipschitz constant C̃ of the jump-condition speed: |ψ′ − σ|² ≤
/// C̃(v(0⁻)² + v(0⁺)²) for traces up to 2η, via 8·max|f′ − σ|²/u₀² over
/// the two trace intervals.
pub fn boundary_constant(profile: &WaveProfile, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(range_error("constants.eta", eta, "must be positive"));
    }
    let params = profile.params();
    let flux = params.flux();
    let sigma = profile.sigma();
    let u0 = params.u0();
    let samples = 200;
    let mut worst = 0.0f64;
    for center in [u0, 0.0] {
        for i in 0..=samples {
            let u = center - 2.0 * eta + 4.0 * eta * i as f64 / samples as f64;
            worst = worst.max((flux.eval(u, 1)? - sigma).abs());
        }
    }
    Ok(8.0 * worst * worst / (u0 * u0))
}

fn wave_range(profile: &WaveProfile) -> (f64, f64) {
    let u0 = profile.params().u0();
    let ui = profile.u_minus_inf();
    (u0.min(ui), u0.max(ui))
}

fn state_hull(profile: &WaveProfile, eta: f64) -> (f64, f64) {
    let (wl, wh) = wave_range(profile);
    (wl.min(0.0) - 2.0 * eta, wh.max(0.0) + 2.0 * eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::ScalarFlux;
    use crate::profile::{integrate_profile, WaveParams};
    use crate::sim::init_state;
    use approx::assert_relative_eq;

    fn burgers_profile(q: f64) -> WaveProfile {
        let params = WaveParams::new(ScalarFlux::burgers(), 1.0, q, 1.0, 0.5).unwrap();
        integrate_profile(&params, 16.0, 1e-12).unwrap()
    }

    /// Constants with ω = 0.1 exactly: μ = 0.4, ν = 1, k = 1 → ε = 1.
    fn reference_constants(q: f64, kappa: f64) -> Result<EstimateConstants> {
        EstimateConstants::new(0.4, 1.0, 1.0, q, 0.25, 1.0, 10.0, kappa)
    }

    #[test]
    fn weight_reference_values() {
        let plain = WeightSpec::plain(1.0).unwrap();
        assert_relative_eq!(weight_value(&plain, 2.0).unwrap(), (2.0f64).exp(), max_relative = 1e-14);
        let one_c0 = WeightSpec::one(1.0, 0.0).unwrap();
        assert_relative_eq!(weight_value(&one_c0, -3.0).unwrap(), (3.0f64).exp(), max_relative = 1e-14);
        // The lighter variant at (ε=1, C=1, x=−1): exp(1 − (1 − e⁻¹)).
        let two = WeightSpec::two(1.0, 1.0).unwrap();
        assert_relative_eq!(
            weight_value(&two, -1.0).unwrap(),
            ((-1.0f64).exp()).exp(),
            max_relative = 1e-14
        );
        // Every weight equals 1 at the shock.
        let one = WeightSpec::one(1.0, 1.0).unwrap();
        assert_eq!(weight_value(&one, 0.0).unwrap(), 1.0);
        assert_eq!(weight_value(&two, 0.0).unwrap(), 1.0);
        assert_eq!(weight_value(&plain, 0.0).unwrap(), 1.0);
        assert!(matches!(weight_value(&one, 0.5), Err(Error::WrongSide { .. })));
        assert!(matches!(weight_value(&plain, -0.5), Err(Error::WrongSide { .. })));
    }

    #[test]
    fn heavier_weight_matches_quadrature_oracle() {
        // exp(−εx − ∫₀ˣ Ce^{−ε|s|} ds) at (ε=1, C=1, x=−1): the integral
        // ∫₀⁻¹ e^{s} ds = e⁻¹ − 1 gives exp(1 + 1 − e⁻¹).
        let one = WeightSpec::one(1.0, 1.0).unwrap();
        let n = 20000;
        let mut integral = 0.0;
        for i in 0..n {
            let s0 = -(i as f64) / n as f64;
            let s1 = -(i as f64 + 1.0) / n as f64;
            integral += 0.5 * ((-s0.abs()).exp() + (-s1.abs()).exp()) * (s1 - s0);
        }
        let oracle = (1.0 - integral).exp();
        assert_relative_eq!(weight_value(&one, -1.0).unwrap(), oracle, max_relative = 1e-8);
        assert_relative_eq!(
            weight_value(&one, -1.0).unwrap(),
            (2.0 - (-1.0f64).exp()).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn weights_are_sandwiched_by_plain_exponential() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let epsilon: f64 = rng.gen_range(0.1..3.0);
            let c: f64 = rng.gen_range(0.0..3.0);
            let x: f64 = -rng.gen_range(0.0..10.0);
            let band = (2.0 * c / epsilon).exp();
            let plain = (epsilon * x.abs()).exp();
            for spec in [
                WeightSpec::one(epsilon, c).unwrap(),
                WeightSpec::two(epsilon, c).unwrap(),
            ] {
                let w = weight_value(&spec, x).unwrap();
                assert!(w <= plain * band * (1.0 + 1e-12));
                assert!(w >= plain / band * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn sobolev_norm_of_decaying_exponential() {
        // v = e^{−x} on ℝ⁺ (zero behind): ∫ e^{−2x}eˣ dx = 1.
        let grid = TwinGrid::new(0.005, 1.0, 14.0).unwrap();
        let minus = vec![0.0; grid.n_minus()];
        let plus: Vec<f64> = (0..grid.n_plus()).map(|j| (-grid.x_plus(j)).exp()).collect();
        let norm = weighted_sobolev_norm(&grid, &minus, &plus, 1.0, 0).unwrap();
        assert_relative_eq!(norm, 1.0, max_relative = 1e-4);
        let zeros = vec![0.0; grid.n_plus()];
        let zero_minus = vec![0.0; grid.n_minus()];
        assert_eq!(
            weighted_sobolev_norm(&grid, &zero_minus, &zeros, 1.0, 2).unwrap(),
            0.0
        );
    }

    #[test]
    fn first_order_sobolev_norm_matches_analytic_value() {
        // v = e^{−2|x|}, ε = 1, k = 1: ∫(v² + v_x²)e^{|x|} = 10/3.
        let grid = TwinGrid::new(0.005, 12.0, 12.0).unwrap();
        let minus: Vec<f64> = (0..grid.n_minus())
            .map(|j| (-2.0 * grid.x_minus(j).abs()).exp())
            .collect();
        let plus: Vec<f64> = (0..grid.n_plus())
            .map(|j| (-2.0 * grid.x_plus(j).abs()).exp())
            .collect();
        let norm = weighted_sobolev_norm(&grid, &minus, &plus, 1.0, 1).unwrap();
        assert_relative_eq!(norm, (10.0f64 / 3.0).sqrt(), max_relative = 1e-4);
    }

    #[test]
    fn sobolev_quadrature_converges_at_second_order() {
        let analytic = (10.0f64 / 3.0).sqrt();
        let mut errors = Vec::new();
        for level in 0..3 {
            let h = 0.04 / f64::powi(2.0, level);
            let grid = TwinGrid::new(h, 12.0, 12.0).unwrap();
            let minus: Vec<f64> = (0..grid.n_minus())
                .map(|j| (-2.0 * grid.x_minus(j).abs()).exp())
                .collect();
            let plus: Vec<f64> = (0..grid.n_plus())
                .map(|j| (-2.0 * grid.x_plus(j).abs()).exp())
                .collect();
            let norm = weighted_sobolev_norm(&grid, &minus, &plus, 1.0, 1).unwrap();
            errors.push((norm - analytic).abs());
        }
        let r1 = errors[0] / errors[1];
        let r2 = errors[1] / errors[2];
        assert!(
            r1 > 3.0 && r2 > 3.0,
            "quadrature convergence ratios {r1}, {r2} (errors {errors:?})"
        );
    }

    #[test]
    fn unresolved_tail_is_rejected() {
        let grid = TwinGrid::new(0.05, 4.0, 4.0).unwrap();
        let minus = vec![1.0; grid.n_minus()];
        let plus = vec![1.0; grid.n_plus()];
        let err = weighted_sobolev_norm(&grid, &minus, &plus, 1.0, 0);
        match err {
            Err(Error::TailNotResolved { fraction }) => assert!(fraction > 0.01),
            other => panic!("expected tail failure, got {other:?}"),
        }
    }

    #[test]
    fn constants_store_exact_derived_rates() {
        let constants = reference_constants(0.0, 0.0).unwrap();
        assert_eq!(constants.epsilon(), 1.0);
        assert_eq!(constants.omega(), 0.4 * 1.0 / 4.0);
        assert_eq!(constants.delta1(), 1.0);
        let with_q = EstimateConstants::new(0.4, 1.0, 2.0, 0.2, 0.25, 1.0, 10.0, 0.0);
        // q₀-threshold inequalities fail at q = 0.2 for these (ω, C̃);
        // the δ₁ rule itself is exercised through the error-free path at
        // a tiny release instead.
        assert!(with_q.is_err());
        let tiny = EstimateConstants::new(0.4, 1.0, 2.0, 1e-6, 0.25, 1.0, 10.0, 0.0).unwrap();
        let eps = 2.0 / 1.0;
        assert_eq!(tiny.delta1(), 0.4 * eps / (8.0 * 2.0 * 1e-6));
        assert!(tiny.c_weight() > 0.0);
        assert!(tiny.delta2() > 0.0 && tiny.delta2() <= 1.0);
    }

    #[test]
    fn zero_release_certificate_is_feasible() {
        let constants = reference_constants(0.0, 0.0).unwrap();
        let coeffs = select_coefficients(&constants, 0.0).unwrap();
        // Self-verification: the returned tuple satisfies all ten
        // inequalities by construction.
        assert!(check_inequalities(&coeffs, constants.omega(), constants.c_tilde(), 0.0, 0.0)
            .is_ok());
        for c in coeffs.iter() {
            assert!(c > 0.0);
        }
        assert_eq!(coeffs.c_minus[0], 1.0);
        assert_eq!(coeffs.c_plus, [1.0; 3]);
        assert_eq!(coeffs.cp_plus, [1.0; 3]);
        assert_relative_eq!(coeffs.c_minus[1], 0.1 / 40.0, max_relative = 1e-14);
    }

    #[test]
    fn feasibility_flips_at_the_analytic_release_threshold() {
        // ω = 0.1, C̃ = 10, κ = 0: the binding |q| constraint is the one
        // pairing C₁,₋ with C′₁,₋, giving q₀ = C′₁,₋ω/(2C̃C₁,₋) = 5e-5.
        let constants = reference_constants(0.0, 0.0).unwrap();
        let feasible = |q: f64| select_coefficients(&constants, q).is_ok();
        assert!(feasible(0.0));
        assert!(!feasible(1.0));
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let coeffs = constants.coefficients();
        let q0_analytic = (coeffs.cp_minus[1] * constants.omega()
            / (2.0 * constants.c_tilde() * coeffs.c_minus[1]))
            .min(coeffs.cp_minus[2] * constants.omega() / (2.0 * constants.c_tilde() * coeffs.c_minus[2]));
        assert_relative_eq!(0.5 * (lo + hi), q0_analytic, max_relative = 1e-9);
        assert_relative_eq!(q0_analytic, 5e-5, max_relative = 1e-12);
    }

    #[test]
    fn large_kappa_breaks_the_boundary_inequality() {
        let err = reference_constants(0.0, 1.0);
        match err {
            Err(Error::Infeasible { index, margin }) => {
                assert!(index == 1 || index == 2, "failing index {index}");
                assert!(margin > 0.0);
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let profile = burgers_profile(0.09);
        let grid = TwinGrid::new(0.05, 8.0, 6.0).unwrap();
        let state = init_state(&profile, |_| 0.0, |_| 0.0, grid, 0.0).unwrap();
        let family = WeightFamily::new(0.5, 1.0).unwrap();
        let report = total_energy(&state, &Coefficients::unit(), &family).unwrap();
        assert_eq!(report.total, 0.0);
        assert_eq!(report.v_minus, [0.0; 3]);
        assert_eq!(report.zeta_plus, [0.0; 3]);
    }

    #[test]
    fn energy_components_scale_quadratically() {
        let profile = burgers_profile(0.09);
        let grid = TwinGrid::new(0.05, 8.0, 6.0).unwrap();
        let taper = |x: f64| {
            let s = x / if x < 0.0 { 8.0 } else { 6.0 };
            (1.0 - s * s).powi(2)
        };
        let shape = |x: f64| {
            if x.abs() < 0.5 {
                return 0.0;
            }
            0.01 * (1.3 * x).sin()
        };
        let v0 = move |x: f64| shape(x) * taper(x);
        let z0 = move |x: f64| 0.5 * shape(x) * taper(x);
        let mut state = init_state(&profile, v0, z0, grid, 0.5).unwrap();
        let family = WeightFamily::new(0.5, 1.0).unwrap();
        let report1 = total_energy(&state, &Coefficients::unit(), &family).unwrap();
        let double = |f: &[f64]| f.iter().map(|&v| 2.0 * v).collect::<Vec<_>>();
        let (vm, vp, zm, zp) = (
            double(state.v_minus()),
            double(state.v_plus()),
            double(state.zeta_minus()),
            double(state.zeta_plus()),
        );
        state.set_fields(vm, vp, zm, zp).unwrap();
        let report2 = total_energy(&state, &Coefficients::unit(), &family).unwrap();
        for k in 0..3 {
            assert_relative_eq!(report2.v_minus[k], 4.0 * report1.v_minus[k], max_relative = 1e-12);
            assert_relative_eq!(report2.zeta_minus[k], 4.0 * report1.zeta_minus[k], max_relative = 1e-12);
            assert_relative_eq!(report2.v_plus[k], 4.0 * report1.v_plus[k], max_relative = 1e-12);
            assert_relative_eq!(report2.zeta_plus[k], 4.0 * report1.zeta_plus[k], max_relative = 1e-12);
        }
        assert_relative_eq!(report2.total, 4.0 * report1.total, max_relative = 1e-12);
    }

    #[test]
    fn energy_is_equivalent_to_the_weighted_sobolev_norm() {
        use rand::{Rng, SeedableRng};
        let profile = burgers_profile(0.09);
        let grid = TwinGrid::new(0.1, 4.0, 3.0).unwrap();
        let mut state = init_state(&profile, |_| 0.0, |_| 0.0, grid.clone(), 0.0).unwrap();
        let family = WeightFamily::new(0.5, 1.0).unwrap();
        let coeffs = Coefficients::unit();
        let (m, big_m) = equivalence_bounds(&coeffs, &family);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let taper_minus: Vec<f64> = (0..grid.n_minus())
            .map(|j| {
                let s = grid.x_minus(j) / grid.extent_minus();
                (1.0 - s * s).powi(2)
            })
            .collect();
        let taper_plus: Vec<f64> = (0..grid.n_plus())
            .map(|j| {
                let s = grid.x_plus(j) / grid.extent_plus();
                (1.0 - s * s).powi(2)
            })
            .collect();
        for _ in 0..1000 {
            let mut draw = |taper: &[f64]| -> Vec<f64> {
                taper
                    .iter()
                    .map(|&w| w * rng.gen_range(-0.05..0.05))
                    .collect()
            };
            let (vm, zm) = (draw(&taper_minus), draw(&taper_minus));
            let (vp, zp) = (draw(&taper_plus), draw(&taper_plus));
            state
                .set_fields(vm.clone(), vp.clone(), zm.clone(), zp.clone())
                .unwrap();
            let report = total_energy(&state, &coeffs, &family).unwrap();
            let nv = weighted_sobolev_norm(&grid, &vm, &vp, 0.5, 2).unwrap();
            let nz = weighted_sobolev_norm(&grid, &zm, &zp, 0.5, 2).unwrap();
            let norm_sq = nv * nv + nz * nz;
            assert!(
                report.total >= m * norm_sq * (1.0 - 1e-10),
                "total {} below {}",
                report.total,
                m * norm_sq
            );
            assert!(
                report.total <= big_m * norm_sq * (1.0 + 1e-10),
                "total {} above {}",
                report.total,
                big_m * norm_sq
            );
        }
    }

    #[test]
    fn decay_fit_recovers_exact_exponential() {
        let series: Vec<(f64, f64)> = (0..100)
            .map(|i| {
                let t = i as f64 * 0.1;
                (t, 5.0 * (-0.3 * t).exp())
            })
            .collect();
        let (theta, r2) = fit_decay_rate(&series, 0.1).unwrap();
        assert_relative_eq!(theta, 0.3, epsilon = 1e-10);
        assert_relative_eq!(r2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn decay_fit_of_constant_series_is_zero() {
        let series: Vec<(f64, f64)> = (0..50).map(|i| (i as f64, 2.5)).collect();
        let (theta, r2) = fit_decay_rate(&series, 0.1).unwrap();
        assert_eq!(theta, 0.0);
        assert_eq!(r2, 1.0);
    }

    #[test]
    fn decay_fit_tolerates_small_oscillation() {
        let series: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.05;
                (t, (-t).exp() * (1.0 + 0.01 * t.sin()))
            })
            .collect();
        let (theta, _) = fit_decay_rate(&series, 0.1).unwrap();
        assert_relative_eq!(theta, 1.0, epsilon = 0.02);
    }

    #[test]
    fn decay_fit_discards_leading_transient() {
        // First 10% of samples sit far off the asymptotic line; the
        // default transient cut must remove them.
        let series: Vec<(f64, f64)> = (0..100)
            .map(|i| {
                let t = i as f64 * 0.1;
                if i < 10 {
                    (t, 50.0)
                } else {
                    (t, 5.0 * (-0.3 * t).exp())
                }
            })
            .collect();
        let (theta, _) = fit_decay_rate(&series, 0.1).unwrap();
        assert_relative_eq!(theta, 0.3, epsilon = 1e-10);
    }

    #[test]
    fn decay_fit_rejects_nonpositive_energy() {
        let series = vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.0), (3.0, 0.1)];
        assert!(matches!(
            fit_decay_rate(&series, 0.0),
            Err(Error::NonPositiveEnergy { index: 2, .. })
        ));
    }

    #[test]
    fn damping_residual_holds_for_pure_decay() {
        let series: Vec<(f64, f64, f64)> = (0..80)
            .map(|i| {
                let t = i as f64 * 0.1;
                (t, 2.0 * (-0.7 * t).exp(), 0.0)
            })
            .collect();
        let residual = damping_residual(&series, 1.5, 0.7);
        // With zero low-order input the residual is (1 − C)·E(t), largest
        // (closest to zero) at the final sample.
        assert!(residual <= 0.0);
        let t_last: f64 = 79.0 * 0.1;
        assert_relative_eq!(
            residual,
            -0.5 * 2.0 * (-0.7 * t_last).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn damping_residual_flags_growth() {
        let series: Vec<(f64, f64, f64)> = (0..80)
            .map(|i| {
                let t = i as f64 * 0.1;
                ((t), (0.2 * t).exp(), 0.0)
            })
            .collect();
        assert!(damping_residual(&series, 1.0, 0.3) > 0.0);
    }

    #[test]
    fn derived_profile_constants_are_sane() {
        let profile = burgers_profile(0.09);
        let (mu, nu) = speed_bounds(&profile, 0.25).unwrap();
        assert!(mu > 0.0 && mu < nu);
        // Burgers: σ = 0.5, wave range [0.9, 1]: left gap 0.4, right gap
        // 0.5, k = 1 → μ = 0.2; slope max near u0 + 2η → ν ≈ 1.5 + η.
        assert_relative_eq!(mu, 0.2, max_relative = 1e-6);
        assert!(nu >= 1.5);
        let c_tilde = boundary_constant(&profile, 0.25).unwrap();
        // max|f′ − σ| = 1 on [u0 − 2η, u0 + 2η] → C̃ = 8.
        assert_relative_eq!(c_tilde, 8.0, max_relative = 1e-6);
    }
}
