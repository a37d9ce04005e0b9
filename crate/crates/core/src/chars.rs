//! Characteristic machinery for strictly hyperbolic quasilinear systems
//! with exponentially localized inhomogeneity.
//!
//! The systems treated here have the form
//!
//! ```text
//!     u_t + 𝒜(x, u) u_x + G(x, u) u = 0,      𝒜(x, u) = A(u) + B(x, u),
//! ```
//!
//! where `B` and `G` decay like `e^{−c|x|}` away from the origin. The module
//! provides
//!
//! - eigenframes of `𝒜` with a deterministic sign convention
//!   ([`eigen_frame`]);
//! - the coupling coefficients that drive the slope dynamics along
//!   characteristics ([`coupling_coeffs`]): the gradient entries `b_ij` and
//!   `c_ijk` of `𝒜`, the assembled linear weights `ζ_ik`, quadratic weights
//!   `γ_ikm`, and the forcing `κ_i`;
//! - characteristic ensembles ([`CharEnsemble`], [`advance_ensemble`]) that
//!   integrate the curves `X_i`, the compression factors `ρ_i`, and the
//!   projected slopes `w_i` while recording sup/integral diagnostics;
//! - a closed-form upper bound on the gradient blowup time from the Riccati
//!   mechanism ([`riccati_forecast`]).
//!
//! Slopes are expanded in the frame as `u_x = Σ_i w_i ξ^i` with
//! `w_i = η_i·u_x`; along the `i`-th characteristic they obey
//!
//! ```text
//!     dw_i/dt = Σ_k ζ_ik w_k + Σ_{k,m} γ_ikm w_k w_m + κ_i,
//! ```
//!
//! where `κ_i` already contains the factor `u` of the reaction forcing
//! `−η_i G_x(x,u) u`. The quadratic diagonal satisfies `γ_iii = −c_iii`
//! identically, which is what makes the transported quantity `v_i = w_i ρ_i`
//! free of self-interaction and the blowup genuinely Riccati-type.

use crate::error::{BlowupTrigger, Error, Result};
use crate::linalg::{eigenvalues_desc, right_eigenvector, MatN, VecN, MAX_N};

/// Slope magnitude treated as numerical blowup: a characteristic gradient
/// component beyond this ceiling means the Riccati mechanism has fired.
pub const GRADIENT_CEILING: f64 = 1e6;

/// Compression-factor floor: `ρ_i` below this value signals focusing of the
/// `i`-th characteristic family, the dual symptom of gradient blowup.
pub const RHO_FLOOR: f64 = 1e-6;

/// Quadratic self-interaction weaker than this is treated as absence of
/// genuine nonlinearity; no finite blowup forecast is possible.
pub const GENUINE_NONLINEARITY_FLOOR: f64 = 1e-10;

/// Relative step for the central finite differences that evaluate the
/// gradient of the coefficient matrices; balances truncation against
/// roundoff at the accuracy the frame invariants demand.
const COUPLING_STEP: f64 = 1e-6;

/// Absolute tolerance (per unit eigenvector scale) for the biorthogonality
/// relation η_i·ξ^j = δ_ij.
const BIORTHOGONALITY_TOL: f64 = 1e-12;

/// Relative tolerance for the left/right eigenvector residuals.
const EIGEN_RESIDUAL_TOL: f64 = 1e-10;

/// A strictly hyperbolic quasilinear operator with localized inhomogeneity.
///
/// `matrix_fn` evaluates the full transport matrix `𝒜(x, u)` and `source_fn`
/// the reaction matrix `G(x, u)`. Both are expected to approach x-independent
/// limits at the exponential rate `decay_rate`; `delta` is the amplitude
/// radius within which strict hyperbolicity is certified.
pub struct HypSystem {
    n: usize,
    matrix_fn: Box<dyn Fn(f64, &VecN) -> MatN + Send + Sync>,
    source_fn: Box<dyn Fn(f64, &VecN) -> MatN + Send + Sync>,
    decay_rate: f64,
    delta: f64,
}

impl HypSystem {
    /// Builds a system of `n ≤ 3` equations from the transport and reaction
    /// matrix evaluators.
    pub fn new(
        n: usize,
        matrix_fn: Box<dyn Fn(f64, &VecN) -> MatN + Send + Sync>,
        source_fn: Box<dyn Fn(f64, &VecN) -> MatN + Send + Sync>,
        decay_rate: f64,
        delta: f64,
    ) -> Result<Self> {
        if n < 1 || n > MAX_N {
            return Err(Error::RangeError {
                key: "chars.n".to_string(),
                value: n.to_string(),
                reason: format!("system size must lie in 1..={MAX_N}"),
            });
        }
        if !(decay_rate > 0.0 && decay_rate.is_finite()) {
            return Err(Error::RangeError {
                key: "chars.decay_rate".to_string(),
                value: decay_rate.to_string(),
                reason: "localization rate must be positive".to_string(),
            });
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::RangeError {
                key: "chars.delta".to_string(),
                value: delta.to_string(),
                reason: "amplitude radius must be positive".to_string(),
            });
        }
        Ok(HypSystem {
            n,
            matrix_fn,
            source_fn,
            decay_rate,
            delta,
        })
    }

    /// Convenience constructor for reaction-free systems (`G ≡ 0`).
    pub fn without_source(
        n: usize,
        matrix_fn: Box<dyn Fn(f64, &VecN) -> MatN + Send + Sync>,
        decay_rate: f64,
        delta: f64,
    ) -> Result<Self> {
        Self::new(n, matrix_fn, Box::new(move |_, _| MatN::zeros(n)), decay_rate, delta)
    }

    /// Number of equations.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Exponential localization rate `c` of the inhomogeneity.
    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    /// Amplitude radius within which the spectrum is certified simple.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Transport matrix `𝒜(x, u)`.
    pub fn matrix(&self, x: f64, u: &VecN) -> MatN {
        (self.matrix_fn)(x, u)
    }

    /// Reaction matrix `G(x, u)`.
    pub fn source(&self, x: f64, u: &VecN) -> MatN {
        (self.source_fn)(x, u)
    }
}

/// Eigendecomposition of the transport matrix at one point `(x, u)`.
///
/// Eigenvalues are strictly descending; `eta` holds unit left eigenvectors
/// whose largest-magnitude entry is positive, and `xi` holds the right
/// eigenvectors rescaled so that `η_i·ξ^j = δ_ij`.
#[derive(Clone, Copy, Debug)]
pub struct EigenFrame {
    n: usize,
    lambdas: VecN,
    xi: [VecN; MAX_N],
    eta: [VecN; MAX_N],
}

impl EigenFrame {
    /// Number of characteristic families.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `i`-th eigenvalue (descending order).
    pub fn lambda(&self, i: usize) -> f64 {
        self.lambdas.get(i)
    }

    /// `i`-th right eigenvector `ξ^i`.
    pub fn xi(&self, i: usize) -> VecN {
        self.xi[i]
    }

    /// `i`-th left eigenvector `η_i` (unit Euclidean length).
    pub fn eta(&self, i: usize) -> VecN {
        self.eta[i]
    }

    /// Enforces biorthogonality, normalization, and both eigen-residuals.
    fn validate(&self, a: &MatN) -> Result<()> {
        let scale = a.norm_inf().max(1.0);
        for i in 0..self.n {
            let eta_norm_err = (self.eta[i].norm() - 1.0).abs();
            if eta_norm_err > 1e-12 {
                return Err(Error::NotStrictlyHyperbolic {
                    gap: eta_norm_err,
                    floor: 1e-12,
                });
            }
            for j in 0..self.n {
                let target = if i == j { 1.0 } else { 0.0 };
                let err = (self.eta[i].dot(&self.xi[j]) - target).abs();
                let tol = BIORTHOGONALITY_TOL * self.xi[j].norm().max(1.0);
                if err > tol {
                    return Err(Error::NotStrictlyHyperbolic { gap: err, floor: tol });
                }
            }
            let lam = self.lambdas.get(i);
            let right_res = a
                .mul_vec(&self.xi[i])
                .sub(&self.xi[i].scale(lam))
                .norm_inf();
            let right_tol = EIGEN_RESIDUAL_TOL * scale * self.xi[i].norm_inf().max(1.0);
            if right_res > right_tol {
                return Err(Error::NotStrictlyHyperbolic {
                    gap: right_res,
                    floor: right_tol,
                });
            }
            let left_res = a
                .vec_mul(&self.eta[i])
                .sub(&self.eta[i].scale(lam))
                .norm_inf();
            let left_tol = EIGEN_RESIDUAL_TOL * scale;
            if left_res > left_tol {
                return Err(Error::NotStrictlyHyperbolic {
                    gap: left_res,
                    floor: left_tol,
                });
            }
        }
        Ok(())
    }
}

/// Full eigendecomposition of `𝒜(x, u)` with deterministic signs.
///
/// The left eigenvectors come from the inverse of the right-eigenvector
/// matrix, so biorthogonality holds to solver precision by construction;
/// each `η_i` is then normalized to unit length with its largest-magnitude
/// entry made positive, and `ξ^i` rescaled to keep `η_i·ξ^i = 1`.
///
/// Errors with [`Error::AmplitudeTooLarge`] outside the certified amplitude
/// ball and [`Error::NotStrictlyHyperbolic`] when the spectrum degenerates
/// or the frame fails its residual checks.
pub fn eigen_frame(system: &HypSystem, x: f64, u: &VecN) -> Result<EigenFrame> {
    let n = system.n();
    let amp = u.norm();
    if amp > system.delta() * (1.0 + 1e-12) {
        return Err(Error::AmplitudeTooLarge {
            amp,
            bound: system.delta(),
        });
    }
    let a = system.matrix(x, u);
    let lambdas = eigenvalues_desc(&a)?;
    let mut xi = [VecN::zeros(n); MAX_N];
    for (i, slot) in xi.iter_mut().enumerate().take(n) {
        *slot = right_eigenvector(&a, lambdas.get(i))?;
    }
    let mut r = MatN::zeros(n);
    for (i, v) in xi.iter().enumerate().take(n) {
        for row in 0..n {
            r.set(row, i, v.get(row));
        }
    }
    let r_inv = r.inverse().ok_or(Error::NotStrictlyHyperbolic {
        gap: 0.0,
        floor: crate::linalg::HYPERBOLICITY_GAP_FLOOR,
    })?;
    let mut eta = [VecN::zeros(n); MAX_N];
    for i in 0..n {
        let raw = r_inv.row(i);
        let norm = raw.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotStrictlyHyperbolic {
                gap: norm,
                floor: crate::linalg::HYPERBOLICITY_GAP_FLOOR,
            });
        }
        let mut pick = 0;
        for j in 1..n {
            if raw.get(j).abs() > raw.get(pick).abs() {
                pick = j;
            }
        }
        let sign = if raw.get(pick) >= 0.0 { 1.0 } else { -1.0 };
        eta[i] = raw.scale(sign / norm);
        xi[i] = xi[i].scale(sign * norm);
    }
    let frame = EigenFrame { n, lambdas, xi, eta };
    frame.validate(&a)?;
    Ok(frame)
}

/// Coupling coefficients of the slope dynamics at one point `(x, u)`.
///
/// `b_ij = η_i (∂𝒜/∂x) ξ^j` and `c_ijk = η_i (d𝒜(x, u + sξ^k)/ds|₀) ξ^j`
/// hold the spatial and state gradients of the transport matrix; `ζ_ik`,
/// `γ_ikm`, and `κ_i` are the assembled weights of the characteristic slope
/// equation (linear, quadratic, forcing).
#[derive(Clone, Copy, Debug)]
pub struct CouplingCoeffs {
    n: usize,
    b: [[f64; MAX_N]; MAX_N],
    c: [[[f64; MAX_N]; MAX_N]; MAX_N],
    gamma: [[[f64; MAX_N]; MAX_N]; MAX_N],
    zeta: [[f64; MAX_N]; MAX_N],
    kappa: [f64; MAX_N],
}

impl CouplingCoeffs {
    /// Number of characteristic families.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Spatial-gradient entry `b_ij`.
    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.b[i][j]
    }

    /// State-gradient entry `c_ijk` (derivative direction `ξ^k`).
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[i][j][k]
    }

    /// Quadratic slope-interaction weight `γ_ikm`.
    pub fn gamma(&self, i: usize, k: usize, m: usize) -> f64 {
        self.gamma[i][k][m]
    }

    /// Linear slope weight `ζ_ik`.
    pub fn zeta(&self, i: usize, k: usize) -> f64 {
        self.zeta[i][k]
    }

    /// Reaction forcing `κ_i = −η_i G_x(x,u) u` (state factor folded in).
    pub fn kappa(&self, i: usize) -> f64 {
        self.kappa[i]
    }

    /// `Σ_{ik} |ζ_ik|`, the localization observable of the linear weights.
    pub fn zeta_abs_sum(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for k in 0..self.n {
                acc += self.zeta[i][k].abs();
            }
        }
        acc
    }

    /// `Σ_{ikm} |γ_ikm|`, the total quadratic interaction strength.
    pub fn gamma_abs_sum(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for k in 0..self.n {
                for m in 0..self.n {
                    acc += self.gamma[i][k][m].abs();
                }
            }
        }
        acc
    }

    /// `Σ_i |κ_i|`, the total reaction forcing.
    pub fn kappa_abs_sum(&self) -> f64 {
        self.kappa[..self.n].iter().map(|k| k.abs()).sum()
    }
}

/// Evaluates the coupling coefficients at `(x, u)` for a precomputed frame.
///
/// The matrix gradients are central finite differences with steps
/// `1e-6·(1 + |x|)` in space and `1e-6·(1 + |u|)` along each eigenvector
/// direction. The assembled weights follow from differentiating the frame
/// along a characteristic:
///
/// - `ζ_ik` collects `−b_ik`, the frame-rotation term
///   `λ_i b_ik/(λ_k − λ_i)` (with its `(η_k·η_i) w_i` counterpart on the
///   diagonal), the reaction projections `−η_i G ξ^k − η_i (∂_u G·ξ^k) u`,
///   and the rotation-reaction cross terms carrying `η_m G u`;
/// - `γ_ikm` collects `−c_ikm` and the frame-rotation quadratic
///   `(λ_i − λ_m)/(λ_k − λ_i) c_ikm` terms, so `γ_iii = −c_iii` exactly;
/// - `κ_i = −η_i G_x u`.
pub fn coupling_coeffs(
    system: &HypSystem,
    x: f64,
    u: &VecN,
    frame: &EigenFrame,
) -> Result<CouplingCoeffs> {
    let n = system.n();
    let hx = COUPLING_STEP * (1.0 + x.abs());
    let da_dx = system
        .matrix(x + hx, u)
        .sub(&system.matrix(x - hx, u))
        .scale(1.0 / (2.0 * hx));
    let g = system.source(x, u);
    let dg_dx = system
        .source(x + hx, u)
        .sub(&system.source(x - hx, u))
        .scale(1.0 / (2.0 * hx));

    let hu = COUPLING_STEP * (1.0 + u.norm());
    let mut da_du = [MatN::zeros(n); MAX_N];
    let mut dg_du = [MatN::zeros(n); MAX_N];
    for k in 0..n {
        let up = u.add(&frame.xi(k).scale(hu));
        let um = u.sub(&frame.xi(k).scale(hu));
        da_du[k] = system
            .matrix(x, &up)
            .sub(&system.matrix(x, &um))
            .scale(1.0 / (2.0 * hu));
        dg_du[k] = system
            .source(x, &up)
            .sub(&system.source(x, &um))
            .scale(1.0 / (2.0 * hu));
    }

    let mut b = [[0.0; MAX_N]; MAX_N];
    let mut c = [[[0.0; MAX_N]; MAX_N]; MAX_N];
    for i in 0..n {
        let eta_i = frame.eta(i);
        for j in 0..n {
            let xi_j = frame.xi(j);
            b[i][j] = eta_i.dot(&da_dx.mul_vec(&xi_j));
            for k in 0..n {
                c[i][j][k] = eta_i.dot(&da_du[k].mul_vec(&xi_j));
            }
        }
    }

    // Reaction projections shared by several weights.
    let gu = g.mul_vec(u);
    let gxu = dg_dx.mul_vec(u);
    let mut eta_gu = [0.0; MAX_N];
    for (m, slot) in eta_gu.iter_mut().enumerate().take(n) {
        *slot = frame.eta(m).dot(&gu);
    }
    let mut eta_dots = [[0.0; MAX_N]; MAX_N];
    for i in 0..n {
        for j in 0..n {
            eta_dots[i][j] = frame.eta(i).dot(&frame.eta(j));
        }
    }

    let mut zeta = [[0.0; MAX_N]; MAX_N];
    let mut gamma = [[[0.0; MAX_N]; MAX_N]; MAX_N];
    let mut kappa = [0.0; MAX_N];
    for i in 0..n {
        let eta_i = frame.eta(i);
        let lam_i = frame.lambda(i);
        kappa[i] = -eta_i.dot(&gxu);
        for k in 0..n {
            let mut z = -b[i][k]
                - eta_i.dot(&g.mul_vec(&frame.xi(k)))
                - eta_i.dot(&dg_du[k].mul_vec(u));
            if k != i {
                let denom = frame.lambda(k) - lam_i;
                z += lam_i * b[i][k] / denom;
                let mut cross = 0.0;
                for m in 0..n {
                    cross += c[i][k][m] * eta_gu[m];
                }
                z += cross / denom;
            } else {
                for kp in 0..n {
                    if kp == i {
                        continue;
                    }
                    let denom = frame.lambda(kp) - lam_i;
                    z += -lam_i * b[i][kp] / denom * eta_dots[kp][i];
                    let mut cross = 0.0;
                    for m in 0..n {
                        cross += c[i][kp][m] * eta_gu[m];
                    }
                    z -= cross / denom * eta_dots[kp][i];
                }
            }
            zeta[i][k] = z;

            for m in 0..n {
                let mut gq = -c[i][k][m];
                if k != i {
                    gq -= (lam_i - frame.lambda(m)) / (frame.lambda(k) - lam_i) * c[i][k][m];
                }
                gamma[i][k][m] = gq;
            }
        }
        // Frame-rotation quadratic terms proportional to w_i w_m.
        for m in 0..n {
            let mut add = 0.0;
            for kp in 0..n {
                if kp == i {
                    continue;
                }
                add += (lam_i - frame.lambda(m)) / (frame.lambda(kp) - lam_i)
                    * c[i][kp][m]
                    * eta_dots[kp][i];
            }
            gamma[i][i][m] += add;
        }
    }

    Ok(CouplingCoeffs {
        n,
        b,
        c,
        gamma,
        zeta,
        kappa,
    })
}

/// Quadratic self-interaction of one family in the distal zero-state limit.
///
/// Evaluated at the probe `x = −20/c` where the inhomogeneity envelope is
/// below `1e-8`, as a proxy for the `|x| → ∞` limit of `γ_iii(x, 0)`.
pub fn gamma_infinity(system: &HypSystem, family: usize) -> Result<f64> {
    if family >= system.n() {
        return Err(Error::RangeError {
            key: "chars.family".to_string(),
            value: family.to_string(),
            reason: format!("family index must be below {}", system.n()),
        });
    }
    let x_probe = -20.0 / system.decay_rate();
    let u = VecN::zeros(system.n());
    let frame = eigen_frame(system, x_probe, &u)?;
    let coeffs = coupling_coeffs(system, x_probe, &u, &frame)?;
    Ok(coeffs.gamma(family, family, family))
}

/// Sup/integral diagnostics accumulated over an ensemble run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleDiagnostics {
    /// W: largest slope magnitude seen over all families, feet, and times.
    pub w_sup: f64,
    /// V: largest slope magnitude of a family seen outside that family's
    /// own characteristic region.
    pub v_outside: f64,
    /// U: largest state magnitude |u| seen at any evaluated foot.
    pub u_sup: f64,
    /// S: largest width β_i − α_i of a family's characteristic region.
    pub width: f64,
    /// J: largest line mass ∫|v_i| dz of the transported slope.
    pub line_mass: f64,
}

/// A bundle of characteristic curves seeded on `[α₀, β₀]`.
///
/// For every family `i` and seed `z_q` the ensemble integrates the position
/// `X_i`, the compression factor `ρ_i = ∂X_i/∂z` (started at 1), and the
/// projected slope `w_i`; the transported quantity is `v_i = w_i ρ_i`.
/// Diagnostics are running maxima updated at every accepted step.
#[derive(Clone, Debug)]
pub struct CharEnsemble {
    n: usize,
    seeds: Vec<f64>,
    t: f64,
    x: Vec<Vec<f64>>,
    rho: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    w0: f64,
    t0: f64,
    sigma_gap: f64,
    diag: EnsembleDiagnostics,
}

impl CharEnsemble {
    /// Seeds an ensemble of `n_seeds ≥ 2` curves per family, uniformly on
    /// `[alpha0, beta0]`, with initial slopes read from the field provider
    /// at `t = 0`.
    ///
    /// The spectral gap `min_{k<i}(ν_k − μ_i)` is estimated by sampling the
    /// eigenvalues over a window around the support plus distal probes, and
    /// the interaction clearing time is `t0 = s0/gap` (zero for scalar
    /// problems, which have no cross-family interactions).
    pub fn new<F>(
        system: &HypSystem,
        alpha0: f64,
        beta0: f64,
        n_seeds: usize,
        field: &F,
    ) -> Result<Self>
    where
        F: Fn(f64, f64) -> (VecN, VecN),
    {
        if !(alpha0.is_finite() && beta0.is_finite() && beta0 >= alpha0) {
            return Err(Error::RangeError {
                key: "ensemble.support".to_string(),
                value: format!("[{alpha0}, {beta0}]"),
                reason: "seed interval must be finite and ordered".to_string(),
            });
        }
        if n_seeds < 2 {
            return Err(Error::RangeError {
                key: "ensemble.seeds".to_string(),
                value: n_seeds.to_string(),
                reason: "at least two seeds are required".to_string(),
            });
        }
        let n = system.n();
        let s0 = beta0 - alpha0;
        let sigma_gap = spectral_gap(system, alpha0 - 2.0 * (s0 + 1.0), beta0 + 2.0 * (s0 + 1.0))?;
        let t0 = if n == 1 { 0.0 } else { s0 / sigma_gap };

        let mut seeds = Vec::with_capacity(n_seeds);
        for q in 0..n_seeds {
            let frac = q as f64 / (n_seeds - 1) as f64;
            seeds.push(alpha0 + frac * s0);
        }

        let mut x = vec![vec![0.0; n_seeds]; n];
        let rho = vec![vec![1.0; n_seeds]; n];
        let mut w = vec![vec![0.0; n_seeds]; n];
        let mut w0 = 0.0f64;
        let mut u_sup = 0.0f64;
        for (q, &z) in seeds.iter().enumerate() {
            let (u, ux) = field(z, 0.0);
            let frame = eigen_frame(system, z, &u)?;
            u_sup = u_sup.max(u.norm());
            for i in 0..n {
                x[i][q] = z;
                w[i][q] = frame.eta(i).dot(&ux);
                w0 = w0.max(w[i][q].abs());
            }
        }
        let mut ens = CharEnsemble {
            n,
            seeds,
            t: 0.0,
            x,
            rho,
            w,
            w0,
            t0,
            sigma_gap,
            diag: EnsembleDiagnostics {
                w_sup: w0,
                v_outside: 0.0,
                u_sup,
                width: 0.0,
                line_mass: 0.0,
            },
        };
        ens.absorb_state_diagnostics();
        Ok(ens)
    }

    /// Number of characteristic families.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Seed coordinates `z_q`.
    pub fn seeds(&self) -> &[f64] {
        &self.seeds
    }

    /// Current time.
    pub fn time(&self) -> f64 {
        self.t
    }

    /// Largest initial slope magnitude `W₀`.
    pub fn w0(&self) -> f64 {
        self.w0
    }

    /// Interaction clearing time `t₀ = s₀/gap`.
    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Estimated spectral separation `min_{k<i}(ν_k − μ_i)`.
    pub fn sigma_gap(&self) -> f64 {
        self.sigma_gap
    }

    /// Position `X_i(z_q, t)` of one characteristic.
    pub fn position(&self, family: usize, seed: usize) -> f64 {
        self.x[family][seed]
    }

    /// Compression factor `ρ_i(z_q, t)`.
    pub fn density(&self, family: usize, seed: usize) -> f64 {
        self.rho[family][seed]
    }

    /// Projected slope `w_i` along one characteristic.
    pub fn slope(&self, family: usize, seed: usize) -> f64 {
        self.w[family][seed]
    }

    /// Transported slope `v_i = w_i ρ_i`.
    pub fn v(&self, family: usize, seed: usize) -> f64 {
        self.w[family][seed] * self.rho[family][seed]
    }

    /// Leftmost characteristic `α_i(t)` of one family.
    pub fn alpha(&self, family: usize) -> f64 {
        self.x[family]
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Rightmost characteristic `β_i(t)` of one family.
    pub fn beta(&self, family: usize) -> f64 {
        self.x[family]
            .iter()
            .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// True when the regions `[α_i, β_i]` of all families are pairwise
    /// disjoint at the current time.
    pub fn regions_disjoint(&self) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let lo = self.alpha(i).max(self.alpha(j));
                let hi = self.beta(i).min(self.beta(j));
                if lo <= hi {
                    return false;
                }
            }
        }
        true
    }

    /// Current line mass `∫|v_i| dz` of one family (trapezoid over seeds).
    pub fn line_mass(&self, family: usize) -> f64 {
        let mut acc = 0.0;
        for q in 1..self.seeds.len() {
            let dz = self.seeds[q] - self.seeds[q - 1];
            acc += 0.5 * (self.v(family, q).abs() + self.v(family, q - 1).abs()) * dz;
        }
        acc
    }

    /// Largest current slope magnitude of one family.
    pub fn family_sup_slope(&self, family: usize) -> f64 {
        self.w[family].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Smallest current compression factor of one family.
    pub fn family_min_density(&self, family: usize) -> f64 {
        self.rho[family]
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Folds the state-derived observables (slope sup, widths, line masses)
    /// into the running diagnostics.
    fn absorb_state_diagnostics(&mut self) {
        for i in 0..self.n {
            self.diag.w_sup = self.diag.w_sup.max(self.family_sup_slope(i));
            self.diag.width = self.diag.width.max(self.beta(i) - self.alpha(i));
            self.diag.line_mass = self.diag.line_mass.max(self.line_mass(i));
        }
    }
}

/// Running diagnostics of an ensemble: the sup constants `W`, `V`, `U`, the
/// region width `S`, and the line mass `J`, maximized over the run so far.
pub fn measure_diagnostics(ensemble: &CharEnsemble) -> EnsembleDiagnostics {
    ensemble.diag
}

/// One right-hand-side evaluation of the characteristic system.
struct RhsEval {
    dx: f64,
    dlog_rho: f64,
    dw: f64,
    w_all: VecN,
    u_norm: f64,
}

/// Characteristic derivatives for one family at one foot `(x, t)`.
///
/// The slope vector at the foot is assembled from the field provider for
/// the other families and from the integrated state for the own family,
/// then fed into `dX/dt = λ_i`, `d log ρ_i/dt = b_ii + Σ c_iim w_m`, and the
/// slope equation `dw_i/dt = Σ ζ_ik w_k + Σ γ_ikm w_k w_m + κ_i`.
fn char_rhs<F>(
    system: &HypSystem,
    field: &F,
    family: usize,
    x: f64,
    w_state: f64,
    t: f64,
) -> Result<RhsEval>
where
    F: Fn(f64, f64) -> (VecN, VecN),
{
    let (u, ux) = field(x, t);
    let frame = eigen_frame(system, x, &u)?;
    let coeffs = coupling_coeffs(system, x, &u, &frame)?;
    let n = system.n();
    let mut w_all = VecN::zeros(n);
    for m in 0..n {
        let wm = if m == family {
            w_state
        } else {
            frame.eta(m).dot(&ux)
        };
        w_all.set(m, wm);
    }
    let dx = frame.lambda(family);
    let mut dlog_rho = coeffs.b(family, family);
    for m in 0..n {
        dlog_rho += coeffs.c(family, family, m) * w_all.get(m);
    }
    let mut dw = coeffs.kappa(family);
    for k in 0..n {
        dw += coeffs.zeta(family, k) * w_all.get(k);
        for m in 0..n {
            dw += coeffs.gamma(family, k, m) * w_all.get(k) * w_all.get(m);
        }
    }
    Ok(RhsEval {
        dx,
        dlog_rho,
        dw,
        w_all,
        u_norm: u.norm(),
    })
}

/// Advances every characteristic of the ensemble by one Heun step of size
/// `dt`, updating the running diagnostics.
///
/// The field provider resolves `(u, u_x)` at each characteristic foot. The
/// frame invariants are re-enforced at every evaluation point, since each
/// right-hand side rebuilds the eigenframe through [`eigen_frame`].
///
/// Errors with [`Error::BlownUp`] when a slope exceeds
/// [`GRADIENT_CEILING`] or a compression factor drops below [`RHO_FLOOR`].
pub fn advance_ensemble<F>(
    system: &HypSystem,
    ensemble: &mut CharEnsemble,
    field: &F,
    dt: f64,
) -> Result<()>
where
    F: Fn(f64, f64) -> (VecN, VecN),
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::RangeError {
            key: "ensemble.dt".to_string(),
            value: dt.to_string(),
            reason: "time step must be positive".to_string(),
        });
    }
    let n = ensemble.n;
    let nq = ensemble.seeds.len();
    let t0 = ensemble.t;
    let t1 = t0 + dt;

    // Region bounds at the step start, for classifying feet as inside or
    // outside each family's own region.
    let mut bounds = [(0.0f64, 0.0f64); MAX_N];
    for (i, slot) in bounds.iter_mut().enumerate().take(n) {
        *slot = (ensemble.alpha(i), ensemble.beta(i));
    }

    let mut k1 = vec![(0.0f64, 0.0f64, 0.0f64); n * nq];
    for i in 0..n {
        for q in 0..nq {
            let eval = char_rhs(
                system,
                field,
                i,
                ensemble.x[i][q],
                ensemble.w[i][q],
                t0,
            )?;
            k1[i * nq + q] = (eval.dx, eval.dlog_rho, eval.dw);
            // Field-derived diagnostics at this foot: every component
            // contributes to W, and components observed outside their own
            // family's region contribute to V.
            ensemble.diag.u_sup = ensemble.diag.u_sup.max(eval.u_norm);
            for m in 0..n {
                let wm = eval.w_all.get(m).abs();
                ensemble.diag.w_sup = ensemble.diag.w_sup.max(wm);
                if m != i {
                    let (lo, hi) = bounds[m];
                    let foot = ensemble.x[i][q];
                    if foot < lo || foot > hi {
                        ensemble.diag.v_outside = ensemble.diag.v_outside.max(wm);
                    }
                }
            }
        }
    }

    for i in 0..n {
        for q in 0..nq {
            let (dx1, dr1, dw1) = k1[i * nq + q];
            let xp = ensemble.x[i][q] + dt * dx1;
            let wp = ensemble.w[i][q] + dt * dw1;
            if !(xp.is_finite() && wp.is_finite()) {
                return Err(Error::BlownUp {
                    family: i,
                    time: t1,
                    trigger: BlowupTrigger::GradientCeiling,
                });
            }
            let eval = char_rhs(system, field, i, xp, wp, t1)?;
            ensemble.x[i][q] += 0.5 * dt * (dx1 + eval.dx);
            ensemble.rho[i][q] *= (0.5 * dt * (dr1 + eval.dlog_rho)).exp();
            ensemble.w[i][q] += 0.5 * dt * (dw1 + eval.dw);
        }
    }
    ensemble.t = t1;

    for i in 0..n {
        for q in 0..nq {
            let w = ensemble.w[i][q];
            if !w.is_finite() || w.abs() > GRADIENT_CEILING {
                return Err(Error::BlownUp {
                    family: i,
                    time: t1,
                    trigger: BlowupTrigger::GradientCeiling,
                });
            }
            let rho = ensemble.rho[i][q];
            if !rho.is_finite() || rho < RHO_FLOOR {
                return Err(Error::BlownUp {
                    family: i,
                    time: t1,
                    trigger: BlowupTrigger::RhoFloor,
                });
            }
        }
    }
    ensemble.absorb_state_diagnostics();
    Ok(())
}

/// Closed-form upper bound on the blowup time of the Riccati mechanism.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiccatiForecast {
    /// Distal quadratic self-interaction γ of the blowing-up family.
    pub gamma_inf: f64,
    /// Largest initial slope magnitude.
    pub w0: f64,
    /// Interaction clearing time after which the family evolves alone.
    pub t0: f64,
    /// Upper bound `t0 + 8/(3·γ·(3/4)·W0)` on the blowup time.
    pub t_star_upper: f64,
}

/// Forecasts the gradient blowup time from the Riccati comparison
/// `dw/dt ≥ (3/8)γ w²` with `w(t0) ≥ (3/4)W0`.
///
/// Errors with [`Error::NonGenuinelyNonlinear`] when the quadratic
/// self-interaction is below [`GENUINE_NONLINEARITY_FLOOR`].
pub fn riccati_forecast(gamma_inf: f64, w0: f64, t0: f64) -> Result<RiccatiForecast> {
    if !gamma_inf.is_finite() || gamma_inf <= GENUINE_NONLINEARITY_FLOOR {
        return Err(Error::NonGenuinelyNonlinear {
            gamma: gamma_inf,
            tolerance: GENUINE_NONLINEARITY_FLOOR,
        });
    }
    if !(w0 > 0.0 && w0.is_finite()) {
        return Err(Error::RangeError {
            key: "riccati.w0".to_string(),
            value: w0.to_string(),
            reason: "initial slope magnitude must be positive".to_string(),
        });
    }
    if !(t0 >= 0.0 && t0.is_finite()) {
        return Err(Error::RangeError {
            key: "riccati.t0".to_string(),
            value: t0.to_string(),
            reason: "clearing time must be nonnegative".to_string(),
        });
    }
    Ok(RiccatiForecast {
        gamma_inf,
        w0,
        t0,
        t_star_upper: t0 + 8.0 / (3.0 * gamma_inf * 0.75 * w0),
    })
}

/// Estimates `min_{k<i}(ν_k − μ_i)` by sampling eigenvalues over a spatial
/// window, distal probes, and the axes of the amplitude ball.
fn spectral_gap(system: &HypSystem, x_lo: f64, x_hi: f64) -> Result<f64> {
    let n = system.n();
    if n == 1 {
        return Ok(f64::INFINITY);
    }
    let probe = 20.0 / system.decay_rate();
    let mut xs = Vec::with_capacity(40);
    for j in 0..33 {
        xs.push(x_lo + (x_hi - x_lo) * j as f64 / 32.0);
    }
    xs.extend_from_slice(&[-probe, probe, 0.0]);

    let delta = system.delta();
    let mut us = vec![VecN::zeros(n)];
    for j in 0..n {
        for sign in [-1.0, 1.0] {
            let mut u = VecN::zeros(n);
            u.set(j, sign * delta);
            us.push(u);
        }
    }

    let mut nu = [f64::INFINITY; MAX_N];
    let mut mu = [f64::NEG_INFINITY; MAX_N];
    for &x in &xs {
        for u in &us {
            let lam = eigenvalues_desc(&system.matrix(x, u))?;
            for i in 0..n {
                nu[i] = nu[i].min(lam.get(i));
                mu[i] = mu[i].max(lam.get(i));
            }
        }
    }
    let mut gap = f64::INFINITY;
    for k in 0..n {
        for i in (k + 1)..n {
            gap = gap.min(nu[k] - mu[i]);
        }
    }
    if !(gap > 0.0) {
        return Err(Error::NotStrictlyHyperbolic { gap, floor: 0.0 });
    }
    Ok(gap)
}
