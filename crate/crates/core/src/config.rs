//! Line-oriented experiment configuration.
//!
//! The format is deliberately primitive so that any tool can read and write
//! it: one `key = value` pair per line, `#` comments, dotted key prefixes as
//! sections. Unknown keys are errors, defaults fill everything else, and all
//! numeric values are validated against the preconditions of the module that
//! will consume them before any experiment runs.

use crate::error::{Error, Result};

/// The canonical experiments the orchestrator can dispatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    /// Construct and verify a travelling-wave profile.
    Profile,
    /// Perturbed shock-frame run with energy tracking and decay fit.
    MajdaStability,
    /// Damping-functional residual along a stability run.
    MajdaDamping,
    /// Negative-speed configuration with a right-side reactant bump.
    NegativeSpeed,
    /// Reduced gas wave with a single-family bump: catastrophe detection.
    ZndBlowup,
    /// Shrinking bump family with a universal gradient excursion.
    NoDamping,
}

impl Experiment {
    /// Canonical config-file spelling.
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Profile => "profile",
            Experiment::MajdaStability => "majda-stability",
            Experiment::MajdaDamping => "majda-damping",
            Experiment::NegativeSpeed => "negative-speed",
            Experiment::ZndBlowup => "znd-blowup",
            Experiment::NoDamping => "no-damping",
        }
    }

    fn parse(value: &str, line: usize) -> Result<Self> {
        match value {
            "profile" => Ok(Experiment::Profile),
            "majda-stability" => Ok(Experiment::MajdaStability),
            "majda-damping" => Ok(Experiment::MajdaDamping),
            "negative-speed" => Ok(Experiment::NegativeSpeed),
            "znd-blowup" => Ok(Experiment::ZndBlowup),
            "no-damping" => Ok(Experiment::NoDamping),
            other => Err(Error::ParseError {
                line,
                message: format!("unknown experiment {other:?}"),
            }),
        }
    }
}

/// Scalar flux selector for profile experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluxKind {
    Burgers,
    Cubic,
    /// User-supplied polynomial with coefficients from `flux.coeffs`.
    Polynomial,
}

impl FluxKind {
    /// Canonical config-file spelling.
    pub fn name(&self) -> &'static str {
        match self {
            FluxKind::Burgers => "burgers",
            FluxKind::Cubic => "cubic",
            FluxKind::Polynomial => "polynomial",
        }
    }

    fn parse(value: &str, line: usize) -> Result<Self> {
        match value {
            "burgers" => Ok(FluxKind::Burgers),
            "cubic" => Ok(FluxKind::Cubic),
            "polynomial" => Ok(FluxKind::Polynomial),
            other => Err(Error::ParseError {
                line,
                message: format!("unknown flux kind {other:?}"),
            }),
        }
    }
}

/// Full validated experiment configuration with defaults for every field.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// `flux.kind`
    pub flux_kind: FluxKind,
    /// `flux.coeffs`: comma-separated polynomial coefficients, constant
    /// term first; consulted only when `flux.kind = polynomial`.
    pub flux_coeffs: Vec<f64>,
    /// `eos.gamma`: Grüneisen constant of the gas runs.
    pub eos_gamma: f64,
    /// `eos.c_heat`: specific heat of the gas runs.
    pub eos_c_heat: f64,
    /// `model.k`: reaction rate.
    pub k: f64,
    /// `model.q`: heat release.
    pub q: f64,
    /// `model.u0`: unburned end state.
    pub u0: f64,
    /// `model.u_i`: ignition threshold.
    pub u_i: f64,
    /// `sim.h`: grid spacing.
    pub h: f64,
    /// `sim.t_max`: run horizon.
    pub t_max: f64,
    /// `sim.extent`: half-line truncation extent.
    pub extent: f64,
    /// `sim.extent_minus`, `sim.extent_plus`: per-side truncation
    /// overrides; when unset each driver derives its sides from
    /// `sim.extent`.
    pub extent_minus: Option<f64>,
    pub extent_plus: Option<f64>,
    /// `sim.cfl`: Courant factor of the shock-frame runs (capped at 0.4).
    pub cfl: f64,
    /// `sim.rho`: amplitude radius stopping a shock-frame run. The
    /// theoretical radius is not quantified; the default is u0/8 for the
    /// default end state.
    pub rho: f64,
    /// `sim.grad_threshold`: gradient ceiling stopping a shock-frame run.
    pub grad_threshold: f64,
    /// `sim.output_interval`: observation cadence.
    pub output_interval: f64,
    /// `bump.amp`: perturbation amplitude.
    pub bump_amp: f64,
    /// `bump.lo`, `bump.hi`: support interval of the perturbation.
    pub bump_lo: f64,
    pub bump_hi: f64,
    /// `energy.epsilon`: weight decay rate.
    pub epsilon: f64,
    /// `energy.c`: weight-correction constant of the measured norm.
    pub energy_c: f64,
    /// `energy.transient_fraction`: fraction of each series excluded from
    /// the head of decay fits.
    pub transient_fraction: f64,
    /// `blowup.theta`: bump size of the gas run.
    pub theta: f64,
    /// `blowup.family`: seeded characteristic family.
    pub family: usize,
    /// `blowup.margin`: distance margin.
    pub margin: f64,
    /// `blowup.grad_factor`: gradient growth certifying a catastrophe.
    pub grad_factor: f64,
    /// `blowup.amp_factor`: amplitude ceiling certifying boundedness.
    pub amp_factor: f64,
    /// `nodamping.n_max`: family size.
    pub n_max: usize,
    /// `nodamping.drift`: far-field drift speed.
    pub drift: f64,
    /// `nodamping.excursion`: common slope level every member must reach.
    pub excursion: f64,
    /// `out.dir`: artifact directory.
    pub out_dir: String,
    /// `seed`: randomized-sweep seed.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::Profile,
            flux_kind: FluxKind::Burgers,
            flux_coeffs: vec![0.0, 0.0, 0.5],
            eos_gamma: 0.4,
            eos_c_heat: 1.0,
            k: 1.0,
            q: 0.09,
            u0: 1.0,
            u_i: 0.5,
            h: 5e-3,
            t_max: 50.0,
            extent: 30.0,
            extent_minus: None,
            extent_plus: None,
            cfl: 0.4,
            rho: 0.125,
            grad_threshold: 1e6,
            output_interval: 0.1,
            bump_amp: 1e-3,
            bump_lo: -6.0,
            bump_hi: -5.0,
            epsilon: 0.05,
            energy_c: 0.0,
            transient_fraction: 0.3,
            theta: 0.1,
            family: 2,
            margin: 1.0,
            grad_factor: 1e3,
            amp_factor: 2.0,
            n_max: 16,
            drift: 0.4,
            excursion: 1.0,
            out_dir: "out".to_string(),
            seed: 0,
        }
    }
}

fn parse_number(key: &str, value: &str, line: usize) -> Result<f64> {
    let parsed: f64 = value.parse().map_err(|_| Error::ParseError {
        line,
        message: format!("key {key}: expected a number, got {value:?}"),
    })?;
    if !parsed.is_finite() {
        return Err(Error::ParseError {
            line,
            message: format!("key {key}: value must be finite, got {value:?}"),
        });
    }
    Ok(parsed)
}

fn parse_count(key: &str, value: &str, line: usize) -> Result<u64> {
    value.parse().map_err(|_| Error::ParseError {
        line,
        message: format!("key {key}: expected a nonnegative integer, got {value:?}"),
    })
}

fn range_error(key: &str, value: &str, reason: &str) -> Error {
    Error::RangeError {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn apply(config: &mut ExperimentConfig, key: &str, value: &str, line: usize) -> Result<()> {
    match key {
        "experiment" => config.experiment = Experiment::parse(value, line)?,
        "flux.kind" => config.flux_kind = FluxKind::parse(value, line)?,
        "flux.coeffs" => {
            let mut coeffs = Vec::new();
            for piece in value.split(',') {
                coeffs.push(parse_number(key, piece.trim(), line)?);
            }
            if coeffs.is_empty() {
                return Err(range_error(key, value, "at least one coefficient is required"));
            }
            config.flux_coeffs = coeffs;
        }
        "eos.gamma" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "Grüneisen constant must be positive"));
            }
            config.eos_gamma = x;
        }
        "eos.c_heat" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "specific heat must be positive"));
            }
            config.eos_c_heat = x;
        }
        "model.k" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "reaction rate must be positive"));
            }
            config.k = x;
        }
        "model.q" => {
            let x = parse_number(key, value, line)?;
            if x < 0.0 {
                return Err(range_error(key, value, "heat release must be nonnegative"));
            }
            config.q = x;
        }
        "model.u0" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "end state must be positive"));
            }
            config.u0 = x;
        }
        "model.u_i" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "ignition threshold must be positive"));
            }
            config.u_i = x;
        }
        "sim.h" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "grid spacing must be positive"));
            }
            config.h = x;
        }
        "sim.t_max" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "run horizon must be positive"));
            }
            config.t_max = x;
        }
        "sim.extent" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "truncation extent must be positive"));
            }
            config.extent = x;
        }
        "sim.extent_minus" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "truncation extent must be positive"));
            }
            config.extent_minus = Some(x);
        }
        "sim.extent_plus" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "truncation extent must be positive"));
            }
            config.extent_plus = Some(x);
        }
        "sim.cfl" => {
            let x = parse_number(key, value, line)?;
            if !(x > 0.0 && x <= 0.4) {
                return Err(range_error(key, value, "Courant factor must be in (0, 0.4]"));
            }
            config.cfl = x;
        }
        "sim.rho" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "amplitude radius must be positive"));
            }
            config.rho = x;
        }
        "sim.grad_threshold" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "gradient ceiling must be positive"));
            }
            config.grad_threshold = x;
        }
        "sim.output_interval" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "observation cadence must be positive"));
            }
            config.output_interval = x;
        }
        "bump.amp" => {
            let x = parse_number(key, value, line)?;
            if x < 0.0 {
                return Err(range_error(key, value, "bump amplitude must be nonnegative"));
            }
            config.bump_amp = x;
        }
        "bump.lo" => config.bump_lo = parse_number(key, value, line)?,
        "bump.hi" => config.bump_hi = parse_number(key, value, line)?,
        "energy.epsilon" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "weight decay rate must be positive"));
            }
            config.epsilon = x;
        }
        "energy.c" | "energy.C" => {
            let x = parse_number(key, value, line)?;
            if x < 0.0 {
                return Err(range_error(key, value, "weight correction must be nonnegative"));
            }
            config.energy_c = x;
        }
        "energy.transient_fraction" => {
            let x = parse_number(key, value, line)?;
            if !(0.0..=0.9).contains(&x) {
                return Err(range_error(key, value, "transient fraction must be in [0, 0.9]"));
            }
            config.transient_fraction = x;
        }
        "blowup.theta" => {
            let x = parse_number(key, value, line)?;
            if x < 0.0 {
                return Err(range_error(key, value, "bump size must be nonnegative"));
            }
            config.theta = x;
        }
        "blowup.family" => {
            let n = parse_count(key, value, line)?;
            if n > 2 {
                return Err(range_error(key, value, "family index must be 0, 1, or 2"));
            }
            config.family = n as usize;
        }
        "blowup.margin" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "distance margin must be positive"));
            }
            config.margin = x;
        }
        "blowup.grad_factor" => {
            let x = parse_number(key, value, line)?;
            if x <= 1.0 {
                return Err(range_error(key, value, "gradient growth factor must exceed one"));
            }
            config.grad_factor = x;
        }
        "blowup.amp_factor" => {
            let x = parse_number(key, value, line)?;
            if x < 1.0 {
                return Err(range_error(key, value, "amplitude ceiling must be at least one"));
            }
            config.amp_factor = x;
        }
        "nodamping.n_max" => {
            let n = parse_count(key, value, line)?;
            if n == 0 || n > 1024 {
                return Err(range_error(key, value, "family size must be between 1 and 1024"));
            }
            config.n_max = n as usize;
        }
        "nodamping.drift" => config.drift = parse_number(key, value, line)?,
        "nodamping.excursion" => {
            let x = parse_number(key, value, line)?;
            if x <= 0.0 {
                return Err(range_error(key, value, "excursion level must be positive"));
            }
            config.excursion = x;
        }
        "out.dir" => {
            if value.is_empty() {
                return Err(range_error(key, value, "output directory must be nonempty"));
            }
            config.out_dir = value.to_string();
        }
        "seed" => config.seed = parse_count(key, value, line)?,
        other => return Err(Error::UnknownKey(other.to_string())),
    }
    Ok(())
}

/// Parses line-oriented `key = value` text into a validated configuration;
/// defaults fill everything the text does not set, so empty text yields the
/// all-defaults profile experiment. Later assignments override earlier ones.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let eq = stripped.find('=').ok_or_else(|| Error::ParseError {
            line: line_no,
            message: format!("expected key = value, got {stripped:?}"),
        })?;
        let key = stripped[..eq].trim();
        let value = stripped[eq + 1..].trim();
        if key.is_empty() {
            return Err(Error::ParseError {
                line: line_no,
                message: "missing key before '='".to_string(),
            });
        }
        apply(&mut config, key, value, line_no)?;
    }
    // Cross-field coherence, checked once the whole text is applied so key
    // order cannot matter.
    if config.bump_lo >= config.bump_hi {
        return Err(range_error(
            "bump.lo",
            &config.bump_lo.to_string(),
            "bump support must be a nonempty interval",
        ));
    }
    Ok(config)
}
