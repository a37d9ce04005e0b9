//! Acceptance suite: one pass/fail verdict per advertised guarantee.
//!
//! Every criterion renders its CSV artifacts under the chosen output
//! directory and returns a one-line report with the measured numbers, so
//! the suite doubles as the reference data generator. Identical seed and
//! configuration reproduce bit-identical artifacts.

use crate::blowup::{no_damping_family, GasProfile, GasRunConfig};
use crate::config::parse_config;
use crate::error::Result;
use crate::experiments::{
    blowup_rows, csv_row, decay_sweep, eigen_audit, majda_rows, majda_run, negative_speed_rows,
    negative_speed_run, no_damping_rows, profile_rows, profile_summary, slope_oracle,
    slope_oracle_rows, znd_sweep,
};
use crate::blowup::Verdict;
use std::path::Path;
use std::time::Instant;

/// Verdict of one acceptance criterion.
#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CriterionReport {
    /// The one-line form printed by the `accept` subcommand.
    pub fn line(&self) -> String {
        format!(
            "criterion {:02} {:<22} {} {}",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

fn report(id: usize, name: &'static str, pass: bool, detail: String) -> CriterionReport {
    CriterionReport {
        id,
        name,
        pass,
        detail,
    }
}

/// Runs the whole acceptance suite, writing artifacts under `out_dir`.
pub fn run_acceptance(out_dir: &Path, seed: u64, workers: usize) -> Result<Vec<CriterionReport>> {
    let mut reports = Vec::with_capacity(10);

    // -- 1: profile oracle ---------------------------------------------
    let started = Instant::now();
    let config = parse_config("")?;
    let (profile, prof_report) = profile_summary(&config)?;
    let rows = profile_rows(&profile)?;
    let mut worst = 0.0f64;
    for row in &rows {
        let (x, u) = (row[0], row[1]);
        if x >= 0.0 {
            continue;
        }
        let lhs = 0.5 * u * u - 0.5 * u;
        let rhs = -0.045 * (1.0 - (2.0 * x).exp());
        worst = worst.max((lhs - rhs).abs());
    }
    let wall = started.elapsed().as_secs_f64();
    write_profile_csv(out_dir, &rows)?;
    let sigma_err = (profile.sigma() - 0.5).abs();
    let end_err = (profile.u_minus_inf() - 0.9).abs();
    let pass = sigma_err <= 1e-12
        && end_err <= 1e-12
        && worst <= 1e-8
        && prof_report.envelope_ok
        && wall < 1.0;
    reports.push(report(
        1,
        "profile-oracle",
        pass,
        format!(
            "sigma_err={sigma_err:.1e} end_err={end_err:.1e} implicit_defect={worst:.1e} wall={wall:.2}s"
        ),
    ));

    // -- 2: decay envelope ---------------------------------------------
    let qs = [0.09, 0.05, 0.01, 0.001];
    let sweep = decay_sweep(&config, &qs)?;
    crate::experiments::write_csv(
        &out_dir.join("decay.csv"),
        "q,kappa",
        sweep.iter().map(|&(q, kappa)| vec![q, kappa]),
    )?;
    let monotone = sweep.windows(2).all(|w| w[1].1 < w[0].1);
    let positive = sweep.iter().all(|&(_, kappa)| kappa > 0.0);
    reports.push(report(
        2,
        "decay-envelope",
        monotone && positive,
        format!(
            "kappa({})={:.3e} .. kappa({})={:.3e} monotone={monotone}",
            sweep[0].0,
            sweep[0].1,
            sweep[sweep.len() - 1].0,
            sweep[sweep.len() - 1].1
        ),
    ));

    // -- 3: shock-frame stability ----------------------------------------
    let majda_config = parse_config(
        "experiment = majda-stability\n\
         model.q = 0.01\n\
         sim.h = 5e-3\n\
         sim.t_max = 50\n\
         sim.extent = 30\n\
         sim.output_interval = 0.5\n\
         bump.amp = 1e-3\n\
         bump.lo = -6\n\
         bump.hi = -5\n",
    )?;
    let majda = majda_run(&majda_config)?;
    crate::experiments::write_csv(
        &out_dir.join("majda.csv"),
        "t,psi,psi_dot,sup_v,sup_vx,sup_zeta,energy",
        majda_rows(&majda),
    )?;
    let rate_ratio = (majda.psi_rate / majda.theta_hat - 1.0).abs();
    let pass = majda.status == crate::sim::RunStatus::Completed
        && majda.theta_hat > 0.0
        && majda.r2 >= 0.98
        && rate_ratio <= 0.5
        && majda.sup_ratio <= 2.0
        && majda.wall_seconds < 60.0;
    reports.push(report(
        3,
        "majda-stability",
        pass,
        format!(
            "theta_hat={:.4} r2={:.4} psi_rate={:.4} sup_ratio={:.3} wall={:.1}s",
            majda.theta_hat, majda.r2, majda.psi_rate, majda.sup_ratio, majda.wall_seconds
        ),
    ));

    // -- 5 (run now, reported after 4): negative-speed instability -------
    let negative_config = parse_config(
        "experiment = negative-speed\n\
         sim.h = 5e-3\n\
         sim.t_max = 12\n\
         sim.extent = 12\n\
         sim.output_interval = 0.25\n\
         bump.amp = 1e-3\n\
         bump.lo = 2\n\
         bump.hi = 3\n\
         energy.epsilon = 1.2\n",
    )?;
    let negative = negative_speed_run(&negative_config)?;
    crate::experiments::write_csv(
        &out_dir.join("negative_speed.csv"),
        "t,weighted_norm,sup_zeta",
        negative_speed_rows(&negative),
    )?;

    // -- 4: damping residual + negative control --------------------------
    let pass = majda.residual <= 0.0 && majda.c_fit <= 1e3 && negative.worst_residual > 0.0;
    reports.push(report(
        4,
        "damping-residual",
        pass,
        format!(
            "residual={:.2e} c_fit={:.3} control_residual={:.3e}",
            majda.residual, majda.c_fit, negative.worst_residual
        ),
    ));

    // -- 5 reported -------------------------------------------------------
    let rate_err = (negative.growth_rate / negative.expected_rate - 1.0).abs();
    let pass = negative.sigma < 0.0 && rate_err <= 0.05;
    reports.push(report(
        5,
        "negative-speed",
        pass,
        format!(
            "sigma={:.3} rate={:.5} expected={:.5} rel_err={:.3}%",
            negative.sigma,
            negative.growth_rate,
            negative.expected_rate,
            100.0 * rate_err
        ),
    ));

    // -- 6: scalar catastrophe oracle ------------------------------------
    let h_oracle = 1e-3;
    let oracle = slope_oracle(&[0.5, 1.0, 2.0], h_oracle)?;
    crate::experiments::write_csv(
        &out_dir.join("slope_oracle.csv"),
        "m,pole,t_star,t_grad,t_rho",
        slope_oracle_rows(&oracle),
    )?;
    let mut pass = true;
    let mut worst_pole = 0.0f64;
    let mut worst_gap = 0.0f64;
    for row in &oracle {
        let slack = 5.0 * h_oracle / (row.m * row.m);
        let pole_err = (row.t_star - row.pole).abs();
        pass &= pole_err <= slack;
        pass &= (row.t_grad - row.t_rho).abs() <= 2.0 * h_oracle;
        worst_pole = worst_pole.max(pole_err * row.m * row.m / h_oracle);
        worst_gap = worst_gap.max((row.t_grad - row.t_rho).abs() / h_oracle);
    }
    reports.push(report(
        6,
        "slope-oracle",
        pass,
        format!("worst_pole_err={worst_pole:.2}h/m^2 detector_gap={worst_gap:.2}h"),
    ));

    // -- 7: gas catastrophe sweep ----------------------------------------
    let gas = GasProfile::standard();
    let base = GasRunConfig {
        h: 5e-3,
        window_halfwidth: 1.5,
        ..GasRunConfig::default()
    };
    let thetas = [0.1, 0.05];
    let sweep = znd_sweep(&gas, &base, &thetas, workers, 1e3, 2.0)?;
    for outcome in &sweep {
        crate::experiments::write_csv(
            &out_dir.join(format!("znd_theta_{}.csv", outcome.theta)),
            "t,sup_amp,sup_grad,min_rho,forecast",
            blowup_rows(outcome),
        )?;
    }
    let mut pass = true;
    for outcome in &sweep {
        pass &= outcome.z_max <= 1e-13;
        pass &= outcome.report.verdict == Verdict::Blowup;
        pass &= outcome.report.amp_growth <= 2.0;
        pass &= outcome.report.grad_growth >= 1e3;
        pass &= outcome.report.within_forecast;
        pass &= outcome.wall_seconds < 300.0;
    }
    let ratio = match (sweep[1].report.t_star, sweep[0].report.t_star) {
        (Some(slow), Some(fast)) => slow / fast,
        _ => f64::NAN,
    };
    pass &= (ratio - 2.0).abs() <= 0.4;
    reports.push(report(
        7,
        "znd-blowup",
        pass,
        format!(
            "t_star=({:?},{:?}) ratio={ratio:.3} z_max={:.1e} amp=({:.2},{:.2}) wall=({:.0}s,{:.0}s)",
            sweep[0].report.t_star,
            sweep[1].report.t_star,
            sweep.iter().map(|o| o.z_max).fold(0.0f64, f64::max),
            sweep[0].report.amp_growth,
            sweep[1].report.amp_growth,
            sweep[0].wall_seconds,
            sweep[1].wall_seconds
        ),
    ));

    // -- 8: eigen machinery ----------------------------------------------
    let audit = eigen_audit(seed, 1000)?;
    crate::experiments::write_csv(
        &out_dir.join("eigen_audit.csv"),
        "states,max_biorth,max_gamma_defect,max_spectrum_defect",
        [vec![
            audit.states as f64,
            audit.max_biorth,
            audit.max_gamma_defect,
            audit.max_spectrum_defect,
        ]],
    )?;
    let pass = audit.max_biorth <= 1e-10
        && audit.max_gamma_defect <= 1e-8
        && audit.max_spectrum_defect <= 1e-10;
    reports.push(report(
        8,
        "eigen-machinery",
        pass,
        format!(
            "biorth={:.1e} gamma_defect={:.1e} spectrum={:.1e}",
            audit.max_biorth, audit.max_gamma_defect, audit.max_spectrum_defect
        ),
    ));

    // -- 9: no-damping family --------------------------------------------
    let family = no_damping_family(16, 0.4, 1.0, 1e3)?;
    crate::experiments::write_csv(
        &out_dir.join("no_damping.csv"),
        "n,amp,h2_norm,l2_max,t_excursion,t_star,hyperbola_r2",
        no_damping_rows(&family),
    )?;
    let picks: Vec<_> = [4usize, 8, 16]
        .iter()
        .map(|&n| family.rows[n - 1])
        .collect();
    let mut pass = true;
    for pair in picks.windows(2) {
        pass &= pair[1].h2_norm < pair[0].h2_norm;
    }
    for row in &picks {
        pass &= row.t_excursion.is_some();
        // The initial norm follows the 1/(n+1) law of the family.
        let scale = row.h2_norm * (row.n as f64 + 1.0);
        let reference = picks[0].h2_norm * (picks[0].n as f64 + 1.0);
        pass &= (scale / reference - 1.0).abs() <= 0.05;
    }
    reports.push(report(
        9,
        "no-damping-family",
        pass,
        format!(
            "h2(4)={:.3e} h2(8)={:.3e} h2(16)={:.3e} excursions={}",
            picks[0].h2_norm,
            picks[1].h2_norm,
            picks[2].h2_norm,
            picks.iter().filter(|r| r.t_excursion.is_some()).count()
        ),
    ));

    // -- 10: determinism ---------------------------------------------------
    // Representative engines are re-rendered in-process and compared byte
    // for byte; cross-process reproducibility of the shipped configs is
    // covered by the golden-file tests.
    let render = || -> Result<String> {
        let mut text = String::new();
        let (profile, _) = profile_summary(&config)?;
        for row in profile_rows(&profile)?.iter().take(64) {
            text.push_str(&csv_row(row));
            text.push('\n');
        }
        for row in slope_oracle_rows(&slope_oracle(&[1.0], 1e-2)?) {
            text.push_str(&csv_row(&row));
            text.push('\n');
        }
        let audit = eigen_audit(seed, 128)?;
        text.push_str(&csv_row(&[
            audit.max_biorth,
            audit.max_gamma_defect,
            audit.max_spectrum_defect,
        ]));
        text.push('\n');
        let short_config = parse_config(
            "experiment = majda-stability\n\
             model.q = 0.01\n\
             sim.h = 0.01\n\
             sim.t_max = 3\n\
             sim.extent = 8\n\
             sim.output_interval = 0.25\n\
             bump.lo = -4\n\
             bump.hi = -3\n",
        )?;
        for row in majda_rows(&majda_run(&short_config)?) {
            text.push_str(&csv_row(&row));
            text.push('\n');
        }
        let quick_gas = GasRunConfig {
            theta: 0.8,
            window_halfwidth: 1.0,
            ..GasRunConfig::default()
        };
        let trajectory = crate::blowup::simulate_gas(&gas, &quick_gas)?;
        for point in &trajectory.points {
            text.push_str(&csv_row(&[
                point.t,
                point.sup_amp,
                point.sup_grad,
                point.min_rho,
            ]));
            text.push('\n');
        }
        Ok(text)
    };
    let first = render()?;
    let second = render()?;
    let pass = first == second;
    reports.push(report(
        10,
        "determinism",
        pass,
        format!("rendered {} bytes twice, identical={pass}", first.len()),
    ));

    Ok(reports)
}

fn write_profile_csv(out_dir: &Path, rows: &[Vec<f64>]) -> Result<()> {
    crate::experiments::write_csv(
        &out_dir.join("profile.csv"),
        "x,u_bar,z_bar,du_bar",
        rows.iter().cloned(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_lines_carry_verdict_and_detail() {
        let line = report(3, "majda-stability", true, "theta=0.5".into()).line();
        assert!(line.starts_with("criterion 03 majda-stability"));
        assert!(line.contains("PASS"));
        assert!(line.contains("theta=0.5"));
        let line = report(7, "znd-blowup", false, String::new()).line();
        assert!(line.contains("FAIL"));
    }
}
