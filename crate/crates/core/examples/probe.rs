use detwave::config::parse_config;
use detwave::experiments::majda_run;

fn main() {
    let text = "experiment = majda-stability\n\
                model.q = 0.01\n\
                sim.h = 5e-3\n\
                sim.t_max = 50\n\
                sim.extent = 30\n\
                sim.output_interval = 0.5\n\
                bump.amp = 1e-3\n\
                bump.lo = -6\n\
                bump.hi = -5\n";
    let config = parse_config(text).unwrap();
    let s = majda_run(&config).unwrap();
    println!(
        "status={:?} certified={} theta_hat={:.6} r2={:.6} psi_rate={:.6} psi_r2={:.6} sup_ratio={:.4} c_fit={:.4} residual={:.3e} wall={:.1}s rows={}",
        s.status, s.certified, s.theta_hat, s.r2, s.psi_rate, s.psi_r2, s.sup_ratio, s.c_fit, s.residual, s.wall_seconds, s.rows.len()
    );
    for r in s.rows.iter().step_by(10) {
        println!("t={:6.2} E={:.6e} sup_v={:.3e} sup_zeta={:.3e} |psid-s|={:.3e}", r.t, r.energy, r.sup_v, r.sup_zeta, (r.psi_dot - 0.5).abs());
    }
}
