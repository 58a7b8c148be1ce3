//! A perturbed sphere flows to the geodesic sphere with the same W_l.

use quermass_flow::diagnostics::{decay_fit, Series};
use quermass_flow::flow::{run, RunConfig};
use quermass_flow::integrals::ball_radius_from_quermass;
use quermass_flow::{Profile, SpaceForm};

fn main() -> quermass_flow::Result<()> {
    let sf = SpaceForm::new(1.0, 2)?;
    let ell = 1;
    let cfg = RunConfig { ell, cells: 128, cfl: 0.5, t_end: 3.0, ..RunConfig::default() };
    let p0 = Profile::from_fn(sf, cfg.cells, |phi| 0.8 + 0.05 * (2.0 * phi).cos())?;
    let traj = run(&p0, &cfg)?;
    let records = traj.records();
    for r in records.iter().step_by(4) {
        println!("t = {:.2}  mu = {:.5}  omega = {:.2e}  W_l = {:.10}", r.t, r.mu, r.omega, r.w_ell);
    }
    let last = traj.last();
    println!(
        "{} after {} steps: R_fit = {:.8}, radius from W_l = {:.8}, max conservation defect {:.1e}",
        traj.terminal.name(),
        traj.steps,
        last.sphere_fit_radius,
        ball_radius_from_quermass(sf, ell, traj.w_target)?,
        traj.max_conservation_defect
    );
    let fit = decay_fit(&records, Series::Omega, sf)?;
    println!("omega decay rate {:.2} (continuum bound -{:.0}), envelope {:.6}", fit.rate, fit.rate_bound, fit.envelope);
    Ok(())
}
