//! Origin constants, the outradius bound and event-driven origin shifts on an
//! off-centre start.

use quermass_flow::flow::{run, RunConfig};
use quermass_flow::origin::{origin_report, outradius_bound, ShiftPolicy};
use quermass_flow::{Profile, SpaceForm};

fn main() -> quermass_flow::Result<()> {
    let sf = SpaceForm::new(1.0, 2)?;
    let p0 = Profile::from_fn(sf, 128, |phi| 0.8 + 0.05 * (2.0 * phi).cos())?.recenter(0.15)?;
    let rep = origin_report(&p0, 0)?;
    println!(
        "inradius {:.4} (centre {:.4}), outradius {:.4} (centre {:.4}), d2 {:.4}, eps1 {:.4}, C0 {:.4}",
        rep.inradius, rep.in_center, rep.outradius, rep.out_center, rep.d2, rep.eps1, rep.pinch_c0
    );
    let b = outradius_bound(&p0, 0)?;
    println!("outradius {:.4} <= pi/2 - d2/max H = {:.4}: {}", b.outradius, b.bound, b.holds);

    let cfg = RunConfig {
        cells: 128,
        cfl: 0.5,
        t_end: 3.0,
        shift_policy: ShiftPolicy::EventDriven { u_ratio: 0.95, margin: 0.05, freeze_omega: Some(1e-3) },
        ..RunConfig::default()
    };
    let traj = run(&p0, &cfg)?;
    for s in &traj.shifts {
        println!("shift at t = {:.3} by {:+.4}", s.t, s.shift);
    }
    println!("{}; final centre offset {:.1e}", traj.terminal.name(), traj.last().sphere_fit_center);
    Ok(())
}
