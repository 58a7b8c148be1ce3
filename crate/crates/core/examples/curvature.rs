//! Principal curvatures of an axisymmetric radial graph, and the sphere fit.

use quermass_flow::diagnostics::{pinching_deficit, sphere_fit};
use quermass_flow::{curvature, Profile, SpaceForm};

fn main() -> quermass_flow::Result<()> {
    let sf = SpaceForm::new(1.0, 2)?;
    let p = Profile::from_fn(sf, 128, |phi| 0.8 + 0.05 * (2.0 * phi).cos())?;
    let cf = curvature(&p)?;
    println!("kappa range [{:.4}, {:.4}], strictly convex: {}", cf.min_kappa(), cf.max_kappa(), cf.is_strictly_convex());
    println!("pinching deficit omega = {:.3e}", pinching_deficit(&cf)?);
    for j in (0..=p.cells()).step_by(32) {
        println!("  phi = {:.3}  kappa_1 = {:.5}  kappa_2 = {:.5}  u = {:.5}", cf.phi[j], cf.kappa_profile[j], cf.kappa_rot[j], cf.u[j]);
    }
    let fit = sphere_fit(&p)?;
    println!("sphere fit: R = {:.6}, centre {:.2e}, residual {:.2e}", fit.radius, fit.center, fit.residual);
    Ok(())
}
