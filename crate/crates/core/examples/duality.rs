//! Gauss-map duality on the unit sphere and the soliton equation.

use quermass_flow::elliptic::{gauss_dual, soliton_solve, sphere_soliton_beta, CurvatureFunction};
use quermass_flow::{Profile, SpaceForm};

fn main() -> quermass_flow::Result<()> {
    let sf = SpaceForm::new(1.0, 2)?;
    let p = Profile::from_fn(sf, 256, |phi| 0.7 + 0.03 * (2.0 * phi).cos() + 0.01 * phi.cos())?;
    let (dual, check) = gauss_dual(&p)?;
    let (back, _) = gauss_dual(&dual)?;
    let round_trip = back.rho().iter().zip(p.rho()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!(
        "|kappa~ kappa - 1| {:.1e}, |c~ - u| {:.1e}, dual of dual {:.1e}",
        check.kappa_product, check.ck_vs_support, round_trip
    );
    let (sphere_dual, _) = gauss_dual(&Profile::sphere(sf, 256, 0.5)?)?;
    println!("dual of the 0.5-sphere has radius {:.12} (pi/2 - 0.5 = {:.12})", sphere_dual.rho()[0], std::f64::consts::FRAC_PI_2 - 0.5);

    let beta = sphere_soliton_beta(sf, 0.7);
    let rep = soliton_solve(&CurvatureFunction::Mean, beta, &p)?;
    println!(
        "soliton beta = {beta:.6}: residual {:.1e}, R = {:.8}, centre {:.1e}",
        rep.residual, rep.sphere_fit.radius, rep.sphere_fit.center
    );
    Ok(())
}
