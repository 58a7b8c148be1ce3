//! The trigonometric kernel of the three space forms and their geodesic spheres.

use quermass_flow::SpaceForm;

fn main() -> quermass_flow::Result<()> {
    for k in [1.0, 0.0, -1.0] {
        let sf = SpaceForm::new(k, 2)?;
        let r = 0.8;
        println!(
            "K = {k:>4}: s_K({r}) = {:.6}  c_K({r}) = {:.6}  sphere kappa = {:.6}  H = {:.6}",
            sf.s(r),
            sf.c(r),
            sf.sphere_principal_curvature(r)?,
            sf.sphere_mean_curvature(r)?
        );
    }
    Ok(())
}
