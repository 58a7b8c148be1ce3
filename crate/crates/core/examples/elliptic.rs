//! Rigidity of F = gamma c_K^alpha: Newton solves from perturbed spheres land
//! on centred spheres.

use quermass_flow::cli::perturbed_sphere;
use quermass_flow::elliptic::{hypothesis_check, sphere_gamma, weingarten_solve, CurvatureFunction, Params};
use quermass_flow::SpaceForm;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> quermass_flow::Result<()> {
    let sf = SpaceForm::new(1.0, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for f in CurvatureFunction::builtins() {
        for alpha in [1.0, -1.0, 2.0] {
            let gamma = sphere_gamma(sf, &f, 0.6, alpha);
            let init = perturbed_sphere(sf, 128, 0.6, 0.05, &mut rng)?;
            let rep = weingarten_solve(&f, gamma, alpha, sf, &init)?;
            let flags = hypothesis_check(&rep.profile, &f, Params::Weingarten { alpha })?;
            println!(
                "{:>8} alpha {alpha:>4}: {} Newton steps, R = {:.10} (root {:.10}), centre {:.1e}, route {}",
                f.name(),
                rep.iterations,
                rep.sphere_fit.radius,
                rep.radius_root.unwrap_or(f64::NAN),
                rep.sphere_fit.center,
                flags.route
            );
        }
    }
    Ok(())
}
