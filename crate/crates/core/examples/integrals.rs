//! Quermassintegrals, the Hsiung–Minkowski identities and Newton–MacLaurin.

use quermass_flow::integrals::{ball_quermass, hsiung_minkowski_residual, newton_maclaurin_check, quermassintegrals};
use quermass_flow::{Profile, SpaceForm};

fn main() -> quermass_flow::Result<()> {
    let sf = SpaceForm::new(1.0, 2)?;
    let ball = quermassintegrals(&Profile::sphere(sf, 128, 0.8)?)?;
    for ell in 0..=2 {
        println!("W_{ell}(B_0.8) = {:.10}  closed form {:.10}", ball.w[ell], ball_quermass(sf, ell, 0.8)?);
    }
    let p = Profile::from_fn(sf, 256, |phi| 0.8 + 0.05 * (2.0 * phi).cos())?;
    let q = quermassintegrals(&p)?;
    println!("perturbed sphere: W = {:?}, recursion residual {:.1e}", q.w, q.recursion_residual());
    for ell in 0..2 {
        println!("Hsiung-Minkowski residual, l = {ell}: {:.2e}", hsiung_minkowski_residual(&p, ell)?);
    }
    let nm = newton_maclaurin_check(&[0.3, 1.0, 4.0])?;
    println!("Newton-MacLaurin on (0.3, 1, 4): holds {}, worst margin {:.3}", nm.holds, nm.worst_margin);
    Ok(())
}
