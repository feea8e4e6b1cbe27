//! Lambert W, Gaussian quadrature and the frailty integral `φ_Δ(x, s)`.
//!
//! ```text
//! cargo run --example special_functions
//! ```

use cox_overfit::special::{lambert_w, lambert_w_exp, phi_delta, phi_ratio, QuadratureRule};

fn main() -> cox_overfit::Result<()> {
    for x in [0.1, 1.0, 10.0, 1e3] {
        let w = lambert_w(x)?;
        println!("W({x:>7}) = {w:.12}   check w e^w - x = {:+.2e}", w * w.exp() - x);
    }
    // log-argument form for inputs that would overflow
    println!("W(e^800) = {:.10}", lambert_w_exp(800.0)?);

    let rule = QuadratureRule::hermite(40)?;
    println!(
        "\nE[y^4] under N(0,1) with 40 nodes: {:.12}",
        rule.expect(|y| y.powi(4))
    );
    let legendre = QuadratureRule::legendre(20)?;
    println!(
        "int_0^pi sin = {:.12}",
        legendre.integrate(0.0, std::f64::consts::PI, f64::sin)?
    );

    println!("\n  x      s    phi_0        phi_1        phi_1/phi_0");
    for (x, s) in [(0.5, 0.5), (1.0, 1.0), (4.0, 2.0)] {
        println!(
            "{x:5.1}  {s:5.1}  {:.6e}  {:.6e}  {:.6}",
            phi_delta(x, s, 0, &rule)?,
            phi_delta(x, s, 1, &rule)?,
            phi_ratio(x, s, 0, &rule)?
        );
    }
    Ok(())
}
