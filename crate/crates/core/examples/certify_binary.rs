//! Train a small binary classifier on two concentric spheres, bound its
//! Lipschitz constant once on the box `‖x‖∞ ≤ 3`, and certify random points of
//! `‖x‖∞ ≤ 2.9` for ε up to 0.1.
//!
//! ```text
//! cargo run --release --example certify_binary
//! ```

use lipcert::certify::{default_epsilons, ratio_sweep, train_binary, two_spheres, uniform_box, Certifier};
use lipcert::relaxation::{lipschitz_bound, Method, RelaxationSpec};
use lipcert::InputRegion;

fn main() -> lipcert::Result<()> {
    env_logger::init();
    let dim = 20;
    let (xs, labels) = two_spheres(2000, dim, 0.05, 0);
    let net = train_binary(20, &xs, &labels, 300, 0.1, 0)?;
    let region = InputRegion::local(vec![0.0; dim], 3.0)?;
    let points = uniform_box(10_000, dim, 2.9, 1);

    let eps = default_epsilons();
    print!("{:<6}", "eps");
    for e in &eps {
        print!(" {e:>6.2}");
    }
    println!();
    for method in [Method::HR2, Method::Shor] {
        let b = lipschitz_bound(&net, &region, 0, &RelaxationSpec::new(method))?;
        let cert = Certifier::Binary {
            bound: b.value,
            region: Some(region.clone()),
        };
        print!("{:<6}", method.as_str());
        for r in ratio_sweep(&net, &cert, &points, &eps)? {
            print!(" {:>5.1}%", 100.0 * r.ratio);
        }
        println!("   (L = {:.4})", b.value);
    }
    Ok(())
}
