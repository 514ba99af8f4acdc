//! Local Lipschitz bound on the ball of radius ε = 0.1 around a random input,
//! compared with the global bound of the same network.
//!
//! ```text
//! cargo run --release --example local_bound -- 20 20 8
//! ```

use lipcert::network::{random_network, DEFAULT_LOCAL_EPSILON};
use lipcert::relaxation::{lipschitz_bound, Method, RelaxationSpec};
use lipcert::sampler::lbs;
use lipcert::InputRegion;

fn main() -> lipcert::Result<()> {
    env_logger::init();
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let p0 = args.first().copied().unwrap_or(20);
    let p1 = args.get(1).copied().unwrap_or(20);
    let s = args.get(2).copied().unwrap_or(8);
    let net = random_network(&[p0, p1], s, 1)?;
    let x0: Vec<f64> = (0..p0).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();

    let spec = RelaxationSpec::new(Method::HR2);
    for (name, region) in [
        ("local", InputRegion::local(x0, DEFAULT_LOCAL_EPSILON)?),
        ("global", InputRegion::global(p0)),
    ] {
        let low = lbs(&net, &region, 0, 10_000, 0)?.lower_bound;
        let up = lipschitz_bound(&net, &region, 0, &spec)?;
        println!("{name:<6}  lbs {low:.6}  hr2 {:.6}  ({:?})", up.value, up.status);
    }
    Ok(())
}
