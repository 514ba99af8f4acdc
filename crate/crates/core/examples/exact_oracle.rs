//! The sandwich `LBS ≤ exact ≤ HR-2 ≤ Shor` on small one-hidden-layer networks.

use lipcert::network::random_network;
use lipcert::relaxation::{lipschitz_bound, Method, RelaxationSpec};
use lipcert::sampler::{exact_lipschitz_1hidden, lbs};
use lipcert::InputRegion;

fn main() -> lipcert::Result<()> {
    env_logger::init();
    println!("{:<8} {:>4} {:>10} {:>10} {:>10} {:>10}", "size", "seed", "lbs", "exact", "hr2", "shor");
    for sizes in [[3, 2], [4, 3], [6, 4]] {
        for seed in 0..3 {
            let net = random_network(&sizes, sizes[0], seed)?;
            let region = InputRegion::global(sizes[0]);
            let low = lbs(&net, &region, 0, 50_000, seed)?.lower_bound;
            let exact = exact_lipschitz_1hidden(&net, &region, 0)?;
            let hr2 = lipschitz_bound(&net, &region, 0, &RelaxationSpec::new(Method::HR2))?.value;
            let shor = lipschitz_bound(&net, &region, 0, &RelaxationSpec::new(Method::Shor))?.value;
            println!(
                "{:<8} {seed:>4} {low:>10.6} {exact:>10.6} {hr2:>10.6} {shor:>10.6}",
                format!("{sizes:?}")
            );
        }
    }
    Ok(())
}
