//! Global Lipschitz bounds of a random one-hidden-layer network.
//!
//! ```text
//! cargo run --release --example global_bound -- 20 20 8
//! ```
//! Arguments: input width, hidden width, sparsity (defaults 20 20 8).

use lipcert::relaxation::{lipschitz_bound, Method, RelaxationSpec};
use lipcert::sampler::{lbs, DEFAULT_SAMPLES};
use lipcert::network::random_network;
use lipcert::InputRegion;

fn main() -> lipcert::Result<()> {
    env_logger::init();
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let p0 = args.first().copied().unwrap_or(20);
    let p1 = args.get(1).copied().unwrap_or(20);
    let s = args.get(2).copied().unwrap_or(8);
    let net = random_network(&[p0, p1], s, 0)?;
    let region = InputRegion::global(p0);

    let low = lbs(&net, &region, 0, DEFAULT_SAMPLES, 0)?;
    println!("lbs    {:.6}", low.lower_bound);
    for method in [Method::Shor, Method::HR2] {
        let b = lipschitz_bound(&net, &region, 0, &RelaxationSpec::new(method))?;
        println!(
            "{:<6} {:.6}  ({:?}, {} moments, {} blocks, {:.2} s)",
            method.as_str(),
            b.value,
            b.status,
            b.n_moment_vars,
            b.n_psd_blocks,
            b.solution.solve_time_s
        );
    }
    Ok(())
}
