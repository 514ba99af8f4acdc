//! Two hidden layers: the objective `tᵀA₁ᵀdiag(u₁)A₂ᵀdiag(u₂)c` is cubic.
//! HR-1 and HR-2 carry the cubic moments with extra blocks; Shor lifts
//! `s = u₁u₂ᵀ` so that the objective becomes quadratic.
//!
//! ```text
//! cargo run --release --example two_hidden -- 10 10 10 8
//! ```

use lipcert::network::random_network;
use lipcert::relaxation::{lipschitz_bound, CubicMode, Method, RelaxationSpec};
use lipcert::sampler::lbs;
use lipcert::InputRegion;

fn main() -> lipcert::Result<()> {
    env_logger::init();
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let sizes = if args.len() >= 3 { args[..3].to_vec() } else { vec![10, 10, 10] };
    let s = args.get(3).copied().unwrap_or(8);
    let net = random_network(&sizes, s, 0)?;
    let region = InputRegion::global(sizes[0]);
    println!("lbs                {:.6}", lbs(&net, &region, 0, 50_000, 0)?.lower_bound);
    let runs = [
        ("hr1 per_triple", Method::HR1, CubicMode::PerTriple),
        ("hr2 per_triple", Method::HR2, CubicMode::PerTriple),
        ("hr2 aggregated", Method::HR2, CubicMode::Aggregated),
        ("shor (lifted)", Method::Shor, CubicMode::Lifted),
    ];
    for (name, method, mode) in runs {
        let spec = RelaxationSpec::new(method).with_cubic_mode(mode);
        let b = lipschitz_bound(&net, &region, 0, &spec)?;
        println!(
            "{name:<18} {:.6}  ({:?}, {} moments, {} blocks)",
            b.value, b.status, b.n_moment_vars, b.n_psd_blocks
        );
    }
    Ok(())
}
