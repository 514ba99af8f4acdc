//! Export a relaxation in SDPA sparse format, read it back and solve both.
//!
//! ```text
//! cargo run --release --example sdpa_export -- /tmp/hr2.dat-s
//! ```

use lipcert::conic::{export_sdpa, read_sdpa, solve, write_solution, Settings};
use lipcert::network::random_network;
use lipcert::relaxation::{relax, Method, RelaxationSpec};
use lipcert::InputRegion;

fn main() -> lipcert::Result<()> {
    env_logger::init();
    let path = std::env::args().nth(1).unwrap_or_else(|| "hr2.dat-s".into());
    let net = random_network(&[6, 6], 3, 0)?;
    let region = InputRegion::global(6);
    let c = net.output_row(0)?.to_vec();
    let r = relax(&net, &region, &c, &RelaxationSpec::new(Method::HR2))?;
    export_sdpa(&r.problem, &path)?;
    println!("wrote {path}: {} moments, {} psd blocks", r.n_moment_vars(), r.n_psd_blocks);

    let settings = Settings::default();
    let direct = solve(&r.problem, &settings)?;
    let back = read_sdpa(&path)?;
    let reread = solve(&back, &settings)?;
    println!(
        "in process {:.9} ({:?})  from file {:.9} ({:?})",
        direct.value, direct.status, reread.value, reread.status
    );
    let sol_path = format!("{path}.sol");
    write_solution(&reread, &sol_path)?;
    println!("wrote {sol_path}");
    Ok(())
}
