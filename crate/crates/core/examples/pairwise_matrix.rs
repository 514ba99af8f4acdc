//! Pairwise bounds `L_{ij}` for a four-class network and multiclass
//! certification with them.

use lipcert::certify::{certified_ratio, pairwise_matrix, uniform_box, Certifier};
use lipcert::network::random_network_with_outputs;
use lipcert::relaxation::{Method, RelaxationSpec};
use lipcert::InputRegion;

fn main() -> lipcert::Result<()> {
    env_logger::init();
    let net = random_network_with_outputs(&[5, 6], 5, 4, 3)?;
    let region = InputRegion::global_with_radius(5, 2.0)?;
    let m = pairwise_matrix(&net, &region, &RelaxationSpec::new(Method::HR2))?;
    println!("{} solves", m.n_solves);
    for row in m.to_rows() {
        let cells: Vec<String> = row
            .iter()
            .map(|v| v.map_or_else(|| "     -".to_string(), |v| format!("{v:6.3}")))
            .collect();
        println!("{}", cells.join(" "));
    }
    let points = uniform_box(2000, 5, 1.5, 0);
    let cert = Certifier::Multiclass(m);
    for eps in [0.01, 0.05, 0.1, 0.5] {
        let r = certified_ratio(&net, &cert, &points, eps)?;
        println!("eps {eps:<5} certified {:.1}%", 100.0 * r.ratio);
    }
    Ok(())
}
