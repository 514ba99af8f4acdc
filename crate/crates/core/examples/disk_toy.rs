//! Minimize `x₁x₂` over the unit disk. The first-order relaxation is already
//! exact here: `ρ₁ = −1/2`.

use lipcert::relaxation::{assemble_dense, assemble_shor, relax_pop, Method, RelaxationSpec};
use lipcert::pop::PopProblem;

fn main() -> lipcert::Result<()> {
    env_logger::init();
    let text = include_str!("data/disk_toy.json");
    let pop = PopProblem::from_json_str(text)?;
    print!("{}", pop.dump());
    let settings = Default::default();

    let shor = assemble_shor(&pop)?.solve(&settings)?;
    println!("shor     {:+.8}  {:?}", shor.value, shor.status);
    let hr2 = relax_pop(&pop, &RelaxationSpec::new(Method::HR2))?.solve(&settings)?;
    println!("hr2      {:+.8}  {:?}", hr2.value, hr2.status);
    let dense = assemble_dense(&pop, 2)?.solve(&settings)?;
    println!("dense d2 {:+.8}  {:?}", dense.value, dense.status);
    Ok(())
}
