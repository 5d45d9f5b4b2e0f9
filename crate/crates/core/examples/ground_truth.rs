//! Analytic VARX matrices of the eight-story substructure z2..z6.

use varx_shm::{ground_truth_varx, ChainModel, SubstructureSpec};

fn main() {
    let chain = ChainModel::eight_story();
    let spec = SubstructureSpec::three_internal();
    let model = ground_truth_varx(&chain, &spec, 1e-3).expect("reference configuration is valid");

    println!("substructure {spec}, internal DOFs {:?}", spec.internal_dofs());
    println!("A1 = {:.4}", model.a1);
    println!("A2 = {:.4}", model.a2);
    println!("B1 = {:.4}", model.b1);

    // A 10% loss of k4 moves the (1,2) block of A1 only.
    let damaged = chain.with_damage(4, 0.10).unwrap();
    let after = ground_truth_varx(&damaged, &spec, 1e-3).unwrap();
    println!("A1 change for k4 -10% = {:.2e}", after.a1 - &model.a1);
}
