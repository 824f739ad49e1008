//! Solve for the optimal thresholds of a model file and print the
//! optimal success probability.
//!
//! ```text
//! cargo run --example solve_thresholds -- crates/core/data/two_state.json 0.8 1
//! ```

use markov_disorder::stopping::{solve_rstar, value_at_start};
use markov_disorder::{DisorderModel, ModelFile};

fn main() -> markov_disorder::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "crates/core/data/two_state.json".into());
    let mut file = ModelFile::from_json(&std::fs::read_to_string(path)?)?;
    if let Some(p) = args.next() {
        file.p = p.parse().expect("p must be a number");
    }
    if let Some(d) = args.next() {
        file.d = d.parse().expect("d must be an integer");
    }
    let model = DisorderModel::from_file(&file)?;

    let solution = solve_rstar(&model, 1e-12, 1_000_000)?;
    println!(
        "p = {}, d = {}: {} iterations, error <= {:.1e}",
        model.p(),
        model.d(),
        solution.iterations,
        solution.certified_error
    );
    for (tuple, r) in solution.table.iter() {
        println!("r*{tuple:?} = {r:.10}");
    }
    println!("P(|theta - tau*| <= d) = {:.10}", value_at_start(&model, &solution.table)?);
    Ok(())
}
