//! Thresholds of the two-state reference model as piecewise rational
//! functions of p, and the stopping pairs on each piece.

use markov_disorder::example::{classify_pairs, piecewise_threshold, reference_model};

fn main() -> markov_disorder::Result<()> {
    let model = reference_model();
    let pw = piecewise_threshold(&model)?;
    for piece in &pw.pieces {
        println!("p in ({:.6}, {:.6}]  [{}]", piece.lower, piece.upper, piece.assignment);
        for (state, f) in piece.formulas.iter().enumerate() {
            println!("  r*({state}) = {f}");
        }
        let mid = 0.5 * (piece.lower + piece.upper);
        let pairs = classify_pairs(&model.with_p(mid)?)?;
        println!("  stop on pairs {pairs:?}");
    }
    Ok(())
}
