//! Exact success probabilities of the optimal rule and its competitors.

use markov_disorder::example::reference_model_at;
use markov_disorder::sim::{dominance_sweep, CompetitorFamily};
use markov_disorder::stopping::{solve_rstar, value_at_start};

fn main() -> markov_disorder::Result<()> {
    let model = reference_model_at(0.8)?.with_d(1);
    let rstar = solve_rstar(&model, 1e-12, 1_000_000)?.table;
    let report = dominance_sweep(&model, &rstar, &CompetitorFamily::standard(), 20)?;

    println!("value at start      {:.10}", value_at_start(&model, &rstar)?);
    println!("optimal (T = 20)    {:.10}", report.optimal.estimate);
    let mut rows = report.competitors.clone();
    rows.sort_by(|a, b| b.estimate.total_cmp(&a.estimate));
    for r in rows.iter().take(8) {
        println!("{:<19} {:.10}", r.policy_id, r.estimate);
    }
    println!("verdict: {:?}", report.verdict);
    Ok(())
}
