//! Monte Carlo estimate of the optimal rule against the exact value.

use markov_disorder::example::reference_model_at;
use markov_disorder::sim::{evaluate_exact, evaluate_mc, Z_999};
use markov_disorder::stopping::solve_rstar;
use markov_disorder::Policy;

fn main() -> markov_disorder::Result<()> {
    let model = reference_model_at(0.7)?;
    let policy = Policy::optimal(solve_rstar(&model, 1e-12, 1_000_000)?.table);

    let exact = evaluate_exact(&model, &policy, 20)?;
    let mc = evaluate_mc(&model, &policy, 200_000, 60, 42)?;
    let (lo, hi) = mc.wilson(Z_999);
    println!("exact       {:.6} (+ at most {:.1e})", exact.estimate, exact.truncation_bound);
    println!("simulated   {:.6} in [{lo:.6}, {hi:.6}] at 99.9%", mc.estimate);
    println!("censored    {:.2e}", mc.censor_rate);
    Ok(())
}
