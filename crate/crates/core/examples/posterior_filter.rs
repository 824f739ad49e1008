//! Track the posterior probability that the switch has happened along a
//! simulated trajectory, next to the optimal stop decision.

use markov_disorder::example::reference_model_at;
use markov_disorder::model::sample_trajectory;
use markov_disorder::posterior::{prob_window, WindowState};
use markov_disorder::stopping::solve_rstar;
use markov_disorder::Policy;

fn main() -> markov_disorder::Result<()> {
    let model = reference_model_at(0.9)?;
    let policy = Policy::optimal(solve_rstar(&model, 1e-12, 1_000_000)?.table);
    let traj = sample_trajectory(&model, 20, 3)?;
    println!("switch time theta = {}", traj.theta);

    let mut state = WindowState::start(&model);
    let mut stopped = false;
    for &x in &traj.states[1..] {
        state = state.push(&model, x)?;
        let window = state.window();
        let stop = !stopped && policy.decide(&model, state.n(), &window, state.pi());
        stopped |= stop;
        let hit = if state.is_full() {
            prob_window(&model, &window, state.pi())?
        } else {
            0.0
        };
        println!(
            "n = {:2}  x = {x}  Pi = {:.4}  P(|theta - n| <= d) = {hit:.4}{}",
            state.n(),
            state.pi(),
            if stop { "  <- stop" } else { "" }
        );
    }
    Ok(())
}
