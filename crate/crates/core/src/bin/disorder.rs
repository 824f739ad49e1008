fn main() {
    std::process::exit(markov_disorder::cli::main_with_args(std::env::args_os()));
}
