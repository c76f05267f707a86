//! Command-line entry point; see [`agtrees::cli`].

fn main() {
    std::process::exit(agtrees::cli::main_with_args(std::env::args_os()));
}
