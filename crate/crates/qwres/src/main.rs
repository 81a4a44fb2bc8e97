//! Binary entry point: delegates to the library dispatcher.

fn main() {
    std::process::exit(qwres::run(std::env::args_os()));
}
