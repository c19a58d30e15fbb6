fn main() {
    let debug = std::env::args().any(|a| a == "--debug");
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if debug {
        "debug"
    } else {
        "warn"
    }))
    .init();
    std::process::exit(posterkit::cli::run(std::env::args_os()));
}
