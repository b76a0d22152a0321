fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("REGRETLAB_LOG", "warn")).init();
    let code = regretlab::cli::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
