use env_logger::Env;

fn main() {
    let _ = env_logger::Builder::from_env(Env::default().default_filter_or("warn")).try_init();
    std::process::exit(netcpd::cli::run(std::env::args_os()));
}
