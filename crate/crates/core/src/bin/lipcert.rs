fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (code, out) = lipcert::cli::run(std::env::args_os());
    println!("{out}");
    std::process::exit(code);
}
