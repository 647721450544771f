fn main() {
    let seed = std::env::var(refprice::config::SEED_ENV).ok();
    let code = refprice::cli::run(
        std::env::args_os(),
        seed.as_deref(),
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    std::process::exit(code);
}
