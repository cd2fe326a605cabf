fn main() {
    let code = vismask::cli::run(
        std::env::args_os(),
        &|key| std::env::var(key).ok(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr(),
    );
    std::process::exit(code);
}
