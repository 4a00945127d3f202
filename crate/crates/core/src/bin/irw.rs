fn main() {
    let code = irw_core::cli::main_with(std::env::args_os(), &mut std::io::stdout());
    std::process::exit(code);
}
