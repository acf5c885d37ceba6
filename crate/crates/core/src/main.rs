fn main() {
    std::process::exit(stokes_darcy::cli::main_entry(std::env::args_os()));
}
