fn main() {
    let code = k3n_lattice::cli::run(std::env::args_os());
    std::process::exit(code);
}
