fn main() {
    std::process::exit(lorentz_fick::cli::run_cli());
}
