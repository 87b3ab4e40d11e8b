fn main() {
    std::process::exit(materiel_pulse::cli::main_from_env());
}
