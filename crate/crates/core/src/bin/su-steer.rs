fn main() {
    std::process::exit(su_steer::cli::main_from_env());
}
