fn main() {
    std::process::exit(wavefeas_cli::cli_main(std::env::args_os()));
}
