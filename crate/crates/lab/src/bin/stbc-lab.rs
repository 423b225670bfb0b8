fn main() -> std::process::ExitCode {
    stbc_lab::cli::main()
}
