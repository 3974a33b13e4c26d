fn main() -> std::process::ExitCode {
    vfw_core::cli::main()
}
