fn main() -> std::process::ExitCode {
    hsr_alloc::cli::main()
}
