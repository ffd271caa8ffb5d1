fn main() -> std::process::ExitCode {
    metakg::cli::main()
}
