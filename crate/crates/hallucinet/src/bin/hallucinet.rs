fn main() -> std::process::ExitCode {
    hallucinet::cli::main()
}
