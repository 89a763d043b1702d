fn main() -> std::process::ExitCode {
    qubus::cli::main_entry()
}
