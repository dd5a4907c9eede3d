fn main() -> anyhow::Result<()> {
    fpmp::cli::run_from(std::env::args_os())
}
