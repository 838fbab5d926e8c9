fn main() { std::process::exit(lnsim::cli::main()) }
