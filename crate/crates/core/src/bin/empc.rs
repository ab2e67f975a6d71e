fn main() { std::process::exit(empc_core::cli::dispatch(std::env::args_os())); }
