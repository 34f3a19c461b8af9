fn main() {
    if let Some(n) = std::env::var("RIMFLOW_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    std::process::exit(rimflow_cli::run(std::env::args().collect()));
}
