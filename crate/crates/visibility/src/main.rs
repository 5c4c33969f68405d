use clap::Parser;
use visibility::cli::{run, worker_count, Cli};

fn main() {
    let cli = Cli::parse();
    let workers = worker_count(&cli);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool construction");
    match pool.install(|| run(&cli)) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
