use fracdpg::{cli, FracDpgError};

fn exit_code(err: &FracDpgError) -> i32 {
    match err {
        FracDpgError::Config(_) | FracDpgError::InvalidParameter { .. } => 1,
        _ => 2,
    }
}

fn main() {
    env_logger::init();

    let cfg = match cli::parse_config(std::env::args()) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("fracdpg: {err}");
            std::process::exit(1);
        }
    };

    // FRACDPG_THREADS caps the worker count; --serial forces one thread.
    let threads = if cfg.serial {
        Some(1)
    } else {
        std::env::var("FRACDPG_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&t| t >= 1)
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .expect("thread pool is built once at startup");
    }

    if let Err(err) = cli::run(&cfg) {
        eprintln!("fracdpg: {err}");
        std::process::exit(exit_code(&err));
    }
}
