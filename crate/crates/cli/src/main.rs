use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use levelset_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("cannot configure {jobs} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = run(&cli);
    for line in &outcome.diagnostics {
        eprintln!("{line}");
    }
    if let Some((_, bytes)) = outcome.artifacts.first() {
        let _ = std::io::stdout().write_all(bytes);
    }
    if let Some(dir) = &cli.out {
        let written = std::fs::create_dir_all(dir).and_then(|()| {
            outcome
                .artifacts
                .iter()
                .try_for_each(|(name, bytes)| std::fs::write(dir.join(name), bytes))
        });
        if let Err(e) = written {
            eprintln!("cannot write artifacts to {}: {e}", dir.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::from(outcome.exit_code)
}
