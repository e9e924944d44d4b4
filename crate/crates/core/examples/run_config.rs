//! Drives a config file through the same path as `landau-lab run`:
//! `cargo run --example run_config -- configs/sample_check.toml /tmp/out`.
use landau_lab::cli::{emit_report, run_experiment, validate_config};
use std::path::PathBuf;

fn main() -> landau_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "configs/sample_check.toml".into()));
    let mut config = validate_config(&path)?;
    if let Some(out) = args.next() {
        config.out = out.into();
    }
    let manifest = run_experiment(&config, 0)?;
    print!("{}", emit_report(&manifest, &config.out)?);
    Ok(())
}
