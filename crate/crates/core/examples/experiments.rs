//! Runs an experiment from a TOML snippet and prints its CSV output.

use approxqi::experiments::{run, write_table, ExperimentConfig};

fn main() -> approxqi::Result<()> {
    let cfg = ExperimentConfig::from_toml(
        r#"
experiment = "theta-scan"
count = [3]
degree = [1, 2, 3]
resolution = 5
"#,
        None,
    )?;
    let table = run(&cfg)?;
    write_table(std::io::stdout().lock(), &cfg, &table, 0.0)?;
    Ok(())
}
