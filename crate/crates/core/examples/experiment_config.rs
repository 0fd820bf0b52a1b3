//! Parses an experiment configuration, runs it and prints the CSV it wrote.

use fbreg::cli::{run, Command, ExperimentConfig};

const CONFIG: &str = r#"
scenario = "gamma"
seed = 42

[kernel]
s = 0.5
drift = [0.5]

[gamma]
directions = [[1.0], [-1.0]]
speeds = [0.0, 1.0]
"#;

fn main() -> fbreg::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG)?;
    println!("canonical form:\n{}", cfg.to_toml());
    let dir = std::env::temp_dir().join("fbreg-example");
    let out = run(Command::Gamma, &cfg, &dir)?;
    println!("{}", out.summary);
    for f in &out.files {
        print!("{}", std::fs::read_to_string(f)?);
    }
    match ExperimentConfig::parse("scenario = \"gamma\"\n[kernel]\ns = 0.4\ndrift = [1.0]\n") {
        Err(e) => println!("rejected as expected: {e} (exit code {})", e.exit_code()),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
