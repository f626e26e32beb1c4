//! Write a generated table to CSV with a matching dataset config, then load
//! it back the way the command-line tool would.
//!
//! cargo run --example export_dataset -- out_dir

use std::path::PathBuf;

use dca::data::{export_config, write_csv};
use dca::prelude::*;

fn main() -> Result<()> {
    let dir = std::env::args_os().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&dir)?;
    let text = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/synthetic.toml"))?;
    let config = DatasetConfig::from_toml_str(&text)?;
    let table = load_dataset(&config)?.table;
    let ranking = config.ranking_spec(None)?;

    let csv_path = dir.join("synthetic.csv");
    write_csv(&table, std::fs::File::create(&csv_path)?)?;
    let exported = export_config(&table, &ranking, "synthetic.csv");
    let toml_path = dir.join("synthetic_csv.toml");
    std::fs::write(&toml_path, exported.to_toml_string()?)?;

    let back = load_dataset(&DatasetConfig::from_file(&toml_path)?)?;
    assert_eq!(back.table, table);
    println!("wrote {} records to {}", table.len(), csv_path.display());
    println!("config: {}", toml_path.display());
    println!("try: dca compute-bonus --config {}", toml_path.display());
    Ok(())
}
