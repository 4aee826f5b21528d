//! Matrix CSV and certificate JSON round trips, and the CLI driven in-process.

use ks_sparsify::cli::{run, to_json_string};
use ks_sparsify::sparsifier::{theorem1_sparsify, SparsifyOptions};
use ks_sparsify::spectral_core::text::{parse_matrix, write_matrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = parse_matrix("# two rows\n1, 0.5, -2, 0.25\n0, 1, 1, 3\n")?;
    let csv = write_matrix(&a);
    assert_eq!(parse_matrix(&csv)?, a);
    print!("{csv}");

    let r = theorem1_sparsify(&a, 0.75, &SparsifyOptions::default())?;
    println!("{}", to_json_string(&r.certificate));

    let dir = std::env::temp_dir().join("ks-sparsify-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("a.csv");
    std::fs::write(&path, csv)?;
    let d_path = dir.join("d.json");
    let p = path.to_str().ok_or("path")?;
    let d = d_path.to_str().ok_or("path")?;
    let mut sink = Vec::new();
    let code = run(["ks-sparsify", "sparsify", p, "--epsilon", "0.75", "--d-out", d], &mut sink, &mut std::io::stderr());
    println!("sparsify exit code {code}, report {} bytes", sink.len());
    let code = run(["ks-sparsify", "check", p, d, "--epsilon", "0.75"], &mut std::io::sink(), &mut std::io::stderr());
    println!("check exit code {code}");
    Ok(())
}
