//! Drives the command-line entry point in-process: solves the
//! decoupled-constant instance into a temporary directory and lists the
//! hashed outputs.

use fbdsde::cli::{run, RunManifest, MANIFEST_FILE};

fn main() -> fbdsde::Result<()> {
    let dir = std::env::temp_dir().join("fbdsde-command-line-example");
    let out = dir.to_string_lossy().to_string();
    let code = run(["fbdsde", "solve", "--catalog", "decoupled-constant", "--paths", "200", "--out", &out]);
    println!("exit code {code}");
    let manifest = RunManifest::read(dir.join(MANIFEST_FILE))?;
    for f in &manifest.files {
        println!("{:<12} {:>8} bytes  sha256 {}", f.path, f.bytes, f.sha256);
    }
    Ok(())
}
