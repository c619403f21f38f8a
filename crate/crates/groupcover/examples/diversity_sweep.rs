//! Sweep user topic diversity with the harness and export plot data.
//!
//! Writes one metrics CSV per diversity cell, an aggregate table, and the
//! long-format series behind a diversity-versus-deniability figure.

use groupcover::harness::{emit_plotdata, sweep};

fn main() -> groupcover::Result<()> {
    let dir = std::env::temp_dir().join("groupcover_diversity_sweep");
    std::fs::create_dir_all(&dir)?;
    let spec_path = dir.join("sweep.cfg");
    std::fs::write(
        &spec_path,
        "sensitive_topics = 5\nsteps = 12\ndelta = 1.0\nlambda = 0.001\nseed = 400\n\
         axis.user_diversity_pct = 0,25,50,75,100\nrepetitions = 3\n",
    )?;

    let out = dir.join("out");
    let result = sweep(&spec_path, None, &out, 2)?;
    print!("{}", result.summary);
    for file in &result.cell_files {
        println!("  cell: {}", file.display());
    }

    let plot = emit_plotdata(&out, "diversity-vs-pd", None)?;
    println!("plot data: {}", plot.display());
    for line in std::fs::read_to_string(&plot)?
        .lines()
        .filter(|l| l.starts_with("x,") || l.contains("deniability_direct_proxy"))
    {
        println!("  {line}");
    }
    Ok(())
}
