use std::path::Path;

use deltom::analysis::{sweep, AnalysisError, Grid};

use crate::failure::{Failure, ResultExt};

pub fn run(grid: &str, trials: u64, seed: u64, out_csv: &Path, force: bool) -> Result<(), Failure> {
    let grid: Grid = grid.parse().config()?;
    let points = grid.points(trials, seed);
    for p in &points {
        p.validate().config()?;
    }
    let rows = match sweep(&points) {
        Ok(rows) => rows,
        Err(e @ AnalysisError::DominanceViolation { .. }) => return Err(e).invariant(),
        Err(e) => return Err(e).config(),
    };
    if out_csv.exists() && !force {
        return Err(anyhow::anyhow!("{} exists (use --force to overwrite)", out_csv.display())).data();
    }
    if let Some(dir) = out_csv.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).data()?;
    }
    let mut w = csv::Writer::from_path(out_csv).data()?;
    for r in &rows {
        w.serialize(r).data()?;
    }
    w.flush().data()?;
    println!("{:>5} {:>4} {:>5} {:>3} {:>10} {:>10} {:>10}", "q", "K", "N", "L", "pbm", "pbm_mc", "maj_mc");
    for r in &rows {
        println!(
            "{:>5} {:>4} {:>5} {:>3} {:>10.5} {:>10.5} {:>10.5}",
            r.q, r.k, r.n, r.l, r.a_pbm_closed, r.a_pbm_mc, r.a_maj_mc
        );
    }
    println!("{} grid points, majority never above the verifier-guided rate", rows.len());
    Ok(())
}
