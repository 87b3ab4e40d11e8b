//! Per-lag Granger tests in both directions on a planted lag-2 relation.

use materiel_pulse::econ::{bonferroni, bonferroni_threshold, granger_csv, granger_test};
use materiel_pulse::simgen::simulate_lagged_pair;

fn main() -> materiel_pulse::Result<()> {
    let (x, y) = simulate_lagged_pair(0.8, 2, 500, 42)?;
    let mut results = granger_test("x", &x, "y", &y, 7)?;
    results.extend(granger_test("y", &y, "x", &x, 7)?);

    let m = 2;
    println!(
        "Bonferroni threshold for m = {m}: {}",
        bonferroni_threshold(0.05, m)
    );
    print!("{}", granger_csv(&bonferroni(results, 0.05, m)?));
    Ok(())
}
