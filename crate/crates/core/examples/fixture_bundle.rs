//! Write the synthetic input files to a directory (default: a temp dir).

use materiel_pulse::simgen::{synth_fixture_bundle, ANNOTATION_COUNTS};

fn main() -> materiel_pulse::Result<()> {
    let dir = match std::env::args().nth(1) {
        Some(d) => std::path::PathBuf::from(d),
        None => std::env::temp_dir().join("materiel-pulse-fixture"),
    };
    let bundle = synth_fixture_bundle(0);
    for path in bundle.write_to(&dir)? {
        println!("wrote {}", path.display());
    }
    println!(
        "{} posts, {} detections, {} annotations, {} event records",
        bundle.posts.len(),
        bundle.detections.len(),
        bundle.annotations.len(),
        bundle.events.len()
    );
    for (label, n) in ANNOTATION_COUNTS {
        println!("  {label:<10} {n}");
    }
    Ok(())
}
