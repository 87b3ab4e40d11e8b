//! Retweet and like summaries per detected class.

use materiel_pulse::engagement::{attribute_posts, engagement_csv, engagement_table};
use materiel_pulse::simgen::synth_fixture_bundle;

fn main() -> materiel_pulse::Result<()> {
    let bundle = synth_fixture_bundle(3);
    let attribution = attribute_posts(&bundle.posts, &bundle.detections, 0.5);
    println!(
        "{} of {} posts carry a detection at confidence >= 0.5",
        attribution.posts_with_detections(),
        bundle.posts.len()
    );
    let rows = engagement_table(&bundle.posts, &attribution)?;
    print!("{}", engagement_csv(&rows));
    Ok(())
}
