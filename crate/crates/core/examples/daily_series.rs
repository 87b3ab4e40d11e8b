//! Daily class counts, shares and event series over a short window.

use chrono::NaiveDate;
use materiel_pulse::simgen::synth_fixture_bundle;
use materiel_pulse::timeseries::{
    class_counts, event_series, normalize_shares, CountOptions, CountUnit,
};

fn main() -> materiel_pulse::Result<()> {
    let bundle = synth_fixture_bundle(5);
    let start = NaiveDate::from_ymd_opt(2022, 3, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(2022, 3, 7).unwrap();

    for unit in [CountUnit::Boxes, CountUnit::Images, CountUnit::Posts] {
        let opts = CountOptions {
            conf_threshold: 0.5,
            unit,
        };
        let (counts, _) = class_counts(&bundle.posts, &bundle.detections, &opts, start, end)?;
        let tanks = counts.require("count:military tank")?;
        println!("{unit:?}: military tank per day {:?}", tanks.values);
    }

    let (counts, orphaned) = class_counts(
        &bundle.posts,
        &bundle.detections,
        &CountOptions::default(),
        start,
        end,
    )?;
    let shares = normalize_shares(&counts);
    let (attacks, fatalities) = event_series(&bundle.events, None, start, end)?;
    println!(
        "orphaned detections: {orphaned}; zero-total days: {}",
        shares.zero_days.len()
    );

    let zero_day = shares.zero_day_series();
    let set = counts
        .extend(shares.set.into_series())?
        .extend([zero_day, attacks, fatalities])?;
    print!("{}", set.to_wide_csv());
    Ok(())
}
