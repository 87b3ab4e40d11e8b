//! Score a small detector run against hand-drawn boxes, then the
//! synthetic bundle.

use materiel_pulse::eval::{evaluate, iou, EvalOptions};
use materiel_pulse::ingest::{parse_annotations_str, parse_detections_str, LabelRules};
use materiel_pulse::simgen::synth_fixture_bundle;

const ANNOTATIONS: &str = "\
image_id,label,x_min,y_min,x_max,y_max
img1,Military Tank,10,10,110,90
img1,Soldier,200,40,240,160
img2,Military Tank,50,50,150,120
";

const DETECTIONS: &str = "\
image_id,label,x_min,y_min,x_max,y_max,confidence
img1,military tank,12,8,112,92,0.94
img1,military tank,14,12,108,88,0.61
img1,soldier,198,44,242,158,0.88
img2,military tank,300,300,360,340,0.72
img2,military tank,48,52,149,121,0.55
";

fn main() -> materiel_pulse::Result<()> {
    let rules = LabelRules::default();
    let gts = parse_annotations_str(ANNOTATIONS, "annotations", &rules)?;
    let dets = parse_detections_str(DETECTIONS, "detections", &rules)?;
    println!(
        "IoU of first detection with its tank: {:.3}",
        iou(&dets[0].bbox, &gts[0].bbox)
    );

    let report = evaluate(&dets, &gts, &EvalOptions::default())?;
    print!("{}", report.to_csv());

    // Synthetic bundle, scored on the annotated images only.
    let bundle = synth_fixture_bundle(1);
    let annotated: std::collections::HashSet<_> = bundle
        .annotations
        .iter()
        .map(|a| a.image_id.as_str())
        .collect();
    let scored: Vec<_> = bundle
        .detections
        .iter()
        .filter(|d| annotated.contains(d.image_id.as_str()))
        .cloned()
        .collect();
    let report = evaluate(&scored, &bundle.annotations, &EvalOptions::default())?;
    println!(
        "\nsynthetic bundle: {} boxes, mAP@0.5 = {:.3}",
        report.overall.instances, report.overall.map
    );
    Ok(())
}
