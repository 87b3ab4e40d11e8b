//! Oracles shared by the integration suites. Nothing here calls into the
//! code it checks.

#![allow(dead_code, clippy::excessive_precision)]

/// Gauss-Kronrod 15-point abscissae (non-negative half) and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// 7-point Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive GK15: keep bisecting the piece with the largest
/// error estimate until the summed estimate is within `rel_tol` of the
/// integral (or 5000 pieces).
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut pieces = vec![{
        let (v, e) = gk15(f, a, b);
        (a, b, v, e)
    }];
    loop {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= rel_tol * total.abs() || pieces.len() >= 5000 {
            return total;
        }
        let worst = (0..pieces.len())
            .max_by(|&i, &j| pieces[i].3.total_cmp(&pieces[j].3))
            .expect("non-empty");
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        for (l, h) in [(lo, mid), (mid, hi)] {
            let (v, e) = gk15(f, l, h);
            pieces.push((l, h, v, e));
        }
    }
}

/// Unnormalised F(d1, d2) density, in logs for range.
fn f_kernel(t: f64, d1: f64, d2: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    ((0.5 * d1 - 1.0) * t.ln() - 0.5 * (d1 + d2) * (d2 + d1 * t).ln()).exp()
}

/// P(F > x) by quadrature of the density, normalised by its own total
/// mass. The head uses t = u² and the tail t = x / z², which remove the
/// endpoint singularities for every d1, d2 >= 1.
pub fn f_sf_quadrature(x: f64, d1: u32, d2: u32) -> f64 {
    let (d1, d2) = (d1 as f64, d2 as f64);
    let head = integrate(
        &|u: f64| f_kernel(u * u, d1, d2) * 2.0 * u,
        0.0,
        x.sqrt(),
        1e-15,
    );
    let tail = integrate(
        &|z: f64| {
            if z <= 0.0 {
                0.0
            } else {
                f_kernel(x / (z * z), d1, d2) * 2.0 * x / (z * z * z)
            }
        },
        0.0,
        1.0,
        1e-15,
    );
    tail / (head + tail)
}

/// Axis-aligned box as (x_min, y_min, x_max, y_max).
pub type Rect = (f64, f64, f64, f64);

pub fn rect_iou(a: Rect, b: Rect) -> f64 {
    let w = (a.2.min(b.2) - a.0.max(b.0)).max(0.0);
    let h = (a.3.min(b.3) - a.1.max(b.1)).max(0.0);
    let inter = w * h;
    let union = (a.2 - a.0) * (a.3 - a.1) + (b.2 - b.0) * (b.3 - b.1) - inter;
    inter / union
}

/// Largest number of detection/annotation pairs with IoU >= threshold,
/// each box used at most once, by enumerating every assignment.
pub fn max_matching(dets: &[Rect], gts: &[Rect], threshold: f64) -> usize {
    fn go(i: usize, dets: &[Rect], gts: &[Rect], used: &mut Vec<bool>, threshold: f64) -> usize {
        if i == dets.len() {
            return 0;
        }
        let mut best = go(i + 1, dets, gts, used, threshold);
        for j in 0..gts.len() {
            if !used[j] && rect_iou(dets[i], gts[j]) >= threshold {
                used[j] = true;
                best = best.max(1 + go(i + 1, dets, gts, used, threshold));
                used[j] = false;
            }
        }
        best
    }
    go(0, dets, gts, &mut vec![false; gts.len()], threshold)
}

/// Deterministic splitmix64 stream for building test inputs.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_materiel-pulse")
}
