//! Gradient-based features: Sobel magnitude maps, the gradient similarity
//! map, the distortion-sensitive region mask and the pooled statistics.
//!
//! Compression artifacts cluster in two kinds of regions. High-frequency
//! areas show structural damage and information loss; low-frequency areas
//! show blocking and structure over-restoration, visible as gradient
//! over-growth relative to the reference. The region mask is the union of
//! both, and the mean/std of the gradient similarity map are pooled there.

use crate::error::{Error, Result};
use crate::plane::{Plane, PooledStats};

/// Which pair of 3x3 kernels the magnitude computation uses.
///
/// `Standard` is the antisymmetric Sobel derivative with 1/4-1/2-1/4
/// smoothing weights. `Verbatim` keeps both non-zero columns (rows) of the
/// horizontal (vertical) kernel negative; it responds to local brightness
/// rather than to change and exists only for side-by-side comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SobelMode {
    #[default]
    Standard,
    Verbatim,
}

const SOBEL_X_STANDARD: [[f64; 3]; 3] = [
    [-0.25, 0.0, 0.25],
    [-0.5, 0.0, 0.5],
    [-0.25, 0.0, 0.25],
];

const SOBEL_X_VERBATIM: [[f64; 3]; 3] = [
    [-0.25, 0.0, -0.25],
    [-0.5, 0.0, -0.5],
    [-0.25, 0.0, -0.25],
];

fn transpose(k: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for (i, row) in k.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            t[j][i] = v;
        }
    }
    t
}

/// Gradient magnitude maps of the reference and distorted luma planes.
#[derive(Debug, Clone)]
pub struct GradientPair {
    pub g_ref: Plane,
    pub g_dis: Plane,
}

impl GradientPair {
    pub fn new(g_ref: Plane, g_dis: Plane) -> Result<Self> {
        if !g_ref.same_dimensions(&g_dis) {
            return Err(Error::invalid_input(
                "gradient magnitude maps must share dimensions",
            ));
        }
        Ok(GradientPair { g_ref, g_dis })
    }
}

/// The distortion-sensitive region: a boolean mask plus its pixel count.
#[derive(Debug, Clone)]
pub struct RegionMask {
    mask: Vec<bool>,
    width: usize,
    height: usize,
    count: usize,
}

impl RegionMask {
    /// A mask selecting every pixel.
    pub fn full(width: usize, height: usize) -> Self {
        RegionMask {
            mask: vec![true; width * height],
            width,
            height,
            count: width * height,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of selected pixels.
    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn flags(&self) -> &[bool] {
        &self.mask
    }
}

fn correlate_3x3(p: &Plane, kernel: &[[f64; 3]; 3]) -> Plane {
    Plane::from_fn(p.width(), p.height(), |x, y| {
        let mut acc = 0.0;
        for (dy, row) in kernel.iter().enumerate() {
            for (dx, &w) in row.iter().enumerate() {
                acc += w * p.get_clamped(x as isize + dx as isize - 1, y as isize + dy as isize - 1);
            }
        }
        acc
    })
}

/// Computes the per-pixel gradient magnitude `sqrt(gx^2 + gy^2)`.
///
/// Border pixels use replicate-edge padding, so the output has the same
/// dimensions as the input.
pub fn sobel_magnitude(y: &Plane) -> Result<Plane> {
    sobel_magnitude_with(y, SobelMode::Standard)
}

/// [`sobel_magnitude`] with an explicit kernel choice.
pub fn sobel_magnitude_with(y: &Plane, mode: SobelMode) -> Result<Plane> {
    if y.width() < 3 || y.height() < 3 {
        return Err(Error::invalid_input(format!(
            "plane {}x{} is smaller than the 3x3 gradient kernel",
            y.width(),
            y.height()
        )));
    }
    let kx = match mode {
        SobelMode::Standard => SOBEL_X_STANDARD,
        SobelMode::Verbatim => SOBEL_X_VERBATIM,
    };
    let ky = transpose(kx);
    let gx = correlate_3x3(y, &kx);
    let gy = correlate_3x3(y, &ky);
    gx.zip_map(&gy, |a, b| (a * a + b * b).sqrt())
}

/// Per-pixel gradient similarity `(2 Gr Gd + c1) / (Gr^2 + Gd^2 + c1)`.
///
/// Every output value lies in `(0, 1]`, with 1 exactly where the two
/// magnitudes agree.
pub fn gradient_similarity(g: &GradientPair, c1: f64) -> Result<Plane> {
    if c1 <= 0.0 {
        return Err(Error::invalid_config(format!(
            "stability constant c1 must be positive, got {c1}"
        )));
    }
    g.g_ref.zip_map(&g.g_dis, |r, d| {
        (2.0 * r * d + c1) / (r * r + d * d + c1)
    })
}

/// Selects the regions where compression distortion concentrates.
///
/// The high-frequency region keeps pixels whose gradient exceeds the plane
/// mean in either image; the over-growth region keeps pixels whose gradient
/// difference exceeds the mean difference while the reference gradient stays
/// below its mean. All comparisons are strict, so ties with the mean fall in
/// neither region.
pub fn region_mask(g: &GradientPair) -> RegionMask {
    let mean_ref = g.g_ref.mean();
    let mean_dis = g.g_dis.mean();
    let width = g.g_ref.width();
    let height = g.g_ref.height();

    let diff_mean = {
        let mut sum = 0.0;
        for (r, d) in g.g_ref.values().iter().zip(g.g_dis.values()) {
            sum += d - r;
        }
        sum / (width * height) as f64
    };

    let mut mask = vec![false; width * height];
    let mut count = 0usize;
    for (i, flag) in mask.iter_mut().enumerate() {
        let r = g.g_ref.values()[i];
        let d = g.g_dis.values()[i];
        let high_frequency = r > mean_ref || d > mean_dis;
        let over_growth = (d - r) > diff_mean && r < mean_ref;
        if high_frequency || over_growth {
            *flag = true;
            count += 1;
        }
    }
    RegionMask {
        mask,
        width,
        height,
        count,
    }
}

/// Population mean/std of `sim` over the masked pixels.
///
/// An empty mask falls back to pooling over the whole plane, so constant or
/// identical inputs still produce a defined score.
pub fn masked_stats(sim: &Plane, mask: &RegionMask) -> Result<PooledStats> {
    if sim.width() != mask.width() || sim.height() != mask.height() {
        return Err(Error::invalid_input(
            "similarity map and region mask dimensions differ",
        ));
    }
    if mask.count() == 0 {
        return Ok(PooledStats::of_values(sim.values().iter().copied()));
    }
    let masked = sim
        .values()
        .iter()
        .zip(mask.flags())
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v);
    Ok(PooledStats::of_values(masked))
}

/// The full gradient feature pipeline for a reference/distorted luma pair.
///
/// With `use_region` false the similarity map is pooled over all pixels
/// instead of the distortion-sensitive region.
pub fn gradient_features(
    y_ref: &Plane,
    y_dis: &Plane,
    c1: f64,
    use_region: bool,
) -> Result<PooledStats> {
    gradient_features_with(y_ref, y_dis, c1, use_region, SobelMode::Standard)
}

/// [`gradient_features`] with an explicit kernel choice.
pub fn gradient_features_with(
    y_ref: &Plane,
    y_dis: &Plane,
    c1: f64,
    use_region: bool,
    mode: SobelMode,
) -> Result<PooledStats> {
    if !y_ref.same_dimensions(y_dis) {
        return Err(Error::invalid_input(
            "reference and distorted planes must share dimensions",
        ));
    }
    let pair = GradientPair::new(
        sobel_magnitude_with(y_ref, mode)?,
        sobel_magnitude_with(y_dis, mode)?,
    )?;
    let sim = gradient_similarity(&pair, c1)?;
    let mask = if use_region {
        region_mask(&pair)
    } else {
        RegionMask::full(sim.width(), sim.height())
    };
    masked_stats(&sim, &mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_plane_has_zero_gradient() {
        let g = sobel_magnitude(&Plane::constant(5, 4, 7.0)).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn horizontal_ramp_gradient_is_two() {
        let ramp = Plane::from_fn(8, 6, |x, _| x as f64);
        let g = sobel_magnitude(&ramp).unwrap();
        for y in 0..6 {
            for x in 1..7 {
                assert!(
                    (g.get(x, y) - 2.0).abs() < 1e-12,
                    "interior magnitude at ({x},{y}) = {}",
                    g.get(x, y)
                );
            }
        }
    }

    #[test]
    fn vertical_step_responds_on_adjacent_columns() {
        // 0 on the left half, 1 on the right half, boundary between x=3 and x=4.
        let step = Plane::from_fn(8, 6, |x, _| if x < 4 { 0.0 } else { 1.0 });
        let g = sobel_magnitude(&step).unwrap();
        for y in 1..5 {
            for x in 1..7 {
                let expected = if x == 3 || x == 4 { 1.0 } else { 0.0 };
                assert!(
                    (g.get(x, y) - expected).abs() < 1e-12,
                    "magnitude at ({x},{y}) = {}, expected {expected}",
                    g.get(x, y)
                );
            }
        }
    }

    #[test]
    fn gradient_is_shift_invariant() {
        let p = Plane::from_fn(7, 7, |x, y| ((x * 31 + y * 17) % 13) as f64);
        let shifted = p.map(|v| v + 42.5);
        let a = sobel_magnitude(&p).unwrap();
        let b = sobel_magnitude(&shifted).unwrap();
        for (va, vb) in a.values().iter().zip(b.values()) {
            assert!((va - vb).abs() < 1e-9);
        }
    }

    #[test]
    fn too_small_plane_is_rejected() {
        assert!(sobel_magnitude(&Plane::zeros(2, 5)).is_err());
        assert!(sobel_magnitude(&Plane::zeros(5, 2)).is_err());
    }

    #[test]
    fn similarity_of_identical_maps_is_one() {
        let g = Plane::from_fn(4, 4, |x, y| (x + y) as f64);
        let pair = GradientPair::new(g.clone(), g).unwrap();
        let sim = gradient_similarity(&pair, 170.0).unwrap();
        assert!(sim.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn similarity_hand_value() {
        let pair = GradientPair::new(Plane::constant(2, 2, 1.0), Plane::constant(2, 2, 3.0)).unwrap();
        let sim = gradient_similarity(&pair, 170.0).unwrap();
        let expected = 176.0 / 180.0;
        assert!((sim.get(0, 0) - expected).abs() < 1e-12);
    }

    #[test]
    fn similarity_zero_against_g() {
        let g = 5.0;
        let c1 = 170.0;
        let pair = GradientPair::new(Plane::constant(2, 2, 0.0), Plane::constant(2, 2, g)).unwrap();
        let sim = gradient_similarity(&pair, c1).unwrap();
        assert!((sim.get(1, 1) - c1 / (g * g + c1)).abs() < 1e-12);
    }

    #[test]
    fn similarity_requires_positive_c1() {
        let pair = GradientPair::new(Plane::zeros(2, 2), Plane::zeros(2, 2)).unwrap();
        assert!(gradient_similarity(&pair, 0.0).is_err());
        assert!(gradient_similarity(&pair, -1.0).is_err());
    }

    #[test]
    fn region_mask_of_constant_maps_is_empty() {
        let pair = GradientPair::new(Plane::constant(3, 3, 2.0), Plane::constant(3, 3, 2.0)).unwrap();
        assert_eq!(region_mask(&pair).count(), 0);
    }

    #[test]
    fn region_mask_single_outlier() {
        let mut g = Plane::zeros(2, 2);
        g.set(1, 1, 4.0);
        let pair = GradientPair::new(g.clone(), g).unwrap();
        let mask = region_mask(&pair);
        assert_eq!(mask.count(), 1);
        assert!(mask.contains(1, 1));
    }

    #[test]
    fn over_growth_requires_low_reference_gradient() {
        // The (1,1) pixel has difference 8 > mean difference 2, but its
        // reference gradient 0 is not strictly below the reference mean 0,
        // so it belongs only to the high-frequency region.
        let mut dis = Plane::zeros(2, 2);
        dis.set(1, 1, 8.0);
        let pair = GradientPair::new(Plane::zeros(2, 2), dis).unwrap();
        let mask = region_mask(&pair);
        assert_eq!(mask.count(), 1);
        assert!(mask.contains(1, 1));
    }

    #[test]
    fn identical_inputs_have_empty_over_growth_region() {
        let g = Plane::from_fn(6, 6, |x, y| ((x * 7 + y * 3) % 5) as f64);
        let pair = GradientPair::new(g.clone(), g.clone()).unwrap();
        let mask = region_mask(&pair);
        // With identical maps only the high-frequency clause can fire.
        let mean = g.mean();
        for y in 0..6 {
            for x in 0..6 {
                assert_eq!(mask.contains(x, y), g.get(x, y) > mean);
            }
        }
    }

    #[test]
    fn masked_stats_all_ones() {
        let sim = Plane::constant(3, 3, 1.0);
        let mask = RegionMask::full(3, 3);
        let s = masked_stats(&sim, &mask).unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.std, 0.0);
    }

    #[test]
    fn empty_mask_falls_back_to_whole_plane() {
        let sim = Plane::constant(4, 4, 0.9);
        let pair = GradientPair::new(Plane::zeros(4, 4), Plane::zeros(4, 4)).unwrap();
        let mask = region_mask(&pair);
        assert_eq!(mask.count(), 0);
        let s = masked_stats(&sim, &mask).unwrap();
        assert_eq!(s.mean, 0.9);
        assert_eq!(s.std, 0.0);
    }

    #[test]
    fn identical_planes_give_perfect_features() {
        let y = Plane::from_fn(9, 9, |x, y| ((x * x + 3 * y) % 17) as f64);
        let s = gradient_features(&y, &y, 170.0, true).unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.std, 0.0);
        let s = gradient_features(&y, &y, 170.0, false).unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.std, 0.0);
    }

    #[test]
    fn disabling_region_equals_full_mask() {
        let y_ref = Plane::from_fn(8, 8, |x, _| if x < 4 { 10.0 } else { 200.0 });
        let y_dis = Plane::from_fn(8, 8, |x, _| 10.0 + 20.0 * x as f64);
        let toggled = gradient_features(&y_ref, &y_dis, 170.0, false).unwrap();

        let pair = GradientPair::new(
            sobel_magnitude(&y_ref).unwrap(),
            sobel_magnitude(&y_dis).unwrap(),
        )
        .unwrap();
        let sim = gradient_similarity(&pair, 170.0).unwrap();
        let expected = masked_stats(&sim, &RegionMask::full(8, 8)).unwrap();
        assert_eq!(toggled, expected);
    }

    // Straight-line re-implementation of the whole pipeline, kept free of
    // Plane helpers so it can disagree with the production path.
    fn oracle_features(y_ref: &[[f64; 8]; 8], y_dis: &[[f64; 8]; 8], c1: f64) -> (f64, f64) {
        let clamp = |v: isize| v.clamp(0, 7) as usize;
        let grad = |img: &[[f64; 8]; 8], x: usize, y: usize| {
            let mut gx = 0.0;
            let mut gy = 0.0;
            let kx = [
                [-0.25, 0.0, 0.25],
                [-0.5, 0.0, 0.5],
                [-0.25, 0.0, 0.25],
            ];
            for dy in 0..3 {
                for dx in 0..3 {
                    let sample = img[clamp(y as isize + dy as isize - 1)][clamp(x as isize + dx as isize - 1)];
                    gx += kx[dy][dx] * sample;
                    gy += kx[dx][dy] * sample;
                }
            }
            (gx * gx + gy * gy).sqrt()
        };
        let mut gr = [[0.0f64; 8]; 8];
        let mut gd = [[0.0f64; 8]; 8];
        for y in 0..8 {
            for x in 0..8 {
                gr[y][x] = grad(y_ref, x, y);
                gd[y][x] = grad(y_dis, x, y);
            }
        }
        let mean = |m: &[[f64; 8]; 8]| m.iter().flatten().sum::<f64>() / 64.0;
        let (mr, md) = (mean(&gr), mean(&gd));
        let mut diff_sum = 0.0;
        for y in 0..8 {
            for x in 0..8 {
                diff_sum += gd[y][x] - gr[y][x];
            }
        }
        let mdiff = diff_sum / 64.0;
        let mut selected = Vec::new();
        for y in 0..8 {
            for x in 0..8 {
                let phi1 = gr[y][x] > mr || gd[y][x] > md;
                let phi2 = (gd[y][x] - gr[y][x]) > mdiff && gr[y][x] < mr;
                if phi1 || phi2 {
                    let s = (2.0 * gr[y][x] * gd[y][x] + c1) / (gr[y][x] * gr[y][x] + gd[y][x] * gd[y][x] + c1);
                    selected.push(s);
                }
            }
        }
        let n = selected.len() as f64;
        let mean_s = selected.iter().sum::<f64>() / n;
        let var = selected.iter().map(|s| (s - mean_s) * (s - mean_s)).sum::<f64>() / n;
        (mean_s, var.sqrt())
    }

    #[test]
    fn blurred_step_matches_straight_line_oracle() {
        let mut step = [[0.0f64; 8]; 8];
        let mut blurred = [[0.0f64; 8]; 8];
        for y in 0..8 {
            for x in 0..8 {
                step[y][x] = if x < 4 { 30.0 } else { 180.0 };
                // Crude horizontal blur of the step.
                blurred[y][x] = match x {
                    3 => 80.0,
                    4 => 130.0,
                    _ => step[y][x],
                };
            }
        }
        let (expect_mean, expect_std) = oracle_features(&step, &blurred, 170.0);

        let y_ref = Plane::from_fn(8, 8, |x, y| step[y][x]);
        let y_dis = Plane::from_fn(8, 8, |x, y| blurred[y][x]);
        let got = gradient_features(&y_ref, &y_dis, 170.0, true).unwrap();

        assert!((got.mean - expect_mean).abs() < 1e-12);
        assert!((got.std - expect_std).abs() < 1e-12);
        assert!(got.mean < 1.0);
        assert!(got.std > 0.0);
    }
}
