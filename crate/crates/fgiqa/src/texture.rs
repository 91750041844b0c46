//! Texture features via a 5-scale x 4-orientation Log-Gabor bank.
//!
//! Each filter is Gaussian in log-frequency and in orientation with zero DC
//! response. All six channel planes (Y, Cb, Cr of both images) are filtered
//! in the frequency domain, the complex modulus of every band is taken as an
//! amplitude map, and the per-band similarities are reduced to one texture
//! similarity map whose mean and standard deviation are the features.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::{Arc, LazyLock, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colorspace::YcbcrImage;
use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::plane::{Plane, PooledStats};

pub const SCALE_COUNT: usize = 5;
pub const ORIENTATION_COUNT: usize = 4;

/// Parameters of the Log-Gabor bank and of the texture similarity reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TextureConfig {
    /// Base center frequency in normalized cycles/pixel; band centers are
    /// `f0 * scale_multipliers[s]`.
    pub f0: f64,
    pub scale_multipliers: [f64; SCALE_COUNT],
    /// Center orientations in radians.
    pub orientations: [f64; ORIENTATION_COUNT],
    /// Radial width as the ratio `sigma_f / f_s`, shared by all scales.
    pub sigma_f_ratio: f64,
    /// Angular width in radians.
    pub sigma_theta: f64,
    /// Per-scale weights of the similarity reduction.
    pub w_ga: [f64; SCALE_COUNT],
    pub w_y: f64,
    pub w_cb: f64,
    pub w_cr: f64,
    /// Stability constant of the per-band similarity.
    pub c2: f64,
    /// Divide the weighted similarity sum by `4 * sum(w_ga)` so channel
    /// similarities stay in `(0, 1]`. Disabling reproduces the literal
    /// weighted sum.
    pub normalize: bool,
}

impl Default for TextureConfig {
    fn default() -> Self {
        TextureConfig {
            f0: 0.147,
            scale_multipliers: [2.0 / 3.0, 4.0 / 3.0, 2.0, 8.0 / 3.0, 10.0 / 3.0],
            orientations: [
                0.0,
                std::f64::consts::FRAC_PI_4,
                std::f64::consts::FRAC_PI_2,
                3.0 * std::f64::consts::FRAC_PI_4,
            ],
            sigma_f_ratio: 0.598,
            sigma_theta: std::f64::consts::PI / 8.0,
            w_ga: [0.5, 0.75, 1.0, 5.0, 6.0],
            w_y: 1.0,
            w_cb: 0.25,
            w_cr: 0.25,
            c2: 100.0,
            normalize: true,
        }
    }
}

impl TextureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f0 > 0.0) {
            return Err(Error::invalid_config("f0 must be positive"));
        }
        for w in self.scale_multipliers.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid_config(
                    "scale multipliers must be strictly increasing",
                ));
            }
        }
        if !(self.scale_multipliers[0] > 0.0) {
            return Err(Error::invalid_config("scale multipliers must be positive"));
        }
        let f_max = self.f0 * self.scale_multipliers[SCALE_COUNT - 1];
        if f_max > 0.5 {
            return Err(Error::invalid_config(format!(
                "highest band center {f_max} exceeds the Nyquist frequency 0.5"
            )));
        }
        if !(self.sigma_f_ratio > 0.0 && self.sigma_f_ratio < 1.0) {
            return Err(Error::invalid_config("sigma_f_ratio must lie in (0, 1)"));
        }
        if !(self.sigma_theta > 0.0) {
            return Err(Error::invalid_config("sigma_theta must be positive"));
        }
        if self.w_ga.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::invalid_config("w_ga weights must be non-negative"));
        }
        if !(self.w_y >= 0.0) || !(self.w_cb >= 0.0) || !(self.w_cr >= 0.0) {
            return Err(Error::invalid_config(
                "channel weights must be non-negative",
            ));
        }
        if !(self.c2 > 0.0) {
            return Err(Error::invalid_config("c2 must be positive"));
        }
        Ok(())
    }
}

/// Which channel an amplitude set was filtered from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelTag {
    Y,
    Cb,
    Cr,
}

/// The 20 frequency-domain gain planes of one bank instance.
#[derive(Debug, Clone)]
pub struct LogGaborBank {
    width: usize,
    height: usize,
    config: TextureConfig,
    gains: Vec<Plane>,
}

impl LogGaborBank {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn config(&self) -> &TextureConfig {
        &self.config
    }

    /// Gain plane of scale `s` (0-based, 0..5) and orientation `o` (0..4).
    pub fn gain(&self, s: usize, o: usize) -> &Plane {
        &self.gains[s * ORIENTATION_COUNT + o]
    }

    pub fn gains(&self) -> &[Plane] {
        &self.gains
    }
}

/// Maps a DFT bin index to its normalized frequency in cycles/pixel.
fn normalized_frequency(index: usize, size: usize) -> f64 {
    if index <= size / 2 {
        index as f64 / size as f64
    } else {
        (index as f64 - size as f64) / size as f64
    }
}

/// Angular distance folded to orientation semantics (period pi), in
/// `[-pi/2, pi/2]`.
fn orientation_distance(theta: f64, theta_center: f64) -> f64 {
    let d = theta - theta_center;
    d - std::f64::consts::PI * (d / std::f64::consts::PI).round()
}

fn radial_gain(f: f64, f_center: f64, sigma_ratio: f64) -> f64 {
    let log_ratio = (f / f_center).ln();
    let denom = 2.0 * sigma_ratio.ln().powi(2);
    (-(log_ratio * log_ratio) / denom).exp()
}

fn angular_gain(theta: f64, theta_center: f64, sigma_theta: f64) -> f64 {
    let d = orientation_distance(theta, theta_center);
    (-(d * d) / (2.0 * sigma_theta * sigma_theta)).exp()
}

/// Builds the 20-filter Log-Gabor bank for one image size.
///
/// The gain at the DC bin is forced to 0 for every filter, which is what
/// makes the texture features invariant to constant intensity offsets.
pub fn build_bank(width: usize, height: usize, cfg: &TextureConfig) -> Result<LogGaborBank> {
    cfg.validate()?;
    if width < 8 || height < 8 {
        return Err(Error::invalid_input(format!(
            "bank requires at least 8x8 planes, got {width}x{height}"
        )));
    }
    Ok(build_bank_unchecked(width, height, cfg))
}

fn build_bank_unchecked(width: usize, height: usize, cfg: &TextureConfig) -> LogGaborBank {
    let mut gains = Vec::with_capacity(SCALE_COUNT * ORIENTATION_COUNT);
    for s in 0..SCALE_COUNT {
        let f_center = cfg.f0 * cfg.scale_multipliers[s];
        for o in 0..ORIENTATION_COUNT {
            let theta_center = cfg.orientations[o];
            gains.push(Plane::from_fn(width, height, |u, v| {
                if u == 0 && v == 0 {
                    return 0.0;
                }
                let fx = normalized_frequency(u, width);
                let fy = normalized_frequency(v, height);
                let f = (fx * fx + fy * fy).sqrt();
                let theta = fy.atan2(fx);
                radial_gain(f, f_center, cfg.sigma_f_ratio)
                    * angular_gain(theta, theta_center, cfg.sigma_theta)
            }));
        }
    }
    LogGaborBank {
        width,
        height,
        config: cfg.clone(),
        gains,
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct BankKey {
    width: usize,
    height: usize,
    // Bit patterns of every parameter that shapes the gains.
    bits: [u64; 12],
}

fn bank_key(width: usize, height: usize, cfg: &TextureConfig) -> BankKey {
    let mut bits = [0u64; 12];
    bits[0] = cfg.f0.to_bits();
    bits[1] = cfg.sigma_f_ratio.to_bits();
    bits[2] = cfg.sigma_theta.to_bits();
    for (i, m) in cfg.scale_multipliers.iter().enumerate() {
        bits[3 + i] = m.to_bits();
    }
    for (i, t) in cfg.orientations.iter().enumerate() {
        bits[8 + i] = t.to_bits();
    }
    BankKey {
        width,
        height,
        bits,
    }
}

type BankCell = Arc<OnceLock<Arc<LogGaborBank>>>;

static BANK_CACHE: LazyLock<Mutex<HashMap<BankKey, BankCell>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

/// Returns the bank for `(width, height, cfg)`, building it at most once
/// per key; concurrent callers for the same key share the result.
pub fn shared_bank(width: usize, height: usize, cfg: &TextureConfig) -> Result<Arc<LogGaborBank>> {
    cfg.validate()?;
    if width < 8 || height < 8 {
        return Err(Error::invalid_input(format!(
            "bank requires at least 8x8 planes, got {width}x{height}"
        )));
    }
    let cell = {
        let mut cache = BANK_CACHE.lock().expect("bank cache poisoned");
        cache.entry(bank_key(width, height, cfg)).or_default().clone()
    };
    let bank = cell.get_or_init(|| Arc::new(build_bank_unchecked(width, height, cfg)));
    Ok(bank.clone())
}

/// The 20 amplitude maps of one channel plane.
#[derive(Debug, Clone)]
pub struct AmplitudeSet {
    channel: ChannelTag,
    amps: Vec<Plane>,
}

impl AmplitudeSet {
    pub fn channel(&self) -> ChannelTag {
        self.channel
    }

    /// Amplitude map of scale `s` and orientation `o` (0-based).
    pub fn amplitude(&self, s: usize, o: usize) -> &Plane {
        &self.amps[s * ORIENTATION_COUNT + o]
    }

    /// Assembles a set from 20 pre-computed maps, in scale-major order.
    pub fn from_planes(channel: ChannelTag, amps: Vec<Plane>) -> Result<Self> {
        if amps.len() != SCALE_COUNT * ORIENTATION_COUNT {
            return Err(Error::invalid_input(format!(
                "expected {} amplitude maps, got {}",
                SCALE_COUNT * ORIENTATION_COUNT,
                amps.len()
            )));
        }
        if amps.iter().any(|a| !a.same_dimensions(&amps[0])) {
            return Err(Error::invalid_input(
                "amplitude maps must share dimensions",
            ));
        }
        Ok(AmplitudeSet { channel, amps })
    }
}

/// Filters a plane through every bank filter and takes the complex modulus
/// of each inverse transform.
pub fn filter_amplitude(p: &Plane, bank: &LogGaborBank, channel: ChannelTag) -> Result<AmplitudeSet> {
    if p.width() != bank.width || p.height() != bank.height {
        return Err(Error::invalid_input(format!(
            "plane {}x{} does not match bank {}x{}",
            p.width(),
            p.height(),
            bank.width,
            bank.height
        )));
    }
    let fft = Fft2d::new(bank.width, bank.height);
    let spectrum = fft.forward(p);
    let amps: Vec<Plane> = bank
        .gains
        .par_iter()
        .map(|gain| {
            let filtered: Vec<_> = spectrum
                .iter()
                .zip(gain.values())
                .map(|(c, &g)| c * g)
                .collect();
            fft.inverse_modulus(filtered)
        })
        .collect();
    Ok(AmplitudeSet { channel, amps })
}

/// Per-pixel weighted similarity of two amplitude sets over all scales.
pub fn channel_texture_similarity(
    reference: &AmplitudeSet,
    distorted: &AmplitudeSet,
    cfg: &TextureConfig,
) -> Result<Plane> {
    channel_texture_similarity_scaled(reference, distorted, cfg, [true; SCALE_COUNT])
}

/// [`channel_texture_similarity`] restricted to the enabled scales; the
/// normalization then runs over the enabled weights only.
pub fn channel_texture_similarity_scaled(
    reference: &AmplitudeSet,
    distorted: &AmplitudeSet,
    cfg: &TextureConfig,
    enabled_scales: [bool; SCALE_COUNT],
) -> Result<Plane> {
    if reference.channel != distorted.channel {
        return Err(Error::invalid_input(format!(
            "mismatched channel tags: {:?} vs {:?}",
            reference.channel, distorted.channel
        )));
    }
    if !reference.amps[0].same_dimensions(&distorted.amps[0]) {
        return Err(Error::invalid_input(
            "amplitude sets must share dimensions",
        ));
    }
    if !enabled_scales.iter().any(|&e| e) {
        return Err(Error::invalid_config("all texture scales are disabled"));
    }
    let weight_sum: f64 = (0..SCALE_COUNT)
        .filter(|&s| enabled_scales[s])
        .map(|s| cfg.w_ga[s])
        .sum();
    if cfg.normalize && weight_sum <= 0.0 {
        return Err(Error::invalid_config(
            "enabled scale weights sum to zero; similarity normalization is undefined",
        ));
    }

    let width = reference.amps[0].width();
    let height = reference.amps[0].height();
    let mut acc = vec![0.0f64; width * height];
    for s in 0..SCALE_COUNT {
        if !enabled_scales[s] {
            continue;
        }
        let w = cfg.w_ga[s];
        for o in 0..ORIENTATION_COUNT {
            let ra = reference.amplitude(s, o).values();
            let da = distorted.amplitude(s, o).values();
            for (a, (&x, &y)) in acc.iter_mut().zip(ra.iter().zip(da)) {
                *a += w * (2.0 * x * y + cfg.c2) / (x * x + y * y + cfg.c2);
            }
        }
    }
    if cfg.normalize {
        let norm = 1.0 / (ORIENTATION_COUNT as f64 * weight_sum);
        for a in &mut acc {
            *a *= norm;
        }
    }
    Plane::from_vec(width, height, acc)
}

/// Mixes the per-channel similarity maps into the final texture map
/// `sqrt(w_y T_y^2 + w_cb/4 T_cb^2 + w_cr/4 T_cr^2)`.
pub fn combine_channels(
    t_y: &Plane,
    t_cb: &Plane,
    t_cr: &Plane,
    cfg: &TextureConfig,
) -> Result<Plane> {
    if !t_y.same_dimensions(t_cb) || !t_y.same_dimensions(t_cr) {
        return Err(Error::invalid_input(
            "channel similarity maps must share dimensions",
        ));
    }
    let mut data = Vec::with_capacity(t_y.len());
    for ((&y, &cb), &cr) in t_y
        .values()
        .iter()
        .zip(t_cb.values())
        .zip(t_cr.values())
    {
        data.push((cfg.w_y * y * y + cfg.w_cb * 0.25 * cb * cb + cfg.w_cr * 0.25 * cr * cr).sqrt());
    }
    Plane::from_vec(t_y.width(), t_y.height(), data)
}

/// Population mean/std of the texture similarity map over all pixels.
pub fn texture_stats(s_t: &Plane) -> PooledStats {
    PooledStats::of_values(s_t.values().iter().copied())
}

/// The full texture feature pipeline for a reference/distorted image pair.
pub fn texture_features(
    reference: &YcbcrImage,
    distorted: &YcbcrImage,
    cfg: &TextureConfig,
    scale_toggles: [bool; SCALE_COUNT],
) -> Result<PooledStats> {
    if reference.width() != distorted.width() || reference.height() != distorted.height() {
        return Err(Error::invalid_input(
            "reference and distorted images must share dimensions",
        ));
    }
    if !scale_toggles.iter().any(|&e| e) {
        return Err(Error::invalid_config("all texture scales are disabled"));
    }
    let bank = shared_bank(reference.width(), reference.height(), cfg)?;

    let channels = [
        (&reference.y, &distorted.y, ChannelTag::Y),
        (&reference.cb, &distorted.cb, ChannelTag::Cb),
        (&reference.cr, &distorted.cr, ChannelTag::Cr),
    ];
    let mut maps = Vec::with_capacity(3);
    for (r, d, tag) in channels {
        let ra = filter_amplitude(r, &bank, tag)?;
        let da = filter_amplitude(d, &bank, tag)?;
        maps.push(channel_texture_similarity_scaled(&ra, &da, cfg, scale_toggles)?);
    }
    let s_t = combine_channels(&maps[0], &maps[1], &maps[2], cfg)?;
    Ok(texture_stats(&s_t))
}

const DUMP_MAGIC: &[u8; 4] = b"LGBK";

/// Serializes all 20 gain planes: per filter a 16-byte header (magic
/// `LGBK`, u32 width, u32 height, u16 scale index, u16 orientation index,
/// all little-endian, indices 1-based) followed by the row-major gains as
/// little-endian f64.
pub fn write_filter_dump<W: Write>(bank: &LogGaborBank, mut out: W) -> Result<()> {
    for s in 0..SCALE_COUNT {
        for o in 0..ORIENTATION_COUNT {
            out.write_all(DUMP_MAGIC)?;
            out.write_all(&(bank.width as u32).to_le_bytes())?;
            out.write_all(&(bank.height as u32).to_le_bytes())?;
            out.write_all(&((s + 1) as u16).to_le_bytes())?;
            out.write_all(&((o + 1) as u16).to_le_bytes())?;
            for &v in bank.gain(s, o).values() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Reads back a filter dump written by [`write_filter_dump`]. Returns the
/// records in file order as `(scale index, orientation index, gains)` with
/// 1-based indices.
pub fn read_filter_dump<R: Read>(mut input: R) -> Result<Vec<(u16, u16, Plane)>> {
    let mut records = Vec::new();
    loop {
        let mut magic = [0u8; 4];
        match input.read_exact(&mut magic) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        if &magic != DUMP_MAGIC {
            return Err(Error::invalid_input("bad filter dump magic"));
        }
        let mut u32buf = [0u8; 4];
        input.read_exact(&mut u32buf)?;
        let width = u32::from_le_bytes(u32buf) as usize;
        input.read_exact(&mut u32buf)?;
        let height = u32::from_le_bytes(u32buf) as usize;
        let mut u16buf = [0u8; 2];
        input.read_exact(&mut u16buf)?;
        let scale = u16::from_le_bytes(u16buf);
        input.read_exact(&mut u16buf)?;
        let orientation = u16::from_le_bytes(u16buf);

        let mut data = Vec::with_capacity(width * height);
        let mut f64buf = [0u8; 8];
        for _ in 0..width * height {
            input.read_exact(&mut f64buf)?;
            data.push(f64::from_le_bytes(f64buf));
        }
        records.push((scale, orientation, Plane::from_vec(width, height, data)?));
    }
    Ok(records)
}
