//! Domain randomization for rendered training images.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::buffer::{ImageBuffer, MaskBuffer};
use crate::render::occlude_in_place;

use super::GenConfig;

/// Side length of the color lattice the random background interpolates.
const BACKGROUND_LATTICE: usize = 4;

/// Applies the enabled augmentations in a fixed order: background
/// substitution behind the mask, per-channel affine color jitter, occluder
/// rectangles, additive Gaussian noise. Values stay in [0, 1]. Disabled
/// stages are skipped entirely, so with everything off the input comes
/// back unchanged and bit-identical.
pub fn augment_domain_randomization(
    img: &ImageBuffer,
    mask: &MaskBuffer,
    rng: &mut ChaCha8Rng,
    config: &GenConfig,
) -> ImageBuffer {
    let mut out = img.clone();
    if config.background {
        substitute_background(&mut out, mask, rng);
    }
    if config.color_jitter > 0.0 {
        let amp = config.color_jitter;
        let mut gain = [0.0; 3];
        let mut bias = [0.0; 3];
        for c in 0..3 {
            gain[c] = rng.random_range(1.0 - amp..=1.0 + amp);
            bias[c] = rng.random_range(-amp..=amp);
        }
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v = (gain[i % 3] * *v + bias[i % 3]).clamp(0.0, 1.0);
        }
    }
    if config.occluder_count > 0 {
        occlude_in_place(&mut out, config.occluder_count, config.occluder_size, rng);
    }
    if config.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, config.noise_sigma).expect("validated sigma");
        for v in out.data_mut() {
            *v = (*v + rng.sample(noise)).clamp(0.0, 1.0);
        }
    }
    out
}

/// Replaces non-mask pixels with a smooth random color field: a small
/// lattice of random colors, bilinearly interpolated across the frame.
fn substitute_background(img: &mut ImageBuffer, mask: &MaskBuffer, rng: &mut ChaCha8Rng) {
    let mut lattice = [[[0.0f64; 3]; BACKGROUND_LATTICE]; BACKGROUND_LATTICE];
    for row in lattice.iter_mut() {
        for cell in row.iter_mut() {
            for ch in cell.iter_mut() {
                *ch = rng.random_range(0.0..=1.0);
            }
        }
    }
    let (w, h) = (img.width(), img.height());
    let n = BACKGROUND_LATTICE - 1;
    for v in 0..h {
        for u in 0..w {
            if mask.get(u, v) {
                continue;
            }
            // lattice-space coordinates of this pixel
            let x = if w > 1 { u as f64 / (w - 1) as f64 } else { 0.0 } * n as f64;
            let y = if h > 1 { v as f64 / (h - 1) as f64 } else { 0.0 } * n as f64;
            let (x0, y0) = ((x.floor() as usize).min(n - 1), (y.floor() as usize).min(n - 1));
            let (fx, fy) = (x - x0 as f64, y - y0 as f64);
            let mut rgb = [0.0; 3];
            for (c, out) in rgb.iter_mut().enumerate() {
                let top = lattice[y0][x0][c] * (1.0 - fx) + lattice[y0][x0 + 1][c] * fx;
                let bot = lattice[y0 + 1][x0][c] * (1.0 - fx) + lattice[y0 + 1][x0 + 1][c] * fx;
                *out = top * (1.0 - fy) + bot * fy;
            }
            img.set(u, v, rgb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn quiet_config() -> GenConfig {
        GenConfig {
            background: false,
            color_jitter: 0.0,
            occluder_count: 0,
            noise_sigma: 0.0,
            ..GenConfig::default()
        }
    }

    fn gradient_image(w: usize, h: usize) -> ImageBuffer {
        let mut img = ImageBuffer::new(w, h);
        for v in 0..h {
            for u in 0..w {
                let t = (u + v * w) as f64 / (w * h) as f64;
                img.set(u, v, [t, 1.0 - t, 0.5 * t]);
            }
        }
        img
    }

    #[test]
    fn all_toggles_off_is_the_identity() {
        let img = gradient_image(20, 15);
        let mask = MaskBuffer::new(20, 15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = augment_domain_randomization(&img, &mask, &mut rng, &quiet_config());
        assert_eq!(out.data(), img.data());
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let img = gradient_image(24, 18);
        let mask = MaskBuffer::new(24, 18);
        let config = GenConfig::default();
        let a = augment_domain_randomization(&img, &mask, &mut ChaCha8Rng::seed_from_u64(7), &config);
        let b = augment_domain_randomization(&img, &mask, &mut ChaCha8Rng::seed_from_u64(7), &config);
        assert_eq!(a.data(), b.data());
        let c = augment_domain_randomization(&img, &mask, &mut ChaCha8Rng::seed_from_u64(8), &config);
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn background_leaves_masked_pixels_alone() {
        let img = ImageBuffer::filled(30, 20, [0.3, 0.6, 0.9]);
        let mut mask = MaskBuffer::new(30, 20);
        for v in 5..12 {
            for u in 8..20 {
                mask.set(u, v, true);
            }
        }
        let config = GenConfig {
            background: true,
            ..quiet_config()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = augment_domain_randomization(&img, &mask, &mut rng, &config);
        let mut changed = 0;
        for v in 0..20 {
            for u in 0..30 {
                if mask.get(u, v) {
                    assert_eq!(out.get(u, v), img.get(u, v), "masked pixel ({u},{v}) touched");
                } else if out.get(u, v) != img.get(u, v) {
                    changed += 1;
                }
            }
        }
        assert!(changed > 100, "background barely replaced: {changed} pixels");
    }

    #[test]
    fn jitter_is_a_per_channel_affine_map() {
        let img = gradient_image(16, 16);
        let mask = MaskBuffer::new(16, 16);
        let config = GenConfig {
            color_jitter: 0.1,
            ..quiet_config()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let out = augment_domain_randomization(&img, &mask, &mut rng, &config);
        // recover gain/bias from two pixels, verify on the rest; the probe
        // pixels sit far enough inside (0, 1) that no gain/bias in range can
        // clamp them
        for c in 0..3 {
            let x0 = img.data()[3 * 60 + c];
            let x1 = img.data()[3 * 200 + c];
            let y0 = out.data()[3 * 60 + c];
            let y1 = out.data()[3 * 200 + c];
            let gain = (y1 - y0) / (x1 - x0);
            let bias = y0 - gain * x0;
            for p in 0..16 * 16 {
                let expect = (gain * img.data()[3 * p + c] + bias).clamp(0.0, 1.0);
                assert!((out.data()[3 * p + c] - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn noise_sigma_matches_the_request() {
        let img = ImageBuffer::filled(400, 250, [0.5, 0.5, 0.5]);
        let mask = MaskBuffer::new(400, 250);
        let sigma = 0.05;
        let config = GenConfig {
            noise_sigma: sigma,
            ..quiet_config()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let out = augment_domain_randomization(&img, &mask, &mut rng, &config);
        let diffs: Vec<f64> = out
            .data()
            .iter()
            .zip(img.data())
            .map(|(a, b)| a - b)
            .collect();
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
        let measured = var.sqrt();
        assert!(
            (measured - sigma).abs() < 0.1 * sigma,
            "sigma {measured} vs requested {sigma}"
        );
    }
}
