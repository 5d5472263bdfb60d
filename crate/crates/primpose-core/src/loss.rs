//! Reconstruction, latent, adversarial, and keypoint loss kernels, each
//! returning the scalar loss and its analytic gradient with respect to the
//! prediction.

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};
use crate::primitive::Keypoints2;

pub const DEFAULT_TOP_K: usize = 128;
pub const DEFAULT_ALPHA: f64 = 5.0;

/// Guard threshold below which the per-channel weighting of the primitive
/// loss degenerates to unit weights.
pub const PRIMITIVE_WEIGHT_GUARD: f64 = 1e-12;

/// Scalar loss plus d(loss)/d(prediction) in the prediction's own layout.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Diagonal-Gaussian posterior parameters, variance stored as log sigma^2.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentStats {
    pub mu: Vec<f64>,
    pub log_var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KlLoss {
    pub value: f64,
    pub grad_mu: Vec<f64>,
    pub grad_log_var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialLoss {
    pub loss_d: f64,
    pub loss_g: f64,
    /// d(loss_d)/d(d_real)
    pub grad_real_d: Vec<f64>,
    /// d(loss_d)/d(d_fake)
    pub grad_fake_d: Vec<f64>,
    /// d(loss_g)/d(d_fake)
    pub grad_fake_g: Vec<f64>,
}

fn check_shapes(x: &ImageBuffer, x_hat: &ImageBuffer) -> Result<()> {
    if x.width() != x_hat.width() || x.height() != x_hat.height() {
        return Err(Error::ShapeMismatch(format!(
            "target {}x{} vs prediction {}x{}",
            x.width(),
            x.height(),
            x_hat.width(),
            x_hat.height()
        )));
    }
    Ok(())
}

fn check_k(k: usize, n_pixels: usize) -> Result<()> {
    if k == 0 || k > n_pixels {
        return Err(Error::InvalidParam(format!(
            "K must be in 1..={n_pixels}, got {k}"
        )));
    }
    Ok(())
}

/// Indices of the K largest values, ties broken by ascending index. The
/// comparator is a total order, so the selected set is unique; the returned
/// indices are sorted ascending.
pub(crate) fn topk_indices(vals: &[f64], k: usize) -> Vec<usize> {
    debug_assert!(k >= 1 && k <= vals.len());
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    let desc_then_stable = |&a: &usize, &b: &usize| {
        vals[b].partial_cmp(&vals[a]).expect("loss inputs are finite").then(a.cmp(&b))
    };
    if k < vals.len() {
        idx.select_nth_unstable_by(k - 1, desc_then_stable);
        idx.truncate(k);
    }
    idx.sort_unstable();
    idx
}

/// Per-pixel squared error, channels summed.
pub(crate) fn pixel_sq_errors(x: &ImageBuffer, x_hat: &ImageBuffer) -> Vec<f64> {
    let (a, b) = (x.data(), x_hat.data());
    (0..x.n_pixels())
        .map(|p| {
            (0..3).map(|c| (b[3 * p + c] - a[3 * p + c]).powi(2)).sum()
        })
        .collect()
}

/// Mean of the K largest per-pixel squared errors.
///
/// The gradient is nonzero only at selected pixels: 2(x_hat - x)/K per
/// channel, holding the selection fixed.
pub fn loss_object_topk(x: &ImageBuffer, x_hat: &ImageBuffer, k: usize) -> Result<LossValue> {
    check_shapes(x, x_hat)?;
    check_k(k, x.n_pixels())?;
    let errs = pixel_sq_errors(x, x_hat);
    let sel = topk_indices(&errs, k);
    let value = sel.iter().map(|&p| errs[p]).sum::<f64>() / k as f64;
    let mut grad = vec![0.0; x.data().len()];
    for &p in &sel {
        for c in 0..3 {
            let i = 3 * p + c;
            grad[i] = 2.0 * (x_hat.data()[i] - x.data()[i]) / k as f64;
        }
    }
    Ok(LossValue { value, grad })
}

/// Per-channel top-K quantities of the primitive loss: the exponentially
/// amplified summand and the plain squared difference, each ranked by itself.
pub(crate) fn primitive_channel_quantities(
    x: &ImageBuffer,
    x_hat: &ImageBuffer,
    alpha: f64,
    channel: usize,
) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = (x.data(), x_hat.data());
    let n = x.n_pixels();
    let mut amplified = Vec::with_capacity(n);
    let mut squared = Vec::with_capacity(n);
    for p in 0..n {
        let d = a[3 * p + channel] - b[3 * p + channel];
        amplified.push((alpha * d.abs()).exp() * d * d);
        squared.push(d * d);
    }
    (amplified, squared)
}

/// Color-amplified reconstruction loss with inter-channel weighting.
///
/// Per channel c over d_c = x_c - x_hat_c: S_c is the top-K mean of
/// exp(alpha|d|)·d² and C_c the top-K mean of d², each selected by its own
/// ranking. The loss is sum_c S_c·exp(C_c / sum_k C_k); when sum_k C_k falls
/// below PRIMITIVE_WEIGHT_GUARD the weights degenerate to 1. Gradients hold
/// the selections fixed.
pub fn loss_primitive(
    x: &ImageBuffer,
    x_hat: &ImageBuffer,
    alpha: f64,
    k: usize,
) -> Result<LossValue> {
    check_shapes(x, x_hat)?;
    check_k(k, x.n_pixels())?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParam(format!("alpha must be > 0, got {alpha}")));
    }
    let kf = k as f64;
    let mut s = [0.0; 3];
    let mut c_mean = [0.0; 3];
    let mut sel_s = Vec::with_capacity(3);
    let mut sel_c = Vec::with_capacity(3);
    for ch in 0..3 {
        let (amplified, squared) = primitive_channel_quantities(x, x_hat, alpha, ch);
        let ss = topk_indices(&amplified, k);
        let sc = topk_indices(&squared, k);
        s[ch] = ss.iter().map(|&p| amplified[p]).sum::<f64>() / kf;
        c_mean[ch] = sc.iter().map(|&p| squared[p]).sum::<f64>() / kf;
        sel_s.push(ss);
        sel_c.push(sc);
    }
    let total: f64 = c_mean.iter().sum();

    let diff = |p: usize, ch: usize| x.data()[3 * p + ch] - x_hat.data()[3 * p + ch];
    // d/dd of exp(alpha|d|)·d², valid everywhere (zero at d=0).
    let amplified_slope =
        |d: f64| (alpha * d.abs()).exp() * d * (alpha * d.abs() + 2.0);

    let mut grad = vec![0.0; x.data().len()];
    let value;
    if total < PRIMITIVE_WEIGHT_GUARD {
        value = s.iter().sum();
        for ch in 0..3 {
            for &p in &sel_s[ch] {
                grad[3 * p + ch] -= amplified_slope(diff(p, ch)) / kf;
            }
        }
    } else {
        let w = [
            (c_mean[0] / total).exp(),
            (c_mean[1] / total).exp(),
            (c_mean[2] / total).exp(),
        ];
        value = (0..3).map(|ch| s[ch] * w[ch]).sum();
        // d(value)/d(C_e) routes through every channel's weight via the total.
        let dv_dc: Vec<f64> = (0..3)
            .map(|e| {
                (0..3)
                    .map(|ch| {
                        let delta = (ch == e) as u8 as f64;
                        s[ch] * w[ch] * (delta * total - c_mean[ch]) / (total * total)
                    })
                    .sum()
            })
            .collect();
        for ch in 0..3 {
            for &p in &sel_s[ch] {
                grad[3 * p + ch] -= w[ch] * amplified_slope(diff(p, ch)) / kf;
            }
            for &p in &sel_c[ch] {
                grad[3 * p + ch] -= dv_dc[ch] * 2.0 * diff(p, ch) / kf;
            }
        }
    }
    Ok(LossValue { value, grad })
}

/// KL divergence of N(mu, diag(exp(log_var))) from the unit Gaussian:
/// 0.5·sum(mu² + exp(log_var) - 1 - log_var).
pub fn kl_divergence(stats: &LatentStats) -> Result<KlLoss> {
    if stats.mu.len() != stats.log_var.len() {
        return Err(Error::ShapeMismatch(format!(
            "mu has {} entries, log_var {}",
            stats.mu.len(),
            stats.log_var.len()
        )));
    }
    if stats.mu.iter().chain(&stats.log_var).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("latent stats must be finite".into()));
    }
    let mut value = 0.0;
    let mut grad_mu = Vec::with_capacity(stats.mu.len());
    let mut grad_log_var = Vec::with_capacity(stats.mu.len());
    for (&m, &lv) in stats.mu.iter().zip(&stats.log_var) {
        value += 0.5 * (m * m + lv.exp() - 1.0 - lv);
        grad_mu.push(m);
        grad_log_var.push(0.5 * (lv.exp() - 1.0));
    }
    Ok(KlLoss { value, grad_mu, grad_log_var })
}

/// Total reconstruction objective: object + primitive + KL.
pub fn loss_vae_total(obj: &LossValue, prim: &LossValue, kl: &KlLoss) -> f64 {
    obj.value + prim.value + kl.value
}

/// Binary cross-entropy GAN objective over discriminator probabilities, with
/// the non-saturating generator form:
/// L_D = -mean(ln d_real) - mean(ln(1 - d_fake)), L_G = -mean(ln d_fake).
pub fn loss_adversarial(d_real: &[f64], d_fake: &[f64]) -> Result<AdversarialLoss> {
    if d_real.is_empty() || d_fake.is_empty() {
        return Err(Error::InvalidInput("probability batches must be nonempty".into()));
    }
    for &p in d_real.iter().chain(d_fake) {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidInput(format!(
                "probabilities must lie strictly in (0,1), got {p}"
            )));
        }
    }
    let (nr, nf) = (d_real.len() as f64, d_fake.len() as f64);
    let loss_d = -d_real.iter().map(|p| p.ln()).sum::<f64>() / nr
        - d_fake.iter().map(|p| (1.0 - p).ln()).sum::<f64>() / nf;
    let loss_g = -d_fake.iter().map(|p| p.ln()).sum::<f64>() / nf;
    Ok(AdversarialLoss {
        loss_d,
        loss_g,
        grad_real_d: d_real.iter().map(|p| -1.0 / (nr * p)).collect(),
        grad_fake_d: d_fake.iter().map(|p| 1.0 / (nf * (1.0 - p))).collect(),
        grad_fake_g: d_fake.iter().map(|p| -1.0 / (nf * p)).collect(),
    })
}

/// Summed squared keypoint distance; gradient is 2(pred - target) laid out
/// as [u0, v0, u1, v1, ...].
pub fn loss_keypoint(pred: &Keypoints2, target: &Keypoints2) -> LossValue {
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(42);
    for (p, t) in pred.iter().zip(target.iter()) {
        let d = p - t;
        value += d.norm_squared();
        grad.push(2.0 * d.x);
        grad.push(2.0 * d.y);
    }
    LossValue { value, grad }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn image(w: usize, h: usize, data: Vec<f64>) -> ImageBuffer {
        ImageBuffer::from_data(w, h, data).unwrap()
    }

    fn random_pair(rng: &mut ChaCha8Rng, w: usize, h: usize) -> (ImageBuffer, ImageBuffer) {
        let mut gen = |_| rng.random_range(0.001..0.999);
        let a: Vec<f64> = (0..w * h * 3).map(&mut gen).collect();
        let b: Vec<f64> = (0..w * h * 3).map(&mut gen).collect();
        (image(w, h, a), image(w, h, b))
    }

    #[test]
    fn object_topk_matches_hand_sort() {
        // Four pixels differing only in R by 0.1, 0.3, 0.2, 0.4.
        let x = image(2, 2, vec![0.0; 12]);
        let mut d = vec![0.0; 12];
        for (p, r) in [0.1, 0.3, 0.2, 0.4].iter().enumerate() {
            d[3 * p] = *r;
        }
        let x_hat = image(2, 2, d);
        let loss = loss_object_topk(&x, &x_hat, 2).unwrap();
        assert!((loss.value - 0.125).abs() < 1e-12);
        // Selected pixels are 1 and 3; their R gradients are 2·d/K.
        assert!((loss.grad[3] - 0.3).abs() < 1e-12);
        assert!((loss.grad[9] - 0.4).abs() < 1e-12);
        assert_eq!(loss.grad[0], 0.0);
        assert_eq!(loss.grad[6], 0.0);
    }

    #[test]
    fn object_topk_perfect_reconstruction_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (x, _) = random_pair(&mut rng, 4, 3);
        let loss = loss_object_topk(&x, &x.clone(), 5).unwrap();
        assert_eq!(loss.value, 0.0);
        assert!(loss.grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn object_topk_breaks_ties_by_ascending_index() {
        // Pixels 0 and 1 tie; K=1 must select pixel 0.
        let x = image(3, 1, vec![0.0; 9]);
        let mut d = vec![0.0; 9];
        d[0] = 0.2; // pixel 0, R
        d[4] = 0.2; // pixel 1, G
        let x_hat = image(3, 1, d);
        let loss = loss_object_topk(&x, &x_hat, 1).unwrap();
        assert!(loss.grad[0] != 0.0);
        assert!(loss.grad[4] == 0.0);

        let both = loss_object_topk(&x, &x_hat, 2).unwrap();
        assert!(both.grad[0] != 0.0 && both.grad[4] != 0.0);
    }

    #[test]
    fn object_topk_full_k_equals_mean_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (x, x_hat) = random_pair(&mut rng, 8, 8);
        let n = 64;
        let loss = loss_object_topk(&x, &x_hat, n).unwrap();
        let mean: f64 = x
            .data()
            .iter()
            .zip(x_hat.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n as f64;
        assert!((loss.value - mean).abs() < 1e-12);
    }

    #[test]
    fn object_topk_monotone_in_single_pixel_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (x, x_hat) = random_pair(&mut rng, 6, 6);
        for k in [1, 7, 36] {
            let base = loss_object_topk(&x, &x_hat, k).unwrap().value;
            for p in [0usize, 17, 35] {
                let mut worse = x_hat.data().to_vec();
                let i = 3 * p;
                // Push the channel further from the target.
                let away = if worse[i] >= x.data()[i] { 0.999 } else { 0.001 };
                worse[i] = away;
                let bumped = loss_object_topk(&x, &image(6, 6, worse), k).unwrap().value;
                assert!(bumped >= base - 1e-15, "k={k} p={p}: {bumped} < {base}");
            }
        }
    }

    #[test]
    fn object_topk_rejects_bad_arguments() {
        let x = image(2, 2, vec![0.1; 12]);
        let y = image(2, 1, vec![0.1; 6]);
        assert!(matches!(loss_object_topk(&x, &y, 1), Err(Error::ShapeMismatch(_))));
        assert!(loss_object_topk(&x, &x.clone(), 0).is_err());
        assert!(loss_object_topk(&x, &x.clone(), 5).is_err());
    }

    #[test]
    fn primitive_single_pixel_hand_value() {
        // d_R = 0.2, alpha = 5, K = 1: S_R = e·0.04, weight e, value e²·0.04.
        let x = image(1, 1, vec![0.2, 0.0, 0.0]);
        let x_hat = image(1, 1, vec![0.0, 0.0, 0.0]);
        let loss = loss_primitive(&x, &x_hat, 5.0, 1).unwrap();
        let exact = 0.04 * std::f64::consts::E.powi(2);
        assert!((loss.value - exact).abs() < 1e-12);
        assert!((loss.value - 0.29557).abs() < 1e-5);
    }

    #[test]
    fn primitive_perfect_reconstruction_hits_guard() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (x, _) = random_pair(&mut rng, 4, 4);
        let loss = loss_primitive(&x, &x.clone(), 5.0, 8).unwrap();
        assert_eq!(loss.value, 0.0);
        assert!(loss.grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn primitive_is_channel_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (x, x_hat) = random_pair(&mut rng, 5, 4);
        let base = loss_primitive(&x, &x_hat, 5.0, 9).unwrap().value;
        let permute = |img: &ImageBuffer| {
            let mut d = img.data().to_vec();
            for p in 0..img.n_pixels() {
                let (r, g, b) = (d[3 * p], d[3 * p + 1], d[3 * p + 2]);
                d[3 * p] = g;
                d[3 * p + 1] = b;
                d[3 * p + 2] = r;
            }
            image(img.width(), img.height(), d)
        };
        let rolled = loss_primitive(&permute(&x), &permute(&x_hat), 5.0, 9).unwrap().value;
        assert!((base - rolled).abs() < 1e-12);
    }

    #[test]
    fn kl_divergence_hand_values() {
        let zero = kl_divergence(&LatentStats { mu: vec![0.0], log_var: vec![0.0] }).unwrap();
        assert_eq!(zero.value, 0.0);

        let unit_mean = kl_divergence(&LatentStats { mu: vec![1.0], log_var: vec![0.0] }).unwrap();
        assert!((unit_mean.value - 0.5).abs() < 1e-12);

        let wide = kl_divergence(&LatentStats { mu: vec![0.0], log_var: vec![2.0_f64.ln()] }).unwrap();
        assert!((wide.value - 0.1534264).abs() < 1e-7);
        assert!((wide.grad_log_var[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kl_divergence_nonnegative_and_zero_only_at_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let n = rng.random_range(1..8);
            let stats = LatentStats {
                mu: (0..n).map(|_| rng.random_range(-3.0..3.0)).collect(),
                log_var: (0..n).map(|_| rng.random_range(-3.0..3.0)).collect(),
            };
            let kl = kl_divergence(&stats).unwrap();
            assert!(kl.value >= 0.0);
            let at_origin = stats.mu.iter().all(|&m| m == 0.0)
                && stats.log_var.iter().all(|&v| v == 0.0);
            assert_eq!(kl.value == 0.0, at_origin);
        }
        assert!(kl_divergence(&LatentStats { mu: vec![f64::NAN], log_var: vec![0.0] }).is_err());
        assert!(kl_divergence(&LatentStats { mu: vec![0.0; 2], log_var: vec![0.0] }).is_err());
    }

    #[test]
    fn vae_total_is_the_component_sum() {
        let x = image(2, 2, vec![0.0; 12]);
        let mut d = vec![0.0; 12];
        for (p, r) in [0.1, 0.3, 0.2, 0.4].iter().enumerate() {
            d[3 * p] = *r;
        }
        let x_hat = image(2, 2, d);
        let obj = loss_object_topk(&x, &x_hat, 2).unwrap();

        let px = image(1, 1, vec![0.2, 0.0, 0.0]);
        let px_hat = image(1, 1, vec![0.0, 0.0, 0.0]);
        let prim = loss_primitive(&px, &px_hat, 5.0, 1).unwrap();

        let kl = kl_divergence(&LatentStats { mu: vec![1.0], log_var: vec![0.0] }).unwrap();

        let total = loss_vae_total(&obj, &prim, &kl);
        assert!((total - (obj.value + prim.value + kl.value)).abs() < 1e-12);
        assert!((total - 0.92057).abs() < 1e-5);
    }

    #[test]
    fn adversarial_hand_values_and_limits() {
        let half = loss_adversarial(&[0.5, 0.5], &[0.5]).unwrap();
        assert!((half.loss_d - 1.386294).abs() < 1e-6);
        assert!((half.loss_g - 0.693147).abs() < 1e-6);

        let sharp = loss_adversarial(&[1.0 - 1e-7], &[1e-7]).unwrap();
        assert!(sharp.loss_d < 1e-5, "perfect discriminator should cost ~0");

        assert!(loss_adversarial(&[0.5], &[1.0]).is_err());
        assert!(loss_adversarial(&[0.0], &[0.5]).is_err());
        assert!(loss_adversarial(&[], &[0.5]).is_err());
    }

    #[test]
    fn keypoint_loss_hand_values() {
        let base = Keypoints2 { points: [Vector2::new(10.0, 20.0); 21] };
        let same = loss_keypoint(&base, &base);
        assert_eq!(same.value, 0.0);

        let mut moved = base;
        moved.points[7] += Vector2::new(3.0, 4.0);
        let off = loss_keypoint(&moved, &base);
        assert!((off.value - 25.0).abs() < 1e-12);
        assert!((off.grad[14] - 6.0).abs() < 1e-12);
        assert!((off.grad[15] - 8.0).abs() < 1e-12);

        // L2² is degree-2 homogeneous in the offsets.
        let mut doubled = base;
        doubled.points[7] += Vector2::new(6.0, 8.0);
        assert!((loss_keypoint(&doubled, &base).value - 100.0).abs() < 1e-12);
    }
}
