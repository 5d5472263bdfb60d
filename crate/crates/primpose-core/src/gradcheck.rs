//! Central finite-difference verification of every loss kernel's analytic
//! gradient, reused by the CLI self-test and the acceptance suite.

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::buffer::ImageBuffer;
use crate::loss::{
    kl_divergence, loss_adversarial, loss_keypoint, loss_object_topk, loss_primitive,
    pixel_sq_errors, primitive_channel_quantities, topk_indices, LatentStats,
};
use crate::primitive::Keypoints2;

pub const FD_STEP: f64 = 1e-4;
pub const GRAD_TOLERANCE: f64 = 1e-4;
/// Relative error denominators are floored here so near-zero gradient pairs
/// compare absolutely.
pub const REL_ERR_FLOOR: f64 = 1e-6;

pub const KERNEL_NAMES: [&str; 5] =
    ["object_topk", "primitive", "kl", "adversarial", "keypoint"];

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub kernel: &'static str,
    pub max_rel_err: f64,
    /// Flat coordinate index of the worst comparison.
    pub worst_index: usize,
    pub checked: usize,
    /// Coordinates excluded because the perturbation changed a top-K
    /// selection or straddled the |d| kink of the primitive loss.
    pub skipped: usize,
}

impl KernelReport {
    pub fn passes(&self) -> bool {
        self.max_rel_err <= GRAD_TOLERANCE
    }
}

const STENCIL: [f64; 4] = [-2.0 * FD_STEP, -FD_STEP, FD_STEP, 2.0 * FD_STEP];

/// Fourth-order central difference from values at STENCIL offsets. The
/// second-order two-point form leaves truncation error ~ alpha*h^2/(2|d|)
/// near the primitive loss's exponential kink, which breaches the tolerance
/// for small |d|; the five-point form does not. Pairing the differences
/// before scaling keeps the result exactly zero when the loss does not
/// depend on the coordinate at all.
fn combine_stencil(f: [f64; 4]) -> f64 {
    (8.0 * (f[2] - f[1]) - (f[3] - f[0])) / (12.0 * FD_STEP)
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR)
}

struct Accum {
    max_rel: f64,
    worst: usize,
    checked: usize,
    skipped: usize,
}

impl Accum {
    fn new() -> Self {
        Accum { max_rel: 0.0, worst: 0, checked: 0, skipped: 0 }
    }

    fn record(&mut self, idx: usize, analytic: f64, numeric: f64) {
        let rel = rel_err(analytic, numeric);
        if rel > self.max_rel {
            self.max_rel = rel;
            self.worst = idx;
        }
        self.checked += 1;
    }

    fn report(self, kernel: &'static str) -> KernelReport {
        KernelReport {
            kernel,
            max_rel_err: self.max_rel,
            worst_index: self.worst,
            checked: self.checked,
            skipped: self.skipped,
        }
    }
}

/// Simulated implementation defect for the self-test path: a corrupted
/// gradient must trip the tolerance.
fn corrupt(grad: &mut [f64]) {
    for g in grad {
        *g = *g * 1.01 + 1e-3;
    }
}

fn random_image_data(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    // Stay strictly inside [0,1] so +/- FD_STEP perturbations remain valid.
    (0..len).map(|_| rng.random_range(0.001..0.999)).collect()
}

fn pick_k(rng: &mut ChaCha8Rng, s: u64, n: usize) -> usize {
    match s % 3 {
        0 => 1,
        1 => n,
        _ => rng.random_range(2..n.max(3)),
    }
}

/// Image sizes cycle through the full frame and smaller ones, so selection
/// behavior is exercised at several pixel counts up to width x height.
fn seed_size(s: u64, width: usize, height: usize) -> (usize, usize) {
    match s % 4 {
        0 => (width, height),
        1 => ((width / 2).max(4), (height / 2).max(4)),
        2 => ((width / 3).max(4), (height / 3).max(4)),
        _ => (width.min(8), height.min(8)),
    }
}

fn run_object_topk(rng: &mut ChaCha8Rng, s: u64, w: usize, h: usize, fault: bool, acc: &mut Accum) {
    let n = w * h;
    let x = ImageBuffer::from_data(w, h, random_image_data(rng, n * 3)).unwrap();
    let xh_data = random_image_data(rng, n * 3);
    let x_hat = ImageBuffer::from_data(w, h, xh_data.clone()).unwrap();
    let k = pick_k(rng, s, n);

    let mut loss = loss_object_topk(&x, &x_hat, k).unwrap();
    if fault {
        corrupt(&mut loss.grad);
    }
    let base_sel = topk_indices(&pixel_sq_errors(&x, &x_hat), k);
    for i in 0..n * 3 {
        let eval = |delta: f64| {
            let mut d = xh_data.clone();
            d[i] += delta;
            let img = ImageBuffer::from_data(w, h, d).unwrap();
            let sel = topk_indices(&pixel_sq_errors(&x, &img), k);
            (loss_object_topk(&x, &img, k).unwrap().value, sel)
        };
        let probes = STENCIL.map(eval);
        if probes.iter().any(|(_, sel)| *sel != base_sel) {
            acc.skipped += 1;
            continue;
        }
        acc.record(i, loss.grad[i], combine_stencil(probes.map(|(f, _)| f)));
    }
}

fn run_primitive(rng: &mut ChaCha8Rng, s: u64, w: usize, h: usize, fault: bool, acc: &mut Accum) {
    let n = w * h;
    let x = ImageBuffer::from_data(w, h, random_image_data(rng, n * 3)).unwrap();
    let xh_data = random_image_data(rng, n * 3);
    let x_hat = ImageBuffer::from_data(w, h, xh_data.clone()).unwrap();
    let k = pick_k(rng, s, n);
    let alpha = if s % 2 == 0 { 5.0 } else { rng.random_range(2.0..7.0) };

    let mut loss = loss_primitive(&x, &x_hat, alpha, k).unwrap();
    if fault {
        corrupt(&mut loss.grad);
    }
    let base_sel: Vec<(Vec<usize>, Vec<usize>)> = (0..3)
        .map(|c| {
            let (amp, sq) = primitive_channel_quantities(&x, &x_hat, alpha, c);
            (topk_indices(&amp, k), topk_indices(&sq, k))
        })
        .collect();
    for i in 0..n * 3 {
        let (p, c) = (i / 3, i % 3);
        // exp(alpha|d|) is not differentiable at d = 0; a stencil straddling
        // the kink has no meaningful central difference.
        if (x.data()[3 * p + c] - xh_data[3 * p + c]).abs() <= 3.0 * FD_STEP {
            acc.skipped += 1;
            continue;
        }
        let eval = |delta: f64| {
            let mut d = xh_data.clone();
            d[i] += delta;
            let img = ImageBuffer::from_data(w, h, d).unwrap();
            let (amp, sq) = primitive_channel_quantities(&x, &img, alpha, c);
            let sel = (topk_indices(&amp, k), topk_indices(&sq, k));
            (loss_primitive(&x, &img, alpha, k).unwrap().value, sel)
        };
        let probes = STENCIL.map(eval);
        if probes.iter().any(|(_, sel)| *sel != base_sel[c]) {
            acc.skipped += 1;
            continue;
        }
        acc.record(i, loss.grad[i], combine_stencil(probes.map(|(f, _)| f)));
    }
}

fn run_kl(rng: &mut ChaCha8Rng, fault: bool, acc: &mut Accum) {
    let n = 32;
    let gen = |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let stats = LatentStats { mu: gen(rng), log_var: gen(rng) };
    let kl = kl_divergence(&stats).unwrap();
    let mut grad: Vec<f64> = kl.grad_mu.iter().chain(&kl.grad_log_var).copied().collect();
    if fault {
        corrupt(&mut grad);
    }
    for i in 0..2 * n {
        let eval = |delta: f64| {
            let mut st = stats.clone();
            if i < n {
                st.mu[i] += delta;
            } else {
                st.log_var[i - n] += delta;
            }
            kl_divergence(&st).unwrap().value
        };
        acc.record(i, grad[i], combine_stencil(STENCIL.map(eval)));
    }
}

fn run_adversarial(rng: &mut ChaCha8Rng, fault: bool, acc: &mut Accum) {
    let n = 48;
    // Away from the (0,1) boundary both for validity under the step and to
    // keep the finite-difference truncation error below the tolerance.
    let gen = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| rng.random_range(0.1..0.9)).collect()
    };
    let (d_real, d_fake) = (gen(rng), gen(rng));
    let adv = loss_adversarial(&d_real, &d_fake).unwrap();
    let mut grads: Vec<f64> = adv
        .grad_real_d
        .iter()
        .chain(&adv.grad_fake_d)
        .chain(&adv.grad_fake_g)
        .copied()
        .collect();
    if fault {
        corrupt(&mut grads);
    }
    for i in 0..3 * n {
        let eval = |delta: f64| {
            let (mut r, mut f) = (d_real.clone(), d_fake.clone());
            match i / n {
                0 => r[i] += delta,
                _ => f[i % n] += delta,
            }
            let l = loss_adversarial(&r, &f).unwrap();
            if i / n == 2 {
                l.loss_g
            } else {
                l.loss_d
            }
        };
        acc.record(i, grads[i], combine_stencil(STENCIL.map(eval)));
    }
}

fn run_keypoint(rng: &mut ChaCha8Rng, fault: bool, acc: &mut Accum) {
    let mut pred = Keypoints2 { points: [Vector2::zeros(); 21] };
    let mut target = pred;
    for i in 0..21 {
        pred.points[i] = Vector2::new(rng.random_range(0.0..300.0), rng.random_range(0.0..300.0));
        // Offsets bounded away from zero keep every gradient coordinate well
        // above cancellation noise.
        let off = |rng: &mut ChaCha8Rng| {
            rng.random_range(2.0..20.0) * if rng.random::<bool>() { 1.0 } else { -1.0 }
        };
        target.points[i] = pred.points[i] + Vector2::new(off(rng), off(rng));
    }
    let mut loss = loss_keypoint(&pred, &target);
    if fault {
        corrupt(&mut loss.grad);
    }
    for i in 0..42 {
        let eval = |delta: f64| {
            let mut p = pred;
            p.points[i / 2][i % 2] += delta;
            loss_keypoint(&p, &target).value
        };
        acc.record(i, loss.grad[i], combine_stencil(STENCIL.map(eval)));
    }
}

/// Verifies all five kernels over `n_seeds` randomized inputs with image
/// sizes up to `width` x `height`, returning one report per kernel.
pub fn check_all(seed: u64, width: usize, height: usize, n_seeds: u64) -> Vec<KernelReport> {
    check_all_faulted(seed, width, height, n_seeds, None)
}

/// `check_all` with an optional deliberately corrupted kernel, used to prove
/// the harness detects a wrong gradient. `fault` names one of KERNEL_NAMES.
pub fn check_all_faulted(
    seed: u64,
    width: usize,
    height: usize,
    n_seeds: u64,
    fault: Option<&str>,
) -> Vec<KernelReport> {
    let mut accs: Vec<Accum> = (0..5).map(|_| Accum::new()).collect();
    for s in 0..n_seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s.wrapping_mul(0x9e3779b97f4a7c15)));
        let (w, h) = seed_size(s, width, height);
        run_object_topk(&mut rng, s, w, h, fault == Some("object_topk"), &mut accs[0]);
        run_primitive(&mut rng, s, w, h, fault == Some("primitive"), &mut accs[1]);
        run_kl(&mut rng, fault == Some("kl"), &mut accs[2]);
        run_adversarial(&mut rng, fault == Some("adversarial"), &mut accs[3]);
        run_keypoint(&mut rng, fault == Some("keypoint"), &mut accs[4]);
    }
    accs.into_iter().zip(KERNEL_NAMES).map(|(a, name)| a.report(name)).collect()
}
