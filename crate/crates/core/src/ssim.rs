//! Windowed SSIM over valid (fully covered) window positions, with an
//! analytic gradient for use in the photometric loss.

use crate::error::{Error, Result};
use crate::image::Image;

pub const WINDOW: usize = 11;
pub const SIGMA: f64 = 1.5;
/// Stabilizers for unit dynamic range: (0.01)^2 and (0.03)^2.
pub const C1: f64 = 1e-4;
pub const C2: f64 = 9e-4;

/// Normalized 1D Gaussian taps; the 2D window is their outer product.
pub fn gaussian_taps() -> [f64; WINDOW] {
    let mut taps = [0.0; WINDOW];
    let half = (WINDOW / 2) as f64;
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - half;
        *t = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Valid-mode separable correlation of one plane with the window.
fn filter(plane: &[f64], w: usize, h: usize, taps: &[f64; WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w - WINDOW + 1, h - WINDOW + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * plane[y * w + x + k];
            }
            rows[y * ow + x] = acc;
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * rows[(y + k) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Adjoint of [`filter`]: scatters per-window values back onto pixels.
fn filter_adjoint(values: &[f64], w: usize, h: usize, taps: &[f64; WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w - WINDOW + 1, h - WINDOW + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..oh {
        for x in 0..ow {
            let v = values[y * ow + x];
            for (k, t) in taps.iter().enumerate() {
                rows[(y + k) * ow + x] += t * v;
            }
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..ow {
            let v = rows[y * ow + x];
            for (k, t) in taps.iter().enumerate() {
                out[y * w + x + k] += t * v;
            }
        }
    }
    out
}

fn check(a: &Image, b: &Image) -> Result<()> {
    a.same_size(b)?;
    if a.width < WINDOW || a.height < WINDOW {
        return Err(Error::ImageTooSmall {
            width: a.width,
            height: a.height,
            window: WINDOW,
        });
    }
    Ok(())
}

fn plane(img: &Image, c: usize) -> Vec<f64> {
    img.data.iter().skip(c).step_by(3).copied().collect()
}

/// Mean SSIM over channels and valid window positions.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    ssim_impl(a, b, false).map(|(v, _)| v)
}

/// SSIM and its gradient with respect to the first image.
pub fn ssim_with_grad(a: &Image, b: &Image) -> Result<(f64, Image)> {
    ssim_impl(a, b, true).map(|(v, g)| (v, g.unwrap()))
}

fn ssim_impl(a: &Image, b: &Image, want_grad: bool) -> Result<(f64, Option<Image>)> {
    check(a, b)?;
    let (w, h) = (a.width, a.height);
    let taps = gaussian_taps();
    let positions = (w - WINDOW + 1) * (h - WINDOW + 1);
    let norm = 1.0 / (positions * 3) as f64;
    let mut total = 0.0;
    let mut grad = want_grad.then(|| Image::new(w, h));

    for c in 0..3 {
        let x = plane(a, c);
        let y = plane(b, c);
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
        let mx = filter(&x, w, h, &taps);
        let my = filter(&y, w, h, &taps);
        let exx = filter(&xx, w, h, &taps);
        let eyy = filter(&yy, w, h, &taps);
        let exy = filter(&xy, w, h, &taps);

        let mut d_e1 = vec![0.0; positions];
        let mut d_e2 = vec![0.0; positions];
        let mut d_e3 = vec![0.0; positions];
        for q in 0..positions {
            let (ux, uy) = (mx[q], my[q]);
            let vx = exx[q] - ux * ux;
            let vy = eyy[q] - uy * uy;
            let cxy = exy[q] - ux * uy;
            let n1 = 2.0 * ux * uy + C1;
            let n2 = 2.0 * cxy + C2;
            let d1 = ux * ux + uy * uy + C1;
            let d2 = vx + vy + C2;
            let num = n1 * n2;
            let den = d1 * d2;
            total += num / den;
            if want_grad {
                // derivatives of num/den w.r.t. E[x], E[x^2], E[xy]
                let dnum_de1 = 2.0 * uy * n2 - 2.0 * uy * n1;
                let dden_de1 = 2.0 * ux * d2 - 2.0 * ux * d1;
                d_e1[q] = norm * (dnum_de1 * den - num * dden_de1) / (den * den);
                d_e2[q] = norm * (-num * d1) / (den * den);
                d_e3[q] = norm * (2.0 * n1) / den;
            }
        }
        if let Some(g) = grad.as_mut() {
            let g1 = filter_adjoint(&d_e1, w, h, &taps);
            let g2 = filter_adjoint(&d_e2, w, h, &taps);
            let g3 = filter_adjoint(&d_e3, w, h, &taps);
            for p in 0..w * h {
                g.data[3 * p + c] = g1[p] + 2.0 * x[p] * g2[p] + y[p] * g3[p];
            }
        }
    }
    Ok((total * norm, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_data(w, h, (0..w * h * 3).map(|_| rng.gen::<f64>()).collect()).unwrap()
    }

    /// Direct evaluation: explicit 2D window sums at every valid position.
    fn reference_ssim(a: &Image, b: &Image) -> f64 {
        let taps = gaussian_taps();
        let (ow, oh) = (a.width - WINDOW + 1, a.height - WINDOW + 1);
        let mut total = 0.0;
        for c in 0..3 {
            for oy in 0..oh {
                for ox in 0..ow {
                    let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                    for ky in 0..WINDOW {
                        for kx in 0..WINDOW {
                            let wgt = taps[ky] * taps[kx];
                            let x = a.pixel(ox + kx, oy + ky)[c];
                            let y = b.pixel(ox + kx, oy + ky)[c];
                            mx += wgt * x;
                            my += wgt * y;
                            sxx += wgt * x * x;
                            syy += wgt * y * y;
                            sxy += wgt * x * y;
                        }
                    }
                    let vx = sxx - mx * mx;
                    let vy = syy - my * my;
                    let cxy = sxy - mx * my;
                    total += ((2.0 * mx * my + C1) * (2.0 * cxy + C2))
                        / ((mx * mx + my * my + C1) * (vx + vy + C2));
                }
            }
        }
        total / (ow * oh * 3) as f64
    }

    #[test]
    fn identical_images_score_one() {
        let a = random_image(16, 14, 1);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let flat = Image::filled(12, 12, [0.3, 0.3, 0.3]);
        let other = Image::filled(12, 12, [0.3, 0.3, 0.3]);
        assert!((ssim(&flat, &other).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negation_matches_direct_windows() {
        let a = random_image(15, 13, 2);
        let neg = Image::from_data(15, 13, a.data.iter().map(|v| 1.0 - v).collect()).unwrap();
        let got = ssim(&a, &neg).unwrap();
        assert!(got < 1.0);
        assert!((got - reference_ssim(&a, &neg)).abs() < 1e-12);
        let b = random_image(15, 13, 3);
        assert!((ssim(&a, &b).unwrap() - reference_ssim(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn too_small() {
        let a = Image::new(10, 20);
        assert!(matches!(ssim(&a, &a), Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let a = random_image(13, 12, 4);
        let b = random_image(13, 12, 5);
        let (_, g) = ssim_with_grad(&a, &b).unwrap();
        let h = 1e-6;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..40 {
            let i = rng.gen_range(0..a.data.len());
            let mut ap = a.clone();
            ap.data[i] += h;
            let mut am = a.clone();
            am.data[i] -= h;
            let fd = (ssim(&ap, &b).unwrap() - ssim(&am, &b).unwrap()) / (2.0 * h);
            let rel = (fd - g.data[i]).abs() / fd.abs().max(g.data[i].abs()).max(1e-6);
            assert!(rel < 1e-5, "pixel {i}: fd {fd} analytic {}", g.data[i]);
        }
    }
}
