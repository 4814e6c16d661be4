use std::cell::RefCell;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Smallest `2^a 3^b 5^c` not below `n`; such lengths keep the FFT fast
/// without padding to the next power of two.
fn fft_len(n: usize) -> usize {
    let mut m = n.max(2);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

fn unit_rms(mut x: Vec<f64>) -> Vec<f64> {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    if rms > 0.0 {
        x.iter_mut().for_each(|v| *v /= rms);
    }
    x
}

/// Inverse FFT of independent complex Gaussian bins weighted by the
/// (symmetric) `shape`; the real and imaginary parts of the result are two
/// independent real processes with that spectrum.
fn shaped_complex<R: Rng, F: Fn(f64) -> f64>(n: usize, fs: f64, shape: F, rng: &mut R, hermitian: bool) -> Vec<Complex64> {
    let len = fft_len(n);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); len];
    for k in 1..len.div_ceil(2) {
        let a = shape(k as f64 * fs / len as f64);
        let z = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let w = if hermitian {
            z.conj()
        } else {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        };
        if a != 0.0 {
            spectrum[k] = z * a;
            spectrum[len - k] = w * a;
        }
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len));
    fft.process(&mut spectrum);
    spectrum.truncate(n);
    spectrum
}

/// Real Gaussian noise of length `n` whose amplitude spectrum follows
/// `shape(freq_hz)`, rescaled to unit RMS. Returns zeros when the shape
/// passes no bins.
pub fn shaped_noise<R: Rng, F: Fn(f64) -> f64>(n: usize, fs: f64, shape: F, rng: &mut R) -> Vec<f64> {
    unit_rms(shaped_complex(n, fs, shape, rng, true).iter().map(|c| c.re).collect())
}

/// Two independent draws of [`shaped_noise`] from one transform.
pub fn shaped_noise_pair<R: Rng, F: Fn(f64) -> f64>(n: usize, fs: f64, shape: F, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let z = shaped_complex(n, fs, shape, rng, false);
    (unit_rms(z.iter().map(|c| c.re).collect()), unit_rms(z.iter().map(|c| c.im).collect()))
}

/// Spectral amplitude for `1/f^exponent` power above a high-pass edge.
pub fn pink_shape(exponent: f64, highpass_hz: f64) -> impl Fn(f64) -> f64 {
    move |f| if f < highpass_hz { 0.0 } else { f.powf(-exponent / 2.0) }
}

/// Flat spectrum inside `[low_hz, high_hz]`.
pub fn band_shape(low_hz: f64, high_hz: f64) -> impl Fn(f64) -> f64 {
    move |f| if f >= low_hz && f <= high_hz { 1.0 } else { 0.0 }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn fft_lengths_are_5_smooth() {
        assert_eq!(fft_len(1), 2);
        assert_eq!(fft_len(7), 8);
        assert_eq!(fft_len(398_336), 400_000);
        assert_eq!(fft_len(1024), 1024);
    }

    #[test]
    fn pair_halves_are_uncorrelated_and_band_limited() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1 << 15;
        let (a, b) = shaped_noise_pair(n, 512.0, band_shape(8.0, 12.0), &mut rng);
        let r: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n as f64;
        assert!(r.abs() < 0.05, "r = {r}");
        for x in [&a, &b] {
            let ms = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
            assert!((ms - 1.0).abs() < 1e-12);
            let mut spectrum: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            FftPlanner::new().plan_fft_forward(n).process(&mut spectrum);
            let total: f64 = spectrum.iter().map(|c| c.norm_sqr()).sum();
            let inside: f64 = (1..n / 2)
                .filter(|&k| (7.5..=12.5).contains(&(k as f64 * 512.0 / n as f64)))
                .map(|k| 2.0 * spectrum[k].norm_sqr())
                .sum();
            assert!(inside / total > 0.95, "in-band share {}", inside / total);
        }
    }
}
