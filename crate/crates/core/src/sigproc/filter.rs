//! Butterworth IIR design as cascaded second-order sections, and
//! forward-backward (zero-phase) application.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

/// One biquad, `b0 b1 b2 / 1 a1 a2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    fn response(&self, z_inv: Complex64) -> Complex64 {
        let num = self.b[0] + z_inv * (self.b[1] + z_inv * self.b[2]);
        let den = 1.0 + z_inv * (self.a[0] + z_inv * self.a[1]);
        num / den
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    sections: Vec<Biquad>,
}

impl Sos {
    /// Band-pass from a Butterworth low-pass prototype of `order`; the
    /// resulting filter has order `2 * order`. Edges are in units of the
    /// sampling rate (0 < low < high < 0.5).
    pub fn butter_bandpass(order: usize, low: f64, high: f64) -> Self {
        assert!(order >= 1 && 0.0 < low && low < high && high < 0.5);
        let fs2 = 2.0;
        let w1 = fs2 * (PI * low).tan();
        let w2 = fs2 * (PI * high).tan();
        let w0 = (w1 * w2).sqrt();
        let bw = w2 - w1;

        let mut poles = Vec::with_capacity(2 * order);
        for p in prototype_poles(order) {
            let half = p * (bw / 2.0);
            let disc = (half * half - w0 * w0).sqrt();
            poles.push(half + disc);
            poles.push(half - disc);
        }
        let digital: Vec<Complex64> = poles.iter().map(|&s| bilinear(s, fs2)).collect();
        let sections = pair_poles(&digital)
            .into_iter()
            .map(|(a1, a2)| Biquad {
                b: [1.0, 0.0, -1.0],
                a: [a1, a2],
            })
            .collect();
        let mut sos = Sos { sections };
        let center = 2.0 * (w0 / fs2).atan();
        let g = sos.response_at(center).norm();
        sos.scale(1.0 / g);
        sos
    }

    /// Butterworth low-pass of `order` with cutoff in units of the sampling rate.
    pub fn butter_lowpass(order: usize, cutoff: f64) -> Self {
        assert!(order >= 1 && 0.0 < cutoff && cutoff < 0.5);
        let fs2 = 2.0;
        let wc = fs2 * (PI * cutoff).tan();
        let digital: Vec<Complex64> = prototype_poles(order)
            .into_iter()
            .map(|p| bilinear(p * wc, fs2))
            .collect();
        let sections = pair_poles(&digital)
            .into_iter()
            .map(|(a1, a2)| {
                if a2 == 0.0 {
                    Biquad {
                        b: [1.0, 1.0, 0.0],
                        a: [a1, 0.0],
                    }
                } else {
                    Biquad {
                        b: [1.0, 2.0, 1.0],
                        a: [a1, a2],
                    }
                }
            })
            .collect();
        let mut sos = Sos { sections };
        let g: f64 = sos.sections.iter().map(Biquad::dc_gain).product();
        sos.scale(1.0 / g);
        sos
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    fn scale(&mut self, g: f64) {
        for b in &mut self.sections[0].b {
            *b *= g;
        }
    }

    /// Complex response at angular frequency `omega` (radians per sample).
    pub fn response_at(&self, omega: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -omega);
        self.sections
            .iter()
            .map(|s| s.response(z_inv))
            .fold(Complex64::new(1.0, 0.0), |acc, h| acc * h)
    }

    /// Magnitude response at `freq` in units of the sampling rate.
    pub fn gain_at(&self, freq: f64) -> f64 {
        self.response_at(2.0 * PI * freq).norm()
    }

    /// Steady-state initial conditions for a unit step input.
    fn step_state(&self) -> Vec<[f64; 2]> {
        let mut scale = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let g = s.dc_gain();
                let z2 = s.b[2] - s.a[1] * g;
                let z1 = s.b[1] - s.a[0] * g + z2;
                let zi = [z1 * scale, z2 * scale];
                scale *= g;
                zi
            })
            .collect()
    }

    fn run(&self, x: &mut [f64], zi: &[[f64; 2]], x0: f64) {
        for (s, z) in self.sections.iter().zip(zi) {
            let [b0, b1, b2] = s.b;
            let [a1, a2] = s.a;
            let mut z1 = z[0] * x0;
            let mut z2 = z[1] * x0;
            for v in x.iter_mut() {
                let xi = *v;
                let y = b0 * xi + z1;
                z1 = b1 * xi - a1 * y + z2;
                z2 = b2 * xi - a2 * y;
                *v = y;
            }
        }
    }

    /// Causal filtering from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let zeros = vec![[0.0; 2]; self.sections.len()];
        self.run(&mut y, &zeros, 0.0);
        y
    }

    fn default_padlen(&self) -> usize {
        let zero_b2 = self.sections.iter().filter(|s| s.b[2] == 0.0).count();
        let zero_a2 = self.sections.iter().filter(|s| s.a[1] == 0.0).count();
        3 * (2 * self.sections.len() + 1 - zero_b2.min(zero_a2))
    }

    /// Zero-phase filtering: odd-extension padding, steady-state initial
    /// conditions, forward pass, then backward pass.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = self.default_padlen().min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        let (first, last) = (x[0], x[n - 1]);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

        let zi = self.step_state();
        let x0 = ext[0];
        self.run(&mut ext, &zi, x0);
        ext.reverse();
        let y0 = ext[0];
        self.run(&mut ext, &zi, y0);
        ext.reverse();
        ext.drain(..pad);
        ext.truncate(n);
        ext
    }
}

fn prototype_poles(order: usize) -> Vec<Complex64> {
    (0..order)
        .map(|k| {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect()
}

fn bilinear(s: Complex64, fs2: f64) -> Complex64 {
    (fs2 + s) / (fs2 - s)
}

/// Groups digital poles into denominator coefficient pairs `(a1, a2)`.
/// Complex poles pair with their conjugates; real poles pair with each other,
/// and a lone real pole yields a first-order section (`a2 == 0`).
fn pair_poles(poles: &[Complex64]) -> Vec<(f64, f64)> {
    const EPS: f64 = 1e-12;
    let mut out = Vec::new();
    let mut reals = Vec::new();
    for p in poles {
        if p.im > EPS {
            out.push((-2.0 * p.re, p.norm_sqr()));
        } else if p.im.abs() <= EPS {
            reals.push(p.re);
        }
    }
    for pair in reals.chunks(2) {
        match *pair {
            [r1, r2] => out.push((-(r1 + r2), r1 * r2)),
            [r] => out.push((-r, 0.0)),
            _ => unreachable!(),
        }
    }
    out
}
