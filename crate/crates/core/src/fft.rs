//! Discrete Fourier transforms of arbitrary length.
//!
//! Power-of-two lengths use an iterative radix-2 Cooley-Tukey kernel. Every
//! other length goes through Bluestein's chirp-z reformulation on a padded
//! power-of-two convolution, which is what the odd, zero-centred frequency
//! grids of [`crate::biphoton`] need.
//!
//! Transforms are unnormalised: `forward` uses `exp(-2πi jk/n)`, `inverse`
//! uses `exp(+2πi jk/n)`, and `inverse(forward(x)) == n * x`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

/// A reusable transform plan for one length.
#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Trivial,
    Radix2(Radix2),
    Bluestein(Bluestein),
}

impl Fft {
    pub fn new(len: usize) -> Self {
        let kind = if len <= 1 {
            Kind::Trivial
        } else if len.is_power_of_two() {
            Kind::Radix2(Radix2::new(len))
        } else {
            Kind::Bluestein(Bluestein::new(len))
        };
        Fft { len, kind }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform. Panics if `buf.len() != self.len()`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        match &self.kind {
            Kind::Trivial => {}
            Kind::Radix2(r) => r.process(buf, false),
            Kind::Bluestein(b) => b.process(buf),
        }
    }

    /// In-place inverse transform (unnormalised).
    pub fn inverse(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        match &self.kind {
            Kind::Trivial => {}
            Kind::Radix2(r) => r.process(buf, true),
            Kind::Bluestein(b) => {
                // inverse(x) = conj(forward(conj(x)))
                buf.iter_mut().for_each(|z| *z = z.conj());
                b.process(buf);
                buf.iter_mut().for_each(|z| *z = z.conj());
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Radix2 {
    len: usize,
    // exp(-2πi k/len) for k < len/2
    twiddles: Vec<Complex64>,
}

impl Radix2 {
    fn new(len: usize) -> Self {
        let twiddles = (0..len / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        Radix2 { len, twiddles }
    }

    fn process(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.len;
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}

#[derive(Debug, Clone)]
struct Bluestein {
    len: usize,
    // exp(-πi k²/len)
    chirp: Vec<Complex64>,
    // forward transform of the conjugate chirp, wrapped onto the padded length
    kernel: Vec<Complex64>,
    inner: Radix2,
}

impl Bluestein {
    fn new(len: usize) -> Self {
        let padded = (2 * len - 1).next_power_of_two();
        let inner = Radix2::new(padded);
        let modulus = 2 * len as u128;
        let chirp: Vec<Complex64> = (0..len)
            .map(|k| {
                // reduce k² mod 2n before scaling so the phase stays accurate
                let k2 = (k as u128 * k as u128) % modulus;
                let a = -PI * k2 as f64 / len as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        let mut kernel = alloc::vec![Complex64::new(0.0, 0.0); padded];
        kernel[0] = chirp[0].conj();
        for k in 1..len {
            kernel[k] = chirp[k].conj();
            kernel[padded - k] = chirp[k].conj();
        }
        inner.process(&mut kernel, false);
        Bluestein {
            len,
            chirp,
            kernel,
            inner,
        }
    }

    fn process(&self, buf: &mut [Complex64]) {
        let padded = self.kernel.len();
        let mut work = alloc::vec![Complex64::new(0.0, 0.0); padded];
        for (w, (x, c)) in work.iter_mut().zip(buf.iter().zip(&self.chirp)) {
            *w = x * c;
        }
        self.inner.process(&mut work, false);
        for (w, k) in work.iter_mut().zip(&self.kernel) {
            *w *= k;
        }
        self.inner.process(&mut work, true);
        let scale = 1.0 / padded as f64;
        for (k, out) in buf.iter_mut().enumerate().take(self.len) {
            *out = work[k] * self.chirp[k] * scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn naive(x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let a = sign * 2.0 * PI * ((j * k) % n) as f64 / n as f64;
                        v * Complex64::new(libm::cos(a), libm::sin(a))
                    })
                    .sum()
            })
            .collect()
    }

    fn signal(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| {
                let t = i as f64;
                Complex64::new(libm::sin(0.37 * t) + 0.1 * t, libm::cos(1.3 * t * t / n as f64))
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for n in [1usize, 2, 3, 5, 8, 17, 64, 97, 129, 255] {
            let x = signal(n);
            let plan = Fft::new(n);
            let mut f = x.clone();
            plan.forward(&mut f);
            let mut g = x.clone();
            plan.inverse(&mut g);
            let nf = naive(&x, -1.0);
            let ng = naive(&x, 1.0);
            let scale = x.iter().map(|z| z.norm()).sum::<f64>();
            for k in 0..n {
                assert!((f[k] - nf[k]).norm() < 1e-11 * scale, "n={n} k={k}");
                assert!((g[k] - ng[k]).norm() < 1e-11 * scale, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn round_trip_odd_length() {
        let n = 4097;
        let x = signal(n);
        let plan = Fft::new(n);
        let mut y = x.clone();
        plan.forward(&mut y);
        plan.inverse(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b / n as f64).norm() < 1e-10);
        }
    }
}
