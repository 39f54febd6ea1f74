//! Short-time Fourier transforms: framed magnitude spectra for features and a
//! centred weighted-overlap-add pair for mask-based transforms.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::frames::{FrameGrid, WindowKind};
use crate::scalar::Sample;

/// One-sided magnitude spectrum per frame of `grid`.
pub fn magnitude_frames<T: Sample>(samples: &[T], grid: &FrameGrid) -> Vec<Vec<T>> {
    let n = grid.frame_length;
    let window: Vec<T> = grid.window.coefficients(n);
    let fft = FftPlanner::<T>::new().plan_fft_forward(n);
    let mut frame = vec![T::zero(); n];
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    (0..grid.frame_count(samples.len()))
        .map(|j| {
            grid.fill_frame(samples, j, &mut frame);
            for ((b, &x), &w) in buf.iter_mut().zip(&frame).zip(&window) {
                *b = Complex::new(x * w, T::zero());
            }
            fft.process(&mut buf);
            buf[..n / 2 + 1].iter().map(|c| c.norm()).collect()
        })
        .collect()
}

/// Bin centre frequencies for an `n`-point transform.
pub fn bin_frequencies(n: usize, sample_rate: u32) -> Vec<f64> {
    (0..n / 2 + 1)
        .map(|k| k as f64 * sample_rate as f64 / n as f64)
        .collect()
}

/// Centred complex STFT: the signal is zero-padded by `n/2` on both sides so
/// frame `j` is centred on sample `j * hop`.
pub struct CentredStft<T: Sample> {
    pub n: usize,
    pub hop: usize,
    pub len: usize,
    pub frames: Vec<Vec<Complex<T>>>,
}

impl<T: Sample> CentredStft<T> {
    pub fn analyze(samples: &[T], n: usize, hop: usize) -> Self {
        let pad = n / 2;
        let len = samples.len();
        let frame_count = len / hop + 1;
        let window: Vec<T> = WindowKind::Hann.coefficients(n);
        let fft = FftPlanner::<T>::new().plan_fft_forward(n);
        let frames = (0..frame_count)
            .map(|j| {
                let mut buf: Vec<Complex<T>> = (0..n)
                    .map(|i| {
                        let pos = (j * hop + i) as isize - pad as isize;
                        let x = if pos >= 0 && (pos as usize) < len {
                            samples[pos as usize]
                        } else {
                            T::zero()
                        };
                        Complex::new(x * window[i], T::zero())
                    })
                    .collect();
                fft.process(&mut buf);
                buf.truncate(n / 2 + 1);
                buf
            })
            .collect();
        Self {
            n,
            hop,
            len,
            frames,
        }
    }

    /// Inverse with Hann synthesis window and squared-window normalisation.
    pub fn synthesize(&self) -> Vec<T> {
        let n = self.n;
        let pad = n / 2;
        let ifft = FftPlanner::<T>::new().plan_fft_inverse(n);
        let window: Vec<T> = WindowKind::Hann.coefficients(n);
        let total = self.len + 2 * pad + n;
        let mut acc = vec![T::zero(); total];
        let mut norm = vec![T::zero(); total];
        let scale = T::one() / T::from_usize_lossy(n);
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
        for (j, half) in self.frames.iter().enumerate() {
            for k in 0..n {
                buf[k] = if k <= n / 2 {
                    half[k]
                } else {
                    half[n - k].conj()
                };
            }
            ifft.process(&mut buf);
            let start = j * self.hop;
            for i in 0..n {
                acc[start + i] = acc[start + i] + buf[i].re * scale * window[i];
                norm[start + i] = norm[start + i] + window[i] * window[i];
            }
        }
        let eps = T::lit(1e-10);
        (0..self.len)
            .map(|i| {
                let w = norm[i + pad];
                if w > eps {
                    acc[i + pad] / w
                } else {
                    T::zero()
                }
            })
            .collect()
    }
}
