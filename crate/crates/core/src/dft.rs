use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Unnormalized forward DFT: `X_k = Σ_n x_n e^{-i2πkn/N}`.
pub(crate) fn forward(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::<f64>::new()
        .plan_fft_forward(buf.len())
        .process(&mut buf);
    buf
}
