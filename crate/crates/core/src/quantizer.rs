//! Uniform scalar quantization with subtractive dither.

use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// `Q_Δ(x) = iΔ` for `iΔ − Δ/2 ≤ x < iΔ + Δ/2`. Returns `(i, iΔ)`.
pub fn quantize_uniform(x: f64, delta: f64) -> Result<(i64, f64)> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::NonFinite(delta));
    }
    let index = (x / delta + 0.5).floor();
    // Guard the cell convention against rounding in the division.
    let mut index = index as i64;
    let lower = index as f64 * delta - delta / 2.0;
    if x < lower {
        index -= 1;
    } else if x >= index as f64 * delta + delta / 2.0 {
        index += 1;
    }
    Ok((index, index as f64 * delta))
}

/// Shared dither sequence: component `i` at step `t` is
/// `ξ_{t,i} ~ U[−Δᵢ/2, Δᵢ/2)`, keyed by `(seed, t, i, stream)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DitherStream {
    rng: CounterRng,
    seed: u64,
    stream: u32,
    step_sizes: Vec<f64>,
    position: u64,
}

impl DitherStream {
    pub fn new(seed: u64, step_sizes: Vec<f64>) -> Self {
        Self::with_stream(seed, 0, step_sizes)
    }

    /// `stream` separates independent sessions (e.g. Monte Carlo trials)
    /// sharing one seed.
    pub fn with_stream(seed: u64, stream: u32, step_sizes: Vec<f64>) -> Self {
        Self {
            rng: CounterRng::new(seed),
            seed,
            stream,
            step_sizes,
            position: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn step_sizes(&self) -> &[f64] {
        &self.step_sizes
    }

    pub fn dim(&self) -> usize {
        self.step_sizes.len()
    }

    /// Dither vector at step `t`, independent of the current position.
    pub fn dither_at(&self, t: u64) -> Vec<f64> {
        self.step_sizes
            .iter()
            .enumerate()
            .map(|(i, &d)| (self.rng.unit(t, i as u32, self.stream) - 0.5) * d)
            .collect()
    }

    /// Dither for the current step; advances the position by one.
    pub fn next_dither(&mut self) -> Vec<f64> {
        let xi = self.dither_at(self.position);
        self.position += 1;
        xi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerOutput {
    /// `kᵢ` with `q̃ᵢ = kᵢ Δᵢ`.
    pub cell_indices: Vec<i64>,
    /// `qᵢ = q̃ᵢ − ξᵢ`.
    pub reconstructed: Vec<f64>,
    /// The dither `ξ` that was applied.
    pub dither: Vec<f64>,
}

/// Decoder-side reconstruction `qᵢ = kᵢΔᵢ − ξᵢ`.
pub fn reconstruct(cells: &[i64], dither: &[f64], steps: &[f64]) -> Vec<f64> {
    cells
        .iter()
        .zip(dither)
        .zip(steps)
        .map(|((&k, &xi), &d)| k as f64 * d - xi)
        .collect()
}

/// Applies `Q_Δᵢ(θᵢ + ξᵢ) − ξᵢ` componentwise with the stream's next dither.
pub fn quantize_dithered(theta: &[f64], dither: &mut DitherStream) -> Result<QuantizerOutput> {
    if theta.len() != dither.dim() {
        return Err(Error::LengthMismatch {
            expected: dither.dim(),
            got: theta.len(),
        });
    }
    let xi = dither.next_dither();
    quantize_with_dither(theta, &xi, dither.step_sizes())
}

/// Same as [`quantize_dithered`] with an explicit dither vector.
pub fn quantize_with_dither(theta: &[f64], xi: &[f64], steps: &[f64]) -> Result<QuantizerOutput> {
    if theta.len() != steps.len() || xi.len() != steps.len() {
        return Err(Error::LengthMismatch {
            expected: steps.len(),
            got: theta.len().min(xi.len()),
        });
    }
    let cell_indices = theta
        .iter()
        .zip(xi)
        .zip(steps)
        .map(|((&th, &x), &d)| quantize_uniform(th + x, d).map(|(k, _)| k))
        .collect::<Result<Vec<_>>>()?;
    let reconstructed = reconstruct(&cell_indices, xi, steps);
    Ok(QuantizerOutput {
        cell_indices,
        reconstructed,
        dither: xi.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_boundaries() {
        assert_eq!(quantize_uniform(0.49, 1.0).unwrap(), (0, 0.0));
        assert_eq!(quantize_uniform(0.5, 1.0).unwrap(), (1, 1.0));
        assert_eq!(quantize_uniform(-0.5, 1.0).unwrap(), (0, 0.0));
        assert_eq!(quantize_uniform(-0.5000001, 1.0).unwrap(), (-1, -1.0));
        assert_eq!(quantize_uniform(3.0, 2.0).unwrap(), (2, 4.0));
        assert!(matches!(
            quantize_uniform(f64::NAN, 1.0),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn dithered_examples() {
        let out = quantize_with_dither(&[0.4], &[0.3], &[1.0]).unwrap();
        assert_eq!(out.cell_indices, vec![1]);
        assert!((out.reconstructed[0] - 0.7).abs() < 1e-15);

        let out = quantize_with_dither(&[0.0], &[0.0], &[1.0]).unwrap();
        assert_eq!(out.cell_indices, vec![0]);
        assert_eq!(out.reconstructed, vec![0.0]);
    }

    #[test]
    fn length_mismatch() {
        let mut d = DitherStream::new(1, vec![1.0, 2.0]);
        assert!(matches!(
            quantize_dithered(&[0.0], &mut d),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn stream_advances_once_per_call() {
        let mut d = DitherStream::new(5, vec![1.0, 0.5]);
        let expect = d.dither_at(0);
        let out = quantize_dithered(&[0.1, -0.2], &mut d).unwrap();
        assert_eq!(out.dither, expect);
        assert_eq!(d.position(), 1);
        for (x, s) in out.dither.iter().zip([1.0, 0.5]) {
            assert!(*x >= -s / 2.0 && *x < s / 2.0);
        }
    }

    #[test]
    fn error_bounded_by_half_step() {
        let mut d = DitherStream::new(11, vec![0.3]);
        for k in 0..10_000 {
            let th = (k as f64 * 0.37).sin() * 5.0;
            let out = quantize_dithered(&[th], &mut d).unwrap();
            assert!((out.reconstructed[0] - th).abs() <= 0.15 + 1e-12);
        }
    }
}
