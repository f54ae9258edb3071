//! Seeded random sampling utilities with thread-count-independent results.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// The RNG used everywhere; cheap to seed per chunk.
pub type SeededRng = ChaCha8Rng;

/// Build an RNG from a scenario seed and a stream index, so independent
/// sampling tasks inside one run never share a stream.
pub fn rng_for(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One standard normal variate via Box–Muller (avoids an extra distribution
/// dependency; the discarded second variate is irrelevant at our sample
/// counts).
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.gen::<f64>();
        if u1 > 1e-300 {
            let u2: f64 = rng.gen::<f64>();
            let r = (-2.0 * u1.ln()).sqrt();
            return r * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

/// Uniform point on the unit sphere S^{dim−1} ⊂ ℝ^dim (Gaussian direction).
pub fn unit_sphere<R: Rng>(rng: &mut R, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| standard_normal(rng));
        let n = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}

/// Mean and standard error of the mean for a sample vector.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Chunk size used by [`par_samples`]; chunk boundaries (not thread count)
/// determine the RNG streams, so results are bit-stable under `--threads`.
const CHUNK: u64 = 1024;

/// Draw `n` samples of `f` in parallel, deterministically.
///
/// Sample `i` is produced from an RNG seeded by `(seed, stream_base + i/CHUNK)`
/// and the chunks are concatenated in index order, so the output is identical
/// for any rayon pool size.
pub fn par_samples<T, F>(seed: u64, stream_base: u64, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SeededRng) -> T + Sync,
{
    let n_chunks = (n as u64).div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_for(seed, stream_base.wrapping_add(1 + c));
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n as u64);
            (lo..hi).map(|_| f(&mut rng)).collect::<Vec<T>>()
        })
        .flatten()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_sphere_points_have_unit_norm() {
        let mut rng = rng_for(7, 0);
        for dim in 2..6 {
            let u = unit_sphere(&mut rng, dim);
            assert_abs_diff_eq!(u.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn par_samples_deterministic_across_pool_sizes() {
        let f = |rng: &mut SeededRng| rng.gen::<f64>();
        let a = par_samples(42, 5, 3000, f);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| par_samples(42, 5, 3000, f));
        assert_eq!(a, b);
    }

    #[test]
    fn mean_stderr_basics() {
        let (m, s) = mean_stderr(&[1.0, 1.0, 1.0]);
        assert_abs_diff_eq!(m, 1.0);
        assert_abs_diff_eq!(s, 0.0);
        let xs: Vec<f64> = (0..10_000).map(|i| (i % 2) as f64).collect();
        let (m, s) = mean_stderr(&xs);
        assert_abs_diff_eq!(m, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s, 0.005, epsilon = 1e-3);
    }

    #[test]
    fn normal_moments_are_sane() {
        let mut rng = rng_for(3, 1);
        let xs: Vec<f64> = (0..200_000).map(|_| standard_normal(&mut rng)).collect();
        let (m, _) = mean_stderr(&xs);
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!(m.abs() < 0.01, "mean {m}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
}
