//! Pure noise has no factor structure; at a threshold of the usual order
//! the estimator stops with a structured error instead of inventing groups.

use love::model::Dataset;
use love::pipeline::{fit_pipeline, FitConfig};
use love::LoveError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> love::Result<()> {
    let (n, p) = (500, 40);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples = ndarray::Array2::from_shape_simple_fn((n, p), || StandardNormal.sample(&mut rng));
    let data = Dataset::new(samples)?;
    let delta = 2.5 * ((n.max(p) as f64).ln() / n as f64).sqrt();
    let cfg = FitConfig {
        delta: Some(delta),
        ..FitConfig::default()
    };
    match fit_pipeline(&data, &cfg) {
        Err(LoveError::NoPureVariables(msg)) => println!("no structure found: {msg}"),
        Ok(fit) => println!("unexpected fit with K_hat = {}", fit.k_hat()),
        Err(e) => return Err(e),
    }
    Ok(())
}
