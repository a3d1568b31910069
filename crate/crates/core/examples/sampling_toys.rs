//! Fit 2-D toy densities and draw samples, rendering both as text heatmaps.
//!
//! cargo run --release --example sampling_toys

use lrcdf::datasets::{checkerboard, circles, eight_gaussians, moons};
use lrcdf::{build_grid, fit_admm, inference, materialize_empirical, AdmmConfig, Dataset, GridReduction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SHADES: &[u8] = b" .:-=+*#%@";

fn heatmap(points: &[Vec<f64>], lo: [f64; 2], hi: [f64; 2], size: usize) -> Vec<String> {
    let mut counts = vec![0usize; size * size];
    for p in points {
        let cx = ((p[0] - lo[0]) / (hi[0] - lo[0]) * size as f64).floor();
        let cy = ((p[1] - lo[1]) / (hi[1] - lo[1]) * size as f64).floor();
        if (0.0..size as f64).contains(&cx) && (0.0..size as f64).contains(&cy) {
            counts[(size - 1 - cy as usize) * size + cx as usize] += 1;
        }
    }
    let max = *counts.iter().max().unwrap_or(&1) as f64;
    counts
        .chunks(size)
        .map(|row| {
            row.iter()
                .map(|&c| SHADES[((c as f64 / max) * (SHADES.len() - 1) as f64).round() as usize] as char)
                .collect()
        })
        .collect()
}

fn main() -> lrcdf::Result<()> {
    type Generator = fn(usize, &mut ChaCha8Rng) -> Vec<Vec<f64>>;
    let toys: [(&str, Generator); 4] = [
        ("moons", |n, r| moons(n, r)),
        ("circles", |n, r| circles(n, r)),
        ("checkerboard", |n, r| checkerboard(n, r)),
        ("eight gaussians", |n, r| eight_gaussians(n, r)),
    ];
    for (name, generate) in toys {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let train = generate(5000, &mut rng);
        let data = Dataset::continuous(train.clone())?;
        let grid = build_grid(&data, &[30, 30], GridReduction::Full)?;
        let fit = fit_admm(&materialize_empirical(&data, &grid, 1 << 20)?, &AdmmConfig::with_rank(10), None)?;
        let samples = inference::sample(&fit.model, 20_000, &mut rng);

        let lo = [0, 1].map(|d| train.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min));
        let hi = [0, 1].map(|d| train.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max));
        println!("{name}: training data | model samples");
        for (a, b) in heatmap(&train, lo, hi, 32).iter().zip(heatmap(&samples, lo, hi, 32)) {
            println!("  {a} | {b}");
        }
        println!();
    }
    Ok(())
}
