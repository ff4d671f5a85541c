//! The four-step denoising loop on a single block, with the analytic Gaussian
//! denoiser conditioned on one preceding frame.

use rollsink::denoisers::{AnalyticGaussianDenoiser, Context, ContextFrame, PosteriorMode};
use rollsink::sampler::{sample_block, sigma, NoiseSource, TimestepSchedule};
use rollsink::BlockShape;

fn main() -> rollsink::Result<()> {
    let schedule = TimestepSchedule::uniform(4)?;
    let levels: Vec<String> = schedule
        .steps()
        .iter()
        .map(|&t| format!("{t} (sigma {})", sigma(t)))
        .collect();
    println!("timesteps: {}", levels.join(" -> "));

    let shape = BlockShape::new(3, 1);
    let context = Context::new(
        vec![ContextFrame {
            position: 2,
            values: vec![1.5],
        }],
        3,
    );
    for mode in [PosteriorMode::Mean, PosteriorMode::Sample] {
        let denoiser = AnalyticGaussianDenoiser::new(0.9, mode)?;
        let mut noise = NoiseSource::new(1);
        let n = 2000;
        let mut sums = [0.0; 3];
        for _ in 0..n {
            let block = sample_block(&denoiser, &schedule, shape, &context, &mut noise)?;
            for (acc, v) in sums.iter_mut().zip(block.as_slice()) {
                *acc += v;
            }
        }
        let means: Vec<String> = sums.iter().map(|s| format!("{:.3}", s / n as f64)).collect();
        println!(
            "{mode:?}: mean per frame [{}], prior mean [1.350, 1.215, 1.094]",
            means.join(", ")
        );
    }
    Ok(())
}
