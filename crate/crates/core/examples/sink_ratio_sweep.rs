//! Sweeps the sink ratio S/K over the three sink-bearing variants and writes
//! terminal metrics as CSV to stdout.

use rollsink::cli::{cmd_sweep, write_sweep_csv, ConfigFile, SweepSpec};

fn main() -> rollsink::Result<()> {
    let base = ConfigFile::parse(
        r#"
        k = 6
        frame_dim = 8
        record_frames = true

        [denoiser]
        kind = "context-mean"
        innovation_scale = 0.1
        bias = 0.05
        "#,
    )?;
    let spec = SweepSpec {
        ratios: vec![0.0, 17.0, 33.0, 50.0, 67.0, 83.0],
        horizons: vec![200],
        seeds: 2,
        window: None,
    };
    let rows = cmd_sweep(&base, &spec)?;
    write_sweep_csv(std::io::stdout().lock(), &rows)
}
