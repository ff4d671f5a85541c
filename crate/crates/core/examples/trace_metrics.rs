//! Round-trips a rollout through the line-delimited trace format and derives
//! the metrics table from the parsed trace.

use rollsink::cli::{compute_metrics, trace, write_metrics_csv, ConfigFile};
use rollsink::engine::run;

fn main() -> rollsink::Result<()> {
    let config =
        ConfigFile::load(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/rolling_sink.toml").as_ref())?;
    let original = run(&config.rollout_config()?)?;
    let text = trace::to_string(&original);
    println!("record 8: {}", text.lines().nth(8).unwrap_or(""));

    let parsed = trace::parse(&text)?;
    assert_eq!(parsed, original);
    let names = ["mean_drift", "flicker_proxy", "repetition_score"].map(String::from);
    let series = compute_metrics(&parsed, &names, config.k)?;
    write_metrics_csv(std::io::stdout().lock(), &parsed, &series)
}
