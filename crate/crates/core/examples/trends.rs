//! Runs both frameworks on one generated dataset and prints the accuracy
//! and timing summary used to judge the trend targets.
//!
//! cargo run -p qot-core --release --example trends -- [key=value ...]

use qot_core::config::RunConfig;
use qot_core::pipelines::{self, compare};

fn main() -> qot_core::Result<()> {
    let mut config = RunConfig::default();
    for arg in std::env::args().skip(1) {
        if let Some((k, v)) = arg.split_once('=') {
            config.set(k, v)?;
        }
    }
    config.validate()?;
    let full = pipelines::generate_dataset(&config)?;
    println!("patterns {} classes {:?}", full.len(), full.class_histogram());
    let pipeline = config.pipeline(&full.provenance.config_hash);

    let distributed: Vec<_> = pipelines::run_distributed(&full.partition(), &pipeline, 1)?
        .into_iter()
        .map(|o| o.report)
        .collect();
    print!("{}", pipelines::distributed_table(&distributed));
    let central = pipelines::run_centralized(&full, &pipeline)?.report;
    print!("{}", pipelines::centralized_table(std::slice::from_ref(&central)));
    print!("{}", compare(&[central], &distributed)?.to_text());
    Ok(())
}
