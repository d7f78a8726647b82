//! Correlation of every measurement of the emulated drift sequence with the
//! first one, before and after damage onset.
//!
//! cargo run --release --example sequence_correlation

use gwdetect::config::ExperimentConfig;
use gwdetect::experiment::Experiment;
use gwdetect::sigproc::measurement_correlation;

fn main() -> gwdetect::Result<()> {
    let config = ExperimentConfig::desk_scale();
    let exp = Experiment::new(config.clone())?;
    let raw = exp.sequence()?;
    let traces: Vec<Vec<f64>> = raw
        .iter()
        .map(|s| exp.preprocessor.front_end(s).and_then(|f| f.time_values().map(<[f64]>::to_vec)))
        .collect::<gwdetect::Result<_>>()?;
    let rho = measurement_correlation(&traces)?;
    let s = &config.sequence;
    println!(
        "{} measurements, drift amplitude {}, period {}, damaged from measurement {} on",
        s.length, s.drift_amplitude, s.drift_period, s.onset
    );
    for (i, (r, m)) in rho.iter().zip(&raw).enumerate() {
        let bar = "#".repeat(((r.max(0.0)) * 50.0).round() as usize);
        let label = if m.meta.damaged { "damaged" } else { "undamaged" };
        println!("{:>3} {label:>9} {r:>8.5} {bar}", i + 1);
    }
    Ok(())
}
