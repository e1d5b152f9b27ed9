//! Compare predicted, fused and official rankings slice by slice against
//! the recency-decayed ground truth.

use newsrank::corpus::{generate_synthetic, GenParams};
use newsrank::harness::{run_protocol, ProtocolKind, ProtocolSpec};
use newsrank::learners::{ForestParams, LearnerKind, LearnerSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(4, 3000, 700, &GenParams::default())?;
    let spec = ProtocolSpec::new(ProtocolKind::Augmentation, 4).with_reps(4).with_learners(vec![LearnerSpec {
        kind: LearnerKind::RandomForest(ForestParams { n_trees: 30, ..Default::default() }),
        seed: 0,
    }]);
    let report = run_protocol(&corpus, &spec)?;
    let aug = report.augmentation.as_ref().expect("augmentation results");

    print!("{:14}", "system");
    for t in 1..=aug.horizon {
        print!(" {:>5}", format!("t{t}"));
    }
    println!("  mean");
    for s in &aug.systems {
        print!("{:14}", s.system);
        for m in &s.per_slice {
            print!(" {:>5}", m.value.map_or("-".into(), |v| format!("{v:.2}")));
        }
        println!("  {:.3}", s.mean_f1.unwrap_or(f64::NAN));
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
