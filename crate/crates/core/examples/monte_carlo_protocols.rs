//! Run the prediction and ranking protocols over Monte Carlo windows and
//! write the reports.

use newsrank::corpus::{generate_synthetic, GenParams};
use newsrank::harness::{mc_windows, run_protocol, write_report, ProtocolKind, ProtocolSpec};
use newsrank::learners::{ForestParams, LearnerKind, LearnerSpec};

fn small_forest() -> LearnerSpec {
    LearnerSpec {
        kind: LearnerKind::RandomForest(ForestParams { n_trees: 20, ..Default::default() }),
        seed: 0,
    }
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(1, 3000, 600, &GenParams::default())?;
    let out = tempfile::tempdir()?;

    for kind in [ProtocolKind::PredEval, ProtocolKind::StandaloneRank, ProtocolKind::RealworldRank] {
        let spec = ProtocolSpec::new(kind, 9).with_reps(3).with_learners(vec![LearnerSpec::linear(), small_forest()]);
        let n_cases = if kind.is_ranking() { corpus.snapshots().len() } else { corpus.known_items_by_time().len() };
        let w = &mc_windows(n_cases, &spec)?[0];
        println!("{kind}: first window trains on cases {:?} and tests on {:?}", w.train, w.test);

        let report = run_protocol(&corpus, &spec)?;
        for combo in &report.results {
            if let Some(r) = &combo.regression {
                println!("  {:10} F1 {:.3}", combo.name(), r.aggregate.f1.value.unwrap_or(f64::NAN));
            }
            if let Some(r) = &combo.ranking {
                let a = &r.aggregate;
                println!("  {:10} MAP {:.3}  NDCG@10 {:.3}  MRR {:.3}", combo.name(),
                    a.map.value.unwrap_or(f64::NAN), a.ndcg_at_10.value.unwrap_or(f64::NAN),
                    a.mrr.value.unwrap_or(f64::NAN));
            }
        }
        let files = write_report(&report, &out.path().join(kind.label()))?;
        println!("  wrote {}", files.summary_csv.file_name().unwrap().to_string_lossy());
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
