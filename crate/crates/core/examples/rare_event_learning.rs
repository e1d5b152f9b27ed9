//! Train linear and random-forest regressors with and without resampling
//! and score them on rare-event precision, recall and F1.

use newsrank::corpus::{generate_synthetic, GenParams};
use newsrank::features::{build_vocabulary, featurize, Lexicon, DEFAULT_MAX_TERMS};
use newsrank::learners::{fit, ForestParams, LearnerKind, LearnerSpec};
use newsrank::regeval::utility_prf;
use newsrank::relevance::build_relevance;
use newsrank::resample::{resample, ResampleParams, Strategy};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(5, 3000, 96, &GenParams::default())?;
    let items = corpus.known_items_by_time();
    let (train_items, test_items) = items.split_at(items.len() * 2 / 3);

    // Everything learned from data (vocabulary, relevance) sees training items only.
    let lexicon = Lexicon::default_english();
    let vocab = build_vocabulary(train_items.iter().copied(), DEFAULT_MAX_TERMS)?;
    let train = featurize(train_items.iter().copied(), &vocab, &lexicon)?;
    let test = featurize(test_items.iter().copied(), &vocab, &lexicon)?;
    let rel = build_relevance(train.y())?;

    let forest = LearnerSpec {
        kind: LearnerKind::RandomForest(ForestParams { n_trees: 40, ..Default::default() }),
        seed: 1,
    };
    println!("{:10} {:>9} {:>9} {:>9}", "system", "precision", "recall", "F1");
    for spec in [LearnerSpec::linear(), forest] {
        for strategy in [Strategy::None, Strategy::Under, Strategy::Smoter] {
            let data = resample(&train, &rel, &ResampleParams::new(strategy))?;
            let model = fit(&spec, &data)?;
            let pred = model.predict_dataset(&test)?;
            let s = utility_prf(test.y(), &pred, &rel)?;
            let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
            println!("{:10} {:>9} {:>9} {:>9}",
                format!("{}{}", spec.label(), strategy.label().to_ascii_uppercase()),
                show(s.precision), show(s.recall), show(s.f1));
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
