//! Find the rare, highly shared items of a training set and rebalance it
//! with under-sampling and SMOTE for regression.

use newsrank::corpus::{generate_synthetic, GenParams};
use newsrank::features::{build_vocabulary, featurize, Lexicon, DEFAULT_MAX_TERMS};
use newsrank::relevance::{build_relevance, partition};
use newsrank::resample::{resample, ResampleParams, Strategy};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(3, 1500, 96, &GenParams::default())?;
    let items = corpus.known_items_by_time();
    let vocab = build_vocabulary(items.iter().copied(), DEFAULT_MAX_TERMS)?;
    let data = featurize(items.iter().copied(), &vocab, &Lexicon::default_english())?;

    let rel = build_relevance(data.y())?;
    let p = rel.points();
    println!("relevance rises from {:.0} tweets (phi 0) to {:.0} tweets (phi 1)", p[0].y, p[p.len() - 1].y);
    for y in [10.0, 40.0, 60.0, 80.0, 200.0] {
        println!("  phi({y:>5}) = {:.3}{}", rel.phi(y), if rel.is_rare(y) { "  rare" } else { "" });
    }

    let (rare, normal) = partition(&data, &rel);
    println!("training set: {} rare, {} normal", rare.len(), normal.len());

    for strategy in [Strategy::None, Strategy::Under, Strategy::Smoter] {
        let mut params = ResampleParams::new(strategy);
        params.seed = 11;
        let out = resample(&data, &rel, &params)?;
        let n_rare = out.y().iter().filter(|&&y| rel.is_rare(y)).count();
        let n_syn = out.ids().iter().filter(|id| id.contains("#syn")).count();
        println!("{:7} {:5} cases, {:4.1}% rare, {n_syn} synthetic",
            strategy.label(), out.len(), 100.0 * n_rare as f64 / out.len() as f64);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
