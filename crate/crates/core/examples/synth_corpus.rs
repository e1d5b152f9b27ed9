//! Generate a synthetic news stream, write it as JSON lines and load it back.

use newsrank::corpus::{generate_synthetic, load_corpus, write_corpus, GenParams};
use newsrank::relevance::build_relevance;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(7, 2000, 96, &GenParams::default())?;
    let dir = tempfile::tempdir()?;
    let catalog = dir.path().join("economy.jsonl");
    let snapshots = dir.path().join("economy.snapshots.jsonl");
    write_corpus(&corpus, &catalog, &snapshots)?;

    // The topic label comes from the catalog file name.
    let loaded = load_corpus(&catalog, &snapshots)?;
    assert_eq!(loaded.topic(), "economy");
    assert_eq!(loaded.items().len(), corpus.items().len());

    let summary = loaded.summary();
    println!("{} items, {} snapshots from {} to {}", summary.n_items, summary.n_snapshots,
        summary.first_snapshot.map(|t| t.to_rfc3339()).unwrap_or_default(),
        summary.last_snapshot.map(|t| t.to_rfc3339()).unwrap_or_default());

    let counts: Vec<f64> = loaded.items().iter().filter_map(|i| i.n_tweets_2d).map(|c| c as f64).collect();
    let rel = build_relevance(&counts)?;
    let rare = counts.iter().filter(|&&y| rel.is_rare(y)).count();
    println!("rare items: {rare} of {} ({:.1}%)", counts.len(), 100.0 * rare as f64 / counts.len() as f64);

    let first = &loaded.snapshots()[0];
    println!("first snapshot at {} lists {} items, top: {}", first.ts.to_rfc3339(), first.ranked_ids.len(), first.ranked_ids[0]);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
