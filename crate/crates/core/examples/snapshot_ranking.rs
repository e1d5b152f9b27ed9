//! Rank one official snapshot with a trained model, fuse the result with
//! the official order and apply the recency decay.

use newsrank::corpus::{count_window, generate_synthetic, GenParams};
use newsrank::features::{build_vocabulary, featurize, Lexicon, DEFAULT_MAX_TERMS};
use newsrank::learners::{fit, ForestParams, LearnerKind, LearnerSpec};
use newsrank::rankeval::QueryScores;
use newsrank::ranking::{
    apply_decay, baseline_time, build_pool, fuse, ground_truth_rank, official_rank, predicted_scores,
    rank_by_score, write_rank_csv, Fusion, ModelBundle, PredictMode, RankKind, RankedList, FINAL_SLICE,
};
use newsrank::relevance::build_relevance;
use newsrank::resample::{resample, ResampleParams, Strategy};

fn show(name: &str, list: &RankedList) {
    let top: Vec<&str> = list.top(5).collect();
    println!("{name:13} {}", top.join(" "));
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(2, 3000, 400, &GenParams::default())?;
    let snapshot = &corpus.snapshots()[300];
    let now = snapshot.ts;

    // Train on items whose two-day count was complete at query time.
    let train_items: Vec<_> = corpus
        .known_items_by_time()
        .into_iter()
        .filter(|it| it.pub_ts + count_window() <= now)
        .collect();
    let lexicon = Lexicon::default_english();
    let vocabulary = build_vocabulary(train_items.iter().copied(), DEFAULT_MAX_TERMS)?;
    let train = featurize(train_items.iter().copied(), &vocabulary, &lexicon)?;
    let rel = build_relevance(train.y())?;
    let spec = LearnerSpec {
        kind: LearnerKind::RandomForest(ForestParams { n_trees: 40, ..Default::default() }),
        seed: 4,
    };
    let model = fit(&spec, &resample(&train, &rel, &ResampleParams::new(Strategy::Under))?)?;
    let bundle = ModelBundle { vocabulary, lexicon, model };

    let pool = build_pool(snapshot, &corpus, now)?;
    println!("pool at {}: {} old, {} new", now.to_rfc3339(), pool.old_ids().count(), pool.new_ids().count());

    let truth = ground_truth_rank(&pool, &corpus)?;
    let scores = predicted_scores(&pool, &corpus, &bundle, PredictMode::Hybrid)?;
    let predicted = rank_by_score(&corpus, scores.clone(), RankKind::Predicted)?;
    let official = official_rank(&pool);
    let agreement = fuse(&predicted, &official, Fusion::Agreement)?;
    let poll = fuse(&predicted, &official, Fusion::Poll)?;
    let by_age = baseline_time(&pool, &corpus)?;
    for (name, list) in [
        ("ground truth", &truth),
        ("predicted", &predicted),
        ("official", &official),
        ("agreement", &agreement),
        ("poll", &poll),
        ("by age", &by_age),
    ] {
        show(name, list);
    }

    // Recent items keep most of their predicted popularity.
    let decayed = rank_by_score(&corpus, apply_decay(&corpus, &scores, now, FINAL_SLICE)?, RankKind::Predicted)?;
    println!("decayed       {}", decayed.top(5).collect::<Vec<_>>().join(" "));

    for (name, list) in [("predicted", &predicted), ("official", &official), ("agreement", &agreement)] {
        let q = QueryScores::score(now.to_rfc3339(), list, &truth)?;
        println!("{name:10} AP {:.3}  NDCG@10 {:.3}  F1(top10) {:.3}",
            q.ap.unwrap_or(f64::NAN), q.ndcg.unwrap_or(f64::NAN), q.f1_top10.unwrap_or(f64::NAN));
    }

    let mut csv = Vec::new();
    write_rank_csv(&mut csv, &agreement.restrict(|id| agreement.positions()[id] <= 3))?;
    print!("{}", String::from_utf8(csv)?);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
