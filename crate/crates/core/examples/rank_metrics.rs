//! Score a ranking against ground truth with P@k, AP, R-precision,
//! reciprocal rank and NDCG.

use std::collections::{HashMap, HashSet};

use newsrank::rankeval::{
    average_precision, mean_over_queries, ndcg_at_k, p_at_k, r_precision, reciprocal_rank, RelevanceJudgments,
};
use newsrank::ranking::{RankKind, RankedList};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let ranking = RankedList::from_order(["d1", "d2", "d3", "d4", "d5"], RankKind::Official)?;

    // Binary judgments: d1 and d3 are relevant.
    let relevant: HashSet<String> = ["d1", "d3"].iter().map(|s| s.to_string()).collect();
    let binary = RelevanceJudgments::new(relevant.clone(), HashMap::new())?;
    println!("P@3 = {:.4}", p_at_k(&ranking, &binary, 3)?);
    println!("AP  = {:.4}", average_precision(&ranking, &binary).unwrap());
    println!("RP  = {:.4}", r_precision(&ranking, &binary).unwrap());
    println!("RR  = {:.4}", reciprocal_rank(&ranking, &binary));

    // Graded judgments for NDCG: grades 3, 2, 3, 0, 1 down the list.
    let grades: HashMap<String, u8> = [("d1", 3), ("d2", 2), ("d3", 3), ("d5", 1)]
        .iter()
        .map(|(id, g)| (id.to_string(), *g))
        .collect();
    let graded = RelevanceJudgments::new(grades.keys().cloned().collect(), grades)?;
    println!("NDCG@5 = {:.4}", ndcg_at_k(&ranking, &graded, 5)?.unwrap());

    // Queries without relevant items are dropped from the mean, not zeroed.
    let mrr = mean_over_queries([Some(1.0), Some(0.25), None]);
    println!("MRR over {} defined queries ({} dropped) = {:.4}", mrr.n_defined, mrr.n_dropped, mrr.value.unwrap());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
