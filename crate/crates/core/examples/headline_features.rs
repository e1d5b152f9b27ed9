//! Turn headlines into term-frequency and sentiment features.

use chrono::{TimeZone, Utc};
use newsrank::corpus::NewsItem;
use newsrank::features::{build_vocabulary, featurize, sentiment, terms, Lexicon};

fn item(id: &str, title: &str, headline: &str, hour: u32, count: u64) -> NewsItem {
    NewsItem {
        id: id.into(),
        title: title.into(),
        headline: headline.into(),
        pub_ts: Utc.with_ymd_and_hms(2014, 3, 1, hour, 0, 0).unwrap(),
        n_tweets_2d: Some(count),
    }
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let lexicon = Lexicon::default_english();
    for text in ["Markets rally on strong growth", "Not a good deal for savers", "Never good news"] {
        println!("{text:32} sentiment {:+.3}", sentiment(text, &lexicon));
    }

    let items = [
        item("a", "Central bank holds rates", "Rates stay unchanged as inflation eases", 8, 40),
        item("b", "Markets rally", "Stocks rally after strong jobs report", 9, 310),
        item("c", "Bank fines", "Regulator fines bank over rate rigging", 10, 55),
        item("d", "Jobs report", "Jobs growth beats forecasts, rates in focus", 11, 120),
    ];
    println!("terms of b: {:?}", terms(&items[1].headline).collect::<Vec<_>>());

    // Vocabulary comes from training items only; here all four.
    let vocab = build_vocabulary(items.iter(), 8)?;
    println!("vocabulary: {:?}", vocab.terms());

    let data = featurize(items.iter(), &vocab, &lexicon)?;
    let names = data.schema().feature_names();
    for (id, row) in data.ids().iter().zip(data.rows()) {
        let nonzero: Vec<String> = names.iter().zip(row.values())
            .filter(|(_, v)| **v != 0.0)
            .map(|(n, v)| format!("{n}={v:.2}"))
            .collect();
        println!("{id}: {}", nonzero.join(" "));
    }
    println!("schema fingerprint {}", data.schema().fingerprint());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
