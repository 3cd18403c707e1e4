//! Ontology-guided retrieval against a keyword baseline on a seeded
//! synthetic corpus.
//!
//! Each page is about one node (its ground truth). Its text holds that
//! node's label, each ancestor label with probability 1/2, a few generic
//! noise words, and with probability 1/10 the label of some unrelated node.
//! A page retrieved for a query about node `Q` is *perfect* when its ground
//! truth is `Q` or a descendant of `Q`.
//!
//! - The ontology engine resolves the query to a node via keyword search,
//!   then returns every page whose ground truth lies in that node's subtree.
//! - The keyword engine returns every page whose text contains the query as
//!   a case-insensitive substring.
//!
//! A descendant's page reaches the keyword engine only when its text happens
//! to mention the query, so the keyword engine's perfect set is a subset of
//! the ontology engine's whenever the query resolves to `Q` itself.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::time::{Duration, Instant};

use ontopurify_core::{search, Execution, NodeId, Ontology, Query, SearchOutcome};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const NOISE: &[&str] = &[
    "review",
    "tickets",
    "tonight",
    "season",
    "news",
    "guide",
    "history",
    "photos",
    "schedule",
    "festival",
    "city",
    "local",
    "weekend",
    "interview",
    "archive",
    "booking",
    "listings",
    "gallery",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Page {
    pub about: NodeId,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Ontology,
    Keyword,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ontology => "ontology",
            Self::Keyword => "keyword",
        })
    }
}

/// Cumulative sample after one more query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BenchRecord {
    pub engine: Engine,
    pub elapsed_ms: u64,
    pub perfect_pages: u64,
}

pub fn generate_corpus(ontology: &Ontology, pages: usize, seed: u64) -> Vec<Page> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<NodeId> = ontology.ids().collect();
    (0..pages)
        .map(|_| {
            let about = *ids.choose(&mut rng).expect("ontology is non-empty");
            let path = ontology.path_to(about);
            let mut words: Vec<String> = Vec::new();
            for ancestor in &path[..path.len() - 1] {
                if rng.random_bool(0.5) {
                    words.push(
                        ontology
                            .find_node(*ancestor)
                            .expect("on path")
                            .label
                            .clone(),
                    );
                }
            }
            words.push(ontology.find_node(about).expect("sampled id").label.clone());
            for _ in 0..rng.random_range(2..=5) {
                words.push((*NOISE.choose(&mut rng).expect("non-empty")).to_string());
            }
            if rng.random_bool(0.1) {
                let other = *ids.choose(&mut rng).expect("non-empty");
                words.push(ontology.find_node(other).expect("sampled id").label.clone());
            }
            // shuffle so position carries no signal
            for i in (1..words.len()).rev() {
                let j = rng.random_range(0..=i);
                words.swap(i, j);
            }
            Page {
                about,
                text: words.join(" "),
            }
        })
        .collect()
}

/// `count` query labels drawn uniformly from the ontology's nodes.
pub fn pick_queries(ontology: &Ontology, count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let ids: Vec<NodeId> = ontology.ids().collect();
    (0..count)
        .map(|_| {
            let id = *ids.choose(&mut rng).expect("ontology is non-empty");
            ontology.find_node(id).expect("sampled id").label.clone()
        })
        .collect()
}

/// Precomputed lookups shared by both engines.
pub struct Workload<'a> {
    ontology: &'a Ontology,
    pages: &'a [Page],
    lowered: Vec<String>,
    by_node: HashMap<NodeId, Vec<usize>>,
}

impl<'a> Workload<'a> {
    pub fn new(ontology: &'a Ontology, pages: &'a [Page]) -> Self {
        let mut by_node: HashMap<NodeId, Vec<usize>> = HashMap::new();
        for (i, page) in pages.iter().enumerate() {
            by_node.entry(page.about).or_default().push(i);
        }
        Self {
            ontology,
            pages,
            lowered: pages.iter().map(|p| p.text.to_lowercase()).collect(),
            by_node,
        }
    }

    /// The node a query is about: the first node with exactly this label.
    fn truth(&self, label: &str) -> Option<NodeId> {
        self.ontology
            .nodes()
            .find(|n| n.label.eq_ignore_ascii_case(label))
            .map(|n| n.id)
    }

    fn subtree_pages(&self, id: NodeId) -> Vec<usize> {
        self.ontology
            .subtree(id)
            .iter()
            .flat_map(|n| self.by_node.get(n).into_iter().flatten().copied())
            .collect()
    }

    fn retrieve(&self, engine: Engine, label: &str) -> Vec<usize> {
        match engine {
            Engine::Ontology => {
                let Ok(query) = Query::new(label, self.ontology.domain()) else {
                    return Vec::new();
                };
                let hit =
                    match search::search_with(self.ontology, None, &query, Execution::Sequential) {
                        Ok(SearchOutcome::Hits(results)) => results
                            .iter()
                            .find(|r| {
                                let node = self.ontology.find_node(r.id).expect("hit exists");
                                node.label.eq_ignore_ascii_case(label)
                            })
                            .or(results.first())
                            .map(|r| r.id),
                        _ => None,
                    };
                hit.map(|id| self.subtree_pages(id)).unwrap_or_default()
            }
            Engine::Keyword => {
                let needle = label.to_lowercase();
                (0..self.pages.len())
                    .filter(|i| self.lowered[*i].contains(&needle))
                    .collect()
            }
        }
    }

    /// Perfect pages among those `engine` retrieves for `label`.
    pub fn perfect(&self, engine: Engine, label: &str) -> u64 {
        let Some(truth) = self.truth(label) else {
            return 0;
        };
        let relevant: HashSet<NodeId> = self.ontology.subtree(truth).into_iter().collect();
        self.retrieve(engine, label)
            .into_iter()
            .filter(|i| relevant.contains(&self.pages[*i].about))
            .count() as u64
    }

    /// Runs every query through `engine` (concurrently when `exec` allows)
    /// and folds the per-query results in query order.
    pub fn run(&self, engine: Engine, queries: &[String], exec: Execution) -> Vec<BenchRecord> {
        let per_query: Vec<(Duration, u64)> = exec.map(queries, |q| {
            let start = Instant::now();
            let perfect = self.perfect(engine, q);
            (start.elapsed(), perfect)
        });
        let mut elapsed = Duration::ZERO;
        let mut perfect_pages = 0;
        per_query
            .into_iter()
            .map(|(d, p)| {
                elapsed += d;
                perfect_pages += p;
                BenchRecord {
                    engine,
                    elapsed_ms: elapsed.as_millis() as u64,
                    perfect_pages,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub pages: usize,
    pub queries: usize,
    pub seed: u64,
    /// Use this label for every query instead of sampling.
    pub query: Option<String>,
    pub exec: Execution,
}

/// Ontology engine samples first, then keyword engine samples.
pub fn run(ontology: &Ontology, config: &BenchConfig) -> Vec<BenchRecord> {
    let pages = generate_corpus(ontology, config.pages, config.seed);
    let queries = match &config.query {
        Some(label) => vec![label.clone(); config.queries],
        None => pick_queries(ontology, config.queries, config.seed),
    };
    let workload = Workload::new(ontology, &pages);
    let mut records = workload.run(Engine::Ontology, &queries, config.exec);
    records.extend(workload.run(Engine::Keyword, &queries, config.exec));
    records
}

pub const CSV_HEADER: &str = "engine,elapsed_ms,perfect_pages";

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{}\n",
            r.engine, r.elapsed_ms, r.perfect_pages
        ));
    }
    out
}

/// Final cumulative perfect-page count of `engine`.
pub fn final_perfect(records: &[BenchRecord], engine: Engine) -> u64 {
    records
        .iter()
        .filter(|r| r.engine == engine)
        .map(|r| r.perfect_pages)
        .next_back()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use ontopurify_core::gen::random_ontology;

    use super::*;

    fn small() -> Ontology {
        random_ontology(&mut ChaCha8Rng::seed_from_u64(5), 60)
    }

    #[test]
    fn corpus_is_seeded() {
        let o = small();
        assert_eq!(generate_corpus(&o, 50, 1), generate_corpus(&o, 50, 1));
        assert_ne!(generate_corpus(&o, 50, 1), generate_corpus(&o, 50, 2));
        for page in generate_corpus(&o, 50, 1) {
            let label = &o.find_node(page.about).unwrap().label;
            assert!(page.text.contains(label.as_str()));
        }
    }

    #[test]
    fn root_query_subsumes_every_page() {
        let o = small();
        let root = o.root_node().unwrap().label.clone();
        let pages = generate_corpus(&o, 40, 3);
        let w = Workload::new(&o, &pages);
        assert_eq!(w.perfect(Engine::Ontology, &root), 40);
        assert!(w.perfect(Engine::Keyword, &root) <= 40);
    }

    #[test]
    fn samples_are_cumulative_and_execution_independent() {
        let o = small();
        let config = BenchConfig {
            pages: 300,
            queries: 20,
            seed: 9,
            query: None,
            exec: Execution::Sequential,
        };
        let seq = run(&o, &config);
        let par = run(
            &o,
            &BenchConfig {
                exec: Execution::Parallel,
                ..config
            },
        );
        let strip = |r: &[BenchRecord]| {
            r.iter()
                .map(|x| (x.engine, x.perfect_pages))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&seq), strip(&par));
        assert_eq!(seq.len(), 40);
        for engine in [Engine::Ontology, Engine::Keyword] {
            let rows: Vec<_> = seq.iter().filter(|r| r.engine == engine).collect();
            assert!(rows
                .windows(2)
                .all(|w| w[0].perfect_pages <= w[1].perfect_pages
                    && w[0].elapsed_ms <= w[1].elapsed_ms));
        }
        assert!(final_perfect(&seq, Engine::Ontology) >= final_perfect(&seq, Engine::Keyword));
    }

    #[test]
    fn csv_layout() {
        let csv = to_csv(&[BenchRecord {
            engine: Engine::Keyword,
            elapsed_ms: 3,
            perfect_pages: 7,
        }]);
        assert_eq!(csv, "engine,elapsed_ms,perfect_pages\nkeyword,3,7\n");
    }
}
