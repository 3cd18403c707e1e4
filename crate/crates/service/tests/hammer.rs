//! One writer inserting `Probe k` nodes while readers search for "probe".
//! At revision r exactly r probes exist, so every response must carry
//! exactly `revision` hits.

mod common;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;

use common::{theatre, Client, Harness, TOKEN};

#[test]
fn readers_never_see_torn_snapshots() {
    let h = Harness::new(theatre(), None, true);
    let done = Arc::new(AtomicBool::new(false));
    let readers: Vec<_> = (0..8)
        .map(|_| {
            let c = Client::new(&h);
            let done = Arc::clone(&done);
            thread::spawn(move || {
                let mut last = 0;
                let mut reads = 0;
                while !done.load(Ordering::Relaxed) {
                    let (status, body) = c.search("probe");
                    assert_eq!(status, 200);
                    let revision = body["revision"].as_u64().unwrap();
                    let hits = body["results"].as_array().unwrap().len() as u64;
                    assert_eq!(hits, revision, "torn snapshot: {body}");
                    assert!(revision >= last, "revision went backwards");
                    last = revision;
                    reads += 1;
                }
                reads
            })
        })
        .collect();

    let c = Client::new(&h);
    for k in 1..=30u64 {
        let (status, body) = c.post(
            "/admin/nodes",
            TOKEN,
            &format!(r#"{{"parent": 1, "label": "Probe {k}"}}"#),
        );
        assert_eq!(status, 200);
        let r = body["revision"].as_u64().unwrap();
        assert_eq!(r, k);
        let (_, seen) = c.search(&format!("probe {k}"));
        assert!(seen["revision"].as_u64().unwrap() >= r);
        assert_eq!(seen["results"][0]["path"][1], format!("Probe {k}"));
    }
    done.store(true, Ordering::Relaxed);
    for r in readers {
        assert!(r.join().unwrap() > 0);
    }
}
