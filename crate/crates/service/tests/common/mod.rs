#![allow(dead_code)]

use std::sync::Arc;

use ontopurify_core::owl::parse_owl;
use ontopurify_core::Ontology;
use ontopurify_service::{spawn, AppState, NullStore, Running, SnapshotStore};
use serde_json::Value;
use tokio::runtime::Runtime;

pub const TOKEN: &str = "s3cret";
pub const THEATRE: &str = include_str!("../../../../fixtures/theatre.owl");
pub const THEATRE_V2: &str = include_str!("../../../../fixtures/theatre-v2.owl");

pub fn theatre() -> Ontology {
    parse_owl(THEATRE).unwrap()
}

pub fn theatre_v2() -> Ontology {
    parse_owl(THEATRE_V2).unwrap()
}

/// A live server on an ephemeral port plus a blocking client.
pub struct Harness {
    pub state: Arc<AppState>,
    pub base: String,
    running: Option<Running>,
    rt: Runtime,
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into()
}

impl Harness {
    pub fn new(local: Ontology, reference: Option<Ontology>, auto_purify: bool) -> Self {
        Self::with_store(local, reference, auto_purify, Arc::new(NullStore))
    }

    pub fn with_store(
        local: Ontology,
        reference: Option<Ontology>,
        auto_purify: bool,
        store: Arc<dyn SnapshotStore>,
    ) -> Self {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(4)
            .enable_all()
            .build()
            .unwrap();
        let state = Arc::new(AppState::new(local, reference, TOKEN, auto_purify, store));
        let running = rt.block_on(async {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            spawn(Arc::clone(&state), listener).unwrap()
        });
        Self {
            state,
            base: running.base_url(),
            running: Some(running),
            rt,
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }
}

impl Drop for Harness {
    fn drop(&mut self) {
        if let Some(running) = self.running.take() {
            let _ = self.rt.block_on(running.shutdown());
        }
    }
}

pub struct Client {
    agent: ureq::Agent,
    base: String,
}

pub fn read(mut response: ureq::http::Response<ureq::Body>) -> (u16, Value) {
    let status = response.status().as_u16();
    let text = response.body_mut().read_to_string().unwrap();
    let value = serde_json::from_str(&text).unwrap_or(Value::String(text));
    (status, value)
}

impl Client {
    pub fn new(h: &Harness) -> Self {
        Self {
            agent: agent(),
            base: h.base.clone(),
        }
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        read(
            self.agent
                .get(format!("{}{}", self.base, path))
                .call()
                .unwrap(),
        )
    }

    pub fn search(&self, q: &str) -> (u16, Value) {
        self.get(&format!(
            "/search?q={}&domain=theatre",
            q.replace(' ', "%20")
        ))
    }

    pub fn post(&self, path: &str, token: &str, body: &str) -> (u16, Value) {
        read(
            self.agent
                .post(format!("{}{}", self.base, path))
                .header("Authorization", format!("Bearer {token}"))
                .header("Content-Type", "application/json")
                .send(body)
                .unwrap(),
        )
    }

    pub fn put(&self, path: &str, token: &str, body: &str) -> (u16, Value) {
        read(
            self.agent
                .put(format!("{}{}", self.base, path))
                .header("Authorization", format!("Bearer {token}"))
                .header("Content-Type", "application/json")
                .send(body)
                .unwrap(),
        )
    }

    pub fn delete(&self, path: &str, token: &str) -> (u16, Value) {
        read(
            self.agent
                .delete(format!("{}{}", self.base, path))
                .header("Authorization", format!("Bearer {token}"))
                .call()
                .unwrap(),
        )
    }

    pub fn revision(&self) -> u64 {
        self.get("/revision").1["revision"].as_u64().unwrap()
    }
}

pub fn labels(body: &Value) -> Vec<String> {
    body["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            r["path"]
                .as_array()
                .unwrap()
                .last()
                .unwrap()
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect()
}
