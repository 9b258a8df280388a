#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use serde_json::Value;
use teachplay::datasets::toy_corpus;
use teachplay::policy::PolicyParams;
use teachplay::server::{router, Service};

/// Run the router on an ephemeral port in a background runtime.
pub fn spawn(svc: Service) -> (String, Arc<Service>) {
    let svc = Arc::new(svc);
    let app = router(svc.clone());
    let (tx, rx) = std::sync::mpsc::channel::<SocketAddr>();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    (format!("http://{}", rx.recv().unwrap()), svc)
}

pub fn toy_service(log: &Path) -> Service {
    Service::open(
        toy_corpus(),
        vec![
            ("untrained".to_string(), PolicyParams::zeros()),
            (
                "novelty".to_string(),
                PolicyParams {
                    weights: [4.0, 0.0, 0.0, 1.0, -2.0, 0.0],
                    temperature: 1.0,
                },
            ),
        ],
        log,
    )
    .unwrap()
}

pub struct Client {
    pub base: String,
    http: reqwest::blocking::Client,
}

impl Client {
    pub fn new(base: String) -> Client {
        Client {
            base,
            http: reqwest::blocking::Client::new(),
        }
    }

    pub fn get(&self, path: &str) -> (u16, String) {
        let r = self.http.get(format!("{}{path}", self.base)).send().unwrap();
        (r.status().as_u16(), r.text().unwrap())
    }

    pub fn post(&self, path: &str, body: &Value) -> (u16, String) {
        self.post_raw(path, &body.to_string())
    }

    pub fn post_raw(&self, path: &str, body: &str) -> (u16, String) {
        let r = self
            .http
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .unwrap();
        (r.status().as_u16(), r.text().unwrap())
    }
}

pub fn json(body: &str) -> Value {
    serde_json::from_str(body).unwrap_or_else(|e| panic!("bad json {body:?}: {e}"))
}
