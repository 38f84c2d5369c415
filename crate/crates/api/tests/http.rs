use std::path::PathBuf;
use std::sync::Arc;
use std::thread::JoinHandle;

use divmeter_api::{router, views, ApiConfig, Pipeline};
use divmeter_core::{EditionId, VaultKey};
use divmeter_ingest::{IngestOptions, InstitutionRegistry, LexiconProvider};
use divmeter_store::{canonical_json, Store};
use serde_json::{json, Value};

const TOKEN: &str = "s3cret-token";

fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", "toyconf", name].iter().collect();
    std::fs::read_to_string(path).unwrap()
}

fn pipeline() -> Pipeline {
    Pipeline {
        registry: InstitutionRegistry::from_csv(fixture("registry.csv").as_bytes()).unwrap(),
        provider: Some(Box::new(LexiconProvider::from_csv(fixture("lexicon.csv").as_bytes()).unwrap())),
        options: IngestOptions::default(),
    }
}

struct Server {
    base: String,
    agent: ureq::Agent,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl Server {
    fn start(store: Arc<Store>, pipeline: Option<Pipeline>, config: ApiConfig) -> Self {
        let rt = tokio::runtime::Runtime::new().unwrap();
        let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let app = router(store, pipeline, config);
        let thread = std::thread::spawn(move || {
            rt.block_on(divmeter_api::serve(listener, app, async {
                let _ = rx.await;
            }))
            .unwrap();
        });
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().new_agent();
        Self { base, agent, stop: Some(tx), thread: Some(thread) }
    }

    fn get(&self, path: &str) -> (u16, String) {
        let mut resp = self.agent.get(format!("{}{path}", self.base)).call().unwrap();
        (resp.status().as_u16(), resp.body_mut().read_to_string().unwrap())
    }

    fn post(&self, token: Option<&str>, body: &Value) -> (u16, String) {
        let mut req =
            self.agent.post(format!("{}/api/contributions", self.base)).header("content-type", "application/json");
        if let Some(t) = token {
            req = req.header("x-divmeter-token", t);
        }
        let mut resp = req.send(body.to_string()).unwrap();
        (resp.status().as_u16(), resp.body_mut().read_to_string().unwrap())
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn key() -> VaultKey {
    VaultKey::from_secret("api-tests").unwrap()
}

fn open_store(dir: &tempfile::TempDir) -> Arc<Store> {
    Arc::new(Store::create(dir.path(), Some(key())).unwrap())
}

fn config() -> ApiConfig {
    ApiConfig { token: Some(TOKEN.into()), contributions_per_minute: 0 }
}

fn toyconf_body() -> Value {
    json!({
        "conference": "toyconf",
        "year": 2021,
        "name": "ToyConf",
        "dblp": fixture("dblp.xml"),
        "annotations": fixture("annotations.csv"),
        "affiliations": fixture("affiliations.csv"),
    })
}

fn parse(body: &str) -> Value {
    serde_json::from_str(body).unwrap()
}

#[test]
fn contribution_is_visible_to_every_read_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let store = open_store(&dir);
    let server = Server::start(store.clone(), Some(pipeline()), config());

    let (status, body) = server.post(Some(TOKEN), &toyconf_body());
    assert_eq!(status, 200, "{body}");
    let receipt = parse(&body);
    assert_eq!(receipt["edition_id"], "toyconf-2021");
    assert_eq!(receipt["revision"], 1);
    assert_eq!(receipt["ingest_report"]["coverage"]["author"]["gender"]["total"], 10);

    let id: EditionId = "toyconf-2021".parse().unwrap();
    let pairs = [
        ("/api/editions/toyconf/2021/report", views::report(&store, &id).unwrap()),
        ("/api/editions/toyconf/2021/distributions", views::distributions(&store, &id).unwrap()),
        ("/api/editions/toyconf/2021/context", views::context(&store, &id).unwrap()),
        ("/api/conferences/toyconf/timeline", views::conference_timeline(&store, "toyconf").unwrap()),
        ("/api/conferences?q=TOY", views::conferences(&store, "toy").unwrap()),
    ];
    for (path, direct) in pairs {
        let (status, body) = server.get(path);
        assert_eq!(status, 200, "{path}: {body}");
        assert_eq!(body, canonical_json(&direct), "{path}");
    }
    assert_eq!(parse(&server.get("/api/conferences?q=").1)[0]["name"], "ToyConf");
    assert_eq!(server.get("/api/conferences?q=zz").1.trim(), "[]");
}

#[test]
fn responses_carry_no_names() {
    let dir = tempfile::tempdir().unwrap();
    let store = open_store(&dir);
    let server = Server::start(store.clone(), Some(pipeline()), config());
    let (_, receipt) = server.post(Some(TOKEN), &toyconf_body());

    let vault = store.read_vault().unwrap();
    assert_eq!(vault.len(), 18);
    let mut needles: Vec<String> = Vec::new();
    for entry in &vault {
        needles.push(entry.full_name.to_lowercase());
        needles.extend(entry.full_name.split_whitespace().filter(|t| t.chars().count() >= 4).map(str::to_lowercase));
    }
    let mut bodies = vec![receipt];
    for path in [
        "/api/conferences",
        "/api/conferences/toyconf/timeline",
        "/api/editions/toyconf/2021/report",
        "/api/editions/toyconf/2021/distributions",
        "/api/editions/toyconf/2021/context",
    ] {
        bodies.push(server.get(path).1);
    }
    for body in bodies {
        let lower = body.to_lowercase();
        for n in &needles {
            assert!(!lower.contains(n.as_str()), "{n} leaked");
        }
    }
}

#[test]
fn tokens_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(open_store(&dir), Some(pipeline()), config());
    for token in [None, Some("wrong"), Some("s3cret-tokeN")] {
        let (status, body) = server.post(token, &toyconf_body());
        assert_eq!(status, 401);
        assert_eq!(parse(&body)["error"], "bad_token");
    }

    let open = Server::start(open_store(&dir), Some(pipeline()), ApiConfig { token: None, ..config() });
    assert_eq!(open.post(Some(""), &toyconf_body()).0, 401);
}

#[test]
fn wrong_header_echoes_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(open_store(&dir), Some(pipeline()), config());
    let body = json!({"conference": "toyconf", "year": 2021, "annotations": "who,what\nAna Souza,woman\n"});
    let (status, text) = server.post(Some(TOKEN), &body);
    assert_eq!(status, 422, "{text}");
    let v = parse(&text);
    assert_eq!(v["error"], "header_mismatch");
    assert!(v["details"]["expected"].as_str().unwrap().starts_with("conference,year,role"));
    assert!(!text.contains("Ana Souza"));

    let (status, text) = server.post(Some(TOKEN), &json!({"conference": "toyconf", "year": 2021}));
    assert_eq!((status, parse(&text)["error"].clone()), (422, json!("empty_payload")));

    let (status, _) = server.post(Some(TOKEN), &json!({"conference": "toyconf"}));
    assert_eq!(status, 400);
}

#[test]
fn contradicting_labels_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(open_store(&dir), Some(pipeline()), config());
    let csv = "conference,year,role,name,affiliation,affiliation2,gender,business,country\n\
               toyconf,2021,organizer,Ana Souza,MIT,,woman,,\n\
               toyconf,2021,organizer,Ana Souza,MIT,,man,,\n";
    let (status, text) = server.post(Some(TOKEN), &json!({"conference": "toyconf", "year": 2021, "annotations": csv}));
    assert_eq!(status, 409, "{text}");
    assert_eq!(parse(&text)["details"]["facet"], "gender");
}

#[test]
fn missing_things_are_404() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(open_store(&dir), Some(pipeline()), config());
    server.post(Some(TOKEN), &toyconf_body());
    for path in [
        "/api/editions/toyconf/1999/report",
        "/api/editions/toyconf/20x1/report",
        "/api/editions/nope/2021/distributions",
        "/api/conferences/nope/timeline",
        "/api/nothing",
    ] {
        let (status, body) = server.get(path);
        assert_eq!(status, 404, "{path}");
        assert_eq!(parse(&body)["error"], "not_found");
    }
}

#[test]
fn context_without_any_defined_cdi_is_409() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(open_store(&dir), Some(pipeline()), config());
    let csv = "conference,year,role,name,affiliation,affiliation2,gender,business,country\n\
               blank,2020,organizer,Xavier Quux,Nowhere,,,,\n";
    let (status, text) = server.post(Some(TOKEN), &json!({"conference": "blank", "year": 2020, "annotations": csv}));
    assert_eq!(status, 200, "{text}");
    let (status, body) = server.get("/api/editions/blank/2020/context");
    assert_eq!(status, 409);
    assert_eq!(parse(&body)["error"], "no_comparable_data");
    let report = parse(&server.get("/api/editions/blank/2020/report").1);
    assert!(report["cdi"].is_null() && report["gdi"].is_null());
    assert_eq!(server.get("/api/conferences/blank/timeline").1, canonical_json(&json!([{"cdi": null, "year": 2020}])));
}

#[test]
fn contributions_are_capped_per_address() {
    let dir = tempfile::tempdir().unwrap();
    let server =
        Server::start(open_store(&dir), Some(pipeline()), ApiConfig { contributions_per_minute: 2, ..config() });
    let statuses: Vec<u16> = (0..3).map(|_| server.post(Some(TOKEN), &toyconf_body()).0).collect();
    assert_eq!(statuses, [200, 200, 429]);
    assert_eq!(server.get("/api/editions/toyconf/2021/report").0, 200);
}

#[test]
fn read_only_server_refuses_contributions() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(open_store(&dir), None, config());
    assert_eq!(server.post(Some(TOKEN), &toyconf_body()).0, 422);
}

#[test]
fn locked_store_refuses_contributions() {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(Store::create(dir.path(), None).unwrap());
    let server = Server::start(store, Some(pipeline()), config());
    let (status, body) = server.post(Some(TOKEN), &toyconf_body());
    assert_eq!((status, parse(&body)["error"].clone()), (503, json!("vault_locked")));
}
