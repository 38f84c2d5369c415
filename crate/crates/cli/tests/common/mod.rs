#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

pub const KEY: &str = "fixture-vault-key";
pub const TOKEN: &str = "fixture-token";

pub fn fixture_dir() -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", "toyconf"].iter().collect()
}

pub fn fixture(name: &str) -> PathBuf {
    fixture_dir().join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// `divmeter` with a clean environment: the vault key is set only when `key` is.
pub fn divmeter(store: &Path, key: Option<&str>) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_divmeter"));
    cmd.arg("--store").arg(store);
    for var in ["DIVMETER_VAULT_KEY", "DIVMETER_TOKEN", "DIVMETER_PROVIDER_KEY", "DIVMETER_STORE", "DIVMETER_LISTEN"] {
        cmd.env_remove(var);
    }
    if let Some(k) = key {
        cmd.env("DIVMETER_VAULT_KEY", k);
    }
    cmd
}

pub fn run(store: &Path, key: Option<&str>, args: &[&str]) -> Output {
    divmeter(store, key).args(args).output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn ingest_toyconf(store: &Path) -> Output {
    let f = |n: &str| fixture(n).to_str().unwrap().to_string();
    run(
        store,
        Some(KEY),
        &[
            "ingest",
            "--conference",
            "toyconf",
            "--year",
            "2021",
            "--name",
            "ToyConf",
            "--dblp",
            &f("dblp.xml"),
            "--annotations",
            &f("annotations.csv"),
            "--affiliations",
            &f("affiliations.csv"),
            "--registry",
            &f("registry.csv"),
            "--lexicon",
            &f("lexicon.csv"),
            "--json",
        ],
    )
}

/// A `divmeter serve` child on an ephemeral port.
pub struct Served {
    pub child: Child,
    pub base: String,
}

impl Served {
    pub fn start(store: &Path, with_pipeline: bool) -> Self {
        let mut cmd = divmeter(store, Some(KEY));
        cmd.args(["serve", "--listen", "127.0.0.1:0", "--rate-limit", "0"]).env("DIVMETER_TOKEN", TOKEN);
        if with_pipeline {
            cmd.arg("--registry").arg(fixture("registry.csv")).arg("--lexicon").arg(fixture("lexicon.csv"));
        }
        let mut child = cmd.stdout(Stdio::null()).stderr(Stdio::piped()).spawn().unwrap();
        let mut reader = BufReader::new(child.stderr.take().unwrap());
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        std::thread::spawn(move || std::io::copy(&mut reader, &mut std::io::sink()));
        let base =
            line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("unexpected: {line}")).to_string();
        Self { child, base }
    }

    pub fn agent() -> ureq::Agent {
        ureq::Agent::config_builder().http_status_as_error(false).build().new_agent()
    }

    pub fn get(&self, path: &str) -> (u16, String) {
        let mut r = Self::agent().get(format!("{}{path}", self.base)).call().unwrap();
        (r.status().as_u16(), r.body_mut().read_to_string().unwrap())
    }

    pub fn post(&self, body: &serde_json::Value) -> (u16, String) {
        let mut r = Self::agent()
            .post(format!("{}/api/contributions", self.base))
            .header("content-type", "application/json")
            .header("x-divmeter-token", TOKEN)
            .send(body.to_string())
            .unwrap();
        (r.status().as_u16(), r.body_mut().read_to_string().unwrap())
    }

    /// Sends SIGTERM and returns the exit code.
    pub fn terminate(mut self) -> Option<i32> {
        let pid = self.child.id().to_string();
        Command::new("kill").args(["-TERM", &pid]).status().unwrap();
        let status = self.child.wait().unwrap();
        status.code()
    }
}

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn toyconf_contribution() -> serde_json::Value {
    serde_json::json!({
        "conference": "toyconf",
        "year": 2021,
        "name": "ToyConf",
        "dblp": fixture_text("dblp.xml"),
        "annotations": fixture_text("annotations.csv"),
        "affiliations": fixture_text("affiliations.csv"),
    })
}
