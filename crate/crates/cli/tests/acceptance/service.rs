use std::sync::Arc;

use agkit_core::{apply_command, DocKind, EditCommand, Store};
use rand::seq::IndexedRandom;
use rand::Rng;
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};

use crate::gen;

async fn post(c: &Client, url: &str, body: &Value) -> Result<(StatusCode, Value), String> {
    let res = c.post(url).json(body).send().await.map_err(|e| e.to_string())?;
    let status = res.status();
    Ok((status, res.json().await.unwrap_or(Value::Null)))
}

async fn fetch(c: &Client, url: &str) -> Result<(u64, String), String> {
    let res = c.get(url).send().await.map_err(|e| e.to_string())?;
    let rev = res.headers()["x-revision"].to_str().map_err(|e| e.to_string())?.parse().map_err(|_| "bad revision header")?;
    Ok((rev, res.text().await.map_err(|e| e.to_string())?))
}

async fn run() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = Arc::new(Store::open(dir.path()).map_err(|e| e.to_string())?);
    let addr = agkit_server::spawn(store, "127.0.0.1:0").await.map_err(|e| e.to_string())?;
    let base = format!("http://{addr}");
    let doc = format!("{base}/docs/d");
    let edits = format!("{doc}/edits");
    let c = Client::new();
    let res = c.put(format!("{doc}?kind=tree")).send().await.map_err(|e| e.to_string())?;
    if res.status() != StatusCode::CREATED {
        return Err(format!("PUT answered {}", res.status()));
    }
    let build = json!({ "op": "build_default_tree", "args": { "tokens": "the old man saw a dog" }, "base_revision": 0 });
    post(&c, &edits, &build).await?;

    let mut r = gen::rng(71);
    let (mut total_ok, mut total_conflict) = (0, 0);
    for round in 0..6 {
        let (rev, start_payload) = fetch(&c, &doc).await?;
        // round 0: all posts share one base, so exactly one may commit
        let spread = if round == 0 { 1 } else { r.random_range(2..=8) };
        let cmds: Vec<Value> = (0..16)
            .map(|i| {
                let node = format!("e{}", [1, 2, 4, 6, 8, 10, 12].choose(&mut r).unwrap());
                let (op, args) = if r.random_bool(0.5) {
                    ("change_label", json!({ "node": node, "label": format!("L{round}x{i}") }))
                } else if node == "e1" {
                    ("coref", json!({ "nodes": ["e2", "e4"] }))
                } else {
                    ("add_syn_wrd", json!({ "node": node, "side": "before", "label": "NP" }))
                };
                json!({ "op": op, "args": args, "base_revision": rev + r.random_range(0..spread) })
            })
            .collect();
        let handles: Vec<_> = cmds
            .iter()
            .cloned()
            .map(|cmd| {
                let (c, url) = (c.clone(), edits.clone());
                tokio::spawn(async move { post(&c, &url, &cmd).await })
            })
            .collect();
        let mut committed = Vec::new();
        for (i, h) in handles.into_iter().enumerate() {
            let (status, body) = h.await.map_err(|e| e.to_string())??;
            match status {
                StatusCode::OK => committed.push((body["revision"].as_u64().ok_or("missing revision")?, i)),
                StatusCode::CONFLICT => total_conflict += 1,
                s => return Err(format!("round {round}: unexpected {s}: {body}")),
            }
        }
        committed.sort();
        total_ok += committed.len();
        if committed.is_empty() || (round == 0 && committed.len() != 1) {
            return Err(format!("round {round}: {} commits", committed.len()));
        }
        let mut replay = start_payload;
        for (k, &(new_rev, i)) in committed.iter().enumerate() {
            if new_rev != rev + 1 + k as u64 || cmds[i]["base_revision"] != json!(new_rev - 1) {
                return Err(format!("round {round}: commit chain broken at {new_rev}"));
            }
            let cmd: EditCommand = serde_json::from_value(cmds[i].clone()).map_err(|e| e.to_string())?;
            replay = apply_command(DocKind::Tree, &replay, &cmd).map_err(|e| e.to_string())?.0;
        }
        let (final_rev, payload) = fetch(&c, &doc).await?;
        if final_rev != rev + committed.len() as u64 {
            return Err(format!("round {round}: revision {final_rev} after {} commits", committed.len()));
        }
        if payload != replay {
            return Err(format!("round {round}: payload differs from sequential replay"));
        }
    }
    Ok(format!("6 rounds of 16 posts: {total_ok} committed, {total_conflict} conflicts, payload equals replay"))
}

pub fn concurrent_edits() -> Result<String, String> {
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().map_err(|e| e.to_string())?;
    rt.block_on(run())
}
