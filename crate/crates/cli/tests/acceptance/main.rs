//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod formats;
mod gen;
mod interlinear;
mod queries;
mod segments;
mod service;
mod trees;

use std::panic;
use std::process::ExitCode;
use std::time::Instant;

type Check = fn() -> Result<String, String>;

fn main() -> ExitCode {
    let checks: [(&str, Check); 8] = [
        ("treebank-round-trip", trees::treebank_round_trip),
        ("tree-edit-invariants", trees::tree_edit_invariants),
        ("move-node-oracle", trees::move_node_oracle),
        ("segment-algebra", segments::segment_algebra),
        ("interlinear-cascades", interlinear::interlinear_cascades),
        ("format-round-trips", formats::format_round_trips),
        ("service-concurrency", service::concurrent_edits),
        ("range-queries", queries::range_queries),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({secs:.2}s): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
