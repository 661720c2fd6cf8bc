use agkit_core::formats::{
    emit_aif, emit_lcf, emit_table, emit_treebank, graph_to_tree, parse_aif, parse_connect_string, parse_lcf,
    parse_table, parse_treebank, tree_to_graph, AgSet, ColumnSpec, TableConfig, LCF_KIND, ROW_KIND,
};
use agkit_core::{AnnotationGraph, FeatureMap, TimeOffset};
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::gen::{self, TestRng};

const N: usize = 500;

fn aif() -> Result<String, String> {
    let mut r = gen::rng(51);
    let mut annotations = 0;
    for case in 0..N {
        let set = gen::agset(&mut r);
        annotations += set.graphs.iter().map(AnnotationGraph::annotation_count).sum::<usize>();
        let first = emit_aif(&set);
        let back = parse_aif(&first).map_err(|e| format!("case {case}: {e}"))?;
        if back != set {
            return Err(format!("case {case}: parsed set differs"));
        }
        if emit_aif(&back) != first {
            return Err(format!("case {case}: re-emit is not byte-identical"));
        }
    }
    Ok(format!("aif {N} sets/{annotations} annotations"))
}

type Row = (Option<TimeOffset>, Option<TimeOffset>, Vec<(String, String)>);

fn rows(g: &AnnotationGraph) -> Vec<Row> {
    g.annotations()
        .filter(|a| a.kind == ROW_KIND)
        .map(|a| {
            let f = a.features.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
            (g.offset_of(&a.start), g.offset_of(&a.end), f)
        })
        .collect()
}

const CELLS: &[&str] = &["", "x", "two words", "a,b", "semi;colon", "pipe|d", "tab\tbed", "say \"hi\"", "multi\nline", " lead", "ünï", "\"", "cr\r\nlf"];

fn table() -> Result<String, String> {
    let mut r = gen::rng(52);
    let mut total_rows = 0;
    for case in 0..N {
        let delimiter = *[',', ';', '\t', '|'].choose(&mut r).unwrap();
        let columns: Vec<ColumnSpec> =
            (0..r.random_range(1..=5)).map(|i| ColumnSpec::new(format!("c{i}"), r.random_range(5..40))).collect();
        let config = TableConfig::new(delimiter, columns, r.random_bool(0.3)).unwrap();
        let mut g = AnnotationGraph::new("g1");
        let mut t = 0u64;
        for _ in 0..r.random_range(0..=100) {
            t += r.random_range(0..2_000_000);
            let s = r.random_bool(0.9).then(|| TimeOffset::from_micros(t));
            t += r.random_range(0..2_000_000);
            let e = r.random_bool(0.9).then(|| TimeOffset::from_micros(t));
            let (a, b) = (g.add_anchor(s), g.add_anchor(e));
            let mut f = FeatureMap::new();
            for c in &config.columns {
                let mut text = String::new();
                for _ in 0..r.random_range(1..=2) {
                    text.push_str(CELLS.choose(&mut r).unwrap());
                }
                f.insert(c.name.as_str(), text).unwrap();
            }
            g.add_annotation(ROW_KIND, &a, &b, f).unwrap();
        }
        total_rows += g.annotation_count();
        let text = emit_table(&g, &config);
        let back = parse_table(&text, &config).map_err(|e| format!("case {case}: {e} in {text:?}"))?;
        if rows(&back) != rows(&g) {
            return Err(format!("case {case}: rows differ after {text:?}"));
        }
        if emit_table(&back, &config) != text {
            return Err(format!("case {case}: re-emit differs"));
        }
        if g.annotation_count() > 0 {
            let other = TableConfig { delimiter: if delimiter == ',' { ';' } else { ',' }, ..config.clone() };
            if parse_table(&text, &other).is_ok_and(|g2| rows(&g2) == rows(&g)) {
                return Err(format!("case {case}: a foreign delimiter read the same rows"));
            }
        }
    }
    Ok(format!("table {N} configs/{total_rows} rows"))
}

fn lcf() -> Result<String, String> {
    let mut r = gen::rng(53);
    let mut segs = 0;
    for case in 0..N {
        let mut g = AnnotationGraph::new("g1");
        let mut t = 0u64;
        for _ in 0..r.random_range(0..30) {
            t += r.random_range(0..3_000_000);
            let a = g.add_anchor(Some(TimeOffset::from_micros(t)));
            t += r.random_range(0..3_000_000);
            let b = g.add_anchor(Some(TimeOffset::from_micros(t)));
            let speaker = *["A", "B", "spk-2", "Ü"].choose(&mut r).unwrap();
            let text = match r.random_range(0..4) {
                0 => String::new(),
                1 => format!("  {}  ", gen::words(&mut r, 4)),
                2 => "# not a comment: a:b".to_string(),
                _ => gen::words(&mut r, 8),
            };
            g.add_annotation(LCF_KIND, &a, &b, FeatureMap::from_pairs([("speaker", speaker), ("text", text.as_str())]).unwrap())
                .unwrap();
        }
        segs += g.annotation_count();
        let text = emit_lcf(&g).map_err(|e| format!("case {case}: {e}"))?;
        let back = parse_lcf(&text).map_err(|e| format!("case {case}: {e} in {text:?}"))?;
        let view = |g: &AnnotationGraph| -> Vec<_> {
            g.annotations()
                .map(|a| (g.offset_of(&a.start), g.offset_of(&a.end), a.features.get("speaker").map(str::to_string), a.features.get("text").map(str::to_string)))
                .collect()
        };
        if view(&back) != view(&g) {
            return Err(format!("case {case}: segments differ after {text:?}"));
        }
        if emit_lcf(&back).unwrap() != text {
            return Err(format!("case {case}: re-emit differs"));
        }
    }
    Ok(format!("lcf {N} transcripts/{segs} segments"))
}

fn trees(r: &mut TestRng) -> Result<String, String> {
    for case in 0..N {
        let n = r.random_range(1..=20);
        let mut t = gen::tree(r, n);
        let pairs = r.random_range(0..3);
        gen::add_corefs(r, &mut t, pairs);
        let g = tree_to_graph(&t);
        if !g.validate().is_empty() {
            return Err(format!("case {case}: encoding is not a valid graph"));
        }
        let back = graph_to_tree(&g).map_err(|e| format!("case {case}: {e}"))?;
        if back.shape() != t.shape() {
            return Err(format!("case {case}: graph round trip changed {}", emit_treebank(&t)));
        }
        let through_aif = parse_aif(&emit_aif(&AgSet::new("s", vec![g]))).map_err(|e| format!("case {case}: {e}"))?;
        let back = graph_to_tree(&through_aif.graphs[0]).map_err(|e| format!("case {case}: {e}"))?;
        if back.shape() != t.shape() {
            return Err(format!("case {case}: AIF round trip changed {}", emit_treebank(&t)));
        }
        let brackets = emit_treebank(&t);
        let reread = parse_treebank(&brackets).map_err(|e| format!("case {case}: {e} in {brackets}"))?;
        if reread.len() != 1 || reread[0].shape() != t.shape() {
            return Err(format!("case {case}: bracket round trip changed {brackets}"));
        }
    }
    Ok(format!("tree<->graph {N} trees"))
}

fn connect(r: &mut TestRng) -> Result<String, String> {
    let p = parse_connect_string("DSN=ag;SERVER=db.example.org;UID=bob;PWD=x;DATABASE=anno").map_err(|e| e.to_string())?;
    let want = [("DSN", "ag"), ("SERVER", "db.example.org"), ("UID", "bob"), ("PWD", "x"), ("DATABASE", "anno")];
    if p.iter().collect::<Vec<_>>() != want {
        return Err(format!("standard keys read as {p}"));
    }
    let lower = parse_connect_string("dsn=ag;uid=bob").map_err(|e| e.to_string())?;
    if lower.get("DSN") != Some("ag") || lower.database() != Some("ag") {
        return Err("DATABASE does not fall back to DSN".into());
    }
    for case in 0..N {
        let mut params = agkit_core::formats::ConnectParams::default();
        for k in 0..r.random_range(0..6) {
            let key = format!("{}{k}", ["DSN", "SERVER", "UID", "PWD", "DATABASE", "OPTION"].choose(r).unwrap());
            let value = ["", "x", "a=b", " spaced ", "Ωmega"].choose(r).unwrap().to_string();
            params.insert(&key, value);
        }
        let back = parse_connect_string(&params.to_string()).map_err(|e| format!("case {case}: {e}"))?;
        if back != params {
            return Err(format!("case {case}: {params} read back as {back}"));
        }
    }
    Ok(format!("connect 5 standard keys + {N} strings"))
}

pub fn format_round_trips() -> Result<String, String> {
    let mut r = gen::rng(54);
    let parts = [aif()?, table()?, lcf()?, trees(&mut r)?, connect(&mut r)?];
    Ok(parts.join(", "))
}
