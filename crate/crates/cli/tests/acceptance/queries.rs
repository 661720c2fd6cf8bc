use agkit_core::graph::id_number;
use agkit_core::TimeOffset;
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::gen;

pub fn range_queries() -> Result<String, String> {
    let mut r = gen::rng(61);
    let mut queries = 0;
    for case in 0..200 {
        let g = gen::graph(&mut r, "g1", 200);
        for _ in 0..20 {
            let a = r.random_range(0..40_000_000u64);
            let b = if r.random_bool(0.2) { a } else { r.random_range(0..40_000_000u64) };
            let (t0, t1) = (TimeOffset::from_micros(a.min(b)), TimeOffset::from_micros(a.max(b)));
            let kind = [None, Some("segment"), Some("WD")].choose(&mut r).unwrap().as_deref();
            let mut want: Vec<(TimeOffset, TimeOffset, u64, String)> = Vec::new();
            for ann in g.annotations() {
                let (Some(s), Some(e)) = (g.offset_of(&ann.start), g.offset_of(&ann.end)) else { continue };
                if kind.is_some_and(|k| k != ann.kind) {
                    continue;
                }
                if s.max(t0) <= e.min(t1) {
                    want.push((s, e, id_number(&ann.id, 'e').unwrap(), ann.id.clone()));
                }
            }
            want.sort();
            let want: Vec<String> = want.into_iter().map(|w| w.3).collect();
            let got = g.annotations_in_range(t0, t1, kind).map_err(|e| e.to_string())?;
            if got != want {
                return Err(format!("graph {case}, [{t0}, {t1}] {kind:?}: got {got:?}, want {want:?}"));
            }
            queries += 1;
        }
        if g.annotations_in_range(TimeOffset::from_micros(2), TimeOffset::from_micros(1), None).is_ok() {
            return Err("reversed range accepted".into());
        }
    }
    Ok(format!("200 graphs, {queries} queries"))
}
