use agkit_core::interlinear::{Cell, IlDoc, IlId, TypeConfig};
use agkit_core::TimeOffset;
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::gen::{self, TestRng};

fn us(n: u64) -> TimeOffset {
    TimeOffset::from_micros(n)
}

/// Everything observable about a document except id counters.
#[derive(Debug, PartialEq)]
struct Snap {
    units: Vec<(IlId, String, Vec<CellSnap>)>,
}

#[derive(Debug, PartialEq)]
struct CellSnap {
    id: IlId,
    texts: Vec<(String, String)>,
    region: Option<(u64, u64)>,
    children: Vec<(String, Vec<CellSnap>)>,
}

fn snap_cell(d: &IlDoc, id: IlId) -> CellSnap {
    let c = d.cell(id).unwrap();
    CellSnap {
        id,
        texts: c.texts.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        region: c.region.map(|r| (r.start().micros(), r.end().micros())),
        children: c.children.iter().map(|(g, ids)| (g.clone(), ids.iter().map(|&k| snap_cell(d, k)).collect())).collect(),
    }
}

fn snap(d: &IlDoc) -> Snap {
    Snap {
        units: d
            .units()
            .iter()
            .map(|u| {
                let cells = u.tiers.values().flatten().map(|&c| snap_cell(d, c)).collect();
                (u.id, u.translation.clone(), cells)
            })
            .collect(),
    }
}

/// Words whose text is the concatenation of their morphemes, each
/// morpheme carrying a gloss. Some words and morphemes are aligned.
fn document(r: &mut TestRng) -> IlDoc {
    let mut d = IlDoc::new(TypeConfig::default());
    let mut clock = 0u64;
    for _ in 0..r.random_range(1..=3) {
        d.add_unit("free translation");
        let mut wd = d.insert_cell_after().unwrap();
        for w in 0..r.random_range(1..=4) {
            if w > 0 {
                d.select(wd).unwrap();
                wd = d.insert_cell_after().unwrap();
            }
            let aligned = r.random_bool(0.5);
            let n_mp = r.random_range(1..=3);
            let (ws, we) = (clock, clock + 1_000_000 * n_mp as u64);
            clock = we + r.random_range(0..500_000);
            if aligned {
                d.align_cell(us(ws), us(we)).unwrap();
            }
            let mut whole = String::new();
            let mut mp = d.cell(wd).unwrap().children["MP"][0];
            for m in 0..n_mp {
                if m > 0 {
                    d.select(mp).unwrap();
                    mp = d.insert_cell_after().unwrap();
                }
                d.select(mp).unwrap();
                let text = gen::letters(r, 4, false);
                whole.push_str(&text);
                d.set_text("MP", &text).unwrap();
                d.set_text("MP-GLOSS", &gen::letters(r, 5, true)).unwrap();
                if aligned && r.random_bool(0.7) {
                    let s = ws + 1_000_000 * m as u64;
                    d.align_cell(us(s), us(s + r.random_range(2..=1_000_000))).unwrap();
                }
            }
            d.select(wd).unwrap();
            d.set_text("WD", &whole).unwrap();
        }
    }
    d
}

fn prefix(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

fn suffix(s: &str, n: usize) -> String {
    s.chars().skip(n).collect()
}

fn len(s: &str) -> usize {
    s.chars().count()
}

/// Children that end at or before `offset` in cumulative text length go
/// left; the rest go right.
fn partition(d: &IlDoc, kids: &[IlId], offset: usize) -> (Vec<IlId>, Vec<IlId>) {
    let mut end = 0;
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &k in kids {
        end += len(d.cell(k).unwrap().text());
        if right.is_empty() && end <= offset {
            left.push(k);
        } else {
            right.push(k);
        }
    }
    (left, right)
}

fn check_split(d: &IlDoc, orig: &Cell, offset: usize, l: IlId, r: IlId, before: &IlDoc) -> Result<(), String> {
    let (lc, rc) = (d.cell(l).unwrap(), d.cell(r).unwrap());
    for (ty, text) in &orig.texts {
        let at = offset.min(len(text));
        if lc.texts[ty.as_str()] != prefix(text, at).trim_end() || rc.texts[ty.as_str()] != suffix(text, at).trim_start() {
            return Err(format!("{ty} co-text {text:?} not split at {at}"));
        }
    }
    for (g, kids) in &orig.children {
        let (wl, wr) = partition(before, kids, offset);
        if lc.children[g.as_str()] != wl || rc.children[g.as_str()] != wr {
            return Err(format!("{g} children of {:?} not partitioned at {offset}", orig.text()));
        }
    }
    Ok(())
}

pub fn interlinear_cascades() -> Result<String, String> {
    let mut r = gen::rng(41);
    let (mut splits, mut refused, mut wd_splits) = (0, 0, 0);
    for case in 0..1000 {
        let mut d = document(&mut r);
        let cells: Vec<IlId> = d.cells().map(|(id, _)| id).collect();
        let target = *cells.choose(&mut r).unwrap();
        let orig = d.cell(target).unwrap().clone();
        let offset = r.random_range(0..=len(orig.text()));
        // an aligned cell is split at a time point, otherwise the halves
        // come out unaligned and the join cannot bring the region back
        let t = orig.region.map(|rg| us(r.random_range(rg.start().micros() + 1..rg.end().micros())));
        let before = d.clone();
        let before_snap = snap(&d);
        let tiers: Vec<Vec<IlId>> = d.units().iter().map(|u| d.tier(u.id, "MP")).collect();
        d.select(target).unwrap();
        let (l, rt) = match d.split_cell(offset, t) {
            Ok(pair) => pair,
            Err(_) => {
                refused += 1;
                if snap(&d) != before_snap {
                    return Err(format!("case {case}: refused split changed the document"));
                }
                continue;
            }
        };
        splits += 1;
        if orig.group == "WD" {
            wd_splits += 1;
        }
        check_split(&d, &orig, offset, l, rt, &before).map_err(|e| format!("case {case}: {e}"))?;
        d.check_invariants().map_err(|e| format!("case {case}: {e}"))?;
        let mut expected = tiers;
        for tier in &mut expected {
            if let Some(i) = tier.iter().position(|&c| c == target) {
                tier.insert(i + 1, rt);
            }
        }
        let after: Vec<Vec<IlId>> = d.units().iter().map(|u| d.tier(u.id, "MP")).collect();
        if after != expected {
            return Err(format!("case {case}: MP tier is no longer the contiguous run in parent order"));
        }
        let joined = d.join_cell().map_err(|e| format!("case {case}: join failed: {e}"))?;
        if joined != target {
            return Err(format!("case {case}: join kept {joined}, expected {target}"));
        }
        d.check_invariants().map_err(|e| format!("case {case}: {e}"))?;
        if snap(&d) != before_snap {
            return Err(format!("case {case}: join after split did not restore the document"));
        }
    }
    Ok(format!("{splits} split/join round trips ({wd_splits} on dominating cells), {refused} refused splits left intact"))
}
