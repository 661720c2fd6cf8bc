use agkit_core::graph::id_number;
use agkit_core::segment_edit::{ChannelDoc, Segment};
use agkit_core::TimeOffset;
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::gen::{self, TestRng};

fn us(n: u64) -> TimeOffset {
    TimeOffset::from_micros(n)
}

/// Sort check written against the documented key: start, end, id number.
fn sorted(ch: &ChannelDoc) -> bool {
    let key = |s: &Segment| (s.region.start(), s.region.end(), id_number(&s.id, 'e').unwrap());
    ch.segments().windows(2).all(|w| key(&w[0]) < key(&w[1]))
}

/// A channel of non-overlapping segments (touching allowed) with texts.
fn channel(r: &mut TestRng) -> ChannelDoc {
    let mut ch = ChannelDoc::new(0);
    let mut t = r.random_range(0..1_000_000);
    for _ in 0..r.random_range(1..=6) {
        t += if r.random_bool(0.3) { 0 } else { r.random_range(1..2_000_000) };
        let len = r.random_range(2..3_000_000);
        ch.create_segment(us(t), us(t + len)).unwrap();
        ch.set_text(&gen::words(r, 6)).unwrap();
        t += len;
    }
    ch
}

/// Offsets whose split leaves no whitespace to lose: the ends and either
/// side of a space.
fn clean_offsets(text: &str) -> Vec<usize> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = vec![0, chars.len()];
    for (i, &c) in chars.iter().enumerate() {
        if c == ' ' {
            out.push(i);
            out.push(i + 1);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn prefix(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

fn suffix(s: &str, n: usize) -> String {
    s.chars().skip(n).collect()
}

pub fn segment_algebra() -> Result<String, String> {
    let mut r = gen::rng(31);
    for case in 0..1000 {
        let mut ch = channel(&mut r);
        let before = ch.segments().to_vec();
        let seg = before.choose(&mut r).unwrap().clone();
        let offset = *clean_offsets(&seg.text).choose(&mut r).unwrap();
        let (s, e) = (seg.region.start().micros(), seg.region.end().micros());
        let t = us(r.random_range(s + 1..e));
        ch.select(&seg.id).unwrap();
        let (left, right) = ch.split_segment(offset, t).map_err(|e| format!("case {case}: split failed: {e}"))?;
        if !sorted(&ch) {
            return Err(format!("case {case}: unsorted after split"));
        }
        let (l, rt) = (ch.segment(&left).unwrap(), ch.segment(&right).unwrap());
        let want_l = prefix(&seg.text, offset).trim_end().to_string();
        let want_r = suffix(&seg.text, offset).trim_start().to_string();
        if l.text != want_l || rt.text != want_r || l.region.end() != t || rt.region.start() != t {
            return Err(format!("case {case}: split of {:?} at {offset} gave {:?} / {:?}", seg.text, l.text, rt.text));
        }
        ch.join_with_previous().map_err(|e| format!("case {case}: join failed: {e}"))?;
        if !sorted(&ch) {
            return Err(format!("case {case}: unsorted after join"));
        }
        if ch.segments() != before.as_slice() {
            return Err(format!("case {case}: join after split did not restore {:?}", seg));
        }
    }

    let mut squeezed = 0;
    for case in 0..1000 {
        let mut ch = channel(&mut r);
        let segs = ch.segments().to_vec();
        let pick = segs.choose(&mut r).unwrap().id.clone();
        ch.select(&pick).unwrap();
        let start = ch.clone();
        match ch.squeeze() {
            Ok(()) => {
                squeezed += 1;
                let once = ch.clone();
                ch.squeeze().map_err(|e| format!("case {case}: second squeeze failed: {e}"))?;
                if ch != once {
                    return Err(format!("case {case}: squeeze is not idempotent"));
                }
                let i = once.segments().iter().position(|s| s.id == pick).unwrap();
                if i == 0 || once.segments()[i].region.start() != once.segments()[i - 1].region.end() {
                    return Err(format!("case {case}: squeeze did not meet the previous end"));
                }
            }
            Err(_) if ch == start => {}
            Err(e) => return Err(format!("case {case}: failed squeeze ({e}) changed the channel")),
        }
        if !sorted(&ch) {
            return Err(format!("case {case}: unsorted after squeeze"));
        }
    }

    // free-form sequences, sort order checked after every operation
    let mut ops = 0;
    for case in 0..300 {
        let mut ch = ChannelDoc::new(0);
        for _ in 0..r.random_range(1..40) {
            ops += 1;
            let ids: Vec<String> = ch.segments().iter().map(|s| s.id.clone()).collect();
            if let Some(id) = ids.choose(&mut r) {
                ch.select(id).unwrap();
            }
            let a = r.random_range(0..5_000_000u64);
            let b = r.random_range(0..5_000_000u64);
            let _ = match r.random_range(0..7) {
                0 => ch.create_segment(us(a.min(b)), us(a.max(b))).map(drop),
                1 => ch.delete_segment(),
                2 => ch.change_boundaries(us(a.min(b)), us(a.max(b))),
                3 => ch.split_segment(0, us(a)).map(drop),
                4 => ch.join_with_previous().map(drop),
                5 => ch.squeeze(),
                _ => Ok(ch.press_anchor(us(a)).map_or((), drop)),
            };
            if !sorted(&ch) {
                return Err(format!("sequence {case}: unsorted"));
            }
        }
    }
    Ok(format!("1000 split/join round trips, {squeezed} idempotent squeezes, {ops} sequence ops kept order"))
}
