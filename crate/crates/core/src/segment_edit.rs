//! Multi-channel segmentation: each channel keeps its segments sorted by
//! (start, end, id). Segments may overlap; only the order is enforced.

use std::cmp::Ordering;

use thiserror::Error;

use crate::formats::{FormatError, LCF_KIND};
use crate::graph::{compare_ids, id_number, AnnotationGraph, FeatureMap};
use crate::time::{Region, TimeOffset};

/// Type of the zero-length annotation that remembers a first anchor press.
pub const PENDING_KIND: &str = "pending-anchor";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentError {
    #[error("bad region {0} > {1}")]
    BadRegion(TimeOffset, TimeOffset),
    #[error("no current segment")]
    NoCurrent,
    #[error("no previous segment")]
    NoPrevious,
    #[error("split point {0} is not strictly inside the segment")]
    SplitPointOutOfRange(TimeOffset),
    #[error("text offset {0} is past the end of the text")]
    BadTextOffset(usize),
    #[error("previous segment ends after the current one")]
    WouldInvert,
    #[error("no segment {0}")]
    UnknownSegment(String),
    #[error("no channel {0}")]
    UnknownChannel(usize),
}

impl SegmentError {
    pub fn code(&self) -> &'static str {
        match self {
            SegmentError::BadRegion(..) => "BadRegion",
            SegmentError::NoCurrent => "NoCurrent",
            SegmentError::NoPrevious => "NoPrevious",
            SegmentError::SplitPointOutOfRange(_) => "SplitPointOutOfRange",
            SegmentError::BadTextOffset(_) => "BadTextOffset",
            SegmentError::WouldInvert => "WouldInvert",
            SegmentError::UnknownSegment(_) => "UnknownSegment",
            SegmentError::UnknownChannel(_) => "UnknownChannel",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub id: String,
    pub region: Region,
    pub speaker: String,
    pub text: String,
}

fn seg_order(a: &Segment, b: &Segment) -> Ordering {
    a.region
        .start()
        .cmp(&b.region.start())
        .then(a.region.end().cmp(&b.region.end()))
        .then_with(|| compare_ids(&a.id, &b.id))
}

fn region(start: TimeOffset, end: TimeOffset) -> Result<Region, SegmentError> {
    Region::new(start, end).map_err(|_| SegmentError::BadRegion(start, end))
}

/// Joins two texts with one space, dropping the space when a side is empty.
pub fn join_text(a: &str, b: &str) -> String {
    match (a.is_empty(), b.is_empty()) {
        (true, _) => b.to_string(),
        (_, true) => a.to_string(),
        _ => format!("{a} {b}"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelDoc {
    channel: usize,
    segments: Vec<Segment>,
    current: Option<String>,
    pending: Option<TimeOffset>,
    next_id: u64,
}

impl ChannelDoc {
    pub fn new(channel: usize) -> Self {
        ChannelDoc { channel, segments: Vec::new(), current: None, pending: None, next_id: 1 }
    }

    pub fn channel(&self) -> usize {
        self.channel
    }

    /// Speaker given to segments created on this channel.
    pub fn default_speaker(&self) -> String {
        format!("S{}", self.channel + 1)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, id: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.id == id)
    }

    pub fn current(&self) -> Option<&str> {
        self.current.as_deref()
    }

    pub fn pending_anchor(&self) -> Option<TimeOffset> {
        self.pending
    }

    pub fn is_sorted(&self) -> bool {
        self.segments.windows(2).all(|w| seg_order(&w[0], &w[1]) == Ordering::Less)
    }

    fn fresh_id(&mut self) -> String {
        let id = format!("e{}", self.next_id);
        self.next_id += 1;
        id
    }

    fn resort(&mut self) {
        self.segments.sort_by(seg_order);
    }

    fn current_index(&self) -> Result<usize, SegmentError> {
        let cur = self.current.as_deref().ok_or(SegmentError::NoCurrent)?;
        self.segments.iter().position(|s| s.id == cur).ok_or(SegmentError::NoCurrent)
    }

    pub fn select(&mut self, id: &str) -> Result<(), SegmentError> {
        if self.segment(id).is_none() {
            return Err(SegmentError::UnknownSegment(id.to_string()));
        }
        self.current = Some(id.to_string());
        Ok(())
    }

    fn insert(&mut self, region: Region, speaker: String, text: String) -> String {
        let id = self.fresh_id();
        self.segments.push(Segment { id: id.clone(), region, speaker, text });
        self.resort();
        id
    }

    pub fn create_segment(&mut self, start: TimeOffset, end: TimeOffset) -> Result<String, SegmentError> {
        let r = region(start, end)?;
        let id = self.insert(r, self.default_speaker(), String::new());
        self.current = Some(id.clone());
        Ok(id)
    }

    /// The first press remembers `t`; the second creates the segment
    /// between the two presses.
    pub fn press_anchor(&mut self, t: TimeOffset) -> Option<String> {
        match self.pending.take() {
            None => {
                self.pending = Some(t);
                None
            }
            Some(p) => Some(self.create_segment(p.min(t), p.max(t)).expect("min <= max")),
        }
    }

    pub fn stop_playback(&mut self) {
        self.pending = None;
    }

    pub fn delete_segment(&mut self) -> Result<(), SegmentError> {
        let i = self.current_index()?;
        self.segments.remove(i);
        self.current = None;
        Ok(())
    }

    pub fn change_boundaries(&mut self, start: TimeOffset, end: TimeOffset) -> Result<(), SegmentError> {
        let i = self.current_index()?;
        self.segments[i].region = region(start, end)?;
        self.resort();
        Ok(())
    }

    /// Splits the current segment at char `offset` of its text and time `t`.
    /// The left half keeps the id; the right half is new and current.
    pub fn split_segment(&mut self, offset: usize, t: TimeOffset) -> Result<(String, String), SegmentError> {
        let i = self.current_index()?;
        let seg = self.segments[i].clone();
        let byte = match seg.text.char_indices().nth(offset) {
            Some((b, _)) => b,
            None if offset == seg.text.chars().count() => seg.text.len(),
            None => return Err(SegmentError::BadTextOffset(offset)),
        };
        if !seg.region.strictly_inside(t) {
            return Err(SegmentError::SplitPointOutOfRange(t));
        }
        let left = &mut self.segments[i];
        left.region = region(seg.region.start(), t)?;
        left.text = seg.text[..byte].trim_end().to_string();
        let right = self.insert(region(t, seg.region.end())?, seg.speaker, seg.text[byte..].trim_start().to_string());
        self.current = Some(right.clone());
        Ok((seg.id, right))
    }

    /// Merges the current segment into the one before it in sort order.
    pub fn join_with_previous(&mut self) -> Result<String, SegmentError> {
        let i = self.current_index()?;
        if i == 0 {
            return Err(SegmentError::NoPrevious);
        }
        let cur = self.segments.remove(i);
        let prev = &mut self.segments[i - 1];
        prev.region = region(prev.region.start(), cur.region.end())?;
        prev.text = join_text(&prev.text, &cur.text);
        let id = prev.id.clone();
        self.resort();
        self.current = Some(id.clone());
        Ok(id)
    }

    /// Moves the current segment's start to the previous segment's end.
    pub fn squeeze(&mut self) -> Result<(), SegmentError> {
        let i = self.current_index()?;
        if i == 0 {
            return Err(SegmentError::NoPrevious);
        }
        let prev_end = self.segments[i - 1].region.end();
        let cur = &mut self.segments[i];
        if prev_end > cur.region.end() {
            return Err(SegmentError::WouldInvert);
        }
        cur.region = region(prev_end, cur.region.end())?;
        self.resort();
        Ok(())
    }

    pub fn set_text(&mut self, text: &str) -> Result<(), SegmentError> {
        let i = self.current_index()?;
        self.segments[i].text = text.to_string();
        Ok(())
    }

    pub fn set_speaker(&mut self, speaker: &str) -> Result<(), SegmentError> {
        let i = self.current_index()?;
        self.segments[i].speaker = speaker.to_string();
        Ok(())
    }

    /// One graph, id `ch<n>`; segments in sort order, each on its own
    /// anchors, then the pending press if any.
    pub fn to_graph(&self) -> AnnotationGraph {
        let mut g = AnnotationGraph::new(format!("ch{}", self.channel + 1));
        let channel = (self.channel + 1).to_string();
        for s in &self.segments {
            let a = g.add_anchor(Some(s.region.start()));
            let b = g.add_anchor(Some(s.region.end()));
            let f = FeatureMap::from_pairs([("speaker", s.speaker.as_str()), ("text", &s.text), ("channel", &channel)])
                .expect("fixed names");
            g.add_annotation_with_id(&s.id, LCF_KIND, &a, &b, f).expect("ordered region");
        }
        if let Some(p) = self.pending {
            let a = g.add_anchor(Some(p));
            let id = format!("e{}", self.next_id);
            g.add_annotation_with_id(&id, PENDING_KIND, &a, &a, FeatureMap::new()).expect("zero-length arc");
        }
        g
    }

    /// Reads a channel graph. `segment` annotations become segments
    /// (speaker defaults to the channel's); one `pending-anchor` is allowed.
    pub fn from_graph(channel: usize, g: &AnnotationGraph) -> Result<Self, FormatError> {
        let bad = |reason: String| FormatError::BadDocument { kind: "segments", reason };
        let mut doc = ChannelDoc::new(channel);
        let mut next_id = 1;
        for a in g.annotations() {
            let n = id_number(&a.id, 'e').ok_or_else(|| bad(format!("bad id {}", a.id)))?;
            // The pending press borrows the next free id without using it up.
            next_id = next_id.max(if a.kind == PENDING_KIND { n } else { n + 1 });
            let (start, end) = (g.offset_of(&a.start), g.offset_of(&a.end));
            match a.kind.as_str() {
                LCF_KIND => {
                    let (Some(s), Some(e)) = (start, end) else {
                        return Err(bad(format!("{} is not timed", a.id)));
                    };
                    let region = Region::new(s, e).map_err(|_| bad(format!("{} runs backwards", a.id)))?;
                    let speaker = a.features.get("speaker").map_or_else(|| doc.default_speaker(), str::to_string);
                    let text = a.features.get("text").unwrap_or("").to_string();
                    doc.segments.push(Segment { id: a.id.clone(), region, speaker, text });
                }
                PENDING_KIND => {
                    if doc.pending.is_some() {
                        return Err(bad("two pending anchors".into()));
                    }
                    doc.pending = Some(start.ok_or_else(|| bad(format!("{} is not timed", a.id)))?);
                }
                other => return Err(bad(format!("unexpected annotation type {other:?}"))),
            }
        }
        doc.next_id = next_id;
        doc.resort();
        Ok(doc)
    }
}

/// All channels of one recording.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentDoc {
    pub channels: Vec<ChannelDoc>,
}

impl SegmentDoc {
    pub fn new(channels: usize) -> Self {
        SegmentDoc { channels: (0..channels).map(ChannelDoc::new).collect() }
    }

    pub fn channel_mut(&mut self, channel: usize) -> Result<&mut ChannelDoc, SegmentError> {
        self.channels.get_mut(channel).ok_or(SegmentError::UnknownChannel(channel))
    }

    /// Appends an empty channel and returns its index.
    pub fn add_channel(&mut self) -> usize {
        let n = self.channels.len();
        self.channels.push(ChannelDoc::new(n));
        n
    }

    pub fn to_graphs(&self) -> Vec<AnnotationGraph> {
        self.channels.iter().map(ChannelDoc::to_graph).collect()
    }

    pub fn from_graphs(graphs: &[AnnotationGraph]) -> Result<Self, FormatError> {
        let channels = graphs.iter().enumerate().map(|(i, g)| ChannelDoc::from_graph(i, g)).collect::<Result<_, _>>()?;
        Ok(SegmentDoc { channels })
    }
}
