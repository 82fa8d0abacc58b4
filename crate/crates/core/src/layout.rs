//! Frame-wise bounding-box plans for inserting objects.
//!
//! A plan is a [`BoxSequence`]: one optional normalized box per frame. Plans
//! travel as text in the form
//!
//! ```text
//! Layouts of dog to be added: {Frame 1: [0.2, 0.0, 0.5, 0.7], Frame 2: [0.2, 0.1, 0.4, 0.65]}
//! ```
//!
//! Frame numbers are 1-based in text and 0-based in memory.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::MaskVideo;

/// Normalized box `[x1, y1, x2, y2]` with `0 ≤ x1 ≤ x2 ≤ 1` and
/// `0 ≤ y1 ≤ y2 ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if ![x1, y1, x2, y2].into_iter().all(unit) {
            return Err(Error::arg(format!(
                "box [{x1}, {y1}, {x2}, {y2}] has coordinates outside [0, 1]"
            )));
        }
        if x2 < x1 || y2 < y1 {
            return Err(Error::arg(format!(
                "box [{x1}, {y1}, {x2}, {y2}] has its corners swapped"
            )));
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    pub fn full() -> Self {
        Self {
            x1: 0.0,
            y1: 0.0,
            x2: 1.0,
            y2: 1.0,
        }
    }

    pub fn area(&self) -> f64 {
        (self.x2 - self.x1) * (self.y2 - self.y1)
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = Error;

    fn try_from(c: [f64; 4]) -> Result<Self> {
        BBox::new(c[0], c[1], c[2], c[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.coords()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSequence {
    pub object_name: String,
    /// One slot per frame, 0-based.
    pub boxes: Vec<Option<BBox>>,
}

impl BoxSequence {
    pub fn new(object_name: impl Into<String>, frame_count: usize) -> Self {
        Self {
            object_name: object_name.into(),
            boxes: vec![None; frame_count],
        }
    }

    pub fn frame_count(&self) -> usize {
        self.boxes.len()
    }

    pub fn present(&self) -> usize {
        self.boxes.iter().flatten().count()
    }

    pub fn is_complete(&self) -> bool {
        self.boxes.iter().all(Option::is_some)
    }
}

/// Tightest box around the set pixels, with exclusive upper corner:
/// `(min_x/W, min_y/H, (max_x+1)/W, (max_y+1)/H)`.
pub fn bbox_from_mask(mask: &[u8], height: usize, width: usize) -> Option<BBox> {
    let mut lo = (usize::MAX, usize::MAX);
    let mut hi = (0usize, 0usize);
    let mut any = false;
    for y in 0..height {
        for x in 0..width {
            if mask[y * width + x] != 0 {
                any = true;
                lo = (lo.0.min(x), lo.1.min(y));
                hi = (hi.0.max(x), hi.1.max(y));
            }
        }
    }
    any.then(|| BBox {
        x1: lo.0 as f64 / width as f64,
        y1: lo.1 as f64 / height as f64,
        x2: (hi.0 + 1) as f64 / width as f64,
        y2: (hi.1 + 1) as f64 / height as f64,
    })
}

pub fn boxes_from_mask_video(mask: &MaskVideo, object_name: &str) -> Result<BoxSequence> {
    let boxes: Vec<Option<BBox>> = (0..mask.frames)
        .map(|f| bbox_from_mask(mask.frame_slice(f), mask.height, mask.width))
        .collect();
    if boxes.iter().all(Option::is_none) {
        return Err(Error::EmptyPlan(format!(
            "mask for {object_name:?} is empty in every frame"
        )));
    }
    Ok(BoxSequence {
        object_name: object_name.to_string(),
        boxes,
    })
}

/// Renders the plan with `decimals` (2 or 3) fractional digits. Absent
/// frames are omitted.
pub fn serialize_layout(seq: &BoxSequence, decimals: usize) -> Result<String> {
    if !(2..=3).contains(&decimals) {
        return Err(Error::arg(format!("decimals must be 2 or 3, got {decimals}")));
    }
    if seq.present() == 0 {
        return Err(Error::EmptyPlan(format!("no boxes for {:?}", seq.object_name)));
    }
    let mut out = format!("Layouts of {} to be added: {{", seq.object_name);
    let mut first = true;
    for (i, b) in seq.boxes.iter().enumerate() {
        let Some(b) = b else { continue };
        if !first {
            out.push_str(", ");
        }
        first = false;
        write!(
            out,
            "Frame {}: [{:.p$}, {:.p$}, {:.p$}, {:.p$}]",
            i + 1,
            b.x1,
            b.y1,
            b.x2,
            b.y2,
            p = decimals
        )
        .unwrap();
    }
    out.push('}');
    Ok(out)
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn eat(&mut self, lit: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<()> {
        if self.eat(lit) {
            Ok(())
        } else {
            self.err(format!("expected {lit:?}"))
        }
    }

    fn lexeme(&mut self, accept: impl Fn(char) -> bool) -> &'a str {
        self.skip_ws();
        let rest = self.rest();
        let len = rest.find(|c: char| !accept(c)).unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }

    fn frame_number(&mut self) -> Result<usize> {
        let start = self.pos;
        let digits = self.lexeme(|c| c.is_ascii_digit());
        match digits.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => {
                self.pos = start;
                self.err("expected a frame number of at least 1")
            }
        }
    }

    fn coordinate(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let lex = self.lexeme(|c| c.is_ascii_digit() || c == '.' || c == '-' || c == '+');
        let value: f64 = match lex.parse() {
            Ok(v) if !lex.is_empty() => v,
            _ => {
                self.pos = start;
                return self.err("expected a decimal coordinate");
            }
        };
        if !(0.0..=1.0).contains(&value) {
            self.pos = start;
            return self.err(format!("coordinate {lex} outside [0, 1]"));
        }
        Ok(value)
    }
}

/// Parses a plan. Whitespace between tokens is free; a trailing comma and a
/// trailing `…`/`...` placeholder before the closing brace are accepted.
///
/// ```
/// let plan = mgspool::layout::parse_layout(
///     "Layouts of dog to be added: {Frame 1: [0.2, 0.0, 0.5, 0.7], Frame 3: [0.2, 0.1, 0.4, 0.65]}",
/// )
/// .unwrap();
/// assert_eq!(plan.frame_count(), 3);
/// assert!(plan.boxes[1].is_none());
/// ```
pub fn parse_layout(text: &str) -> Result<BoxSequence> {
    let mut cur = Cursor { text, pos: 0 };
    cur.skip_ws();
    let header_start = cur.pos;
    let Some(colon) = text[header_start..].find(':').map(|i| header_start + i) else {
        return cur.err("missing ':' after the layout header");
    };
    let words: Vec<&str> = text[header_start..colon].split_whitespace().collect();
    let name = match words.as_slice() {
        ["Layouts", "of", name @ .., "to", "be", "added"] if !name.is_empty() => name.join(" "),
        _ => return cur.err("expected \"Layouts of <name> to be added:\""),
    };
    cur.pos = colon + 1;
    cur.expect("{")?;

    let mut entries: Vec<(usize, BBox)> = Vec::new();
    loop {
        if cur.eat("}") {
            break;
        }
        if cur.eat("…") || cur.eat("...") {
            cur.eat(",");
            cur.expect("}")?;
            break;
        }
        let entry_pos = cur.pos;
        cur.expect("Frame")?;
        let frame = cur.frame_number()?;
        cur.expect(":")?;
        cur.expect("[")?;
        let mut c = [0f64; 4];
        for (i, slot) in c.iter_mut().enumerate() {
            if i > 0 {
                cur.expect(",")?;
            }
            *slot = cur.coordinate()?;
        }
        cur.expect("]")?;
        if c[2] < c[0] || c[3] < c[1] {
            cur.pos = entry_pos;
            cur.skip_ws();
            return cur.err(format!("frame {frame}: x2 < x1 or y2 < y1"));
        }
        if entries.iter().any(|(f, _)| *f == frame) {
            cur.pos = entry_pos;
            cur.skip_ws();
            return cur.err(format!("frame {frame} appears twice"));
        }
        entries.push((
            frame,
            BBox {
                x1: c[0],
                y1: c[1],
                x2: c[2],
                y2: c[3],
            },
        ));
        if !cur.eat(",") {
            cur.expect("}")?;
            break;
        }
    }
    cur.skip_ws();
    if cur.pos != text.len() {
        return cur.err("unexpected text after the closing brace");
    }
    if entries.is_empty() {
        return Err(Error::EmptyPlan(format!("no frames in the layout of {name:?}")));
    }
    let frame_count = entries.iter().map(|e| e.0).max().unwrap();
    let mut seq = BoxSequence::new(name, frame_count);
    for (f, b) in entries {
        seq.boxes[f - 1] = Some(b);
    }
    Ok(seq)
}

/// Fills every missing frame: interior gaps by per-coordinate linear
/// interpolation between the nearest present frames, leading and trailing
/// gaps by copying the nearest present box.
pub fn interpolate_boxes(seq: &BoxSequence) -> Result<BoxSequence> {
    let present: Vec<usize> = (0..seq.frame_count()).filter(|&i| seq.boxes[i].is_some()).collect();
    let (Some(&first), Some(&last)) = (present.first(), present.last()) else {
        return Err(Error::EmptyPlan(format!("no boxes for {:?}", seq.object_name)));
    };
    let mut out = seq.clone();
    for i in 0..first {
        out.boxes[i] = seq.boxes[first];
    }
    for i in last + 1..seq.frame_count() {
        out.boxes[i] = seq.boxes[last];
    }
    for pair in present.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (ba, bb) = (seq.boxes[a].unwrap().coords(), seq.boxes[b].unwrap().coords());
        for i in a + 1..b {
            let s = (i - a) as f64 / (b - a) as f64;
            let c: Vec<f64> = (0..4).map(|j| ba[j] + s * (bb[j] - ba[j])).collect();
            out.boxes[i] = Some(BBox {
                x1: c[0],
                y1: c[1],
                x2: c[2],
                y2: c[3],
            });
        }
    }
    Ok(out)
}

/// Pixel span `[start, end)` covered by `[lo, hi]` on an axis of `n`
/// pixels. Edges round to the nearest pixel boundary; a span that rounds to
/// nothing keeps the single pixel under its midpoint.
fn pixel_span(lo: f64, hi: f64, n: usize) -> (usize, usize) {
    let s = ((lo * n as f64).round() as usize).min(n);
    let e = ((hi * n as f64).round() as usize).min(n);
    if e > s {
        (s, e)
    } else {
        let mid = (((lo + hi) * 0.5 * n as f64).floor() as usize).min(n - 1);
        (mid, mid + 1)
    }
}

/// Binary mask of every box; frames without a box stay empty.
pub fn rasterize_boxes(seq: &BoxSequence, height: usize, width: usize) -> Result<MaskVideo> {
    if height == 0 || width == 0 || seq.frame_count() == 0 {
        return Err(Error::arg("raster size and frame count must be at least 1"));
    }
    let mut mask = MaskVideo::zeros(seq.frame_count(), height, width);
    for (f, b) in seq.boxes.iter().enumerate() {
        let Some(b) = b else { continue };
        let (x0, x1) = pixel_span(b.x1, b.x2, width);
        let (y0, y1) = pixel_span(b.y1, b.y2, height);
        for y in y0..y1 {
            for x in x0..x1 {
                mask.set(f, y, x, 1);
            }
        }
    }
    Ok(mask)
}

/// Intersection over union; 0 when the union has no area.
///
/// ```
/// use mgspool::layout::{iou, BBox};
///
/// let a = BBox::new(0.0, 0.0, 0.5, 0.5).unwrap();
/// let b = BBox::new(0.25, 0.25, 0.75, 0.75).unwrap();
/// assert!((iou(&a, &b) - 1.0 / 7.0).abs() < 1e-12);
/// assert_eq!(iou(&a, &a), 1.0);
/// ```
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let ih = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Mean IoU over frames where both plans have a box.
pub fn sequence_iou(a: &BoxSequence, b: &BoxSequence) -> Result<f64> {
    let scores: Vec<f64> = a
        .boxes
        .iter()
        .zip(&b.boxes)
        .filter_map(|(x, y)| Some(iou(x.as_ref()?, y.as_ref()?)))
        .collect();
    if scores.is_empty() {
        return Err(Error::arg("the plans share no frames"));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// One JSON-lines record per plan.
pub fn to_json_line(seq: &BoxSequence) -> Result<String> {
    Ok(serde_json::to_string(seq)?)
}
