// 5x7 digit glyphs, one byte per row, bit 4 is the leftmost column.
const DIGITS: [[u8; 7]; 10] = [
    [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E], // 0
    [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E], // 1
    [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F], // 2
    [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E], // 3
    [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02], // 4
    [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E], // 5
    [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E], // 6
    [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08], // 7
    [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E], // 8
    [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C], // 9
];

pub(crate) const GLYPH_W: usize = 5;
pub(crate) const GLYPH_H: usize = 7;
pub(crate) const SCALE: usize = 2;
/// Gap between glyphs and around the label, in output pixels.
pub(crate) const PAD: usize = 2;

/// Size in pixels of the black box holding `text` (digits only).
pub(crate) fn label_size(text: &str) -> (usize, usize) {
    let n = text.len();
    let w = PAD + n * GLYPH_W * SCALE + n.saturating_sub(1) * PAD + PAD;
    let h = PAD + GLYPH_H * SCALE + PAD;
    (w, h)
}

/// Calls `set(x, y, on)` for every pixel of the label box, relative to its
/// top-left corner. `on` is true for glyph pixels.
pub(crate) fn render(text: &str, mut set: impl FnMut(usize, usize, bool)) {
    let (bw, bh) = label_size(text);
    for y in 0..bh {
        for x in 0..bw {
            set(x, y, false);
        }
    }
    for (i, ch) in text.bytes().enumerate() {
        let glyph = &DIGITS[(ch - b'0') as usize];
        let x0 = PAD + i * (GLYPH_W * SCALE + PAD);
        for (gy, row) in glyph.iter().enumerate() {
            for gx in 0..GLYPH_W {
                if row & (0x10 >> gx) == 0 {
                    continue;
                }
                for sy in 0..SCALE {
                    for sx in 0..SCALE {
                        set(x0 + gx * SCALE + sx, PAD + gy * SCALE + sy, true);
                    }
                }
            }
        }
    }
}
