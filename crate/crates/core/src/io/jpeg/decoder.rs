//! Sequential (baseline and extended, 8-bit, Huffman) JPEG decoder.
//!
//! Sample reconstruction follows the IJG integer pipeline: islow IDCT,
//! triangle ("fancy") chroma upsampling with edge replication, and the
//! fixed-point YCbCr to RGB transform. Output is bit-exact with libjpeg
//! under its default decompression settings.

use super::huffman::{next_marker, BitReader, HuffmanTable};
use super::idct::idct_islow;
use crate::image::{Image, ImageSize};
use crate::io::{DecodedImage, IoError};

/// Natural-order index of each zigzag position.
const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27,
    20, 13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58,
    59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

fn corrupt(msg: &str) -> IoError {
    IoError::CorruptStream(msg.into())
}

fn unsupported(msg: impl Into<String>) -> IoError {
    IoError::UnsupportedJpegFeature(msg.into())
}

struct Component {
    id: u8,
    h: usize,
    v: usize,
    tq: usize,
    // full-resolution components decode straight into the output image;
    // subsampled ones go to `plane`, bw blocks wide
    direct: bool,
    bw: usize,
    // downsampled size in samples
    dw: usize,
    dh: usize,
    plane: Vec<u8>,
    dc_pred: i32,
    dc_table: usize,
    ac_table: usize,
    seen: bool,
}

impl Component {
    fn stride(&self) -> usize {
        self.bw * 8
    }

    fn row(&self, y: usize) -> &[u8] {
        let s = self.stride();
        &self.plane[y * s..(y + 1) * s]
    }
}

struct Frame {
    width: usize,
    hmax: usize,
    vmax: usize,
    mcux: usize,
    mcuy: usize,
    components: Vec<Component>,
    output: Output,
}

enum Output {
    Gray(Image<u8, 1>),
    Color(Image<u8, 3>),
}

/// Interleaved output samples a full-resolution block is written into.
struct Sink<'o> {
    samples: &'o mut [u8],
    width: usize,
    height: usize,
    channels: usize,
}

impl Output {
    fn sink(&mut self) -> Sink<'_> {
        match self {
            Output::Gray(img) => Sink {
                width: img.width(),
                height: img.height(),
                channels: 1,
                samples: img.as_slice_mut(),
            },
            Output::Color(img) => Sink {
                width: img.width(),
                height: img.height(),
                channels: 3,
                samples: img.as_slice_mut(),
            },
        }
    }
}

#[derive(Default)]
struct Markers {
    jfif: bool,
    adobe_transform: Option<u8>,
}

struct Decoder<'a> {
    data: &'a [u8],
    pos: usize,
    qt: [Option<[u16; 64]>; 4],
    dc: [Option<HuffmanTable>; 4],
    ac: [Option<HuffmanTable>; 4],
    restart_interval: usize,
    frame: Option<Frame>,
    markers: Markers,
}

/// Decodes a sequential JPEG stream to gray or RGB.
pub(super) fn decode_sequential(data: &[u8]) -> Result<DecodedImage, IoError> {
    let mut d = Decoder {
        data,
        pos: 0,
        qt: [None; 4],
        dc: Default::default(),
        ac: Default::default(),
        restart_interval: 0,
        frame: None,
        markers: Markers::default(),
    };
    d.run()?;
    d.finish()
}

impl<'a> Decoder<'a> {
    fn segment(&mut self) -> Result<&'a [u8], IoError> {
        let data = self.data;
        let len_bytes = data
            .get(self.pos..self.pos + 2)
            .ok_or_else(|| corrupt("truncated marker segment"))?;
        let len = u16::from_be_bytes([len_bytes[0], len_bytes[1]]) as usize;
        if len < 2 {
            return Err(corrupt("invalid segment length"));
        }
        let body = data
            .get(self.pos + 2..self.pos + len)
            .ok_or_else(|| corrupt("truncated marker segment"))?;
        self.pos += len;
        Ok(body)
    }

    fn run(&mut self) -> Result<(), IoError> {
        if !self.data.starts_with(&[0xff, 0xd8]) {
            return Err(corrupt("missing JPEG SOI marker"));
        }
        self.pos = 2;
        loop {
            let (marker, after) =
                next_marker(self.data, self.pos).ok_or_else(|| corrupt("missing EOI marker"))?;
            self.pos = after;
            match marker {
                0xd9 => return Ok(()),
                0xc0 | 0xc1 => {
                    let body = self.segment()?;
                    self.read_frame(body)?;
                }
                0xc2 => return Err(unsupported("progressive coding")),
                0xc3 | 0xc5..=0xc7 | 0xc9..=0xcb | 0xcd..=0xcf => {
                    return Err(unsupported(format!("SOF marker 0x{marker:02x}")))
                }
                0xc4 => {
                    let body = self.segment()?;
                    self.read_huffman(body)?;
                }
                0xdb => {
                    let body = self.segment()?;
                    self.read_quant(body)?;
                }
                0xdd => {
                    let body = self.segment()?;
                    let [hi, lo] = body else {
                        return Err(corrupt("invalid DRI segment"));
                    };
                    self.restart_interval = u16::from_be_bytes([*hi, *lo]) as usize;
                }
                0xda => {
                    let body = self.segment()?;
                    self.read_scan(body)?;
                }
                0xdc => return Err(unsupported("DNL marker")),
                0xd8 => return Err(corrupt("unexpected SOI marker")),
                0x01 | 0xd0..=0xd7 => {}
                0xe0 => {
                    let body = self.segment()?;
                    if body.starts_with(b"JFIF\0") {
                        self.markers.jfif = true;
                    }
                }
                0xee => {
                    let body = self.segment()?;
                    if body.len() >= 12 && body.starts_with(b"Adobe") {
                        self.markers.adobe_transform = Some(body[11]);
                    }
                }
                _ => {
                    self.segment()?;
                }
            }
        }
    }

    fn read_frame(&mut self, body: &[u8]) -> Result<(), IoError> {
        if self.frame.is_some() {
            return Err(corrupt("multiple frame headers"));
        }
        if body.len() < 6 {
            return Err(corrupt("truncated frame header"));
        }
        if body[0] != 8 {
            return Err(unsupported(format!("{}-bit sample precision", body[0])));
        }
        let height = u16::from_be_bytes([body[1], body[2]]) as usize;
        let width = u16::from_be_bytes([body[3], body[4]]) as usize;
        if width == 0 || height == 0 {
            return Err(corrupt("zero frame dimension"));
        }
        let n = body[5] as usize;
        if !matches!(n, 1 | 3) {
            return Err(unsupported(format!("{n}-component images")));
        }
        if body.len() != 6 + 3 * n {
            return Err(corrupt("frame header length mismatch"));
        }
        let mut specs = Vec::with_capacity(n);
        for c in body[6..].chunks_exact(3) {
            let (h, v, tq) = ((c[1] >> 4) as usize, (c[1] & 15) as usize, c[2] as usize);
            if !(1..=4).contains(&h) || !(1..=4).contains(&v) || tq > 3 {
                return Err(corrupt("invalid component parameters"));
            }
            specs.push((c[0], h, v, tq));
        }
        // a lone component is always coded one block per MCU
        if n == 1 {
            specs[0].1 = 1;
            specs[0].2 = 1;
        }
        let hmax = specs.iter().map(|s| s.1).max().unwrap_or(1);
        let vmax = specs.iter().map(|s| s.2).max().unwrap_or(1);
        if specs.iter().any(|s| hmax % s.1 != 0 || vmax % s.2 != 0) {
            return Err(unsupported("non-integer chroma subsampling ratio"));
        }
        let mcux = width.div_ceil(8 * hmax);
        let mcuy = height.div_ceil(8 * vmax);

        // every block costs at least two bits of entropy data, which bounds
        // the allocation a forged header can request
        let blocks: usize = specs.iter().map(|s| mcux * s.1 * mcuy * s.2).sum();
        let remaining = self.data.len().saturating_sub(self.pos);
        if blocks / 4 > remaining {
            return Err(corrupt("frame larger than the stream can encode"));
        }

        let size = ImageSize::new(width, height)?;
        let output = if n == 1 {
            Output::Gray(Image::from_size_val(size, 0)?)
        } else {
            Output::Color(Image::from_size_val(size, 0)?)
        };
        let components = specs
            .into_iter()
            .map(|(id, h, v, tq)| {
                let (bw, bh) = (mcux * h, mcuy * v);
                let direct = h == hmax && v == vmax;
                Component {
                    id,
                    h,
                    v,
                    tq,
                    direct,
                    bw,
                    dw: (width * h).div_ceil(hmax),
                    dh: (height * v).div_ceil(vmax),
                    plane: if direct { Vec::new() } else { vec![0; bw * 8 * bh * 8] },
                    dc_pred: 0,
                    dc_table: 0,
                    ac_table: 0,
                    seen: false,
                }
            })
            .collect();
        self.frame = Some(Frame {
            width,
            hmax,
            vmax,
            mcux,
            mcuy,
            components,
            output,
        });
        Ok(())
    }

    fn read_quant(&mut self, mut body: &[u8]) -> Result<(), IoError> {
        while let Some((&pq_tq, rest)) = body.split_first() {
            let (pq, tq) = (pq_tq >> 4, (pq_tq & 15) as usize);
            if tq > 3 || pq > 1 {
                return Err(corrupt("invalid quantization table header"));
            }
            let size = if pq == 0 { 64 } else { 128 };
            let raw = rest
                .get(..size)
                .ok_or_else(|| corrupt("truncated quantization table"))?;
            let mut table = [0u16; 64];
            for (k, &natural) in ZIGZAG.iter().enumerate() {
                table[natural] = if pq == 0 {
                    raw[k] as u16
                } else {
                    u16::from_be_bytes([raw[2 * k], raw[2 * k + 1]])
                };
            }
            self.qt[tq] = Some(table);
            body = &rest[size..];
        }
        Ok(())
    }

    fn read_huffman(&mut self, mut body: &[u8]) -> Result<(), IoError> {
        while let Some((&tc_th, rest)) = body.split_first() {
            let (tc, th) = (tc_th >> 4, (tc_th & 15) as usize);
            if tc > 1 || th > 3 {
                return Err(corrupt("invalid huffman table header"));
            }
            let counts: [u8; 16] = rest
                .get(..16)
                .ok_or_else(|| corrupt("truncated huffman table"))?
                .try_into()
                .expect("16-byte slice");
            let total: usize = counts.iter().map(|&c| c as usize).sum();
            let values = rest
                .get(16..16 + total)
                .ok_or_else(|| corrupt("truncated huffman table"))?;
            let table = HuffmanTable::new(&counts, values)?;
            if tc == 0 {
                self.dc[th] = Some(table);
            } else {
                self.ac[th] = Some(table);
            }
            body = &rest[16 + total..];
        }
        Ok(())
    }

    fn read_scan(&mut self, body: &[u8]) -> Result<(), IoError> {
        let frame = self
            .frame
            .as_mut()
            .ok_or_else(|| corrupt("scan before frame header"))?;
        let ns = *body.first().ok_or_else(|| corrupt("empty scan header"))? as usize;
        if ns == 0 || ns > 4 || body.len() != 1 + 2 * ns + 3 {
            return Err(corrupt("invalid scan header"));
        }
        let mut scan = Vec::with_capacity(ns);
        for sel in body[1..1 + 2 * ns].chunks_exact(2) {
            let ci = frame
                .components
                .iter()
                .position(|c| c.id == sel[0])
                .ok_or_else(|| corrupt("scan references an unknown component"))?;
            if scan.contains(&ci) {
                return Err(corrupt("component repeated in scan"));
            }
            let comp = &mut frame.components[ci];
            comp.dc_table = (sel[1] >> 4) as usize;
            comp.ac_table = (sel[1] & 15) as usize;
            if comp.dc_table > 3 || comp.ac_table > 3 {
                return Err(corrupt("invalid huffman table selector"));
            }
            scan.push(ci);
        }
        let tail = &body[1 + 2 * ns..];
        if tail != [0, 63, 0] {
            return Err(corrupt("spectral selection in a sequential scan"));
        }
        let blocks_per_mcu: usize = scan
            .iter()
            .map(|&ci| frame.components[ci].h * frame.components[ci].v)
            .sum();
        if ns > 1 && blocks_per_mcu > 10 {
            return Err(corrupt("too many blocks per MCU"));
        }

        let mut qts = Vec::with_capacity(ns);
        for &ci in &scan {
            let comp = &mut frame.components[ci];
            let qt = self.qt[comp.tq].ok_or_else(|| corrupt("missing quantization table"))?;
            if self.dc[comp.dc_table].is_none() || self.ac[comp.ac_table].is_none() {
                return Err(corrupt("missing huffman table"));
            }
            comp.dc_pred = 0;
            comp.seen = true;
            qts.push(qt);
        }

        let mut reader = BitReader::new(self.data, self.pos);
        let mut ctx = BlockContext {
            reader: &mut reader,
            dc: &self.dc,
            ac: &self.ac,
        };
        let ri = self.restart_interval;
        let mut decode_mcu = |frame: &mut Frame, m: usize, total: usize| -> Result<(), IoError> {
            if ri > 0 && m > 0 && m % ri == 0 && m < total {
                ctx.reader.restart()?;
                for &ci in &scan {
                    frame.components[ci].dc_pred = 0;
                }
            }
            let mut sink = frame.output.sink();
            if scan.len() == 1 {
                let ci = scan[0];
                let comp = &mut frame.components[ci];
                let nbx = comp.dw.div_ceil(8);
                ctx.block(comp, ci, &qts[0], m % nbx, m / nbx, &mut sink)
            } else {
                let (mx, my) = (m % frame.mcux, m / frame.mcux);
                for (k, &ci) in scan.iter().enumerate() {
                    let comp = &mut frame.components[ci];
                    for by in 0..comp.v {
                        for bx in 0..comp.h {
                            let (bx, by) = (mx * comp.h + bx, my * comp.v + by);
                            ctx.block(comp, ci, &qts[k], bx, by, &mut sink)?;
                        }
                    }
                }
                Ok(())
            }
        };
        let total = if scan.len() == 1 {
            let c = &frame.components[scan[0]];
            c.dw.div_ceil(8) * c.dh.div_ceil(8)
        } else {
            frame.mcux * frame.mcuy
        };
        for m in 0..total {
            decode_mcu(frame, m, total)?;
        }
        reader.check_overrun()?;
        self.pos = reader.position();
        Ok(())
    }

    fn finish(self) -> Result<DecodedImage, IoError> {
        let mut frame = self.frame.ok_or_else(|| corrupt("no frame header"))?;
        if frame.components.iter().any(|c| !c.seen) {
            return Err(corrupt("component without scan data"));
        }
        let img = match frame.output {
            Output::Gray(img) => return Ok(DecodedImage::Gray8(img)),
            Output::Color(ref mut img) => img,
        };
        let ycc = is_ycc(&self.markers, &frame.components);
        let width = frame.width;
        let mut row = vec![0u8; width];
        for (y, dst) in img.as_slice_mut().chunks_exact_mut(width * 3).enumerate() {
            for (ch, comp) in frame.components.iter().enumerate() {
                if comp.direct {
                    continue;
                }
                upsample_row(comp, frame.hmax / comp.h, frame.vmax / comp.v, y, &mut row);
                for (px, &v) in dst.chunks_exact_mut(3).zip(&row) {
                    px[ch] = v;
                }
            }
            if ycc {
                for px in dst.chunks_exact_mut(3) {
                    let rgb = ycc_to_rgb(px[0], px[1], px[2]);
                    px.copy_from_slice(&rgb);
                }
            }
        }
        let Output::Color(img) = frame.output else {
            unreachable!("gray frames returned above")
        };
        Ok(DecodedImage::Rgb8(img))
    }
}

struct BlockContext<'r, 'a, 't> {
    reader: &'r mut BitReader<'a>,
    dc: &'t [Option<HuffmanTable>; 4],
    ac: &'t [Option<HuffmanTable>; 4],
}

impl BlockContext<'_, '_, '_> {
    fn block(
        &mut self,
        comp: &mut Component,
        channel: usize,
        qt: &[u16; 64],
        bx: usize,
        by: usize,
        sink: &mut Sink<'_>,
    ) -> Result<(), IoError> {
        let dc = self.dc[comp.dc_table].as_ref().expect("checked at scan start");
        let ac = self.ac[comp.ac_table].as_ref().expect("checked at scan start");
        let mut coef = [0i32; 64];

        let t = self.reader.decode(dc)? as u32;
        let diff = self.reader.receive_extend(t)?;
        comp.dc_pred = comp.dc_pred.wrapping_add(diff);
        // coefficients are 16-bit in the reference decoder
        coef[0] = (comp.dc_pred as i16) as i32 * qt[0] as i32;

        let mut k = 1;
        while k < 64 {
            let rs = self.reader.decode(ac)?;
            let (r, s) = ((rs >> 4) as usize, (rs & 15) as u32);
            if s != 0 {
                k += r;
                if k > 63 {
                    return Err(corrupt("AC coefficient index out of range"));
                }
                let v = self.reader.receive_extend(s)?;
                let z = ZIGZAG[k];
                coef[z] = (v as i16) as i32 * qt[z] as i32;
                k += 1;
            } else if r == 15 {
                k += 16;
            } else {
                break;
            }
        }

        if !comp.direct {
            let stride = comp.stride();
            let offset = by * 8 * stride + bx * 8;
            idct_islow(&coef, &mut comp.plane[offset..], stride);
            return Ok(());
        }
        let (x0, y0) = (bx * 8, by * 8);
        if x0 >= sink.width || y0 >= sink.height {
            return Ok(());
        }
        let mut samples = [0u8; 64];
        idct_islow(&coef, &mut samples, 8);
        let cols = (sink.width - x0).min(8);
        let rows = (sink.height - y0).min(8);
        let nch = sink.channels;
        for r in 0..rows {
            let start = ((y0 + r) * sink.width + x0) * nch + channel;
            let dst = &mut sink.samples[start..];
            for (c, &v) in samples[r * 8..r * 8 + cols].iter().enumerate() {
                dst[c * nch] = v;
            }
        }
        Ok(())
    }
}

/// Decides whether three components carry YCbCr (converted) or RGB.
fn is_ycc(markers: &Markers, components: &[Component]) -> bool {
    if markers.jfif {
        return true;
    }
    if let Some(t) = markers.adobe_transform {
        return t != 0;
    }
    let ids: Vec<u8> = components.iter().map(|c| c.id).collect();
    ids != b"RGB"
}

/// Fixed-point YCbCr to RGB with 16 fractional bits.
#[inline]
fn ycc_to_rgb(y: u8, cb: u8, cr: u8) -> [u8; 3] {
    const HALF: i32 = 1 << 15;
    let (y, cb, cr) = (y as i32, cb as i32 - 128, cr as i32 - 128);
    let r = y + ((91881 * cr + HALF) >> 16);
    let g = y + ((-22554 * cb - 46802 * cr + HALF) >> 16);
    let b = y + ((116130 * cb + HALF) >> 16);
    [r.clamp(0, 255) as u8, g.clamp(0, 255) as u8, b.clamp(0, 255) as u8]
}

/// Writes full-resolution row `y` of `comp` into `out`.
///
/// 2:1 ratios use triangle interpolation (3/4 nearer sample, 1/4 farther)
/// with replicated edges; other ratios replicate samples.
fn upsample_row(comp: &Component, hr: usize, vr: usize, y: usize, out: &mut [u8]) {
    let w = out.len();
    let fancy_h = hr == 2 && comp.dw > 2;
    match (hr, vr) {
        (1, 1) => out.copy_from_slice(&comp.row(y)[..w]),
        (2, 1) if fancy_h => {
            let row = comp.row(y);
            let last = comp.dw - 1;
            for (x, o) in out.iter_mut().enumerate() {
                let i = x / 2;
                let near = 3 * row[i] as u32;
                *o = if x % 2 == 0 {
                    (near + row[i.saturating_sub(1)] as u32 + 1) >> 2
                } else {
                    (near + row[(i + 1).min(last)] as u32 + 2) >> 2
                } as u8;
            }
        }
        (1, 2) => {
            let (near, far) = vertical_pair(comp, y);
            let bias = if y % 2 == 0 { 1 } else { 2 };
            for (x, o) in out.iter_mut().enumerate() {
                *o = ((3 * near[x] as u32 + far[x] as u32 + bias) >> 2) as u8;
            }
        }
        (2, 2) if fancy_h => {
            let (near, far) = vertical_pair(comp, y);
            let last = comp.dw - 1;
            let colsum = |i: usize| 3 * near[i] as u32 + far[i] as u32;
            for (x, o) in out.iter_mut().enumerate() {
                let i = x / 2;
                let this = 3 * colsum(i);
                *o = if x % 2 == 0 {
                    (this + colsum(i.saturating_sub(1)) + 8) >> 4
                } else {
                    (this + colsum((i + 1).min(last)) + 7) >> 4
                } as u8;
            }
        }
        _ => {
            let row = comp.row(y / vr);
            for (x, o) in out.iter_mut().enumerate() {
                *o = row[x / hr];
            }
        }
    }
}

/// Nearer and farther source rows for vertical 2:1 interpolation of output
/// row `y`, replicating the first and last rows at the edges.
fn vertical_pair(comp: &Component, y: usize) -> (&[u8], &[u8]) {
    let i = y / 2;
    let j = if y % 2 == 0 {
        i.saturating_sub(1)
    } else {
        (i + 1).min(comp.dh - 1)
    };
    (comp.row(i), comp.row(j))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ycc_neutral_gray() {
        assert_eq!(ycc_to_rgb(77, 128, 128), [77, 77, 77]);
        assert_eq!(ycc_to_rgb(255, 0, 255), [255, 208, 28]);
    }

    #[test]
    fn zigzag_is_permutation() {
        let mut seen = [false; 64];
        for &z in &ZIGZAG {
            seen[z] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    fn comp_with_plane(dw: usize, dh: usize, plane: Vec<u8>, bw: usize) -> Component {
        Component {
            id: 2,
            h: 1,
            v: 1,
            tq: 0,
            direct: false,
            bw,
            dw,
            dh,
            plane,
            dc_pred: 0,
            dc_table: 0,
            ac_table: 0,
            seen: true,
        }
    }

    #[test]
    fn triangle_upsampling_h2v1() {
        let mut plane = vec![0u8; 64];
        plane[..4].copy_from_slice(&[0, 100, 200, 40]);
        let comp = comp_with_plane(4, 1, plane, 1);
        let mut out = [0u8; 8];
        upsample_row(&comp, 2, 1, 0, &mut out);
        // out[2i] = (3a_i + a_{i-1} + 1) / 4, out[2i+1] = (3a_i + a_{i+1} + 2) / 4
        assert_eq!(out, [0, 25, 75, 125, 175, 160, 80, 40]);
    }

    #[test]
    fn narrow_components_replicate() {
        let mut plane = vec![0u8; 64];
        plane[..2].copy_from_slice(&[10, 90]);
        let comp = comp_with_plane(2, 1, plane, 1);
        let mut out = [0u8; 4];
        upsample_row(&comp, 2, 1, 0, &mut out);
        assert_eq!(out, [10, 10, 90, 90]);
    }

    #[test]
    fn missing_eoi_is_corrupt() {
        assert!(matches!(
            decode_sequential(&[0xff, 0xd8, 0xff, 0xfe, 0, 3, 0]),
            Err(IoError::CorruptStream(_))
        ));
    }
}
