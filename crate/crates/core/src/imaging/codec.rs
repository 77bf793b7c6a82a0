use std::cell::Cell;
use std::io::{BufRead, Cursor, Read, Seek, SeekFrom};
use std::path::Path;
use std::rc::Rc;

use super::{to_grayscale, Image};
use crate::error::{Error, Result};

const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Cursor that records how far into the stream the decoder got, so decode
/// failures can name a byte offset.
struct Tracked<'a> {
    inner: Cursor<&'a [u8]>,
    high_water: Rc<Cell<u64>>,
}

impl Tracked<'_> {
    fn mark(&self) {
        let p = self.inner.position();
        if p > self.high_water.get() {
            self.high_water.set(p);
        }
    }
}

impl Read for Tracked<'_> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.mark();
        Ok(n)
    }
}

impl BufRead for Tracked<'_> {
    fn fill_buf(&mut self) -> std::io::Result<&[u8]> {
        self.inner.fill_buf()
    }

    fn consume(&mut self, amt: usize) {
        self.inner.consume(amt);
        self.mark();
    }
}

impl Seek for Tracked<'_> {
    fn seek(&mut self, pos: SeekFrom) -> std::io::Result<u64> {
        let p = self.inner.seek(pos)?;
        self.mark();
        Ok(p)
    }
}

pub fn decode_png(bytes: &[u8]) -> Result<Image> {
    let high_water = Rc::new(Cell::new(0));
    let fail = |e: png::DecodingError, hw: &Rc<Cell<u64>>| Error::Decode {
        offset: hw.get(),
        message: e.to_string(),
    };
    let mut decoder = png::Decoder::new(Tracked {
        inner: Cursor::new(bytes),
        high_water: high_water.clone(),
    });
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| fail(e, &high_water))?;
    let size = reader.output_buffer_size().ok_or_else(|| Error::Decode {
        offset: high_water.get(),
        message: "image too large".into(),
    })?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| fail(e, &high_water))?;
    buf.truncate(info.buffer_size());
    let (w, h) = (info.width, info.height);
    let n = w as usize * h as usize;
    let (channels, pixels) = match info.color_type {
        png::ColorType::Grayscale => (1, buf),
        png::ColorType::Rgb => (3, buf),
        png::ColorType::GrayscaleAlpha => (1, buf.chunks_exact(2).map(|p| p[0]).collect()),
        png::ColorType::Rgba => (
            3,
            buf.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
        ),
        png::ColorType::Indexed => {
            return Err(Error::Decode {
                offset: high_water.get(),
                message: "palette image was not expanded".into(),
            })
        }
    };
    debug_assert_eq!(pixels.len(), n * channels as usize);
    Image::new(w, h, channels, pixels)
}

pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width(), img.height());
        enc.set_color(if img.is_grayscale() {
            png::ColorType::Grayscale
        } else {
            png::ColorType::Rgb
        });
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Encode(e.to_string()))?;
        writer
            .write_image_data(img.pixels())
            .map_err(|e| Error::Encode(e.to_string()))?;
        writer.finish().map_err(|e| Error::Encode(e.to_string()))?;
    }
    Ok(out)
}

/// Decodes PNG or JPEG, chosen by the stream's magic bytes.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    if bytes.starts_with(PNG_MAGIC) {
        return decode_png(bytes);
    }
    if bytes.starts_with(&[0xFF, 0xD8]) {
        let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Jpeg)
            .map_err(|e| Error::Decode {
                offset: 0,
                message: e.to_string(),
            })?;
        let rgb = decoded.to_rgb8();
        let (w, h) = rgb.dimensions();
        return Image::new(w, h, 3, rgb.into_raw());
    }
    // Let the PNG decoder report where the signature check failed.
    decode_png(bytes)
}

pub fn load_image(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// Loads a frame and converts it to grayscale.
pub fn load_gray(path: &Path) -> Result<Image> {
    load_image(path).map(|img| to_grayscale(&img))
}

/// Width and height from the file header, without decoding pixels.
pub fn image_dimensions(path: &Path) -> Result<(u32, u32)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = std::io::BufReader::new(file);
    let mut head = [0u8; 24];
    let n = read_up_to(&mut reader, &mut head).map_err(|e| Error::io(path, e))?;
    if n >= 24 && head.starts_with(PNG_MAGIC) && &head[12..16] == b"IHDR" {
        let w = u32::from_be_bytes([head[16], head[17], head[18], head[19]]);
        let h = u32::from_be_bytes([head[20], head[21], head[22], head[23]]);
        return Ok((w, h));
    }
    if n >= 2 && head.starts_with(&[0xFF, 0xD8]) {
        reader.seek(SeekFrom::Start(0)).map_err(|e| Error::io(path, e))?;
        return image::ImageReader::with_format(reader, image::ImageFormat::Jpeg)
            .into_dimensions()
            .map_err(|e| Error::Decode {
                offset: 0,
                message: e.to_string(),
            });
    }
    Err(Error::Decode {
        offset: 0,
        message: format!("{}: not a PNG or JPEG file", path.display()),
    })
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..])? {
            0 => break,
            k => n += k,
        }
    }
    Ok(n)
}

pub fn save_png(img: &Image, path: &Path) -> Result<()> {
    let bytes = encode_png(img)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
