//! `LUGR` grid files: a fixed little-endian header followed by row-major f32
//! channels.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "LUGR"
//!      4     2  version (1)
//!      6     2  dtype tag (1 = f32)
//!      8    12  n_channels, height, width (u32 each)
//!     20     8  pixel pitch, nm (f64)
//!     28    16  z_min, z_max, nm (f64 each)
//!     44     -  payload: channel-major, then row-major f32
//! ```

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};
use ndarray::Array2;

use crate::codec::{ComplexMapPair, UPSAMPLE};
use crate::error::{Error, FormatError, Result};
use crate::sim::Frame;

pub const MAGIC: [u8; 4] = *b"LUGR";
pub const VERSION: u16 = 1;
pub const DTYPE_F32: u16 = 1;
pub const HEADER_LEN: usize = 44;

#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub n_channels: u32,
    pub height: u32,
    pub width: u32,
    /// Spacing of this grid's own samples.
    pub pixel_pitch: f64,
    pub z_range: (f64, f64),
    pub data: Vec<f32>,
}

impl GridFile {
    pub fn channel_len(&self) -> usize {
        self.height as usize * self.width as usize
    }

    pub fn expected_len(&self) -> usize {
        self.n_channels as usize * self.channel_len()
    }

    pub fn channel(&self, k: usize) -> Result<Array2<f32>> {
        if k >= self.n_channels as usize {
            return Err(Error::ShapeMismatch(format!("channel {k} of a {}-channel grid", self.n_channels)));
        }
        let n = self.channel_len();
        Ok(Array2::from_shape_vec((self.height as usize, self.width as usize), self.data[k * n..(k + 1) * n].to_vec())
            .expect("length checked on construction"))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        assert_eq!(self.data.len(), self.expected_len(), "grid payload does not match its dims");
        w.write_all(&MAGIC)?;
        w.write_u16::<LittleEndian>(VERSION)?;
        w.write_u16::<LittleEndian>(DTYPE_F32)?;
        for d in [self.n_channels, self.height, self.width] {
            w.write_u32::<LittleEndian>(d)?;
        }
        for v in [self.pixel_pitch, self.z_range.0, self.z_range.1] {
            w.write_f64::<LittleEndian>(v)?;
        }
        let mut buf = vec![0u8; 4 * self.data.len()];
        LittleEndian::write_f32_into(&self.data, &mut buf);
        w.write_all(&buf)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        if bytes.len() < HEADER_LEN {
            // Report a wrong magic before a short header when both apply.
            if bytes.len() >= 4 && bytes[..4] != MAGIC {
                return Err(FormatError::BadMagic {
                    found: bytes[..4].try_into().unwrap(),
                });
            }
            return Err(FormatError::TruncatedHeader {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        let magic: [u8; 4] = bytes[..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(FormatError::BadMagic { found: magic });
        }
        let version = LittleEndian::read_u16(&bytes[4..6]);
        if version != VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        let dtype = LittleEndian::read_u16(&bytes[6..8]);
        if dtype != DTYPE_F32 {
            return Err(FormatError::UnsupportedDtype(dtype));
        }
        let dim = |o: usize| LittleEndian::read_u32(&bytes[o..o + 4]);
        let float = |o: usize| LittleEndian::read_f64(&bytes[o..o + 8]);
        let mut grid = GridFile {
            n_channels: dim(8),
            height: dim(12),
            width: dim(16),
            pixel_pitch: float(20),
            z_range: (float(28), float(36)),
            data: Vec::new(),
        };
        let expected = grid.expected_len();
        let payload = &bytes[HEADER_LEN..];
        if payload.len() < 4 * expected {
            return Err(FormatError::TruncatedPayload {
                expected,
                found_bytes: payload.len(),
            });
        }
        if payload.len() > 4 * expected {
            return Err(FormatError::TrailingBytes {
                extra: payload.len() - 4 * expected,
            });
        }
        grid.data = vec![0.0; expected];
        LittleEndian::read_f32_into(payload, &mut grid.data);
        Ok(grid)
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| Error::io("<stream>", e))?;
        Ok(Self::from_bytes(&bytes)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_bytes(&bytes)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    /// One-channel grid of a camera frame. The frame's pitch is taken from x.
    pub fn from_frame(frame: &Frame, z_range: (f64, f64)) -> Self {
        let (h, w) = frame.adu.dim();
        GridFile {
            n_channels: 1,
            height: h as u32,
            width: w as u32,
            pixel_pitch: frame.pixel_pitch_x,
            z_range,
            data: frame.adu.iter().copied().collect(),
        }
    }

    pub fn to_frame(&self) -> Result<Frame> {
        self.expect_channels(1)?;
        Ok(Frame {
            adu: self.channel(0)?,
            pixel_pitch_x: self.pixel_pitch,
            pixel_pitch_y: self.pixel_pitch,
        })
    }

    /// Two-channel (re, im) grid at the super-resolved sample spacing.
    pub fn from_map_pair(pair: &ComplexMapPair) -> Self {
        let (h, w) = pair.dim();
        GridFile {
            n_channels: 2,
            height: h as u32,
            width: w as u32,
            pixel_pitch: pair.superres_pitch().0,
            z_range: pair.z_range,
            data: pair.re.iter().chain(pair.im.iter()).map(|&v| v as f32).collect(),
        }
    }

    /// Inverse of [`GridFile::from_map_pair`]; the camera pitch is recovered as
    /// `UPSAMPLE · pixel_pitch` on both axes.
    pub fn to_map_pair(&self) -> Result<ComplexMapPair> {
        self.expect_channels(2)?;
        let (h, w) = (self.height as usize, self.width as usize);
        if h % UPSAMPLE != 0 || w % UPSAMPLE != 0 {
            return Err(Error::ShapeMismatch(format!(
                "map grid {h}x{w} is not a multiple of the upsampling factor {UPSAMPLE}"
            )));
        }
        let camera_pitch = self.pixel_pitch * UPSAMPLE as f64;
        ComplexMapPair::from_channels(
            self.channel(0)?.mapv(f64::from),
            self.channel(1)?.mapv(f64::from),
            (camera_pitch, camera_pitch),
            self.z_range,
        )
    }

    fn expect_channels(&self, n: u32) -> Result<()> {
        if self.n_channels != n {
            return Err(Error::ShapeMismatch(format!("expected {n} channel(s), grid has {}", self.n_channels)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n_channels: u32, h: u32, w: u32) -> GridFile {
        let n = (n_channels * h * w) as usize;
        GridFile {
            n_channels,
            height: h,
            width: w,
            pixel_pitch: 25.0,
            z_range: (-750.0, 750.0),
            data: (0..n).map(|i| i as f32 * 0.5 - 3.0).collect(),
        }
    }

    #[test]
    fn header_layout() {
        let b = sample(2, 3, 5).to_bytes();
        assert_eq!(&b[..4], b"LUGR");
        assert_eq!(&b[4..8], &[1, 0, 1, 0]);
        assert_eq!(&b[8..20], &[2, 0, 0, 0, 3, 0, 0, 0, 5, 0, 0, 0]);
        assert_eq!(&b[20..28], &25.0f64.to_le_bytes());
        assert_eq!(b.len(), HEADER_LEN + 4 * 30);
        assert_eq!(&b[HEADER_LEN..HEADER_LEN + 4], &(-3.0f32).to_le_bytes());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut g = sample(2, 8, 8);
        g.data[3] = f32::from_bits(0x7fc0_1234);
        g.data[4] = -0.0;
        let b = g.to_bytes();
        let back = GridFile::from_bytes(&b).unwrap();
        assert_eq!(back.to_bytes(), b);
        assert_eq!(back.data[3].to_bits(), 0x7fc0_1234);
    }

    fn with_floats(n_channels: u32, h: u32, w: u32, n_floats: usize) -> Vec<u8> {
        let mut b = sample(n_channels, h, w).to_bytes();
        b.resize(HEADER_LEN + 4 * n_floats, 0);
        b
    }

    #[test]
    fn short_payload_names_expected_count() {
        let e = GridFile::from_bytes(&with_floats(2, 16, 8, 255)).unwrap_err();
        assert_eq!(
            e,
            FormatError::TruncatedPayload {
                expected: 256,
                found_bytes: 1020
            }
        );
        assert!(e.to_string().contains("256"));
        let e = GridFile::from_bytes(&with_floats(2, 8, 8, 127)).unwrap_err();
        assert!(matches!(e, FormatError::TruncatedPayload { expected: 128, .. }));
    }

    #[test]
    fn oversized_payload_is_rejected() {
        let e = GridFile::from_bytes(&with_floats(2, 8, 8, 255)).unwrap_err();
        assert_eq!(e, FormatError::TrailingBytes { extra: 4 * 127 });
    }

    #[test]
    fn distinct_errors() {
        let good = sample(1, 2, 2).to_bytes();
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(GridFile::from_bytes(&bad_magic), Err(FormatError::BadMagic { .. })));
        assert!(matches!(GridFile::from_bytes(&good[..10]), Err(FormatError::TruncatedHeader { found: 10, .. })));
        let mut long = good.clone();
        long.push(0);
        assert_eq!(GridFile::from_bytes(&long), Err(FormatError::TrailingBytes { extra: 1 }));
        let mut version = good.clone();
        version[4] = 2;
        assert_eq!(GridFile::from_bytes(&version), Err(FormatError::UnsupportedVersion(2)));
        let mut dtype = good;
        dtype[6] = 9;
        assert_eq!(GridFile::from_bytes(&dtype), Err(FormatError::UnsupportedDtype(9)));
    }

    #[test]
    fn frame_conversion() {
        let frame = Frame {
            adu: Array2::from_shape_fn((3, 4), |(r, c)| (r * 10 + c) as f32),
            pixel_pitch_x: 100.0,
            pixel_pitch_y: 100.0,
        };
        let g = GridFile::from_frame(&frame, (-1.0, 1.0));
        assert_eq!(g.to_frame().unwrap(), frame);
        assert!(g.to_map_pair().is_err());
    }

    #[test]
    fn map_pair_conversion() {
        let cam = crate::sim::CameraModel {
            width: 2,
            height: 3,
            ..Default::default()
        };
        let mut pair = ComplexMapPair::zeros(&cam, (-750.0, 750.0));
        pair.re[[1, 2]] = 0.25;
        pair.im[[11, 7]] = -0.5;
        let g = GridFile::from_map_pair(&pair);
        assert_eq!((g.n_channels, g.height, g.width, g.pixel_pitch), (2, 12, 8, 25.0));
        assert_eq!(g.to_map_pair().unwrap(), pair);
    }
}
