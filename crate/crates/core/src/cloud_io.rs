//! Point-cloud dumps.
//!
//! Text: `#`-prefixed header lines (`scene_id`, `seed`, `config_hash`,
//! `fields`), then one point per line: `x y z range intensity channel azimuth`.
//!
//! Binary (little-endian):
//!
//! ```text
//! magic  b"PLCD"   version u16 = 1
//! scene_id: u16 length + UTF-8 bytes
//! seed: u64
//! config_hash: u16 length + UTF-8 bytes
//! count: u64
//! count × { x f32, y f32, z f32, range f32, intensity u16, channel u16, azimuth f32 }
//! ```

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::scene::{LidarPoint, PointCloud};

pub const BINARY_MAGIC: &[u8; 4] = b"PLCD";
pub const BINARY_VERSION: u16 = 1;
pub const FIELDS: &str = "x y z range intensity channel azimuth";
/// Bytes per point record in the binary dump.
pub const BINARY_RECORD: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CloudHeader {
    pub scene_id: String,
    pub seed: u64,
    pub config_hash: String,
}

fn write_err(e: std::io::Error) -> Error {
    Error::io("<cloud output>", e)
}

pub fn write_text<W: Write>(mut w: W, header: &CloudHeader, cloud: &PointCloud) -> Result<()> {
    (|| -> std::io::Result<()> {
        writeln!(w, "# scene_id: {}", header.scene_id)?;
        writeln!(w, "# seed: {}", header.seed)?;
        writeln!(w, "# config_hash: {}", header.config_hash)?;
        writeln!(w, "# fields: {FIELDS}")?;
        for p in &cloud.points {
            writeln!(
                w,
                "{:.6} {:.6} {:.6} {:.6} {} {} {:.4}",
                p.x, p.y, p.z, p.range, p.intensity, p.channel, p.azimuth
            )?;
        }
        Ok(())
    })()
    .map_err(write_err)
}

pub fn write_csv<W: Write>(mut w: W, header: &CloudHeader, cloud: &PointCloud) -> Result<()> {
    (|| -> std::io::Result<()> {
        writeln!(w, "# scene_id: {}", header.scene_id)?;
        writeln!(w, "# seed: {}", header.seed)?;
        writeln!(w, "# config_hash: {}", header.config_hash)?;
        writeln!(w, "x,y,z,range,intensity,channel,azimuth")?;
        for p in &cloud.points {
            writeln!(
                w,
                "{:.6},{:.6},{:.6},{:.6},{},{},{:.4}",
                p.x, p.y, p.z, p.range, p.intensity, p.channel, p.azimuth
            )?;
        }
        Ok(())
    })()
    .map_err(write_err)
}

pub fn read_text<R: BufRead>(r: R) -> Result<(CloudHeader, PointCloud)> {
    let mut header = CloudHeader {
        scene_id: String::new(),
        seed: 0,
        config_hash: String::new(),
    };
    let mut points = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<cloud input>", e))?;
        let bad = |msg: &str| Error::parse(format!("cloud text line {}", n + 1), msg);
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((key, value)) = rest.trim().split_once(':') {
                let value = value.trim();
                match key.trim() {
                    "scene_id" => header.scene_id = value.to_string(),
                    "seed" => header.seed = value.parse().map_err(|_| bad("bad seed"))?,
                    "config_hash" => header.config_hash = value.to_string(),
                    _ => {}
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 7 {
            return Err(bad("expected 7 fields"));
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad("bad number"));
        points.push(LidarPoint {
            x: num(0)?,
            y: num(1)?,
            z: num(2)?,
            range: num(3)?,
            intensity: f[4].parse().map_err(|_| bad("bad intensity"))?,
            channel: f[5].parse().map_err(|_| bad("bad channel"))?,
            azimuth: num(6)?,
        });
    }
    let cloud = PointCloud {
        points,
        revolution_index: 0,
        scene_id: header.scene_id.clone(),
    };
    Ok((header, cloud))
}

fn put_str(buf: &mut Vec<u8>, s: &str) -> Result<()> {
    let len = u16::try_from(s.len())
        .map_err(|_| Error::parse("binary cloud", "header string longer than 65535 bytes"))?;
    buf.extend_from_slice(&len.to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
    Ok(())
}

pub fn write_binary<W: Write>(mut w: W, header: &CloudHeader, cloud: &PointCloud) -> Result<()> {
    let mut buf = Vec::with_capacity(64 + cloud.len() * BINARY_RECORD);
    buf.extend_from_slice(BINARY_MAGIC);
    buf.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    put_str(&mut buf, &header.scene_id)?;
    buf.extend_from_slice(&header.seed.to_le_bytes());
    put_str(&mut buf, &header.config_hash)?;
    buf.extend_from_slice(&(cloud.len() as u64).to_le_bytes());
    for p in &cloud.points {
        for v in [p.x, p.y, p.z, p.range] {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        buf.extend_from_slice(&u16::from(p.intensity).to_le_bytes());
        buf.extend_from_slice(&p.channel.to_le_bytes());
        buf.extend_from_slice(&(p.azimuth as f32).to_le_bytes());
    }
    w.write_all(&buf).map_err(write_err)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| Error::parse("binary cloud", "truncated input"))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::parse("binary cloud", "header string is not UTF-8"))
    }
}

pub fn read_binary<R: Read>(mut r: R) -> Result<(CloudHeader, PointCloud)> {
    let mut data = Vec::new();
    r.read_to_end(&mut data).map_err(|e| Error::io("<cloud input>", e))?;
    let mut c = Cursor { data: &data, pos: 0 };
    if c.take(4)? != BINARY_MAGIC {
        return Err(Error::parse("binary cloud", "bad magic"));
    }
    let version = c.u16()?;
    if version != BINARY_VERSION {
        return Err(Error::parse("binary cloud", format!("unsupported version {version}")));
    }
    let scene_id = c.string()?;
    let seed = c.u64()?;
    let config_hash = c.string()?;
    let count = c.u64()? as usize;
    if count.saturating_mul(BINARY_RECORD) != data.len() - c.pos {
        return Err(Error::parse("binary cloud", "point count does not match payload size"));
    }
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let (x, y, z, range) = (c.f32()?, c.f32()?, c.f32()?, c.f32()?);
        let intensity = c.u16()?;
        let channel = c.u16()?;
        let azimuth = c.f32()?;
        points.push(LidarPoint {
            x: x.into(),
            y: y.into(),
            z: z.into(),
            range: range.into(),
            intensity: u8::try_from(intensity)
                .map_err(|_| Error::parse("binary cloud", "intensity above 255"))?,
            channel,
            azimuth: azimuth.into(),
        });
    }
    let header = CloudHeader {
        scene_id,
        seed,
        config_hash,
    };
    let cloud = PointCloud {
        points,
        revolution_index: 0,
        scene_id: header.scene_id.clone(),
    };
    Ok((header, cloud))
}
