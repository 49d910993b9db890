//! The `.its` binary format, little-endian:
//!
//! ```text
//! magic "ITS1" | version u32 = 1 | K u32 | mode u8 (0 signed / 1 unsigned)
//! | transform f64 x4 (scale, tx, ty, tz) | shell-present u8 | eps1 f64
//! | eps2 f64 | per depth 0..=K: count u64, then (morton u64, lambda f64)
//!   pairs sorted ascending by morton
//! ```

use super::ImplicitField;
use crate::extremity::ShellInterval;
use crate::mesh::{DistanceMode, UnitTransform};
use crate::svo::SparseVoxelOctree;
use crate::{Error, Result};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"ITS1";
const VERSION: u32 = 1;

/// Serialize a field; bit-exact round trip of K, mode, transform, all
/// (depth, morton, coefficient) records and the shell interval.
pub fn save_its(field: &ImplicitField, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&field.height().to_le_bytes())?;
    let mode = match field.mode() {
        DistanceMode::Signed => 0u8,
        DistanceMode::Unsigned => 1u8,
    };
    out.write_all(&[mode])?;
    let t = field.transform();
    for v in [t.scale, t.translate[0], t.translate[1], t.translate[2]] {
        out.write_all(&v.to_le_bytes())?;
    }
    match field.shell() {
        Some(shell) => {
            out.write_all(&[1u8])?;
            out.write_all(&shell.eps1.to_le_bytes())?;
            out.write_all(&shell.eps2.to_le_bytes())?;
        }
        None => {
            out.write_all(&[0u8])?;
            out.write_all(&0f64.to_le_bytes())?;
            out.write_all(&0f64.to_le_bytes())?;
        }
    }
    for depth in 0..=field.height() {
        let mortons = field.svo().grid_mortons(depth);
        let lambdas = field.lambdas(depth);
        out.write_all(&(mortons.len() as u64).to_le_bytes())?;
        for (&m, &l) in mortons.iter().zip(lambdas.iter()) {
            out.write_all(&m.to_le_bytes())?;
            out.write_all(&l.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

struct Reader<R: Read> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::Field("truncated .its file".into()))?;
        Ok(buf)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
}

/// Deserialize a field saved by [`save_its`].
pub fn load_its(path: impl AsRef<Path>) -> Result<ImplicitField> {
    let mut r = Reader {
        inner: BufReader::new(std::fs::File::open(path)?),
    };
    let magic = r.bytes::<4>()?;
    if &magic != MAGIC {
        return Err(Error::Field(format!(
            "bad magic {:02x?}, not an .its file",
            magic
        )));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Field(format!(
            "unsupported .its version {version} (expected {VERSION})"
        )));
    }
    let height = r.u32()?;
    if height == 0 || height > crate::svo::MAX_HEIGHT {
        return Err(Error::Field(format!("implausible height {height}")));
    }
    let mode = match r.u8()? {
        0 => DistanceMode::Signed,
        1 => DistanceMode::Unsigned,
        other => return Err(Error::Field(format!("bad mode byte {other}"))),
    };
    let scale = r.f64()?;
    let translate = [r.f64()?, r.f64()?, r.f64()?];
    let shell_present = r.u8()?;
    let eps1 = r.f64()?;
    let eps2 = r.f64()?;

    let mut grids = Vec::with_capacity(height as usize + 1);
    let mut lambdas = Vec::with_capacity(height as usize + 1);
    for depth in 0..=height {
        let count = r.u64()? as usize;
        let max_lattice = (1u64 << (height - depth)) + 1;
        if count > max_lattice.pow(3) as usize {
            return Err(Error::Field(format!(
                "depth {depth}: implausible grid-point count {count}"
            )));
        }
        let mut mortons = Vec::with_capacity(count);
        let mut coeffs = Vec::with_capacity(count);
        let mut prev: Option<u64> = None;
        for _ in 0..count {
            let m = r.u64()?;
            if let Some(p) = prev {
                if m <= p {
                    return Err(Error::Field(format!(
                        "depth {depth}: grid mortons not strictly ascending"
                    )));
                }
            }
            prev = Some(m);
            mortons.push(m);
            coeffs.push(r.f64()?);
        }
        grids.push(mortons);
        lambdas.push(coeffs);
    }

    let svo = SparseVoxelOctree::from_grid_levels(height, grids)?;
    let mut field = ImplicitField::new(
        svo,
        lambdas,
        UnitTransform { scale, translate },
        mode,
    )?;
    if shell_present != 0 {
        field.set_shell(ShellInterval::new(eps1, eps2));
    }
    Ok(field)
}
