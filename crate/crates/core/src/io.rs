//! Binary container formats.
//!
//! Each file starts with an ASCII magic line and an ASCII dimensions line,
//! followed by little-endian payload:
//!
//! * `.cimg`: `FDLCP-CIMG 1`, `<rows> <cols>`, then `f64` (re, im) pairs row-major.
//! * `.cmap`: `FDLCP-CMAP 1`, `<J> <Q>`, then `J` `u16` class labels.
//! * `.dbank`: `FDLCP-DBANK 1`, `<n> <Q> <populated>`, then per trained class a
//!   `u16` index and `n⁴` `f64` pairs of the column-major dictionary.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dictionary::{DictionaryBank, OrthoDictionary};
use crate::direction::ClassMap;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::linalg::CMatrix;
use crate::scalar::{Cx, Real};

const CIMG_MAGIC: &str = "FDLCP-CIMG 1";
const CMAP_MAGIC: &str = "FDLCP-CMAP 1";
const DBANK_MAGIC: &str = "FDLCP-DBANK 1";
const MAX_HEADER_LINE: usize = 256;

fn format_err(kind: &'static str, reason: impl Into<String>) -> Error {
    Error::Format {
        kind,
        reason: reason.into(),
    }
}

fn read_line<R: BufRead>(r: &mut R, kind: &'static str) -> Result<String> {
    let mut buf = Vec::new();
    r.by_ref()
        .take(MAX_HEADER_LINE as u64)
        .read_until(b'\n', &mut buf)?;
    if buf.last() != Some(&b'\n') {
        return Err(format_err(kind, "truncated or overlong header line"));
    }
    buf.pop();
    String::from_utf8(buf).map_err(|_| format_err(kind, "header is not ASCII"))
}

fn expect_magic<R: BufRead>(r: &mut R, kind: &'static str, magic: &str) -> Result<()> {
    let line = read_line(r, kind)?;
    if line != magic {
        return Err(format_err(kind, format!("bad magic line '{line}'")));
    }
    Ok(())
}

fn read_dims<R: BufRead, const N: usize>(r: &mut R, kind: &'static str) -> Result<[usize; N]> {
    let line = read_line(r, kind)?;
    let parts: Vec<&str> = line.split(' ').collect();
    if parts.len() != N {
        return Err(format_err(
            kind,
            format!("expected {N} numbers in '{line}'"),
        ));
    }
    let mut out = [0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p
            .parse()
            .map_err(|_| format_err(kind, format!("bad number '{p}'")))?;
    }
    Ok(out)
}

fn read_f64<R: Read>(r: &mut R, kind: &'static str) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| format_err(kind, "payload shorter than header declares"))?;
    Ok(f64::from_le_bytes(b))
}

fn read_u16<R: Read>(r: &mut R, kind: &'static str) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)
        .map_err(|_| format_err(kind, "payload shorter than header declares"))?;
    Ok(u16::from_le_bytes(b))
}

fn expect_eof<R: Read>(r: &mut R, kind: &'static str) -> Result<()> {
    let mut b = [0u8; 1];
    if r.read(&mut b)? != 0 {
        return Err(format_err(kind, "trailing bytes after payload"));
    }
    Ok(())
}

fn write_cx<W: Write, T: Real>(w: &mut W, c: &Cx<T>) -> Result<()> {
    w.write_all(&c.re.as_f64().to_le_bytes())?;
    w.write_all(&c.im.as_f64().to_le_bytes())?;
    Ok(())
}

fn read_cx<R: Read, T: Real>(r: &mut R, kind: &'static str) -> Result<Cx<T>> {
    let re = read_f64(r, kind)?;
    let im = read_f64(r, kind)?;
    Ok(Cx::new(T::lit(re), T::lit(im)))
}

pub fn write_cimg<W: Write, T: Real>(w: &mut W, image: &Image<T>) -> Result<()> {
    write!(w, "{CIMG_MAGIC}\n{} {}\n", image.rows(), image.cols())?;
    for c in image.data() {
        write_cx(w, c)?;
    }
    Ok(())
}

pub fn read_cimg<R: BufRead, T: Real>(r: &mut R) -> Result<Image<T>> {
    const KIND: &str = "cimg";
    expect_magic(r, KIND, CIMG_MAGIC)?;
    let [rows, cols] = read_dims::<_, 2>(r, KIND)?;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| format_err(KIND, "dimensions overflow"))?;
    let mut data = Vec::with_capacity(len.min(1 << 24));
    for _ in 0..len {
        data.push(read_cx(r, KIND)?);
    }
    expect_eof(r, KIND)?;
    Image::new(rows, cols, data).map_err(|e| format_err(KIND, e.to_string()))
}

pub fn write_cmap<W: Write>(w: &mut W, map: &ClassMap) -> Result<()> {
    if map.num_classes() > usize::from(u16::MAX) + 1 {
        return Err(Error::InvalidInput(format!(
            "{} classes do not fit u16 labels",
            map.num_classes()
        )));
    }
    write!(
        w,
        "{CMAP_MAGIC}\n{} {}\n",
        map.num_patches(),
        map.num_classes()
    )?;
    for &l in map.labels() {
        w.write_all(&(l as u16).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_cmap<R: BufRead>(r: &mut R) -> Result<ClassMap> {
    const KIND: &str = "cmap";
    expect_magic(r, KIND, CMAP_MAGIC)?;
    let [patches, classes] = read_dims::<_, 2>(r, KIND)?;
    let mut labels = Vec::with_capacity(patches.min(1 << 24));
    for _ in 0..patches {
        labels.push(usize::from(read_u16(r, KIND)?));
    }
    expect_eof(r, KIND)?;
    ClassMap::new(labels, classes).map_err(|e| format_err(KIND, e.to_string()))
}

/// Writes the trained dictionaries of `bank`; Haar fallbacks are implicit.
pub fn write_dbank<W: Write, T: Real>(w: &mut W, bank: &DictionaryBank<T>) -> Result<()> {
    let trained = bank.trained();
    write!(
        w,
        "{DBANK_MAGIC}\n{} {} {}\n",
        bank.patch_size(),
        bank.num_classes(),
        trained.len()
    )?;
    for (&class, d) in trained {
        let idx = u16::try_from(class)
            .map_err(|_| Error::InvalidInput(format!("class {class} does not fit u16")))?;
        w.write_all(&idx.to_le_bytes())?;
        for c in d.atoms().data() {
            write_cx(w, c)?;
        }
    }
    Ok(())
}

pub fn read_dbank<R: BufRead, T: Real>(r: &mut R) -> Result<DictionaryBank<T>> {
    const KIND: &str = "dbank";
    expect_magic(r, KIND, DBANK_MAGIC)?;
    let [n, classes, populated] = read_dims::<_, 3>(r, KIND)?;
    if populated > classes {
        return Err(format_err(KIND, "more populated classes than classes"));
    }
    let dim = n * n;
    let mut dicts = BTreeMap::new();
    for _ in 0..populated {
        let class = usize::from(read_u16(r, KIND)?);
        let mut data = Vec::with_capacity(dim * dim);
        for _ in 0..dim * dim {
            data.push(read_cx(r, KIND)?);
        }
        let d = OrthoDictionary::new(CMatrix::from_columns(dim, dim, data))
            .map_err(|e| format_err(KIND, e.to_string()))?;
        if dicts.insert(class, d).is_some() {
            return Err(format_err(KIND, format!("class {class} listed twice")));
        }
    }
    expect_eof(r, KIND)?;
    DictionaryBank::from_parts(n, classes, 0.0, dicts).map_err(|e| format_err(KIND, e.to_string()))
}

fn save<F: FnOnce(&mut BufWriter<File>) -> Result<()>>(path: &Path, f: F) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn save_cimg<T: Real>(path: impl AsRef<Path>, image: &Image<T>) -> Result<()> {
    save(path.as_ref(), |w| write_cimg(w, image))
}

pub fn load_cimg<T: Real>(path: impl AsRef<Path>) -> Result<Image<T>> {
    read_cimg(&mut open(path.as_ref())?)
}

pub fn save_cmap(path: impl AsRef<Path>, map: &ClassMap) -> Result<()> {
    save(path.as_ref(), |w| write_cmap(w, map))
}

pub fn load_cmap(path: impl AsRef<Path>) -> Result<ClassMap> {
    read_cmap(&mut open(path.as_ref())?)
}

pub fn save_dbank<T: Real>(path: impl AsRef<Path>, bank: &DictionaryBank<T>) -> Result<()> {
    save(path.as_ref(), |w| write_dbank(w, bank))
}

pub fn load_dbank<T: Real>(path: impl AsRef<Path>) -> Result<DictionaryBank<T>> {
    read_dbank(&mut open(path.as_ref())?)
}
