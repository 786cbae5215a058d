//! File formats: PGM input, binary instance and factor containers, trace
//! CSV and run summaries.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use moco_core::sdp::LowRankPsd;
use moco_core::{SolveTrace, TraceRecord};
use nalgebra::DMatrix;

use crate::problems::{MatCompInstance, PhaseInstance};

pub const INSTANCE_MAGIC: &[u8; 8] = b"MOCOINST";
pub const FACTOR_MAGIC: &[u8; 8] = b"MOCOFACT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn malformed(what: &'static str, detail: impl Into<String>) -> FormatError {
    FormatError::Malformed {
        what,
        detail: detail.into(),
    }
}

/// An 8-bit binary PGM image.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Pgm {
    /// Row-major pixels scaled to `[0, 1]`.
    pub fn to_signal(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64 / 255.0).collect()
    }
}

pub fn read_pgm(path: &Path) -> Result<Pgm, FormatError> {
    let mut r = BufReader::new(File::open(path)?);
    parse_pgm(&mut r)
}

pub fn parse_pgm<R: BufRead>(r: &mut R) -> Result<Pgm, FormatError> {
    let mut fields = Vec::new();
    let mut token = Vec::new();
    while fields.len() < 4 {
        let mut byte = [0u8; 1];
        if r.read(&mut byte)? == 0 {
            return Err(malformed("PGM", "truncated header"));
        }
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut comment = Vec::new();
                r.read_until(b'\n', &mut comment)?;
            }
            c if c.is_ascii_whitespace() => {
                if !token.is_empty() {
                    fields.push(String::from_utf8_lossy(&token).into_owned());
                    token.clear();
                }
            }
            c => token.push(c),
        }
    }
    if fields[0] != "P5" {
        return Err(malformed(
            "PGM",
            format!("expected P5, found {}", fields[0]),
        ));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| malformed("PGM", format!("bad number {s}")))
    };
    let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(malformed("PGM", "only 8-bit images are supported"));
    }
    let mut pixels = vec![0u8; width * height];
    r.read_exact(&mut pixels)
        .map_err(|_| malformed("PGM", "truncated pixel data"))?;
    Ok(Pgm {
        width,
        height,
        pixels,
    })
}

pub fn write_pgm(path: &Path, img: &Pgm) -> Result<(), FormatError> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{} {}\n255\n", img.width, img.height)?;
    w.write_all(&img.pixels)?;
    w.flush()?;
    Ok(())
}

struct Encoder<W> {
    w: W,
}

impl<W: Write> Encoder<W> {
    fn u8(&mut self, v: u8) -> io::Result<()> {
        self.w.write_all(&[v])
    }
    fn u32(&mut self, v: u32) -> io::Result<()> {
        self.w.write_all(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> io::Result<()> {
        self.w.write_all(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> io::Result<()> {
        self.w.write_all(&v.to_le_bytes())
    }
    fn f64s(&mut self, v: &[f64]) -> io::Result<()> {
        v.iter().try_for_each(|x| self.f64(*x))
    }
}

struct Decoder<R> {
    r: R,
    what: &'static str,
}

impl<R: Read> Decoder<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], FormatError> {
        let mut b = [0u8; N];
        self.r
            .read_exact(&mut b)
            .map_err(|_| malformed(self.what, "unexpected end of file"))?;
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn len(&mut self, limit: u64) -> Result<usize, FormatError> {
        let v = self.u64()?;
        if v > limit {
            return Err(malformed(self.what, format!("length {v} exceeds {limit}")));
        }
        Ok(v as usize)
    }
    fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, FormatError> {
        (0..n).map(|_| self.f64()).collect()
    }
    fn header(&mut self, magic: &[u8; 8]) -> Result<(), FormatError> {
        if &self.bytes::<8>()? != magic {
            return Err(malformed(self.what, "bad magic"));
        }
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            return Err(malformed(
                self.what,
                format!("unsupported version {version}"),
            ));
        }
        Ok(())
    }
}

const LEN_LIMIT: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    MatComp(MatCompInstance),
    Phase(PhaseInstance),
}

const KIND_MATCOMP: u8 = 1;
const KIND_PHASE: u8 = 2;

/// Little-endian container: magic, version, kind, then the instance fields.
pub fn write_instance<W: Write>(w: W, instance: &Instance) -> Result<(), FormatError> {
    let mut e = Encoder { w };
    e.w.write_all(INSTANCE_MAGIC)?;
    e.u32(FORMAT_VERSION)?;
    match instance {
        Instance::MatComp(inst) => {
            e.u8(KIND_MATCOMP)?;
            e.u64(inst.n as u64)?;
            e.u64(inst.seed)?;
            e.f64(inst.snr_db)?;
            e.u64(inst.mask.len() as u64)?;
            for &(a, b) in &inst.mask {
                e.u64(a as u64)?;
                e.u64(b as u64)?;
            }
            e.f64s(&inst.b)?;
            e.u64(inst.v_true.ncols() as u64)?;
            e.f64s(inst.v_true.as_slice())?;
        }
        Instance::Phase(inst) => {
            e.u8(KIND_PHASE)?;
            e.u64(inst.n as u64)?;
            e.u64(inst.m as u64)?;
            e.u64(inst.seed)?;
            e.f64(inst.snr_db)?;
            e.f64(inst.gamma)?;
            for s in &inst.sign_masks {
                e.f64s(s)?;
            }
            e.f64s(&inst.b)?;
            e.f64s(&inst.x_true)?;
        }
    }
    e.w.flush()?;
    Ok(())
}

pub fn read_instance<R: Read>(r: R) -> Result<Instance, FormatError> {
    let mut d = Decoder {
        r,
        what: "instance file",
    };
    d.header(INSTANCE_MAGIC)?;
    match d.u8()? {
        KIND_MATCOMP => {
            let n = d.len(LEN_LIMIT)?;
            let seed = d.u64()?;
            let snr_db = d.f64()?;
            let len = d.len(LEN_LIMIT)?;
            let mut mask = Vec::with_capacity(len.min(1 << 20));
            for _ in 0..len {
                let (a, b) = (d.len(LEN_LIMIT)?, d.len(LEN_LIMIT)?);
                if a > b || b >= n {
                    return Err(malformed("instance file", "mask entry out of range"));
                }
                mask.push((a, b));
            }
            let b = d.f64s(len)?;
            let rank = d.len(LEN_LIMIT)?;
            let v = d.f64s(n * rank)?;
            let v_true = DMatrix::from_vec(n, rank, v);
            Ok(Instance::MatComp(MatCompInstance {
                n,
                mask,
                b,
                v_true,
                snr_db,
                seed,
            }))
        }
        KIND_PHASE => {
            let n = d.len(LEN_LIMIT)?;
            let m = d.len(LEN_LIMIT)?;
            let seed = d.u64()?;
            let snr_db = d.f64()?;
            let gamma = d.f64()?;
            let sign_masks = (0..m).map(|_| d.f64s(n)).collect::<Result<Vec<_>, _>>()?;
            let b = d.f64s(m * n)?;
            let x_true = d.f64s(n)?;
            Ok(Instance::Phase(PhaseInstance {
                n,
                m,
                sign_masks,
                b,
                gamma,
                x_true,
                snr_db,
                seed,
            }))
        }
        k => Err(malformed("instance file", format!("unknown kind {k}"))),
    }
}

/// Factor file: magic, version, `n` and `r` as `u64`, `U` column-major, then
/// the `r` eigenvalues; all little-endian.
pub fn write_factor<W: Write>(w: W, factor: &LowRankPsd) -> Result<(), FormatError> {
    let mut e = Encoder { w };
    e.w.write_all(FACTOR_MAGIC)?;
    e.u32(FORMAT_VERSION)?;
    e.u64(factor.u.nrows() as u64)?;
    e.u64(factor.u.ncols() as u64)?;
    e.f64s(factor.u.as_slice())?;
    e.f64s(&factor.values)?;
    e.w.flush()?;
    Ok(())
}

pub fn read_factor<R: Read>(r: R) -> Result<LowRankPsd, FormatError> {
    let mut d = Decoder {
        r,
        what: "factor file",
    };
    d.header(FACTOR_MAGIC)?;
    let n = d.len(LEN_LIMIT)?;
    let r = d.len(LEN_LIMIT)?;
    let u = DMatrix::from_vec(n, r, d.f64s(n * r)?);
    let values = d.f64s(r)?;
    Ok(LowRankPsd { u, values })
}

pub const TRACE_COLUMNS: [&str; 7] = ["k", "f", "dual_cert", "cs", "eta", "theta", "wall_ms"];

/// Streams trace rows as they are produced; every row is flushed so a failed
/// run still leaves its partial trace. `lambda_min` is appended as a final
/// column when `with_lambda` is set. Only `wall_ms` varies between
/// identical runs.
pub struct TraceWriter<W: Write> {
    out: csv::Writer<W>,
    with_lambda: bool,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(w: W, with_lambda: bool) -> Result<Self, FormatError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = TRACE_COLUMNS.to_vec();
        if with_lambda {
            header.push("lambda_min");
        }
        out.write_record(&header)?;
        out.flush()?;
        Ok(Self { out, with_lambda })
    }

    pub fn write(&mut self, r: &TraceRecord) -> Result<(), FormatError> {
        let mut row = vec![
            r.k.to_string(),
            r.f_value.to_string(),
            r.dual_cert.to_string(),
            r.cs_residual.to_string(),
            r.eta.to_string(),
            r.theta.to_string(),
            format!("{:.3}", r.wall_ms),
        ];
        if self.with_lambda {
            row.push(r.lambda_min.map(|v| v.to_string()).unwrap_or_default());
        }
        self.out.write_record(&row)?;
        self.out.flush()?;
        Ok(())
    }
}

pub fn write_trace_csv<W: Write>(
    w: W,
    trace: &SolveTrace,
    with_lambda: bool,
) -> Result<(), FormatError> {
    let mut out = TraceWriter::new(w, with_lambda)?;
    trace.records.iter().try_for_each(|r| out.write(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_with_comment_roundtrips() {
        let bytes = b"P5\n# a comment\n3 2\n255\n\x00\x10\x20\x30\x40\xff".to_vec();
        let img = parse_pgm(&mut &bytes[..]).unwrap();
        assert_eq!((img.width, img.height), (3, 2));
        assert_eq!(img.pixels, vec![0, 16, 32, 48, 64, 255]);
        assert_eq!(img.to_signal()[5], 1.0);
    }

    #[test]
    fn pgm_rejects_other_formats() {
        assert!(parse_pgm(&mut &b"P2\n1 1\n255\n0"[..]).is_err());
        assert!(parse_pgm(&mut &b"P5\n2 2\n65535\n"[..]).is_err());
        assert!(parse_pgm(&mut &b"P5\n2 2\n255\n\x00"[..]).is_err());
    }

    #[test]
    fn factor_roundtrip() {
        let f = LowRankPsd {
            u: DMatrix::from_fn(4, 2, |i, j| (i * 2 + j) as f64),
            values: vec![3.0, 0.5],
        };
        let mut buf = Vec::new();
        write_factor(&mut buf, &f).unwrap();
        assert_eq!(&buf[..8], FACTOR_MAGIC);
        assert_eq!(u64::from_le_bytes(buf[12..20].try_into().unwrap()), 4);
        assert_eq!(read_factor(&buf[..]).unwrap(), f);
        assert!(read_factor(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn trace_csv_layout() {
        let trace = SolveTrace {
            records: vec![TraceRecord {
                k: 0,
                f_value: 0.5,
                dual_cert: 1.0,
                cs_residual: 0.0,
                eta: 1.0,
                theta: 0.25,
                wall_ms: 1.23456,
                lambda_min: Some(-1.0),
            }],
        };
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &trace, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "k,f,dual_cert,cs,eta,theta,wall_ms,lambda_min\n0,0.5,1,0,1,0.25,1.235,-1\n"
        );
    }
}
