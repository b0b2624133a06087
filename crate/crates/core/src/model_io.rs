//! Versioned binary model files.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic "ACRD" | version u8 = 1
//! config:  mode u8 | dim u32 | window u32 | epochs u32 | lr f32 | min_lr f32
//!          | min_count u32 | objective u8 | negatives u32 | seed u64 | threads u32
//! vocab:   n u32 | n x (len u32, utf-8 bytes, count u64)
//! words:   rows u32 | rows x dim f32
//! output:  rows u32 | rows x dim f32
//! docs:    rows u32 | rows x (label len u32, utf-8 bytes, index u32)
//!          | rows x dim f32
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::embed::{DocTag, EmbeddingModel, Matrix, Mode, Objective, Params, TrainConfig, Vocabulary};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ACRD";
pub const FORMAT_VERSION: u8 = 1;

struct Writer<W: Write> {
    inner: W,
}

impl<W: Write> Writer<W> {
    fn bytes(&mut self, b: &[u8]) -> std::io::Result<()> {
        self.inner.write_all(b)
    }

    fn u8(&mut self, v: u8) -> std::io::Result<()> {
        self.bytes(&[v])
    }

    fn u32(&mut self, v: usize) -> std::io::Result<()> {
        let v = u32::try_from(v).map_err(|_| std::io::Error::other("value exceeds u32"))?;
        self.bytes(&v.to_le_bytes())
    }

    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn f32(&mut self, v: f32) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn str(&mut self, s: &str) -> std::io::Result<()> {
        self.u32(s.len())?;
        self.bytes(s.as_bytes())
    }

    fn floats(&mut self, m: &Matrix<f32>) -> std::io::Result<()> {
        for &x in m.as_slice() {
            self.f32(x)?;
        }
        Ok(())
    }
}

/// Reads from an in-memory buffer; running past the end is a format error.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(0, format!("truncated model file at byte {}", self.pos)));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String> {
        let len = self.u32()?;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::format(0, "invalid utf-8 string"))
    }

    fn matrix(&mut self, rows: usize, dim: usize) -> Result<Matrix<f32>> {
        let n = rows
            .checked_mul(dim)
            .filter(|&n| n.saturating_mul(4) <= self.buf.len() - self.pos)
            .ok_or_else(|| Error::format(0, "truncated model file in vector block"))?;
        let data = (0..n).map(|_| self.f32()).collect::<Result<Vec<_>>>()?;
        Ok(Matrix::from_vec(rows, dim, data))
    }
}

fn encode(model: &EmbeddingModel, w: &mut Writer<impl Write>) -> std::io::Result<()> {
    let c = &model.config;
    w.bytes(MAGIC)?;
    w.u8(FORMAT_VERSION)?;

    w.u8(match c.mode {
        Mode::Dm => 0,
        Mode::Dbow => 1,
    })?;
    w.u32(c.dim)?;
    w.u32(c.window)?;
    w.u32(c.epochs)?;
    w.f32(c.learning_rate)?;
    w.f32(c.min_learning_rate)?;
    w.u32(c.min_count as usize)?;
    let (tag, negatives) = match c.objective {
        Objective::Auto => (0, 0),
        Objective::ExactSoftmax => (1, 0),
        Objective::NegativeSampling { negatives } => (2, negatives),
    };
    w.u8(tag)?;
    w.u32(negatives as usize)?;
    w.u64(c.seed)?;
    w.u32(c.threads)?;

    w.u32(model.vocab.len())?;
    for (tok, count) in model.vocab.iter() {
        w.str(tok)?;
        w.u64(count)?;
    }

    let p = &model.params;
    w.u32(p.word_vectors.rows())?;
    w.floats(&p.word_vectors)?;
    w.u32(p.output_weights.rows())?;
    w.floats(&p.output_weights)?;
    w.u32(model.doc_tags.len())?;
    for t in &model.doc_tags {
        w.str(&t.label)?;
        w.u32(t.index as usize)?;
    }
    w.floats(&p.doc_vectors)
}

pub fn model_to_bytes(model: &EmbeddingModel) -> Result<Vec<u8>> {
    model.validate()?;
    let mut w = Writer { inner: Vec::new() };
    encode(model, &mut w).map_err(|e| Error::Invariant(e.to_string()))?;
    Ok(w.inner)
}

pub fn model_from_bytes(buf: &[u8]) -> Result<EmbeddingModel> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::format(0, "missing ACRD magic"));
    }
    let version = r.u8()?;
    if version != FORMAT_VERSION {
        return Err(Error::Version(version));
    }

    let mode = match r.u8()? {
        0 => Mode::Dm,
        1 => Mode::Dbow,
        m => return Err(Error::format(0, format!("unknown mode byte {m}"))),
    };
    let dim = r.u32()?;
    let window = r.u32()?;
    let epochs = r.u32()?;
    let learning_rate = r.f32()?;
    let min_learning_rate = r.f32()?;
    let min_count = r.u32()? as u32;
    let objective_tag = r.u8()?;
    let negatives = r.u32()? as u32;
    let objective = match objective_tag {
        0 => Objective::Auto,
        1 => Objective::ExactSoftmax,
        2 => Objective::NegativeSampling { negatives },
        o => return Err(Error::format(0, format!("unknown objective byte {o}"))),
    };
    let seed = r.u64()?;
    let threads = r.u32()?;
    let config = TrainConfig {
        mode,
        dim,
        window,
        epochs,
        learning_rate,
        min_learning_rate,
        min_count,
        objective,
        seed,
        threads,
    };

    let n_vocab = r.u32()?;
    let mut pairs = Vec::with_capacity(n_vocab.min(1 << 20));
    for _ in 0..n_vocab {
        let tok = r.str()?;
        let count = r.u64()?;
        pairs.push((tok, count));
    }
    let vocab = Vocabulary::from_counts(pairs).map_err(|e| Error::format(0, e.to_string()))?;

    let rows = r.u32()?;
    let word_vectors = r.matrix(rows, dim)?;
    let rows = r.u32()?;
    let output_weights = r.matrix(rows, dim)?;
    let n_docs = r.u32()?;
    let mut doc_tags = Vec::with_capacity(n_docs.min(1 << 20));
    for _ in 0..n_docs {
        let label = r.str()?;
        let index = r.u32()? as u32;
        doc_tags.push(DocTag { label, index });
    }
    let doc_vectors = r.matrix(n_docs, dim)?;
    if r.pos != buf.len() {
        return Err(Error::format(0, "trailing bytes after model"));
    }

    let model = EmbeddingModel {
        vocab,
        params: Params {
            word_vectors,
            output_weights,
            doc_vectors,
        },
        doc_tags,
        config,
    };
    model.validate().map_err(|e| Error::format(0, e.to_string()))?;
    Ok(model)
}

pub fn save_model(model: &EmbeddingModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = model_to_bytes(model)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    File::open(path)
        .map(BufReader::new)
        .and_then(|mut r| r.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    model_from_bytes(&buf)
}
