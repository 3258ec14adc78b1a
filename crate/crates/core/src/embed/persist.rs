//! Versioned little-endian binary format for trained embedding models.
//!
//! Layout: magic `IPDEMBED`, u32 version, hyperparameters, vocabulary with
//! counts, then the word, output and paragraph matrices and the epoch losses.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::paragraph::{EmbeddingModel, EmbeddingParams};
use crate::error::{Error, Result};
use crate::model::Vocabulary;

const MAGIC: &[u8; 8] = b"IPDEMBED";
const VERSION: u32 = 1;

impl EmbeddingModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        let p = &self.params;
        w.write_all(MAGIC)?;
        w.write_u32::<LE>(VERSION)?;
        for v in [p.dim, p.negative_samples, p.epochs, p.window] {
            w.write_u64::<LE>(v as u64)?;
        }
        w.write_f64::<LE>(p.initial_step_size)?;
        w.write_u64::<LE>(p.inference_steps as u64)?;
        w.write_u64::<LE>(p.seed)?;
        w.write_u8(p.random_walk_start as u8)?;

        w.write_u64::<LE>(self.vocab.len() as u64)?;
        for (token, &count) in self.vocab.tokens().iter().zip(&self.counts) {
            w.write_u32::<LE>(token.len() as u32)?;
            w.write_all(token.as_bytes())?;
            w.write_u64::<LE>(count)?;
        }
        w.write_u64::<LE>(self.doc_count() as u64)?;
        write_floats(w, &self.word_vectors)?;
        write_floats(w, &self.output_vectors)?;
        write_floats(w, &self.doc_vectors)?;
        w.write_u64::<LE>(self.epoch_losses.len() as u64)?;
        write_floats(w, &self.epoch_losses)?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::invalid("not an embedding model file"));
        }
        let version = r.read_u32::<LE>()?;
        if version != VERSION {
            return Err(Error::invalid(format!(
                "unsupported embedding model version {version}"
            )));
        }
        let params = EmbeddingParams {
            dim: read_len(r)?,
            negative_samples: read_len(r)?,
            epochs: read_len(r)?,
            window: read_len(r)?,
            initial_step_size: r.read_f64::<LE>()?,
            inference_steps: read_len(r)?,
            seed: r.read_u64::<LE>()?,
            random_walk_start: r.read_u8()? != 0,
        };
        if params.dim == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        let d = params.dim;

        let vocab_len = read_len(r)?;
        let mut tokens = Vec::with_capacity(vocab_len.min(1 << 20));
        let mut counts = Vec::with_capacity(vocab_len.min(1 << 20));
        for _ in 0..vocab_len {
            let len = r.read_u32::<LE>()? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            tokens.push(
                String::from_utf8(buf).map_err(|_| Error::invalid("token is not valid UTF-8"))?,
            );
            counts.push(r.read_u64::<LE>()?);
        }
        let vocab = Vocabulary::from_tokens(tokens);
        if vocab.len() != vocab_len {
            return Err(Error::invalid("duplicate token in embedding vocabulary"));
        }
        let docs = read_len(r)?;
        let word_vectors = read_floats(r, vocab_len * d)?;
        let output_vectors = read_floats(r, vocab_len * d)?;
        let doc_vectors = read_floats(r, docs * d)?;
        let losses = read_len(r)?;
        let epoch_losses = read_floats(r, losses)?;
        if word_vectors
            .iter()
            .chain(&output_vectors)
            .chain(&doc_vectors)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("stored embedding vectors"));
        }
        EmbeddingModel::from_parts(
            params,
            vocab,
            counts,
            word_vectors,
            output_vectors,
            doc_vectors,
            epoch_losses,
        )
    }
}

fn read_len<R: Read>(r: &mut R) -> Result<usize> {
    usize::try_from(r.read_u64::<LE>()?)
        .map_err(|_| Error::invalid("length does not fit in memory"))
}

fn write_floats<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for &v in values {
        w.write_f64::<LE>(v)?;
    }
    Ok(())
}

fn read_floats<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n];
    r.read_f64_into::<LE>(&mut out)?;
    Ok(out)
}
