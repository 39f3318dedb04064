//! Binary model file and text export.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic[8] version:u32 payload_len:u64 payload[payload_len] sha256[32]
//! ```
//!
//! The checksum covers everything before it. The payload holds, in order:
//! dim, seed, alpha mode, the noun/verb/preposition vocabularies, training
//! counts, candidate phrases, feature norms, `N`, then the noun, predicate,
//! phrase and weight blocks.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{AlphaMode, Model, ModelParams, ParamBlock};
use crate::corpus::{CandidateSet, Lexicon, PhraseFeatureTable, ThresholdRule, VoCounts, Vocab};
use crate::error::{Error, FormatError, Result};

pub const MAGIC: [u8; 8] = *b"VOCMODEL";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8;
const CHECKSUM_LEN: usize = 32;

/// Serialize a model to bytes.
pub fn encode(model: &Model) -> Vec<u8> {
    let mut w = Writer::default();
    let p = &model.params;
    w.u32(p.dim as u32);
    w.u64(p.seed);
    match model.alpha_mode {
        AlphaMode::Learned => {
            w.u8(0);
            w.f64(0.0);
        }
        AlphaMode::Fixed(a) => {
            w.u8(1);
            w.f64(a);
        }
    }
    let lex = &model.lexicon;
    for vocab in [&lex.nouns, &lex.verbs, &lex.preps] {
        w.u32(vocab.len() as u32);
        for word in vocab.words() {
            w.str(word);
        }
    }
    let counts = &lex.counts;
    counts.verb.iter().for_each(|&c| w.u64(c));
    counts.object.iter().for_each(|&c| w.u64(c));
    w.u64(counts.total);
    let pairs = counts.sorted_pairs();
    w.u32(pairs.len() as u32);
    for ((v, o), c) in pairs {
        w.u32(v);
        w.u32(o);
        w.u64(c);
    }
    let cands = &model.candidates;
    w.u64(cands.threshold);
    w.u8(match cands.rule {
        ThresholdRule::Strict => 0,
        ThresholdRule::Inclusive => 1,
    });
    w.u32(cands.len() as u32);
    for &(v, o) in cands.phrases() {
        w.u32(v);
        w.u32(o);
    }
    w.f64(model.features.norm_freq);
    w.f64(model.features.norm_pmi);
    w.u32(p.weights.len() as u32);
    for block in [
        p.nouns.data(),
        p.predicates.data(),
        p.phrases.data(),
        &p.weights,
    ] {
        block.iter().for_each(|&x| w.f64(x));
    }

    let payload = w.0;
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + CHECKSUM_LEN);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    let digest = Sha256::digest(&out);
    out.extend_from_slice(digest.as_slice());
    out
}

/// Deserialize a model; never returns a partially read model.
pub fn decode(bytes: &[u8]) -> std::result::Result<Model, FormatError> {
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::Truncated {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(FormatError::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let payload_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let expected = (HEADER_LEN as u64)
        .checked_add(payload_len)
        .and_then(|n| n.checked_add(CHECKSUM_LEN as u64))
        .ok_or_else(|| FormatError::Corrupt("payload length overflow".into()))?;
    if (bytes.len() as u64) < expected {
        return Err(FormatError::Truncated {
            expected,
            found: bytes.len() as u64,
        });
    }
    if (bytes.len() as u64) > expected {
        return Err(FormatError::Corrupt(format!(
            "{} trailing bytes",
            bytes.len() as u64 - expected
        )));
    }
    let body_end = bytes.len() - CHECKSUM_LEN;
    let digest = Sha256::digest(&bytes[..body_end]);
    if digest.as_slice() != &bytes[body_end..] {
        return Err(FormatError::Checksum);
    }
    let mut r = Reader {
        buf: &bytes[HEADER_LEN..body_end],
    };
    let model = read_payload(&mut r)?;
    if !r.buf.is_empty() {
        return Err(FormatError::Corrupt("unread payload bytes".into()));
    }
    Ok(model)
}

fn read_payload(r: &mut Reader<'_>) -> std::result::Result<Model, FormatError> {
    let dim = r.u32()? as usize;
    if dim == 0 {
        return Err(FormatError::Corrupt("zero dimensionality".into()));
    }
    let seed = r.u64()?;
    let alpha_mode = match (r.u8()?, r.f64()?) {
        (0, _) => AlphaMode::Learned,
        (1, a) => AlphaMode::Fixed(a),
        (t, _) => return Err(FormatError::Corrupt(format!("alpha mode tag {t}"))),
    };
    let mut vocabs = Vec::with_capacity(3);
    for _ in 0..3 {
        let n = r.u32()? as usize;
        let mut vocab = Vocab::new();
        for _ in 0..n {
            let word = r.str()?;
            if vocab.id(&word).is_some() {
                return Err(FormatError::Corrupt(format!("duplicate word `{word}`")));
            }
            vocab.intern(&word);
        }
        vocabs.push(vocab);
    }
    let preps = vocabs.pop().unwrap();
    let verbs = vocabs.pop().unwrap();
    let nouns = vocabs.pop().unwrap();

    let mut counts = VoCounts {
        verb: r.u64s(verbs.len())?,
        object: r.u64s(nouns.len())?,
        total: r.u64()?,
        ..Default::default()
    };
    let n_pairs = r.u32()? as usize;
    for _ in 0..n_pairs {
        let (v, o, c) = (r.u32()?, r.u32()?, r.u64()?);
        if v as usize >= verbs.len() || o as usize >= nouns.len() {
            return Err(FormatError::Corrupt("count pair id out of range".into()));
        }
        counts.pair.insert((v, o), c);
    }
    let threshold = r.u64()?;
    let rule = match r.u8()? {
        0 => ThresholdRule::Strict,
        1 => ThresholdRule::Inclusive,
        t => return Err(FormatError::Corrupt(format!("threshold rule tag {t}"))),
    };
    let n_cands = r.u32()? as usize;
    let mut phrases = Vec::with_capacity(n_cands);
    for _ in 0..n_cands {
        let (v, o) = (r.u32()?, r.u32()?);
        if v as usize >= verbs.len() || o as usize >= nouns.len() {
            return Err(FormatError::Corrupt("candidate id out of range".into()));
        }
        phrases.push((v, o));
    }
    let candidates = CandidateSet::from_phrases(phrases, threshold, rule);
    if candidates.len() != n_cands {
        return Err(FormatError::Corrupt("duplicate candidate phrases".into()));
    }
    let norm_freq = r.f64()?;
    let norm_pmi = r.f64()?;
    let n_features = r.u32()? as usize;

    let lexicon = Lexicon {
        nouns,
        verbs,
        preps,
        counts,
    };
    let features = PhraseFeatureTable::with_norms(&lexicon, &candidates, norm_freq, norm_pmi);
    if features.dim() != n_features {
        return Err(FormatError::Corrupt(format!(
            "feature count {n_features} does not match vocabulary ({})",
            features.dim()
        )));
    }
    let n_pred = lexicon.verbs.len() + lexicon.preps.len();
    let nouns_block = ParamBlock::from_data(dim, r.f64s(lexicon.nouns.len() * dim)?);
    let predicates = ParamBlock::from_data(dim * dim, r.f64s(n_pred * dim * dim)?);
    let phrases_block = ParamBlock::from_data(dim, r.f64s(candidates.len() * dim)?);
    let weights = r.f64s(n_features)?;

    Ok(Model {
        params: ModelParams {
            dim,
            n_verbs: lexicon.verbs.len(),
            nouns: nouns_block,
            predicates,
            phrases: phrases_block,
            weights,
            seed,
        },
        lexicon,
        candidates,
        features,
        alpha_mode,
    })
}

/// Write the model atomically (temporary file, then rename).
pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    write_atomic(path, &encode(model))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let bytes = fs::read(path).map_err(|source| Error::File {
        path: path.to_owned(),
        source,
    })?;
    Ok(decode(&bytes)?)
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let file_err = |source| Error::File {
        path: path.to_owned(),
        source,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(file_err)?;
    tmp.write_all(bytes).map_err(file_err)?;
    tmp.as_file().sync_all().map_err(file_err)?;
    tmp.persist(path).map_err(|e| file_err(e.error))?;
    Ok(())
}

/// One record per parameter row: `name\tshape\tvalues...`.
pub fn export_text<W: Write>(model: &Model, mut out: W) -> Result<()> {
    let p = &model.params;
    let lex = &model.lexicon;
    let d = p.dim;
    let mut record = |name: String, shape: String, values: &[f64]| -> Result<()> {
        write!(out, "{name}\t{shape}")?;
        for v in values {
            write!(out, "\t{v}")?;
        }
        writeln!(out)?;
        Ok(())
    };
    for (i, w) in lex.nouns.words().iter().enumerate() {
        record(format!("noun:{w}"), format!("{d}"), p.nouns.row(i))?;
    }
    for (i, w) in lex.verbs.words().iter().enumerate() {
        record(format!("verb:{w}"), format!("{d}x{d}"), p.predicates.row(i))?;
    }
    for (i, w) in lex.preps.words().iter().enumerate() {
        record(
            format!("prep:{w}"),
            format!("{d}x{d}"),
            p.predicates.row(p.n_verbs + i),
        )?;
    }
    for (i, &(v, o)) in model.candidates.phrases().iter().enumerate() {
        record(
            format!("phrase:{}", lex.phrase_label(v, o)),
            format!("{d}"),
            p.phrases.row(i),
        )?;
    }
    record("W".into(), format!("{}", p.weights.len()), &p.weights)?;
    Ok(())
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, x: u8) {
        self.0.push(x);
    }
    fn u32(&mut self, x: u32) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn u64(&mut self, x: u64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn f64(&mut self, x: f64) {
        self.0.extend_from_slice(&x.to_bits().to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], FormatError> {
        if self.buf.len() < n {
            return Err(FormatError::Corrupt("payload ends early".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }
    fn u8(&mut self) -> std::result::Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> std::result::Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> std::result::Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> std::result::Result<f64, FormatError> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn u64s(&mut self, n: usize) -> std::result::Result<Vec<u64>, FormatError> {
        (0..n).map(|_| self.u64()).collect()
    }
    fn f64s(&mut self, n: usize) -> std::result::Result<Vec<f64>, FormatError> {
        if self.buf.len() / 8 < n {
            return Err(FormatError::Corrupt("payload ends early".into()));
        }
        (0..n).map(|_| self.f64()).collect()
    }
    fn str(&mut self) -> std::result::Result<String, FormatError> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| FormatError::Corrupt("invalid UTF-8".into()))
    }
}
