use std::fs::File;
use std::io::{BufReader, Cursor, Read, Seek, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AudioBuffer, AudioError};

/// Sample encodings accepted by the reader and produced by the writer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavEncoding {
    Pcm16,
    Pcm24,
    Float32,
}

impl WavEncoding {
    fn spec(self, sample_rate: u32) -> hound::WavSpec {
        let (bits_per_sample, sample_format) = match self {
            WavEncoding::Pcm16 => (16, hound::SampleFormat::Int),
            WavEncoding::Pcm24 => (24, hound::SampleFormat::Int),
            WavEncoding::Float32 => (32, hound::SampleFormat::Float),
        };
        hound::WavSpec {
            channels: 1,
            sample_rate,
            bits_per_sample,
            sample_format,
        }
    }

    /// Magnitude of the most negative integer code (2^(bits-1)).
    fn int_scale(self) -> Option<f64> {
        match self {
            WavEncoding::Pcm16 => Some(32768.0),
            WavEncoding::Pcm24 => Some(8_388_608.0),
            WavEncoding::Float32 => None,
        }
    }

    fn from_spec(spec: &hound::WavSpec) -> Result<Self, AudioError> {
        match (spec.sample_format, spec.bits_per_sample) {
            (hound::SampleFormat::Int, 16) => Ok(WavEncoding::Pcm16),
            (hound::SampleFormat::Int, 24) => Ok(WavEncoding::Pcm24),
            (hound::SampleFormat::Float, 32) => Ok(WavEncoding::Float32),
            (fmt, bits) => Err(AudioError::UnsupportedEncoding(format!(
                "{bits}-bit {fmt:?} samples"
            ))),
        }
    }
}

// The file is already open when hound runs, so read errors mean a short or
// garbled chunk rather than a filesystem problem.
fn map_hound(err: hound::Error) -> AudioError {
    match err {
        hound::Error::IoError(source) => AudioError::MalformedWav(source.to_string()),
        hound::Error::Unsupported => {
            AudioError::UnsupportedEncoding("compressed or unknown format code".into())
        }
        hound::Error::InvalidSampleFormat => {
            AudioError::UnsupportedEncoding("invalid sample format".into())
        }
        other => AudioError::MalformedWav(other.to_string()),
    }
}

/// Reads a WAV file, downmixing to mono by per-frame mean.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, AudioError> {
    read_wav_with_encoding(path).map(|(buf, _)| buf)
}

/// Like [`read_wav`], also reporting the stored sample encoding.
pub fn read_wav_with_encoding(
    path: impl AsRef<Path>,
) -> Result<(AudioBuffer, WavEncoding), AudioError> {
    let reader = open(path.as_ref())?;
    decode(reader).map_err(|e| match e {
        DecodeError::Hound(h) => map_hound(h),
        DecodeError::Audio(a) => a,
    })
}

fn open(path: &Path) -> Result<hound::WavReader<BufReader<File>>, AudioError> {
    let file = File::open(path).map_err(|source| AudioError::IoFailure {
        path: path.display().to_string(),
        source,
    })?;
    hound::WavReader::new(BufReader::new(file)).map_err(map_hound)
}

enum DecodeError {
    Hound(hound::Error),
    Audio(AudioError),
}

fn decode<R: Read>(reader: hound::WavReader<R>) -> Result<(AudioBuffer, WavEncoding), DecodeError> {
    let spec = reader.spec();
    let encoding = WavEncoding::from_spec(&spec).map_err(DecodeError::Audio)?;
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(DecodeError::Audio(AudioError::MalformedWav(
            "zero channels".into(),
        )));
    }

    let interleaved: Vec<f64> = match encoding.int_scale() {
        Some(scale) => reader
            .into_samples::<i32>()
            .map(|s| s.map(|v| v as f64 / scale))
            .collect::<Result<_, _>>()
            .map_err(DecodeError::Hound)?,
        None => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(DecodeError::Hound)?,
    };
    if !interleaved.len().is_multiple_of(channels) {
        return Err(DecodeError::Audio(AudioError::MalformedWav(
            "trailing partial frame".into(),
        )));
    }

    let mono = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    let buf = AudioBuffer::new(mono, spec.sample_rate).map_err(DecodeError::Audio)?;
    Ok((buf, encoding))
}

/// Duration in seconds from the header alone, without decoding samples.
pub fn wav_duration_s(path: impl AsRef<Path>) -> Result<f64, AudioError> {
    let reader = open(path.as_ref())?;
    let spec = reader.spec();
    WavEncoding::from_spec(&spec)?;
    if spec.sample_rate == 0 {
        return Err(AudioError::InvalidRate(0));
    }
    Ok(reader.duration() as f64 / spec.sample_rate as f64)
}

/// Writes `buf` as a mono WAV file.
///
/// Integer encodings clamp to `[-1, 1]` and round half away from zero, so a
/// sample of exactly +1.0 lands on the largest positive code.
pub fn write_wav(
    buf: &AudioBuffer,
    path: impl AsRef<Path>,
    enc: WavEncoding,
) -> Result<(), AudioError> {
    let path = path.as_ref();
    let bytes = encode_wav(buf, enc)?;
    std::fs::write(path, bytes).map_err(|source| AudioError::IoFailure {
        path: path.display().to_string(),
        source,
    })
}

/// Serializes `buf` to an in-memory WAV file.
pub fn encode_wav(buf: &AudioBuffer, enc: WavEncoding) -> Result<Vec<u8>, AudioError> {
    let mut cursor = Cursor::new(Vec::new());
    write_to(&mut cursor, buf, enc).map_err(|e| match e {
        hound::Error::IoError(source) => AudioError::IoFailure {
            path: "<memory>".into(),
            source,
        },
        other => AudioError::MalformedWav(other.to_string()),
    })?;
    Ok(cursor.into_inner())
}

fn write_to<W: Write + Seek>(
    w: &mut W,
    buf: &AudioBuffer,
    enc: WavEncoding,
) -> Result<(), hound::Error> {
    let mut writer = hound::WavWriter::new(w, enc.spec(buf.sample_rate()))?;
    match enc.int_scale() {
        Some(scale) => {
            let (lo, hi) = (-scale, scale - 1.0);
            for &s in buf.samples() {
                let q = (s.clamp(-1.0, 1.0) * scale).round().clamp(lo, hi);
                writer.write_sample(q as i32)?;
            }
        }
        None => {
            for &s in buf.samples() {
                writer.write_sample(s as f32)?;
            }
        }
    }
    writer.finalize()
}
