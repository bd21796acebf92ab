use std::io::Cursor;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

pub const SAMPLE_RATE: u32 = 16_000;

const SPEC: WavSpec = WavSpec {
    channels: 1,
    sample_rate: SAMPLE_RATE,
    bits_per_sample: 16,
    sample_format: SampleFormat::Int,
};

/// Mono 16-bit PCM at 16 kHz.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Waveform {
    samples: Vec<i16>,
}

impl Waveform {
    pub fn new(samples: Vec<i16>) -> Self {
        Waveform { samples }
    }

    /// Rejects anything other than mono at [`SAMPLE_RATE`].
    pub fn from_parts(samples: Vec<i16>, sample_rate: u32, channels: u16) -> Result<Self> {
        if sample_rate != SAMPLE_RATE {
            return Err(Error::Audio(format!(
                "sample rate {sample_rate} Hz, expected {SAMPLE_RATE} Hz (resampling is not supported)"
            )));
        }
        if channels != 1 {
            return Err(Error::Audio(format!("{channels} channels, expected mono")));
        }
        Ok(Waveform { samples })
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / SAMPLE_RATE as f64
    }
}

/// Number of silence samples for a gap of `seconds`.
pub(crate) fn silence_samples(seconds: f64) -> Result<usize> {
    if !seconds.is_finite() || seconds < 0.0 {
        return Err(Error::InvalidInput(format!(
            "silence of {seconds} s must be finite and non-negative"
        )));
    }
    Ok((seconds * SAMPLE_RATE as f64).round() as usize)
}

/// `ctx`, then `round(silence_s · 16000)` zero samples, then `test`.
pub fn concat_with_silence(ctx: &Waveform, test: &Waveform, silence_s: f64) -> Result<Waveform> {
    let gap = silence_samples(silence_s)?;
    let mut samples = Vec::with_capacity(ctx.len() + gap + test.len());
    samples.extend_from_slice(&ctx.samples);
    samples.resize(ctx.len() + gap, 0);
    samples.extend_from_slice(&test.samples);
    Ok(Waveform { samples })
}

fn check_spec(spec: WavSpec, what: &str) -> Result<()> {
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::Audio(format!(
            "{what}: {}-bit {:?} samples, expected 16-bit integer PCM",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    Ok(())
}

pub fn read_wav(path: &Path) -> Result<Waveform> {
    let reader = WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Audio(format!("{}: {other}", path.display())),
    })?;
    let spec = reader.spec();
    check_spec(spec, &path.display().to_string())?;
    let samples = reader
        .into_samples::<i16>()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Waveform::from_parts(samples, spec.sample_rate, spec.channels)
        .map_err(|e| Error::Audio(format!("{}: {e}", path.display())))
}

/// Canonical RIFF/WAVE encoding: 44-byte header (`fmt ` chunk of 16 bytes,
/// PCM tag 1, mono, 16 kHz, 32000 B/s, block align 2, 16 bits) followed by a
/// `data` chunk of little-endian samples.
pub fn wav_bytes(wave: &Waveform) -> Result<Vec<u8>> {
    let mut cur = Cursor::new(Vec::with_capacity(44 + 2 * wave.len()));
    {
        let mut w = WavWriter::new(&mut cur, SPEC)?;
        let mut i16w = w.get_i16_writer(wave.len() as u32);
        for &s in &wave.samples {
            i16w.write_sample(s);
        }
        i16w.flush()?;
        w.finalize()?;
    }
    Ok(cur.into_inner())
}

pub fn write_wav(path: &Path, wave: &Waveform) -> Result<()> {
    let bytes = wav_bytes(wave)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
