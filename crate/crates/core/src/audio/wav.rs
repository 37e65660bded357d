use std::io::Cursor;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// Decodes a PCM16 WAV file into floats in [-1, 1]; stereo is averaged.
pub fn load_wav(path: impl AsRef<Path>) -> Result<(Vec<f64>, u32)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_wav(&bytes).map_err(|msg| Error::Audio {
        path: path.to_path_buf(),
        msg,
    })
}

/// Decodes PCM16 WAV bytes. Errors are plain messages so callers can attach a path.
pub fn read_wav(bytes: &[u8]) -> std::result::Result<(Vec<f64>, u32), String> {
    let reader = WavReader::new(Cursor::new(bytes)).map_err(|e| e.to_string())?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(format!(
            "unsupported encoding: {:?} {}-bit (only PCM 16-bit)",
            spec.sample_format, spec.bits_per_sample
        ));
    }
    let channels = spec.channels as usize;
    if channels != 1 && channels != 2 {
        return Err(format!("unsupported channel count {channels}"));
    }
    let raw = reader
        .into_samples::<i16>()
        .collect::<std::result::Result<Vec<i16>, _>>()
        .map_err(|e| e.to_string())?;
    if raw.len() % channels != 0 {
        return Err("truncated stereo frame".into());
    }
    let samples = raw
        .chunks(channels)
        .map(|frame| {
            let sum: f64 = frame.iter().map(|&v| v as f64).sum();
            sum / channels as f64 / 32768.0
        })
        .collect();
    Ok((samples, spec.sample_rate))
}

/// Maps a float in [-1, 1] to int16 by `round(x * 32768)` with clamping.
pub fn quantize(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Encodes mono int16 samples as WAV bytes.
pub fn wav_bytes(samples: &[i16], rate: u32) -> Result<Vec<u8>> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut cursor = Cursor::new(Vec::new());
    {
        let mut w = WavWriter::new(&mut cursor, spec)
            .map_err(|e| Error::Data(format!("wav encode: {e}")))?;
        for &s in samples {
            w.write_sample(s)
                .map_err(|e| Error::Data(format!("wav encode: {e}")))?;
        }
        w.finalize()
            .map_err(|e| Error::Data(format!("wav encode: {e}")))?;
    }
    Ok(cursor.into_inner())
}

pub fn write_wav(path: impl AsRef<Path>, samples: &[i16], rate: u32) -> Result<()> {
    let path = path.as_ref();
    let bytes = wav_bytes(samples, rate)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stereo_bytes(frames: &[(i16, i16)]) -> Vec<u8> {
        let spec = WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut cursor = Cursor::new(Vec::new());
        {
            let mut w = WavWriter::new(&mut cursor, spec).unwrap();
            for &(l, r) in frames {
                w.write_sample(l).unwrap();
                w.write_sample(r).unwrap();
            }
            w.finalize().unwrap();
        }
        cursor.into_inner()
    }

    #[test]
    fn scaling_and_extremes() {
        let bytes = wav_bytes(&[16384, -32768, 0, 32767], 16000).unwrap();
        let (s, rate) = read_wav(&bytes).unwrap();
        assert_eq!(rate, 16000);
        assert_eq!(s, vec![0.5, -1.0, 0.0, 32767.0 / 32768.0]);
    }

    #[test]
    fn stereo_downmix() {
        let (s, rate) = read_wav(&stereo_bytes(&[(1000, 3000), (-2, 4)])).unwrap();
        assert_eq!(rate, 8000);
        assert_eq!(s, vec![2000.0 / 32768.0, 1.0 / 32768.0]);
    }

    #[test]
    fn round_trip_exact() {
        let vals: Vec<i16> = (-300..300).map(|i| (i * 109) as i16).collect();
        let (s, _) = read_wav(&wav_bytes(&vals, 22050).unwrap()).unwrap();
        let back: Vec<i16> = s.iter().map(|&x| quantize(x)).collect();
        assert_eq!(back, vals);
    }

    #[test]
    fn rejects_other_encodings() {
        let spec = WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        };
        let mut cursor = Cursor::new(Vec::new());
        {
            let mut w = WavWriter::new(&mut cursor, spec).unwrap();
            w.write_sample(0.25f32).unwrap();
            w.finalize().unwrap();
        }
        assert!(read_wav(&cursor.into_inner()).unwrap_err().contains("unsupported"));
        assert!(read_wav(b"RIFF\x00\x00").is_err());
        assert!(read_wav(b"not a wav file at all").is_err());
    }

    #[test]
    fn quantize_clamps() {
        assert_eq!(quantize(1.0), 32767);
        assert_eq!(quantize(-1.5), -32768);
        assert_eq!(quantize(0.5), 16384);
    }

    #[test]
    fn load_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.wav");
        std::fs::write(&p, b"junk").unwrap();
        match load_wav(&p) {
            Err(Error::Audio { path, .. }) => assert_eq!(path, p),
            other => panic!("{other:?}"),
        }
        assert!(matches!(load_wav(dir.path().join("missing.wav")), Err(Error::Io { .. })));
    }
}
