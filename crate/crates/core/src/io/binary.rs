use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point2D;
use crate::io::{read_bytes, write_atomic};
use crate::phantom::{Region, ScattererField};
use crate::tracking::{DisplacementField, PointTrajectories};

pub const FLOW_MAGIC: &[u8; 8] = b"STRNFLW1";
pub const TRAJECTORY_MAGIC: &[u8; 8] = b"STRNTRJ1";
pub const SCATTERER_MAGIC: &[u8; 8] = b"STRNSCT1";
pub const SCATTERER_VERSION: u32 = 1;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let out = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(out)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn f32(&mut self) -> Option<f32> {
        self.take(4).map(|b| f32::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64(&mut self) -> Option<f64> {
        self.take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }

    fn u8(&mut self) -> Option<u8> {
        self.take(1).map(|b| b[0])
    }
}

fn check_magic(r: &mut Reader, magic: &[u8; 8], record: &str) -> Result<()> {
    match r.take(8) {
        Some(m) if m == magic => Ok(()),
        Some(m) if m[..7] == magic[..7] => Err(Error::format(
            record,
            format!("unsupported version {:?}", String::from_utf8_lossy(&m[7..])),
        )),
        Some(_) => Err(Error::format(record, format!("bad magic, expected {}", String::from_utf8_lossy(magic)))),
        None => Err(Error::format(record, "truncated magic")),
    }
}

/// Concatenated flow records, one per field.
pub fn encode_flow(fields: &[DisplacementField]) -> Vec<u8> {
    let mut out = Vec::new();
    for f in fields {
        out.extend_from_slice(FLOW_MAGIC);
        for v in [f.width, f.height, f.from_frame, f.to_frame] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&f.pixel_pitch.to_le_bytes());
        for v in &f.vectors {
            out.extend_from_slice(&v[0].to_le_bytes());
            out.extend_from_slice(&v[1].to_le_bytes());
        }
    }
    out
}

pub fn decode_flow(bytes: &[u8]) -> Result<Vec<DisplacementField>> {
    let mut r = Reader::new(bytes);
    let mut fields = Vec::new();
    while r.remaining() > 0 {
        let k = fields.len();
        let record = format!("flow record {k}");
        check_magic(&mut r, FLOW_MAGIC, &record)?;
        let header: Option<Vec<u32>> = (0..4).map(|_| r.u32()).collect();
        let Some(header) = header else {
            return Err(Error::format(record, "truncated header"));
        };
        let (w, h, from, to) = (header[0] as usize, header[1] as usize, header[2] as usize, header[3] as usize);
        let frame = format!("flow record {k} (frame {from} -> {to})");
        let pitch = r.f32().ok_or_else(|| Error::format(&frame, "truncated header"))?;
        let n = w * h;
        if r.remaining() < n * 8 {
            return Err(Error::format(
                frame,
                format!("truncated: frame {from} needs {} bytes of vectors, {} remain", n * 8, r.remaining()),
            ));
        }
        let mut vectors = Vec::with_capacity(n);
        for i in 0..n {
            let v = [r.f32().unwrap(), r.f32().unwrap()];
            if !v[0].is_finite() || !v[1].is_finite() {
                return Err(Error::format(
                    frame,
                    format!("non-finite vector at pixel {i} (col {}, row {})", i % w, i / w),
                ));
            }
            vectors.push(v);
        }
        fields.push(DisplacementField::new(w, h, pitch, from, to, vectors).map_err(|e| match e {
            Error::Format { .. } => e,
            other => Error::format(format!("flow record {k}"), other.to_string()),
        })?);
    }
    Ok(fields)
}

pub fn encode_trajectories(traj: &PointTrajectories) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + traj.positions().len() * 9);
    out.extend_from_slice(TRAJECTORY_MAGIC);
    for v in [traj.n_points, traj.n_frames, traj.reference_frame] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for (p, &vis) in traj.positions().iter().zip(traj.all_visibility()) {
        out.extend_from_slice(&(p.x as f32).to_le_bytes());
        out.extend_from_slice(&(p.y as f32).to_le_bytes());
        out.push(vis as u8);
    }
    out
}

pub fn decode_trajectories(bytes: &[u8]) -> Result<PointTrajectories> {
    let mut r = Reader::new(bytes);
    check_magic(&mut r, TRAJECTORY_MAGIC, "trajectory header")?;
    let header: Option<Vec<u32>> = (0..3).map(|_| r.u32()).collect();
    let header = header.ok_or_else(|| Error::format("trajectory header", "truncated header"))?;
    let (n_points, n_frames, reference) = (header[0] as usize, header[1] as usize, header[2] as usize);
    let mut positions = Vec::with_capacity(n_points * n_frames);
    let mut visibility = Vec::with_capacity(n_points * n_frames);
    for t in 0..n_frames {
        if r.remaining() < n_points * 9 {
            return Err(Error::format(format!("trajectory frame {t}"), "truncated: frame missing"));
        }
        for i in 0..n_points {
            let (x, y, v) = (r.f32().unwrap(), r.f32().unwrap(), r.u8().unwrap());
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::format(format!("trajectory frame {t}"), format!("non-finite position for point {i}")));
            }
            if v > 1 {
                return Err(Error::format(format!("trajectory frame {t}"), format!("invalid visibility byte for point {i}")));
            }
            positions.push(Point2D::new(x as f64, y as f64));
            visibility.push(v == 1);
        }
    }
    if r.remaining() > 0 {
        return Err(Error::format("trajectory trailer", format!("{} unexpected trailing bytes", r.remaining())));
    }
    PointTrajectories::new(n_points, n_frames, reference, positions, visibility)
        .map_err(|e| Error::format("trajectory header", e.to_string()))
}

pub fn encode_scatterers(field: &ScattererField) -> Vec<u8> {
    let mut out = Vec::with_capacity(48 + field.len() * 13);
    out.extend_from_slice(SCATTERER_MAGIC);
    for v in [
        SCATTERER_VERSION as usize,
        field.frame_index,
        field.len(),
        field.count(Region::Myocardium),
        field.count(Region::Background),
        field.count(Region::Cavity),
    ] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&field.coherence_ratio.to_le_bytes());
    for i in 0..field.len() {
        let p = field.positions[i];
        out.extend_from_slice(&(p.x as f32).to_le_bytes());
        out.extend_from_slice(&(p.y as f32).to_le_bytes());
        out.extend_from_slice(&(field.amplitudes[i] as f32).to_le_bytes());
        out.push(field.coherent[i] as u8);
    }
    out
}

pub fn decode_scatterers(bytes: &[u8]) -> Result<ScattererField> {
    let mut r = Reader::new(bytes);
    check_magic(&mut r, SCATTERER_MAGIC, "scatterer header")?;
    let header: Option<Vec<u32>> = (0..6).map(|_| r.u32()).collect();
    let header = header.ok_or_else(|| Error::format("scatterer header", "truncated header"))?;
    if header[0] != SCATTERER_VERSION {
        return Err(Error::format("scatterer header", format!("unsupported version {}", header[0])));
    }
    let frame = header[1] as usize;
    let record = format!("scatterer frame {frame}");
    let n = header[2] as usize;
    let counts = [header[3] as usize, header[4] as usize, header[5] as usize];
    if counts.iter().sum::<usize>() != n {
        return Err(Error::format(record, "region counts do not add up to the scatterer count"));
    }
    let coherence = r.f64().ok_or_else(|| Error::format(&record, "truncated header"))?;
    if r.remaining() != n * 13 {
        return Err(Error::format(record, format!("expected {} bytes of records, found {}", n * 13, r.remaining())));
    }
    let mut positions = Vec::with_capacity(n);
    let mut amplitudes = Vec::with_capacity(n);
    let mut coherent = Vec::with_capacity(n);
    for _ in 0..n {
        positions.push(Point2D::new(r.f32().unwrap() as f64, r.f32().unwrap() as f64));
        amplitudes.push(r.f32().unwrap() as f64);
        coherent.push(r.u8().unwrap() != 0);
    }
    let regions = [Region::Myocardium, Region::Background, Region::Cavity]
        .iter()
        .zip(counts)
        .flat_map(|(&r, c)| std::iter::repeat_n(r, c))
        .collect();
    ScattererField::new(frame, coherence, positions, amplitudes, coherent, regions)
        .map_err(|e| Error::format(format!("scatterer frame {frame}"), e.to_string()))
}

pub fn write_flow_file(path: &Path, fields: &[DisplacementField]) -> Result<()> {
    write_atomic(path, &encode_flow(fields))
}

pub fn read_flow_file(path: &Path) -> Result<Vec<DisplacementField>> {
    decode_flow(&read_bytes(path)?)
}

pub fn write_trajectory_file(path: &Path, traj: &PointTrajectories) -> Result<()> {
    write_atomic(path, &encode_trajectories(traj))
}

pub fn read_trajectory_file(path: &Path) -> Result<PointTrajectories> {
    decode_trajectories(&read_bytes(path)?)
}

pub fn write_scatterer_file(path: &Path, field: &ScattererField) -> Result<()> {
    write_atomic(path, &encode_scatterers(field))
}

pub fn read_scatterer_file(path: &Path) -> Result<ScattererField> {
    decode_scatterers(&read_bytes(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExternalKind {
    Flow,
    Trajectory,
}

/// Dimensions an ingested file must agree with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequenceShape {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ingested {
    Flow(Vec<DisplacementField>),
    Trajectories(PointTrajectories),
}

/// Reads externally produced motion and checks it against the sequence.
pub fn ingest_external(path: &Path, kind: ExternalKind, shape: Option<SequenceShape>) -> Result<Ingested> {
    let bytes = read_bytes(path)?;
    match kind {
        ExternalKind::Flow => {
            let fields = decode_flow(&bytes)?;
            if let Some(s) = shape {
                for (k, f) in fields.iter().enumerate() {
                    if f.width != s.width || f.height != s.height {
                        return Err(Error::format(
                            format!("flow record {k} (frame {})", f.from_frame),
                            format!("{}x{} field for a {}x{} sequence", f.width, f.height, s.width, s.height),
                        ));
                    }
                    if f.from_frame >= s.n_frames || f.to_frame >= s.n_frames {
                        return Err(Error::format(
                            format!("flow record {k} (frame {})", f.from_frame),
                            format!("frames outside a {}-frame sequence", s.n_frames),
                        ));
                    }
                }
            }
            Ok(Ingested::Flow(fields))
        }
        ExternalKind::Trajectory => {
            let traj = decode_trajectories(&bytes)?;
            if let Some(s) = shape {
                if traj.n_frames != s.n_frames {
                    return Err(Error::format(
                        "trajectory header",
                        format!("{} frames for a {}-frame sequence", traj.n_frames, s.n_frames),
                    ));
                }
            }
            Ok(Ingested::Trajectories(traj))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(from: usize, to: usize) -> DisplacementField {
        let v = (0..12).map(|i| [i as f32 * 0.5, -(i as f32)]).collect();
        DisplacementField::new(4, 3, 0.25, from, to, v).unwrap()
    }

    #[test]
    fn flow_round_trip() {
        let fields = vec![field(0, 1), field(1, 0)];
        let bytes = encode_flow(&fields);
        let back = decode_flow(&bytes).unwrap();
        assert_eq!(back, fields);
        assert_eq!(encode_flow(&back), bytes);
    }

    #[test]
    fn truncated_flow_names_frame() {
        let fields = vec![field(0, 1), field(1, 2)];
        let bytes = encode_flow(&fields);
        let err = decode_flow(&bytes[..bytes.len() - 5]).unwrap_err().to_string();
        assert!(err.contains("frame 1"), "{err}");
    }

    #[test]
    fn nan_flow_names_pixel() {
        let mut bytes = encode_flow(&[field(3, 4)]);
        let offset = 8 + 20 + 7 * 8 + 4;
        bytes[offset..offset + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        let err = decode_flow(&bytes).unwrap_err().to_string();
        assert!(err.contains("frame 3") && err.contains("pixel 7"), "{err}");
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = encode_flow(&[field(0, 1)]);
        bytes[7] = b'2';
        assert!(decode_flow(&bytes).unwrap_err().to_string().contains("version"));
        bytes[0] = b'X';
        assert!(decode_flow(&bytes).unwrap_err().to_string().contains("magic"));
    }

    #[test]
    fn trajectory_round_trip_and_truncation() {
        let positions = (0..6).map(|i| Point2D::new(i as f64 * 0.25, 1.5)).collect();
        let traj = PointTrajectories::new(3, 2, 1, positions, vec![true, false, true, true, true, true]).unwrap();
        let bytes = encode_trajectories(&traj);
        assert_eq!(decode_trajectories(&bytes).unwrap(), traj);
        let err = decode_trajectories(&bytes[..bytes.len() - 1]).unwrap_err().to_string();
        assert!(err.contains("frame 1"), "{err}");
    }

    #[test]
    fn scatterer_round_trip() {
        let f = ScattererField::new(
            5,
            0.7,
            vec![Point2D::new(1.5, 2.0), Point2D::new(0.25, 3.0)],
            vec![1.0, 0.5],
            vec![true, false],
            vec![Region::Myocardium, Region::Cavity],
        )
        .unwrap();
        let bytes = encode_scatterers(&f);
        let back = decode_scatterers(&bytes).unwrap();
        assert_eq!(back, f);
        assert_eq!(encode_scatterers(&back), bytes);
    }
}
