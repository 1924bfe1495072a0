//! On-disk encodings: 8-bit RGB PNG images, 8-bit single-channel PNG label
//! maps (pixel value = class index) and the `poses.json` joint table.

use std::collections::BTreeMap;
use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, ImageReader};
use jpp_core::{Joint, JointSet, LabelMap, RgbImage, Visibility, NUM_JOINTS};
use serde_json::Value;

use crate::error::SynthError;

pub fn encode_rgb_png(img: &RgbImage) -> Vec<u8> {
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, img.as_raw().to_vec())
        .expect("buffer size matches dimensions");
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png).expect("in-memory png encode");
    out.into_inner()
}

pub fn encode_label_png(m: &LabelMap) -> Vec<u8> {
    let buf = image::GrayImage::from_raw(m.width() as u32, m.height() as u32, m.as_raw().to_vec())
        .expect("buffer size matches dimensions");
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png).expect("in-memory png encode");
    out.into_inner()
}

fn open_png(path: &Path, id: &str) -> Result<image::DynamicImage, SynthError> {
    if !path.exists() {
        return Err(SynthError::MissingFile {
            id: id.to_string(),
            path: path.to_path_buf(),
        });
    }
    ImageReader::open(path)
        .map_err(|e| SynthError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| SynthError::io(path, e))?
        .decode()
        .map_err(|e| SynthError::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

pub fn read_rgb_png(path: &Path, id: &str) -> Result<RgbImage, SynthError> {
    let img = open_png(path, id)?;
    let rgb = match img {
        image::DynamicImage::ImageRgb8(b) => b,
        other => other.to_rgb8(),
    };
    let (w, h) = rgb.dimensions();
    Ok(RgbImage::from_raw(h as usize, w as usize, rgb.into_raw()).expect("decoder dimensions"))
}

/// Label PNGs must be 8-bit single channel; any value above 19 is an error.
pub fn read_label_png(path: &Path, id: &str) -> Result<LabelMap, SynthError> {
    let img = open_png(path, id)?;
    let gray = match img {
        image::DynamicImage::ImageLuma8(b) => b,
        _ => {
            return Err(SynthError::BadSample {
                id: id.to_string(),
                reason: format!("{} is not an 8-bit single-channel png", path.display()),
            })
        }
    };
    let (w, h) = gray.dimensions();
    LabelMap::from_raw(h as usize, w as usize, gray.into_raw()).map_err(|e| match e {
        jpp_core::CoreError::LabelOutOfRange(value) => SynthError::LabelOutOfRange {
            id: id.to_string(),
            value,
        },
        other => SynthError::BadSample {
            id: id.to_string(),
            reason: other.to_string(),
        },
    })
}

/// `[x, y, v]` records; absent joints are written as `[-1, -1, 0]`.
pub fn poses_to_json(poses: &BTreeMap<String, JointSet>) -> String {
    let table: BTreeMap<&str, Vec<(f64, f64, u8)>> = poses
        .iter()
        .map(|(id, js)| {
            let recs = js
                .0
                .iter()
                .map(|j| {
                    if j.is_present() {
                        (j.x, j.y, j.vis.code())
                    } else {
                        (-1.0, -1.0, 0)
                    }
                })
                .collect();
            (id.as_str(), recs)
        })
        .collect();
    let mut s = serde_json::to_string(&table).expect("plain data serialises");
    s.push('\n');
    s
}

pub fn poses_from_json(text: &str, path: &Path) -> Result<BTreeMap<String, JointSet>, SynthError> {
    let raw: BTreeMap<String, Value> = serde_json::from_str(text).map_err(|e| SynthError::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    raw.into_iter()
        .map(|(id, v)| {
            let js = parse_joint_record(&v).map_err(|reason| SynthError::MalformedJoints {
                id: id.clone(),
                reason,
            })?;
            Ok((id, js))
        })
        .collect()
}

fn parse_joint_record(v: &Value) -> Result<JointSet, String> {
    let arr = v.as_array().ok_or("expected an array of joint records")?;
    if arr.len() != NUM_JOINTS {
        return Err(format!("expected {NUM_JOINTS} records, found {}", arr.len()));
    }
    let mut js = JointSet::absent();
    for (i, rec) in arr.iter().enumerate() {
        let r = rec
            .as_array()
            .filter(|r| r.len() == 3)
            .ok_or_else(|| format!("joint {i}: expected [x, y, v]"))?;
        let x = r[0].as_f64().ok_or_else(|| format!("joint {i}: x is not a number"))?;
        let y = r[1].as_f64().ok_or_else(|| format!("joint {i}: y is not a number"))?;
        let code = r[2]
            .as_u64()
            .and_then(|c| u8::try_from(c).ok())
            .and_then(Visibility::from_code)
            .ok_or_else(|| format!("joint {i}: visibility must be 0, 1 or 2"))?;
        if code == Visibility::Absent {
            if x != -1.0 || y != -1.0 {
                return Err(format!("joint {i}: absent joints must be at (-1, -1)"));
            }
        } else {
            js.0[i] = Joint { x, y, vis: code };
        }
    }
    Ok(js)
}

pub fn read_poses(path: &Path) -> Result<BTreeMap<String, JointSet>, SynthError> {
    let text = std::fs::read_to_string(path).map_err(|e| SynthError::io(path, e))?;
    poses_from_json(&text, path)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), SynthError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| SynthError::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| SynthError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use jpp_core::JointId;

    #[test]
    fn joint_records_round_trip() {
        let mut j = JointSet::absent();
        j.set(JointId::PELVIS, Joint::visible(12.015625, 3.5));
        j.set(JointId::L_KNEE, Joint::occluded(0.0, 127.984375));
        let poses = BTreeMap::from([("a".to_string(), j)]);
        let text = poses_to_json(&poses);
        assert_eq!(poses_from_json(&text, Path::new("x")).unwrap(), poses);
    }

    #[test]
    fn malformed_records_name_the_sample() {
        let bad = r#"{"s1": [[1, 2, 3]]}"#;
        let err = poses_from_json(bad, Path::new("p")).unwrap_err();
        assert!(matches!(err, SynthError::MalformedJoints { ref id, .. } if id == "s1"));
        let mut recs = vec!["[-1,-1,0]"; 16];
        recs[3] = "[1,1,7]";
        let bad = format!(r#"{{"s2": [{}]}}"#, recs.join(","));
        let err = poses_from_json(&bad, Path::new("p")).unwrap_err();
        assert!(err.to_string().contains("s2"));
    }
}
