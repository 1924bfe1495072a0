use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use jpp_core::{par, ChallengeFactor, JointSet, LabelMap, RgbImage};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SynthError;
use crate::factors::derive_factors;
use crate::io;
use crate::render::{apply_occlusion, rasterize_person, sample_occluders, Appearance, RenderStyle};
use crate::skeleton::{sample_pose, SkeletonSpec};

pub const FORMAT_VERSION: u32 = 1;
pub const SPLITS: [&str; 3] = ["train", "val", "test"];

/// One generated or loaded sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub id: String,
    pub image: RgbImage,
    pub labels: LabelMap,
    pub joints: JointSet,
    pub factors: Vec<ChallengeFactor>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub canvas_height: usize,
    pub canvas_width: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        // a 1:100 echo of the real split sizes
        Self {
            seed: 0,
            canvas_height: 128,
            canvas_width: 128,
            train: 305,
            val: 100,
            test: 100,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenConfig {
    seed: Option<i64>,
    canvas_height: Option<i64>,
    canvas_width: Option<i64>,
    train: Option<i64>,
    val: Option<i64>,
    test: Option<i64>,
}

impl GenConfig {
    /// Parses a flat TOML table; missing keys take defaults, negative or
    /// zero-sized values are rejected with the offending key named.
    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let raw: RawGenConfig = toml::from_str(text).map_err(|e| SynthError::Config {
            key: "<file>".into(),
            reason: e.to_string(),
        })?;
        let d = Self::default();
        let count = |key: &str, v: Option<i64>, default: usize, min: i64| -> Result<usize, SynthError> {
            match v {
                None => Ok(default),
                Some(v) if v < min => Err(SynthError::Config {
                    key: key.into(),
                    reason: format!("must be at least {min}, got {v}"),
                }),
                Some(v) => Ok(v as usize),
            }
        };
        let seed = match raw.seed {
            None => d.seed,
            Some(s) if s < 0 => {
                return Err(SynthError::Config {
                    key: "seed".into(),
                    reason: format!("must be non-negative, got {s}"),
                })
            }
            Some(s) => s as u64,
        };
        Ok(Self {
            seed,
            canvas_height: count("canvas_height", raw.canvas_height, d.canvas_height, 32)?,
            canvas_width: count("canvas_width", raw.canvas_width, d.canvas_width, 32)?,
            train: count("train", raw.train, d.train, 0)?,
            val: count("val", raw.val, d.val, 0)?,
            test: count("test", raw.test, d.test, 0)?,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serialises")
    }

    fn split_count(&self, split: &str) -> usize {
        match split {
            "train" => self.train,
            "val" => self.val,
            _ => self.test,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub seed: u64,
    pub canvas: (usize, usize),
    /// Split name to ordered sample ids.
    pub splits: BTreeMap<String, Vec<String>>,
    pub factors: BTreeMap<String, Vec<ChallengeFactor>>,
}

impl DatasetManifest {
    pub fn ids(&self, split: &str) -> Result<&[String], SynthError> {
        self.splits
            .get(split)
            .map(Vec::as_slice)
            .ok_or_else(|| SynthError::UnknownSplit(split.to_string()))
    }

    pub fn split_of(&self, id: &str) -> Option<&str> {
        self.splits
            .iter()
            .find(|(_, ids)| ids.iter().any(|i| i == id))
            .map(|(s, _)| s.as_str())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serialises");
        s.push('\n');
        s
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample stream seed; depends only on the dataset seed and the id.
pub fn sample_seed(seed: u64, id: &str) -> u64 {
    id.bytes().fold(splitmix(seed), |h, b| splitmix(h ^ b as u64))
}

pub fn sample_id(split: &str, index: usize) -> String {
    format!("{split}_{index:05}")
}

/// Render one complete sample.
pub fn generate_sample(
    seed: u64,
    id: &str,
    canvas: (usize, usize),
    spec: &SkeletonSpec,
    style: &RenderStyle,
) -> Result<SampleRecord, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, id));
    let look = Appearance::sample(&mut rng, style);
    let mut pose = sample_pose(&mut rng, canvas, spec)?;
    if look.back_view {
        pose = pose.mirrored(canvas.1);
    }
    let annotated = pose.annotate(canvas.0, canvas.1);
    let occluders = sample_occluders(&mut rng, &annotated, canvas, style);
    let joints = apply_occlusion(&annotated, &occluders);
    let (image, labels) = rasterize_person(&pose, &look, style, &occluders, canvas);
    Ok(SampleRecord {
        id: id.to_string(),
        image,
        labels,
        factors: derive_factors(&joints),
        joints,
    })
}

fn split_dir(root: &Path, split: &str) -> PathBuf {
    root.join(split)
}

pub fn image_path(root: &Path, split: &str, id: &str) -> PathBuf {
    split_dir(root, split).join("images").join(format!("{id}.png"))
}

pub fn label_path(root: &Path, split: &str, id: &str) -> PathBuf {
    split_dir(root, split).join("labels").join(format!("{id}.png"))
}

pub fn poses_path(root: &Path) -> PathBuf {
    root.join("poses.json")
}

pub fn manifest_path(root: &Path) -> PathBuf {
    root.join("manifest.json")
}

/// Writes the whole dataset under `root` and returns its manifest. Samples
/// are rendered in parallel; output bytes depend only on `config`.
pub fn generate_dataset(config: &GenConfig, root: &Path) -> Result<DatasetManifest, SynthError> {
    let canvas = (config.canvas_height, config.canvas_width);
    let spec = SkeletonSpec::for_canvas(canvas.0, canvas.1);
    let style = RenderStyle::for_canvas(canvas.0, canvas.1);
    let mut splits = BTreeMap::new();
    let mut factors = BTreeMap::new();
    let mut poses = BTreeMap::new();
    for split in SPLITS {
        let n = config.split_count(split);
        let ids: Vec<String> = (0..n).map(|i| sample_id(split, i)).collect();
        let records = par::try_map_range(n, |i| {
            let rec = generate_sample(config.seed, &ids[i], canvas, &spec, &style)?;
            io::write_file(&image_path(root, split, &rec.id), &io::encode_rgb_png(&rec.image))?;
            io::write_file(&label_path(root, split, &rec.id), &io::encode_label_png(&rec.labels))?;
            Ok::<_, SynthError>((rec.id, rec.joints, rec.factors))
        })?;
        for (id, joints, tags) in records {
            poses.insert(id.clone(), joints);
            factors.insert(id, tags);
        }
        splits.insert(split.to_string(), ids);
    }
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        seed: config.seed,
        canvas,
        splits,
        factors,
    };
    io::write_file(&poses_path(root), io::poses_to_json(&poses).as_bytes())?;
    io::write_file(&manifest_path(root), manifest.to_json().as_bytes())?;
    io::write_file(
        &root.join("taxonomy.tsv"),
        jpp_core::taxonomy::taxonomy_table().as_bytes(),
    )?;
    Ok(manifest)
}

/// Read access to a generated dataset.
///
/// Joint annotations are only read from disk when a caller asks for them;
/// [`Dataset::pose_reads`] counts how often that happened.
pub struct Dataset {
    root: PathBuf,
    manifest: DatasetManifest,
    split_of: HashMap<String, String>,
    poses: OnceLock<BTreeMap<String, JointSet>>,
    pose_reads: AtomicUsize,
}

impl Dataset {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, SynthError> {
        let root = root.into();
        let mpath = manifest_path(&root);
        let text = std::fs::read_to_string(&mpath).map_err(|e| SynthError::io(&mpath, e))?;
        let manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| SynthError::Format {
            path: mpath.clone(),
            reason: e.to_string(),
        })?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(SynthError::Format {
                path: mpath,
                reason: format!("unsupported format version {}", manifest.format_version),
            });
        }
        let mut split_of = HashMap::new();
        for (split, ids) in &manifest.splits {
            for id in ids {
                if split_of.insert(id.clone(), split.clone()).is_some() {
                    return Err(SynthError::Format {
                        path: mpath,
                        reason: format!("id {id} listed twice"),
                    });
                }
            }
        }
        Ok(Self {
            root,
            manifest,
            split_of,
            poses: OnceLock::new(),
            pose_reads: AtomicUsize::new(0),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub fn ids(&self, split: &str) -> Result<&[String], SynthError> {
        self.manifest.ids(split)
    }

    /// Number of times `poses.json` has been read through this handle.
    pub fn pose_reads(&self) -> usize {
        self.pose_reads.load(Ordering::SeqCst)
    }

    fn split(&self, id: &str) -> Result<&str, SynthError> {
        self.split_of
            .get(id)
            .map(String::as_str)
            .ok_or_else(|| SynthError::UnknownId(id.to_string()))
    }

    fn poses(&self) -> Result<&BTreeMap<String, JointSet>, SynthError> {
        if let Some(p) = self.poses.get() {
            return Ok(p);
        }
        self.pose_reads.fetch_add(1, Ordering::SeqCst);
        let p = io::read_poses(&poses_path(&self.root))?;
        Ok(self.poses.get_or_init(|| p))
    }

    pub fn load_image(&self, id: &str) -> Result<RgbImage, SynthError> {
        io::read_rgb_png(&image_path(&self.root, self.split(id)?, id), id)
    }

    pub fn load_labels(&self, id: &str) -> Result<LabelMap, SynthError> {
        io::read_label_png(&label_path(&self.root, self.split(id)?, id), id)
    }

    pub fn load_joints(&self, id: &str) -> Result<JointSet, SynthError> {
        self.poses()?
            .get(id)
            .copied()
            .ok_or_else(|| SynthError::MalformedJoints {
                id: id.to_string(),
                reason: "no record in poses.json".into(),
            })
    }

    pub fn factors(&self, id: &str) -> Vec<ChallengeFactor> {
        self.manifest.factors.get(id).cloned().unwrap_or_default()
    }

    pub fn load_sample(&self, id: &str) -> Result<SampleRecord, SynthError> {
        let image = self.load_image(id)?;
        let labels = self.load_labels(id)?;
        if (image.height(), image.width()) != (labels.height(), labels.width()) {
            return Err(SynthError::BadSample {
                id: id.to_string(),
                reason: "image and label map differ in size".into(),
            });
        }
        Ok(SampleRecord {
            id: id.to_string(),
            image,
            labels,
            joints: self.load_joints(id)?,
            factors: self.factors(id),
        })
    }

    /// Image and labels only; never touches the joint annotations.
    pub fn load_parsing_sample(&self, id: &str) -> Result<(RgbImage, LabelMap), SynthError> {
        Ok((self.load_image(id)?, self.load_labels(id)?))
    }

    pub fn iter_split<'a>(
        &'a self,
        split: &str,
    ) -> Result<impl Iterator<Item = Result<SampleRecord, SynthError>> + 'a, SynthError> {
        Ok(self.ids(split)?.iter().map(move |id| self.load_sample(id)))
    }
}

pub fn load_sample(root: &Path, id: &str) -> Result<SampleRecord, SynthError> {
    Dataset::open(root)?.load_sample(id)
}

/// All samples of a split in manifest order.
pub fn iterate_split(root: &Path, split: &str) -> Result<Vec<SampleRecord>, SynthError> {
    let ds = Dataset::open(root)?;
    let out = ds.iter_split(split)?.collect();
    out
}
