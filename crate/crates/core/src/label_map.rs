use crate::error::CoreError;
use crate::taxonomy::{PartLabel, NUM_CLASSES, PART_SWAP};

/// Per-pixel parsing labels, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelMap {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, fill: PartLabel) -> Self {
        Self {
            height,
            width,
            data: vec![fill.index() as u8; height * width],
        }
    }

    /// Validates every cell.
    pub fn from_raw(height: usize, width: usize, data: Vec<u8>) -> Result<Self, CoreError> {
        if data.len() != height * width {
            return Err(CoreError::BadBuffer {
                len: data.len(),
                height,
                width,
                channels: 1,
            });
        }
        if let Some(&bad) = data.iter().find(|&&v| v as usize >= NUM_CLASSES) {
            return Err(CoreError::LabelOutOfRange(bad));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> PartLabel {
        // cells are validated on every write path
        PartLabel::new(self.data[y * self.width + x]).expect("valid label")
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, l: PartLabel) {
        self.data[y * self.width + x] = l.index() as u8;
    }

    /// Raw class indices, row-major.
    #[inline]
    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    pub fn histogram(&self) -> [usize; NUM_CLASSES] {
        let mut h = [0usize; NUM_CLASSES];
        for &v in &self.data {
            h[v as usize] += 1;
        }
        h
    }

    pub fn contains(&self, l: PartLabel) -> bool {
        self.data.iter().any(|&v| v as usize == l.index())
    }

    /// Horizontal mirror with left/right classes exchanged.
    pub fn flipped(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.data.chunks_exact(self.width.max(1)) {
            data.extend(row.iter().rev().map(|&v| PART_SWAP[v as usize]));
        }
        Self {
            height: self.height,
            width: self.width,
            data,
        }
    }

    /// Nearest-neighbour resample. Output cell `i` samples input cell
    /// `floor((i + 0.5) * in / out)`, i.e. the nearest cell centre with ties
    /// going to the higher index.
    pub fn resized(&self, height: usize, width: usize) -> Self {
        assert!(height >= 1 && width >= 1, "resize target must be non-empty");
        let ys = nearest_indices(self.height, height);
        let xs = nearest_indices(self.width, width);
        let mut data = Vec::with_capacity(height * width);
        for &sy in &ys {
            let row = &self.data[sy * self.width..(sy + 1) * self.width];
            data.extend(xs.iter().map(|&sx| row[sx]));
        }
        Self {
            height,
            width,
            data,
        }
    }

    /// Copy of the window `[y0, y0+h) x [x0, x0+w)`; cells outside the source
    /// are filled with `pad`. Offsets may be negative.
    pub fn crop(&self, y0: isize, x0: isize, height: usize, width: usize, pad: PartLabel) -> Self {
        let mut out = Self::new(height, width, pad);
        for y in 0..height {
            let sy = y0 + y as isize;
            if sy < 0 || sy >= self.height as isize {
                continue;
            }
            for x in 0..width {
                let sx = x0 + x as isize;
                if sx < 0 || sx >= self.width as isize {
                    continue;
                }
                out.data[y * width + x] = self.data[sy as usize * self.width + sx as usize];
            }
        }
        out
    }
}

pub(crate) fn nearest_indices(src: usize, dst: usize) -> Vec<usize> {
    (0..dst)
        .map(|i| (((2 * i + 1) * src) / (2 * dst)).min(src - 1))
        .collect()
}

/// Mirror a label map, swapping person-centric sides.
pub fn flip_label_map(m: &LabelMap) -> LabelMap {
    m.flipped()
}

pub fn resize_label_map(m: &LabelMap, height: usize, width: usize) -> LabelMap {
    m.resized(height, width)
}
