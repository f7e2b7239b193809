//! Extraction of five square patches from a larger image.
//!
//! The default placement puts one patch in each corner of the image,
//! optionally inset by a margin, and one in the center. Patches may overlap
//! when the image is small. A layout can also be read from a `key=value`
//! text file:
//!
//! ```text
//! side=1024
//! inset=32
//! # or five explicit top-left corners instead of inset:
//! patch=0,0
//! ```

use ndarray::{s, Array2};

use crate::dwt::Grid2D;
use crate::error::{Error, Result};

pub const PATCH_COUNT: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Placement {
    CornersAndCenter { inset: usize },
    /// Top-left `(row, col)` of each patch.
    Explicit(Vec<(usize, usize)>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchLayout {
    pub side: usize,
    pub placement: Placement,
}

impl Default for PatchLayout {
    fn default() -> Self {
        PatchLayout {
            side: 1024,
            placement: Placement::CornersAndCenter { inset: 0 },
        }
    }
}

impl PatchLayout {
    pub fn with_side(side: usize) -> Self {
        PatchLayout {
            side,
            ..PatchLayout::default()
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut layout = PatchLayout::default();
        let mut inset = 0;
        let mut explicit = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("layout line {}: expected key=value", lineno + 1)))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("layout line {}: bad number `{v}`", lineno + 1)))
            };
            match key.trim() {
                "side" => layout.side = num(value)?,
                "inset" => inset = num(value)?,
                "patch" => {
                    let (r, c) = value
                        .split_once(',')
                        .ok_or_else(|| Error::Parse(format!("layout line {}: patch=row,col", lineno + 1)))?;
                    explicit.push((num(r)?, num(c)?));
                }
                other => return Err(Error::Parse(format!("layout line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        layout.placement = if explicit.is_empty() {
            Placement::CornersAndCenter { inset }
        } else {
            Placement::Explicit(explicit)
        };
        Ok(layout)
    }

    /// Top-left corners for an image of the given extent.
    pub fn positions(&self, rows: usize, cols: usize) -> Result<Vec<(usize, usize)>> {
        let p = self.side;
        let too_small = |reason: String| Error::InsufficientExtent { rows, cols, reason };
        let positions = match &self.placement {
            Placement::CornersAndCenter { inset } => {
                let need = p + 2 * inset;
                if rows < need || cols < need {
                    return Err(too_small(format!("need at least {need}x{need} for side {p} and inset {inset}")));
                }
                let bottom = rows - inset - p;
                let right = cols - inset - p;
                vec![
                    (*inset, *inset),
                    (*inset, right),
                    ((rows - p) / 2, (cols - p) / 2),
                    (bottom, *inset),
                    (bottom, right),
                ]
            }
            Placement::Explicit(list) => {
                if list.len() != PATCH_COUNT {
                    return Err(Error::InvalidParameter(format!(
                        "layout lists {} patches, expected {PATCH_COUNT}",
                        list.len()
                    )));
                }
                for &(r, c) in list {
                    if r + p > rows || c + p > cols {
                        return Err(too_small(format!("patch at ({r}, {c}) of side {p} leaves the image")));
                    }
                }
                list.clone()
            }
        };
        Ok(positions)
    }
}

/// Cuts the five patches of `layout` out of `image` (rows x cols).
pub fn extract_patches(image: &Array2<f64>, layout: &PatchLayout) -> Result<Vec<Grid2D>> {
    if layout.side < 2 || !layout.side.is_power_of_two() {
        return Err(Error::InvalidShape(format!("patch side {} is not a power of two", layout.side)));
    }
    let (rows, cols) = image.dim();
    layout
        .positions(rows, cols)?
        .into_iter()
        .map(|(r, c)| Grid2D::new(image.slice(s![r..r + layout.side, c..c + layout.side]).to_owned()))
        .collect()
}
