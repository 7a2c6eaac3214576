//! Skeleton and part-model geometry.
//!
//! A target is described by a 15-keypoint skeleton. Body parts are segments
//! between keypoint pairs; each part induces an oriented rectangle of length
//! `L` (the segment length) and width `0.6 L`, which is approximated by its
//! axes-aligned bounding box (AABB) when pooling features from a grid.
//!
//! Feature grids are `C x H x W` tensors standing in for a CNN feature map.
//! Pixel-space geometry maps onto the grid at a fixed stride of
//! [`GRID_STRIDE`] pixels per cell.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of keypoint slots in a skeleton.
pub const KEYPOINT_COUNT: usize = 15;

/// Number of parts in the star part model.
pub const PART_COUNT: usize = 7;

/// Pixels per feature-grid cell along both axes.
pub const GRID_STRIDE: usize = 8;

/// Ratio of an oriented part box's width to its length.
pub const PART_WIDTH_RATIO: f64 = 0.6;

/// A point in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One skeleton slot: a position plus a visibility flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub visible: bool,
}

impl Keypoint {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// A 15-slot skeleton with the object scale used by keypoint similarity.
///
/// Slot order (1-based in configs, 0-based here):
/// 1 left ear, 2 right ear, 3 nose, 4 right shoulder, 5 right front paw,
/// 6 left shoulder, 7 left front paw, 8 right hip, 9 right knee,
/// 10 right back paw, 11 left hip, 12 left knee, 13 left back paw,
/// 14 root of tail, 15 center (midpoint of 3 and 14).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub points: [Keypoint; KEYPOINT_COUNT],
    /// Object scale `s`: the square root of the ground-truth box area.
    pub scale: f64,
}

impl Skeleton {
    pub fn new(points: [Keypoint; KEYPOINT_COUNT], scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Validation(format!(
                "skeleton scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self { points, scale })
    }

    /// Keypoint by 1-based slot index.
    pub fn slot(&self, index1: usize) -> &Keypoint {
        &self.points[index1 - 1]
    }

    /// Distance between slot 15 and the midpoint of slots 3 and 14, when all
    /// three are visible. `None` when any of them is invisible.
    pub fn center_midpoint_error(&self) -> Option<f64> {
        let (nose, tail, center) = (self.slot(3), self.slot(14), self.slot(15));
        if !(nose.visible && tail.visible && center.visible) {
            return None;
        }
        let mid = Point::new((nose.x + tail.x) / 2.0, (nose.y + tail.y) / 2.0);
        Some(mid.dist(&center.point()))
    }
}

/// One named part: a pair of 1-based keypoint slot indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub name: String,
    pub kp: (usize, usize),
}

/// The 7-part star model mapping part names to keypoint pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartMapConfig", into = "PartMapConfig")]
pub struct PartMap {
    parts: Vec<Part>,
}

/// On-disk shape of a part map: `{"parts":[{"name":...,"kp":[i,j]} x7]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartMapConfig {
    pub parts: Vec<Part>,
}

impl TryFrom<PartMapConfig> for PartMap {
    type Error = Error;

    fn try_from(cfg: PartMapConfig) -> Result<Self> {
        PartMap::new(cfg.parts)
    }
}

impl From<PartMap> for PartMapConfig {
    fn from(map: PartMap) -> Self {
        PartMapConfig { parts: map.parts }
    }
}

impl PartMap {
    pub fn new(parts: Vec<Part>) -> Result<Self> {
        if parts.len() != PART_COUNT {
            return Err(Error::Validation(format!(
                "part map must have exactly {PART_COUNT} parts, got {}",
                parts.len()
            )));
        }
        let mut seen = Vec::new();
        for part in &parts {
            let (i, j) = part.kp;
            if !(1..=KEYPOINT_COUNT).contains(&i) || !(1..=KEYPOINT_COUNT).contains(&j) {
                return Err(Error::Validation(format!(
                    "part '{}' references keypoint outside 1..{KEYPOINT_COUNT}",
                    part.name
                )));
            }
            if i == j {
                return Err(Error::Validation(format!(
                    "part '{}' uses the same keypoint twice",
                    part.name
                )));
            }
            let key = (i.min(j), i.max(j));
            if seen.contains(&key) {
                return Err(Error::Validation(format!(
                    "duplicate keypoint pair ({i},{j}) in part map"
                )));
            }
            seen.push(key);
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }
}

impl Default for PartMap {
    /// Trunk spans nose to tail root; legs follow the skeleton slots.
    fn default() -> Self {
        let pairs: [(&str, (usize, usize)); PART_COUNT] = [
            ("trunk", (3, 14)),
            ("front_leg_left", (6, 7)),
            ("front_leg_right", (4, 5)),
            ("hind_thigh_left", (11, 12)),
            ("hind_thigh_right", (8, 9)),
            ("hind_shank_left", (12, 13)),
            ("hind_shank_right", (9, 10)),
        ];
        let parts = pairs
            .into_iter()
            .map(|(name, kp)| Part {
                name: name.to_string(),
                kp,
            })
            .collect();
        Self::new(parts).expect("default part map is valid")
    }
}

/// A rectangle centered on a part segment, long axis along the segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Point,
    /// Unit vector along the defining segment.
    pub axis: (f64, f64),
    pub length: f64,
    pub width: f64,
}

impl OrientedBox {
    pub fn corners(&self) -> [Point; 4] {
        let (ax, ay) = self.axis;
        let (px, py) = (-ay, ax);
        let (hl, hw) = (self.length / 2.0, self.width / 2.0);
        let mut out = [Point::new(0.0, 0.0); 4];
        for (i, (sa, sp)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
            .iter()
            .enumerate()
        {
            out[i] = Point::new(
                self.center.x + sa * hl * ax + sp * hw * px,
                self.center.y + sa * hl * ay + sp * hw * py,
            );
        }
        out
    }

    /// True if `p` lies inside the box (boundary inclusive).
    pub fn contains(&self, p: &Point) -> bool {
        let (dx, dy) = (p.x - self.center.x, p.y - self.center.y);
        let (ax, ay) = self.axis;
        let along = dx * ax + dy * ay;
        let across = -dx * ay + dy * ax;
        along.abs() <= self.length / 2.0 && across.abs() <= self.width / 2.0
    }

    /// Position of `p` along the axis, normalized so the box spans [0, 1].
    pub fn axial_coord(&self, p: &Point) -> f64 {
        let (dx, dy) = (p.x - self.center.x, p.y - self.center.y);
        let along = dx * self.axis.0 + dy * self.axis.1;
        along / self.length + 0.5
    }
}

/// An axes-aligned rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        if !(x_min <= x_max && y_min <= y_max) {
            return Err(Error::Validation(format!(
                "rect extents out of order: [{x_min},{x_max}] x [{y_min},{y_max}]"
            )));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Build from `[x, y, w, h]` with the origin at the top-left corner.
    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !(w > 0.0 && h > 0.0) {
            return Err(Error::Validation(format!(
                "box width and height must be positive, got {w} x {h}"
            )));
        }
        Self::new(x, y, x + w, y + h)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_finite(&self) -> bool {
        [self.x_min, self.y_min, self.x_max, self.y_max]
            .iter()
            .all(|v| v.is_finite())
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }
}

/// An inclusive range of feature-grid cells; never empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl GridRect {
    pub fn n_cells(&self) -> usize {
        (self.x1 - self.x0 + 1) * (self.y1 - self.y0 + 1)
    }
}

/// A `C x H x W` grid of finite reals, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f32>,
}

impl FeatureGrid {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            values: vec![0.0; channels * height * width],
        }
    }

    pub fn from_values(
        channels: usize,
        height: usize,
        width: usize,
        values: Vec<f32>,
    ) -> Result<Self> {
        if values.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "grid expects {} values, got {}",
                channels * height * width,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("grid contains non-finite values".into()));
        }
        Ok(Self {
            channels,
            height,
            width,
            values,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f32 {
        self.values[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn at_mut(&mut self, c: usize, y: usize, x: usize) -> &mut f32 {
        &mut self.values[(c * self.height + y) * self.width + x]
    }

    /// Pixel dimensions `(W_px, H_px)` this grid covers at [`GRID_STRIDE`].
    pub fn pixel_dims(&self) -> (usize, usize) {
        (self.width * GRID_STRIDE, self.height * GRID_STRIDE)
    }

    /// Per-channel mean over the whole grid.
    pub fn global_average_pool(&self) -> Vec<f64> {
        let full = GridRect {
            x0: 0,
            y0: 0,
            x1: self.width - 1,
            y1: self.height - 1,
        };
        regional_average_pool(self, &full).expect("full region is in bounds")
    }
}

/// Oriented rectangle of a part: centered on the segment midpoint, long axis
/// from `p1` to `p2`, length `|p2 - p1|`, width `0.6` of the length.
pub fn oriented_part_box(p1: Point, p2: Point) -> Result<OrientedBox> {
    let length = p1.dist(&p2);
    if length == 0.0 {
        return Err(Error::Degenerate(format!(
            "part endpoints coincide at ({}, {})",
            p1.x, p1.y
        )));
    }
    if !length.is_finite() {
        return Err(Error::Degenerate("part endpoints are non-finite".into()));
    }
    Ok(OrientedBox {
        center: Point::new((p1.x + p2.x) / 2.0, (p1.y + p2.y) / 2.0),
        axis: ((p2.x - p1.x) / length, (p2.y - p1.y) / length),
        length,
        width: PART_WIDTH_RATIO * length,
    })
}

/// Smallest axes-aligned rectangle containing all four corners of `b`.
pub fn aabb(b: &OrientedBox) -> Rect {
    let corners = b.corners();
    let mut r = Rect {
        x_min: f64::INFINITY,
        y_min: f64::INFINITY,
        x_max: f64::NEG_INFINITY,
        y_max: f64::NEG_INFINITY,
    };
    for c in corners {
        r.x_min = r.x_min.min(c.x);
        r.y_min = r.y_min.min(c.y);
        r.x_max = r.x_max.max(c.x);
        r.y_max = r.y_max.max(c.y);
    }
    r
}

/// Project a pixel rect onto grid cells.
///
/// The rect is scaled by `(W_g / W_px, H_g / H_px)`; a cell is included iff
/// its center lies inside the scaled rect. Each axis falls back to the cell
/// nearest the rect center when no center qualifies, so the result is never
/// empty.
pub fn project_to_grid(
    r: &Rect,
    image_dims: (usize, usize),
    grid_dims: (usize, usize),
) -> Result<GridRect> {
    let (w_px, h_px) = image_dims;
    let (w_g, h_g) = grid_dims;
    if w_px == 0 || h_px == 0 || w_g == 0 || h_g == 0 {
        return Err(Error::Shape("image and grid dims must be positive".into()));
    }
    if !r.is_finite() {
        return Err(Error::Degenerate("cannot project a non-finite rect".into()));
    }
    let sx = w_g as f64 / w_px as f64;
    let sy = h_g as f64 / h_px as f64;

    let axis_range = |lo: f64, hi: f64, n: usize| -> (usize, usize) {
        let mut first = None;
        let mut last = None;
        for c in 0..n {
            let center = c as f64 + 0.5;
            if center >= lo && center <= hi {
                if first.is_none() {
                    first = Some(c);
                }
                last = Some(c);
            }
        }
        match (first, last) {
            (Some(a), Some(b)) => (a, b),
            // No qualifying center: snap to the cell nearest the rect center.
            _ => {
                let mid = (lo + hi) / 2.0;
                let cell = (mid.floor().max(0.0) as usize).min(n - 1);
                (cell, cell)
            }
        }
    };

    let (x0, x1) = axis_range(r.x_min * sx, r.x_max * sx, w_g);
    let (y0, y1) = axis_range(r.y_min * sy, r.y_max * sy, h_g);
    Ok(GridRect { x0, y0, x1, y1 })
}

/// Per-channel arithmetic mean of the grid over `r`.
pub fn regional_average_pool(g: &FeatureGrid, r: &GridRect) -> Result<Vec<f64>> {
    let (channels, height, width) = g.dims();
    if r.x1 >= width || r.y1 >= height || r.x0 > r.x1 || r.y0 > r.y1 {
        return Err(Error::Shape(format!(
            "region ({},{})..({},{}) outside {width}x{height} grid",
            r.x0, r.y0, r.x1, r.y1
        )));
    }
    let n = r.n_cells() as f64;
    let mut out = vec![0.0; channels];
    for (c, slot) in out.iter_mut().enumerate() {
        let mut sum = 0.0;
        for y in r.y0..=r.y1 {
            for x in r.x0..=r.x1 {
                sum += g.at(c, y, x) as f64;
            }
        }
        *slot = sum / n;
    }
    Ok(out)
}

/// Pool the grid into `w_out` vertical bands: output `i` is the per-channel
/// mean over all rows of the `i`-th band of `width / w_out` columns.
pub fn column_pool(g: &FeatureGrid, w_out: usize) -> Result<Vec<Vec<f64>>> {
    let (_, height, width) = g.dims();
    if w_out == 0 || width % w_out != 0 {
        return Err(Error::Shape(format!(
            "grid width {width} is not divisible into {w_out} bands"
        )));
    }
    let band = width / w_out;
    (0..w_out)
        .map(|i| {
            let r = GridRect {
                x0: i * band,
                y0: 0,
                x1: (i + 1) * band - 1,
                y1: height - 1,
            };
            regional_average_pool(g, &r)
        })
        .collect()
}

/// Pooled features of one sample: inputs to the embedder heads.
#[derive(Debug, Clone)]
pub struct SampleFeatures {
    /// Per-channel mean over the whole grid.
    pub global_pool: Vec<f64>,
    /// Regional average pool over each part's projected AABB; zero vector
    /// when the part is not visible.
    pub part_pools: Vec<Vec<f64>>,
    pub part_visibility: Vec<bool>,
    /// Column-band means for local alignment distances.
    pub columns: Vec<Vec<f64>>,
}

/// Pool global, per-part, and column features from a grid.
///
/// A part pools over the AABB of its oriented box, projected to the grid.
/// Parts with an invisible or coincident endpoint produce a zero vector and
/// a `false` visibility flag. Keypoints are interpreted in the grid's pixel
/// frame (see [`FeatureGrid::pixel_dims`]).
pub fn extract_features(
    grid: &FeatureGrid,
    skeleton: Option<&Skeleton>,
    parts: &PartMap,
    column_bands: usize,
) -> Result<SampleFeatures> {
    let (channels, height, width) = grid.dims();
    let image_dims = grid.pixel_dims();
    let mut part_pools = Vec::with_capacity(PART_COUNT);
    let mut part_visibility = Vec::with_capacity(PART_COUNT);
    for part in parts.parts() {
        let pooled = skeleton.and_then(|sk| {
            let (a, b) = (sk.slot(part.kp.0), sk.slot(part.kp.1));
            if !(a.visible && b.visible) {
                return None;
            }
            let obox = oriented_part_box(a.point(), b.point()).ok()?;
            let region = project_to_grid(&aabb(&obox), image_dims, (width, height)).ok()?;
            regional_average_pool(grid, &region).ok()
        });
        match pooled {
            Some(v) => {
                part_pools.push(v);
                part_visibility.push(true);
            }
            None => {
                part_pools.push(vec![0.0; channels]);
                part_visibility.push(false);
            }
        }
    }
    Ok(SampleFeatures {
        global_pool: grid.global_average_pool(),
        part_pools,
        part_visibility,
        columns: column_pool(grid, column_bands)?,
    })
}
