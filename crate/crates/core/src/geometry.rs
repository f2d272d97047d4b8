//! Antenna layouts and receiver sampling planes.
//!
//! Everything lives in one right-handed frame in meters with `z` pointing up.
//! Grids are always enumerated row-major: `x` varies fastest, then `y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when deciding how many grid steps fit into an extent, so that
/// `1.3 / 0.01` counts as 130 steps rather than 130.00000000000003.
const STEP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Position3D {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// Euclidean distance in meters.
pub fn distance(a: Position3D, b: Position3D) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// The distributed transmitters, in a fixed order that every per-antenna
/// quantity (channel gains, phases, random substreams) follows.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaArray {
    elements: Vec<Position3D>,
}

impl AntennaArray {
    pub fn new(elements: Vec<Position3D>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::invalid("antenna array needs at least one element"));
        }
        if let Some(i) = elements.iter().position(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("antenna {i} has a non-finite coordinate")));
        }
        for (i, a) in elements.iter().enumerate() {
            if let Some(j) = elements[i + 1..].iter().position(|b| a == b) {
                return Err(Error::invalid(format!(
                    "antennas {i} and {} share the same position",
                    i + 1 + j
                )));
            }
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[Position3D] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Drops the last `n` elements, keeping at least one.
    pub fn truncated(mut self, n: usize) -> Result<Self> {
        if n >= self.elements.len() {
            return Err(Error::invalid(format!(
                "cannot drop {n} of {} antennas",
                self.elements.len()
            )));
        }
        self.elements.truncate(self.elements.len() - n);
        Ok(self)
    }

    /// Index of the element closest to `p`; ties go to the lower index.
    pub fn nearest_to(&self, p: Position3D) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, e) in self.elements.iter().enumerate() {
            let d = distance(*e, p);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }
}

/// Regular `rows`×`cols` grid at `z = height`, offset by `origin` in x/y.
/// Column index advances along x, row index along y.
pub fn build_ceiling_grid(
    rows: usize,
    cols: usize,
    spacing: f64,
    height: f64,
    origin: Position3D,
) -> Result<AntennaArray> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("grid rows and cols must be at least 1"));
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::invalid(format!("grid spacing must be positive, got {spacing}")));
    }
    let mut elements = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            elements.push(Position3D::new(
                origin.x + c as f64 * spacing,
                origin.y + r as f64 * spacing,
                height,
            ));
        }
    }
    AntennaArray::new(elements)
}

/// Horizontal, axis-aligned rectangle of receive positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlane {
    /// Corner with the smallest x and y; its `z` is the plane height.
    pub origin: Position3D,
    pub width: f64,
    pub height: f64,
    pub step: f64,
}

impl SamplingPlane {
    pub fn new(origin: Position3D, width: f64, height: f64, step: f64) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::invalid("plane origin must be finite"));
        }
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::invalid(format!("plane width must be > 0, got {width}")));
        }
        if !(height > 0.0) || !height.is_finite() {
            return Err(Error::invalid(format!("plane height must be > 0, got {height}")));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::invalid(format!("plane step must be > 0, got {step}")));
        }
        if step > width.min(height) {
            return Err(Error::invalid(format!(
                "plane step {step} exceeds the smaller plane extent {}",
                width.min(height)
            )));
        }
        Ok(Self {
            origin,
            width,
            height,
            step,
        })
    }

    pub fn z(&self) -> f64 {
        self.origin.z
    }

    fn axis_count(extent: f64, step: f64) -> usize {
        (extent / step - STEP_SLACK).ceil().max(0.0) as usize + 1
    }

    /// Grid points along x.
    pub fn nx(&self) -> usize {
        Self::axis_count(self.width, self.step)
    }

    /// Grid points along y.
    pub fn ny(&self) -> usize {
        Self::axis_count(self.height, self.step)
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of column `i`; the last column is clamped onto the far edge
    /// when the extent is not a whole number of steps.
    pub fn x_at(&self, i: usize) -> f64 {
        self.origin.x + (i as f64 * self.step).min(self.width)
    }

    pub fn y_at(&self, j: usize) -> f64 {
        self.origin.y + (j as f64 * self.step).min(self.height)
    }

    pub fn point(&self, i: usize, j: usize) -> Position3D {
        Position3D::new(self.x_at(i), self.y_at(j), self.origin.z)
    }

    /// Row-major list of all grid points.
    pub fn points(&self) -> Vec<Position3D> {
        let (nx, ny) = (self.nx(), self.ny());
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                out.push(self.point(i, j));
            }
        }
        out
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= self.origin.x
            && x <= self.origin.x + self.width
            && y >= self.origin.y
            && y <= self.origin.y + self.height
    }

    fn nearest_axis(origin: f64, extent: f64, step: f64, n: usize, v: f64) -> usize {
        let at = |i: usize| origin + (i as f64 * step).min(extent);
        let guess = ((v - origin) / step).floor();
        let lo = if guess.is_nan() || guess < 0.0 {
            0
        } else {
            (guess as usize).min(n - 1)
        };
        let hi = (lo + 1).min(n - 1);
        // Strict comparison keeps ties on the lower index.
        if (at(hi) - v).abs() < (at(lo) - v).abs() {
            hi
        } else {
            lo
        }
    }

    /// Grid cell `(i, j)` nearest to `(x, y)`; positions outside the plane map
    /// to the closest edge cell. Ties resolve toward lower indices.
    pub fn nearest_cell(&self, x: f64, y: f64) -> (usize, usize) {
        (
            Self::nearest_axis(self.origin.x, self.width, self.step, self.nx(), x),
            Self::nearest_axis(self.origin.y, self.height, self.step, self.ny(), y),
        )
    }

    pub fn flat_index(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }
}

/// Row-major grid of ⌈width/step⌉+1 by ⌈height/step⌉+1 points at `origin.z`.
pub fn build_sampling_plane(
    origin: Position3D,
    width: f64,
    height: f64,
    step: f64,
) -> Result<Vec<Position3D>> {
    Ok(SamplingPlane::new(origin, width, height, step)?.points())
}
