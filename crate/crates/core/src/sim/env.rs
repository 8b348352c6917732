//! Walled square worlds and the three canonical layouts.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::geometry::{Point, Segment};
use crate::error::{Error, Result};

/// Side length of the canonical environments.
pub const CANONICAL_SIZE: f64 = 50.0;

/// Cell size of the grid used to verify that free space is connected.
const FLOOD_FILL_RESOLUTION: f64 = 0.5;

/// A ray origin closer than this to a wall counts as being inside it.
const WALL_CONTACT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Square,
    Rooms1,
    Rooms2,
}

impl Layout {
    pub const ALL: [Layout; 3] = [Layout::Square, Layout::Rooms1, Layout::Rooms2];

    pub fn name(self) -> &'static str {
        match self {
            Layout::Square => "square",
            Layout::Rooms1 => "rooms1",
            Layout::Rooms2 => "rooms2",
        }
    }

    fn interior_walls(self) -> Vec<Segment> {
        match self {
            Layout::Square => Vec::new(),
            Layout::Rooms1 => vec![
                Segment::new(0.0, 25.0, 30.0, 25.0),
                Segment::new(25.0, 0.0, 25.0, 17.0),
            ],
            Layout::Rooms2 => vec![
                Segment::new(0.0, 25.0, 42.0, 25.0),
                Segment::new(12.5, 25.0, 12.5, 42.0),
                Segment::new(25.0, 8.0, 25.0, 25.0),
                Segment::new(37.5, 25.0, 37.5, 42.0),
            ],
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "square" => Ok(Layout::Square),
            "rooms1" => Ok(Layout::Rooms1),
            "rooms2" => Ok(Layout::Rooms2),
            _ => Err(Error::UnknownLayout(s.to_string())),
        }
    }
}

/// On-disk form of an environment. Boundary walls are implicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentConfig {
    pub name: String,
    pub size: f64,
    pub walls: Vec<[f64; 4]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    name: String,
    size: f64,
    /// The four boundary segments come first.
    walls: Vec<Segment>,
}

impl Environment {
    /// Builds a `size`×`size` square with the given interior walls, rejecting
    /// walls that leave the square or cut free space into pieces.
    pub fn new(name: impl Into<String>, size: f64, interior: Vec<Segment>) -> Result<Self> {
        let name = name.into();
        if !(size.is_finite() && size > 0.0) {
            return Err(Error::InvalidEnvironment(format!("size must be positive, got {size}")));
        }
        let inside = |p: Point| (0.0..=size).contains(&p.x) && (0.0..=size).contains(&p.y);
        for (i, wall) in interior.iter().enumerate() {
            if !(inside(wall.a) && inside(wall.b)) {
                return Err(Error::InvalidEnvironment(format!(
                    "wall {i} has an endpoint outside [0, {size}]²"
                )));
            }
            if wall.length() == 0.0 {
                return Err(Error::InvalidEnvironment(format!("wall {i} has zero length")));
            }
        }

        let mut walls = vec![
            Segment::new(0.0, 0.0, size, 0.0),
            Segment::new(size, 0.0, size, size),
            Segment::new(size, size, 0.0, size),
            Segment::new(0.0, size, 0.0, 0.0),
        ];
        walls.extend(interior);
        let env = Self { name, size, walls };
        env.check_connected()?;
        Ok(env)
    }

    pub fn canonical(layout: Layout) -> Self {
        Self::new(layout.name(), CANONICAL_SIZE, layout.interior_walls())
            .expect("canonical layouts are valid")
    }

    pub fn square() -> Self {
        Self::canonical(Layout::Square)
    }

    pub fn rooms1() -> Self {
        Self::canonical(Layout::Rooms1)
    }

    pub fn rooms2() -> Self {
        Self::canonical(Layout::Rooms2)
    }

    /// Resolves a layout identifier, or a path to a JSON wall list.
    pub fn from_layout(layout: &str) -> Result<Self> {
        if layout.ends_with(".json") {
            return Self::load_json(layout);
        }
        Ok(Self::canonical(layout.parse()?))
    }

    pub fn from_config(config: &EnvironmentConfig) -> Result<Self> {
        let walls = config
            .walls
            .iter()
            .map(|w| Segment::new(w[0], w[1], w[2], w[3]))
            .collect();
        Self::new(config.name.clone(), config.size, walls)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: EnvironmentConfig = serde_json::from_str(&text)?;
        Self::from_config(&config)
    }

    pub fn to_config(&self) -> EnvironmentConfig {
        EnvironmentConfig {
            name: self.name.clone(),
            size: self.size,
            walls: self
                .interior_walls()
                .iter()
                .map(|w| [w.a.x, w.a.y, w.b.x, w.b.y])
                .collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn walls(&self) -> &[Segment] {
        &self.walls
    }

    pub fn interior_walls(&self) -> &[Segment] {
        &self.walls[4..]
    }

    /// Strictly inside the square and not touching any wall.
    pub fn is_free(&self, p: Point) -> bool {
        p.x > 0.0
            && p.y > 0.0
            && p.x < self.size
            && p.y < self.size
            && self.walls.iter().all(|w| !w.contains(p, WALL_CONTACT))
    }

    /// Distance to the nearest wall along `angle`, without validating the origin.
    pub(crate) fn nearest_hit(&self, origin: Point, angle: f64) -> Option<f64> {
        let dir = Point::new(angle.cos(), angle.sin());
        self.walls
            .iter()
            .filter_map(|w| w.ray_hit(origin, dir))
            .min_by(f64::total_cmp)
    }

    /// Exact distance to the first wall along the ray, clipped to `max_range`.
    pub fn ray_cast(&self, origin: Point, angle: f64, max_range: f64) -> Result<f64> {
        if !(max_range > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "max_range must be positive, got {max_range}"
            )));
        }
        if !self.is_free(origin) {
            return Err(Error::OriginInWall {
                x: origin.x,
                y: origin.y,
            });
        }
        Ok(self
            .nearest_hit(origin, angle)
            .map_or(max_range, |h| h.min(max_range)))
    }

    /// Points where two perpendicular walls meet, e.g. the four corners of the
    /// square or both sides of a T-junction.
    pub fn corners(&self) -> Vec<Point> {
        let mut out: Vec<Point> = Vec::new();
        for (i, w) in self.walls.iter().enumerate() {
            for end in [w.a, w.b] {
                let meets = self
                    .walls
                    .iter()
                    .enumerate()
                    .any(|(j, o)| j != i && o.contains(end, 1e-9) && w.is_perpendicular_to(o));
                if meets && !out.iter().any(|p| p.distance(end) < 1e-9) {
                    out.push(end);
                }
            }
        }
        out
    }

    /// Interior wall endpoints that touch no other wall.
    pub fn wall_ends(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for (i, w) in self.walls.iter().enumerate().skip(4) {
            for end in [w.a, w.b] {
                let touches = self
                    .walls
                    .iter()
                    .enumerate()
                    .any(|(j, o)| j != i && o.contains(end, 1e-9));
                if !touches {
                    out.push(end);
                }
            }
        }
        out
    }

    fn check_connected(&self) -> Result<()> {
        let n = (self.size / FLOOD_FILL_RESOLUTION).ceil() as usize;
        let cell = self.size / n as f64;
        let mut blocked = vec![false; n * n];
        let clamp = |v: f64| ((v / cell) as usize).min(n - 1);
        for wall in self.interior_walls() {
            let samples = (wall.length() / (cell * 0.1)).ceil() as usize + 1;
            for k in 0..=samples {
                let u = k as f64 / samples as f64;
                let x = wall.a.x + u * (wall.b.x - wall.a.x);
                let y = wall.a.y + u * (wall.b.y - wall.a.y);
                blocked[clamp(y) * n + clamp(x)] = true;
            }
        }

        let Some(start) = blocked.iter().position(|b| !b) else {
            return Err(Error::InvalidEnvironment("no free space".into()));
        };
        let mut seen = blocked.clone();
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(idx) = queue.pop_front() {
            let (r, c) = (idx / n, idx % n);
            let mut visit = |nr: usize, nc: usize| {
                let j = nr * n + nc;
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if r > 0 {
                visit(r - 1, c);
            }
            if r + 1 < n {
                visit(r + 1, c);
            }
            if c > 0 {
                visit(r, c - 1);
            }
            if c + 1 < n {
                visit(r, c + 1);
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(Error::InvalidEnvironment(format!(
                "walls of `{}` disconnect free space",
                self.name
            )))
        }
    }
}
