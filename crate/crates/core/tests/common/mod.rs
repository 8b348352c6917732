//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sensorimotor::sim::{behavior_step, Environment, Point, Pose, Segment};

pub const MARCH_STEP: f64 = 1e-4;

fn side(w: &Segment, p: Point) -> f64 {
    (w.b.x - w.a.x) * (p.y - w.a.y) - (w.b.y - w.a.y) * (p.x - w.a.x)
}

fn along(w: &Segment, p: Point) -> f64 {
    let (dx, dy) = (w.b.x - w.a.x, w.b.y - w.a.y);
    ((p.x - w.a.x) * dx + (p.y - w.a.y) * dy) / (dx * dx + dy * dy)
}

/// Walks the ray in steps of `step` and returns the first marched distance at
/// which the walker has crossed a wall, or `max_range`.
pub fn march(env: &Environment, origin: Point, angle: f64, max_range: f64, step: f64) -> f64 {
    let (s, c) = angle.sin_cos();
    let walls = env.walls();
    let mut prev: Vec<f64> = walls.iter().map(|w| side(w, origin)).collect();
    let n = (max_range / step).ceil() as usize;
    for k in 1..=n {
        let t = (k as f64 * step).min(max_range);
        let p = Point::new(origin.x + t * c, origin.y + t * s);
        for (w, before) in walls.iter().zip(prev.iter_mut()) {
            let now = side(w, p);
            if (now == 0.0 || now.signum() != before.signum()) && (-1e-9..=1.0 + 1e-9).contains(&along(w, p)) {
                return t;
            }
            *before = now;
        }
    }
    max_range
}

/// True when segment `p`-`q` touches or crosses wall `w`.
pub fn crosses(p: Point, q: Point, w: &Segment) -> bool {
    let orient = |a: Point, b: Point, c: Point| (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let d1 = orient(w.a, w.b, p);
    let d2 = orient(w.a, w.b, q);
    let d3 = orient(p, q, w.a);
    let d4 = orient(p, q, w.b);
    (d1 * d2 <= 0.0) && (d3 * d4 <= 0.0) && !(d1 == 0.0 && d2 == 0.0 && d3 == 0.0 && d4 == 0.0 && {
        // Collinear: disjoint unless the projections overlap.
        let t = |x: Point| along(w, x);
        let (lo, hi) = (t(p).min(t(q)), t(p).max(t(q)));
        hi < 0.0 || lo > 1.0
    })
}

/// Uniform origin at least `clearance` from every wall.
pub fn free_point(env: &Environment, rng: &mut impl Rng, clearance: f64) -> Point {
    loop {
        let p = Point::new(rng.random::<f64>() * env.size(), rng.random::<f64>() * env.size());
        if env.is_free(p) && env.walls().iter().all(|w| w.distance_to(p) >= clearance) {
            return p;
        }
    }
}

#[derive(Debug, Default)]
pub struct PolicyRun {
    pub steps: usize,
    pub penetrations: usize,
    pub outside: usize,
    pub clamps: usize,
    pub unsafe_forward: usize,
    pub cells: Vec<bool>,
}

impl PolicyRun {
    pub fn cells_visited(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

/// Runs sense → behavior_step → apply_motor and audits every transition.
pub fn audit_policy(env: &Environment, steps: usize, seed: u64, grid: usize) -> PolicyRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = free_point(env, &mut rng, 1.0);
    let mut pose = Pose::new(start.x, start.y, rng.random_range(-3.0..3.0));
    let mut run = PolicyRun {
        steps,
        cells: vec![false; grid * grid],
        ..PolicyRun::default()
    };
    let cell = |p: &Pose| {
        let i = ((p.x / env.size() * grid as f64) as usize).min(grid - 1);
        let j = ((p.y / env.size() * grid as f64) as usize).min(grid - 1);
        j * grid + i
    };
    run.cells[cell(&pose)] = true;
    for _ in 0..steps {
        let reading = env.sense(&pose).expect("pose is valid");
        let motor = behavior_step(&reading, &mut rng);
        if motor.d > 0.0 && !(reading.distances[2] >= 1.0 && 1.0 >= motor.d) {
            run.unsafe_forward += 1;
        }
        let (next, clamped) = env.apply_motor_tracked(&pose, &motor);
        run.clamps += usize::from(clamped);
        let (a, b) = (pose.position(), next.position());
        if a != b && env.walls().iter().any(|w| crosses(a, b, w)) {
            run.penetrations += 1;
        }
        if !(next.x > 0.0 && next.x < env.size() && next.y > 0.0 && next.y < env.size()) || !env.is_free(b) {
            run.outside += 1;
        }
        pose = next;
        run.cells[cell(&pose)] = true;
    }
    run
}
