//! Deterministic, lazily generated Poisson obstacle field in the strip
//! `Lambda = (0, L) x R`.
//!
//! The strip is unbounded vertically, so the field is realized cell by cell
//! on demand: each square cell draws its obstacle centers from a generator
//! seeded by a counter-based hash of `(seed, cell_ix, cell_iy)`. Generation
//! is a pure function of that pair, so any query order and any number of
//! threads see the same world.

use crate::params::KineticParams;
use dashmap::DashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use std::sync::Arc;

/// Expected number of obstacle centers in a region of the given area:
/// `mu_eps * area`.
pub fn expected_count(params: &KineticParams, region_area: f64) -> f64 {
    assert!(region_area >= 0.0, "area must be nonnegative");
    params.mu_eps() * region_area
}

/// splitmix64-style mixer; every call site derives independent streams by
/// hashing distinct counters, never by reusing an RNG across tasks.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        let mut z = h ^ p.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h = z ^ (z >> 31);
    }
    h
}

#[derive(Debug, Clone)]
pub struct ObstacleField {
    pub params: KineticParams,
    pub seed: u64,
    pub cell_size: f64,
    cells: Arc<DashMap<(i64, i64), Arc<Vec<[f64; 2]>>>>,
    /// When set, the field consists of exactly these centers instead of a
    /// Poisson draw (controlled single/few-scatterer experiments).
    explicit: Option<Arc<Vec<[f64; 2]>>>,
}

impl ObstacleField {
    /// Field with the default cell size `4 epsilon` (at least the potential
    /// support diameter, so a force query touches at most 9 cells).
    pub fn new(params: KineticParams, seed: u64) -> Self {
        Self::with_cell_size(params, seed, 4.0 * params.epsilon)
    }

    pub fn with_cell_size(params: KineticParams, seed: u64, cell_size: f64) -> Self {
        assert!(
            cell_size >= 2.0 * params.epsilon,
            "cell size must cover the obstacle diameter"
        );
        ObstacleField {
            params,
            seed,
            cell_size,
            cells: Arc::new(DashMap::new()),
            explicit: None,
        }
    }

    /// Deterministic field holding exactly the given centers (all must lie
    /// inside the slab), for controlled single-scatterer experiments.
    pub fn with_obstacles(params: KineticParams, centers: Vec<[f64; 2]>) -> Self {
        assert!(centers.iter().all(|c| c[0] > 0.0 && c[0] < params.slab_width));
        let mut field = Self::with_cell_size(params, 0, 4.0 * params.epsilon);
        field.explicit = Some(Arc::new(centers));
        field
    }

    /// Maximum supported query radius: a force query never needs more, and
    /// capping it keeps a single query from touching unboundedly many cells.
    pub fn max_query_radius(&self) -> f64 {
        4.0 * self.cell_size
    }

    fn cell_of(&self, x: [f64; 2]) -> (i64, i64) {
        (
            (x[0] / self.cell_size).floor() as i64,
            (x[1] / self.cell_size).floor() as i64,
        )
    }

    /// Obstacle centers of one cell; pure in `(seed, ix, iy)`. Cells
    /// straddling the slab boundary generate at full intensity and discard
    /// centers outside `(0, L) x R`, preserving the intensity inside.
    fn cell_centers(&self, ix: i64, iy: i64) -> Arc<Vec<[f64; 2]>> {
        if let Some(c) = self.cells.get(&(ix, iy)) {
            return c.clone();
        }
        let generated = Arc::new(self.generate_cell(ix, iy));
        // idempotent concurrent insert: both racers generated identical data
        self.cells.entry((ix, iy)).or_insert(generated).clone()
    }

    fn generate_cell(&self, ix: i64, iy: i64) -> Vec<[f64; 2]> {
        if let Some(list) = &self.explicit {
            // assign by the same floor division used for lookups: comparing
            // against x0 + cell_size recomputed per cell can double-count
            // centers sitting within an ulp of a cell edge
            return list.iter().filter(|c| self.cell_of(**c) == (ix, iy)).copied().collect();
        }
        let lam = expected_count(&self.params, self.cell_size * self.cell_size);
        if lam == 0.0 {
            return Vec::new();
        }
        let seed = mix_seed(&[self.seed, ix as u64, iy as u64, 0x6f62_7374]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Poisson::new(lam).expect("positive intensity").sample(&mut rng) as usize;
        let x0 = ix as f64 * self.cell_size;
        let y0 = iy as f64 * self.cell_size;
        let mut centers = Vec::with_capacity(n);
        for _ in 0..n {
            let cx = x0 + rng.gen::<f64>() * self.cell_size;
            let cy = y0 + rng.gen::<f64>() * self.cell_size;
            if cx > 0.0 && cx < self.params.slab_width {
                centers.push([cx, cy]);
            }
        }
        centers
    }

    /// All obstacle centers within distance `r` of `x`, generating the
    /// touched cells on demand. Panics if `r` exceeds the configured maximum.
    pub fn obstacles_near(&self, x: [f64; 2], r: f64) -> Vec<[f64; 2]> {
        assert!(
            r <= self.max_query_radius(),
            "query radius {r} exceeds the configured maximum {}",
            self.max_query_radius()
        );
        let (cx, cy) = self.cell_of(x);
        let reach = (r / self.cell_size).ceil() as i64;
        let r2 = r * r;
        let mut out = Vec::new();
        for ix in cx - reach..=cx + reach {
            for iy in cy - reach..=cy + reach {
                for &c in self.cell_centers(ix, iy).iter() {
                    let dx = c[0] - x[0];
                    let dy = c[1] - x[1];
                    if dx * dx + dy * dy <= r2 {
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    /// CSV snapshot (columns `cx,cy`) of all centers in the window
    /// `[x_min, x_max] x [y_min, y_max]`, for debugging.
    pub fn snapshot_csv(&self, x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> String {
        let mut out = String::from("cx,cy\n");
        let (ix0, iy0) = self.cell_of([x_min, y_min]);
        let (ix1, iy1) = self.cell_of([x_max, y_max]);
        for ix in ix0..=ix1 {
            for iy in iy0..=iy1 {
                for &c in self.cell_centers(ix, iy).iter() {
                    if c[0] >= x_min && c[0] <= x_max && c[1] >= y_min && c[1] <= y_max {
                        out.push_str(&format!("{},{}\n", c[0], c[1]));
                    }
                }
            }
        }
        out
    }

    /// Number of generated centers in one cell, for statistics tests.
    pub fn cell_count(&self, ix: i64, iy: i64) -> usize {
        self.cell_centers(ix, iy).len()
    }
}
