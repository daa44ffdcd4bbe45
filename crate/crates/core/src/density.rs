//! Tile-coding density model over visited states, and the pseudo-count
//! exploration bonus derived from it.
//!
//! Each of the `T` tilings partitions the space into hypercubes of side
//! `tile_width`, displaced by a per-tiling offset. The density of a state is
//! the average over tilings of the fraction of visits that landed in the
//! state's tile. The recoding density is the same quantity after one more
//! (hypothetical) visit to the state, and the pseudo-count follows from the
//! pair:
//!
//! ```text
//! V = p (1 - p') / (p' - p)
//! ```

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use crate::config::Config;
use crate::space::ParameterState;

/// Floor applied to a zero density inside logarithms.
pub const DENSITY_FLOOR: f64 = 1e-9;

// Grid values such as 0.29 divide by their tile width to 28.999...; the slack
// keeps grid points in the tile they nominally start.
const TILE_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum DensityError {
    #[error("density model has no visits")]
    EmptyModel,
}

/// Tile coordinates of one tiling.
pub type TileKey = Box<[i32]>;

#[derive(Debug, Clone, PartialEq)]
pub struct TileCoder {
    num_tilings: usize,
    tile_width: f64,
    origin: Vec<f64>,
    /// `offsets[t][d]`, each in `[0, tile_width)`.
    offsets: Vec<Vec<f64>>,
}

impl TileCoder {
    /// Deterministic offsets: tiling `t` is displaced along dimension `d` by
    /// `((t * (2d + 1)) mod T) * tile_width / T`. The odd multipliers make each
    /// dimension's displacement a different permutation of the `T` evenly
    /// spaced positions.
    pub fn new(origin: Vec<f64>, num_tilings: usize, tile_width: f64) -> Self {
        assert!(num_tilings >= 1 && tile_width > 0.0);
        let n = origin.len();
        let unit = tile_width / num_tilings as f64;
        let offsets = (0..num_tilings)
            .map(|t| (0..n).map(|d| ((t * (2 * d + 1)) % num_tilings) as f64 * unit).collect())
            .collect();
        Self { num_tilings, tile_width, origin, offsets }
    }

    /// Offsets drawn uniformly from `[0, tile_width)`.
    pub fn with_random_offsets<R: Rng + ?Sized>(origin: Vec<f64>, num_tilings: usize, tile_width: f64, rng: &mut R) -> Self {
        let n = origin.len();
        let offsets = (0..num_tilings)
            .map(|_| (0..n).map(|_| rng.gen_range(0.0..tile_width)).collect())
            .collect();
        Self { num_tilings, tile_width, origin, offsets }
    }

    pub fn num_tilings(&self) -> usize {
        self.num_tilings
    }

    pub fn tile_width(&self) -> f64 {
        self.tile_width
    }

    pub fn offsets(&self, tiling: usize) -> &[f64] {
        &self.offsets[tiling]
    }

    pub fn tile(&self, tiling: usize, state: &ParameterState) -> TileKey {
        state
            .values()
            .iter()
            .zip(&self.origin)
            .zip(&self.offsets[tiling])
            .map(|((&v, &o), &off)| ((v - o + off) / self.tile_width + TILE_SLACK).floor() as i32)
            .collect()
    }

    /// One tile per tiling.
    pub fn tiles(&self, state: &ParameterState) -> Vec<TileKey> {
        (0..self.num_tilings).map(|t| self.tile(t, state)).collect()
    }
}

/// Visit counts per tiling.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountTable {
    counts: Vec<HashMap<TileKey, u64>>,
    total: u64,
}

impl CountTable {
    pub fn new(num_tilings: usize) -> Self {
        Self { counts: vec![HashMap::new(); num_tilings], total: 0 }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, tiling: usize, tile: &TileKey) -> u64 {
        self.counts[tiling].get(tile).copied().unwrap_or(0)
    }

    pub fn tiling_counts(&self, tiling: usize) -> &HashMap<TileKey, u64> {
        &self.counts[tiling]
    }

    pub fn clear(&mut self) {
        self.counts.iter_mut().for_each(HashMap::clear);
        self.total = 0;
    }
}

/// Constants of the exploration bonus `beta / sqrt(V + c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonusParams {
    pub beta: f64,
    pub c: f64,
}

impl Default for BonusParams {
    fn default() -> Self {
        Self { beta: 1.0, c: 0.01 }
    }
}

#[derive(Debug, Clone)]
pub struct DensityModel {
    coder: TileCoder,
    table: CountTable,
}

impl DensityModel {
    pub fn new(coder: TileCoder) -> Self {
        let table = CountTable::new(coder.num_tilings());
        Self { coder, table }
    }

    pub fn from_config(cfg: &Config) -> Self {
        let origin = cfg.lo.clone().unwrap_or_else(|| vec![0.0; cfg.n]);
        Self::new(TileCoder::new(origin, cfg.num_tilings, cfg.tile_width))
    }

    pub fn coder(&self) -> &TileCoder {
        &self.coder
    }

    pub fn table(&self) -> &CountTable {
        &self.table
    }

    pub fn total(&self) -> u64 {
        self.table.total
    }

    pub fn clear(&mut self) {
        self.table.clear();
    }

    pub fn update(&mut self, state: &ParameterState) {
        for (t, tile) in self.coder.tiles(state).into_iter().enumerate() {
            *self.table.counts[t].entry(tile).or_insert(0) += 1;
        }
        self.table.total += 1;
    }

    /// Sum over tilings of the visit count of the state's tile.
    fn tile_count_sum(&self, state: &ParameterState) -> f64 {
        (0..self.coder.num_tilings())
            .map(|t| self.table.count(t, &self.coder.tile(t, state)) as f64)
            .sum()
    }

    pub fn density(&self, state: &ParameterState) -> Result<f64, DensityError> {
        if self.table.total == 0 {
            return Err(DensityError::EmptyModel);
        }
        let t = self.coder.num_tilings() as f64;
        Ok(self.tile_count_sum(state) / (t * self.table.total as f64))
    }

    /// Density after a hypothetical visit to `state`; the table is unchanged.
    pub fn recoding_density(&self, state: &ParameterState) -> f64 {
        let t = self.coder.num_tilings() as f64;
        (self.tile_count_sum(state) + t) / (t * (self.table.total + 1) as f64)
    }

    /// Density, or 0 for an empty model.
    fn density_or_zero(&self, state: &ParameterState) -> f64 {
        self.density(state).unwrap_or(0.0)
    }

    /// Pseudo-count of `state`. Returns `f64::INFINITY` when one more visit
    /// would not raise the density (the state already holds all the mass).
    pub fn pseudo_count(&self, state: &ParameterState) -> f64 {
        let p = self.density_or_zero(state);
        if p == 0.0 {
            return 0.0;
        }
        let p_next = self.recoding_density(state);
        if p_next <= p {
            return f64::INFINITY;
        }
        (p * (1.0 - p_next) / (p_next - p)).max(0.0)
    }

    /// `r + beta / sqrt(V + c)`; the bonus term is 0 for a fully known state.
    pub fn exploration_bonus(&self, params: &BonusParams, state: &ParameterState, r: f64) -> f64 {
        r + bonus_term(params, self.pseudo_count(state))
    }

    /// `ln p' - ln max(p, floor)`.
    pub fn prediction_gain(&self, state: &ParameterState) -> f64 {
        let p = self.density_or_zero(state).max(DENSITY_FLOOR);
        self.recoding_density(state).ln() - p.ln()
    }
}

/// `beta * sqrt(1 / (V + c))`, or 0 when `V` is infinite.
pub fn bonus_term(params: &BonusParams, pseudo_count: f64) -> f64 {
    if pseudo_count.is_infinite() {
        0.0
    } else {
        params.beta * (1.0 / (pseudo_count + params.c)).sqrt()
    }
}
