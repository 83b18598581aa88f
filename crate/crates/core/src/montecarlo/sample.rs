use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::rng::{seek_replicate, stream_rng, Domain};
use crate::error::{Error, Result};
use crate::model::McSettings;

/// Replicated null order statistics: each row is the sorted squares of `m`
/// independent standard normal draws.
///
/// Only the `m` zero effects of the least-favorable configuration are drawn;
/// the remaining infinite effects never enter a statistic with index `<= m`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSample {
    m: usize,
    reps: usize,
    seed: u64,
    rows: Vec<f64>,
}

impl NullSample {
    /// Generates `reps` replicates. Replicate `r` is a pure function of
    /// `(seed, m, r)`; `chunk` only controls work granularity.
    pub fn generate(m: usize, reps: usize, seed: u64, chunk: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidInput(format!(
                "null sample needs m >= 2 (got {m})"
            )));
        }
        if reps == 0 || chunk == 0 {
            return Err(Error::InvalidInput(
                "reps and chunk must be positive".into(),
            ));
        }
        let len = reps
            .checked_mul(m)
            .ok_or_else(|| Error::Resource(format!("{reps} x {m} sample overflows")))?;
        let mut rows: Vec<f64> = Vec::new();
        rows.try_reserve_exact(len).map_err(|e| {
            Error::Resource(format!("cannot allocate {reps} x {m} null sample: {e}"))
        })?;
        rows.resize(len, 0.0);

        rows.par_chunks_mut(chunk * m)
            .enumerate()
            .for_each(|(ci, block)| {
                let mut rng = stream_rng(seed, Domain::Null, m as u64);
                for (j, row) in block.chunks_mut(m).enumerate() {
                    let r = ci * chunk + j;
                    seek_replicate(&mut rng, r);
                    draw_sorted_squares(&mut rng, row, r);
                }
            });
        Ok(Self {
            m,
            reps,
            seed,
            rows,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn reps(&self) -> usize {
        self.reps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.rows[r * self.m..(r + 1) * self.m]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.rows.chunks_exact(self.m)
    }

    pub(crate) fn par_rows(&self) -> rayon::slice::ChunksExact<'_, f64> {
        self.rows.par_chunks_exact(self.m)
    }
}

fn draw_sorted_squares(rng: &mut ChaCha8Rng, row: &mut [f64], r: usize) {
    loop {
        for v in row.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = z * z;
        }
        row.sort_unstable_by(f64::total_cmp);
        // A zero smallest square would make S_1 vanish.
        if row[0] > 0.0 {
            return;
        }
        log::warn!("replicate {r}: exact zero square drawn, redrawing");
    }
}

/// Null sample for the configuration with `m` zero effects.
pub fn sample_null(m: usize, mc: &McSettings) -> Result<NullSample> {
    NullSample::generate(m, mc.reps(), mc.seed(), mc.chunk())
}
