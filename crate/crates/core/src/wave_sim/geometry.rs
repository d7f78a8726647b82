use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dispersion::PlateSpec;
use crate::error::{ensure, Result};
use crate::seed;

pub type Point = [f64; 2];

pub fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Sensor positions and the ordered transmit/receive pairs measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub sensor_positions: Vec<Point>,
    pub pair_index: Vec<(usize, usize)>,
}

impl ArrayGeometry {
    /// All `S·(S−1)` ordered pairs of the given sensors.
    pub fn new(plate: &PlateSpec, sensor_positions: Vec<Point>) -> Result<Self> {
        let side = plate.side_length;
        ensure(
            sensor_positions
                .iter()
                .all(|p| (0.0..=side).contains(&p[0]) && (0.0..=side).contains(&p[1])),
            || format!("sensor positions must lie inside [0, {side}]²"),
        )?;
        let s = sensor_positions.len();
        let pair_index = (0..s)
            .flat_map(|t| (0..s).filter(move |&r| r != t).map(move |r| (t, r)))
            .collect();
        Ok(Self {
            sensor_positions,
            pair_index,
        })
    }

    /// Uniform-random placement with a minimum pairwise separation.
    pub fn random(plate: &PlateSpec, sensors: usize, min_separation: f64, rng_seed: u64) -> Result<Self> {
        const MAX_TRIES: usize = 100_000;
        let mut rng = seed::rng(rng_seed);
        let side = plate.side_length;
        let mut positions: Vec<Point> = Vec::with_capacity(sensors);
        let mut tries = 0;
        while positions.len() < sensors {
            tries += 1;
            ensure(tries < MAX_TRIES, || {
                format!("cannot place {sensors} sensors {min_separation} m apart")
            })?;
            let p = [rng.random_range(0.0..side), rng.random_range(0.0..side)];
            if positions.iter().all(|q| distance(p, *q) >= min_separation) {
                positions.push(p);
            }
        }
        Self::new(plate, positions)
    }

    pub fn sensors(&self) -> usize {
        self.sensor_positions.len()
    }

    pub fn pairs(&self) -> usize {
        self.pair_index.len()
    }

    /// Index of the unordered sensor pair `{t, r}`, shared by `(t, r)` and `(r, t)`.
    pub fn unordered_index(&self, t: usize, r: usize) -> usize {
        let (a, b) = if t < r { (t, r) } else { (r, t) };
        let s = self.sensors();
        // Row-wise upper-triangle enumeration.
        a * (2 * s - a - 1) / 2 + (b - a - 1)
    }

    pub fn unordered_pairs(&self) -> usize {
        let s = self.sensors();
        s * s.saturating_sub(1) / 2
    }

    pub fn pair_distance(&self, pair: usize) -> f64 {
        let (t, r) = self.pair_index[pair];
        distance(self.sensor_positions[t], self.sensor_positions[r])
    }

    /// Transmitter → scatterer → receiver path length.
    pub fn scatter_distance(&self, pair: usize, scatterer: Point) -> f64 {
        let (t, r) = self.pair_index[pair];
        distance(self.sensor_positions[t], scatterer) + distance(scatterer, self.sensor_positions[r])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plate() -> PlateSpec {
        PlateSpec::aluminum(1.22, 3e-3).unwrap()
    }

    #[test]
    fn sixteen_sensors_give_240_pairs() {
        let g = ArrayGeometry::random(&plate(), 16, 0.05, 3).unwrap();
        assert_eq!(g.pairs(), 240);
        assert!(g.pair_index.iter().all(|(t, r)| t != r));
        for (i, a) in g.sensor_positions.iter().enumerate() {
            for b in &g.sensor_positions[i + 1..] {
                assert!(distance(*a, *b) >= 0.05);
            }
        }
    }

    #[test]
    fn unordered_index_is_a_bijection() {
        let g = ArrayGeometry::random(&plate(), 5, 0.05, 1).unwrap();
        let mut seen = vec![false; g.unordered_pairs()];
        for &(t, r) in &g.pair_index {
            assert_eq!(g.unordered_index(t, r), g.unordered_index(r, t));
            seen[g.unordered_index(t, r)] = true;
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn scatter_path_length() {
        let p = PlateSpec::aluminum(2.0, 3e-3).unwrap();
        let g = ArrayGeometry::new(&p, vec![[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let d = g.scatter_distance(0, [0.5, 0.5]);
        assert!((d - 2.0 * 0.5f64.sqrt()).abs() < 1e-12);
        assert!(ArrayGeometry::new(&p, vec![[3.0, 0.0]]).is_err());
    }
}
