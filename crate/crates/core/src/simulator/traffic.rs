use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;

/// Arrival process and clock. Durations are whole milliseconds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficConfig {
    /// Per-tick arrival counts, drawn uniformly.
    pub arrival_choices: Vec<u32>,
    pub tick_ms: u64,
    /// Must be a positive multiple of `tick_ms`.
    pub routing_interval_ms: u64,
    /// Hard stop; `None` runs until every query completes.
    pub horizon_ms: Option<u64>,
    pub seed: u64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            arrival_choices: vec![1, 2, 3, 4],
            tick_ms: 100,
            routing_interval_ms: 1000,
            horizon_ms: None,
            seed: 0,
        }
    }
}

impl TrafficConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.arrival_choices.is_empty() {
            return Err(SimError::Config("arrival choices must be non-empty".into()));
        }
        if self.tick_ms == 0 {
            return Err(SimError::Config("tick must be positive".into()));
        }
        if self.routing_interval_ms == 0 || !self.routing_interval_ms.is_multiple_of(self.tick_ms) {
            return Err(SimError::Config(format!(
                "routing interval {} ms is not a positive multiple of the {} ms tick",
                self.routing_interval_ms, self.tick_ms
            )));
        }
        Ok(())
    }

    pub fn interval_ticks(&self) -> u64 {
        self.routing_interval_ms / self.tick_ms
    }

    /// Ticks before the hard stop, rounded up.
    pub fn horizon_ticks(&self) -> Option<u64> {
        self.horizon_ms.map(|h| h.div_ceil(self.tick_ms))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arrival {
    pub tick: u64,
    /// Index into the evaluated query set.
    pub query: usize,
}

/// Seeded arrival timeline over `n_queries` queries.
///
/// Each tick draws a count uniformly from the choices, then that many
/// queries uniformly without replacement, until the pool is empty.
pub fn generate_arrivals(
    config: &TrafficConfig,
    n_queries: usize,
) -> Result<Vec<Arrival>, SimError> {
    config.validate()?;
    let mut timeline = Vec::with_capacity(n_queries);
    if config.arrival_choices.iter().all(|&c| c == 0) {
        return Ok(timeline);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pool: Vec<usize> = (0..n_queries).collect();
    let mut tick = 0u64;
    while !pool.is_empty() {
        let n = config.arrival_choices[rng.gen_range(0..config.arrival_choices.len())];
        for _ in 0..n {
            if pool.is_empty() {
                break;
            }
            let query = pool.swap_remove(rng.gen_range(0..pool.len()));
            timeline.push(Arrival { tick, query });
        }
        tick += 1;
    }
    Ok(timeline)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_choice_is_empty() {
        let cfg = TrafficConfig {
            arrival_choices: vec![0],
            ..TrafficConfig::default()
        };
        assert!(generate_arrivals(&cfg, 50).unwrap().is_empty());
    }

    #[test]
    fn every_query_arrives_once_in_tick_order() {
        let arrivals = generate_arrivals(&TrafficConfig::default(), 300).unwrap();
        let mut seen: Vec<usize> = arrivals.iter().map(|a| a.query).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..300).collect::<Vec<_>>());
        assert!(arrivals.windows(2).all(|w| w[0].tick <= w[1].tick));
        let per_tick = arrivals.iter().filter(|a| a.tick == 0).count();
        assert!((1..=4).contains(&per_tick));
    }

    #[test]
    fn same_seed_same_timeline() {
        let cfg = TrafficConfig {
            seed: 11,
            ..TrafficConfig::default()
        };
        assert_eq!(
            generate_arrivals(&cfg, 100).unwrap(),
            generate_arrivals(&cfg, 100).unwrap()
        );
        let other = TrafficConfig {
            seed: 12,
            ..cfg.clone()
        };
        assert_ne!(
            generate_arrivals(&cfg, 100).unwrap(),
            generate_arrivals(&other, 100).unwrap()
        );
    }

    #[test]
    fn interval_must_divide() {
        let cfg = TrafficConfig {
            routing_interval_ms: 250,
            tick_ms: 100,
            ..TrafficConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert_eq!(TrafficConfig::default().interval_ticks(), 10);
        let h = TrafficConfig {
            horizon_ms: Some(1050),
            ..TrafficConfig::default()
        };
        assert_eq!(h.horizon_ticks(), Some(11));
    }
}
