//! Random scenarios that satisfy the preconditions of either scheme.

use rand::seq::index::sample;
use rand::Rng;

use super::{MessageContent, MessageInput, Mode, Scenario, ScenarioInput};

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub mode: Mode,
    pub max_classes: usize,
    pub max_k_un: usize,
    /// Only used in multi mode.
    pub max_users: usize,
    pub max_symbols: usize,
}

impl SynthConfig {
    pub fn single() -> Self {
        Self { mode: Mode::Single, max_classes: 6, max_k_un: 3, max_users: 1, max_symbols: 3 }
    }

    pub fn multi() -> Self {
        Self { mode: Mode::Multi, max_classes: 7, max_k_un: 3, max_users: 3, max_symbols: 2 }
    }
}

fn next_prime(mut n: u64) -> u64 {
    n = n.max(2);
    loop {
        if (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0) {
            return n;
        }
        n += 1;
    }
}

/// Draws a scenario that passes `validate(cfg.mode)`.
pub fn synthesize<R: Rng>(rng: &mut R, cfg: SynthConfig) -> Scenario {
    let (gamma, eta, users, k_un) = match cfg.mode {
        Mode::Single => {
            let gamma = rng.random_range(2..=cfg.max_classes.max(2));
            let eta = rng.random_range(1..=gamma);
            let k_un = if eta == gamma { 0 } else { rng.random_range(0..=cfg.max_k_un) };
            (gamma, eta, 1, k_un)
        }
        Mode::Multi => {
            // (eta - 1) must be a multiple of U and k_un + 1 >= U
            let users = rng.random_range(1..=cfg.max_users.max(1));
            let blocks = rng.random_range(0..=2usize);
            let eta = 1 + users * blocks;
            // with several users k_un + 1 >= U needs an unidentifiable class
            let gamma_lo = if users > 1 { eta + 1 } else { eta.max(2) };
            let gamma_hi = gamma_lo.max(cfg.max_classes.min(eta + 2));
            let gamma = rng.random_range(gamma_lo..=gamma_hi);
            let lo = users - 1;
            let k_un = if eta == gamma { lo } else { rng.random_range(lo..=lo.max(cfg.max_k_un)) };
            (gamma, eta, users, k_un)
        }
    };

    // per user, per class side-information counts
    let counts: Vec<Vec<usize>> = (0..users)
        .map(|_| {
            let mut k: Vec<usize> = (0..gamma)
                .map(|i| {
                    if i < eta {
                        rng.random_range(k_un + 1..=k_un + 2)
                    } else {
                        rng.random_range(0..=k_un)
                    }
                })
                .collect();
            if eta < gamma {
                let pinned = rng.random_range(eta..gamma);
                k[pinned] = k_un;
            }
            k
        })
        .collect();
    let margin = match cfg.mode {
        Mode::Single => (k_un + 1).div_ceil(eta),
        Mode::Multi => k_un + 1,
    };
    let mu: Vec<usize> = (0..gamma)
        .map(|i| {
            let most = counts.iter().map(|k| k[i]).max().unwrap_or(0);
            (most + margin).max(k_un + 1) + rng.random_range(0..=2)
        })
        .collect();

    let n = match cfg.mode {
        Mode::Single => 2 * gamma - eta + 1,
        Mode::Multi => 2 * gamma - (eta - 1).div_ceil(users),
    };
    let q = next_prime(n as u64 + rng.random_range(0..=6));
    let symbols = rng.random_range(1..=cfg.max_symbols.max(1));

    let classes = mu
        .iter()
        .map(|&m| (0..m).map(|_| MessageInput { id: None, content: MessageContent::Random }).collect())
        .collect();
    let side_info = counts
        .iter()
        .map(|k| {
            k.iter()
                .zip(&mu)
                .map(|(&k, &m)| {
                    let mut picked: Vec<usize> = sample(rng, m, k).into_iter().map(|x| x + 1).collect();
                    picked.sort_unstable();
                    picked
                })
                .collect()
        })
        .collect();

    let input = ScenarioInput {
        field_order: q,
        symbols_per_message: symbols,
        classes,
        eta,
        identifiable_classes: None,
        users: side_info,
        explicit_generator: None,
        seed: rng.random(),
    };
    Scenario::from_input(&input).expect("synthesized scenario is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn synthesized_scenarios_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for cfg in [SynthConfig::single(), SynthConfig::multi()] {
            for _ in 0..300 {
                let s = synthesize(&mut rng, cfg);
                let report = s.validate(cfg.mode);
                assert!(report.passed(), "{:?}\n{:?}", report, s);
                if cfg.mode == Mode::Multi {
                    assert_eq!((s.eta() - 1) % s.user_count(), 0);
                }
            }
        }
    }

    #[test]
    fn primes() {
        assert_eq!(next_prime(8), 11);
        assert_eq!(next_prime(11), 11);
        assert_eq!(next_prime(0), 2);
    }
}
