use rand::Rng;
use serde::{Deserialize, Serialize};

use super::expr::{BinaryOp, Expr};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub max_depth: usize,
    pub init_max_depth: usize,
    pub fitness_target: f64,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub fresh_random_fraction: f64,
    pub constant_range: (f64, f64),
    pub rng_seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            population_size: 500,
            max_generations: 200,
            max_depth: 8,
            init_max_depth: 4,
            fitness_target: 1e-6,
            crossover_prob: 0.9,
            mutation_prob: 0.1,
            fresh_random_fraction: 0.05,
            constant_range: (-10.0, 10.0),
            rng_seed: 0,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.population_size < 4 || !self.population_size.is_multiple_of(2) {
            return bad(format!(
                "population_size must be even and >= 4, got {}",
                self.population_size
            ));
        }
        if self.max_depth < 1 || self.init_max_depth < 1 || self.init_max_depth > self.max_depth {
            return bad(format!(
                "need 1 <= init_max_depth ({}) <= max_depth ({})",
                self.init_max_depth, self.max_depth
            ));
        }
        if self.fitness_target.is_nan() || self.fitness_target < 0.0 {
            return bad(format!(
                "fitness_target must be >= 0, got {}",
                self.fitness_target
            ));
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(0.0..0.5).contains(&self.fresh_random_fraction) {
            return bad(format!(
                "fresh_random_fraction must lie in [0, 0.5), got {}",
                self.fresh_random_fraction
            ));
        }
        let (lo, hi) = self.constant_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!(
                "constant_range must be a finite interval, got ({lo}, {hi})"
            ));
        }
        Ok(())
    }
}

fn random_terminal<R: Rng + ?Sized>(range: (f64, f64), rng: &mut R) -> Expr {
    if rng.random_bool(0.5) {
        Expr::Var
    } else {
        Expr::Const(rng.random_range(range.0..range.1))
    }
}

fn grow_to<R: Rng + ?Sized>(level: usize, limit: usize, range: (f64, f64), rng: &mut R) -> Expr {
    if level >= limit || rng.random_bool(0.5) {
        return random_terminal(range, rng);
    }
    // four binary functions plus exp, equally likely
    match rng.random_range(0..5) {
        4 => Expr::exp(grow_to(level + 1, limit, range, rng)),
        k => {
            let l = grow_to(level + 1, limit, range, rng);
            let r = grow_to(level + 1, limit, range, rng);
            Expr::binary(BinaryOp::ALL[k], l, r)
        }
    }
}

/// Grow-method tree of depth at most `config.init_max_depth`.
pub fn grow<R: Rng + ?Sized>(config: &GpConfig, rng: &mut R) -> Expr {
    grow_to(1, config.init_max_depth.max(1), config.constant_range, rng)
}

/// Replace every function node sitting at `max_depth` with a random terminal.
fn truncate<R: Rng + ?Sized>(e: &mut Expr, level: usize, config: &GpConfig, rng: &mut R) {
    if e.is_terminal() {
        return;
    }
    if level >= config.max_depth {
        *e = random_terminal(config.constant_range, rng);
        return;
    }
    match e {
        Expr::Unary(_, c) => truncate(c, level + 1, config, rng),
        Expr::Binary(_, l, r) => {
            truncate(l, level + 1, config, rng);
            truncate(r, level + 1, config, rng);
        }
        Expr::Const(_) | Expr::Var => {}
    }
}

/// Subtree crossover: swap uniformly chosen subtrees of the two parents.
pub fn crossover<R: Rng + ?Sized>(
    a: &Expr,
    b: &Expr,
    config: &GpConfig,
    rng: &mut R,
) -> (Expr, Expr) {
    let mut child_a = a.clone();
    let mut child_b = b.clone();
    let ia = rng.random_range(0..a.size());
    let ib = rng.random_range(0..b.size());
    {
        let (sa, _) = child_a.node_mut(ia).expect("index within size");
        let (sb, _) = child_b.node_mut(ib).expect("index within size");
        std::mem::swap(sa, sb);
    }
    truncate(&mut child_a, 1, config, rng);
    truncate(&mut child_b, 1, config, rng);
    (child_a, child_b)
}

/// Subtree mutation: replace a uniformly chosen node with a fresh grow tree
/// that fits under the depth cap.
pub fn mutate<R: Rng + ?Sized>(e: &Expr, config: &GpConfig, rng: &mut R) -> Expr {
    let mut out = e.clone();
    let idx = rng.random_range(0..e.size());
    let (slot, level) = out.node_mut(idx).expect("index within size");
    let room = config.max_depth.saturating_sub(level) + 1;
    *slot = grow_to(
        1,
        room.min(config.init_max_depth).max(1),
        config.constant_range,
        rng,
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn kinds(e: &Expr, out: &mut HashSet<&'static str>) {
        match e {
            Expr::Const(_) => {
                out.insert("const");
            }
            Expr::Var => {
                out.insert("var");
            }
            Expr::Unary(_, c) => {
                out.insert("exp");
                kinds(c, out);
            }
            Expr::Binary(op, l, r) => {
                out.insert(match op {
                    BinaryOp::Add => "+",
                    BinaryOp::Sub => "-",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                });
                kinds(l, out);
                kinds(r, out);
            }
        }
    }

    #[test]
    fn depth_one_grows_terminals() {
        let cfg = GpConfig {
            init_max_depth: 1,
            ..GpConfig::default()
        };
        let mut r = rng(1);
        for _ in 0..200 {
            assert!(grow(&cfg, &mut r).is_terminal());
        }
    }

    #[test]
    fn grow_is_deterministic() {
        let cfg = GpConfig::default();
        assert_eq!(grow(&cfg, &mut rng(9)), grow(&cfg, &mut rng(9)));
    }

    #[test]
    fn grow_sample_covers_primitive_set() {
        let cfg = GpConfig::default();
        let mut r = rng(3);
        let mut seen = HashSet::new();
        let mut max_depth = 0;
        let mut terminals_only = 0;
        for _ in 0..10_000 {
            let e = grow(&cfg, &mut r);
            max_depth = max_depth.max(e.depth());
            terminals_only += e.is_terminal() as usize;
            kinds(&e, &mut seen);
            assert!(e.is_well_formed(4));
        }
        assert_eq!(max_depth, 4);
        assert_eq!(seen.len(), 7, "{seen:?}");
        // root is a terminal with probability 1/2
        assert!((4500..5500).contains(&terminals_only), "{terminals_only}");
    }

    #[test]
    fn crossover_of_terminals_swaps_them() {
        let cfg = GpConfig::default();
        let (a, b) = crossover(&Expr::Var, &Expr::Const(2.5), &cfg, &mut rng(0));
        assert_eq!(a, Expr::Const(2.5));
        assert_eq!(b, Expr::Var);
    }

    #[test]
    fn crossover_and_mutation_deterministic() {
        let cfg = GpConfig::default();
        let a = grow(&cfg, &mut rng(10));
        let b = grow(&cfg, &mut rng(11));
        assert_eq!(
            crossover(&a, &b, &cfg, &mut rng(5)),
            crossover(&a, &b, &cfg, &mut rng(5))
        );
        assert_eq!(mutate(&a, &cfg, &mut rng(5)), mutate(&a, &cfg, &mut rng(5)));
    }

    #[test]
    fn mutating_a_terminal_regrows_it() {
        let cfg = GpConfig::default();
        let m = mutate(&Expr::Var, &cfg, &mut rng(4));
        // only the root can be chosen; result is a grow tree from the same stream
        let mut r = rng(4);
        let _ = r.random_range(0..1usize);
        assert_eq!(m, grow(&cfg, &mut r));
    }

    #[test]
    fn variation_respects_depth_cap() {
        let cfg = GpConfig {
            init_max_depth: 6,
            ..GpConfig::default()
        };
        let mut r = rng(77);
        let mut pool: Vec<Expr> = (0..50).map(|_| grow(&cfg, &mut r)).collect();
        for i in 0..1000 {
            let a = &pool[i % pool.len()];
            let b = &pool[(i * 7 + 3) % pool.len()];
            let (c, d) = crossover(a, b, &cfg, &mut r);
            let m = mutate(&c, &cfg, &mut r);
            for e in [&c, &d, &m] {
                assert!(e.is_well_formed(cfg.max_depth), "depth {}", e.depth());
            }
            let slot = i % pool.len();
            pool[slot] = m;
        }
    }

    #[test]
    fn config_validation() {
        assert!(GpConfig::default().validate().is_ok());
        let cases = [
            GpConfig {
                population_size: 7,
                ..GpConfig::default()
            },
            GpConfig {
                population_size: 2,
                ..GpConfig::default()
            },
            GpConfig {
                fresh_random_fraction: 0.5,
                ..GpConfig::default()
            },
            GpConfig {
                init_max_depth: 9,
                ..GpConfig::default()
            },
            GpConfig {
                crossover_prob: 1.5,
                ..GpConfig::default()
            },
            GpConfig {
                constant_range: (1.0, 1.0),
                ..GpConfig::default()
            },
            GpConfig {
                fitness_target: -1.0,
                ..GpConfig::default()
            },
        ];
        for c in cases {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
