use rand::Rng;
use rayon::prelude::*;

use super::expr::Expr;
use super::ops::{crossover, grow, mutate, GpConfig};
use crate::error::{check_pair, Result};
use crate::rng::stream;

const INIT_TAG: u64 = 0x1;
const BREED_TAG: u64 = 0x2;
const FRESH_TAG: u64 = 0x3;

/// Sum of squared deviations between `g(past_k)` and `present_k`.
pub fn fitness_of(e: &Expr, past: &[f64], present: &[f64]) -> Result<f64> {
    check_pair(past, present, 1)?;
    Ok(sse(e, past, present))
}

fn sse(e: &Expr, past: &[f64], present: &[f64]) -> f64 {
    past.iter()
        .zip(present)
        .map(|(p, f)| {
            let d = e.eval(*p) - f;
            d * d
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub expr: Expr,
    pub fitness: Option<f64>,
}

impl Individual {
    pub fn new(expr: Expr) -> Self {
        Self {
            expr,
            fitness: None,
        }
    }

    /// Fitness for ranking; unevaluated individuals sort last.
    pub fn score(&self) -> f64 {
        self.fitness.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone)]
pub struct Population {
    pub members: Vec<Individual>,
    pub generation: usize,
}

impl Population {
    /// Random grow-method population, evaluated and sorted best-first.
    pub fn initial(config: &GpConfig, past: &[f64], present: &[f64]) -> Self {
        let members = (0..config.population_size)
            .into_par_iter()
            .map(|i| {
                Individual::new(grow(
                    config,
                    &mut stream(config.rng_seed, &[INIT_TAG, i as u64]),
                ))
            })
            .collect();
        let mut pop = Self {
            members,
            generation: 0,
        };
        pop.evaluate_and_sort(past, present);
        pop
    }

    pub fn best(&self) -> &Individual {
        &self.members[0]
    }

    fn evaluate_and_sort(&mut self, past: &[f64], present: &[f64]) {
        self.members
            .par_iter_mut()
            .filter(|m| m.fitness.is_none())
            .for_each(|m| m.fitness = Some(sse(&m.expr, past, present)));
        // stable: equal fitness keeps survivors ahead of newcomers
        self.members.sort_by(|a, b| a.score().total_cmp(&b.score()));
    }

    /// One generation: the better half survives unchanged; the worse half is
    /// replaced by offspring of the better half plus a few fresh random trees.
    pub fn step(&mut self, config: &GpConfig, past: &[f64], present: &[f64]) {
        let n = self.members.len();
        let half = n / 2;
        let generation = (self.generation + 1) as u64;
        let fresh = ((config.fresh_random_fraction * n as f64).round() as usize).min(half);
        let bred = half - fresh;

        let parents = &self.members[..half];
        let offspring: Vec<Expr> = (0..bred.div_ceil(2))
            .into_par_iter()
            .flat_map_iter(|pair| {
                let mut rng = stream(config.rng_seed, &[BREED_TAG, generation, pair as u64]);
                let a = &parents[rng.random_range(0..half)].expr;
                let b = &parents[rng.random_range(0..half)].expr;
                let (mut c, mut d) = if rng.random_bool(config.crossover_prob) {
                    crossover(a, b, config, &mut rng)
                } else {
                    (a.clone(), b.clone())
                };
                if rng.random_bool(config.mutation_prob) {
                    c = mutate(&c, config, &mut rng);
                }
                if rng.random_bool(config.mutation_prob) {
                    d = mutate(&d, config, &mut rng);
                }
                [c, d]
            })
            .collect();
        let newcomers: Vec<Expr> = (0..fresh)
            .into_par_iter()
            .map(|k| {
                grow(
                    config,
                    &mut stream(config.rng_seed, &[FRESH_TAG, generation, k as u64]),
                )
            })
            .collect();

        self.members.truncate(half);
        self.members.extend(
            offspring
                .into_iter()
                .take(bred)
                .chain(newcomers)
                .map(Individual::new),
        );
        debug_assert_eq!(self.members.len(), n);
        self.generation += 1;
        self.evaluate_and_sort(past, present);
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub best: Individual,
    pub generations_run: usize,
    /// Best fitness after initialisation and after every generation.
    pub history: Vec<f64>,
}

/// Truncation-selection GP loop. Stops at `fitness_target` or
/// `max_generations`, whichever comes first.
pub fn evolve(config: &GpConfig, past: &[f64], present: &[f64]) -> Result<EvolveOutcome> {
    config.validate()?;
    check_pair(past, present, 2)?;
    let mut pop = Population::initial(config, past, present);
    let mut history = vec![pop.best().score()];
    while pop.generation < config.max_generations && pop.best().score() > config.fitness_target {
        pop.step(config, past, present);
        history.push(pop.best().score());
    }
    Ok(EvolveOutcome {
        best: pop.best().clone(),
        generations_run: pop.generation,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::gp::{parse_expr, BinaryOp};

    #[test]
    fn fitness_examples() {
        assert_eq!(
            fitness_of(&Expr::Var, &[3., 4., 5.], &[3., 4., 5.]).unwrap(),
            0.0
        );
        assert_eq!(
            fitness_of(&Expr::Const(0.0), &[9., 9.], &[1., 2.]).unwrap(),
            5.0
        );
        let affine = Expr::binary(
            BinaryOp::Add,
            Expr::binary(BinaryOp::Mul, Expr::Const(2.0), Expr::Var),
            Expr::Const(1.0),
        );
        assert_eq!(affine, parse_expr("2 * x + 1").unwrap());
        assert_eq!(
            fitness_of(&affine, &[1., 2., 3.], &[3., 5., 7.]).unwrap(),
            0.0
        );
        assert!(matches!(
            fitness_of(&Expr::Var, &[1.], &[1., 2.]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let cfg = GpConfig {
            max_generations: 0,
            population_size: 20,
            ..GpConfig::default()
        };
        let past = [1.0, 2.0, 5.0];
        let present = [2.0, 3.0, 9.0];
        let out = evolve(&cfg, &past, &present).unwrap();
        assert_eq!(out.generations_run, 0);
        let init = Population::initial(&cfg, &past, &present);
        let min = init
            .members
            .iter()
            .map(|m| m.score())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(out.best.fitness, Some(min));
    }

    #[test]
    fn identity_is_found_quickly() {
        let past: Vec<f64> = (0..15)
            .map(|i| 100.0 + (i as f64 * 0.7).sin() * 3.0)
            .collect();
        let mut hits = 0;
        for seed in 0..10 {
            let cfg = GpConfig {
                rng_seed: seed,
                fitness_target: 1e-8,
                population_size: 200,
                ..GpConfig::default()
            };
            let out = evolve(&cfg, &past, &past).unwrap();
            if out.best.score() <= 1e-8 && out.generations_run < cfg.max_generations {
                hits += 1;
            }
        }
        assert!(hits >= 8, "{hits}/10");
    }

    #[test]
    fn population_size_and_elitism_hold() {
        let cfg = GpConfig {
            population_size: 60,
            rng_seed: 5,
            ..GpConfig::default()
        };
        let past: Vec<f64> = (1..=12).map(f64::from).collect();
        let present: Vec<f64> = past.iter().map(|p| p * p - 3.0).collect();
        let mut pop = Population::initial(&cfg, &past, &present);
        let mut prev = pop.best().score();
        for _ in 0..30 {
            pop.step(&cfg, &past, &present);
            assert_eq!(pop.members.len(), 60);
            assert!(pop.best().score() <= prev);
            prev = pop.best().score();
            for m in &pop.members {
                assert_eq!(
                    m.fitness,
                    Some(fitness_of(&m.expr, &past, &present).unwrap())
                );
            }
        }
    }

    #[test]
    fn evolve_is_deterministic() {
        let cfg = GpConfig {
            population_size: 100,
            max_generations: 30,
            rng_seed: 42,
            ..GpConfig::default()
        };
        let past = [1.0, 4.0, 2.0, 8.0, 5.0];
        let present = [3.0, 1.0, 7.0, 2.0, 2.0];
        let a = evolve(&cfg, &past, &present).unwrap();
        let b = evolve(&cfg, &past, &present).unwrap();
        assert_eq!(a.best, b.best);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = GpConfig::default();
        assert!(matches!(
            evolve(&cfg, &[1.0], &[1.0]),
            Err(Error::TooShort { .. })
        ));
        let odd = GpConfig {
            population_size: 5,
            ..GpConfig::default()
        };
        assert!(matches!(
            evolve(&odd, &[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::InvalidConfig(_))
        ));
    }
}
