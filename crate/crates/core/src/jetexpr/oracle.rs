//! Randomized identity testing. An expression counts as zero when it
//! vanishes, relative to the magnitude of its own terms, at a batch of
//! independently sampled jet-space points. Deterministic for a fixed seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::eval::{eval_at, EvalError, JetPoint};
use super::node::{Coord, Expr};

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub seed: u64,
    pub samples: usize,
    pub rel_tol: f64,
    /// Sampled magnitudes fall in this band (either sign), keeping points
    /// away from both zero and overflow territory.
    pub band: (f64, f64),
    /// Redraw budget per sample for points that land outside some factor's
    /// domain (log of a negative number and the like).
    pub max_retries: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            seed: 24601,
            samples: 64,
            rel_tol: 1e-9,
            band: (0.5, 2.0),
            max_retries: 64,
        }
    }
}

impl OracleConfig {
    pub fn with_seed(seed: u64) -> Self {
        OracleConfig {
            seed,
            ..OracleConfig::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("could not find a valid sample point: {0}")]
    Exhausted(EvalError),
    #[error("proportionality test is degenerate: both tuples vanish")]
    Degenerate,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Outcome of a zero test.
#[derive(Debug, Clone)]
pub struct ZeroVerdict {
    pub zero: bool,
    /// Largest residual seen, relative to the per-point term scale.
    pub max_rel_residual: f64,
    pub samples: usize,
}

/// Outcome of a proportionality test `a ≈ c·b`.
#[derive(Debug, Clone)]
pub struct PropVerdict {
    pub proportional: bool,
    pub ratio: Option<f64>,
    pub max_rel_residual: f64,
}

fn sample_point(
    coords: &[Coord],
    rng: &mut ChaCha8Rng,
    cfg: &OracleConfig,
) -> JetPoint {
    let mut p = JetPoint::new(cfg.seed);
    for c in coords {
        let mag: f64 = rng.gen_range(cfg.band.0..cfg.band.1);
        let v = if rng.gen::<bool>() { mag } else { -mag };
        p.set(c.clone(), v);
    }
    p
}

/// Evaluate each term of `e` at a fresh point, retrying on domain errors.
/// Returns the term values together with the point used.
fn sample_terms(
    terms: &[Expr],
    coords: &[Coord],
    rng: &mut ChaCha8Rng,
    cfg: &OracleConfig,
) -> Result<Vec<f64>, OracleError> {
    let mut last = None;
    for _ in 0..=cfg.max_retries {
        let p = sample_point(coords, rng, cfg);
        let mut vals = Vec::with_capacity(terms.len());
        let mut ok = true;
        for t in terms {
            match eval_at(t, &p) {
                Ok(v) => vals.push(v),
                Err(e @ (EvalError::Domain(_) | EvalError::NonFinite)) => {
                    last = Some(e);
                    ok = false;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        if ok {
            return Ok(vals);
        }
    }
    Err(OracleError::Exhausted(last.unwrap_or(EvalError::NonFinite)))
}

/// Does `e` vanish identically on jet space?
pub fn is_zero(e: &Expr, cfg: &OracleConfig) -> Result<ZeroVerdict, OracleError> {
    let terms = e.terms();
    let coords = e.coords();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    for _ in 0..cfg.samples {
        let vals = sample_terms(&terms, &coords, &mut rng, cfg)?;
        let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let rel = vals.iter().sum::<f64>().abs() / scale;
        worst = worst.max(rel);
        if rel > cfg.rel_tol {
            return Ok(ZeroVerdict {
                zero: false,
                max_rel_residual: worst,
                samples: cfg.samples,
            });
        }
    }
    Ok(ZeroVerdict {
        zero: true,
        max_rel_residual: worst,
        samples: cfg.samples,
    })
}

/// Is the tuple `a` a single constant multiple of the tuple `b`? The
/// constant is fitted by least squares over the sampled points and then
/// re-checked componentwise. Errors if both tuples vanish identically.
pub fn is_proportional(
    a: &[Expr],
    b: &[Expr],
    cfg: &OracleConfig,
) -> Result<PropVerdict, OracleError> {
    assert_eq!(a.len(), b.len(), "tuples must have equal length");
    let mut coords = Vec::new();
    for e in a.iter().chain(b) {
        for c in e.coords() {
            if !coords.contains(&c) {
                coords.push(c);
            }
        }
    }
    coords.sort();
    let all: Vec<Expr> = a.iter().chain(b).cloned().collect();
    let n = a.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        pts.push(sample_terms(&all, &coords, &mut rng, cfg)?);
    }
    let num: f64 = pts.iter().flat_map(|v| (0..n).map(|i| v[i] * v[n + i])).sum();
    let den: f64 = pts.iter().flat_map(|v| (0..n).map(|i| v[n + i] * v[n + i])).sum();
    let a_mag = pts
        .iter()
        .flat_map(|v| (0..n).map(|i| v[i].abs()))
        .fold(0.0, f64::max);
    if den == 0.0 {
        if a_mag <= cfg.rel_tol {
            return Err(OracleError::Degenerate);
        }
        return Ok(PropVerdict {
            proportional: false,
            ratio: None,
            max_rel_residual: a_mag,
        });
    }
    if a_mag <= cfg.rel_tol {
        return Ok(PropVerdict {
            proportional: true,
            ratio: Some(0.0),
            max_rel_residual: a_mag,
        });
    }
    let c = num / den;
    let mut worst = 0.0f64;
    for v in &pts {
        for i in 0..n {
            let scale = 1.0f64.max(v[i].abs()).max(v[n + i].abs());
            worst = worst.max((v[i] - c * v[n + i]).abs() / scale);
        }
    }
    Ok(PropVerdict {
        proportional: worst <= cfg.rel_tol,
        ratio: Some(c),
        max_rel_residual: worst,
    })
}
