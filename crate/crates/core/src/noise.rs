//! Coupled, reproducible Brownian increments for the interior cylindrical
//! process `w^Q` and the two-endpoint boundary process `w^B`.
//!
//! One `NoisePath` is consumed verbatim by both the SPDE solver and the
//! averaged SDE solver; that shared stream is what makes strong (pathwise)
//! convergence measurable.
//!
//! Generator: `ChaCha8Rng` from `rand_chacha` 0.9 with `StandardNormal`
//! (ziggurat) from `rand_distr` 0.5, version-pinned here. Draw order is
//! step-major: within a step, interior modes ascending, then the two
//! endpoints. Raw normals are always drawn (and then scaled by the spectrum),
//! so the stream layout does not depend on which intensities are zero.
//! Per-replica streams are derived as `seed = base_seed + replica_index`.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spectrum of the interior covariance operator Q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QSpec {
    /// lambda_k = 1 for every mode: space-time white noise, admissible in 1D.
    Identity,
    Explicit(Vec<f64>),
}

impl QSpec {
    pub fn lambdas(&self, k_modes: usize) -> Result<Vec<f64>> {
        match self {
            QSpec::Identity => Ok(vec![1.0; k_modes]),
            QSpec::Explicit(l) => {
                if l.len() < k_modes {
                    return Err(Error::Config(format!(
                        "explicit Q spectrum has {} entries, need {k_modes}",
                        l.len()
                    )));
                }
                if l.iter().any(|x| *x < 0.0) {
                    return Err(Error::Config("Q eigenvalues must be >= 0".into()));
                }
                Ok(l[..k_modes].to_vec())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub q_eigs: QSpec,
    /// (theta_1, theta_2): boundary intensities at (x_a, x_b).
    pub theta: (f64, f64),
    pub k_modes: usize,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.theta.0 < 0.0 || self.theta.1 < 0.0 {
            return Err(Error::Config("theta must be >= 0".into()));
        }
        self.q_eigs.lambdas(self.k_modes).map(|_| ())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        NoiseSpec {
            seed,
            ..self.clone()
        }
    }

    pub fn replica(&self, index: u64) -> Self {
        self.with_seed(self.seed.wrapping_add(index))
    }
}

/// Pre-scaled increments: `dw[step][j] = lambda_j dbeta_j`,
/// `db[step][i] = theta_i dbeta_hat_i`, each raw increment N(0, dt).
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub dt: f64,
    pub n_steps: usize,
    pub k_modes: usize,
    pub seed: u64,
    dw: Vec<f64>, // n_steps x k_modes
    db: Vec<f64>, // n_steps x 2
}

impl NoisePath {
    pub fn dw_row(&self, step: usize) -> &[f64] {
        &self.dw[step * self.k_modes..(step + 1) * self.k_modes]
    }

    pub fn db_row(&self, step: usize) -> (f64, f64) {
        (self.db[2 * step], self.db[2 * step + 1])
    }

    /// Checksum over all increments; used to assert that the two coupled
    /// solvers consumed identical streams.
    pub fn checksum(&self) -> u64 {
        let mut acc = 0xcbf2_9ce4_8422_2325u64;
        for v in self.dw.iter().chain(self.db.iter()) {
            acc ^= v.to_bits();
            acc = acc.wrapping_mul(0x1000_0000_01b3);
        }
        acc
    }
}

/// Draw a full path of increments in the fixed order.
pub fn sample_path(spec: &NoiseSpec, dt: f64, n_steps: usize) -> Result<NoisePath> {
    if dt <= 0.0 {
        return Err(Error::Config("dt must be > 0".into()));
    }
    spec.validate()?;
    let lambdas = spec.q_eigs.lambdas(spec.k_modes)?;
    let sqrt_dt = dt.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut dw = Vec::with_capacity(n_steps * spec.k_modes);
    let mut db = Vec::with_capacity(n_steps * 2);
    for _ in 0..n_steps {
        for lam in &lambdas {
            let z: f64 = rng.sample(StandardNormal);
            dw.push(lam * sqrt_dt * z);
        }
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        db.push(spec.theta.0 * sqrt_dt * z1);
        db.push(spec.theta.1 * sqrt_dt * z2);
    }
    Ok(NoisePath {
        dt,
        n_steps,
        k_modes: spec.k_modes,
        seed: spec.seed,
        dw,
        db,
    })
}

/// Brownian-bridge subdivision of every increment by `factor`. The refined
/// sub-increments of each coarse cell sum to the coarse increment exactly
/// (up to floating point), so both paths realize the same Brownian motion.
///
/// The bridge RNG is derived deterministically from the path seed and the
/// factor. Paths loaded from disk carry seed 0 and refine reproducibly too.
pub fn refine(path: &NoisePath, factor: usize) -> Result<NoisePath> {
    if factor < 2 {
        return Err(Error::Config("refine factor must be >= 2".into()));
    }
    let mut rng =
        ChaCha8Rng::seed_from_u64(path.seed ^ 0x5eed_b41d_6e00_0000u64 ^ factor as u64);
    let fine_dt = path.dt / factor as f64;
    let sqrt_fine = fine_dt.sqrt();
    let n_fine = path.n_steps * factor;
    let cols = path.k_modes + 2;
    let mut fine = vec![0.0; n_fine * cols];
    // column-major scratch per coarse step: draw i.i.d. N(0, dt/factor) and
    // shift by the mean so the subdivision sums to the coarse increment
    let mut buf = vec![0.0; factor];
    for step in 0..path.n_steps {
        for col in 0..cols {
            let coarse = if col < path.k_modes {
                path.dw[step * path.k_modes + col]
            } else {
                path.db[2 * step + (col - path.k_modes)]
            };
            let mut sum = 0.0;
            for b in buf.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *b = sqrt_fine * z;
                sum += *b;
            }
            let shift = (coarse - sum) / factor as f64;
            for (s, b) in buf.iter().enumerate() {
                fine[(step * factor + s) * cols + col] = b + shift;
            }
        }
    }
    // re-pack into row-major dw / db
    let mut dw = Vec::with_capacity(n_fine * path.k_modes);
    let mut db = Vec::with_capacity(n_fine * 2);
    for row in 0..n_fine {
        for col in 0..path.k_modes {
            dw.push(fine[row * cols + col]);
        }
        db.push(fine[row * cols + path.k_modes]);
        db.push(fine[row * cols + path.k_modes + 1]);
    }
    Ok(NoisePath {
        dt: fine_dt,
        n_steps: n_fine,
        k_modes: path.k_modes,
        seed: path.seed,
        dw,
        db,
    })
}

/// Sum refined increments back onto the coarse step layout (test helper and
/// inverse of `refine` up to rounding).
pub fn aggregate(path: &NoisePath, factor: usize) -> NoisePath {
    assert!(factor >= 1 && path.n_steps % factor == 0);
    let n = path.n_steps / factor;
    let mut dw = vec![0.0; n * path.k_modes];
    let mut db = vec![0.0; n * 2];
    for step in 0..path.n_steps {
        let coarse = step / factor;
        for j in 0..path.k_modes {
            dw[coarse * path.k_modes + j] += path.dw[step * path.k_modes + j];
        }
        db[2 * coarse] += path.db[2 * step];
        db[2 * coarse + 1] += path.db[2 * step + 1];
    }
    NoisePath {
        dt: path.dt * factor as f64,
        n_steps: n,
        k_modes: path.k_modes,
        seed: path.seed,
        dw,
        db,
    }
}

const NZP_MAGIC: &[u8; 4] = b"NZP1";

/// Binary dump: magic "NZP1", dt (f64 LE), n_steps (u64 LE), K (u64 LE),
/// then `n_steps * K` dw values and `n_steps * 2` db values, all f64 LE.
pub fn write_nzp(path: &NoisePath, mut out: impl Write) -> Result<()> {
    out.write_all(NZP_MAGIC)?;
    out.write_all(&path.dt.to_le_bytes())?;
    out.write_all(&(path.n_steps as u64).to_le_bytes())?;
    out.write_all(&(path.k_modes as u64).to_le_bytes())?;
    for v in path.dw.iter().chain(path.db.iter()) {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_nzp(mut input: impl Read) -> Result<NoisePath> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != NZP_MAGIC {
        return Err(Error::NoiseFormat("bad magic, expected NZP1".into()));
    }
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8)?;
    let dt = f64::from_le_bytes(b8);
    input.read_exact(&mut b8)?;
    let n_steps = u64::from_le_bytes(b8) as usize;
    input.read_exact(&mut b8)?;
    let k_modes = u64::from_le_bytes(b8) as usize;
    if dt <= 0.0 || n_steps == 0 || k_modes == 0 || n_steps.saturating_mul(k_modes) > 1 << 32 {
        return Err(Error::NoiseFormat("implausible header".into()));
    }
    let mut read_block = |count: usize| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            input.read_exact(&mut b8)?;
            out.push(f64::from_le_bytes(b8));
        }
        Ok(out)
    };
    let dw = read_block(n_steps * k_modes)?;
    let db = read_block(n_steps * 2)?;
    Ok(NoisePath {
        dt,
        n_steps,
        k_modes,
        seed: 0,
        dw,
        db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn white_spec(k: usize, seed: u64) -> NoiseSpec {
        NoiseSpec {
            q_eigs: QSpec::Identity,
            theta: (1.0, 1.0),
            k_modes: k,
            seed,
        }
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let spec = white_spec(8, 42);
        let a = sample_path(&spec, 1e-3, 500).unwrap();
        let b = sample_path(&spec, 1e-3, 500).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.checksum(), b.checksum());
        let c = sample_path(&spec.with_seed(43), 1e-3, 500).unwrap();
        assert_ne!(a.checksum(), c.checksum());
    }

    #[test]
    fn column_variances_match_spectrum() {
        let lambdas: Vec<f64> = (0..64).map(|j| 1.0 / (1.0 + j as f64)).collect();
        let spec = NoiseSpec {
            q_eigs: QSpec::Explicit(lambdas.clone()),
            theta: (0.7, 1.3),
            k_modes: 64,
            seed: 7,
        };
        let dt = 1e-3;
        let n = 1000;
        let path = sample_path(&spec, dt, n).unwrap();
        for j in 0..64 {
            let mut sq = 0.0;
            for step in 0..n {
                let v = path.dw_row(step)[j];
                sq += v * v;
            }
            let var = sq / n as f64;
            let target = lambdas[j] * lambdas[j] * dt;
            // chi-square: sd of the variance estimate is target * sqrt(2/n)
            let tol = 5.0 * target * (2.0 / n as f64).sqrt();
            assert!(
                (var - target).abs() <= tol,
                "mode {j}: {var} vs {target}"
            );
        }
    }

    #[test]
    fn zero_theta_silences_boundary_only() {
        let spec = NoiseSpec {
            q_eigs: QSpec::Identity,
            theta: (0.0, 0.0),
            k_modes: 4,
            seed: 3,
        };
        let path = sample_path(&spec, 0.01, 50).unwrap();
        for s in 0..50 {
            assert_eq!(path.db_row(s), (0.0, 0.0));
        }
        // stream layout unchanged: interior increments equal those of a
        // theta != 0 path with the same seed
        let loud = sample_path(&white_spec(4, 3), 0.01, 50).unwrap();
        for s in 0..50 {
            assert_eq!(path.dw_row(s), loud.dw_row(s));
        }
    }

    #[test]
    fn refine_reaggregates_exactly() {
        let path = sample_path(&white_spec(6, 11), 0.02, 40).unwrap();
        for factor in [2usize, 4] {
            let fine = refine(&path, factor).unwrap();
            assert_eq!(fine.n_steps, 40 * factor);
            assert!((fine.dt - 0.02 / factor as f64).abs() < 1e-18);
            let back = aggregate(&fine, factor);
            for s in 0..40 {
                for (x, y) in back.dw_row(s).iter().zip(path.dw_row(s)) {
                    assert!((x - y).abs() <= 1e-15);
                }
                let (a, b) = back.db_row(s);
                let (c, d) = path.db_row(s);
                assert!((a - c).abs() <= 1e-15 && (b - d).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn refine_of_zero_path_is_zero_scaled() {
        let spec = NoiseSpec {
            q_eigs: QSpec::Explicit(vec![0.0; 3]),
            theta: (0.0, 0.0),
            k_modes: 3,
            seed: 1,
        };
        let path = sample_path(&spec, 0.1, 10).unwrap();
        let fine = refine(&path, 4).unwrap();
        // each coarse cell still sums to zero
        let back = aggregate(&fine, 4);
        for s in 0..10 {
            for v in back.dw_row(s) {
                assert!(v.abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn refined_substep_variance_is_scaled() {
        let path = sample_path(&white_spec(2, 99), 0.01, 2000).unwrap();
        let fine = refine(&path, 4).unwrap();
        let n = fine.n_steps;
        let mut sq = 0.0;
        for s in 0..n {
            let v = fine.dw_row(s)[0];
            sq += v * v;
        }
        let var = sq / n as f64;
        let target = 0.01 / 4.0;
        assert!((var - target).abs() <= 5.0 * target * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn interior_and_boundary_are_uncorrelated() {
        let spec = white_spec(4, 2024);
        let n = 100_000;
        let path = sample_path(&spec, 1e-3, n).unwrap();
        let dt = 1e-3;
        for j in 0..4 {
            for endpoint in 0..2 {
                let mut acc = 0.0;
                for s in 0..n {
                    let b = if endpoint == 0 {
                        path.db_row(s).0
                    } else {
                        path.db_row(s).1
                    };
                    acc += path.dw_row(s)[j] * b;
                }
                let corr = acc / (n as f64 * dt);
                let se = 1.0 / (n as f64).sqrt();
                assert!(corr.abs() <= 4.0 * se, "corr {corr} vs se {se}");
            }
        }
    }

    #[test]
    fn nzp_roundtrip() {
        let path = sample_path(&white_spec(5, 77), 0.005, 33).unwrap();
        let mut buf = Vec::new();
        write_nzp(&path, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"NZP1");
        let loaded = read_nzp(buf.as_slice()).unwrap();
        assert_eq!(loaded.dt, path.dt);
        assert_eq!(loaded.n_steps, path.n_steps);
        assert_eq!(loaded.k_modes, path.k_modes);
        for s in 0..33 {
            assert_eq!(loaded.dw_row(s), path.dw_row(s));
            assert_eq!(loaded.db_row(s), path.db_row(s));
        }
        assert!(matches!(
            read_nzp(&b"XXXX1234"[..]),
            Err(Error::NoiseFormat(_))
        ));
    }
}
