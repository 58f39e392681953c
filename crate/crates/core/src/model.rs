//! Spiked covariance generative model.
//!
//! Samples are `x = A·z + w` with `A = U·Λ·Vᵀ` (`p × r`), `z ~ N(0, I_r)` and
//! `w ~ N(0, σ²I_p)`, so the population covariance is `AAᵀ + σ²I`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{qr_decompose_owned, sample_gaussian_matrix, Matrix, OrthonormalBasis};
use crate::rng::{self, role};

/// Largest `p` for which dense `p × p` oracles are built.
pub const ORACLE_DIM_LIMIT: usize = 5000;

#[derive(Clone, Debug)]
pub struct SpikedModel {
    spike_basis: OrthonormalBasis,
    lambdas: Vec<f64>,
    sigma: f64,
    right_basis: OrthonormalBasis,
    /// `U·Λ·Vᵀ`, cached so a draw costs one `p × r` product.
    mixing: Matrix,
    /// Columns of `mixing`, stored contiguously.
    mixing_columns: Vec<f64>,
}

fn validate_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("lambdas must be nonempty".into()));
    }
    if lambdas.iter().any(|l| !l.is_finite() || *l <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambdas must be positive and finite, got {lambdas:?}"
        )));
    }
    if lambdas.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidParameter(format!(
            "lambdas must be sorted descending, got {lambdas:?}"
        )));
    }
    if lambdas[0] != 1.0 {
        return Err(Error::InvalidParameter(format!(
            "largest lambda must equal 1 (‖A‖₂ = 1), got {}",
            lambdas[0]
        )));
    }
    Ok(())
}

fn validate_sigma(sigma: f64) -> Result<()> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma must be finite and >= 0, got {sigma}"
        )));
    }
    Ok(())
}

impl SpikedModel {
    /// Random model: `U` and `V` are the Q factors of Gaussian matrices.
    pub fn random<R: Rng + ?Sized>(
        p: usize,
        lambdas: &[f64],
        sigma: f64,
        rng: &mut R,
    ) -> Result<Self> {
        validate_lambdas(lambdas)?;
        validate_sigma(sigma)?;
        let r = lambdas.len();
        if p < r {
            return Err(Error::InvalidParameter(format!(
                "dimension p={p} is smaller than spike rank r={r}"
            )));
        }
        let (u, _) = qr_decompose_owned(sample_gaussian_matrix(p, r, rng))?;
        let (v, _) = qr_decompose_owned(sample_gaussian_matrix(r, r, rng))?;
        SpikedModel::from_parts(u, lambdas.to_vec(), sigma, v)
    }

    pub fn from_parts(
        spike_basis: OrthonormalBasis,
        lambdas: Vec<f64>,
        sigma: f64,
        right_basis: OrthonormalBasis,
    ) -> Result<Self> {
        validate_lambdas(&lambdas)?;
        validate_sigma(sigma)?;
        let r = lambdas.len();
        if spike_basis.k() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: spike_basis.k(),
            });
        }
        if right_basis.dim() != r || right_basis.k() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: right_basis.k(),
            });
        }
        let mut scaled = spike_basis.matrix().clone();
        for i in 0..scaled.rows() {
            for (j, l) in lambdas.iter().enumerate() {
                scaled.set(i, j, scaled.get(i, j) * l);
            }
        }
        let mixing = scaled.matmul(&right_basis.matrix().transpose())?;
        let mixing_columns = mixing.transpose().as_slice().to_vec();
        Ok(SpikedModel {
            spike_basis,
            lambdas,
            sigma,
            right_basis,
            mixing,
            mixing_columns,
        })
    }

    /// Rank-`r` model with `U = [e₁ … e_r]` and `V = I`.
    pub fn axis_aligned(p: usize, lambdas: &[f64], sigma: f64) -> Result<Self> {
        let r = lambdas.len();
        SpikedModel::from_parts(
            OrthonormalBasis::canonical(p, r)?,
            lambdas.to_vec(),
            sigma,
            OrthonormalBasis::canonical(r, r)?,
        )
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.spike_basis.dim()
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.lambdas.len()
    }

    pub fn spike_basis(&self) -> &OrthonormalBasis {
        &self.spike_basis
    }

    pub fn right_basis(&self) -> &OrthonormalBasis {
        &self.right_basis
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `A = U·Λ·Vᵀ`.
    pub fn mixing(&self) -> &Matrix {
        &self.mixing
    }

    pub fn draw_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        let mut z = vec![0.0; self.rank()];
        self.draw_sample_into(rng, &mut x, &mut z);
        x
    }

    /// Writes one draw into `out` (length `p`), using `z` (length `r`) as scratch.
    ///
    /// Consumes `r` normals for `z` followed by `p` normals for `w`.
    pub fn draw_sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64], z: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        debug_assert_eq!(z.len(), self.rank());
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let p = out.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (zj, col) in z.iter().zip(self.mixing_columns.chunks_exact(p)) {
            for (o, a) in out.iter_mut().zip(col) {
                *o += a * zj;
            }
        }
        for o in out.iter_mut() {
            let w: f64 = rng.sample(StandardNormal);
            *o += self.sigma * w;
        }
    }

    /// `AAᵀ + σ²I` as a dense `p × p` matrix (oracle use only).
    pub fn population_covariance(&self) -> Result<Matrix> {
        let p = self.dim();
        if p > ORACLE_DIM_LIMIT {
            return Err(Error::OracleScale {
                p,
                limit: ORACLE_DIM_LIMIT,
            });
        }
        let a = &self.mixing;
        let mut m = a.matmul(&a.transpose())?;
        let s2 = self.sigma * self.sigma;
        for i in 0..p {
            m.set(i, i, m.get(i, i) + s2);
        }
        Ok(m)
    }
}

/// Plain-text model description: `p`, `lambdas`, `sigma`, `seed`.
///
/// Serialized as `key = value` lines; `lambdas` is comma separated and `#`
/// starts a comment.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub p: usize,
    pub lambdas: Vec<f64>,
    pub sigma: f64,
    pub seed: u64,
}

impl ModelConfig {
    /// Builds the model, drawing `U` and `V` from the seed's model role.
    pub fn build(&self) -> Result<SpikedModel> {
        let mut rng = rng::seeded(rng::derive_seed(self.seed, role::MODEL, 0));
        SpikedModel::random(self.p, &self.lambdas, self.sigma, &mut rng)
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lambdas: Vec<String> = self.lambdas.iter().map(|l| l.to_string()).collect();
        writeln!(f, "p = {}", self.p)?;
        writeln!(f, "lambdas = {}", lambdas.join(","))?;
        writeln!(f, "sigma = {}", self.sigma)?;
        writeln!(f, "seed = {}", self.seed)
    }
}

impl FromStr for ModelConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = None;
        let mut lambdas = None;
        let mut sigma = None;
        let mut seed = None;
        for (idx, raw) in s.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: None,
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got {line:?}")))?;
            let value = value.trim();
            match key.trim() {
                "p" => p = Some(value.parse().map_err(|e| parse_err(format!("p: {e}")))?),
                "sigma" => {
                    sigma = Some(
                        value
                            .parse()
                            .map_err(|e| parse_err(format!("sigma: {e}")))?,
                    )
                }
                "seed" => seed = Some(value.parse().map_err(|e| parse_err(format!("seed: {e}")))?),
                "lambdas" => {
                    lambdas = Some(
                        value
                            .split(',')
                            .map(|v| v.trim().parse::<f64>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|e| parse_err(format!("lambdas: {e}")))?,
                    )
                }
                other => return Err(parse_err(format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::Configuration(format!("model config is missing `{k}`"));
        let cfg = ModelConfig {
            p: p.ok_or_else(|| missing("p"))?,
            lambdas: lambdas.ok_or_else(|| missing("lambdas"))?,
            sigma: sigma.ok_or_else(|| missing("sigma"))?,
            seed: seed.unwrap_or(0),
        };
        validate_lambdas(&cfg.lambdas)?;
        validate_sigma(cfg.sigma)?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{spectral_norm, symmetric_eigen};

    #[test]
    fn rank_one_noiseless_covariance_is_projector() {
        let model = SpikedModel::random(5, &[1.0], 0.0, &mut rng::seeded(1)).unwrap();
        let c = model.population_covariance().unwrap();
        let u = model.spike_basis().column(0);
        for i in 0..5 {
            for j in 0..5 {
                assert!((c.get(i, j) - u[i] * u[j]).abs() < 1e-15);
            }
        }
        assert!((c.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn covariance_trace_identity() {
        let model = SpikedModel::random(4, &[1.0], 0.5, &mut rng::seeded(2)).unwrap();
        let c = model.population_covariance().unwrap();
        assert!((c.trace() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn covariance_eigenvalues() {
        let lambdas = [1.0, 0.7, 0.3];
        let sigma = 0.4;
        let model = SpikedModel::random(9, &lambdas, sigma, &mut rng::seeded(3)).unwrap();
        let eig = symmetric_eigen(&model.population_covariance().unwrap()).unwrap();
        let mut expected: Vec<f64> = lambdas.iter().map(|l| l * l + sigma * sigma).collect();
        expected.extend(std::iter::repeat_n(sigma * sigma, 6));
        for (got, want) in eig.values.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn fig1_configuration_builds() {
        let model = SpikedModel::random(100, &[1.0], 0.5, &mut rng::seeded(4)).unwrap();
        assert_eq!(model.dim(), 100);
        assert_eq!(model.rank(), 1);
        assert!(model.spike_basis().orthonormality_error() < 1e-12);
        assert!((spectral_norm(model.mixing()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_lambdas() {
        let mut r = rng::seeded(0);
        assert!(SpikedModel::random(5, &[0.5, 1.0], 0.1, &mut r).is_err());
        assert!(SpikedModel::random(5, &[0.9, 0.5], 0.1, &mut r).is_err());
        assert!(SpikedModel::random(5, &[], 0.1, &mut r).is_err());
        assert!(SpikedModel::random(5, &[1.0, 0.0], 0.1, &mut r).is_err());
        assert!(SpikedModel::random(5, &[1.0], -0.1, &mut r).is_err());
        assert!(SpikedModel::random(1, &[1.0, 0.5], 0.1, &mut r).is_err());
    }

    #[test]
    fn noiseless_samples_live_on_spike() {
        let model = SpikedModel::axis_aligned(6, &[1.0], 0.0).unwrap();
        let mut r = rng::seeded(5);
        for _ in 0..50 {
            let x = model.draw_sample(&mut r);
            assert!(x[1..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn same_seed_same_sample() {
        let model = SpikedModel::random(10, &[1.0, 0.5], 0.3, &mut rng::seeded(6)).unwrap();
        let a = model.draw_sample(&mut rng::seeded(77));
        let b = model.draw_sample(&mut rng::seeded(77));
        assert_eq!(a, b);
    }

    #[test]
    fn config_round_trip() {
        let cfg = ModelConfig {
            p: 100,
            lambdas: vec![1.0, 0.8, 0.25],
            sigma: 0.5,
            seed: 42,
        };
        let text = cfg.to_string();
        assert_eq!(text.parse::<ModelConfig>().unwrap(), cfg);
        let again = "# comment\np=100\nlambdas = 1, 0.8,0.25\nsigma=0.5 # trailing\nseed=42\n";
        assert_eq!(again.parse::<ModelConfig>().unwrap(), cfg);
        assert!(cfg.build().is_ok());
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            "p = 3\nlambdas = 1\nsigma = x".parse::<ModelConfig>(),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            "p = 3\nsigma = 0.1".parse::<ModelConfig>(),
            Err(Error::Configuration(_))
        ));
        assert!("p = 3\nlambdas = 0.5,1\nsigma = 0.1"
            .parse::<ModelConfig>()
            .is_err());
        assert!("p = 3\nbogus = 1".parse::<ModelConfig>().is_err());
    }
}
