//! Synthetic five-factor return data with an optional late break.
//!
//! `ret_t = a + Σ_j b_j f_{j,t} + ε_t` with iid normal factors and errors.
//! From row `break_at` on, the intercept moves by `intercept_shift` and the
//! loadings by `beta_shift`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::table::Table;
use crate::error::{Error, Result};
use crate::rng::substream;

pub const FACTORS: [&str; 5] = ["mkt", "smb", "hml", "rmw", "cma"];
const FACTOR_SD: [f64; 5] = [1.0, 0.5, 0.5, 0.3, 0.3];
const LOADINGS: [f64; 5] = [1.1, 0.3, 0.6, -0.2, 0.1];
const ALPHA: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct FactorFixture {
    pub len: usize,
    /// First shifted row (0-based); `None` for a stable model.
    pub break_at: Option<usize>,
    pub intercept_shift: f64,
    pub beta_shift: [f64; 5],
    pub noise_sd: f64,
    pub seed: u64,
}

impl FactorFixture {
    /// 965 rows with the last 10 rows shifted by 1.5 in the intercept.
    pub fn standard(seed: u64) -> Self {
        Self { len: 965, break_at: Some(955), intercept_shift: 1.5, beta_shift: [0.0; 5], noise_sd: 1.0, seed }
    }

    pub fn stable(len: usize, seed: u64) -> Self {
        Self { len, break_at: None, intercept_shift: 0.0, beta_shift: [0.0; 5], noise_sd: 1.0, seed }
    }

    /// Columns `date, ret, mkt, smb, hml, rmw, cma`; `date` is the 1-based row
    /// number. Values are written with 6 decimals.
    pub fn generate(&self) -> Result<Table> {
        if self.len < 10 {
            return Err(Error::TooShort { needed: 10, got: self.len });
        }
        if let Some(b) = self.break_at {
            if b == 0 || b >= self.len {
                return Err(Error::IndexOutOfRange { index: b, max: self.len - 1 });
            }
        }
        let mut rng = substream(self.seed, 0);
        let mut rows = Vec::with_capacity(self.len);
        for t in 0..self.len {
            let f: Vec<f64> = FACTOR_SD.iter().map(|sd| sd * rng.sample::<f64, _>(StandardNormal)).collect();
            let eps = self.noise_sd * rng.sample::<f64, _>(StandardNormal);
            let shifted = self.break_at.is_some_and(|b| t >= b);
            let mut ret = ALPHA + eps;
            for j in 0..5 {
                let b = LOADINGS[j] + if shifted { self.beta_shift[j] } else { 0.0 };
                ret += b * f[j];
            }
            if shifted {
                ret += self.intercept_shift;
            }
            let mut row = vec![(t + 1).to_string(), format!("{ret:.6}")];
            row.extend(f.iter().map(|v| format!("{v:.6}")));
            rows.push(row);
        }
        let mut headers = vec!["date".to_string(), "ret".to_string()];
        headers.extend(FACTORS.iter().map(|s| s.to_string()));
        Ok(Table { headers, rows })
    }
}
