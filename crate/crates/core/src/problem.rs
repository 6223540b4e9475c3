//! A validated problem instance with memoized scalar solves.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::coefficients::{limit_constants, validate, DiffusionMatrix, LimitConstants, MatrixField};
use crate::elliptic::{lambda_bar, lambda_under};
use crate::error::{Error, Result};
use crate::floquet_ode::{h_bar, h_under, DEFAULT_STEPS};
use crate::grid::{SpatialGrid, TimeGrid};
use crate::hj::{ergodic_constant, ErgodicResult, HjOptions};
use crate::parabolic::{principal_eigenvalue, SolveOptions, SpectralResult};

type Key = (u64, u64);

fn key(a: f64, b: f64) -> Key {
    (a.to_bits(), b.to_bits())
}

/// Field, diffusion and grids, plus caches for `lambda`, `lambda_bar`, `lambda_under`, `h_under`, `h_bar`.
///
/// Caches only ever store finished values, so results do not depend on call order.
#[derive(Debug)]
pub struct Problem {
    pub field: MatrixField,
    pub diffusion: DiffusionMatrix,
    pub grid: SpatialGrid,
    pub time: TimeGrid,
    pub solve: SolveOptions,
    pub hj: HjOptions,
    pub ode_steps: usize,
    constants: OnceLock<LimitConstants>,
    lambda: Mutex<HashMap<Key, f64>>,
    bar: Mutex<HashMap<u64, f64>>,
    under: Mutex<HashMap<u64, f64>>,
    h_low: Mutex<HashMap<u64, f64>>,
    h_high: Mutex<HashMap<u64, f64>>,
}

impl Clone for Problem {
    fn clone(&self) -> Self {
        let mut p = Self::unchecked(self.field.clone(), self.diffusion.clone(), self.grid, self.time);
        p.solve = self.solve.clone();
        p.hj = self.hj.clone();
        p.ode_steps = self.ode_steps;
        p
    }
}

impl Problem {
    /// Validates the field on the grid before accepting it.
    pub fn new(field: MatrixField, diffusion: DiffusionMatrix, grid: SpatialGrid, time: TimeGrid) -> Result<Self> {
        if field.n() != diffusion.len() {
            return Err(Error::Dimension(format!(
                "{} components but {} diffusion rates",
                field.n(),
                diffusion.len()
            )));
        }
        if (field.length() - grid.length()).abs() > 1e-12 * grid.length() {
            return Err(Error::Dimension("field and grid disagree on the domain length".into()));
        }
        validate(&field, &grid, &time)?;
        Ok(Self::unchecked(field, diffusion, grid, time))
    }

    fn unchecked(field: MatrixField, diffusion: DiffusionMatrix, grid: SpatialGrid, time: TimeGrid) -> Self {
        let solve = SolveOptions { eigenfunction: false, ..SolveOptions::default() };
        Self {
            field,
            diffusion,
            grid,
            time,
            solve,
            hj: HjOptions::default(),
            ode_steps: DEFAULT_STEPS,
            constants: OnceLock::new(),
            lambda: Mutex::default(),
            bar: Mutex::default(),
            under: Mutex::default(),
            h_low: Mutex::default(),
            h_high: Mutex::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.field.n()
    }

    pub fn constants(&self) -> Result<LimitConstants> {
        if let Some(c) = self.constants.get() {
            return Ok(*c);
        }
        let c = limit_constants(&self.field, &self.grid, &self.time)?;
        Ok(*self.constants.get_or_init(|| c))
    }

    /// Full solve without caching.
    pub fn spectral(&self, omega: f64, rho: f64) -> Result<SpectralResult> {
        principal_eigenvalue(&self.field, &self.diffusion, &self.grid, &self.time, omega, rho, &self.solve)
    }

    pub fn lambda(&self, omega: f64, rho: f64) -> Result<f64> {
        let k = key(omega, rho);
        if let Some(v) = self.lambda.lock().expect("cache").get(&k) {
            return Ok(*v);
        }
        let v = self.spectral(omega, rho)?.lambda;
        self.lambda.lock().expect("cache").insert(k, v);
        Ok(v)
    }

    pub fn lambda_bar(&self, rho: f64) -> Result<f64> {
        memo(&self.bar, rho, || Ok(lambda_bar(&self.field, &self.diffusion, &self.grid, &self.time, rho)?.lambda))
    }

    pub fn lambda_under(&self, rho: f64) -> Result<f64> {
        memo(&self.under, rho, || Ok(lambda_under(&self.field, &self.diffusion, &self.grid, &self.time, rho)?.value))
    }

    pub fn h_under(&self, omega: f64) -> Result<f64> {
        memo(&self.h_low, omega, || Ok(h_under(&self.field, &self.grid, omega, self.ode_steps)?.value))
    }

    pub fn h_bar(&self, omega: f64) -> Result<f64> {
        memo(&self.h_high, omega, || Ok(h_bar(&self.field, &self.grid, omega, self.ode_steps)?.h))
    }

    pub fn critical(&self, theta: f64) -> Result<ErgodicResult> {
        ergodic_constant(theta, &self.field, &self.diffusion, &self.grid, &self.time, &self.hj)
    }
}

fn memo(cache: &Mutex<HashMap<u64, f64>>, arg: f64, f: impl FnOnce() -> Result<f64>) -> Result<f64> {
    if let Some(v) = cache.lock().expect("cache").get(&arg.to_bits()) {
        return Ok(*v);
    }
    let v = f()?;
    cache.lock().expect("cache").insert(arg.to_bits(), v);
    Ok(v)
}
