//! Perturbation models b(x): built-in analytic families, piecewise
//! definitions, and abstract 2×2-block operators, plus the classification
//! machinery — the ‖b h_k‖₂ profile, decay-rate fits, and the weighted-space
//! exponent t(p).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counterexample::BlockSpec;
use crate::error::{Error, Result};
use crate::hermite::{hermite_table, HermiteGrid};

/// A perturbation of the oscillator. Pointwise kinds are evaluable at any
/// finite real x; the block kind carries no pointwise values and is consumed
/// only by the block assembly path.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Potential {
    /// b ≡ 0.
    Zero,
    /// b ≡ re + i·im.
    Constant {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    /// b(x) = amplitude · e^{−rate·x²}.
    Gaussian {
        amplitude: f64,
        #[serde(default = "default_rate")]
        rate: f64,
    },
    /// b(x) = coefficient · x². Not in V; used for closed-form assembly checks.
    Quadratic { coefficient: f64 },
    /// b(x) = (re + i·im) · χ_{[a,b]}(x).
    Indicator {
        a: f64,
        b: f64,
        #[serde(default = "default_one")]
        re: f64,
        #[serde(default)]
        im: f64,
    },
    /// Constant on each cell of a finite partition: values[i] on
    /// (breakpoints[i-1], breakpoints[i]), zero outside the first/last break.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values_re: Vec<f64>,
        #[serde(default)]
        values_im: Vec<f64>,
    },
    /// b(x) = scale · (1 + x²)^{alpha/2}.
    PowerWeight { alpha: f64, scale: f64 },
    /// ℓ²-block operator; no pointwise values.
    BlockOperator(BlockSpec),
}

fn default_rate() -> f64 {
    1.0
}
fn default_one() -> f64 {
    1.0
}

impl Potential {
    pub fn indicator_unit() -> Self {
        Potential::Indicator {
            a: -1.0,
            b: 1.0,
            re: 1.0,
            im: 0.0,
        }
    }

    pub fn eval(&self, x: f64) -> Result<Complex64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("potential eval at non-finite x={x}")));
        }
        match self {
            Potential::Zero => Ok(Complex64::new(0.0, 0.0)),
            Potential::Constant { re, im } => Ok(Complex64::new(*re, *im)),
            Potential::Gaussian { amplitude, rate } => {
                Ok(Complex64::new(amplitude * (-rate * x * x).exp(), 0.0))
            }
            Potential::Quadratic { coefficient } => Ok(Complex64::new(coefficient * x * x, 0.0)),
            Potential::Indicator { a, b, re, im } => {
                if x >= *a && x <= *b {
                    Ok(Complex64::new(*re, *im))
                } else {
                    Ok(Complex64::new(0.0, 0.0))
                }
            }
            Potential::PiecewiseConstant {
                breakpoints,
                values_re,
                values_im,
            } => {
                if x <= breakpoints[0] || x >= *breakpoints.last().unwrap() {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let cell = breakpoints.partition_point(|&b| b < x) - 1;
                let im = values_im.get(cell).copied().unwrap_or(0.0);
                Ok(Complex64::new(values_re[cell], im))
            }
            Potential::PowerWeight { alpha, scale } => {
                Ok(Complex64::new(scale * (1.0 + x * x).powf(alpha / 2.0), 0.0))
            }
            Potential::BlockOperator(_) => Err(Error::Domain(
                "block-operator potentials have no pointwise values".into(),
            )),
        }
    }

    pub fn eval_abs2(&self, x: f64) -> Result<f64> {
        Ok(self.eval(x)?.norm_sqr())
    }

    pub fn is_complex(&self) -> bool {
        match self {
            Potential::Constant { im, .. } | Potential::Indicator { im, .. } => *im != 0.0,
            Potential::PiecewiseConstant { values_im, .. } => values_im.iter().any(|&v| v != 0.0),
            _ => false,
        }
    }

    /// Points where the pointwise definition jumps; quadrature panel edges
    /// are snapped to these.
    pub fn discontinuities(&self) -> Vec<f64> {
        match self {
            Potential::Indicator { a, b, .. } => vec![*a, *b],
            Potential::PiecewiseConstant { breakpoints, .. } => breakpoints.clone(),
            _ => vec![],
        }
    }

    pub fn is_pointwise(&self) -> bool {
        !matches!(self, Potential::BlockOperator(_))
    }

    /// Validate structural parameters.
    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::PiecewiseConstant {
                breakpoints,
                values_re,
                values_im,
            } => {
                if breakpoints.len() < 2 {
                    return Err(Error::Config(
                        "piecewise-constant: need at least two breakpoints".into(),
                    ));
                }
                if !breakpoints.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::Config(
                        "piecewise-constant: breakpoints must be strictly increasing".into(),
                    ));
                }
                if values_re.len() != breakpoints.len() - 1 {
                    return Err(Error::Config(format!(
                        "piecewise-constant: expected {} cell values, got {}",
                        breakpoints.len() - 1,
                        values_re.len()
                    )));
                }
                if !values_im.is_empty() && values_im.len() != values_re.len() {
                    return Err(Error::Config(
                        "piecewise-constant: values_im length mismatch".into(),
                    ));
                }
                Ok(())
            }
            Potential::Indicator { a, b, .. } if a >= b => {
                Err(Error::Config("indicator: need a < b".into()))
            }
            Potential::Gaussian { rate, .. } if *rate <= 0.0 => {
                Err(Error::Config("gaussian: need rate > 0".into()))
            }
            Potential::BlockOperator(spec) => spec.validate(),
            _ => Ok(()),
        }
    }
}

/// Weighted-space classification tag.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceClass {
    LpAlpha,
    Linf0,
    Linf,
    VEmpirical,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SpaceTag {
    pub p: f64,
    pub alpha: f64,
    pub class: SpaceClass,
}

impl SpaceTag {
    /// Admissibility of L(p, α): α/2 + t(p) ≤ 0 and (p, α) ≠ (4, 1/4).
    /// At p = 4 the borderline exponent −1/8 is used (the extra log factor
    /// excludes exactly the pair (4, 1/4)).
    pub fn admissible(&self) -> bool {
        match self.class {
            SpaceClass::LpAlpha => {
                let t = if self.p == 4.0 {
                    -0.125
                } else {
                    match t_exponent(self.p) {
                        Ok(t) => t,
                        Err(_) => return false,
                    }
                };
                if self.p == 4.0 && self.alpha == 0.25 {
                    return false;
                }
                self.alpha / 2.0 + t <= 0.0
            }
            SpaceClass::Linf0 | SpaceClass::VEmpirical => true,
            SpaceClass::Linf => false,
        }
    }
}

/// Decay exponent t(p) of ‖b h_n‖₂ for b ∈ L^p:
/// −(1/12)(2 − 2/p) on 2 ≤ p < 4 and −1/(2p) on 4 < p < ∞.
/// p = 4 is a special case with an extra logarithmic factor.
pub fn t_exponent(p: f64) -> Result<f64> {
    if !(2.0..f64::INFINITY).contains(&p) {
        return Err(Error::Domain(format!(
            "t_exponent: need 2 <= p < ∞, got {p}"
        )));
    }
    if p == 4.0 {
        return Err(Error::Domain(
            "t_exponent: p = 4 is the logarithmic borderline case, \
             ‖b h_n‖ ≲ n^{α/2 − 1/8} log(n+2); no pure power exponent exists"
                .into(),
        ));
    }
    if p < 4.0 {
        Ok(-(1.0 / 12.0) * (2.0 - 2.0 / p))
    } else {
        Ok(-1.0 / (2.0 * p))
    }
}

/// The ‖b h_k‖₂ profile with its sup and tail diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct VNormProfile {
    pub norms: Vec<f64>,
    /// sup_k of the profile — the empirical V-norm.
    pub sup: f64,
    /// Least-squares slope of log‖b h_n‖ vs log(n+1) over the last half.
    pub tail_slope: f64,
    /// Last-quarter mean < first-quarter mean.
    pub decays: bool,
    /// Maximum relative change produced by the doubled-grid check.
    pub max_rel_change: f64,
}

/// Compute ‖b h_k‖₂ for k = 0..=k_max on the given grid, with the doubled
/// grid convergence check applied to the whole profile.
pub fn v_norm_profile(b: &Potential, k_max: usize, grid: &HermiteGrid) -> Result<VNormProfile> {
    b.validate()?;
    if !b.is_pointwise() {
        return Err(Error::Domain(
            "v_norm_profile needs a pointwise potential".into(),
        ));
    }
    let coarse = profile_on_grid(b, k_max, grid)?;
    let fine_grid = grid.refine()?;
    let mut fine = profile_on_grid(b, k_max, &fine_grid)?;
    let mut max_rel = max_rel_change(&coarse, &fine);
    if max_rel >= crate::hermite::QUAD_RTOL {
        let finer_grid = fine_grid.refine()?;
        let finer = profile_on_grid(b, k_max, &finer_grid)?;
        max_rel = max_rel_change(&fine, &finer);
        if max_rel >= crate::hermite::QUAD_RTOL {
            let k_worst = worst_rel_index(&fine, &finer);
            return Err(Error::Accuracy {
                context: format!("v_norm_profile at k={k_worst}"),
                coarse: fine[k_worst],
                fine: finer[k_worst],
            });
        }
        fine = finer;
    }

    let sup = fine.iter().cloned().fold(0.0, f64::max);
    let half = k_max / 2;
    let tail_slope = if fine[half..].iter().all(|&v| v > 0.0) && k_max - half >= 2 {
        fit_slope(&fine, half, k_max)
    } else {
        0.0
    };
    let quarter = (k_max + 1) / 4;
    let decays = if quarter > 0 {
        let first: f64 = fine[..quarter].iter().sum::<f64>() / quarter as f64;
        let last: f64 = fine[fine.len() - quarter..].iter().sum::<f64>() / quarter as f64;
        last < first
    } else {
        false
    };
    Ok(VNormProfile {
        norms: fine,
        sup,
        tail_slope,
        decays,
        max_rel_change: max_rel,
    })
}

fn profile_on_grid(b: &Potential, k_max: usize, grid: &HermiteGrid) -> Result<Vec<f64>> {
    let table = hermite_table(&grid.nodes, k_max);
    let q = grid.nodes.len();
    let mut wb = vec![0.0f64; q];
    for (i, (&x, &w)) in grid.nodes.iter().zip(grid.weights.iter()).enumerate() {
        wb[i] = w * b.eval_abs2(x)?;
    }
    let norms: Vec<f64> = (0..=k_max)
        .into_par_iter()
        .map(|k| {
            let row = &table[k * q..(k + 1) * q];
            let s: f64 = row.iter().zip(wb.iter()).map(|(&h, &w)| w * h * h).sum();
            s.max(0.0).sqrt()
        })
        .collect();
    Ok(norms)
}

fn max_rel_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y).abs() / y.abs().max(1e-300))
        .fold(0.0, f64::max)
}

fn worst_rel_index(a: &[f64], b: &[f64]) -> usize {
    let mut worst = 0;
    let mut val = -1.0;
    for (i, (&x, &y)) in a.iter().zip(b.iter()).enumerate() {
        let r = (x - y).abs() / y.abs().max(1e-300);
        if r > val {
            val = r;
            worst = i;
        }
    }
    worst
}

fn fit_slope(profile: &[f64], n_min: usize, n_max: usize) -> f64 {
    let xs: Vec<f64> = (n_min..=n_max).map(|n| ((n + 1) as f64).ln()).collect();
    let ys: Vec<f64> = profile[n_min..=n_max].iter().map(|v| v.ln()).collect();
    let m = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys.iter()).map(|(x, y)| x * y).sum();
    (m * sxy - sx * sy) / (m * sxx - sx * sx)
}

/// Power-law fit of a profile over [n_min, n_max], with detection of an
/// extra log(n+2) factor.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of log log(n+2) in the augmented model.
    pub log_coefficient: f64,
    pub log_factor_detected: bool,
    pub residual_rms: f64,
}

/// Least-squares slope of log‖b h_n‖ against log(n+1) on [n_min, n_max].
/// A log factor is reported when augmenting the model with log log(n+2)
/// removes essentially all residual and takes a coefficient near one.
pub fn decay_fit(profile: &[f64], n_min: usize, n_max: usize) -> Result<DecayFit> {
    if n_max >= profile.len() || n_max < n_min || n_max - n_min < 8 {
        return Err(Error::Domain(format!(
            "decay_fit: need n_max − n_min >= 8 within the profile, got [{n_min}, {n_max}] with len {}",
            profile.len()
        )));
    }
    if profile[n_min..=n_max].iter().any(|&v| v <= 0.0) {
        return Err(Error::Domain(
            "decay_fit: profile entries must be positive on the fit range".into(),
        ));
    }
    let n_pts = n_max - n_min + 1;
    let xs: Vec<f64> = (n_min..=n_max).map(|n| ((n + 1) as f64).ln()).collect();
    let zs: Vec<f64> = (n_min..=n_max)
        .map(|n| ((n + 2) as f64).ln().ln())
        .collect();
    let ys: Vec<f64> = profile[n_min..=n_max].iter().map(|v| v.ln()).collect();

    // two-parameter fit: y = a + s x
    let (a2, s2) = {
        let m = n_pts as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(ys.iter()).map(|(x, y)| x * y).sum();
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        ((sy - slope * sx) / m, slope)
    };
    let rms2 = rms(
        xs.iter()
            .zip(ys.iter())
            .map(|(&x, &y)| y - a2 - s2 * x)
            .collect::<Vec<_>>()
            .as_slice(),
    );

    // three-parameter fit: y = a + s x + c z  (normal equations, 3x3)
    let m = n_pts as f64;
    let sx: f64 = xs.iter().sum();
    let sz: f64 = zs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let szz: f64 = zs.iter().map(|z| z * z).sum();
    let sxz: f64 = xs.iter().zip(zs.iter()).map(|(x, z)| x * z).sum();
    let sxy: f64 = xs.iter().zip(ys.iter()).map(|(x, y)| x * y).sum();
    let szy: f64 = zs.iter().zip(ys.iter()).map(|(z, y)| z * y).sum();
    let g = [[m, sx, sz], [sx, sxx, sxz], [sz, sxz, szz]];
    let rhs = [sy, sxy, szy];
    let sol = solve3(g, rhs);
    let (rms3, c3) = match sol {
        Some([a3, s3, c3]) => {
            let r: Vec<f64> = xs
                .iter()
                .zip(zs.iter())
                .zip(ys.iter())
                .map(|((&x, &z), &y)| y - a3 - s3 * x - c3 * z)
                .collect();
            (rms(&r), c3)
        }
        None => (rms2, 0.0),
    };

    let detected = c3 > 0.5 && rms2 > 1e-10 && rms3 < 0.1 * rms2;
    Ok(DecayFit {
        slope: s2,
        intercept: a2,
        log_coefficient: c3,
        log_factor_detected: detected,
        residual_rms: rms2,
    })
}

fn rms(r: &[f64]) -> f64 {
    (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt()
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for k in 0..3 {
        let mut p = k;
        for i in k + 1..3 {
            if a[i][k].abs() > a[p][k].abs() {
                p = i;
            }
        }
        if a[p][k] == 0.0 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..3 {
            let f = a[i][k] / a[k][k];
            for j in k..3 {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut s = b[i];
        for j in i + 1..3 {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}

/// Export a profile as CSV columns (k, norm).
pub fn profile_to_csv(profile: &[f64]) -> String {
    let mut out = String::from("k,norm\n");
    for (k, v) in profile.iter().enumerate() {
        out.push_str(&format!("{k},{v:.15e}\n"));
    }
    out
}
