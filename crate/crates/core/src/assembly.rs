//! Galerkin truncation of L = −d²/dx² + x² + b(x) in the orthonormal Hermite
//! basis: A_{jk} = (2j+1)δ_{jk} + ⟨b h_k, h_j⟩, assembled by quadrature with
//! a doubled-grid convergence certificate, or block-diagonally from an
//! explicit 2×2-block perturbation.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counterexample::BlockSpec;
use crate::error::{Error, Result};
use crate::hermite::{hermite_table, GridDescriptor, HermiteGrid};
use crate::linalg::{self, Mat};
use crate::potential::Potential;

pub const DEFAULT_ASSEMBLY_RTOL: f64 = 1e-8;
/// Eigenvalues of the N-truncation are trusted up to this fraction of N,
/// subject to the doubling check.
pub const TRUST_FRACTION: usize = 2; // n_trust = N / 2
pub const TRUST_DRIFT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum SourceDescriptor {
    Pointwise(Potential),
    Block(BlockSpec),
}

/// Dense truncation with provenance.
#[derive(Clone, Debug)]
pub struct TruncatedOperator {
    pub n: usize,
    pub matrix: Mat,
    pub source: SourceDescriptor,
    pub grid: Option<GridDescriptor>,
    pub assembly_rtol: f64,
    /// Largest relative entry change at the accepted refinement level.
    pub max_rel_discrepancy: f64,
}

impl TruncatedOperator {
    /// The perturbation part B = A − diag(2j+1).
    pub fn perturbation(&self) -> Mat {
        let mut b = self.matrix.clone();
        for j in 0..self.n {
            b[(j, j)] -= Complex64::new((2 * j + 1) as f64, 0.0);
        }
        b
    }

    pub fn unperturbed_eigenvalue(k: usize) -> f64 {
        (2 * k + 1) as f64
    }
}

/// Default grid for an N×N assembly: Gauss–Hermite with Q = max(4N, 256) for
/// smooth potentials; composite Legendre on [−X, X], X = √(2(2N+1)) + 6, with
/// panel edges snapped to the discontinuities otherwise.
pub fn default_grid(b: &Potential, n: usize) -> Result<HermiteGrid> {
    let breaks = b.discontinuities();
    if breaks.is_empty() {
        HermiteGrid::gauss_hermite_modified((4 * n).max(256))
    } else {
        let x_max = (2.0 * (2.0 * n as f64 + 1.0)).sqrt() + 6.0;
        // ~3 panels per unit keeps order-12 panels resolving h_n oscillations
        let panels = (3.0 * 2.0 * x_max).ceil() as usize;
        HermiteGrid::composite_legendre_with_breaks(x_max, panels, 12, &breaks)
    }
}

/// Assemble the truncation of L⁰ + b with the doubled-grid convergence check.
pub fn assemble(b: &Potential, n: usize, grid: &HermiteGrid) -> Result<TruncatedOperator> {
    assemble_with_rtol(b, n, grid, DEFAULT_ASSEMBLY_RTOL)
}

pub fn assemble_with_rtol(
    b: &Potential,
    n: usize,
    grid: &HermiteGrid,
    rtol: f64,
) -> Result<TruncatedOperator> {
    b.validate()?;
    if n < 2 {
        return Err(Error::Config(format!("assemble: need N >= 2, got {n}")));
    }
    if !b.is_pointwise() {
        return Err(Error::Config(
            "assemble: block-operator potentials go through assemble_block".into(),
        ));
    }
    check_grid_resolution(grid, n)?;

    let coarse = perturbation_on_grid(b, n, grid)?;
    let grid_fine = grid.refine()?;
    let mut fine = perturbation_on_grid(b, n, &grid_fine)?;
    let mut worst = worst_entry(&coarse, &fine);
    if worst.2 >= rtol {
        let grid_finer = grid_fine.refine()?;
        let finer = perturbation_on_grid(b, n, &grid_finer)?;
        worst = worst_entry(&fine, &finer);
        if worst.2 >= rtol {
            return Err(Error::AssemblyAccuracy {
                row: worst.0,
                col: worst.1,
                rel: worst.2,
                tol: rtol,
            });
        }
        fine = finer;
    }

    let mut a = fine;
    for j in 0..n {
        a[(j, j)] += Complex64::new((2 * j + 1) as f64, 0.0);
    }
    Ok(TruncatedOperator {
        n,
        matrix: a,
        source: SourceDescriptor::Pointwise(b.clone()),
        grid: Some(grid.descriptor()),
        assembly_rtol: rtol,
        max_rel_discrepancy: worst.2,
    })
}

fn check_grid_resolution(grid: &HermiteGrid, n: usize) -> Result<()> {
    match grid.kind {
        crate::hermite::GridKind::GaussHermiteModified => {
            if grid.len() < 2 * n {
                return Err(Error::Config(format!(
                    "assemble: Gauss–Hermite grid with {} nodes is below the \
                     minimum 2N = {} for N = {n}",
                    grid.len(),
                    2 * n
                )));
            }
        }
        crate::hermite::GridKind::CompositeLegendre => {
            let need = (2.0 * (2.0 * n as f64 + 1.0)).sqrt();
            let span = grid.nodes.last().copied().unwrap_or(0.0);
            if span < need {
                return Err(Error::Config(format!(
                    "assemble: composite grid cutoff {span:.2} does not cover \
                     the classically allowed region √(2(2N+1)) = {need:.2}"
                )));
            }
        }
    }
    Ok(())
}

/// B_{jk} = Σ_i w_i b(x_i) h_j(x_i) h_k(x_i), dense.
fn perturbation_on_grid(b: &Potential, n: usize, grid: &HermiteGrid) -> Result<Mat> {
    let q = grid.len();
    let table = hermite_table(&grid.nodes, n - 1);
    let mut bw_re = vec![0.0f64; q];
    let mut bw_im = vec![0.0f64; q];
    let mut any_im = false;
    for (i, (&x, &w)) in grid.nodes.iter().zip(grid.weights.iter()).enumerate() {
        let v = b.eval(x)?;
        bw_re[i] = w * v.re;
        bw_im[i] = w * v.im;
        any_im |= v.im != 0.0;
    }

    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let hj = &table[j * q..(j + 1) * q];
            // scaled row: h_j(x_i) * w_i * b(x_i)
            let mut sr = vec![0.0f64; q];
            let mut si = vec![0.0f64; q];
            for i in 0..q {
                sr[i] = hj[i] * bw_re[i];
                if any_im {
                    si[i] = hj[i] * bw_im[i];
                }
            }
            (0..n)
                .map(|k| {
                    let hk = &table[k * q..(k + 1) * q];
                    let re: f64 = sr.iter().zip(hk.iter()).map(|(&a, &b)| a * b).sum();
                    let im: f64 = if any_im {
                        si.iter().zip(hk.iter()).map(|(&a, &b)| a * b).sum()
                    } else {
                        0.0
                    };
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();

    let mut m = Mat::zeros(n, n);
    for (j, row) in rows.into_iter().enumerate() {
        m.row_mut(j).copy_from_slice(&row);
    }
    Ok(m)
}

fn worst_entry(a: &Mat, b: &Mat) -> (usize, usize, f64) {
    let scale = b.max_abs().max(1e-300);
    let n = a.rows();
    let mut worst = (0, 0, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            let d = (a[(i, j)] - b[(i, j)]).norm() / scale;
            if d > worst.2 {
                worst = (i, j, d);
            }
        }
    }
    worst
}

/// Block-diagonal perturbation of diag(2j+1): the 2×2 block for index pair
/// (2m, 2m+1) comes from the block family.
pub fn assemble_block(blocks: &BlockSpec, n_even: usize) -> Result<TruncatedOperator> {
    blocks.validate()?;
    if n_even == 0 || !n_even.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "assemble_block: need even positive N, got {n_even}"
        )));
    }
    let pairs = n_even / 2;
    if blocks.k_values.len() < pairs {
        return Err(Error::Config(format!(
            "assemble_block: N = {n_even} needs {pairs} blocks, spec has {}",
            blocks.k_values.len()
        )));
    }
    let mut a = Mat::zeros(n_even, n_even);
    for j in 0..n_even {
        a[(j, j)] = Complex64::new((2 * j + 1) as f64, 0.0);
    }
    for m in 0..pairs {
        let b = crate::counterexample::block_matrix(blocks.t, blocks.k(m))?;
        for r in 0..2 {
            for c in 0..2 {
                a[(2 * m + r, 2 * m + c)] += b[(r, c)];
            }
        }
    }
    Ok(TruncatedOperator {
        n: n_even,
        matrix: a,
        source: SourceDescriptor::Block(blocks.clone()),
        grid: None,
        assembly_rtol: 0.0,
        max_rel_discrepancy: 0.0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TrustReport {
    pub n_trust: usize,
    /// Largest eigenvalue drift over the trusted range under N-doubling.
    pub max_drift: f64,
    /// Eigenvalues of the truncation, sorted by (re, im).
    pub eigenvalues: Vec<Complex64>,
}

/// Largest mode index whose eigenvalue is treated as an approximation of the
/// full operator: N/2 by default, lowered when assembling at 2N moves an
/// eigenvalue by ≥ 1e−8. Block operators are exact, so every mode is trusted.
pub fn truncation_trust_index(op: &TruncatedOperator) -> Result<TrustReport> {
    let vals = linalg::eigenvalues(&op.matrix)?;
    match &op.source {
        SourceDescriptor::Block(_) => Ok(TrustReport {
            n_trust: op.n.saturating_sub(1),
            max_drift: 0.0,
            eigenvalues: vals,
        }),
        SourceDescriptor::Pointwise(b) => {
            let n2 = op.n * 2;
            let grid2 = default_grid(b, n2)?;
            let op2 = assemble_with_rtol(b, n2, &grid2, op.assembly_rtol)?;
            let vals2 = linalg::eigenvalues(&op2.matrix)?;
            let cap = op.n / TRUST_FRACTION;
            let mut n_trust = 0usize;
            let mut max_drift = 0.0f64;
            for i in 0..=cap.min(vals.len() - 1) {
                let drift = (vals[i] - vals2[i]).norm();
                if drift < TRUST_DRIFT_TOL {
                    max_drift = max_drift.max(drift);
                    n_trust = i;
                } else {
                    break;
                }
            }
            Ok(TrustReport {
                n_trust,
                max_drift,
                eigenvalues: vals,
            })
        }
    }
}

/// Write the operator in the plain matrix interchange format: a header line
/// `"N rows complex"`, then row-major whitespace-separated `re im` pairs.
pub fn write_matrix<W: Write>(m: &Mat, mut w: W) -> Result<()> {
    writeln!(w, "{} rows complex", m.rows())?;
    for i in 0..m.rows() {
        let mut line = String::new();
        for j in 0..m.cols() {
            let z = m[(i, j)];
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{:e} {:e}", z.re, z.im));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_matrix<R: BufRead>(mut r: R) -> Result<Mat> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .ok_or_else(|| Error::Format("matrix file: empty header".into()))?
        .parse()
        .map_err(|e| Error::Format(format!("matrix file: bad size in header: {e}")))?;
    if parts.next() != Some("rows") || parts.next() != Some("complex") {
        return Err(Error::Format(
            "matrix file: header must read \"N rows complex\"".into(),
        ));
    }
    let mut body = String::new();
    r.read_to_string(&mut body)?;
    let mut tokens = body.split_whitespace();
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re: f64 = tokens
                .next()
                .ok_or_else(|| Error::Format(format!("matrix file: truncated at ({i},{j})")))?
                .parse()
                .map_err(|e| Error::Format(format!("matrix file: bad token at ({i},{j}): {e}")))?;
            let im: f64 = tokens
                .next()
                .ok_or_else(|| Error::Format(format!("matrix file: truncated at ({i},{j})")))?
                .parse()
                .map_err(|e| Error::Format(format!("matrix file: bad token at ({i},{j}): {e}")))?;
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}
