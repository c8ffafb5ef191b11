//! Contour quadrature against the resolvent R(z) = (z − A)⁻¹.
//!
//! A `ResolventFactory` Hessenberg-reduces A once; each contour node then
//! costs one O(n²) factorization plus back-substitutions, and a whole contour
//! integral needs only one unitary conjugation at the end.
//!
//! Circles use the trapezoid rule (nested, so the doubled-resolution estimate
//! is free); rectangle edges use composite Gauss–Legendre panels sized by the
//! local distance to the spectrum. For real matrices and conjugation-symmetric
//! contours, only the upper half is evaluated:
//!   (1/2πi)∮ R dz = Im(∫_{Γ⁺} R dz)/π   entrywise.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hessenberg, HessLu, Mat};

/// How the weighted node sum maps to the integral value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    /// P = Σ w_j g(z_j) R(z_j); weights carry 1/(2πi).
    Plain,
    /// P = Im(Σ w_j g(z_j) R(z_j)); upper-half contour of a real problem.
    ImagOverPi,
}

#[derive(Clone, Copy, Debug)]
pub struct ContourNode {
    pub z: Complex64,
    pub w: Complex64,
    /// Weight multiplier of this node in the nested coarse rule (0 when the
    /// node only belongs to the fine rule).
    pub coarse_factor: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub enum ContourMeta {
    Circle {
        center_re: f64,
        center_im: f64,
        radius: f64,
        nodes: usize,
    },
    Rectangle {
        half_width: f64,
        half_height: f64,
        nodes: usize,
    },
}

#[derive(Clone, Debug)]
pub struct ContourRule {
    pub nodes: Vec<ContourNode>,
    pub reduction: Reduction,
    pub has_coarse: bool,
    pub meta: ContourMeta,
}

impl ContourRule {
    /// Smallest distance from `point` to the contour curve.
    pub fn distance_to(&self, point: Complex64) -> f64 {
        match self.meta {
            ContourMeta::Circle {
                center_re,
                center_im,
                radius,
                ..
            } => ((point - Complex64::new(center_re, center_im)).norm() - radius).abs(),
            ContourMeta::Rectangle {
                half_width,
                half_height,
                ..
            } => {
                let dx = point.re.abs() - half_width;
                let dy = point.im.abs() - half_height;
                if dx <= 0.0 && dy <= 0.0 {
                    (-dx).min(-dy)
                } else {
                    dx.max(0.0).hypot(dy.max(0.0))
                }
            }
        }
    }
}

/// Closed-circle trapezoid rule around `center`. The fine rule has 2m nodes;
/// the nested coarse rule is the m even-indexed ones. With `symmetric` set
/// (valid only for real problems and real centers) just the upper half is
/// generated, with the Im reduction.
pub fn circle_rule(center: Complex64, radius: f64, m: usize, symmetric: bool) -> ContourRule {
    let fine = 2 * m;
    let mut nodes = Vec::new();
    if symmetric {
        debug_assert!(center.im == 0.0);
        let half = m; // upper-half node count of the fine rule, θ_j = πj/m
        for j in 0..=half {
            let theta = std::f64::consts::PI * j as f64 / half as f64;
            let e = Complex64::from_polar(1.0, theta);
            let endpoint = j == 0 || j == half;
            let eta = if endpoint { 0.5 } else { 1.0 };
            let w = Complex64::i() * e * (radius * eta / half as f64);
            let coarse_factor = if j % 2 == 0 { 2.0 } else { 0.0 };
            nodes.push(ContourNode {
                z: center + radius * e,
                w,
                coarse_factor,
            });
        }
        ContourRule {
            nodes,
            reduction: Reduction::ImagOverPi,
            has_coarse: true,
            meta: ContourMeta::Circle {
                center_re: center.re,
                center_im: center.im,
                radius,
                nodes: fine,
            },
        }
    } else {
        for j in 0..fine {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / fine as f64;
            let e = Complex64::from_polar(1.0, theta);
            let w = e * (radius / fine as f64);
            let coarse_factor = if j % 2 == 0 { 2.0 } else { 0.0 };
            nodes.push(ContourNode {
                z: center + radius * e,
                w,
                coarse_factor,
            });
        }
        ContourRule {
            nodes,
            reduction: Reduction::Plain,
            has_coarse: true,
            meta: ContourMeta::Circle {
                center_re: center.re,
                center_im: center.im,
                radius,
                nodes: fine,
            },
        }
    }
}

/// Gauss–Legendre panel nodes on a directed segment, appended with the given
/// weight scale (1/2πi for plain rules, 1/π for Im-reduced rules).
fn push_segment(
    nodes: &mut Vec<ContourNode>,
    a: Complex64,
    b: Complex64,
    order: usize,
    scale: Complex64,
) {
    let (xg, wg) = gauss_legendre_cached(order);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    for (&x, &w) in xg.iter().zip(wg.iter()) {
        nodes.push(ContourNode {
            z: mid + half * x,
            w: scale * half * w,
            coarse_factor: 0.0,
        });
    }
}

fn gauss_legendre_cached(order: usize) -> (Vec<f64>, Vec<f64>) {
    // orders used are small; recompute via the hermite module helper
    crate::hermite::HermiteGrid::composite_legendre(1.0, 1, order)
        .map(|g| (g.nodes, g.weights))
        .expect("legendre rule")
}

/// Rectangle contour ∂Π(half_width, half_height), counterclockwise, panels
/// sized by `panel_factor` × local distance to the real spectrum interval
/// [spec_lo, spec_hi]. `refine` halves the panels. For `symmetric` only the
/// upper half is generated (right edge up, top edge right→left, left edge
/// down) with the Im reduction.
#[allow(clippy::too_many_arguments)]
pub fn strip_rule(
    half_width: f64,
    half_height: f64,
    spec_lo: f64,
    spec_hi: f64,
    order: usize,
    panel_factor: f64,
    symmetric: bool,
    refine: bool,
) -> ContourRule {
    let hw = half_width;
    let hh = half_height;
    let clearance = |x: f64| -> f64 {
        let dx = if x < spec_lo {
            spec_lo - x
        } else if x > spec_hi {
            x - spec_hi
        } else {
            0.0
        };
        dx.hypot(hh).max(1e-3)
    };
    let factor = if refine {
        panel_factor / 2.0
    } else {
        panel_factor
    };
    let scale = if symmetric {
        Complex64::new(std::f64::consts::FRAC_1_PI, 0.0)
    } else {
        // 1/(2πi)
        Complex64::new(0.0, -0.5 * std::f64::consts::FRAC_1_PI)
    };
    let mut nodes = Vec::new();

    // vertical clearance of the side edges
    let side_gap = (spec_lo - (-hw)).abs().min((spec_hi - hw).abs()).max(0.5);
    let vertical = |nodes: &mut Vec<ContourNode>, x: f64, y0: f64, y1: f64| {
        let len = (y1 - y0).abs();
        let panels = (len / (factor * side_gap)).ceil().max(1.0) as usize;
        for p in 0..panels {
            let a = y0 + (y1 - y0) * p as f64 / panels as f64;
            let b = y0 + (y1 - y0) * (p + 1) as f64 / panels as f64;
            push_segment(
                nodes,
                Complex64::new(x, a),
                Complex64::new(x, b),
                order,
                scale,
            );
        }
    };
    // horizontal edge at height y, traversed from x0 to x1; the panel length
    // is set by the clearance at whichever panel end is closer to the spectrum
    let horizontal = |nodes: &mut Vec<ContourNode>, y: f64, x0: f64, x1: f64| {
        let dir = (x1 - x0).signum();
        let mut x = x0;
        while (x1 - x) * dir > 1e-12 {
            let c0 = clearance(x);
            let c1 = clearance(x + dir * factor * c0);
            let h = (factor * c0.min(c1)).min((x1 - x) * dir);
            let nx = x + dir * h;
            push_segment(
                nodes,
                Complex64::new(x, y),
                Complex64::new(nx, y),
                order,
                scale,
            );
            x = nx;
        }
    };

    if symmetric {
        vertical(&mut nodes, hw, 0.0, hh);
        horizontal(&mut nodes, hh, hw, -hw);
        vertical(&mut nodes, -hw, hh, 0.0);
    } else {
        horizontal(&mut nodes, -hh, -hw, hw);
        vertical(&mut nodes, hw, -hh, hh);
        horizontal(&mut nodes, hh, hw, -hw);
        vertical(&mut nodes, -hw, hh, -hh);
    }
    let count = nodes.len();
    ContourRule {
        nodes,
        reduction: if symmetric {
            Reduction::ImagOverPi
        } else {
            Reduction::Plain
        },
        has_coarse: false,
        meta: ContourMeta::Rectangle {
            half_width: hw,
            half_height: hh,
            nodes: count,
        },
    }
}

/// The integral value(s): the fine rule's result and, when the rule carries a
/// nested coarse rule, the halved-resolution result for the doubling check.
pub struct ContourIntegral {
    pub fine: Mat,
    pub coarse: Option<Mat>,
}

/// Hessenberg-reduced resolvent solver: A = Q H Qᴴ computed once.
pub struct ResolventFactory {
    h: Mat,
    q: Mat,
    n: usize,
    /// Input matrix had exactly zero imaginary parts.
    pub real: bool,
}

const CHUNK: usize = 4;

impl ResolventFactory {
    pub fn new(a: &Mat) -> Self {
        let real = a.is_real();
        let (h, q) = hessenberg(a);
        Self {
            h,
            q,
            n: a.rows(),
            real,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Full contour integral of g(z)·R(z) as a matrix:
    /// reduce(Σ_j w_j g(z_j) (z_j − A)⁻¹).
    pub fn integrate_matrix(
        &self,
        rule: &ContourRule,
        scalar: &(dyn Fn(Complex64) -> Complex64 + Sync),
    ) -> Result<ContourIntegral> {
        if rule.reduction == Reduction::ImagOverPi && !self.real {
            return Err(Error::Contour(
                "upper-half contour reduction needs a real operator".into(),
            ));
        }
        let identity = Mat::identity(self.n);
        let (sum_f, sum_c) = self.node_sums(rule, scalar, &identity)?;
        let fine = self.conjugate_and_reduce(sum_f, rule.reduction);
        let coarse = if rule.has_coarse {
            Some(self.conjugate_and_reduce(sum_c, rule.reduction))
        } else {
            None
        };
        Ok(ContourIntegral { fine, coarse })
    }

    /// Contour integral applied to right-hand-side columns. Plain-reduction
    /// rules only: the Im reduction does not commute with complex columns.
    pub fn integrate_apply(
        &self,
        rule: &ContourRule,
        scalar: &(dyn Fn(Complex64) -> Complex64 + Sync),
        rhs: &Mat,
    ) -> Result<ContourIntegral> {
        if rule.reduction != Reduction::Plain {
            return Err(Error::Contour(
                "apply-mode contours must use the plain full-contour reduction".into(),
            ));
        }
        let rhs_h = self.q.adjoint().matmul(rhs);
        let (sum_f, sum_c) = self.node_sums(rule, scalar, &rhs_h)?;
        let fine = self.q.matmul(&sum_f);
        let coarse = if rule.has_coarse {
            Some(self.q.matmul(&sum_c))
        } else {
            None
        };
        Ok(ContourIntegral { fine, coarse })
    }

    /// Σ w_j g(z_j) (z_j − H)⁻¹ rhs over fine and coarse rules, chunked for a
    /// reduction order independent of thread count.
    fn node_sums(
        &self,
        rule: &ContourRule,
        scalar: &(dyn Fn(Complex64) -> Complex64 + Sync),
        rhs: &Mat,
    ) -> Result<(Mat, Mat)> {
        let chunks: Vec<&[ContourNode]> = rule.nodes.chunks(CHUNK).collect();
        let partials: Vec<Result<(Mat, Mat)>> = chunks
            .par_iter()
            .map(|chunk| {
                let mut acc_f = Mat::zeros(rhs.rows(), rhs.cols());
                let mut acc_c = Mat::zeros(rhs.rows(), rhs.cols());
                for node in chunk.iter() {
                    let lu = HessLu::shifted(&self.h, node.z)?;
                    let mut x = rhs.clone();
                    lu.solve_in_place_mat(&mut x);
                    let g = scalar(node.z);
                    acc_f.axpy(node.w * g, &x);
                    if node.coarse_factor != 0.0 {
                        acc_c.axpy(node.w * g * node.coarse_factor, &x);
                    }
                }
                Ok((acc_f, acc_c))
            })
            .collect();
        let mut sum_f = Mat::zeros(rhs.rows(), rhs.cols());
        let mut sum_c = Mat::zeros(rhs.rows(), rhs.cols());
        let one = Complex64::new(1.0, 0.0);
        for p in partials {
            let (f, c) = p?;
            sum_f.axpy(one, &f);
            sum_c.axpy(one, &c);
        }
        Ok((sum_f, sum_c))
    }

    fn conjugate_and_reduce(&self, sum_h: Mat, reduction: Reduction) -> Mat {
        let full = self.q.matmul(&sum_h).matmul(&self.q.adjoint());
        match reduction {
            Reduction::Plain => full,
            Reduction::ImagOverPi => full.imag_part(),
        }
    }

    /// Single-z resolvent applied to columns: (z − A)⁻¹ rhs.
    pub fn resolvent_apply(&self, z: Complex64, rhs: &Mat) -> Result<Mat> {
        let lu = HessLu::shifted(&self.h, z)?;
        let mut x = self.q.adjoint().matmul(rhs);
        lu.solve_in_place_mat(&mut x);
        Ok(self.q.matmul(&x))
    }
}
