//! Dense two-phase simplex over exact rationals.
//!
//! Instances here are desk-scale (tens of rows and columns), so a dense
//! tableau with Bland's rule is plenty. Exact arithmetic matters: Farkas
//! certificates extracted from phase I are re-checked algebraically and any
//! rounding would make the certificate checks meaningless.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact rational from an f64. Finite doubles are dyadic rationals, so this
/// conversion is lossless.
pub fn rat_from_f64(x: f64) -> Rat {
    BigRational::from_float(x).expect("finite float")
}

pub fn rat_to_f64(x: &Rat) -> f64 {
    let numer = x.numer();
    let denom = x.denom();
    // Good enough for reporting; exact math stays rational.
    let nf = numer.to_string().parse::<f64>().unwrap_or(f64::NAN);
    let df = denom.to_string().parse::<f64>().unwrap_or(f64::NAN);
    nf / df
}

#[derive(Clone, Debug)]
pub enum LpResult {
    Optimal { x: Vec<Rat>, objective: Rat },
    /// Phase-I dual certificate for the (row-normalized) system; see
    /// `feasibility_ge` for the sign conventions of the wrapped form.
    Infeasible { farkas: Vec<Rat> },
    Unbounded,
}

/// Minimize c.x subject to A x = b, x >= 0.
///
/// Rows may have rhs of any sign; they are normalized internally. The
/// returned Farkas vector is expressed against the caller's original rows.
pub fn solve_standard(a: &[Vec<Rat>], b: &[Rat], c: &[Rat]) -> LpResult {
    let nrows = a.len();
    let ncols = c.len();
    debug_assert!(a.iter().all(|row| row.len() == ncols));
    debug_assert_eq!(b.len(), nrows);

    // Normalize rhs >= 0, remembering flips for the dual.
    let mut tableau: Vec<Vec<Rat>> = Vec::with_capacity(nrows);
    let mut rhs: Vec<Rat> = Vec::with_capacity(nrows);
    let mut flipped = vec![false; nrows];
    for (r, row) in a.iter().enumerate() {
        if b[r].is_negative() {
            tableau.push(row.iter().map(|v| -v.clone()).collect());
            rhs.push(-b[r].clone());
            flipped[r] = true;
        } else {
            tableau.push(row.clone());
            rhs.push(b[r].clone());
        }
    }

    // Append artificial columns (identity).
    for (r, row) in tableau.iter_mut().enumerate() {
        for k in 0..nrows {
            row.push(if k == r { Rat::one() } else { Rat::zero() });
        }
        debug_assert_eq!(row.len(), ncols + nrows);
        let _ = r;
    }
    let total_cols = ncols + nrows;
    let mut basis: Vec<usize> = (ncols..total_cols).collect();

    // Phase I: minimize the sum of artificials.
    let phase1_cost: Vec<Rat> = (0..total_cols)
        .map(|j| if j >= ncols { Rat::one() } else { Rat::zero() })
        .collect();
    run_simplex(&mut tableau, &mut rhs, &mut basis, &phase1_cost, total_cols);

    let phase1_obj: Rat = basis
        .iter()
        .enumerate()
        .filter(|&(_, &col)| col >= ncols)
        .map(|(r, _)| rhs[r].clone())
        .sum();
    if !phase1_obj.is_zero() {
        // Infeasible: the phase-I dual y = c_B B^{-1} is the certificate.
        // y_r equals the artificial column's current coefficients weighted by
        // the phase-I basic costs.
        let mut farkas = Vec::with_capacity(nrows);
        for r in 0..nrows {
            let mut y = Rat::zero();
            for (k, &bcol) in basis.iter().enumerate() {
                if bcol >= ncols {
                    y += &tableau[k][ncols + r] * Rat::one();
                }
            }
            if flipped[r] {
                y = -y;
            }
            farkas.push(y);
        }
        return LpResult::Infeasible { farkas };
    }

    // Drive basic artificials out (all sit at level zero now).
    let mut r = 0;
    while r < tableau.len() {
        if basis[r] >= ncols {
            if let Some(j) = (0..ncols).find(|&j| !tableau[r][j].is_zero()) {
                pivot(&mut tableau, &mut rhs, &mut basis, r, j);
            } else {
                // Redundant row: drop it together with its artificial.
                tableau.remove(r);
                rhs.remove(r);
                basis.remove(r);
                continue;
            }
        }
        r += 1;
    }

    // Phase II on the original columns only.
    let mut phase2_cost = c.to_vec();
    phase2_cost.resize(total_cols, Rat::zero());
    if !run_simplex(&mut tableau, &mut rhs, &mut basis, &phase2_cost, ncols) {
        return LpResult::Unbounded;
    }

    let mut x = vec![Rat::zero(); ncols];
    for (r, &col) in basis.iter().enumerate() {
        if col < ncols {
            x[col] = rhs[r].clone();
        }
    }
    let objective = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    LpResult::Optimal { x, objective }
}

/// Bland's-rule simplex over the first `scan_cols` columns. Returns false on
/// unboundedness.
fn run_simplex(
    tableau: &mut Vec<Vec<Rat>>,
    rhs: &mut Vec<Rat>,
    basis: &mut Vec<usize>,
    cost: &[Rat],
    scan_cols: usize,
) -> bool {
    loop {
        // Reduced cost rc_j = c_j - c_B . (B^-1 A_j), recomputed per scan.
        let mut entering = None;
        for j in 0..scan_cols {
            if basis.contains(&j) {
                continue;
            }
            let mut rc = cost[j].clone();
            for (r, &bcol) in basis.iter().enumerate() {
                if !cost[bcol].is_zero() && !tableau[r][j].is_zero() {
                    rc -= &cost[bcol] * &tableau[r][j];
                }
            }
            if rc.is_negative() {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else { return true };

        let mut leaving: Option<(usize, Rat)> = None;
        for r in 0..tableau.len() {
            if tableau[r][j].is_positive() {
                let ratio = &rhs[r] / &tableau[r][j];
                let better = match &leaving {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < *lratio || (ratio == *lratio && basis[r] < basis[*lr])
                    }
                };
                if better {
                    leaving = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = leaving else { return false };
        pivot(tableau, rhs, basis, r, j);
    }
}

fn pivot(tableau: &mut [Vec<Rat>], rhs: &mut [Rat], basis: &mut [usize], r: usize, j: usize) {
    let piv = tableau[r][j].clone();
    for v in tableau[r].iter_mut() {
        *v /= &piv;
    }
    rhs[r] /= &piv;
    for k in 0..tableau.len() {
        if k == r || tableau[k][j].is_zero() {
            continue;
        }
        let factor = tableau[k][j].clone();
        for col in 0..tableau[k].len() {
            let delta = &factor * &tableau[r][col];
            tableau[k][col] -= delta;
        }
        let delta = &factor * &rhs[r];
        rhs[k] -= delta;
    }
    basis[r] = j;
}

#[derive(Clone, Debug)]
pub enum GeFeasibility {
    /// A nonnegative solution of M x >= 1.
    Feasible(Vec<Rat>),
    /// lambda >= 0 with Mᵀ lambda <= 0 and 1ᵀ lambda > 0.
    Infeasible(Vec<Rat>),
}

/// Feasibility of {M x >= 1, x >= 0} with an exact Farkas dual on failure.
pub fn feasibility_ge(m: &[Vec<Rat>]) -> GeFeasibility {
    let nrows = m.len();
    let ncols = m.first().map_or(0, Vec::len);
    // M x - s = 1, s >= 0.
    let mut a = Vec::with_capacity(nrows);
    for (r, row) in m.iter().enumerate() {
        let mut arow = row.clone();
        for k in 0..nrows {
            arow.push(if k == r { -Rat::one() } else { Rat::zero() });
        }
        a.push(arow);
    }
    let b = vec![Rat::one(); nrows];
    let c = vec![Rat::zero(); ncols + nrows];
    match solve_standard(&a, &b, &c) {
        LpResult::Optimal { x, .. } => GeFeasibility::Feasible(x[..ncols].to_vec()),
        LpResult::Infeasible { farkas } => {
            debug_assert!(farkas.iter().all(|y| !y.is_negative()));
            GeFeasibility::Infeasible(farkas)
        }
        LpResult::Unbounded => unreachable!("feasibility objective is constant"),
    }
}
