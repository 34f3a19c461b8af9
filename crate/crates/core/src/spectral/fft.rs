//! Two-dimensional FFTs on the (theta, zeta) grid with per-thread plan caching.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::lattice::Lattice;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

struct Plan {
    n0: usize,
    n1: usize,
    fwd0: Arc<dyn Fft<f64>>,
    inv0: Arc<dyn Fft<f64>>,
    fwd1: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
}

impl Plan {
    fn new(planner: &mut FftPlanner<f64>, n0: usize, n1: usize) -> Self {
        let fwd0 = planner.plan_fft_forward(n0);
        let inv0 = planner.plan_fft_inverse(n0);
        let fwd1 = planner.plan_fft_forward(n1);
        let inv1 = planner.plan_fft_inverse(n1);
        let scratch_len = [&fwd0, &inv0, &fwd1, &inv1].iter().map(|p| p.get_inplace_scratch_len()).max().unwrap_or(0);
        Self { n0, n1, fwd0, inv0, fwd1, inv1, scratch: vec![ZERO; scratch_len], transposed: vec![ZERO; n0 * n1] }
    }

    fn run(&mut self, data: &mut [Complex64], forward: bool) {
        let (n0, n1) = (self.n0, self.n1);
        let (p0, p1) = if forward { (&self.fwd0, &self.fwd1) } else { (&self.inv0, &self.inv1) };
        p1.process_with_scratch(data, &mut self.scratch);
        transpose(data, &mut self.transposed, n0, n1);
        p0.process_with_scratch(&mut self.transposed, &mut self.scratch);
        transpose(&self.transposed, data, n1, n0);
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for i in 0..rows {
        for j in 0..cols {
            dst[j * rows + i] = src[i * cols + j];
        }
    }
}

type PlanCache = HashMap<(usize, usize), Rc<RefCell<Plan>>>;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static PLANS: RefCell<PlanCache> = RefCell::new(HashMap::new());
}

fn plan(n0: usize, n1: usize) -> Rc<RefCell<Plan>> {
    PLANS.with(|plans| {
        plans
            .borrow_mut()
            .entry((n0, n1))
            .or_insert_with(|| {
                let p = PLANNER.with(|pl| Plan::new(&mut pl.borrow_mut(), n0, n1));
                Rc::new(RefCell::new(p))
            })
            .clone()
    })
}

/// Smallest even integer >= `min` whose only prime factors are 2, 3 and 5.
pub fn fft_size(min: usize) -> usize {
    let mut n = min.max(2);
    loop {
        if n.is_multiple_of(2) {
            let mut r = n;
            for p in [2, 3, 5] {
                while r.is_multiple_of(p) {
                    r /= p;
                }
            }
            if r == 1 {
                return n;
            }
        }
        n += 1;
    }
}

/// Complex samples on an `n0 x n1` grid, row-major with theta as the row index.
#[derive(Clone, Debug)]
pub(crate) struct Grid {
    pub n0: usize,
    pub n1: usize,
    pub data: Vec<Complex64>,
}

impl Grid {
    pub fn zeros(n0: usize, n1: usize) -> Self {
        Self { n0, n1, data: vec![ZERO; n0 * n1] }
    }

    /// Evaluates `sum c(k, l) e^{i(k theta + l zeta)}` over the full signed lattice
    /// `|k| <= k_max`, `|l| <= l_max`.
    pub fn synthesize_with(
        n0: usize,
        n1: usize,
        k_max: usize,
        l_max: usize,
        coeff: impl Fn(i64, i64) -> Complex64,
    ) -> Self {
        debug_assert!(n0 > 2 * k_max && n1 > 2 * l_max);
        let mut g = Self::zeros(n0, n1);
        let (k_max, l_max) = (k_max as i64, l_max as i64);
        for k in -k_max..=k_max {
            let row = k.rem_euclid(n0 as i64) as usize * n1;
            for l in -l_max..=l_max {
                g.data[row + l.rem_euclid(n1 as i64) as usize] = coeff(k, l);
            }
        }
        plan(n0, n1).borrow_mut().run(&mut g.data, false);
        g
    }

    /// Synthesizes an even field given on the half lattice.
    pub fn from_even(n0: usize, n1: usize, lattice: &Lattice, coeffs: &[Complex64]) -> Self {
        let lmax1 = lattice.l_max() + 1;
        let k_max = lattice.k_max() as i64;
        Self::synthesize_with(n0, n1, lattice.k_max(), lattice.l_max(), |k, l| {
            coeffs[(k + k_max) as usize * lmax1 + l.unsigned_abs() as usize]
        })
    }

    /// Forward transform in place; afterwards `coeff` returns normalised
    /// Fourier coefficients.
    pub fn forward(mut self) -> Spectrum {
        plan(self.n0, self.n1).borrow_mut().run(&mut self.data, true);
        let scale = 1.0 / (self.n0 * self.n1) as f64;
        self.data.iter_mut().for_each(|c| *c *= scale);
        Spectrum { n0: self.n0, n1: self.n1, data: self.data }
    }

    pub fn zip_map(&self, other: &Grid, f: impl Fn(Complex64, Complex64) -> Complex64) -> Grid {
        debug_assert!(self.n0 == other.n0 && self.n1 == other.n1);
        Grid { n0: self.n0, n1: self.n1, data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect() }
    }
}

/// Normalised Fourier coefficients of a grid function.
pub(crate) struct Spectrum {
    n0: usize,
    n1: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn coeff(&self, k: i64, l: i64) -> Complex64 {
        self.data[k.rem_euclid(self.n0 as i64) as usize * self.n1 + l.rem_euclid(self.n1 as i64) as usize]
    }

    /// Folds the signed-l coefficients onto the half lattice by averaging
    /// `l` and `-l`, returning the coefficients and the largest mismatch.
    pub fn fold_even(&self, lattice: &Lattice) -> (Vec<Complex64>, f64) {
        let mut out = Vec::with_capacity(lattice.len());
        let mut mismatch: f64 = 0.0;
        for (k, l) in lattice.modes() {
            let l = l as i64;
            let a = self.coeff(k, l);
            let b = self.coeff(k, -l);
            mismatch = mismatch.max((a - b).norm());
            out.push((a + b) * 0.5);
        }
        (out, mismatch)
    }
}
