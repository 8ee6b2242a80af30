use crate::{Error, Result};

const KNOT_TOL: f64 = 1e-14;

/// Open (clamped) knot vector on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

/// Nonzero basis functions at one parameter value.
///
/// `values[k][j]` is the `k`-th derivative of basis function `first + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisValues {
    pub first: usize,
    pub values: Vec<Vec<f64>>,
}

impl KnotVector {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree < 1 {
            return Err(Error::KnotVector("degree must be at least 1".into()));
        }
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::KnotVector(format!(
                "{} knots cannot carry a degree-{degree} basis",
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::KnotVector(
                "knots must be finite and non-decreasing".into(),
            ));
        }
        let n = knots.len();
        let first = knots[0];
        let last = knots[n - 1];
        if first.abs() > KNOT_TOL || (last - 1.0).abs() > KNOT_TOL {
            return Err(Error::KnotVector("knots must span [0, 1]".into()));
        }
        if knots[..=degree].iter().any(|&k| k != first)
            || knots[n - degree - 1..].iter().any(|&k| k != last)
        {
            return Err(Error::KnotVector(format!(
                "end knots must have multiplicity {}",
                degree + 1
            )));
        }
        let interior = &knots[degree + 1..n - degree - 1];
        let mut i = 0;
        while i < interior.len() {
            let mut j = i;
            while j < interior.len() && interior[j] == interior[i] {
                j += 1;
            }
            if interior[i] <= first || interior[i] >= last {
                return Err(Error::KnotVector(
                    "interior knot coincides with an end knot".into(),
                ));
            }
            if j - i > degree {
                return Err(Error::KnotVector(format!(
                    "interior knot {} has multiplicity {} > degree",
                    interior[i],
                    j - i
                )));
            }
            i = j;
        }
        Ok(Self { degree, knots })
    }

    /// Clamped knot vector with `elements` equal spans.
    pub fn uniform(degree: usize, elements: usize) -> Self {
        assert!(degree >= 1 && elements >= 1);
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..elements).map(|i| i as f64 / elements as f64));
        knots.extend(std::iter::repeat(1.0).take(degree + 1));
        Self { degree, knots }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Distinct knot values, i.e. element boundaries.
    pub fn breaks(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &k in &self.knots {
            if out.last() != Some(&k) {
                out.push(k);
            }
        }
        out
    }

    pub fn num_elements(&self) -> usize {
        self.breaks().len() - 1
    }

    /// Knot span index `s` with `knots[s] <= x < knots[s + 1]`; the right end
    /// maps to the last nonempty span.
    pub fn find_span(&self, x: f64) -> usize {
        let n = self.num_basis();
        let p = self.degree;
        if x >= self.knots[n] {
            return n - 1;
        }
        if x <= self.knots[p] {
            return p;
        }
        // knots[p..=n] is sorted; find last index with knots[i] <= x
        let slice = &self.knots[p..=n];
        let pos = slice.partition_point(|&k| k <= x);
        p + pos - 1
    }

    /// Values and up to `num_derivs` derivatives of the `p + 1` basis
    /// functions that do not vanish at `x`.
    pub fn eval_basis(&self, x: f64, num_derivs: usize) -> Result<BasisValues> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("parameter {x} outside [0, 1]")));
        }
        if num_derivs > 2 {
            return Err(Error::Domain(format!(
                "{num_derivs} derivatives requested, at most 2 supported"
            )));
        }
        let span = self.find_span(x);
        Ok(BasisValues {
            first: span - self.degree,
            values: ders_basis_funs(span, x, self.degree, num_derivs, &self.knots),
        })
    }

    /// The same knot vector traversed backwards, `t -> 1 - t`.
    pub fn reversed(&self) -> Self {
        let knots = self.knots.iter().rev().map(|&k| 1.0 - k).collect();
        Self {
            degree: self.degree,
            knots,
        }
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.degree == other.degree
            && self.knots.len() == other.knots.len()
            && self
                .knots
                .iter()
                .zip(&other.knots)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Insert one knot with Boehm's algorithm, updating the coefficients of
    /// every curve in `rows` (each row holds `num_basis()` coefficients).
    pub(crate) fn insert_knot<T>(&mut self, x: f64, rows: &mut [Vec<T>])
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let p = self.degree;
        let k = self.find_span(x);
        let t = &self.knots;
        let alphas: Vec<f64> = (k + 1 - p..=k)
            .map(|i| (x - t[i]) / (t[i + p] - t[i]))
            .collect();
        for row in rows.iter_mut() {
            let old = std::mem::take(row);
            let mut new = Vec::with_capacity(old.len() + 1);
            new.extend_from_slice(&old[..=k - p]);
            for (off, i) in (k + 1 - p..=k).enumerate() {
                let a = alphas[off];
                new.push(old[i] * a + old[i - 1] * (1.0 - a));
            }
            new.extend_from_slice(&old[k..]);
            *row = new;
        }
        self.knots.insert(k + 1, x);
    }

    /// Midpoints of all nonempty spans.
    pub(crate) fn midpoints(&self) -> Vec<f64> {
        self.breaks()
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }
}

/// Cox-de Boor recursion with derivatives (Piegl & Tiller, A2.3).
fn ders_basis_funs(span: usize, x: f64, p: usize, n: usize, knots: &[f64]) -> Vec<Vec<f64>> {
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = vec![vec![0.0; p + 1]; n + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    // derivatives above the degree vanish
    let n_eff = n.min(p);
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=n_eff {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p as isize - k as isize;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk as usize];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if (r as isize - 1) <= pk { k - 1 } else { p - r };
            for j in j1..=j2 {
                let col = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[(pk + 1) as usize][col];
                d += a[s2][j] * ndu[col][pk as usize];
            }
            if r as isize <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[(pk + 1) as usize][r];
                d += a[s2][k] * ndu[r][pk as usize];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=n_eff {
        for v in ders[k].iter_mut() {
            *v *= factor;
        }
        factor *= (p - k) as f64;
    }
    ders
}
