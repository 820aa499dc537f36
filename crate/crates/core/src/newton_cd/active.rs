use faer::MatRef;

/// Coordinates updated by the inner loop, in row-major order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActiveSet {
    coords: Vec<(usize, usize)>,
}

impl ActiveSet {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[(usize, usize)] {
        &self.coords
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.coords.binary_search(&(i, j)).is_ok()
    }
}

/// `{(i,j) : K_ij ≠ 0} ∪ {(i,j) : K_ij = 0 and |∇J_ij| > Λ_ij}`.
///
/// Coordinates with `Λ_ij = ∞` and `K_ij = 0` never qualify.
pub fn active_set(k: MatRef<'_, f64>, grad: MatRef<'_, f64>, lambda: MatRef<'_, f64>) -> ActiveSet {
    let mut coords = Vec::new();
    for i in 0..k.nrows() {
        for j in 0..k.ncols() {
            if k[(i, j)] != 0.0 || grad[(i, j)].abs() > lambda[(i, j)] {
                coords.push((i, j));
            }
        }
    }
    ActiveSet { coords }
}

/// Largest entry (in magnitude) of the minimum-norm element of `∇J(K) + ∂g(K)`.
pub fn optimality(k: MatRef<'_, f64>, grad: MatRef<'_, f64>, lambda: MatRef<'_, f64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..k.nrows() {
        for j in 0..k.ncols() {
            let (kij, gij, lij) = (k[(i, j)], grad[(i, j)], lambda[(i, j)]);
            let v = if kij != 0.0 {
                if lij.is_infinite() {
                    f64::INFINITY
                } else {
                    gij + lij * kij.signum()
                }
            } else {
                (gij.abs() - lij).max(0.0)
            };
            acc = f64::max(acc, v.abs());
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::mat;

    #[test]
    fn rules() {
        let k = mat![[0.0, 1.0, 0.0, 0.0]];
        let g = mat![[0.5, 0.0, 2.0, 5.0]];
        let lam = mat![[1.0, 1.0, 1.0, f64::INFINITY]];
        let a = active_set(k.as_ref(), g.as_ref(), lam.as_ref());
        assert_eq!(a.coords(), &[(0, 1), (0, 2)]);
        assert!(a.contains(0, 2) && !a.contains(0, 3));
        // |0 + 1·1| = 1 and |2| − 1 = 1
        let opt = optimality(k.as_ref(), g.as_ref(), lam.as_ref());
        assert_eq!(opt, 1.0);
    }
}
