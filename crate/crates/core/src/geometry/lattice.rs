use super::Point;

/// Number of rows paired with `columns` so that rows are even and the
/// triangles are as close to equilateral as the torus allows.
pub fn lattice_rows(columns: usize) -> usize {
    let m = (2.0 * columns as f64 / 3f64.sqrt()).round() as usize;
    (m + m % 2).max(2)
}

/// Near-equilateral triangular lattice on the torus with `columns` points per
/// row; alternate rows are shifted by half a spacing.
pub fn triangular_lattice(columns: usize) -> Vec<Point> {
    let k = columns;
    let m = lattice_rows(k);
    let mut out = Vec::with_capacity(k * m);
    for j in 0..m {
        for i in 0..k {
            let x = (i as f64 + 0.25 + 0.5 * (j % 2) as f64) / k as f64;
            let y = (j as f64 + 0.5) / m as f64;
            out.push(Point::new(x, y));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_even() {
        for k in 2..200 {
            assert_eq!(lattice_rows(k) % 2, 0);
            assert_eq!(triangular_lattice(k).len(), k * lattice_rows(k));
        }
        assert_eq!(lattice_rows(10), 12);
    }
}
