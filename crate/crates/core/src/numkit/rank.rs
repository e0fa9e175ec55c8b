use nalgebra::DMatrix;

/// Number of singular values above `rel_tol * sigma_max` (0 for an empty or
/// zero matrix). `rows` is a row-major matrix.
pub fn rank_with_tolerance(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    if rows.is_empty() || rows[0].is_empty() {
        return 0;
    }
    let (m, n) = (rows.len(), rows[0].len());
    let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    let mat = DMatrix::from_row_slice(m, n, &flat);
    let sv = mat.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Rank of the span of `idx`-selected vectors.
pub fn vectors_rank(vectors: &[Vec<f64>], idx: &[usize], rel_tol: f64) -> usize {
    let rows: Vec<Vec<f64>> = idx.iter().map(|&i| vectors[i].clone()).collect();
    rank_with_tolerance(&rows, rel_tol)
}
