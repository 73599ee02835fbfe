/// Weighted sum of the generative and contrastive losses, L = α·lm + β·con.
pub fn naive_hybrid_loss(lm: f64, con: f64, alpha: f64, beta: f64) -> f64 {
    alpha * lm + beta * con
}

/// Weighted sum of the generative and alignment losses, L = α·lm + β·align.
/// The alignment term is computed against a frozen contrastive encoder.
pub fn mlem_loss(lm: f64, align: f64, alpha: f64, beta: f64) -> f64 {
    alpha * lm + beta * align
}

/// Default loss weights for both hybrid strategies.
pub const HYBRID_ALPHA: f64 = 1.0;
pub const HYBRID_BETA: f64 = 10.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_combinations() {
        assert_eq!(naive_hybrid_loss(0.5, 0.2, 1.0, 10.0), 2.5);
        assert_eq!(mlem_loss(0.4, 0.1, 1.0, 10.0), 1.4);
        // β = 0 reduces to the generative loss, α = 0 to the scaled partner.
        assert_eq!(naive_hybrid_loss(0.7, 9.9, 1.0, 0.0), 0.7);
        assert_eq!(naive_hybrid_loss(0.7, 0.3, 0.0, 10.0), 3.0);
        assert_eq!(mlem_loss(0.7, 9.9, 1.0, 0.0), 0.7);
    }
}
