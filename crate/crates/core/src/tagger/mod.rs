//! BiLSTM-CRF sequence tagging.

pub mod crf;
mod io;
pub mod lstm;
mod model;
mod train;

pub use crf::{
    crf_log_partition, crf_sequence_score, decode_tags, nll_loss, nll_with_gradient, viterbi_decode, CrfParams,
    IMPOSSIBLE,
};
pub use io::{load_model, read_model, save_model, write_model, MODEL_HEADER};
pub use lstm::{bilstm_encode, lstm_step, LstmParams};
pub use model::{Gradients, Network, TaggerModel, TrainConfig};
pub use train::{train, EpochLog};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// `row t = W · encoded[t] + b`.
pub fn emission_scores(encoded: &Matrix, weight: &Matrix, bias: &[f64]) -> Result<Matrix> {
    if weight.cols() != encoded.cols() || weight.rows() != bias.len() {
        return Err(Error::Shape(format!(
            "projection {}×{} with bias {} cannot map width {}",
            weight.rows(),
            weight.cols(),
            bias.len(),
            encoded.cols()
        )));
    }
    let mut out = Matrix::zeros(encoded.rows(), weight.rows());
    for t in 0..encoded.rows() {
        let row = out.row_mut(t);
        row.copy_from_slice(bias);
        weight.mul_vec_add(encoded.row(t), row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emission_examples() {
        let enc = Matrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5]]);
        let z = emission_scores(&enc, &Matrix::zeros(3, 2), &[0.0; 3]).unwrap();
        assert!(z.as_slice().iter().all(|&x| x == 0.0));
        let b = [1.0, 2.0, 3.0];
        let c = emission_scores(&enc, &Matrix::zeros(3, 2), &b).unwrap();
        assert_eq!(c.row(0), b);
        assert_eq!(c.row(1), b);
        // [[1,2],[3,4]]·[1,2] = [5,11]; ·[-1,0.5] = [0,-1]
        let w = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let e = emission_scores(&enc, &w, &[0.0, 0.0]).unwrap();
        assert_eq!(e.row(0), [5.0, 11.0]);
        assert_eq!(e.row(1), [0.0, -1.0]);
        assert!(emission_scores(&enc, &Matrix::zeros(3, 3), &b).is_err());
    }
}
