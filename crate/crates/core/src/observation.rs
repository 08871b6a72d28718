use crate::error::{Error, Result};
use crate::matrixkit::DenseMatrix;

/// `p × n` stack of vectorized frames (one frame per column, row-major pixel
/// order) together with the frame geometry, `p = width * height`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    matrix: DenseMatrix,
    width: usize,
    height: usize,
}

impl ObservationMatrix {
    pub fn new(matrix: DenseMatrix, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if matrix.rows() != width * height {
            return Err(Error::ShapeMismatch {
                expected: format!("{} rows for {width}x{height} frames", width * height),
                actual: format!("{} rows", matrix.rows()),
            });
        }
        Ok(ObservationMatrix {
            matrix,
            width,
            height,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> usize {
        self.matrix.rows()
    }

    pub fn frames(&self) -> usize {
        self.matrix.cols()
    }

    /// Copy of the columns `cols` with the same geometry.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let columns: Vec<&[f64]> = cols.iter().map(|&j| self.matrix.col(j)).collect();
        let matrix = DenseMatrix::from_columns(self.pixels(), &columns)?;
        ObservationMatrix::new(matrix, self.width, self.height)
    }
}
