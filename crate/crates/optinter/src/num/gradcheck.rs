use super::NumError;

/// A scalar objective over named parameter blocks, with an analytic
/// gradient. Implementations expose their parameters coordinate-wise so
/// the checker can perturb them.
pub trait DiffFunction {
    fn block_names(&self) -> Vec<String>;
    fn block_len(&self, block: usize) -> usize;
    fn get_param(&self, block: usize, idx: usize) -> f64;
    fn set_param(&mut self, block: usize, idx: usize, value: f64);
    /// Objective value at the current parameters.
    fn eval(&mut self) -> Result<f64, NumError>;
    /// Analytic gradient for every block, from one forward/backward pass.
    fn grad(&mut self) -> Result<Vec<Vec<f64>>, NumError>;
}

#[derive(Clone, Debug)]
pub struct BlockReport {
    pub name: String,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockReport>,
    pub max_rel_err: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

// Gradient components below this magnitude are compared on an absolute
// scale; the relative formula would blow up on the noise floor of the
// central-difference oracle.
const REL_ERR_FLOOR: f64 = 1e-3;

/// Central finite differences against the analytic gradient, per block.
pub fn grad_check(
    f: &mut dyn DiffFunction,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport, NumError> {
    if step <= 0.0 || tolerance <= 0.0 {
        return Err(NumError::Domain(format!(
            "grad_check step/tolerance must be positive: {step}, {tolerance}"
        )));
    }
    let names = f.block_names();
    let analytic = f.grad()?;
    if analytic.len() != names.len() {
        return Err(NumError::Shape(format!(
            "grad returned {} blocks, expected {}",
            analytic.len(),
            names.len()
        )));
    }
    let mut blocks = Vec::with_capacity(names.len());
    let mut overall = 0.0f64;
    for (b, name) in names.into_iter().enumerate() {
        let len = f.block_len(b);
        if analytic[b].len() != len {
            return Err(NumError::Shape(format!("block {name}: grad len {} vs {len}", analytic[b].len())));
        }
        let mut max_rel = 0.0f64;
        let mut max_abs = 0.0f64;
        for i in 0..len {
            let x = f.get_param(b, i);
            f.set_param(b, i, x + step);
            let up = f.eval()?;
            f.set_param(b, i, x - step);
            let down = f.eval()?;
            f.set_param(b, i, x);
            if !up.is_finite() || !down.is_finite() {
                return Err(NumError::NonFinite(format!("non-finite evaluation in block {name}")));
            }
            let numeric = (up - down) / (2.0 * step);
            let ana = analytic[b][i];
            let abs = (ana - numeric).abs();
            let rel = abs / ana.abs().max(numeric.abs()).max(REL_ERR_FLOOR);
            max_abs = max_abs.max(abs);
            max_rel = max_rel.max(rel);
        }
        overall = overall.max(max_rel);
        blocks.push(BlockReport { name, max_rel_err: max_rel, max_abs_err: max_abs });
    }
    Ok(GradCheckReport { blocks, max_rel_err: overall, tolerance })
}
