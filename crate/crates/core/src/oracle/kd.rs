use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KdError {
    #[error("temperature must be positive and finite, got {0}")]
    BadTemperature(f64),
    #[error("example {index}: teacher has {teacher} logits, student has {student}")]
    ShapeMismatch {
        index: usize,
        teacher: usize,
        student: usize,
    },
    #[error("example {0}: need at least 2 classes")]
    TooFewClasses(usize),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("teacher and student batches differ in length ({0} vs {1})")]
    BatchLength(usize, usize),
}

/// Teacher and student logits for a batch of examples.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillationBatch {
    teacher: Vec<Vec<f64>>,
    student: Vec<Vec<f64>>,
    temperature: f64,
}

impl DistillationBatch {
    pub fn new(
        teacher: Vec<Vec<f64>>,
        student: Vec<Vec<f64>>,
        temperature: f64,
    ) -> Result<Self, KdError> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(KdError::BadTemperature(temperature));
        }
        if teacher.len() != student.len() {
            return Err(KdError::BatchLength(teacher.len(), student.len()));
        }
        if teacher.is_empty() {
            return Err(KdError::EmptyBatch);
        }
        for (index, (p, q)) in teacher.iter().zip(&student).enumerate() {
            if p.len() != q.len() {
                return Err(KdError::ShapeMismatch {
                    index,
                    teacher: p.len(),
                    student: q.len(),
                });
            }
            if p.len() < 2 {
                return Err(KdError::TooFewClasses(index));
            }
        }
        Ok(Self {
            teacher,
            student,
            temperature,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

/// `log softmax(x / t)` with max subtraction.
pub fn log_softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max) / temperature;
    let shifted: Vec<f64> = logits.iter().map(|x| x / temperature - max).collect();
    let log_z = shifted.iter().map(|x| x.exp()).sum::<f64>().ln();
    shifted.into_iter().map(|x| x - log_z).collect()
}

/// Temperature-scaled distillation loss, averaged over the batch:
/// `-Σ softmax(p/T) · log softmax(q/T) · T²`.
///
/// Minimized when the student logits `q` induce the teacher's distribution.
pub fn kd_loss(batch: &DistillationBatch) -> f64 {
    let t = batch.temperature;
    let total: f64 = batch
        .teacher
        .iter()
        .zip(&batch.student)
        .map(|(p, q)| {
            let log_p = log_softmax(p, t);
            let log_q = log_softmax(q, t);
            -log_p
                .iter()
                .zip(&log_q)
                .map(|(lp, lq)| lp.exp() * lq)
                .sum::<f64>()
        })
        .sum();
    total * t * t / batch.teacher.len() as f64
}
