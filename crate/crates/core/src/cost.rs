//! Analytic cost objectives: serialized model size, forward-pass FLOPs and
//! an energy/carbon estimate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{Configuration, ModelShape, SpaceError};

pub const BYTES_PER_MB: u128 = 1 << 20;

/// kg CO2 per kWh. 0.32 kWh of inference maps to 0.14 kg.
pub const DEFAULT_CARBON_INTENSITY: f64 = 0.4375;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("{name} must be a non-negative finite number, got {value}")]
    NegativeInput { name: &'static str, value: f64 },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Model file size split by component, in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeBreakdown {
    pub embedding_bytes: u128,
    pub transformer_bytes: u128,
    pub classifier_bytes: u128,
}

impl SizeBreakdown {
    pub fn total_bytes(&self) -> u128 {
        self.embedding_bytes + self.transformer_bytes + self.classifier_bytes
    }

    pub fn embedding_mb(&self) -> f64 {
        to_mb(self.embedding_bytes)
    }

    pub fn transformer_mb(&self) -> f64 {
        to_mb(self.transformer_bytes)
    }

    pub fn classifier_mb(&self) -> f64 {
        to_mb(self.classifier_bytes)
    }

    pub fn total_mb(&self) -> f64 {
        to_mb(self.total_bytes())
    }
}

#[inline]
fn to_mb(bytes: u128) -> f64 {
    bytes as f64 / BYTES_PER_MB as f64
}

/// Size of a 32-bit encoder classifier with the given shape.
///
/// embedding   = 4(v + s + 3)h
/// transformer = 4(4h² + (9 + 2i)h + i)·l
/// classifier  = 2h² + 4h + 2
pub fn model_size(shape: &ModelShape) -> SizeBreakdown {
    let v = shape.vocab_size as u128;
    let s = shape.max_seq_len as u128;
    let h = shape.hidden_size as u128;
    let i = shape.intermediate_size as u128;
    let l = shape.num_layers as u128;
    SizeBreakdown {
        embedding_bytes: 4 * (v + s + 3) * h,
        transformer_bytes: 4 * (4 * h * h + (9 + 2 * i) * h + i) * l,
        classifier_bytes: 2 * h * h + 4 * h + 2,
    }
}

pub fn model_size_mb(c: &Configuration) -> Result<SizeBreakdown, CostError> {
    Ok(model_size(&c.shape()?))
}

/// Exact forward-pass FLOP count at full sequence length, one
/// multiply-accumulate counted as two FLOPs:
/// `l(8sh² + 4s²h + 4shi) + 4h²`.
pub fn forward_flops(shape: &ModelShape) -> u128 {
    let s = shape.max_seq_len as u128;
    let h = shape.hidden_size as u128;
    let i = shape.intermediate_size as u128;
    let l = shape.num_layers as u128;
    let per_layer = 8 * s * h * h + 4 * s * s * h + 4 * s * h * i;
    l * per_layer + 4 * h * h
}

pub fn forward_gflops(shape: &ModelShape) -> f64 {
    forward_flops(shape) as f64 / 1e9
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Emissions {
    pub energy_kwh: f64,
    pub co2_kg: f64,
}

/// Energy and CO2 for running a device of `device_power_kw` for `runtime_hours`.
pub fn emissions(
    runtime_hours: f64,
    device_power_kw: f64,
    carbon_intensity: f64,
) -> Result<Emissions, CostError> {
    for (name, value) in [
        ("runtime_hours", runtime_hours),
        ("device_power_kw", device_power_kw),
        ("carbon_intensity", carbon_intensity),
    ] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(CostError::NegativeInput { name, value });
        }
    }
    let energy_kwh = runtime_hours * device_power_kw;
    Ok(Emissions {
        energy_kwh,
        co2_kg: energy_kwh * carbon_intensity,
    })
}

/// All analytic figures for one configuration under one workload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub size_mb: f64,
    pub gflops: f64,
    pub energy_kwh: f64,
    pub co2_kg: f64,
}

impl CostReport {
    pub fn new(
        c: &Configuration,
        runtime_hours: f64,
        device_power_kw: f64,
        carbon_intensity: f64,
    ) -> Result<Self, CostError> {
        let shape = c.shape()?;
        let e = emissions(runtime_hours, device_power_kw, carbon_intensity)?;
        Ok(Self {
            size_mb: model_size(&shape).total_mb(),
            gflops: forward_gflops(&shape),
            energy_kwh: e.energy_kwh,
            co2_kg: e.co2_kg,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{sample_uniform, ConfigurationSpace};
    use proptest::prelude::*;

    fn shape(v: u64, s: u64, h: u64, i: u64, l: u64) -> ModelShape {
        ModelShape {
            vocab_size: v,
            num_layers: l,
            hidden_size: h,
            intermediate_size: i,
            num_heads: 1,
            max_seq_len: s,
        }
    }

    #[test]
    fn codebert_size() {
        let b = model_size(&shape(50265, 512, 768, 3072, 12));
        assert_eq!(b.embedding_bytes, 155_996_160);
        assert_eq!(b.transformer_bytes, 340_217_856);
        assert_eq!(b.classifier_bytes, 1_182_722);
        assert_eq!(b.total_bytes(), 497_396_738);
        assert!((b.total_mb() - 474.3545).abs() < 1e-4);
        assert!((b.total_mb() - 481.0).abs() / 481.0 < 0.03);
    }

    #[test]
    fn smallest_corner_size() {
        let b = model_size(&shape(1000, 256, 16, 16, 1));
        assert_eq!(b.total_bytes(), 87_938);
        assert!((b.total_mb() - 0.0839).abs() < 1e-4);
    }

    #[test]
    fn parts_sum_exactly() {
        let b = model_size(&shape(31337, 300, 200, 999, 7));
        assert_eq!(b.embedding_mb() + b.transformer_mb() + b.classifier_mb(), b.total_mb());
    }

    #[test]
    fn doubling_layers_only_touches_transformer() {
        let a = model_size(&shape(5000, 300, 64, 256, 3));
        let b = model_size(&shape(5000, 300, 64, 256, 6));
        assert_eq!(b.transformer_bytes, 2 * a.transformer_bytes);
        assert_eq!(a.embedding_bytes, b.embedding_bytes);
        assert_eq!(a.classifier_bytes, b.classifier_bytes);
    }

    #[test]
    fn codebert_flops() {
        // 12 * (8*512*768^2 + 4*512^2*768 + 4*512*768*3072) + 4*768^2
        let f = forward_flops(&shape(50265, 512, 768, 3072, 12));
        assert_eq!(f, 96_639_123_456);
        assert!((forward_gflops(&shape(1, 512, 768, 3072, 12)) - 96.639_123_456).abs() < 1e-12);
    }

    #[test]
    fn zero_layers_leaves_classifier_term() {
        let mut s = shape(1000, 256, 32, 64, 1);
        s.num_layers = 0;
        assert_eq!(forward_flops(&s), 4 * 32 * 32);
    }

    #[test]
    fn sequence_length_is_superlinear() {
        let a = forward_flops(&shape(1000, 256, 32, 64, 2));
        let b = forward_flops(&shape(1000, 512, 32, 64, 2));
        assert!(b > 2 * a);
    }

    #[test]
    fn emissions_arithmetic() {
        let e = emissions(1.0, 0.32, DEFAULT_CARBON_INTENSITY).unwrap();
        assert!((e.co2_kg - 0.14).abs() < 1e-9);
        assert_eq!(emissions(0.0, 0.5, 0.4).unwrap(), Emissions { energy_kwh: 0.0, co2_kg: 0.0 });
        let e = emissions(1.0, 0.3, 0.5).unwrap();
        assert!((e.energy_kwh - 0.3).abs() < 1e-15);
        assert!((e.co2_kg - 0.15).abs() < 1e-15);
        assert!(matches!(
            emissions(-1.0, 0.3, 0.5),
            Err(CostError::NegativeInput { name: "runtime_hours", .. })
        ));
        assert!(emissions(1.0, f64::NAN, 0.5).is_err());
    }

    #[test]
    fn non_size_settings_do_not_change_size() {
        let space = ConfigurationSpace::listing3();
        let configs = sample_uniform(&space, 200, 3).unwrap();
        for pair in configs.windows(2) {
            let a = &pair[0];
            let mut b = pair[1].clone();
            // take architecture from `a`, everything else from `b`
            b = b.with_shape(&a.shape().unwrap());
            assert_eq!(model_size_mb(a).unwrap(), model_size_mb(&b).unwrap());
        }
    }

    #[test]
    fn cost_report_combines_figures() {
        let space = ConfigurationSpace::listing3();
        let c = sample_uniform(&space, 1, 5).unwrap().remove(0);
        let r = CostReport::new(&c, 2.0, 0.1, 0.5).unwrap();
        assert!((r.co2_kg - r.energy_kwh * 0.5).abs() < 1e-15);
        assert!(r.size_mb > 0.0 && r.gflops > 0.0);
    }

    fn arb_shape() -> impl Strategy<Value = ModelShape> {
        (1000u64..50265, 256u64..512, 16u64..768, 16u64..3072, 1u64..12)
            .prop_map(|(v, s, h, i, l)| shape(v, s, h, i, l))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn size_strictly_increasing_in_each_driver(base in arb_shape()) {
            let size = |s: &ModelShape| model_size(s).total_bytes();
            let flops = |s: &ModelShape| forward_flops(s);
            let bumps: [(fn(&mut ModelShape), bool); 5] = [
                (|s: &mut ModelShape| s.vocab_size += 1, false),
                (|s: &mut ModelShape| s.max_seq_len += 1, true),
                (|s: &mut ModelShape| s.hidden_size += 1, true),
                (|s: &mut ModelShape| s.intermediate_size += 1, true),
                (|s: &mut ModelShape| s.num_layers += 1, true),
            ];
            for (bump, touches_flops) in bumps {
                let mut up = base;
                bump(&mut up);
                prop_assert!(size(&up) > size(&base));
                if touches_flops {
                    prop_assert!(flops(&up) > flops(&base));
                }
            }
            let mut heads = base;
            heads.num_heads = 7;
            prop_assert_eq!(size(&heads), size(&base));
        }
    }
}
