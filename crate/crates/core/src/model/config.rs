use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sheaf::MapShape;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SheafActivation {
    Sigmoid,
    Tanh,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    Mean,
    Sum,
}

macro_rules! text_enum {
    ($ty:ident { $($variant:ident => $text:literal),* $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($ty::$variant),)*
                    _ => Err(Error::Config(format!(
                        concat!("unknown ", stringify!($ty), " `{}`"), s
                    ))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $text,)* })
            }
        }
    };
}

text_enum!(SheafActivation { Sigmoid => "sigmoid", Tanh => "tanh", None => "none" });
text_enum!(Aggregation { Mean => "mean", Sum => "sum" });

/// Architecture of a DSHN / DSHNLight network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub num_layers: usize,
    pub stalk_dim: usize,
    pub hidden: usize,
    pub q: f64,
    pub sheaf_activation: SheafActivation,
    pub map_shape: MapShape,
    pub residual: bool,
    /// Frozen map predictor and a Laplacian excluded from the backward pass.
    pub light: bool,
    /// Re-predict maps at every layer instead of reusing the first layer's.
    pub dynamic_sheaf: bool,
    /// Apply the `(I ⊗ W₁)` stalk mixing.
    pub left_projection: bool,
    /// Fraction of restriction maps zeroed during training.
    pub sheaf_dropout: f64,
    pub aggregation: Aggregation,
    /// Affine stages in the map predictor (1 or 2).
    pub phi_depth: usize,
    pub classifier_width: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            num_layers: 2,
            stalk_dim: 2,
            hidden: 8,
            q: 0.1,
            sheaf_activation: SheafActivation::Sigmoid,
            map_shape: MapShape::Diagonal,
            residual: true,
            light: true,
            dynamic_sheaf: false,
            left_projection: true,
            sheaf_dropout: 0.0,
            aggregation: Aggregation::Mean,
            phi_depth: 1,
            classifier_width: 32,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.num_layers > 5 {
            return bad("layers must be in 0..=5");
        }
        if !(1..=6).contains(&self.stalk_dim) {
            return bad("stalk dimension must be in 1..=6");
        }
        if self.hidden == 0 || self.classifier_width == 0 {
            return bad("widths must be positive");
        }
        if self.map_shape == MapShape::Trivial {
            return bad("learned maps are diagonal or full");
        }
        if !(0.0..1.0).contains(&self.sheaf_dropout) {
            return bad("dropout rate must be in [0, 1)");
        }
        if !(1..=2).contains(&self.phi_depth) {
            return bad("map predictor depth must be 1 or 2");
        }
        if !self.q.is_finite() {
            return bad("q must be finite");
        }
        Ok(())
    }

    /// Map entries produced per incidence.
    pub fn map_width(&self) -> usize {
        match self.map_shape {
            MapShape::Full => self.stalk_dim * self.stalk_dim,
            _ => self.stalk_dim,
        }
    }

    /// Number of separate map predictors.
    pub fn num_predictors(&self) -> usize {
        match (self.num_layers, self.dynamic_sheaf) {
            (0, _) => 0,
            (l, true) => l,
            (_, false) => 1,
        }
    }
}

/// Optimization settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub patience: usize,
    /// Export and check every layer's normalized Laplacian every this many
    /// epochs; 0 disables the check.
    pub spectral_check_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            weight_decay: 5e-4,
            epochs: 200,
            patience: 50,
            spectral_check_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) || !(self.weight_decay >= 0.0) {
            return Err(Error::Config("learning rate and weight decay must be non-negative".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for a in [SheafActivation::Sigmoid, SheafActivation::Tanh, SheafActivation::None] {
            assert_eq!(a.to_string().parse::<SheafActivation>().unwrap(), a);
        }
        assert!("relu".parse::<SheafActivation>().is_err());
        assert_eq!("sum".parse::<Aggregation>().unwrap(), Aggregation::Sum);
    }

    #[test]
    fn validation() {
        assert!(ModelConfig::default().validate().is_ok());
        let mut c = ModelConfig::default();
        c.stalk_dim = 7;
        assert!(c.validate().is_err());
        c = ModelConfig::default();
        c.sheaf_dropout = 1.0;
        assert!(c.validate().is_err());
    }
}
