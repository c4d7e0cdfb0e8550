//! Versioned JSON documents for networks. Floats are written with 17
//! significant digits so that a round trip reproduces every weight bit-exactly.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::dense::{DenseNetwork, Layer};
use super::sparse::SparseAdditiveNetwork;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const NETWORK_DOC_VERSION: u32 = 1;

/// `serde_json` formatter printing every `f64` as `{:.16e}`.
#[derive(Debug, Default, Clone, Copy)]
pub struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes any value with [`SeventeenDigits`] float formatting.
pub fn to_string_17<S: Serialize>(value: &S) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerDoc {
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseDoc {
    pub version: u32,
    pub activation: Activation,
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub r: usize,
    pub alpha: f64,
    pub layers: Vec<LayerDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubnetDoc {
    pub layers: Vec<LayerDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseDoc {
    pub version: u32,
    pub activation: Activation,
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub r: usize,
    pub alpha: f64,
    pub subnets: Vec<SubnetDoc>,
    pub mu: Vec<f64>,
}

fn layer_doc<T: Scalar>(l: &Layer<T>) -> LayerDoc {
    LayerDoc {
        w: l.w.chunks(l.cols.max(1)).take(l.rows).map(|r| r.iter().map(|v| v.as_f64()).collect()).collect(),
        b: l.b.iter().map(|v| v.as_f64()).collect(),
    }
}

fn layer_from_doc<T: Scalar>(doc: &LayerDoc) -> Result<Layer<T>> {
    Layer::from_rows(
        doc.w.iter().map(|r| r.iter().map(|&v| T::lit(v)).collect()).collect(),
        doc.b.iter().map(|&v| T::lit(v)).collect(),
    )
}

fn check_version(v: u32) -> Result<()> {
    if v != NETWORK_DOC_VERSION {
        return Err(Error::Version { found: v, expected: NETWORK_DOC_VERSION });
    }
    Ok(())
}

impl<T: Scalar> DenseNetwork<T> {
    pub fn to_doc(&self) -> DenseDoc {
        DenseDoc {
            version: NETWORK_DOC_VERSION,
            activation: *self.activation(),
            d: self.input_dim(),
            l: self.hidden_layers(),
            r: self.width(),
            alpha: self.alpha().as_f64(),
            layers: self.layers().iter().map(layer_doc).collect(),
        }
    }

    pub fn from_doc(doc: &DenseDoc) -> Result<Self> {
        check_version(doc.version)?;
        let layers = doc.layers.iter().map(layer_from_doc).collect::<Result<Vec<_>>>()?;
        let net = Self::from_layers(doc.d, layers, T::lit(doc.alpha), doc.activation)?;
        if net.hidden_layers() != doc.l || net.width() != doc.r {
            return Err(Error::InvalidArgument("declared L/r disagree with layers".into()));
        }
        Ok(net)
    }

    pub fn to_json(&self) -> Result<String> {
        to_string_17(&self.to_doc())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_doc(&serde_json::from_str(s)?)
    }
}

impl<T: Scalar> SparseAdditiveNetwork<T> {
    pub fn to_doc(&self) -> SparseDoc {
        let first = &self.subnets()[0];
        SparseDoc {
            version: NETWORK_DOC_VERSION,
            activation: *first.activation(),
            d: self.input_dim(),
            l: self.hidden_layers(),
            r: self.width(),
            alpha: self.alpha().as_f64(),
            subnets: self
                .subnets()
                .iter()
                .map(|s| SubnetDoc { layers: s.layers().iter().map(layer_doc).collect() })
                .collect(),
            mu: self.mu().iter().map(|v| v.as_f64()).collect(),
        }
    }

    pub fn from_doc(doc: &SparseDoc) -> Result<Self> {
        check_version(doc.version)?;
        let alpha = T::lit(doc.alpha);
        let subnets = doc
            .subnets
            .iter()
            .map(|s| {
                let layers = s.layers.iter().map(layer_from_doc).collect::<Result<Vec<_>>>()?;
                DenseNetwork::from_layers(doc.d, layers, alpha, doc.activation)
            })
            .collect::<Result<Vec<_>>>()?;
        let net = Self::new(subnets, doc.mu.iter().map(|&v| T::lit(v)).collect(), alpha)?;
        if net.hidden_layers() != doc.l || net.width() != doc.r {
            return Err(Error::InvalidArgument("declared L/r disagree with layers".into()));
        }
        Ok(net)
    }

    pub fn to_json(&self) -> Result<String> {
        to_string_17(&self.to_doc())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_doc(&serde_json::from_str(s)?)
    }
}
